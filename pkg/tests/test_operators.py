import numpy as np
import pytest

from taxisfront.operators import (
    Grid,
    advect_upwind,
    boundary_gradient,
    gradient,
    laplacian,
    to_physical,
)


def test_grid_nodes():
    g = Grid(4)
    assert g.dy == 0.25
    np.testing.assert_array_equal(g.y, [0.0, 0.25, 0.5, 0.75, 1.0])


def test_grid_rejects_degenerate():
    with pytest.raises(ValueError):
        Grid(1)


class TestLaplacian:
    def test_constant_field(self):
        g = Grid(32)
        out = laplacian(np.full(33, 3.7), g)
        np.testing.assert_array_equal(out, 0.0)

    def test_quadratic_exact(self):
        g = Grid(16)
        out = laplacian(g.y**2, g)
        np.testing.assert_allclose(out[1:-1], 2.0, rtol=1e-11)

    def test_cosine_refinement_ratio(self):
        # second-order: error drops ~4x when N doubles
        errs = []
        for n in (32, 64):
            g = Grid(n)
            f = np.cos(0.5 * np.pi * g.y)
            exact = -((0.5 * np.pi) ** 2) * f
            errs.append(np.abs(laplacian(f, g)[:-1] - exact[:-1]).max())
        assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.1)

    def test_dirichlet_node_untouched(self):
        g = Grid(16)
        assert laplacian(np.sin(g.y), g)[-1] == 0.0

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="nodes"):
            laplacian(np.zeros(10), Grid(16))


class TestAdvectUpwind:
    def test_zero_speed(self):
        g = Grid(16)
        out = advect_upwind(np.sin(g.y), np.zeros(17), g)
        np.testing.assert_array_equal(out, 0.0)

    def test_linear_field_unit_speed(self):
        g = Grid(16)
        out = advect_upwind(g.y.copy(), np.ones(17), g)
        np.testing.assert_allclose(out, 1.0, rtol=1e-12)

    def test_sign_flip_mirrors_stencil(self):
        # exact on linear fields for either sign
        g = Grid(16)
        f = 2.0 - 1.5 * g.y
        plus = advect_upwind(f, np.ones(17), g)
        minus = advect_upwind(f, -np.ones(17), g)
        np.testing.assert_allclose(plus, -1.5, rtol=1e-12)
        np.testing.assert_allclose(minus, 1.5, rtol=1e-12)

    def test_upwind_orientation_on_curved_field(self):
        # forward difference of y^2 is 2y+dy, backward is 2y-dy
        g = Grid(8)
        f = g.y**2
        interior = slice(1, -1)
        fwd = advect_upwind(f, np.ones(9), g)
        np.testing.assert_allclose(fwd[interior], (2 * g.y + g.dy)[interior], rtol=1e-12)
        bwd = advect_upwind(f, -np.ones(9), g)
        np.testing.assert_allclose(bwd[interior], -(2 * g.y - g.dy)[interior], rtol=1e-12)

    def test_linear_in_field(self):
        g = Grid(32)
        rng = np.random.default_rng(3)
        f1, f2 = rng.normal(size=33), rng.normal(size=33)
        s = rng.normal(size=33)
        lhs = advect_upwind(2.0 * f1 - 0.5 * f2, s, g)
        rhs = 2.0 * advect_upwind(f1, s, g) - 0.5 * advect_upwind(f2, s, g)
        np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-14)


class TestBoundaryGradient:
    def test_linear_exact(self):
        g = Grid(16)
        assert boundary_gradient(1.0 - g.y, g) == pytest.approx(-1.0, rel=1e-13)

    def test_cosine_second_order(self):
        errs = []
        for n in (32, 64):
            g = Grid(n)
            z = np.cos(0.5 * np.pi * g.y)
            errs.append(abs(boundary_gradient(z, g) + 0.5 * np.pi))
        assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.15)

    def test_zero_field(self):
        assert boundary_gradient(np.zeros(17), Grid(16)) == 0.0

    def test_resolved_nonnegative_fields_give_nonpositive_slope(self):
        # sign violations stay at discretization-noise level for smooth data
        g = Grid(64)
        for z in ((1.0 - g.y) * (1.0 + 0.3 * np.sin(5.0 * g.y)),
                  (1.0 - g.y) ** 2 * (1.0 + 0.5 * np.cos(3.0 * g.y)),
                  np.cos(0.5 * np.pi * g.y) * (2.0 + np.sin(g.y))):
            assert z.min() >= 0.0 and z[-1] == pytest.approx(0.0, abs=1e-15)
            assert boundary_gradient(z, g) <= 5.0 * g.dy * z.max()


class TestToPhysical:
    def test_unit_front(self):
        g = Grid(8)
        x, u, v = to_physical(np.ones(9), np.zeros(9), 1.0, g)
        np.testing.assert_array_equal(x, g.y)

    def test_front_two_n_four(self):
        g = Grid(4)
        x, _, _ = to_physical(np.zeros(5), np.zeros(5), 2.0, g)
        np.testing.assert_array_equal(x, [0.0, 0.5, 1.0, 1.5, 2.0])

    def test_round_trip_bit_exact(self):
        # power-of-two front makes the rescaling exact in floating point
        g = Grid(16)
        x, _, _ = to_physical(np.zeros(17), np.zeros(17), 4.0, g)
        np.testing.assert_array_equal(x / 4.0, g.y)

    def test_rejects_nonpositive_front(self):
        with pytest.raises(ValueError):
            to_physical(np.zeros(17), np.zeros(17), 0.0, Grid(16))


def test_gradient_matches_analytic_with_neumann_origin():
    g = Grid(64)
    f = np.cos(0.5 * np.pi * g.y)
    out = gradient(f, g)
    assert out[0] == 0.0
    exact = -0.5 * np.pi * np.sin(0.5 * np.pi * g.y)
    np.testing.assert_allclose(out[1:], exact[1:], atol=2e-3)
    assert out[-1] == pytest.approx(boundary_gradient(f, g))
