import math
from dataclasses import replace

import numpy as np
import pytest
from scipy.optimize import brentq

from taxisfront import ModelParams, cosine_initial_data
from taxisfront.analysis import (
    BisectError,
    ClassifyTolerances,
    NotApplicable,
    VerdictKind,
    _bisect,
    band_check,
    bisect_mu_star,
    certificates,
    classify,
    compute_bounds,
    estimate_speed,
    spreading_certificate,
    vanishing_barrier,
    vanishing_certificate,
)
from taxisfront.model import InitialData
from taxisfront.solver import Snapshot, Trajectory


def params(**kw):
    base = dict(a=0.3, b=1.0, c=1.0, m=1.0, q=1.0, r=1.0, d=1.0,
                mu=2.0, h0=1.0, chi0=0.5, u_m=2.0)
    base.update(kw)
    return ModelParams(**base)


def synthetic_trajectory(t, h, max_u=None, max_v=None, hprime=None, snapshots=()):
    t = np.asarray(t, float)
    h = np.asarray(h, float)
    zeros = np.zeros_like(t)
    return Trajectory(
        t=t, h=h,
        hprime=zeros if hprime is None else np.asarray(hprime, float),
        max_u=zeros if max_u is None else np.asarray(max_u, float),
        max_v=zeros if max_v is None else np.asarray(max_v, float),
        mass_u=zeros, mass_v=zeros, zy1=zeros, max_vxx=zeros,
        snapshots=list(snapshots))


class TestBounds:
    def test_m2_max_of_growth_and_initial(self):
        p = params(q=1.0)
        data = cosine_initial_data(0.5, 0.5, p.h0)  # |v0| = 0.5
        assert compute_bounds(p, data).M2 == 1.0

    def test_k_and_m3_formula(self):
        # h0=1, q=1, d=1, |v0'| = 0.5, M2=1 -> K = max(1, sqrt(0.5), 0.5) = 1
        p = params(mu=1.0)
        data = InitialData(u0=cosine_initial_data(0.5, 0.5, 1.0).u0,
                           v0=lambda x: 0.5 * (1.0 - np.asarray(x, float)) ** 2,
                           v0_deriv=lambda x: -(1.0 - np.asarray(x, float)))
        b = compute_bounds(p, data)
        assert b.K == 1.0
        assert b.M3 == 2.0

    def test_m1_formula_branches(self):
        # (b-am)M2/a - c = (1-0.5)/0.5 - 1 = 0 -> M1 = max(2, 1, 0) = 2
        p = params(u_m=2.0, b=1.0, a=0.5, m=1.0, c=1.0, q=1.0)
        data = cosine_initial_data(1.0, 1.0, p.h0)
        assert compute_bounds(p, data).M1 == 2.0

    def test_invariants(self):
        for d in (0.5, 1.0, 4.0):
            p = params(d=d)
            data = cosine_initial_data(0.5, 0.5, p.h0)
            b = compute_bounds(p, data)
            assert b.M2 >= p.q and b.M1 >= p.u_m and b.K >= 1.0 / p.h0


class TestBarrier:
    def test_equal_coefficients(self):
        assert vanishing_barrier(params(d=1, q=1)) == pytest.approx(math.pi / 2, rel=1e-15)

    def test_four_to_one(self):
        assert vanishing_barrier(params(d=4, q=1)) == pytest.approx(math.pi, rel=1e-15)

    def test_scaling(self):
        p = params(d=1.3, q=0.7)
        assert vanishing_barrier(params(d=4 * 1.3, q=0.7)) == pytest.approx(
            2 * vanishing_barrier(p), rel=1e-14)


class TestVanishingCertificate:
    def test_reference_values_against_root_solve(self):
        # independent oracle: solve A/(1+delta)^2 - q = (A - q)/2 numerically
        p = params(d=4.0, q=1.0, h0=1.0)
        data = cosine_initial_data(0.5, 0.5, p.h0)
        cert = vanishing_certificate(p, data)
        A = p.d * math.pi**2 / (4 * p.h0**2)
        delta_oracle = brentq(lambda s: A / (1 + s) ** 2 - p.q - 0.5 * (A - p.q),
                              1e-9, 10.0, xtol=1e-14)
        assert cert.delta == pytest.approx(delta_oracle, abs=1e-10)
        assert cert.delta == pytest.approx(0.34759, abs=2e-4)
        assert cert.alpha == pytest.approx(0.5 * (A - p.q), rel=1e-14)
        assert cert.alpha == pytest.approx(4.43480, abs=2e-4)

    def test_boundary_of_validity(self):
        p = params(d=1.0, q=1.0)
        barrier = vanishing_barrier(p)
        na = vanishing_certificate(replace(p, h0=barrier), cosine_initial_data(0.5, 0.5, barrier))
        assert isinstance(na, NotApplicable)

    def test_mcap_for_cosine_is_amplitude(self):
        # ratio cos(pi x/2h0)/cos(pi x/(2 h0 (1+delta/2))) peaks at x = 0
        p = params()
        data = cosine_initial_data(0.5, 0.37, p.h0)
        cert = vanishing_certificate(p, data)
        assert cert.Mcap == pytest.approx(0.37, rel=1e-12)

    def test_mcap_dense_sampling_oracle_interior_peak(self):
        p = params()
        v0 = lambda x: 0.4 * np.cos(0.5 * np.pi * np.asarray(x, float) / p.h0) \
            * (1.0 + 0.8 * np.asarray(x, float) / p.h0)
        data = InitialData(u0=v0, v0=v0)
        cert = vanishing_certificate(p, data)
        stretch = 0.5 * math.pi / (p.h0 * (1 + 0.5 * cert.delta))
        x = np.linspace(0.0, p.h0, 100001)
        dense = (v0(x) / np.cos(stretch * x)).max()
        assert cert.Mcap >= dense - 1e-12
        assert cert.Mcap == pytest.approx(dense, rel=1e-7)

    def test_mu0_positive_below_barrier(self):
        p = params()
        cert = vanishing_certificate(p, cosine_initial_data(0.5, 0.5, p.h0))
        assert cert.mu0 > 0


class TestSpreadingCertificate:
    def test_reference_closed_form(self):
        # d=q=c=m=b=r=1, a=0.3, u_m=2, V=0.5: mu_upper = pi*(pi/2 - 1)
        p = params()
        data = cosine_initial_data(0.5, 0.5, p.h0)
        mu_up = spreading_certificate(p, data, compute_bounds(p, data))
        assert mu_up == pytest.approx(math.pi * (math.pi / 2 - 1.0), rel=1e-6)

    def test_small_predation_limit_positive(self):
        p = params(r=1e-9)
        data = cosine_initial_data(0.5, 0.5, p.h0)
        mu_up = spreading_certificate(p, data, compute_bounds(p, data))
        assert np.isfinite(mu_up) and mu_up > 0

    def test_not_applicable_when_band_floor_negative(self):
        p = params(r=10.0)  # r*M1/(c+M1) = 20/3 > q
        data = cosine_initial_data(0.5, 0.5, p.h0)
        na = spreading_certificate(p, data, compute_bounds(p, data))
        assert isinstance(na, NotApplicable)
        assert "q <=" in na.reason

    def test_bracket_ordering_where_both_defined(self):
        covered = 0
        for d in (1.0, 4.0, 16.0):
            for q in (0.5, 1.0, 2.0):
                p = params(d=d, q=q, h0=0.7 * vanishing_barrier(params(d=d, q=q)))
                data = cosine_initial_data(0.5, 0.5, p.h0)
                certs = certificates(p, data)
                assert certs.mu0 is not None  # h0 < barrier by construction
                if certs.mu_upper is None:
                    assert certs.band_floor <= 0.0  # only legitimate reason here
                    continue
                assert certs.mu0 <= certs.mu_upper
                covered += 1
        assert covered >= 4


class TestClassify:
    def make_certs(self):
        p = params()
        return certificates(p, cosine_initial_data(0.5, 0.5, p.h0))

    def test_barrier_crossing_is_spreading(self):
        certs = self.make_certs()
        t = np.linspace(0.0, 100.0, 201)
        traj = synthetic_trajectory(t, 1.0 + (2 * certs.barrier - 1.0) * t / 100.0,
                                    max_v=np.full_like(t, 0.5))
        v = classify(traj, certs)
        assert v.kind is VerdictKind.SPREADING
        assert v.crossing_time is not None and v.speed is not None

    def test_frozen_front_small_fields_is_vanishing(self):
        certs = self.make_certs()
        t = np.linspace(0.0, 100.0, 201)
        h = np.full_like(t, 1.0 * (1 + 0.19))
        traj = synthetic_trajectory(t, h, max_u=np.full_like(t, 1e-7),
                                    max_v=np.full_like(t, 1e-7),
                                    hprime=np.full_like(t, 1e-9))
        v = classify(traj, certs)
        assert v.kind is VerdictKind.VANISHING
        assert v.h_infinity == pytest.approx(h[-1])

    def test_neither_signature_is_undetermined(self):
        certs = self.make_certs()
        t = np.linspace(0.0, 10.0, 101)
        traj = synthetic_trajectory(t, np.full_like(t, 1.2),
                                    max_v=np.full_like(t, 0.5))
        assert classify(traj, certs).kind is VerdictKind.UNDETERMINED

    def test_monotone_consistency_under_extension(self):
        certs = self.make_certs()
        t = np.linspace(0.0, 100.0, 201)
        h = np.minimum(1.0 + 0.05 * t, 2.5)  # crosses barrier ~1.571 at t ~ 11.4
        base = classify(synthetic_trajectory(t, h, max_v=np.full_like(t, 0.4)), certs)
        t2 = np.linspace(0.0, 200.0, 401)
        h2 = np.minimum(1.0 + 0.05 * t2, 2.5)
        ext = classify(synthetic_trajectory(t2, h2, max_v=np.full_like(t2, 0.4)), certs)
        assert base.kind is VerdictKind.SPREADING
        assert ext.kind is VerdictKind.SPREADING

    def test_too_short_raises(self):
        certs = self.make_certs()
        with pytest.raises(ValueError, match="too short"):
            classify(synthetic_trajectory([0.0], [1.0]), certs)


class TestEstimateSpeed:
    def test_exact_linear(self):
        t = np.linspace(0.0, 10.0, 101)
        est = estimate_speed(synthetic_trajectory(t, 1.0 + 3.0 * t))
        assert est.k == pytest.approx(3.0, abs=1e-12)
        assert est.residual == pytest.approx(0.0, abs=1e-12)

    def test_noisy_affine(self):
        rng = np.random.default_rng(42)
        t = np.linspace(0.0, 10.0, 401)
        eps = 1e-3
        noise = np.cumsum(np.abs(rng.normal(size=t.size))) * 0.0  # keep h monotone
        h = 1.0 + 3.0 * t + eps * np.sin(7.0 * t)
        h = np.maximum.accumulate(h)
        est = estimate_speed(synthetic_trajectory(t, h))
        assert abs(est.k - 3.0) <= eps
        assert est.residual <= 2 * eps

    def test_verdict_guard(self):
        t = np.linspace(0.0, 10.0, 101)
        traj = synthetic_trajectory(t, 1.0 + 3.0 * t)
        p = params()
        certs = certificates(p, cosine_initial_data(0.5, 0.5, p.h0))
        vanish = classify(synthetic_trajectory(
            np.linspace(0, 100, 201), np.full(201, 1.1),
            max_u=np.full(201, 1e-9), max_v=np.full(201, 1e-9),
            hprime=np.full(201, 1e-9)), certs)
        with pytest.raises(ValueError, match="non-spreading"):
            estimate_speed(traj, verdict=vanish)


class TestBandCheck:
    def make(self):
        p = params()
        return p, certificates(p, cosine_initial_data(0.5, 0.5, p.h0))

    def snapshots_with_v(self, value, times, h=10.0, n=51):
        x = np.linspace(0.0, h, n)
        return [Snapshot(t=t, x=x, u=np.zeros(n), v=np.full(n, value)) for t in times]

    def test_exact_carrying_capacity_passes_with_zero_margin(self):
        p, certs = self.make()
        t = np.linspace(0.0, 100.0, 201)
        traj = synthetic_trajectory(t, np.full_like(t, 10.0),
                                    snapshots=self.snapshots_with_v(p.q, [85.0, 95.0]))
        rep = band_check(traj, p, certs, x_obs=1.0)
        assert rep.passed
        assert rep.v_min == rep.v_max == p.q

    def test_window_exit_raises(self):
        p, certs = self.make()
        t = np.linspace(0.0, 100.0, 201)
        traj = synthetic_trajectory(t, np.full_like(t, 10.0),
                                    snapshots=self.snapshots_with_v(p.q, [90.0], h=0.5))
        with pytest.raises(ValueError, match="exits the domain"):
            band_check(traj, p, certs, x_obs=1.0)

    def test_low_prey_fails(self):
        p, certs = self.make()
        t = np.linspace(0.0, 100.0, 201)
        traj = synthetic_trajectory(t, np.full_like(t, 10.0),
                                    snapshots=self.snapshots_with_v(0.05, [90.0]))
        assert not band_check(traj, p, certs, x_obs=1.0).passed


class TestBisect:
    def test_interval_arithmetic(self):
        lo, hi = _bisect(lambda mu: mu > 0.7, 0.0, 1.0, 10)
        assert hi - lo == pytest.approx(1.0 / 1024.0, rel=1e-12)
        assert lo <= 0.7 <= hi

    def test_probe_sequence_and_bracket(self, monkeypatch):
        import taxisfront.analysis as an
        import taxisfront.solver as sv

        calls = []

        def fake_run(p, data, grid, controls, allow_zero_u0=False):
            calls.append(p.mu)
            t = np.linspace(0.0, 100.0, 101)
            if p.mu > 0.9:  # pretend threshold
                return synthetic_trajectory(t, 1.0 + 0.5 * t)
            return synthetic_trajectory(t, np.full_like(t, 1.01),
                                        max_u=np.full_like(t, 1e-9),
                                        max_v=np.full_like(t, 1e-9),
                                        hprime=np.full_like(t, 1e-9))

        monkeypatch.setattr(sv, "run", fake_run)
        p = params()
        data = cosine_initial_data(0.5, 0.5, p.h0)
        res = bisect_mu_star(p, data, None, None, bracket=(0.5, 1.5), iters=6)
        assert res.mu_hi - res.mu_lo == pytest.approx(1.0 / 64.0, rel=1e-12)
        assert res.mu_lo <= 0.9 <= res.mu_hi
        assert res.probes[0][1] is VerdictKind.VANISHING
        assert res.probes[1][1] is VerdictKind.SPREADING
        assert len(res.probes) == 8  # 2 bracket ends + 6 probes

    def test_same_verdict_ends_rejected(self, monkeypatch):
        import taxisfront.solver as sv

        def fake_run(p, data, grid, controls, allow_zero_u0=False):
            t = np.linspace(0.0, 100.0, 101)
            return synthetic_trajectory(t, 1.0 + 0.5 * t)  # always spreading

        monkeypatch.setattr(sv, "run", fake_run)
        p = params()
        data = cosine_initial_data(0.5, 0.5, p.h0)
        with pytest.raises(BisectError, match="agree"):
            bisect_mu_star(p, data, None, None, bracket=(0.5, 1.5), iters=4)

    def test_undecided_probe_reported(self, monkeypatch):
        import taxisfront.solver as sv

        def fake_run(p, data, grid, controls, allow_zero_u0=False):
            t = np.linspace(0.0, 100.0, 101)
            if p.mu >= 1.5:
                return synthetic_trajectory(t, 1.0 + 0.5 * t)
            if p.mu <= 0.5:
                return synthetic_trajectory(t, np.full_like(t, 1.01),
                                            max_u=np.full_like(t, 1e-9),
                                            max_v=np.full_like(t, 1e-9),
                                            hprime=np.full_like(t, 1e-9))
            return synthetic_trajectory(t, np.full_like(t, 1.2),
                                        max_v=np.full_like(t, 0.5))

        monkeypatch.setattr(sv, "run", fake_run)
        p = params()
        data = cosine_initial_data(0.5, 0.5, p.h0)
        with pytest.raises(BisectError, match="undecided probe") as err:
            bisect_mu_star(p, data, None, None, bracket=(0.5, 1.5), iters=4)
        assert err.value.mu == pytest.approx(1.0)
