import pytest

from taxisfront import ModelParams, cosine_initial_data


@pytest.fixture(scope="session")
def ref_params():
    # reference configuration used across the suite
    return ModelParams(a=0.3, b=1.0, c=1.0, m=1.0, q=1.0, r=1.0, d=1.0,
                       mu=2.0, h0=1.0, chi0=0.5, u_m=2.0)


@pytest.fixture(scope="session")
def ref_data():
    return cosine_initial_data(0.5, 0.5, 1.0)
