import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from rtk import examples as ex
from rtk.tensor import PairedTensor, Shape

settings.register_profile(
    "rtk", max_examples=50, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("rtk")


def rand_paired(rng, rows, cols=None, real=False):
    cols = rows if cols is None else cols
    shape = Shape(rows, cols)
    m = rng.standard_normal((shape.n_rows, shape.n_cols))
    if not real:
        m = m + 1j * rng.standard_normal(m.shape)
    return PairedTensor.fold(m, shape)


def dims_strategy(order=(1, 2, 3), max_dim=3):
    return st.integers(min(order), max(order)).flatmap(
        lambda n: st.tuples(*[st.integers(1, max_dim)] * n)
    )


seeds = st.integers(0, 2**32 - 1)


@pytest.fixture(scope="session")
def example1():
    """Example 1 problem with the tight stabilizing solution."""
    from rtk.equations import newton_arte

    problem = ex.example1_problem()
    rep = newton_arte(problem, ex.example1_e0(), inner="direct", eps=1e-12)
    return problem, rep.E
