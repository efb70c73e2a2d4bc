"""Shared fixtures: the q=17 toy rings used by the hand-worked examples and small DPU systems."""
import pytest

from app.kernels.modmath import Modulus, RootSet
from app.kernels.ntt import build_twiddle_table
from app.kernels.polyring import Polynomial, Reduction, RingParams
from app.pimsim.config import DpuSystemConfig


@pytest.fixture
def q17():
    return Modulus(17)


@pytest.fixture
def ring4(q17):
    return RingParams(4, q17)


@pytest.fixture
def cyclic_ring4(q17):
    return RingParams(4, q17, Reduction.CYCLIC)


@pytest.fixture
def table4(q17):
    """psi=2, omega=4 over Z_17."""
    return build_twiddle_table(RootSet.from_psi(4, 2, q17))


@pytest.fixture
def poly():
    def make(values, params):
        return Polynomial.from_ints(values, params)

    return make


@pytest.fixture
def small_system():
    def make(num_dpus=4, tasklets=4, **overrides):
        return DpuSystemConfig(num_dpus=num_dpus, tasklets_per_dpu=tasklets, **overrides)

    return make
