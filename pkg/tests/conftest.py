import pytest
from hypothesis import settings

from heatlab import HybridSystem

settings.register_profile("heatlab", deadline=None, max_examples=40)
settings.load_profile("heatlab")

from _util import bath


@pytest.fixture
def fig2():
    """Resonant qubit, hot mode bath (1.5) and cold qubit bath (0.5)."""

    def make(lam, n_max=30, epsilon=1.0, t_a=1.5, t_sigma=0.5):
        return HybridSystem(epsilon, 1.0, lam, n_max), bath(t_a, "a"), bath(t_sigma, "sigma")

    return make
