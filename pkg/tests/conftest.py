import numpy as np
import pytest

from mkdv_lab.core.Spectral import FourierState
from mkdv_lab.utils import RunConfig


def pytest_configure(config):
    config.addinivalue_line('markers', 'slow: full-scale acceptance runs')


@pytest.fixture
def rng():
    return np.random.default_rng(20240229)


@pytest.fixture
def random_state(rng):
    """Factory for random complex states decaying like e^{-|n|/2}."""

    def make(mode_cap: int, amplitude: float = 0.3, real_valued: bool = False) -> FourierState:
        modes = np.arange(-mode_cap, mode_cap + 1)
        coeffs = amplitude * np.exp(-0.5 * np.abs(modes)) * (rng.standard_normal(modes.size)
                                                             + 1j * rng.standard_normal(modes.size))
        if real_valued:
            coeffs = 0.5 * (coeffs + np.conj(coeffs[::-1]))
        return FourierState(coeffs, real_valued=real_valued)

    return make


@pytest.fixture
def make_config(tmp_path):
    def make(subcommand: str = 'experiment', **fields) -> RunConfig:
        fields.setdefault('out_dir', str(tmp_path / 'run'))
        return RunConfig(subcommand=subcommand, **fields)

    return make
