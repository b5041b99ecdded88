import numpy as np
import pytest


@pytest.fixture
def rng():
    # counter-based generator so fixtures are reproducible across platforms
    return np.random.Generator(np.random.Philox(key=20240811))


def random_series(rng, d, N, hermitian=False, scale=1.0):
    c = rng.standard_normal((2 * N + 1, d, d)) + 1j * rng.standard_normal((2 * N + 1, d, d))
    c *= scale / np.sqrt(c.size)
    if hermitian:
        c = 0.5 * (c + np.conj(np.transpose(c[::-1], (0, 2, 1))))
    from hwmlab.hardy import FourierSeries

    return FourierSeries(d, N, c)


def random_hardy(rng, d, N, zero_top=False):
    from hwmlab.hardy import HardyElement

    c = rng.standard_normal((N + 1, d, d)) + 1j * rng.standard_normal((N + 1, d, d))
    c /= np.sqrt(c.size)
    if zero_top:
        c[-1] = 0.0
    return HardyElement(d, N, c)
