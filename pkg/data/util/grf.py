"""
Gaussian random fields on periodic grids, sampled in Fourier space.

Coefficient k is sigma * (4 pi^2 |k|^2 + tau^2)^(-alpha/2) times a complex
normal; the field is the real part of the unnormalized inverse transform, so
the mean-zero (k=0 dropped) field has pointwise variance
sum_{k != 0} sigma^2 (4 pi^2 |k|^2 + tau^2)^(-alpha).
"""
from collections import namedtuple

import numpy as np

from core import fft

GrfSpec = namedtuple('GrfSpec', 'tau alpha sigma')

DARCY_GRF = GrfSpec(tau=3.0, alpha=2.0, sigma=1.0)
BURGERS_GRF = GrfSpec(tau=5.0, alpha=2.0, sigma=25.0)


def check_spec(spec, d):
    if not spec.tau > 0:
        raise ValueError('tau must be positive, got {}'.format(spec.tau))
    if not spec.alpha > d / 2.0:
        raise ValueError('alpha must exceed d/2 = {}, got {}'.format(d / 2.0, spec.alpha))
    if spec.sigma < 0:
        raise ValueError('sigma must be non-negative, got {}'.format(spec.sigma))


def spectral_scale(sizes, spec):
    """ per-wavevector standard deviation in the corner layout, zero at k = 0 """
    freqs = np.meshgrid(*[fft.fftfreq(n) for n in sizes], indexing='ij')
    k2 = sum(k.astype(np.float64) ** 2 for k in freqs)
    scale = spec.sigma * (4.0 * np.pi ** 2 * k2 + spec.tau ** 2) ** (-spec.alpha / 2.0)
    scale[(0,) * len(sizes)] = 0.0
    return scale


def _sample(sizes, spec, rng):
    check_spec(spec, len(sizes))
    scale = spectral_scale(sizes, spec)
    noise = rng.normal((2,) + tuple(sizes))
    coeffs = scale * (noise[0] + 1j * noise[1])
    axes = range(len(sizes))
    return (fft.ifftn(coeffs, axes) * float(np.prod(sizes))).real


def sample_grf_2d(n, spec, rng):
    if n < 4:
        raise ValueError('grid needs n >= 4, got {}'.format(n))
    return _sample((n, n), spec, rng)


def sample_grf_1d(n, spec, rng):
    if n < 4:
        raise ValueError('grid needs n >= 4, got {}'.format(n))
    return _sample((n,), spec, rng)


def grf_pointwise_variance(sizes, spec):
    return float(np.sum(spectral_scale(sizes, spec) ** 2))
