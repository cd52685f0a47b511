import numpy as np

from core import fft
from core.base_dataset import GridFunction
from core.tensor import (Tensor, abs_power, add, as_tensor, div, imag_part, mul, power,
                         real_part, reduce, sub)
from models.spectral import rfftn


def _data(x):
    if isinstance(x, GridFunction):
        return x.data, x.bounds
    return as_tensor(x), None


def _check_pair(pred, target):
    if tuple(pred.shape) != tuple(target.shape):
        raise ValueError('prediction {} and target {} differ in shape'.format(pred.shape, target.shape))


def _reject_zero(norms):
    zero = np.nonzero(norms == 0)[0]
    if len(zero):
        raise ValueError('target of sample {} has zero norm'.format(int(zero[0])))


def relative_lp_loss(pred, target, p=2.0):
    """
    mean over the batch of ||pred - target||_p / ||target||_p, both norms taken
    over every non-batch axis on the shared grid
    """
    pred, _ = _data(pred)
    target, _ = _data(target)
    _check_pair(pred, target)
    if p < 1:
        raise ValueError('p must be >= 1, got {}'.format(p))
    axes = tuple(range(1, pred.ndim))
    _reject_zero(np.sum(np.abs(target.data) ** p, axis=axes))
    num = power(reduce('sum', abs_power(sub(pred, target), p), axes), 1.0 / p)
    den = power(reduce('sum', abs_power(target, p), axes), 1.0 / p)
    return reduce('mean', div(num, den))


def h1_weights(sizes, bounds=None):
    """
    (1 + |2 pi k / L|^2) times the half-spectrum multiplicity over N^2, so that
    summing weights * |coeff|^2 gives the mean of u^2 + |grad u|^2 over the grid
    """
    if bounds is None:
        bounds = ((0.0, 1.0),) * len(sizes)
    freqs = [fft.fftfreq(n) for n in sizes[:-1]] + [np.arange(sizes[-1] // 2 + 1)]
    mesh = np.meshgrid(*freqs, indexing='ij')
    k2 = sum((2.0 * np.pi * m / (hi - lo)) ** 2 for m, (lo, hi) in zip(mesh, bounds))
    n_total = float(np.prod(sizes))
    shape = [1] * (len(sizes) - 1) + [sizes[-1] // 2 + 1]
    return (1.0 + k2) * fft.hermitian_weights(sizes[-1]).reshape(shape) / n_total ** 2


def h1_norm_squared(x, bounds=None):
    """ per-sample squared H1 norm [B] of a [B, C, n_1, .., n_d] tensor """
    x = as_tensor(x)
    sizes = tuple(x.shape[2:])
    coeffs = rfftn(x, len(sizes)).coeffs
    re, im = real_part(coeffs), imag_part(coeffs)
    energy = add(mul(re, re), mul(im, im))
    weights = h1_weights(sizes, bounds)
    weighted = mul(energy, Tensor(weights.reshape((1, 1) + weights.shape)))
    return reduce('sum', weighted, tuple(range(1, x.ndim)))


def h1_loss(pred, target):
    pred, bounds = _data(pred)
    target, _ = _data(target)
    _check_pair(pred, target)
    den_sq = h1_norm_squared(target, bounds)
    _reject_zero(den_sq.data)
    num = power(h1_norm_squared(sub(pred, target), bounds), 0.5)
    return reduce('mean', div(num, power(den_sq, 0.5)))


class LpLoss():
    def __init__(self, p=2.0):
        self.p = p
        self.__name__ = 'relL{}'.format(int(p) if float(p).is_integer() else p)

    def __call__(self, pred, target):
        return relative_lp_loss(pred, target, self.p)


class H1Loss():
    def __init__(self):
        self.__name__ = 'relH1'

    def __call__(self, pred, target):
        return h1_loss(pred, target)
