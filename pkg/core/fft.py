"""
Mixed-radix FFT kernels on numpy arrays.

Conventions: the forward transform is unnormalized, the inverse carries 1/n.
Sizes are split by their smallest prime factor at each level; factors of two
use a butterfly, odd primes a small dense DFT matrix. Nothing here is recorded
on a tape; ``models.spectral`` wraps these kernels as differentiable ops.
"""
from functools import lru_cache

import numpy as np


def smallest_factor(n):
    if n % 2 == 0:
        return 2
    p = 3
    while p * p <= n:
        if n % p == 0:
            return p
        p += 2
    return n


@lru_cache(maxsize=None)
def dft_matrix(n, sign):
    k = np.arange(n)
    m = np.exp(sign * 2j * np.pi * (np.outer(k, k) % n) / n)
    m.setflags(write=False)
    return m


@lru_cache(maxsize=None)
def _twiddles(n, p, sign):
    m = n // p
    r = np.arange(p)[:, None]
    k = np.arange(m)[None, :]
    w = np.exp(sign * 2j * np.pi * ((r * k) % n) / n)
    w.setflags(write=False)
    return w


def _transform_last(x, sign):
    """ unnormalized DFT along the last axis, decimation in time """
    n = x.shape[-1]
    if n == 1:
        return x
    p = smallest_factor(n)
    if p == n:
        return np.matmul(x, dft_matrix(n, sign))
    m = n // p
    sub = np.swapaxes(x.reshape(x.shape[:-1] + (m, p)), -1, -2)
    sub = _transform_last(sub, sign) * _twiddles(n, p, sign)
    if p == 2:
        out = np.stack((sub[..., 0, :] + sub[..., 1, :], sub[..., 0, :] - sub[..., 1, :]), axis=-2)
    else:
        out = np.matmul(dft_matrix(p, sign), sub)
    return out.reshape(x.shape)


def _along(x, axis, sign):
    x = np.moveaxis(np.asarray(x, dtype=np.complex128), axis, -1)
    return np.moveaxis(_transform_last(x, sign), -1, axis)


def fft(x, axis=-1):
    return _along(x, axis, -1)


def ifft(x, axis=-1):
    x = np.asarray(x)
    return _along(x, axis, +1) / x.shape[axis]


def fftn(x, axes):
    for axis in axes:
        x = fft(x, axis)
    return x


def ifftn(x, axes):
    for axis in axes:
        x = ifft(x, axis)
    return x


def rfft(x, axis=-1):
    x = np.asarray(x)
    if np.iscomplexobj(x):
        raise TypeError('rfft needs real input')
    n = x.shape[axis]
    out = fft(x, axis)
    index = [slice(None)] * out.ndim
    index[axis] = slice(0, n // 2 + 1)
    return out[tuple(index)]


def hermitian_extend(coeffs, n, axis=-1):
    """ full spectrum of length n from its non-redundant half """
    coeffs = np.moveaxis(np.asarray(coeffs, dtype=np.complex128), axis, -1)
    h = n // 2 + 1
    if coeffs.shape[-1] != h:
        raise ValueError('half spectrum of length {} does not match n={}'.format(coeffs.shape[-1], n))
    full = np.empty(coeffs.shape[:-1] + (n,), dtype=np.complex128)
    full[..., :h] = coeffs
    full[..., 0] = coeffs[..., 0].real
    if n % 2 == 0:
        full[..., n // 2] = coeffs[..., n // 2].real
    full[..., h:] = np.conj(coeffs[..., 1:n - h + 1][..., ::-1])
    return np.moveaxis(full, -1, axis)


def irfft(coeffs, n, axis=-1):
    return ifft(hermitian_extend(coeffs, n, axis), axis).real


def rfftn(x, ndim):
    """ forward transform over the trailing ``ndim`` axes, half spectrum on the last """
    x = np.asarray(x)
    out = rfft(x, -1)
    return fftn(out, range(x.ndim - ndim, x.ndim - 1))


def irfftn(coeffs, sizes):
    coeffs = np.asarray(coeffs)
    ndim = len(sizes)
    for i, n in enumerate(sizes[:-1]):
        if coeffs.shape[coeffs.ndim - ndim + i] != n:
            raise ValueError('spectrum axis {} has {} entries, expected {}'.format(i, coeffs.shape[coeffs.ndim - ndim + i], n))
    out = ifftn(coeffs, range(coeffs.ndim - ndim, coeffs.ndim - 1))
    return irfft(out, sizes[-1], -1)


def fftfreq(n):
    """ integer frequencies in corner order: 0, 1, .., then negatives """
    k = np.arange(n)
    return np.where(k < (n + 1) // 2, k, k - n)


def hermitian_weights(n):
    """ multiplicity of each half-spectrum entry inside the full spectrum """
    w = np.full(n // 2 + 1, 2.0)
    w[0] = 1.0
    if n % 2 == 0:
        w[-1] = 1.0
    return w
