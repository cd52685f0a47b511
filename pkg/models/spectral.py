"""
Differentiable real FFTs, mode truncation and the spectral convolution behind
FNO / TFNO.

Retained modes use the corner layout: indices [0, m) and [n-m, n) on full axes,
[0, m) on the last (half-spectrum) axis. Weights are stored as
[2m_1, .., 2m_{d-1}, m_d, C_in, C_out], either dense or as a Tucker core with
one factor matrix per axis.
"""
import math
from collections import namedtuple

import numpy as np

from core import fft
from core.base_network import Module
from core.tensor import (Function, Tensor, as_tensor, concat, contract,
                         mul, pad_axis, permute, slice_axis)
from data.util.rng import Rng

SpectrumTensor = namedtuple('SpectrumTensor', 'coeffs sizes')


class ModeSpec():
    def __init__(self, modes):
        modes = tuple(int(m) for m in np.atleast_1d(modes))
        if not modes or any(m < 1 for m in modes):
            raise ValueError('every retained mode count must be >= 1, got {}'.format(modes))
        self.modes = modes

    @property
    def ndim(self):
        return len(self.modes)

    def check(self, sizes):
        if len(sizes) != self.ndim:
            raise ValueError('{} retained mode counts for a {}-D grid'.format(self.ndim, len(sizes)))
        for dim, (n, m) in enumerate(zip(sizes, self.modes)):
            if n < 2 * m:
                raise ValueError('spatial dimension {} has {} points but {} retained modes need at least {}'.format(dim, n, m, 2 * m))

    def retained_shape(self):
        return tuple(2 * m for m in self.modes[:-1]) + (self.modes[-1],)

    def mask(self, active):
        """ 1 on retained entries whose frequency is inside ``active``, else 0 """
        active = ModeSpec(active)
        if active.ndim != self.ndim or any(a > m for a, m in zip(active.modes, self.modes)):
            raise ValueError('active modes {} exceed retained modes {}'.format(active.modes, self.modes))
        axes = []
        for m, a in zip(self.modes[:-1], active.modes[:-1]):
            j = np.arange(2 * m)
            axes.append((j < a) | (j >= 2 * m - a))
        axes.append(np.arange(self.modes[-1]) < active.modes[-1])
        out = np.ones(self.retained_shape())
        for i, keep in enumerate(axes):
            out = out * keep.reshape([-1 if j == i else 1 for j in range(self.ndim)])
        return out

    def __eq__(self, other):
        return isinstance(other, ModeSpec) and other.modes == self.modes

    def __repr__(self):
        return 'ModeSpec{}'.format(self.modes)


class RFFTN(Function):
    @staticmethod
    def forward(ctx, x):
        if np.iscomplexobj(x):
            raise TypeError('rfftn needs real input')
        ctx.sizes = x.shape[x.ndim - ctx.ndim:]
        return fft.rfftn(x, ctx.ndim)

    @staticmethod
    def backward(ctx, grad):
        ''' adjoint: zero-fill the missing half, then n * inverse over every axis '''
        sizes = ctx.sizes
        full = pad_last(grad, sizes[-1])
        axes = range(grad.ndim - ctx.ndim, grad.ndim)
        return (fft.ifftn(full, axes).real * float(np.prod(sizes)),)


class IRFFTN(Function):
    @staticmethod
    def forward(ctx, coeffs):
        return fft.irfftn(coeffs, ctx.sizes)

    @staticmethod
    def backward(ctx, grad):
        ''' half-spectrum entries stand for two conjugate coefficients except DC and Nyquist '''
        sizes = ctx.sizes
        weights = fft.hermitian_weights(sizes[-1])
        return (fft.rfftn(grad, len(sizes)) * weights / float(np.prod(sizes)),)


def pad_last(half, n):
    out = np.zeros(half.shape[:-1] + (n,), dtype=np.complex128)
    out[..., :half.shape[-1]] = half
    return out


def rfftn(x, ndim):
    x = as_tensor(x)
    if x.is_complex:
        raise TypeError('rfftn needs real input')
    if not 1 <= ndim <= x.ndim:
        raise ValueError('cannot transform {} trailing axes of a rank {} tensor'.format(ndim, x.ndim))
    sizes = tuple(x.shape[x.ndim - ndim:])
    return SpectrumTensor(RFFTN.apply(x, ndim=ndim), sizes)


def irfftn(spectrum, sizes=None):
    coeffs, stored = spectrum if isinstance(spectrum, SpectrumTensor) else (spectrum, None)
    sizes = tuple(sizes if sizes is not None else stored)
    coeffs = as_tensor(coeffs)
    d = len(sizes)
    expected = tuple(sizes[:-1]) + (sizes[-1] // 2 + 1,)
    if tuple(coeffs.shape[coeffs.ndim - d:]) != expected:
        raise ValueError('spectrum shape {} does not match sizes {}'.format(coeffs.shape, sizes))
    return IRFFTN.apply(coeffs, sizes=sizes)


def truncate_modes(spectrum, spec):
    coeffs, sizes = spectrum
    spec.check(sizes)
    d = spec.ndim
    lead = coeffs.ndim - d
    out = coeffs
    for i in range(d - 1):
        n, m = sizes[i], spec.modes[i]
        axis = lead + i
        out = concat([slice_axis(out, axis, 0, m), slice_axis(out, axis, n - m, n)], axis)
    return slice_axis(out, lead + d - 1, 0, spec.modes[-1])


def expand_modes(truncated, sizes, spec):
    """ place corner modes back into a zero spectrum for grid ``sizes`` """
    spec.check(sizes)
    d = spec.ndim
    lead = truncated.ndim - d
    out = truncated
    for i in range(d - 1):
        n, m = sizes[i], spec.modes[i]
        axis = lead + i
        low = pad_axis(slice_axis(out, axis, 0, m), axis, 0, n - 2 * m)
        out = concat([low, slice_axis(out, axis, m, 2 * m)], axis)
    half = sizes[-1] // 2 + 1
    return pad_axis(out, lead + d - 1, 0, half - spec.modes[-1])


def spectral_resample(x, sizes):
    """
    resample a real grid tensor to ``sizes`` in Fourier space, keeping every mode
    representable at both resolutions; identity when sizes already match
    """
    x = as_tensor(x)
    sizes = tuple(int(n) for n in sizes)
    d = len(sizes)
    current = tuple(x.shape[x.ndim - d:])
    if current == sizes:
        return x
    spec = ModeSpec([min(a, b) // 2 for a, b in zip(current, sizes)])
    coeffs = expand_modes(truncate_modes(rfftn(x, d), spec), sizes, spec)
    return mul(irfftn(coeffs, sizes), float(np.prod(sizes)) / float(np.prod(current)))


class SpectralWeights(Module):
    """
    per-mode channel mixing weights, dense or Tucker-factorized; factors map
    each dense axis to its rank, ``factors[k]`` has shape [dim_k, rank_k]
    """
    def __init__(self, spec, in_channels, out_channels, kind='dense', ranks=None, implementation='factorized'):
        if kind not in ('dense', 'tucker'):
            raise ValueError('unknown spectral weight kind [{}]'.format(kind))
        if implementation not in ('factorized', 'reconstructed'):
            raise ValueError('unknown tucker implementation [{}]'.format(implementation))
        self.spec = spec
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kind = kind
        self.implementation = implementation
        shape = self.dense_shape
        if kind == 'dense':
            self.weight = Tensor(np.zeros(shape, dtype=np.complex128), requires_grad=True)
        else:
            ranks = tuple(int(r) for r in ranks)
            if len(ranks) != len(shape) or any(not 1 <= r <= n for r, n in zip(ranks, shape)):
                raise ValueError('tucker ranks {} invalid for weight shape {}'.format(ranks, shape))
            self.ranks = ranks
            self.core = Tensor(np.zeros(ranks, dtype=np.complex128), requires_grad=True)
            self.factors = [Tensor(np.zeros((n, r), dtype=np.complex128), requires_grad=True) for n, r in zip(shape, ranks)]

    @property
    def dense_shape(self):
        return self.spec.retained_shape() + (self.in_channels, self.out_channels)

    def entry_count(self):
        """ complex entries stored """
        if self.kind == 'dense':
            return self.weight.size
        return self.core.size + sum(f.size for f in self.factors)

    def reset_parameters(self, rng):
        scale = 1.0 / (self.in_channels * self.out_channels)
        if self.kind == 'dense':
            self.weight = _uniform_complex(rng, self.dense_shape, scale)
        else:
            self.core = _uniform_complex(rng, self.ranks, scale)
            self.factors = [_uniform_complex(rng, (n, r), 1.0 / math.sqrt(r)) for n, r in zip(self.dense_shape, self.ranks)]

    def dense(self):
        if self.kind == 'dense':
            return self.weight
        return tucker_to_tensor(self.core, self.factors)

    def mix(self, coeffs, active=None):
        """ [B, C_in, modes..] -> [B, C_out, modes..] """
        d = self.spec.ndim
        mask = None if active is None else self.spec.mask(active)
        if self.kind == 'dense' or self.implementation == 'reconstructed':
            weight = self.dense()
            if mask is not None:
                weight = mul(weight, Tensor(mask.reshape(mask.shape + (1, 1))))
            out = contract(coeffs, weight, axes=[(1, d)], batch_axes=[(2 + i, i) for i in range(d)])
            return permute(out, (d, d + 1) + tuple(range(d)))
        ''' factorized: modes x core first, then channel factors on either side '''
        per_mode = self.core
        for factor in self.factors[:d]:
            per_mode = contract(per_mode, factor, axes=[(0, 1)])
        per_mode = permute(per_mode, tuple(range(2, 2 + d)) + (0, 1))
        if mask is not None:
            per_mode = mul(per_mode, Tensor(mask.reshape(mask.shape + (1, 1))))
        reduced = contract(coeffs, self.factors[d], axes=[(1, 0)])
        out = contract(reduced, per_mode, axes=[(1 + d, d)], batch_axes=[(1 + i, i) for i in range(d)])
        out = contract(out, self.factors[d + 1], axes=[(d + 1, 1)])
        return permute(out, (d, d + 1) + tuple(range(d)))


def _uniform_complex(rng, shape, scale):
    re = rng.uniform(shape, -scale, scale)
    im = rng.uniform(shape, -scale, scale)
    return Tensor(re + 1j * im, requires_grad=True)


def tucker_to_tensor(core, factors):
    """ core contracted with every factor; each contraction consumes the leading rank axis """
    out = core
    for factor in factors:
        out = contract(out, factor, axes=[(0, 1)])
    return out


def tucker_reconstruct(weights):
    if weights.kind != 'tucker':
        raise ValueError('tucker_reconstruct needs tucker weights, got [{}]'.format(weights.kind))
    core_shape = tuple(weights.core.shape)
    factor_ranks = tuple(f.shape[1] for f in weights.factors)
    if core_shape != factor_ranks:
        raise ValueError('core shape {} does not match factor ranks {}'.format(core_shape, factor_ranks))
    dense = SpectralWeights(weights.spec, weights.in_channels, weights.out_channels, kind='dense')
    dense.weight = tucker_to_tensor(weights.core, weights.factors)
    return dense


def tucker_ranks(shape, rank_fraction):
    if not 0.0 < rank_fraction <= 1.0:
        raise ValueError('rank fraction must be in (0, 1], got {}'.format(rank_fraction))
    return tuple(max(1, int(math.ceil(rank_fraction * n))) for n in shape)


def init_spectral_weights(spec, in_channels, out_channels, kind='dense', ranks=None, seed=0,
                          rank_fraction=None, implementation='factorized'):
    """
    entries uniform in (-s, s) on real and imaginary parts with s = 1 / (C_in C_out);
    tucker factors use 1 / sqrt(rank) so the reconstruction keeps that scale order
    """
    if kind == 'tucker' and ranks is None:
        shape = spec.retained_shape() + (in_channels, out_channels)
        ranks = tucker_ranks(shape, 1.0 if rank_fraction is None else rank_fraction)
    weights = SpectralWeights(spec, in_channels, out_channels, kind=kind, ranks=ranks, implementation=implementation)
    weights.reset_parameters(Rng(seed))
    return weights


def spectral_conv(x, weights, spec, output_sizes=None, active_modes=None):
    """
    irfftn(expand(mix(truncate(rfftn(x))))); ``output_sizes`` resynthesizes the
    result on another grid, ``active_modes`` zeroes weights beyond those modes
    """
    x = as_tensor(x)
    d = spec.ndim
    if x.ndim != d + 2:
        raise ValueError('expected data of rank {} ([B, C] + {} spatial dims), got {}'.format(d + 2, d, x.shape))
    if x.shape[1] != weights.in_channels:
        raise ValueError('input has {} channels, spectral weights expect {}'.format(x.shape[1], weights.in_channels))
    sizes = tuple(x.shape[2:])
    out_sizes = sizes if output_sizes is None else tuple(int(n) for n in output_sizes)
    spec.check(sizes)
    spec.check(out_sizes)
    mixed = weights.mix(truncate_modes(rfftn(x, d), spec), active_modes)
    y = irfftn(expand_modes(mixed, out_sizes, spec), out_sizes)
    if out_sizes != sizes:
        y = mul(y, float(np.prod(out_sizes)) / float(np.prod(sizes)))
    return y

