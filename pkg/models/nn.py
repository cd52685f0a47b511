"""
Pointwise building blocks shared by FNO and GNO: channel-wise linear maps,
two-layer perceptrons, positional embedding and domain padding.
"""
import math
from collections import namedtuple

import numpy as np

from core.base_network import Module
from core.base_dataset import GridFunction
from core.tensor import Tensor, add, as_tensor, concat, contract, gelu, pad_axis, permute, slice_

PadRecord = namedtuple('PadRecord', 'sizes pads')


class Linear(Module):
    """
    y = W x + b acting on ``channel_axis`` (axis 1 for grid data [B, C, ..],
    the last axis for point features [N, C]); W is [C_in, C_out]
    """
    def __init__(self, in_channels, out_channels, bias=True):
        if in_channels < 1 or out_channels < 1:
            raise ValueError('linear layer needs positive channel counts, got {} -> {}'.format(in_channels, out_channels))
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.weight = Tensor(np.zeros((in_channels, out_channels)), requires_grad=True)
        self.bias = Tensor(np.zeros(out_channels), requires_grad=True) if bias else None

    def reset_parameters(self, rng):
        bound = 1.0 / math.sqrt(self.in_channels)
        self.weight = Tensor(rng.uniform((self.in_channels, self.out_channels), -bound, bound), requires_grad=True)
        if self.bias is not None:
            self.bias = Tensor(np.zeros(self.out_channels), requires_grad=True)

    def __call__(self, x, channel_axis=1):
        x = as_tensor(x)
        axis = channel_axis % x.ndim
        if x.shape[axis] != self.in_channels:
            raise ValueError('expected {} channels on axis {}, got {}'.format(self.in_channels, axis, x.shape[axis]))
        y = contract(x, self.weight, axes=[(axis, 0)])
        ''' contract leaves the output channel last; move it back into place '''
        order = list(range(y.ndim - 1))
        order.insert(axis, y.ndim - 1)
        if order != list(range(y.ndim)):
            y = permute(y, order)
        if self.bias is not None:
            shape = [1] * y.ndim
            shape[axis] = self.out_channels
            y = add(y, self.bias.reshape(shape))
        return y


class MLP(Module):
    """ two pointwise linear layers with gelu in between """
    def __init__(self, in_channels, hidden_channels, out_channels):
        self.fc1 = Linear(in_channels, hidden_channels)
        self.fc2 = Linear(hidden_channels, out_channels)

    def __call__(self, x, channel_axis=1):
        return self.fc2(gelu(self.fc1(x, channel_axis)), channel_axis)


def coordinate_channels(sizes):
    """ [d, n_1, .., n_d] normalized grid coordinates i / n_k """
    axes = [np.arange(n) / float(n) for n in sizes]
    return np.stack(np.meshgrid(*axes, indexing='ij'), axis=0)


def grid_embedding(x):
    """ append d coordinate channels in [0, 1); depends on resolution only """
    if not isinstance(x, GridFunction):
        x = GridFunction(x)
    batch = x.data.shape[0]
    coords = coordinate_channels(x.sizes)
    coords = np.broadcast_to(coords[None], (batch,) + coords.shape)
    return x.replace(data=concat([x.data, Tensor(coords)], 1))


def pad_widths(sizes, fraction):
    if not 0.0 <= fraction < 0.5:
        raise ValueError('padding fraction must be in [0, 0.5), got {}'.format(fraction))
    return tuple(int(math.floor(fraction * n + 0.5)) for n in sizes)


def domain_pad(x, fraction):
    """ zeros appended on the high side of every spatial dim, proportional to its size """
    data = x.data if isinstance(x, GridFunction) else as_tensor(x)
    sizes = tuple(data.shape[2:])
    pads = pad_widths(sizes, fraction)
    for i, p in enumerate(pads):
        if p:
            data = pad_axis(data, 2 + i, 0, p)
    return data, PadRecord(sizes, pads)


def domain_unpad(y, record, bounds=None):
    data = y.data if isinstance(y, GridFunction) else as_tensor(y)
    if any(record.pads):
        ranges = [None, None] + [(0, n) for n in record.sizes]
        data = slice_(data, ranges)
    if bounds is None and isinstance(y, GridFunction):
        bounds = y.bounds
    return GridFunction(data, bounds)
