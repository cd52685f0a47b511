from collections import namedtuple

import numpy as np

from core.tensor import Tensor, as_tensor

_GridFunction = namedtuple('GridFunction', 'data bounds')
PointCloud = namedtuple('PointCloud', 'coords features')


class GridFunction(_GridFunction):
    """
    channel-first samples [B, C, n_1, .., n_d] on an endpoint-exclusive uniform
    grid: point i along dim k sits at low + i * (high - low) / n_k
    """
    __slots__ = ()

    def __new__(cls, data, bounds=None):
        data = as_tensor(data)
        ndim = data.ndim - 2
        if ndim not in (1, 2):
            raise ValueError('grid functions are 1-D or 2-D, got data of shape {}'.format(data.shape))
        if bounds is None:
            bounds = ((0.0, 1.0),) * ndim
        bounds = tuple((float(lo), float(hi)) for lo, hi in bounds)
        if len(bounds) != ndim or any(lo >= hi for lo, hi in bounds):
            raise ValueError('invalid bounds {} for a {}-D grid'.format(bounds, ndim))
        if any(n < 2 for n in data.shape[2:]):
            raise ValueError('every grid dimension needs at least 2 points, got {}'.format(data.shape[2:]))
        return super(GridFunction, cls).__new__(cls, data, bounds)

    @property
    def ndim(self):
        return self.data.ndim - 2

    @property
    def sizes(self):
        return tuple(self.data.shape[2:])

    @property
    def channels(self):
        return self.data.shape[1]

    def replace(self, data=None, bounds=None):
        return GridFunction(self.data if data is None else data, self.bounds if bounds is None else bounds)


def grid_points(sizes):
    """ normalized coordinates in [0, 1) of every grid point, shape [prod(sizes), d] """
    axes = [np.arange(n) / n for n in sizes]
    mesh = np.meshgrid(*axes, indexing='ij')
    return np.stack([m.reshape(-1) for m in mesh], axis=1)


class BaseDataset():
    """ paired input/output grid samples held in memory """
    def __init__(self, x, y, bounds):
        x, y = np.asarray(x), np.asarray(y)
        if x.shape[0] != y.shape[0]:
            raise ValueError('{} inputs but {} outputs'.format(x.shape[0], y.shape[0]))
        self.x = x
        self.y = y
        self.bounds = tuple(tuple(b) for b in bounds)

    def __getitem__(self, index):
        index = np.atleast_1d(np.asarray(index, dtype=np.int64))
        return {
            'x': GridFunction(Tensor(self.x[index]), self.bounds),
            'y': GridFunction(Tensor(self.y[index]), self.bounds),
            'index': index,
        }

    def __len__(self):
        return self.x.shape[0]

    @property
    def sizes(self):
        return tuple(self.x.shape[2:])
