import os
from collections import OrderedDict, namedtuple
from functools import partial
from multiprocessing import Pool

import numpy as np
import tqdm

from core.base_dataset import BaseDataset
from core.util import (FormatError, format_block, parse_block, read_header, read_records,
                       write_header, write_records)
from data.processor import subsample_array
from data.util.burgers import solve_burgers
from data.util.darcy import darcy_bounds, darcy_coefficient, solve_darcy
from data.util.grf import BURGERS_GRF, DARCY_GRF, GrfSpec, sample_grf_1d, sample_grf_2d
from data.util.rng import Rng

MAGIC = b'NODF'
VERSION = 1

DatasetFile = namedtuple('DatasetFile', 'arrays metadata')

DEFAULT_PARAMS = {
    'darcy': OrderedDict([('tau', DARCY_GRF.tau), ('alpha', DARCY_GRF.alpha), ('sigma', DARCY_GRF.sigma),
                          ('a_hi', 12.0), ('a_lo', 3.0), ('forcing', 1.0)]),
    'burgers': OrderedDict([('tau', BURGERS_GRF.tau), ('alpha', BURGERS_GRF.alpha), ('sigma', BURGERS_GRF.sigma),
                            ('nu', 0.01), ('T', 1.0)]),
}


def write_dataset(path, arrays, metadata):
    with open(path, 'wb') as handle:
        write_header(handle, MAGIC, VERSION, format_block(metadata))
        write_records(handle, arrays)


def read_dataset(path):
    try:
        with open(path, 'rb') as handle:
            metadata = parse_block(read_header(handle, MAGIC, VERSION))
            arrays = read_records(handle)
    except (IOError, OSError) as e:
        raise FormatError('cannot read dataset {}: {}'.format(path, e))
    return DatasetFile(arrays, metadata)


def resolve_params(kind, params=None):
    if kind not in DEFAULT_PARAMS:
        raise ValueError('unknown dataset kind [{}]'.format(kind))
    resolved = OrderedDict(DEFAULT_PARAMS[kind])
    for key, value in (params or {}).items():
        if key not in resolved:
            raise ValueError('unknown {} parameter [{}]'.format(kind, key))
        resolved[key] = float(value)
    return resolved


def generate_sample(kind, resolution, params, seed):
    """ one (input, output) pair drawn from Rng(seed), channel-first """
    rng = Rng(seed)
    spec = GrfSpec(params['tau'], params['alpha'], params['sigma'])
    if kind == 'darcy':
        a = darcy_coefficient(sample_grf_2d(resolution, spec, rng), params['a_hi'], params['a_lo'])
        u = solve_darcy(a, params['forcing'])
        return a[None], u[None]
    u0 = sample_grf_1d(resolution, spec, rng)
    return u0[None], solve_burgers(u0, params['nu'], params['T'])[None]


def sample_bounds(kind, resolution):
    return darcy_bounds(resolution) if kind == 'darcy' else ((0.0, 1.0),)


def generate_dataset(kind, count, resolution, params=None, seed=0, path=None, start=0, workers=1):
    """
    sample i (counted from ``start``) is drawn from Rng(seed + i), so any split of
    the index range regenerates the same samples
    """
    if count < 1:
        raise ValueError('count must be >= 1, got {}'.format(count))
    params = resolve_params(kind, params)
    if kind == 'darcy' and resolution < 4:
        raise ValueError('darcy grids need at least 4 nodes per side, got {}'.format(resolution))
    if kind == 'burgers' and (resolution < 16 or resolution & (resolution - 1)):
        raise ValueError('burgers grids need a power of two >= 16, got {}'.format(resolution))
    if path is not None:
        folder = os.path.dirname(os.path.abspath(path))
        if not os.path.isdir(folder) or not os.access(folder, os.W_OK):
            raise OSError('cannot write dataset to {}'.format(path))

    seeds = [seed + start + i for i in range(count)]
    worker = partial(generate_sample, kind, resolution, params)
    if workers > 1:
        with Pool(workers) as pool:
            pairs = list(tqdm.tqdm(pool.imap(worker, seeds), total=count, desc='generate {}'.format(kind)))
    else:
        pairs = [worker(s) for s in tqdm.tqdm(seeds, desc='generate {}'.format(kind))]

    arrays = OrderedDict([
        ('x', np.stack([p[0] for p in pairs])),
        ('y', np.stack([p[1] for p in pairs])),
    ])
    bounds = sample_bounds(kind, resolution)
    metadata = OrderedDict([('kind', kind), ('resolution', resolution), ('count', count),
                            ('seed', seed), ('start', start),
                            ('bounds', tuple(v for b in bounds for v in b))])
    metadata.update(params)
    dataset = DatasetFile(arrays, metadata)
    if path is not None:
        write_dataset(path, arrays, metadata)
    return dataset


def metadata_bounds(metadata, ndim):
    values = [float(v) for v in metadata['bounds'].split(',')] if 'bounds' in metadata else [0.0, 1.0] * ndim
    if len(values) != 2 * ndim:
        raise FormatError('bounds {} do not match a {}-D grid'.format(values, ndim))
    return tuple((values[2 * i], values[2 * i + 1]) for i in range(ndim))


class OperatorDataset(BaseDataset):
    """
    input/output pairs of a NODF file, optionally limited to the first
    ``data_len`` samples and subsampled to ``resolution`` points per side
    """
    def __init__(self, data_root, data_len=0, resolution=0, offset=0):
        stored = read_dataset(data_root)
        if 'x' not in stored.arrays or 'y' not in stored.arrays:
            raise FormatError('dataset {} needs tensors "x" and "y"'.format(data_root))
        x, y = stored.arrays['x'], stored.arrays['y']
        if data_len > 0:
            if offset + data_len > x.shape[0]:
                raise ValueError('dataset {} holds {} samples, {} requested from {}'.format(data_root, x.shape[0], data_len, offset))
            x, y = x[offset:offset + data_len], y[offset:offset + data_len]
        self.native_resolution = x.shape[-1]
        self.metadata = stored.metadata
        bounds = metadata_bounds(stored.metadata, x.ndim - 2)
        if resolution and resolution != self.native_resolution:
            factor = subsample_factor(self.native_resolution, resolution)
            x, y = subsample_array(x, factor), subsample_array(y, factor)
        super(OperatorDataset, self).__init__(x, y, bounds)
        self.resolution = x.shape[-1]


def subsample_factor(native, resolution):
    if resolution < 1 or native % resolution:
        raise ValueError('resolution {} cannot be reached by subsampling {} points'.format(resolution, native))
    return native // resolution
