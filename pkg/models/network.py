from collections import namedtuple, OrderedDict

import numpy as np

from core.base_dataset import GridFunction, PointCloud, grid_points
from core.base_network import BaseNetwork, Module
from core.tensor import Tensor, add, as_tensor, concat, gelu, permute, reshape, slice_axis
from models.graph import kernel_integral, radius_search
from models.nn import Linear, MLP, PadRecord, domain_pad, domain_unpad, grid_embedding, pad_widths
from models.spectral import (ModeSpec, SpectralWeights, spectral_conv, spectral_resample,
                             tucker_ranks)

FnoConfig = namedtuple('FnoConfig', [
    'd', 'in_channels', 'out_channels', 'hidden_channels', 'n_layers', 'modes',
    'padding_fraction', 'factorization', 'rank_fraction', 'positional_embedding',
    'seed', 'tucker_implementation'])

GnoConfig = namedtuple('GnoConfig', [
    'd', 'in_channels', 'out_channels', 'hidden_channels', 'radius', 'kernel_width',
    'seed', 'search'])


def fno_config(d, in_channels, out_channels, hidden_channels=32, n_layers=4, modes=12,
               padding_fraction=0.0, factorization='none', rank_fraction=1.0,
               positional_embedding=True, seed=0, tucker_implementation='factorized'):
    if not isinstance(modes, ModeSpec):
        modes = ModeSpec([modes] * d if np.isscalar(modes) else modes)
    if modes.ndim != d:
        raise ValueError('{} mode counts given for a {}-D model'.format(modes.ndim, d))
    if d not in (1, 2):
        raise ValueError('models are 1-D or 2-D, got d={}'.format(d))
    if n_layers < 1:
        raise ValueError('n_layers must be >= 1, got {}'.format(n_layers))
    if hidden_channels < 1 or in_channels < 1 or out_channels < 1:
        raise ValueError('channel counts must be >= 1')
    if not 0.0 <= padding_fraction < 0.5:
        raise ValueError('padding_fraction must be in [0, 0.5), got {}'.format(padding_fraction))
    if factorization not in ('none', 'tucker'):
        raise ValueError('unknown factorization [{}]'.format(factorization))
    if not 0.0 < rank_fraction <= 1.0:
        raise ValueError('rank_fraction must be in (0, 1], got {}'.format(rank_fraction))
    return FnoConfig(d, in_channels, out_channels, hidden_channels, n_layers, modes,
                     float(padding_fraction), factorization, float(rank_fraction),
                     bool(positional_embedding), int(seed), tucker_implementation)


def gno_config(d, in_channels, out_channels, hidden_channels=32, radius=0.1, kernel_width=64,
               seed=0, search='brute'):
    if d < 1:
        raise ValueError('coordinate dimension must be >= 1, got {}'.format(d))
    if not radius > 0:
        raise ValueError('radius must be positive, got {}'.format(radius))
    if min(in_channels, out_channels, hidden_channels, kernel_width) < 1:
        raise ValueError('channel counts must be >= 1')
    if search not in ('brute', 'kdtree'):
        raise ValueError('unknown radius search method [{}]'.format(search))
    return GnoConfig(d, in_channels, out_channels, hidden_channels, float(radius),
                     kernel_width, int(seed), search)


class SpectralBlock(Module):
    """ spectral convolution plus a pointwise linear skip, summed before the activation """
    def __init__(self, spec, channels, kind='dense', ranks=None, implementation='factorized'):
        self.spec = spec
        self.weights = SpectralWeights(spec, channels, channels, kind=kind, ranks=ranks, implementation=implementation)
        self.skip = Linear(channels, channels)

    def __call__(self, x, output_sizes=None, active_modes=None, activate=True):
        y = spectral_conv(x, self.weights, self.spec, output_sizes, active_modes)
        skip = self.skip(x)
        if output_sizes is not None:
            skip = spectral_resample(skip, output_sizes)
        y = add(y, skip)
        return gelu(y) if activate else y


class FNO(BaseNetwork):
    def __init__(self, config):
        super(FNO, self).__init__(seed=config.seed)
        self.config = config
        width = config.hidden_channels
        lift_in = config.in_channels + (config.d if config.positional_embedding else 0)
        kind = 'tucker' if config.factorization == 'tucker' else 'dense'
        ranks = None
        if kind == 'tucker':
            shape = config.modes.retained_shape() + (width, width)
            ranks = tucker_ranks(shape, config.rank_fraction)
        self.lifting = MLP(lift_in, width, width)
        self.blocks = [SpectralBlock(config.modes, width, kind, ranks, config.tucker_implementation)
                       for _ in range(config.n_layers)]
        self.projection = MLP(width, width, config.out_channels)
        self.active_modes = None
        self.init_weights()

    @property
    def spec(self):
        return self.config.modes

    def __call__(self, x, output_sizes=None):
        if not isinstance(x, GridFunction):
            x = GridFunction(x)
        cfg = self.config
        if x.ndim != cfg.d:
            raise ValueError('model is {}-D, input is {}-D'.format(cfg.d, x.ndim))
        if x.channels != cfg.in_channels:
            raise ValueError('model expects {} input channels, got {}'.format(cfg.in_channels, x.channels))
        if cfg.positional_embedding:
            x = grid_embedding(x)
        h = self.lifting(x.data)
        h, record = domain_pad(h, cfg.padding_fraction)
        self.spec.check(h.shape[2:])

        out_record = record
        out_padded = None
        if output_sizes is not None and tuple(output_sizes) != record.sizes:
            sizes = tuple(int(n) for n in output_sizes)
            out_record = PadRecord(sizes, pad_widths(sizes, cfg.padding_fraction))
            out_padded = tuple(n + p for n, p in zip(out_record.sizes, out_record.pads))

        for i, block in enumerate(self.blocks):
            last = i == len(self.blocks) - 1
            h = block(h, output_sizes=out_padded if last else None,
                      active_modes=self.active_modes, activate=not last)
        h = domain_unpad(h, out_record, x.bounds)
        return GridFunction(self.projection(h.data), x.bounds)

    def forward_grid(self, x, output_sizes=None):
        return self(x, output_sizes)


class TFNO(FNO):
    """ FNO whose spectral weights are Tucker-factorized """
    def __init__(self, config):
        if config.factorization != 'tucker':
            config = config._replace(factorization='tucker')
        super(TFNO, self).__init__(config)


class GNO(BaseNetwork):
    """
    lifting -> kernel integral over a radius graph -> gelu -> projection; the
    kernel network sees concat(x, y) and returns a [hidden, hidden] matrix
    """
    def __init__(self, config):
        super(GNO, self).__init__(seed=config.seed)
        self.config = config
        width = config.hidden_channels
        self.lifting = Linear(config.in_channels, width)
        self.kernel = MLP(2 * config.d, config.kernel_width, width * width)
        self.projection = MLP(width, width, config.out_channels)
        self.last_isolated = 0
        self._grid_index = OrderedDict()
        self.init_weights()

    def _kernel(self, pairs):
        return self.kernel(pairs, channel_axis=-1)

    def __call__(self, in_cloud, query_coords, index=None):
        cfg = self.config
        coords = as_tensor(in_cloud.coords).data
        queries = as_tensor(query_coords).data
        if coords.ndim != 2 or coords.shape[1] != cfg.d or queries.ndim != 2 or queries.shape[1] != cfg.d:
            raise ValueError('model works on {}-D coordinates, got sources {} and queries {}'.format(cfg.d, coords.shape, queries.shape))
        features = as_tensor(in_cloud.features)
        if features.ndim != 2 or features.shape[1] != cfg.in_channels:
            raise ValueError('model expects [N, {}] features, got {}'.format(cfg.in_channels, features.shape))
        if index is None:
            index = radius_search(queries, coords, cfg.radius, method=cfg.search)
        lifted = PointCloud(coords, self.lifting(features, channel_axis=-1))
        h, self.last_isolated = kernel_integral(queries, lifted, index, self._kernel, cfg.hidden_channels)
        out = self.projection(gelu(h), channel_axis=-1)
        return PointCloud(queries, out)

    def grid_index(self, sizes):
        """ radius graph of a grid, cached per resolution """
        sizes = tuple(sizes)
        if sizes not in self._grid_index:
            points = grid_points(sizes)
            self._grid_index[sizes] = (points, radius_search(points, points, self.config.radius, method=self.config.search))
        return self._grid_index[sizes]

    def forward_grid(self, x, output_sizes=None):
        """ every grid sample treated as a point cloud over its own grid points """
        if not isinstance(x, GridFunction):
            x = GridFunction(x)
        if output_sizes is not None and tuple(output_sizes) != x.sizes:
            raise ValueError('GNO on grids keeps the input resolution')
        points, index = self.grid_index(x.sizes)
        batch, channels = x.data.shape[:2]
        flat = reshape(x.data, (batch, channels, len(points)))
        outputs = []
        for b in range(batch):
            sample = permute(reshape(slice_axis(flat, 0, b, b + 1), (channels, len(points))), (1, 0))
            cloud = self(PointCloud(points, sample), points, index)
            outputs.append(reshape(permute(cloud.features, (1, 0)), (1, self.config.out_channels) + x.sizes))
        data = outputs[0] if batch == 1 else concat(outputs, 0)
        return GridFunction(data, x.bounds)


def fno_forward(model, x, output_sizes=None):
    return model(x, output_sizes)


def gno_forward(model, in_cloud, query_coords):
    return model(in_cloud, query_coords)


def build_network(arch, **kwargs):
    """ FNO | TFNO | GNO from flat keyword arguments """
    if arch == 'fno':
        return FNO(fno_config(**kwargs))
    if arch == 'tfno':
        kwargs['factorization'] = 'tucker'
        return TFNO(fno_config(**kwargs))
    if arch == 'gno':
        return GNO(gno_config(**kwargs))
    raise ValueError('unknown architecture [{}]'.format(arch))
