"""
NOCK checkpoint files: magic, format version, the resolved config as key=value
text, then one record per parameter. Normalizer statistics ride along as
``processor.*`` records so evaluation reuses the training-time pipeline.
"""
from collections import OrderedDict

import numpy as np

from core.util import (FormatError, format_block, parse_block, read_header, read_records,
                       write_header, write_records)

MAGIC = b'NOCK'
VERSION = 1
PROCESSOR_PREFIX = 'processor.'

def model_block(model):
    """ key=value echo of the architecture, enough to rebuild the network """
    cfg = model.config
    pairs = OrderedDict()
    if hasattr(cfg, 'modes'):
        pairs['arch'] = 'tfno' if cfg.factorization == 'tucker' else 'fno'
        pairs['d'] = cfg.d
        pairs['in_channels'] = cfg.in_channels
        pairs['out_channels'] = cfg.out_channels
        pairs['width'] = cfg.hidden_channels
        pairs['n_layers'] = cfg.n_layers
        pairs['modes'] = tuple(cfg.modes.modes)
        pairs['padding_fraction'] = cfg.padding_fraction
        pairs['factorization'] = cfg.factorization
        pairs['rank_fraction'] = cfg.rank_fraction
        pairs['tucker_implementation'] = cfg.tucker_implementation
        pairs['positional_embedding'] = cfg.positional_embedding
    else:
        pairs['arch'] = 'gno'
        pairs['d'] = cfg.d
        pairs['in_channels'] = cfg.in_channels
        pairs['out_channels'] = cfg.out_channels
        pairs['width'] = cfg.hidden_channels
        pairs['radius'] = cfg.radius
        pairs['kernel_width'] = cfg.kernel_width
        pairs['search'] = cfg.search
    pairs['seed'] = cfg.seed
    return pairs


def save_checkpoint(model, path, opt=None, processor=None):
    """
    ``opt`` is the flat resolved run config; its keys are written as ``run.*``
    after the architecture echo so ``eval`` and ``infer`` can reuse batch size
    and pipeline
    """
    pairs = model_block(model)
    active = getattr(model, 'active_modes', None)
    if active is not None:
        pairs['active_modes'] = tuple(active)
    if opt is not None:
        for key, value in opt.items():
            pairs['run.{}'.format(key)] = value
    arrays = model.state_dict()
    if processor is not None:
        for name, value in processor.state_dict().items():
            arrays[PROCESSOR_PREFIX + name] = value
    with open(path, 'wb') as handle:
        write_header(handle, MAGIC, VERSION, format_block(pairs))
        write_records(handle, arrays)


def read_checkpoint(path):
    """ (config pairs, parameter arrays, processor arrays) """
    try:
        with open(path, 'rb') as handle:
            block = read_header(handle, MAGIC, VERSION)
            arrays = read_records(handle)
    except (IOError, OSError) as e:
        raise FormatError('cannot read checkpoint {}: {}'.format(path, e))
    pairs = parse_block(block)
    params = OrderedDict((k, v) for k, v in arrays.items() if not k.startswith(PROCESSOR_PREFIX))
    processor = OrderedDict((k[len(PROCESSOR_PREFIX):], v) for k, v in arrays.items() if k.startswith(PROCESSOR_PREFIX))
    return pairs, params, processor


def model_kwargs(pairs):
    """ network keyword arguments from a checkpoint config block """
    missing = [k for k in ('arch', 'd', 'in_channels', 'out_channels', 'width', 'seed') if k not in pairs]
    if missing:
        raise FormatError('checkpoint config lacks {}'.format(', '.join(missing)))
    try:
        arch = pairs['arch']
        kwargs = {
            'd': int(pairs['d']),
            'in_channels': int(pairs['in_channels']),
            'out_channels': int(pairs['out_channels']),
            'hidden_channels': int(pairs['width']),
            'seed': int(pairs['seed']),
        }
        if arch in ('fno', 'tfno'):
            kwargs.update({
                'n_layers': int(pairs['n_layers']),
                'modes': tuple(int(m) for m in pairs['modes'].split(',')),
                'padding_fraction': float(pairs['padding_fraction']),
                'factorization': pairs['factorization'],
                'rank_fraction': float(pairs['rank_fraction']),
                'tucker_implementation': pairs['tucker_implementation'],
                'positional_embedding': pairs['positional_embedding'] == 'true',
            })
        elif arch == 'gno':
            kwargs.update({'radius': float(pairs['radius']), 'kernel_width': int(pairs['kernel_width']),
                           'search': pairs['search']})
        else:
            raise FormatError('checkpoint names unknown architecture [{}]'.format(arch))
    except (KeyError, ValueError) as e:
        raise FormatError('checkpoint config is inconsistent: {}'.format(e))
    return arch, kwargs


def load_checkpoint(path, model=None):
    """
    rebuild the network from the config echo and load every parameter; when
    ``model`` is given its architecture must match the stored one
    """
    from models.network import build_network
    pairs, params, _ = read_checkpoint(path)
    arch, kwargs = model_kwargs(pairs)
    if model is None:
        model = build_network(arch, **kwargs)
    else:
        stored = model_block(model)
        for key, value in stored.items():
            if key in ('seed', 'search'):
                continue
            found = pairs.get(key)
            expected = format_block(OrderedDict([(key, value)])).split('=', 1)[1].strip()
            if found != expected:
                raise FormatError('checkpoint {} has {}={}, model has {}'.format(path, key, found, expected))
    try:
        model.load_state_dict(params, strict=True)
    except ValueError as e:
        raise FormatError('checkpoint {} does not fit the model: {}'.format(path, e))
    if 'active_modes' in pairs and hasattr(model, 'active_modes'):
        model.active_modes = tuple(int(m) for m in pairs['active_modes'].split(','))
    return model


def load_processor(path):
    from data.processor import DataProcessor
    pairs, _, arrays = read_checkpoint(path)
    pipeline = pairs.get('run.pipeline', '')
    return DataProcessor.from_state(tuple(p for p in pipeline.split(',') if p), arrays)


def run_config(path):
    """ run.* keys of a checkpoint, without the prefix """
    pairs, _, _ = read_checkpoint(path)
    return OrderedDict((k[4:], v) for k, v in pairs.items() if k.startswith('run.'))


def parameters_equal(a, b):
    return list(a) == list(b) and all(np.array_equal(a[k], b[k]) for k in a)
