import os
from collections import OrderedDict
from pathlib import Path

from core.util import format_block, format_value, mkdirs


class ConfigError(ValueError):
    """ unknown key or value that does not cast to its declared type """


def _bool(text):
    lowered = str(text).strip().lower()
    if lowered in ('true', '1', 'yes', 'on'):
        return True
    if lowered in ('false', '0', 'no', 'off'):
        return False
    raise ValueError('not a boolean: {}'.format(text))


def _int_list(text):
    if isinstance(text, (tuple, list)):
        return tuple(int(v) for v in text)
    text = str(text).strip()
    return tuple(int(v) for v in text.split(',') if v.strip()) if text else ()


def _str_list(text):
    if isinstance(text, (tuple, list)):
        return tuple(str(v) for v in text)
    text = str(text).strip()
    return tuple(v.strip() for v in text.split(',') if v.strip()) if text else ()


def _choice(*options):
    def cast(text):
        text = str(text).strip()
        if text not in options:
            raise ValueError('expected one of {}, got {}'.format('|'.join(options), text))
        return text
    return cast


''' section -> key -> (cast, default); the order is the order of resolved.cfg '''
DEFAULTS = OrderedDict([
    ('general', OrderedDict([
        ('name', (str, 'operator')),
        ('seed', (int, 0)),
        ('output_dir', (str, 'experiments/operator')),
        ('tensorboard', (_bool, False)),
        ('record_wall_time', (_bool, False)),
    ])),
    ('data', OrderedDict([
        ('kind', (_choice('darcy', 'burgers'), 'darcy')),
        ('train_path', (str, '')),
        ('test_path', (str, '')),
        ('n_train', (int, 0)),
        ('n_test', (int, 0)),
        ('train_resolution', (int, 0)),
        ('resolutions', (_int_list, ())),
        ('pipeline', (_str_list, ('normalize_in', 'normalize_out'))),
    ])),
    ('model', OrderedDict([
        ('arch', (_choice('fno', 'tfno', 'gno'), 'fno')),
        ('in_channels', (int, 1)),
        ('out_channels', (int, 1)),
        ('width', (int, 32)),
        ('n_layers', (int, 4)),
        ('modes', (_int_list, (12,))),
        ('padding_fraction', (float, 0.0)),
        ('factorization', (_choice('none', 'tucker'), 'none')),
        ('rank_fraction', (float, 1.0)),
        ('tucker_implementation', (_choice('factorized', 'reconstructed'), 'factorized')),
        ('positional_embedding', (_bool, True)),
        ('radius', (float, 0.1)),
        ('kernel_width', (int, 64)),
        ('graph_search', (_choice('brute', 'kdtree'), 'brute')),
    ])),
    ('train', OrderedDict([
        ('epochs', (int, 10)),
        ('batch_size', (int, 8)),
        ('lr', (float, 1e-3)),
        ('gamma', (float, 0.5)),
        ('step_size', (int, 100)),
        ('loss', (_choice('l2', 'h1'), 'l2')),
        ('loss_p', (float, 2.0)),
        ('loss_space', (_choice('physical', 'normalized'), 'physical')),
        ('incremental', (_bool, False)),
        ('incremental_start', (_int_list, (2,))),
        ('incremental_increment', (int, 1)),
        ('incremental_step', (int, 10)),
        ('save_checkpoint_epoch', (int, 0)),
        ('resume', (str, '')),
    ])),
])

DEBUG = {'epochs': 2, 'n_train': 16, 'n_test': 8}


class NoneDict(dict):
    def __missing__(self, key):
        return None


def dict_to_nonedict(opt):
    """ convert to NoneDict, which return None for missing key. """
    if isinstance(opt, dict):
        new_opt = dict()
        for key, sub_opt in opt.items():
            new_opt[key] = dict_to_nonedict(sub_opt)
        return NoneDict(**new_opt)
    elif isinstance(opt, list):
        return [dict_to_nonedict(sub_opt) for sub_opt in opt]
    else:
        return opt


def section_of(key):
    for section, keys in DEFAULTS.items():
        if key in keys:
            return section
    return None


def read_pairs(path):
    """ key=value lines, '#' starts a comment """
    pairs = OrderedDict()
    with open(path, 'r') as f:
        for number, line in enumerate(f, 1):
            line = line.split('#')[0].strip()
            if not line:
                continue
            if '=' not in line:
                raise ConfigError('{}:{}: expected key=value, got [{}]'.format(path, number, line))
            key, value = line.split('=', 1)
            key = key.strip()
            if key in pairs:
                raise ConfigError('{}:{}: key [{}] given twice'.format(path, number, key))
            pairs[key] = value.strip()
    return pairs


def resolve(pairs):
    """ cast every value against its declared type, fill defaults, reject unknown keys """
    unknown = [key for key in pairs if section_of(key) is None]
    if unknown:
        raise ConfigError('unknown config key [{}]'.format(', '.join(unknown)))
    opt = OrderedDict((section, OrderedDict()) for section in DEFAULTS)
    for section, keys in DEFAULTS.items():
        for key, (cast, default) in keys.items():
            if key in pairs:
                try:
                    opt[section][key] = cast(pairs[key])
                except ValueError as e:
                    raise ConfigError('bad value for [{}]: {}'.format(key, e))
            else:
                opt[section][key] = default
    return opt


def format_config(opt):
    """ resolved.cfg text, grouped by section """
    blocks = []
    for section in DEFAULTS:
        blocks.append('# {}\n{}'.format(section, format_block(opt[section])))
    return '\n'.join(blocks)


def flatten(opt):
    pairs = OrderedDict()
    for section in DEFAULTS:
        pairs.update(opt[section])
    return pairs


def run_pairs(opt):
    """ flat resolved config of a parsed run, in resolved.cfg order """
    pairs = OrderedDict()
    for section, keys in DEFAULTS.items():
        source = opt if section == 'general' else opt[section]
        for key in keys:
            pairs[key] = source[key]
    return pairs


def parse(args):
    try:
        pairs = read_pairs(args.config)
    except (IOError, OSError) as e:
        raise ConfigError('cannot read config {}: {}'.format(args.config, e))
    opt = resolve(pairs)

    ''' debug mode '''
    if getattr(args, 'debug', False):
        opt['general']['name'] = 'debug_{}'.format(opt['general']['name'])
        opt['general']['output_dir'] = os.path.join(opt['general']['output_dir'], 'debug')
        opt['train']['epochs'] = min(opt['train']['epochs'], DEBUG['epochs'])
        for key in ('n_train', 'n_test'):
            if opt['data'][key] == 0 or opt['data'][key] > DEBUG[key]:
                opt['data'][key] = DEBUG[key]

    validate(opt)

    experiments_root = opt['general']['output_dir']
    mkdirs(experiments_root)
    write_config(opt, os.path.join(experiments_root, 'resolved.cfg'))

    result = OrderedDict(opt['general'])
    result['phase'] = args.phase
    result['debug'] = bool(getattr(args, 'debug', False))
    result['screen'] = bool(getattr(args, 'screen', False))
    result['path'] = {
        'experiments_root': experiments_root,
        'tb_logger': os.path.join(experiments_root, 'tb_logger'),
        'checkpoint': os.path.join(experiments_root, 'model.nock'),
    }
    for section in ('data', 'model', 'train'):
        result[section] = opt[section]
    return dict_to_nonedict(result)


def validate(opt):
    data, model, train = opt['data'], opt['model'], opt['train']
    if not data['train_path']:
        raise ConfigError('train_path is required')
    if train['epochs'] < 0:
        raise ConfigError('epochs must be >= 0, got {}'.format(train['epochs']))
    if train['batch_size'] < 1:
        raise ConfigError('batch_size must be >= 1, got {}'.format(train['batch_size']))
    if not 0.0 < train['gamma'] <= 1.0:
        raise ConfigError('gamma must be in (0, 1], got {}'.format(train['gamma']))
    if train['step_size'] < 1:
        raise ConfigError('step_size must be >= 1, got {}'.format(train['step_size']))
    if train['loss_p'] < 1:
        raise ConfigError('loss_p must be >= 1, got {}'.format(train['loss_p']))
    if not model['modes'] or any(m < 1 for m in model['modes']):
        raise ConfigError('modes must be positive integers, got {}'.format(model['modes']))
    for step in data['pipeline']:
        if step not in ('normalize_in', 'normalize_out', 'embed', 'pad'):
            raise ConfigError('unknown pipeline step [{}]'.format(step))


def write_config(opt, fname):
    fname = Path(fname)
    with fname.open('wt') as handle:
        handle.write(format_config(opt))


def dict2str(opt, indent_l=1):
    """ dict to string for logger """
    msg = ''
    for k, v in opt.items():
        if isinstance(v, dict):
            msg += ' ' * (indent_l * 2) + k + ':[\n'
            msg += dict2str(v, indent_l + 1)
            msg += ' ' * (indent_l * 2) + ']\n'
        else:
            msg += ' ' * (indent_l * 2) + k + ': ' + format_value(v) + '\n'
    return msg
