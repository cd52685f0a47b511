from types import SimpleNamespace

import pytest

import core.praser as Praser
from core.praser import ConfigError


def write_cfg(tmp_path, text, name='run.cfg'):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def args_for(path, debug=False):
    return SimpleNamespace(config=path, phase='train', debug=debug, screen=False)


def base_text(tmp_path):
    return 'train_path = data.nodf\noutput_dir = {}\nmodes = 4,3  # two dims\nwidth=16\n'.format(tmp_path / 'out')


def test_parse_fills_defaults_and_writes_resolved_config(tmp_path):
    opt = Praser.parse(args_for(write_cfg(tmp_path, base_text(tmp_path))))
    assert opt['model']['modes'] == (4, 3)
    assert opt['model']['width'] == 16
    assert opt['train']['lr'] == 1e-3
    assert opt['data']['pipeline'] == ('normalize_in', 'normalize_out')
    assert opt['seed'] == 0 and opt['phase'] == 'train'
    assert opt['unknown'] is None

    resolved = tmp_path / 'out' / 'resolved.cfg'
    assert resolved.exists()
    again = Praser.resolve(Praser.read_pairs(str(resolved)))
    assert again['model']['modes'] == (4, 3)
    assert Praser.flatten(again) == Praser.run_pairs(opt)


def test_unknown_key_is_a_config_error(tmp_path):
    with pytest.raises(ConfigError, match='widht'):
        Praser.parse(args_for(write_cfg(tmp_path, base_text(tmp_path) + 'widht = 32\n')))


@pytest.mark.parametrize('line', ['n_layers = many', 'tensorboard = maybe', 'arch = unet', 'epochs = -1',
                                  'batch_size = 0', 'incremental_start = a', 'pipeline = normalize_in,blur', 'gamma = 2.0'])
def test_bad_values_are_config_errors(tmp_path, line):
    with pytest.raises(ConfigError):
        Praser.parse(args_for(write_cfg(tmp_path, base_text(tmp_path) + line + '\n')))


def test_malformed_lines_and_duplicates(tmp_path):
    with pytest.raises(ConfigError, match='given twice'):
        Praser.read_pairs(write_cfg(tmp_path, 'width = 1\nwidth = 2\n'))
    with pytest.raises(ConfigError, match='key=value'):
        Praser.read_pairs(write_cfg(tmp_path, 'width 1\n'))
    with pytest.raises(ConfigError):
        Praser.parse(args_for(str(tmp_path / 'absent.cfg')))
    with pytest.raises(ConfigError, match='train_path'):
        Praser.parse(args_for(write_cfg(tmp_path, 'output_dir = {}\n'.format(tmp_path))))
    with pytest.raises(ConfigError, match='modes'):
        Praser.parse(args_for(write_cfg(tmp_path, 'train_path = x\nmodes = 0\noutput_dir = {}\n'.format(tmp_path))))


def test_debug_mode_shrinks_the_run(tmp_path):
    text = base_text(tmp_path) + 'epochs = 50\nn_train = 400\nn_test = 4\n'
    opt = Praser.parse(args_for(write_cfg(tmp_path, text), debug=True))
    assert opt['name'].startswith('debug_')
    assert opt['train']['epochs'] == 2
    assert opt['data']['n_train'] == 16 and opt['data']['n_test'] == 4
    assert opt['path']['experiments_root'].endswith('debug')


def test_run_pairs_are_flat_and_ordered(tmp_path):
    opt = Praser.parse(args_for(write_cfg(tmp_path, base_text(tmp_path))))
    pairs = Praser.run_pairs(opt)
    keys = list(pairs)
    assert keys[0] == 'name' and keys.index('kind') < keys.index('arch') < keys.index('epochs')
    assert pairs['width'] == 16
    assert 'phase' not in pairs
