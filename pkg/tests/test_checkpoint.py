from collections import OrderedDict

import numpy as np
import pytest

from core.base_dataset import GridFunction
from core.tensor import Tensor
from core.util import FormatError
from data.processor import DataProcessor
from data.util.rng import Rng
from models.checkpoint import (load_checkpoint, load_processor, parameters_equal, read_checkpoint, run_config,
                               save_checkpoint)
from models.network import build_network


@pytest.mark.parametrize('arch,kwargs', [
    ('fno', dict(d=2, n_layers=2, modes=(4, 3), padding_fraction=0.125)),
    ('tfno', dict(d=2, n_layers=1, modes=4, rank_fraction=0.5)),
    ('gno', dict(d=2, radius=0.3, kernel_width=8)),
    ('gno', dict(d=2, radius=0.3, kernel_width=8, search='kdtree')),
])
def test_save_then_load_is_bit_exact(tmp_path, arch, kwargs):
    model = build_network(arch, in_channels=1, out_channels=1, hidden_channels=4, seed=3, **kwargs)
    path = str(tmp_path / 'model.nock')
    save_checkpoint(model, path)
    restored = load_checkpoint(path)
    assert type(restored) is type(model)
    assert restored.config == model.config
    assert parameters_equal(model.state_dict(), restored.state_dict())
    x = GridFunction(Tensor(Rng(0).normal((1, 1, 8, 8))))
    forward = (lambda net: net.forward_grid(x)) if arch == 'gno' else (lambda net: net(x))
    np.testing.assert_array_equal(forward(model).data.data, forward(restored).data.data)


def test_load_into_matching_model_and_active_modes(tmp_path):
    model = build_network('fno', d=1, in_channels=1, out_channels=1, hidden_channels=4, n_layers=1, modes=4, seed=1)
    model.active_modes = (2,)
    path = str(tmp_path / 'model.nock')
    save_checkpoint(model, path, opt=OrderedDict([('seed', 7), ('batch_size', 4), ('pipeline', ('normalize_in',))]))
    target = build_network('fno', d=1, in_channels=1, out_channels=1, hidden_channels=4, n_layers=1, modes=4, seed=2)
    load_checkpoint(path, model=target)
    assert parameters_equal(model.state_dict(), target.state_dict())
    assert target.active_modes == (2,)
    assert run_config(path) == OrderedDict([('seed', '7'), ('batch_size', '4'), ('pipeline', 'normalize_in')])


def test_architecture_mismatch_is_a_format_error(tmp_path):
    model = build_network('fno', d=1, in_channels=1, out_channels=1, hidden_channels=4, n_layers=1, modes=4)
    path = str(tmp_path / 'model.nock')
    save_checkpoint(model, path)
    wider = build_network('fno', d=1, in_channels=1, out_channels=1, hidden_channels=8, n_layers=1, modes=4)
    with pytest.raises(FormatError, match='width'):
        load_checkpoint(path, model=wider)


def test_corrupt_files_are_rejected(tmp_path):
    model = build_network('fno', d=1, in_channels=1, out_channels=1, hidden_channels=2, n_layers=1, modes=2)
    path = tmp_path / 'model.nock'
    save_checkpoint(model, str(path))
    raw = path.read_bytes()

    bad_magic = tmp_path / 'magic.nock'
    bad_magic.write_bytes(b'NODF' + raw[4:])
    with pytest.raises(FormatError, match='magic'):
        load_checkpoint(str(bad_magic))

    bad_version = tmp_path / 'version.nock'
    bad_version.write_bytes(raw[:4] + (2).to_bytes(4, 'little') + raw[8:])
    with pytest.raises(FormatError, match='version'):
        load_checkpoint(str(bad_version))

    truncated = tmp_path / 'truncated.nock'
    truncated.write_bytes(raw[:-3])
    with pytest.raises(FormatError):
        load_checkpoint(str(truncated))

    with pytest.raises(FormatError):
        load_checkpoint(str(tmp_path / 'absent.nock'))


def test_processor_statistics_round_trip(tmp_path):
    model = build_network('fno', d=1, in_channels=1, out_channels=1, hidden_channels=2, n_layers=1, modes=2)
    processor = DataProcessor(('normalize_in', 'normalize_out'))
    processor.in_normalizer.load([1.5], [0.25])
    processor.out_normalizer.load([-2.0], [3.0])
    path = str(tmp_path / 'model.nock')
    save_checkpoint(model, path, opt=OrderedDict([('pipeline', processor.pipeline)]), processor=processor)

    pairs, params, arrays = read_checkpoint(path)
    assert pairs['arch'] == 'fno' and pairs['run.pipeline'] == 'normalize_in,normalize_out'
    assert not any(name.startswith('processor.') for name in params)
    restored = load_processor(path)
    assert restored.pipeline == processor.pipeline
    np.testing.assert_array_equal(restored.in_normalizer.mean, [1.5])
    np.testing.assert_array_equal(restored.out_normalizer.std, [3.0])
