import json
import logging
import os
from collections import OrderedDict

import numpy as np
import pytest

from core.base_model import BaseModel, TrainReport, TrainingAborted
from core.logger import VisualWriter
from core.praser import dict_to_nonedict
from data.dataset import read_dataset, write_dataset
from models.checkpoint import read_checkpoint, parameters_equal, run_config
from run import main

RUN = """
train_path = {root}/train.nodf
test_path = {root}/test.nodf
output_dir = {out}
n_train = 8
n_test = 4
resolutions = 16,8
width = 4
n_layers = 1
modes = 4
epochs = {epochs}
batch_size = 4
lr = {lr}
"""


@pytest.fixture(scope='module')
def darcy_files(tmp_path_factory):
    root = tmp_path_factory.mktemp('darcy')
    assert main(['generate', '--kind', 'darcy', '--count', '8', '--res', '16', '--seed', '0',
                 '--out', str(root / 'train.nodf')]) == 0
    assert main(['generate', '--kind', 'darcy', '--count', '4', '--res', '16', '--seed', '0', '--start', '8',
                 '--out', str(root / 'test.nodf')]) == 0
    return root


def train(root, tmp_path, name, epochs=2, lr=1e-3, extra=''):
    out = tmp_path / name
    cfg = tmp_path / '{}.cfg'.format(name)
    cfg.write_text(RUN.format(root=root, out=out, epochs=epochs, lr=lr) + extra)
    return main(['train', '-c', str(cfg)]), out


def read_report(path):
    lines = path.read_text().splitlines()
    header = lines[0].split(',')
    return header, [OrderedDict(zip(header, line.split(','))) for line in lines[1:]]


def test_generate_prints_a_summary(tmp_path, capsys):
    out = tmp_path / 'b.nodf'
    assert main(['generate', '--kind', 'burgers', '--count', '2', '--res', '16', '--param', 'T=0.05',
                 '--out', str(out)]) == 0
    line = capsys.readouterr().out.strip().splitlines()[-1]
    assert line == '{} samples=2 bytes={}'.format(out, os.path.getsize(str(out)))
    assert read_dataset(str(out)).metadata['T'] == '0.05'


def test_generate_rejects_bad_flags(tmp_path):
    out = str(tmp_path / 'x.nodf')
    assert main(['generate', '--kind', 'darcy', '--count', '0', '--res', '8', '--out', out]) == 2
    assert main(['generate', '--kind', 'darcy', '--count', '1', '--res', '8', '--param', 'nu', '--out', out]) == 2
    assert main(['generate', '--kind', 'burgers', '--count', '1', '--res', '20', '--out', out]) == 2
    assert main(['generate', '--kind', 'heat', '--count', '1', '--res', '8', '--out', out]) == 2
    assert not os.path.exists(out)


def test_train_writes_outputs_and_is_reproducible(darcy_files, tmp_path, capsys):
    code, out = train(darcy_files, tmp_path, 'first')
    assert code == 0
    for name in ('model.nock', 'report.csv', 'summary.json', 'resolved.cfg', 'train.log'):
        assert (out / name).exists()
    assert 'Network structure:' in (out / 'train.log').read_text()
    printed = [line for line in capsys.readouterr().out.splitlines() if line.startswith('epoch ')]
    assert len(printed) == 2 and 'val_relL2@8' in printed[0]

    header, rows = read_report(out / 'report.csv')
    assert header == ['epoch', 'train_loss', 'lr', 'active_modes', 'wall_ms', 'val_relL2@16', 'val_relL2@8']
    assert [row['epoch'] for row in rows] == ['1', '2']
    assert rows[0]['active_modes'] == '4x4' and rows[0]['wall_ms'] == '0'

    summary = json.loads((out / 'summary.json').read_text())
    assert summary['best_epoch'] in (1, 2)
    assert summary['config']['width'] == 4
    assert summary['final_metrics']['val_relL2@16'] == float(rows[-1]['val_relL2@16'])

    code, again = train(darcy_files, tmp_path, 'second')
    assert code == 0
    assert (again / 'report.csv').read_text() == (out / 'report.csv').read_text()
    assert run_config(str(out / 'model.nock'))['seed'] == '0'


def test_eval_reproduces_the_reported_validation_error(darcy_files, tmp_path, capsys):
    code, out = train(darcy_files, tmp_path, 'run')
    assert code == 0
    _, rows = read_report(out / 'report.csv')
    capsys.readouterr()
    assert main(['eval', '--checkpoint', str(out / 'model.nock'), '--data', str(darcy_files / 'test.nodf'),
                 '--res', '16,8', '--h1']) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    values = [dict(item.split('=') for item in line.split()) for line in lines]
    assert values[0]['res'] == '16' and values[1]['res'] == '8'
    assert values[0]['relL2'] == rows[-1]['val_relL2@16']
    assert values[1]['relL2'] == rows[-1]['val_relL2@8']
    assert float(values[0]['relH1']) > 0

    assert main(['eval', '--checkpoint', str(out / 'model.nock'), '--data', str(darcy_files / 'test.nodf'),
                 '--res', '5']) == 2


def test_zero_learning_rate_keeps_the_initial_parameters(darcy_files, tmp_path, capsys):
    code, frozen = train(darcy_files, tmp_path, 'frozen', lr=0.0)
    assert code == 0
    code, initial = train(darcy_files, tmp_path, 'initial', epochs=0)
    assert code == 0
    _, trained, _ = read_checkpoint(str(frozen / 'model.nock'))
    _, untouched, _ = read_checkpoint(str(initial / 'model.nock'))
    assert parameters_equal(trained, untouched)

    header, rows = read_report(initial / 'report.csv')
    assert rows == [] and header[0] == 'epoch'

    _, rows = read_report(frozen / 'report.csv')
    capsys.readouterr()
    assert main(['eval', '--checkpoint', str(frozen / 'model.nock'), '--data', str(darcy_files / 'train.nodf'),
                 '--res', '16', '--n', '8']) == 0
    evaluated = float(capsys.readouterr().out.split('relL2=')[1])
    assert float(rows[-1]['train_loss']) == pytest.approx(evaluated, rel=1e-9)


def test_periodic_checkpoints(darcy_files, tmp_path):
    code, out = train(darcy_files, tmp_path, 'periodic', epochs=3, extra='save_checkpoint_epoch = 1\n')
    assert code == 0
    assert (out / 'model_epoch1.nock').exists() and (out / 'model_epoch2.nock').exists()
    assert not (out / 'model_epoch3.nock').exists()


def test_tiny_run_lowers_the_train_loss(tmp_path):
    data = tmp_path / 'data'
    data.mkdir()
    assert main(['generate', '--kind', 'darcy', '--count', '32', '--res', '16', '--seed', '3',
                 '--out', str(data / 'train.nodf')]) == 0
    cfg = tmp_path / 'tiny.cfg'
    cfg.write_text('train_path = {}\noutput_dir = {}\nn_train = 32\nwidth = 8\nn_layers = 2\nmodes = 4\n'
                   'epochs = 5\nbatch_size = 4\nlr = 3e-3\n'.format(data / 'train.nodf', tmp_path / 'tiny'))
    assert main(['train', '-c', str(cfg)]) == 0
    _, rows = read_report(tmp_path / 'tiny' / 'report.csv')
    assert len(rows) == 5
    assert float(rows[-1]['train_loss']) < float(rows[0]['train_loss'])


def test_incremental_modes_are_reported_and_stored(darcy_files, tmp_path):
    extra = 'incremental = true\nincremental_start = 2\nincremental_increment = 2\nincremental_step = 1\n'
    code, out = train(darcy_files, tmp_path, 'incremental', epochs=2, extra=extra)
    assert code == 0
    _, rows = read_report(out / 'report.csv')
    assert [row['active_modes'] for row in rows] == ['2x2', '4x4']
    pairs, _, _ = read_checkpoint(str(out / 'model.nock'))
    assert pairs['active_modes'] == '4,4'


def test_config_errors_exit_with_usage_code(darcy_files, tmp_path):
    code, out = train(darcy_files, tmp_path, 'typo', extra='widht = 32\n')
    assert code == 2
    assert not (out / 'model.nock').exists()
    code, _ = train(darcy_files, tmp_path, 'channels', extra='in_channels = 3\n')
    assert code == 2
    assert main(['train']) == 2


def test_infer_resynthesizes_on_finer_grids(darcy_files, tmp_path):
    code, out = train(darcy_files, tmp_path, 'infer', epochs=1)
    assert code == 0
    checkpoint = str(out / 'model.nock')
    pred = str(tmp_path / 'pred.nodf')
    assert main(['infer', '--checkpoint', checkpoint, '--input', str(darcy_files / 'test.nodf'),
                 '--sizes', '32', '--out', pred]) == 0
    stored = read_dataset(pred)
    assert stored.arrays['y_pred'].shape == (4, 1, 32, 32)
    assert stored.metadata['resolution'] == '32' and stored.metadata['checkpoint'] == 'model.nock'
    assert stored.metadata['bounds'] == read_dataset(str(darcy_files / 'test.nodf')).metadata['bounds']
    assert np.all(np.isfinite(stored.arrays['y_pred']))

    no_x = str(tmp_path / 'no_x.nodf')
    write_dataset(no_x, {'y': np.zeros((1, 1, 16, 16))}, {'kind': 'darcy'})
    assert main(['infer', '--checkpoint', checkpoint, '--input', no_x, '--sizes', '16', '--out', pred]) == 2
    assert main(['infer', '--checkpoint', checkpoint, '--input', str(darcy_files / 'test.nodf'),
                 '--sizes', '4', '--out', pred]) == 2


def test_selftest_suites_pass(capsys):
    assert main(['selftest']) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert [line.split()[0] for line in lines] == ['suite=fft', 'suite=gradients', 'suite=darcy', 'suite=burgers']
    assert all('status=pass' in line for line in lines)


class ExplodingModel(BaseModel):
    """ finishes one epoch, then reports a non-finite loss """
    def __init__(self, **kwargs):
        super(ExplodingModel, self).__init__(**kwargs)
        self.saved = []

    def train_step(self):
        if self.epoch == 2:
            raise FloatingPointError('non-finite loss nan at iteration 4')
        return OrderedDict([('train_loss', 0.5), ('lr', 1e-3), ('active_modes', (4,))])

    def val_step(self):
        return OrderedDict()

    def save_everything(self, path):
        self.saved.append(path)
        with open(path, 'wb') as handle:
            handle.write(b'NOCK')


def test_non_finite_loss_aborts_with_last_good_checkpoint(tmp_path):
    opt = dict_to_nonedict({
        'phase': 'train', 'record_wall_time': False, 'tensorboard': False,
        'train': {'batch_size': 4, 'epochs': 5, 'save_checkpoint_epoch': 0},
        'path': {'experiments_root': str(tmp_path), 'checkpoint': str(tmp_path / 'model.nock'),
                 'tb_logger': str(tmp_path / 'tb')},
    })
    logger = logging.getLogger('exploding')
    model = ExplodingModel(opt=opt, phase_loader=None, val_loaders=None, metrics=[], logger=logger,
                           writer=VisualWriter(opt, logger))
    with pytest.raises(TrainingAborted) as info:
        model.train()
    assert info.value.epoch == 2
    assert info.value.checkpoint == str(tmp_path / 'model.partial.nock')
    assert model.saved == [info.value.checkpoint]
    assert not (tmp_path / 'model.nock').exists()
    header, rows = read_report(tmp_path / 'report.csv')
    assert header == ['epoch', 'train_loss', 'lr', 'active_modes', 'wall_ms'] and len(rows) == 1


def test_report_rejects_out_of_order_rows():
    report = TrainReport([16])
    report.append(1, 0.5, 1e-3, (4,), 0, {16: 0.25})
    with pytest.raises(ValueError):
        report.append(1, 0.4, 1e-3, (4,), 0, {16: 0.2})
    with pytest.raises(ValueError):
        report.append(2, 0.4, 1e-3, (4,), 0, {})
    assert report.best_epoch() == 1
    assert report.rows[0]['val_relL2@16'] == '0.25'


def test_gno_trains_on_grid_samples(darcy_files, tmp_path):
    code, out = train(darcy_files, tmp_path, 'gno', epochs=1, extra='arch = gno\nradius = 0.15\nkernel_width = 4\n')
    assert code == 0
    _, rows = read_report(out / 'report.csv')
    assert len(rows) == 1 and rows[0]['active_modes'] == ''
    assert read_checkpoint(str(out / 'model.nock'))[0]['arch'] == 'gno'


def test_burgers_run_with_h1_loss(tmp_path):
    data = str(tmp_path / 'burgers.nodf')
    assert main(['generate', '--kind', 'burgers', '--count', '6', '--res', '32', '--param', 'T=0.05',
                 '--out', data]) == 0
    cfg = tmp_path / 'burgers.cfg'
    cfg.write_text('kind = burgers\ntrain_path = {0}\ntest_path = {0}\nn_train = 4\nn_test = 2\n'
                   'resolutions = 32,16\nwidth = 4\nn_layers = 2\nmodes = 6\nepochs = 1\nbatch_size = 2\n'
                   'loss = h1\npipeline = normalize_in,normalize_out,embed,pad\npadding_fraction = 0.125\n'
                   'positional_embedding = false\n'
                   'output_dir = {1}\n'.format(data, tmp_path / 'out'))
    assert main(['train', '-c', str(cfg)]) == 0
    _, rows = read_report(tmp_path / 'out' / 'report.csv')
    assert rows[0]['active_modes'] == '6'
    assert float(rows[0]['val_relL2@16']) > 0
