import os
import time
from abc import abstractmethod
from collections import OrderedDict

import pandas as pd

import core.util as Util
from core.optim import format_modes


class TrainingAborted(RuntimeError):
    """ non-finite loss or gradient; ``checkpoint`` holds the last-good parameters """
    def __init__(self, message, checkpoint=None, epoch=None):
        super(TrainingAborted, self).__init__(message)
        self.checkpoint = checkpoint
        self.epoch = epoch


class TrainReport():
    """ one row per finished epoch, values kept as their CSV text """
    def __init__(self, resolutions):
        self.resolutions = tuple(resolutions)
        self.rows = []

    @property
    def columns(self):
        return ['epoch', 'train_loss', 'lr', 'active_modes', 'wall_ms'] + \
            ['val_relL2@{}'.format(res) for res in self.resolutions]

    def append(self, epoch, train_loss, lr, active_modes, wall_ms, val_metrics):
        if self.rows and epoch <= int(self.rows[-1]['epoch']):
            raise ValueError('report epochs must increase, got {} after {}'.format(epoch, self.rows[-1]['epoch']))
        missing = [res for res in self.resolutions if res not in val_metrics]
        if missing:
            raise ValueError('validation metrics missing for resolutions {}'.format(missing))
        row = OrderedDict([
            ('epoch', str(epoch)),
            ('train_loss', repr(float(train_loss))),
            ('lr', repr(float(lr))),
            ('active_modes', format_modes(active_modes)),
            ('wall_ms', str(int(wall_ms))),
        ])
        for res in self.resolutions:
            row['val_relL2@{}'.format(res)] = repr(float(val_metrics[res]))
        self.rows.append(row)
        return row

    def __len__(self):
        return len(self.rows)

    def to_frame(self):
        return pd.DataFrame(self.rows, columns=self.columns)

    def write_csv(self, path):
        self.to_frame().to_csv(path, index=False)

    def best_epoch(self):
        """ epoch with the lowest validation error at the first resolution """
        if not self.rows or not self.resolutions:
            return None
        key = 'val_relL2@{}'.format(self.resolutions[0])
        best = min(self.rows, key=lambda row: float(row[key]))
        return int(best['epoch'])


class BaseModel():
    def __init__(self, opt, phase_loader, val_loaders, metrics, logger, writer):
        """ init model with basic input, which are from __init__(**kwargs) function in inherited class """
        self.opt = opt
        self.phase = opt['phase']

        ''' process record '''
        self.batch_size = self.opt['train']['batch_size']
        self.epoch = 0
        self.iter = 0

        self.phase_loader = phase_loader
        self.val_loaders = val_loaders if val_loaders is not None else OrderedDict()
        self.metrics = metrics

        ''' logger to log file, writer to tensorboard '''
        self.logger = logger
        self.writer = writer
        self.report = TrainReport(self.val_loaders.keys())

    def train(self):
        epochs = self.opt['train']['epochs']
        root = self.opt['path']['experiments_root']
        while self.epoch < epochs:
            self.epoch += 1
            start = time.time()

            try:
                train_log = self.train_step()
            except FloatingPointError as e:
                self.abort(str(e))

            val_log = OrderedDict()
            if not self.val_loaders:
                self.logger.warning('Validation stop where dataloader is None, Skip it.')
            else:
                val_log = self.val_step()
            wall_ms = int(round((time.time() - start) * 1000.0))

            ''' print logged informations to the screen and tensorboard '''
            self.report.append(self.epoch, train_log['train_loss'], train_log['lr'], train_log['active_modes'],
                               wall_ms if self.opt['record_wall_time'] else 0, val_log)
            line = 'epoch {:d} train_loss {:.6e} lr {:.3e}'.format(self.epoch, train_log['train_loss'], train_log['lr'])
            for res, value in val_log.items():
                line += ' val_relL2@{} {:.6e}'.format(res, value)
            self.logger.info('{} ({} ms)'.format(line, wall_ms))
            print(line)
            self.writer.set_iter(self.epoch, self.iter, phase='train')
            self.writer.add_scalar('loss', train_log['train_loss'])
            self.writer.add_scalar('lr', train_log['lr'])
            self.writer.set_iter(self.epoch, self.iter, phase='val')
            for res, value in val_log.items():
                self.writer.add_scalar('relL2@{}'.format(res), value)

            every = self.opt['train']['save_checkpoint_epoch']
            if every and self.epoch % every == 0 and self.epoch < epochs:
                self.logger.info('Saving the model at the end of epoch {:.0f}'.format(self.epoch))
                self.save_everything(os.path.join(root, 'model_epoch{}.nock'.format(self.epoch)))
        self.logger.info('Number of Epochs has reached the limit, End.')
        return self.finish()

    def finish(self):
        root = self.opt['path']['experiments_root']
        self.save_everything(self.opt['path']['checkpoint'])
        self.report.write_csv(os.path.join(root, 'report.csv'))
        Util.write_json(self.summary(), os.path.join(root, 'summary.json'))
        self.logger.info('Saved model.nock, report.csv and summary.json into {}'.format(root))
        return self.report

    def abort(self, reason):
        """ keep the parameters of the last finished step and stop """
        root = self.opt['path']['experiments_root']
        path = os.path.join(root, 'model.partial.nock')
        self.save_everything(path)
        self.report.write_csv(os.path.join(root, 'report.csv'))
        message = 'training aborted in epoch {}: {}; last-good parameters in {}'.format(self.epoch, reason, path)
        self.logger.error(message)
        raise TrainingAborted(message, checkpoint=path, epoch=self.epoch)

    def summary(self):
        final = OrderedDict()
        if self.report.rows:
            last = self.report.rows[-1]
            final = OrderedDict((k, float(v)) for k, v in last.items() if k.startswith('val_') or k == 'train_loss')
        return OrderedDict([
            ('config', self.run_config()),
            ('best_epoch', self.report.best_epoch()),
            ('final_metrics', final),
            ('parameter_count', self.parameter_count()),
        ])

    @abstractmethod
    def train_step(self):
        raise NotImplementedError('You must specify how to train your networks.')

    @abstractmethod
    def val_step(self):
        raise NotImplementedError('You must specify how to do validation on your networks.')

    @abstractmethod
    def save_everything(self, path):
        raise NotImplementedError('You must specify how to save your networks and processors.')

    def run_config(self):
        return OrderedDict()

    def parameter_count(self):
        return 0

    def print_network(self, network):
        n = network.parameter_count()
        self.logger.info('Network structure: {}, with parameters: {:,d}'.format(network.__class__.__name__, n))
        for name, p in network.parameters().items():
            self.logger.info('  {} {} {}'.format(name, p.elem_kind, p.shape))
