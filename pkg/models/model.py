from collections import OrderedDict

import numpy as np
import tqdm

import core.praser as Praser
from core.base_model import BaseModel
from core.logger import LogTracker
from core.optim import AdamState, IncrementalModes, StepLR, adam_step
from core.tensor import Tape, backward
from models.checkpoint import load_checkpoint, save_checkpoint
from models.metric import evaluate_loader, relative_l2


class OperatorModel(BaseModel):
    def __init__(self, networks, losses, processor, **kwargs):
        ''' must to init BaseModel with kwargs '''
        super(OperatorModel, self).__init__(**kwargs)

        ''' networks, dataloder, optimizer, losses, etc. '''
        self.netG = networks[0]
        self.print_network(self.netG)
        self.loss_fn = losses[0]
        self.processor = processor
        train_opt = self.opt['train']

        self.adam = AdamState(lr=train_opt['lr'])
        self.scheduler = StepLR(train_opt['lr'], train_opt['gamma'], train_opt['step_size'])
        self.incremental = None
        if hasattr(self.netG, 'spec'):
            self.incremental = IncrementalModes(self.netG.spec.modes, train_opt['incremental_start'],
                                                train_opt['incremental_increment'], train_opt['incremental_step'],
                                                enabled=train_opt['incremental'])
        self.resume_training()

        ''' can rewrite in inherited class for more informations logging '''
        self.train_metrics = LogTracker(self.loss_fn.__name__, phase='train')
        if not self.metrics:
            self.metrics = [relative_l2]

    def resume_training(self):
        """ warm start: parameters (and active modes) of a previous checkpoint """
        path = self.opt['train']['resume']
        if not path:
            return
        self.logger.info('Resume network weights from {}'.format(path))
        load_checkpoint(path, model=self.netG)

    def set_input(self, data):
        self.data = data
        self.batch_size = len(data['index'])

    def compute_loss(self):
        pre = self.processor.preprocess(self.data)
        output = self.netG.forward_grid(pre['x'])
        pred = self.processor.postprocess(output, self.data['x'].bounds)
        target = self.data['y']
        if self.opt['train']['loss_space'] == 'normalized':
            pred, target = self.processor.encode_target(pred), self.processor.encode_target(target)
        return self.loss_fn(pred, target)

    def schedule(self):
        """ lr and active modes for the current (1-based) epoch """
        lr = self.scheduler(self.epoch - 1)
        active = None
        if self.incremental is not None and self.incremental.enabled:
            active = self.incremental(self.epoch - 1)
        return lr, active

    def train_step(self):
        lr, active = self.schedule()
        self.adam.lr = lr
        if self.incremental is not None:
            self.netG.active_modes = active
        self.train_metrics.reset()

        params = self.netG.parameters()
        for data in tqdm.tqdm(self.phase_loader, desc='epoch {}'.format(self.epoch)):
            self.set_input(data)
            with Tape():
                loss = self.compute_loss()
                value = loss.item()
                if not np.isfinite(value):
                    raise FloatingPointError('non-finite loss {} at iteration {}'.format(value, self.iter))
                grads = backward(loss)
            named = OrderedDict()
            for name, p in params.items():
                g = grads[p] if p in grads else np.zeros(p.shape, dtype=p.data.dtype)
                if not np.all(np.isfinite(g)):
                    raise FloatingPointError('non-finite gradient for parameter [{}]'.format(name))
                named[name] = g
            params = adam_step(params, named, self.adam)
            self.netG.set_parameters(params)

            self.iter += self.batch_size
            self.train_metrics.update(self.loss_fn.__name__, value, n=self.batch_size)

        modes = active if active is not None else (self.incremental.max_modes if self.incremental else ())
        return OrderedDict([
            ('train_loss', self.train_metrics.avg(self.loss_fn.__name__)),
            ('lr', lr),
            ('active_modes', modes),
        ])

    def val_step(self):
        val_log = OrderedDict()
        for res, loader in self.val_loaders.items():
            result = evaluate_loader(self.netG, self.processor, loader, self.metrics, phase='val')
            val_log[res] = result['relL2'] if 'relL2' in result else list(result.values())[0]
        return val_log

    def save_everything(self, path):
        save_checkpoint(self.netG, path, opt=self.run_config(), processor=self.processor)

    def run_config(self):
        return Praser.run_pairs(self.opt)

    def parameter_count(self):
        return self.netG.parameter_count()
