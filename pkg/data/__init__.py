from collections import OrderedDict

import numpy as np

import core.util as Util
from data.util.rng import Rng


class DataLoader():
    """
    batches of a BaseDataset in order, or in a fresh permutation every epoch
    drawn from one seeded stream
    """
    def __init__(self, dataset, batch_size=1, shuffle=False, seed=0):
        if batch_size < 1:
            raise ValueError('batch_size must be >= 1, got {}'.format(batch_size))
        self.dataset = dataset
        self.batch_size = batch_size
        self.shuffle = shuffle
        self.rng = Rng(seed)

    def __len__(self):
        return (len(self.dataset) + self.batch_size - 1) // self.batch_size

    def __iter__(self):
        n = len(self.dataset)
        order = self.rng.permutation(n) if self.shuffle else np.arange(n)
        for start in range(0, n, self.batch_size):
            yield self.dataset[order[start:start + self.batch_size]]


def define_dataloader(logger, opt):
    """
    train loader over the training file and one validation loader per
    configured resolution, all drawn from the test file
    """
    from data.dataset import OperatorDataset
    data_opt, train_opt = opt['data'], opt['train']
    seeds = Util.derive_seeds(opt['seed'])

    phase_dataset = OperatorDataset(data_opt['train_path'], data_opt['n_train'], data_opt['train_resolution'])
    logger.info('Dataset for train have {} samples at resolution {}.'.format(len(phase_dataset), phase_dataset.resolution))
    dataloader = DataLoader(phase_dataset, batch_size=train_opt['batch_size'], shuffle=True, seed=seeds['shuffle'])

    val_loaders = OrderedDict()
    if data_opt['test_path']:
        for res in validation_resolutions(opt, phase_dataset.resolution):
            val_dataset = OperatorDataset(data_opt['test_path'], data_opt['n_test'], res)
            logger.info('Dataset for val have {} samples at resolution {}.'.format(len(val_dataset), res))
            val_loaders[res] = DataLoader(val_dataset, batch_size=train_opt['batch_size'])
    else:
        logger.warning('No test_path configured, validation is skipped.')
    return dataloader, val_loaders


def validation_resolutions(opt, train_resolution):
    return tuple(opt['data']['resolutions']) or (train_resolution,)


def define_processor(logger, opt, dataset):
    from data.processor import DataProcessor
    pipeline = opt['data']['pipeline']
    pad = opt['model']['padding_fraction'] if 'pad' in pipeline else 0.0
    processor = DataProcessor(pipeline, pad).fit(dataset)
    logger.info('Data processor [{}] fitted on {} training samples.'.format(','.join(pipeline) or 'identity', len(dataset)))
    return processor
