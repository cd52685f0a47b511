import os
import logging
import pandas as pd

LOG_FORMAT = '%(asctime)s.%(msecs)03d - %(levelname)s: %(message)s'
LOG_DATEFMT = '%y-%m-%d %H:%M:%S'


class InfoLogger():
    """
    phase logger writing <experiments_root>/<phase>.log, echoed to the screen on request
    """
    def __init__(self, opt):
        self.phase = opt['phase']
        self.log_file = os.path.abspath(os.path.join(opt['path']['experiments_root'], '{}.log'.format(self.phase)))
        self.logger = attach_file_logger(self.phase, self.log_file, screen=bool(opt['screen']))

    def debug(self, msg, *args, **kwargs):
        self.logger.debug(msg, *args, **kwargs)

    def info(self, msg, *args, **kwargs):
        self.logger.info(msg, *args, **kwargs)

    def warning(self, msg, *args, **kwargs):
        self.logger.warning(msg, *args, **kwargs)

    def error(self, msg, *args, **kwargs):
        self.logger.error(msg, *args, **kwargs)


def attach_file_logger(name, log_file, level=logging.INFO, screen=False):
    ''' handlers of a previous run pointing at another file are dropped '''
    l = logging.getLogger(name)
    l.setLevel(level)
    l.propagate = False
    if any(getattr(h, 'baseFilename', None) == log_file for h in l.handlers):
        return l
    for h in list(l.handlers):
        l.removeHandler(h)
        h.close()
    formatter = logging.Formatter(LOG_FORMAT, datefmt=LOG_DATEFMT)
    handlers = [logging.FileHandler(log_file, mode='a+')]
    if screen:
        handlers.append(logging.StreamHandler())
    for h in handlers:
        h.setFormatter(formatter)
        l.addHandler(h)
    return l


class VisualWriter():
    """
    tensorboardX scalar writer tagged '<phase>/<name>' at the current iteration;
    add_scalar does nothing when tensorboard is off or not installed
    """
    def __init__(self, opt, logger):
        self.writer = None
        self.epoch, self.iter, self.phase = 0, 0, ''
        if not opt['tensorboard']:
            return
        try:
            from tensorboardX import SummaryWriter
        except ImportError:
            logger.warning('Tensorboard is enabled but tensorboardX is not installed; '
                           'install it with \'pip install tensorboardx\' or set tensorboard=false.')
            return
        self.writer = SummaryWriter(str(opt['path']['tb_logger']))

    def set_iter(self, epoch, iter, phase='train'):
        self.epoch, self.iter, self.phase = epoch, iter, phase

    def add_scalar(self, tag, value):
        if self.writer is not None:
            self.writer.add_scalar('{}/{}'.format(self.phase, tag), value, self.iter)

    def close(self):
        if self.writer is not None:
            self.writer.close()
            self.writer = None


class LogTracker:
    """
    running averages of scalar metrics for one phase
    """
    def __init__(self, *keys, phase='train'):
        self.phase = phase
        self._data = pd.DataFrame(0.0, index=list(keys), columns=['total', 'counts'])

    def reset(self):
        self._data.loc[:, :] = 0.0

    def update(self, key, value, n=1):
        self._data.loc[key, 'total'] += value * n
        self._data.loc[key, 'counts'] += n

    def avg(self, key):
        row = self._data.loc[key]
        return float(row['total'] / row['counts'])
