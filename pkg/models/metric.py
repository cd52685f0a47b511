from collections import OrderedDict

import tqdm

from core.logger import LogTracker
from models.loss import H1Loss, LpLoss


def relative_l2(pred, target):
    return LpLoss(2.0)(pred, target)


def relative_h1(pred, target):
    return H1Loss()(pred, target)


relative_l2.__name__ = 'relL2'
relative_h1.__name__ = 'relH1'


def predict(network, processor, data, output_sizes=None):
    """ physical-space prediction for one batch, padding and normalization undone """
    pre = processor.preprocess(data) if processor is not None else data
    output = network.forward_grid(pre['x'], output_sizes)
    if processor is None:
        return output
    return processor.postprocess(output, data['x'].bounds)


def evaluate_loader(network, processor, loader, metrics=(relative_l2,), phase='val', progress=False):
    """
    sample-weighted mean of every metric over the loader; metrics are batch
    means, so a batch of b samples counts b times
    """
    tracker = LogTracker(*[m.__name__ for m in metrics], phase=phase)
    batches = tqdm.tqdm(loader, desc=phase) if progress else loader
    for data in batches:
        pred = predict(network, processor, data)
        n = len(data['index'])
        for metric in metrics:
            tracker.update(metric.__name__, metric(pred, data['y']).item(), n=n)
    return OrderedDict((m.__name__, tracker.avg(m.__name__)) for m in metrics)
