"""
Model-ready transforms: per-channel normalization, coordinate embedding, domain
padding and strided subsampling. Statistics are per-channel scalars fitted on
the training split, so a processor applies at any resolution.
"""
from collections import OrderedDict

import numpy as np

from core.base_dataset import GridFunction
from core.tensor import Tensor, add, as_tensor, div, mul, sub

EPS = 1e-8
PIPELINE_STEPS = ('normalize_in', 'normalize_out', 'embed', 'pad')


def subsample_array(data, factor):
    """ keep indices 0, factor, 2 factor, .. on every spatial axis of [B, C, ..] """
    data = np.asarray(data)
    if factor < 1 or any(n % factor for n in data.shape[2:]):
        raise ValueError('factor {} does not divide grid sizes {}'.format(factor, data.shape[2:]))
    index = (slice(None), slice(None)) + (slice(None, None, factor),) * (data.ndim - 2)
    return np.ascontiguousarray(data[index])


def subsample(x, factor):
    x = x if isinstance(x, GridFunction) else GridFunction(x)
    return x.replace(data=Tensor(subsample_array(x.data.data, factor)))


class Normalizer():
    def __init__(self, eps=EPS):
        self.eps = eps
        self.mean = None
        self.std = None

    @property
    def fitted(self):
        return self.mean is not None

    def fit(self, data):
        """ mean and std per channel over samples and grid points of [S, C, ..] """
        data = np.asarray(data, dtype=np.float64)
        axes = (0,) + tuple(range(2, data.ndim))
        self.mean = data.mean(axis=axes)
        self.std = data.std(axis=axes)
        return self

    def _stats(self, x):
        if not self.fitted:
            raise ValueError('normalizer used before fit')
        if x.shape[1] != self.mean.shape[0]:
            raise ValueError('normalizer fitted on {} channels, data has {}'.format(self.mean.shape[0], x.shape[1]))
        shape = (1, -1) + (1,) * (x.ndim - 2)
        return Tensor(self.mean.reshape(shape)), Tensor((self.std + self.eps).reshape(shape))

    def encode(self, x):
        x = as_tensor(x)
        mean, scale = self._stats(x)
        return div(sub(x, mean), scale)

    def decode(self, x):
        x = as_tensor(x)
        mean, scale = self._stats(x)
        return add(mul(x, scale), mean)

    def state_dict(self, prefix):
        return OrderedDict([(prefix + 'mean', self.mean), (prefix + 'std', self.std)])

    def load(self, mean, std):
        self.mean = np.asarray(mean, dtype=np.float64)
        self.std = np.asarray(std, dtype=np.float64)
        return self


class DataProcessor():
    """
    preprocess: normalize inputs (and targets), append coordinates, pad;
    postprocess: undo the padding and the target normalization
    """
    def __init__(self, pipeline=(), pad_fraction=0.0):
        pipeline = tuple(pipeline)
        for step in pipeline:
            if step not in PIPELINE_STEPS:
                raise ValueError('unknown pipeline step [{}]'.format(step))
        self.pipeline = pipeline
        self.pad_fraction = float(pad_fraction)
        self.in_normalizer = Normalizer()
        self.out_normalizer = Normalizer()
        self._record = None

    def fit(self, dataset):
        if 'normalize_in' in self.pipeline:
            self.in_normalizer.fit(dataset.x)
        if 'normalize_out' in self.pipeline:
            self.out_normalizer.fit(dataset.y)
        return self

    def extra_channels(self, d):
        """ coordinate channels appended by the embed step """
        return d if 'embed' in self.pipeline else 0

    def preprocess(self, sample):
        from models.nn import domain_pad, grid_embedding
        x, y = sample['x'], sample['y']
        data = x.data
        if 'normalize_in' in self.pipeline:
            data = self.in_normalizer.encode(data)
        x = x.replace(data=data)
        if 'embed' in self.pipeline:
            x = grid_embedding(x)
        if 'pad' in self.pipeline:
            data, self._record = domain_pad(x, self.pad_fraction)
            x = GridFunction(data, x.bounds)
        out = dict(sample)
        out['x'] = x
        out['y'] = y
        return out

    def padded_sizes(self, sizes):
        """ grid sizes the network sees for a target resolution """
        from models.nn import pad_widths
        if 'pad' not in self.pipeline:
            return tuple(sizes)
        return tuple(n + p for n, p in zip(sizes, pad_widths(sizes, self.pad_fraction)))

    def postprocess(self, output, bounds=None, sizes=None):
        """ ``sizes`` names the unpadded output grid when it differs from the input grid """
        from models.nn import PadRecord, domain_unpad, pad_widths
        output = output if isinstance(output, GridFunction) else GridFunction(output, bounds)
        if 'pad' in self.pipeline and self._record is not None:
            record = self._record
            if sizes is not None and tuple(sizes) != record.sizes:
                record = PadRecord(tuple(sizes), pad_widths(sizes, self.pad_fraction))
            output = domain_unpad(output, record, bounds)
        if 'normalize_out' in self.pipeline:
            output = output.replace(data=self.out_normalizer.decode(output.data))
        return output

    def encode_target(self, y):
        if 'normalize_out' in self.pipeline:
            return y.replace(data=self.out_normalizer.encode(y.data))
        return y

    def state_dict(self):
        state = OrderedDict()
        if self.in_normalizer.fitted:
            state.update(self.in_normalizer.state_dict('in.'))
        if self.out_normalizer.fitted:
            state.update(self.out_normalizer.state_dict('out.'))
        state['pad_fraction'] = np.array([self.pad_fraction])
        return state

    @classmethod
    def from_state(cls, pipeline, state):
        pad = float(state['pad_fraction'][0]) if 'pad_fraction' in state else 0.0
        processor = cls(pipeline, pad)
        if 'in.mean' in state:
            processor.in_normalizer.load(state['in.mean'], state['in.std'])
        if 'out.mean' in state:
            processor.out_normalizer.load(state['out.mean'], state['out.std'])
        for step, normalizer in (('normalize_in', processor.in_normalizer), ('normalize_out', processor.out_normalizer)):
            if step in pipeline and not normalizer.fitted:
                raise ValueError('pipeline step [{}] has no stored statistics'.format(step))
        return processor


def data_processor(pipeline, sample, processor=None):
    """ apply a fitted processor, or the identity when the pipeline is empty """
    if processor is None:
        processor = DataProcessor(pipeline)
    return processor.preprocess(sample)
