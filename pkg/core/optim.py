"""
Adam with bias correction, step decay of the learning rate and the epoch-driven
schedule that grows the active Fourier modes during training.
"""
from collections import OrderedDict

import numpy as np

from core.tensor import Tensor


class AdamState():
    def __init__(self, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = OrderedDict()
        self.v = OrderedDict()


def _real_view(array):
    """ complex entries as independent (re, im) pairs """
    array = np.ascontiguousarray(array)
    return array.view(np.float64) if np.iscomplexobj(array) else array


def adam_step(params, grads, state):
    """
    one Adam update of every named parameter; returns new leaf tensors by name.
    Parameters are immutable, so the caller swaps them in with ``set_parameters``.
    """
    for name, grad in grads.items():
        if not np.all(np.isfinite(grad)):
            raise ValueError('non-finite gradient for parameter [{}]'.format(name))
    state.t += 1
    t = state.t
    b1, b2 = state.beta1, state.beta2
    correction1 = 1.0 - b1 ** t
    correction2 = 1.0 - b2 ** t
    updated = OrderedDict()
    for name, param in params.items():
        grad = grads[name]
        if tuple(np.shape(grad)) != tuple(param.shape):
            raise ValueError('gradient of [{}] has shape {}, parameter {}'.format(name, np.shape(grad), param.shape))
        g = _real_view(np.asarray(grad, dtype=param.data.dtype))
        if name not in state.m:
            state.m[name] = np.zeros_like(g)
            state.v[name] = np.zeros_like(g)
        m = b1 * state.m[name] + (1.0 - b1) * g
        v = b2 * state.v[name] + (1.0 - b2) * g * g
        state.m[name], state.v[name] = m, v
        step = state.lr * (m / correction1) / (np.sqrt(v / correction2) + state.eps)
        value = _real_view(param.data) - step
        if param.is_complex:
            value = value.view(np.complex128)
        updated[name] = Tensor(value.reshape(param.shape), requires_grad=True, name=name)
    return updated


class StepLR():
    def __init__(self, lr, gamma=0.5, step_size=100):
        if not 0.0 < gamma <= 1.0:
            raise ValueError('gamma must be in (0, 1], got {}'.format(gamma))
        if step_size < 1:
            raise ValueError('step_size must be >= 1, got {}'.format(step_size))
        self.lr = lr
        self.gamma = gamma
        self.step_size = step_size

    def __call__(self, epoch):
        return step_lr(self, epoch)


def step_lr(schedule, epoch):
    """ lr0 * gamma ** floor(epoch / step_size), epochs counted from 0 """
    return schedule.lr * schedule.gamma ** (epoch // schedule.step_size)


class IncrementalModes():
    """ active modes start small and grow every ``step`` epochs up to ``max_modes`` """
    def __init__(self, max_modes, start_modes=None, increment=1, step=10, enabled=True):
        max_modes = tuple(int(m) for m in max_modes)
        start_modes = max_modes if start_modes is None else tuple(int(m) for m in start_modes)
        if len(start_modes) == 1 and len(max_modes) > 1:
            start_modes = start_modes * len(max_modes)
        if len(start_modes) != len(max_modes):
            raise ValueError('start modes {} and max modes {} differ in rank'.format(start_modes, max_modes))
        if any(s < 1 or s > m for s, m in zip(start_modes, max_modes)):
            raise ValueError('start modes {} must lie in [1, {}]'.format(start_modes, max_modes))
        if increment < 1 or step < 1:
            raise ValueError('increment and step must be >= 1, got {} and {}'.format(increment, step))
        self.max_modes = max_modes
        self.start_modes = start_modes
        self.increment = increment
        self.step = step
        self.enabled = enabled

    def __call__(self, epoch):
        return incremental_modes(self, epoch)


def incremental_modes(schedule, epoch):
    if not schedule.enabled:
        return schedule.max_modes
    grown = (epoch // schedule.step) * schedule.increment
    return tuple(min(m, s + grown) for s, m in zip(schedule.start_modes, schedule.max_modes))


def format_modes(modes):
    return 'x'.join(str(m) for m in modes)
