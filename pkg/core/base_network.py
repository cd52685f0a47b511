from collections import OrderedDict

import numpy as np

from core.tensor import Tensor
from data.util.rng import Rng


class Module():
    """
    Parameter registry over attributes: trainable tensors, sub-modules and lists
    of either. Parameters are immutable leaves, so updates replace them by name.
    """
    def named_parameters(self, prefix=''):
        for name, value in vars(self).items():
            if isinstance(value, Tensor) and value.requires_grad:
                yield prefix + name, value
            elif isinstance(value, Module):
                yield from value.named_parameters('{}{}.'.format(prefix, name))
            elif isinstance(value, list):
                for i, item in enumerate(value):
                    if isinstance(item, Tensor) and item.requires_grad:
                        yield '{}{}.{}'.format(prefix, name, i), item
                    elif isinstance(item, Module):
                        yield from item.named_parameters('{}{}.{}.'.format(prefix, name, i))

    def parameters(self):
        return OrderedDict(self.named_parameters())

    def modules(self):
        yield self
        for value in vars(self).values():
            items = value if isinstance(value, list) else [value]
            for item in items:
                if isinstance(item, Module):
                    yield from item.modules()

    def parameter_count(self):
        """ trainable scalars, complex entries counting twice """
        return sum(p.size * (2 if p.is_complex else 1) for p in self.parameters().values())

    def set_parameters(self, mapping):
        for name, tensor in mapping.items():
            owner, attr = self._resolve(name)
            if isinstance(owner, list):
                owner[int(attr)] = tensor
            else:
                setattr(owner, attr, tensor)

    def _resolve(self, name):
        parts = name.split('.')
        owner = self
        for part in parts[:-1]:
            owner = owner[int(part)] if isinstance(owner, list) else getattr(owner, part)
        return owner, parts[-1]

    def state_dict(self):
        return OrderedDict((name, np.array(p.data)) for name, p in self.named_parameters())

    def load_state_dict(self, state, strict=True):
        current = self.parameters()
        missing = [k for k in current if k not in state]
        unexpected = [k for k in state if k not in current]
        if strict and (missing or unexpected):
            raise ValueError('parameter mismatch, missing {} unexpected {}'.format(missing, unexpected))
        update = OrderedDict()
        for name, p in current.items():
            if name not in state:
                continue
            array = np.asarray(state[name])
            if array.shape != p.shape or np.iscomplexobj(array) != p.is_complex:
                raise ValueError('parameter [{}] expects {} {}, got {} {}'.format(
                    name, p.elem_kind, p.shape, 'complex128' if np.iscomplexobj(array) else 'real64', array.shape))
            update[name] = Tensor(array, requires_grad=True, name=name)
        self.set_parameters(update)

    def reset_parameters(self, rng):
        pass


class BaseNetwork(Module):
    def __init__(self, seed=0):
        super(BaseNetwork, self).__init__()
        self.seed = seed

    def init_weights(self):
        """
        every layer draws from one stream in construction order, so a seed fixes
        the whole network
        """
        rng = Rng(self.seed)
        for module in self.modules():
            if module is not self:
                module.reset_parameters(rng)
