"""
Dense real/complex tensors with reverse-mode differentiation on an explicit tape.

Every differentiable operation is a ``Function`` subclass with a static
``forward``/``backward`` pair, recorded on the active ``Tape`` when one of its
inputs requires a gradient. Gradients of complex tensors follow the convention
``dL/dRe + 1j * dL/dIm``.
"""
import threading
from collections import namedtuple, OrderedDict
from types import SimpleNamespace

import numpy as np

REAL = 'real64'
COMPLEX = 'complex128'
_DTYPES = {REAL: np.float64, COMPLEX: np.complex128}

GELU_C = np.sqrt(2.0 / np.pi)
GELU_A = 0.044715

Node = namedtuple('Node', 'function ctx inputs')

_local = threading.local()


def _tape_stack():
    if not hasattr(_local, 'stack'):
        _local.stack = []
    return _local.stack


def active_tape():
    stack = _tape_stack()
    return stack[-1] if stack else None


class Tensor():
    """ immutable n-dimensional array; ``node`` points into the tape that produced it """
    __array_priority__ = 100

    def __init__(self, data, requires_grad=False, name=None, copy=True):
        data = np.array(data, copy=copy) if copy else np.asarray(data)
        if np.iscomplexobj(data):
            data = data.astype(np.complex128, copy=False)
        else:
            data = data.astype(np.float64, copy=False)
        if data.flags.writeable:
            data.setflags(write=False)
        self.data = data
        self.requires_grad = bool(requires_grad)
        self.name = name
        self.node = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    @property
    def elem_kind(self):
        return COMPLEX if self.is_complex else REAL

    @property
    def is_complex(self):
        return self.data.dtype == np.complex128

    def numpy(self):
        return np.array(self.data)

    def item(self):
        if self.data.size != 1:
            raise ValueError('item() needs a single element, tensor has shape {}'.format(self.shape))
        return self.data.reshape(-1)[0].item()

    def __repr__(self):
        return 'Tensor(shape={}, kind={}, requires_grad={})'.format(self.shape, self.elem_kind, self.requires_grad)

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return mul(self, -1.0)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = shape[0]
        return reshape(self, shape)

    def permute(self, *axes):
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = axes[0]
        return permute(self, axes)

    def sum(self, axes=None):
        return reduce('sum', self, axes)

    def mean(self, axes=None):
        return reduce('mean', self, axes)


class Tape():
    """
    append-only record of differentiable operations; node ids are topologically
    ordered because inputs are registered before the node that consumes them
    """
    def __init__(self):
        self.nodes = []
        self.generation = 0
        self._leaf_ids = {}
        self._leaves = []

    def __enter__(self):
        _tape_stack().append(self)
        return self

    def __exit__(self, *exc):
        stack = _tape_stack()
        if stack and stack[-1] is self:
            stack.pop()
        return False

    def __len__(self):
        return len(self.nodes)

    def owns(self, tensor):
        return tensor.node is not None and tensor.node[0] is self and tensor.node[1] == self.generation

    def node_id(self, tensor):
        """ id of a tensor on this tape, registering leaves on first use; None for constants """
        if not tensor.requires_grad:
            return None
        if self.owns(tensor):
            return tensor.node[2]
        key = id(tensor)
        if key not in self._leaf_ids:
            self._leaf_ids[key] = len(self.nodes)
            self._leaves.append(tensor)
            self.nodes.append(Node(None, None, ()))
        return self._leaf_ids[key]

    def leaves(self):
        return [(t, self._leaf_ids[id(t)]) for t in self._leaves]

    def record(self, function, ctx, inputs, out):
        ids = tuple(self.node_id(t) for t in inputs)
        out.node = (self, self.generation, len(self.nodes))
        self.nodes.append(Node(function, ctx, ids))
        return out

    def reset(self):
        self.nodes = []
        self._leaf_ids = {}
        self._leaves = []
        self.generation += 1


class Function():
    """ base for recorded operations, in the spirit of torch.autograd.Function """
    @staticmethod
    def forward(ctx, *arrays):
        raise NotImplementedError('You must specify the forward rule.')

    @staticmethod
    def backward(ctx, grad):
        raise NotImplementedError('You must specify the backward rule.')

    @classmethod
    def apply(cls, *inputs, **params):
        tensors = [as_tensor(x) for x in inputs]
        ctx = SimpleNamespace(**params)
        ctx.shapes = [t.shape for t in tensors]
        ctx.complex_inputs = [t.is_complex for t in tensors]
        out = Tensor(cls.forward(ctx, *[t.data for t in tensors]), copy=False)
        tape = active_tape()
        if tape is not None and any(t.requires_grad for t in tensors):
            out.requires_grad = True
            tape.record(cls, ctx, tensors, out)
        return out


def as_tensor(x):
    if isinstance(x, Tensor):
        return x
    return Tensor(x)


def create(shape, elem_kind=REAL, fill=None, values=None, requires_grad=False, name=None):
    shape = tuple(int(s) for s in shape)
    if len(shape) == 0 or any(s < 1 for s in shape):
        raise ValueError('shape must be nonempty with every dimension >= 1, got {}'.format(shape))
    if elem_kind not in _DTYPES:
        raise TypeError('unknown element kind [{}]'.format(elem_kind))
    dtype = _DTYPES[elem_kind]
    if values is not None:
        flat = np.asarray(values, dtype=dtype).reshape(-1)
        if flat.size != int(np.prod(shape)):
            raise ValueError('{} values do not fill shape {} ({} elements)'.format(flat.size, shape, int(np.prod(shape))))
        data = flat.reshape(shape)
    else:
        data = np.full(shape, 0 if fill is None else fill, dtype=dtype)
    return Tensor(data, requires_grad=requires_grad, name=name)


def _unbroadcast(grad, shape, is_complex):
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    if not is_complex and np.iscomplexobj(grad):
        grad = grad.real
    return grad


def _broadcast_shape(a, b):
    if len(a) != len(b):
        raise ValueError('operands of rank {} and {} cannot be combined, ranks must match'.format(len(a), len(b)))
    out = []
    for axis, (m, n) in enumerate(zip(a, b)):
        if m != n and m != 1 and n != 1:
            raise ValueError('shapes {} and {} are incompatible on axis {}'.format(a, b, axis))
        out.append(max(m, n))
    return tuple(out)


def _operands(a, b):
    """ promote python scalars to constants of the other operand's rank """
    if not isinstance(a, Tensor) and not isinstance(b, Tensor):
        raise TypeError('at least one operand must be a Tensor')
    if not isinstance(a, Tensor):
        a = Tensor(np.asarray(a).reshape((1,) * b.ndim))
    if not isinstance(b, Tensor):
        b = Tensor(np.asarray(b).reshape((1,) * a.ndim))
    _broadcast_shape(a.shape, b.shape)
    return a, b


class Add(Function):
    @staticmethod
    def forward(ctx, a, b):
        return a + b

    @staticmethod
    def backward(ctx, grad):
        return (_unbroadcast(grad, ctx.shapes[0], ctx.complex_inputs[0]),
                _unbroadcast(grad, ctx.shapes[1], ctx.complex_inputs[1]))


class Sub(Function):
    @staticmethod
    def forward(ctx, a, b):
        return a - b

    @staticmethod
    def backward(ctx, grad):
        return (_unbroadcast(grad, ctx.shapes[0], ctx.complex_inputs[0]),
                _unbroadcast(-grad, ctx.shapes[1], ctx.complex_inputs[1]))


class Mul(Function):
    @staticmethod
    def forward(ctx, a, b):
        ctx.a, ctx.b = a, b
        return a * b

    @staticmethod
    def backward(ctx, grad):
        return (_unbroadcast(grad * np.conj(ctx.b), ctx.shapes[0], ctx.complex_inputs[0]),
                _unbroadcast(grad * np.conj(ctx.a), ctx.shapes[1], ctx.complex_inputs[1]))


class Div(Function):
    @staticmethod
    def forward(ctx, a, b):
        if np.iscomplexobj(a) or np.iscomplexobj(b):
            raise TypeError('division is defined for real tensors only')
        ctx.a, ctx.b = a, b
        return a / b

    @staticmethod
    def backward(ctx, grad):
        return (_unbroadcast(grad / ctx.b, ctx.shapes[0], False),
                _unbroadcast(-grad * ctx.a / (ctx.b * ctx.b), ctx.shapes[1], False))


def add(a, b):
    return Add.apply(*_operands(a, b))


def sub(a, b):
    return Sub.apply(*_operands(a, b))


def mul(a, b):
    return Mul.apply(*_operands(a, b))


def div(a, b):
    return Div.apply(*_operands(a, b))


_EWISE = {'add': add, 'sub': sub, 'mul': mul, 'div': div}


def ewise(op, a, b):
    if op not in _EWISE:
        raise ValueError('unknown elementwise op [{}]'.format(op))
    return _EWISE[op](a, b)


_LETTERS = 'abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ'


def _contract_subscripts(ndim_a, ndim_b, axes, batch_axes):
    sa = list(_LETTERS[:ndim_a])
    sb = list(_LETTERS[ndim_a:ndim_a + ndim_b])
    for ia, ib in list(axes) + list(batch_axes):
        sb[ib] = sa[ia]
    paired_a = set(ia for ia, _ in axes) | set(ia for ia, _ in batch_axes)
    paired_b = set(ib for _, ib in axes) | set(ib for _, ib in batch_axes)
    out = [sa[ia] for ia, _ in batch_axes]
    out += [sa[i] for i in range(ndim_a) if i not in paired_a]
    out += [sb[i] for i in range(ndim_b) if i not in paired_b]
    return ''.join(sa), ''.join(sb), ''.join(out)


def ordered_einsum(subscripts, a, b):
    """
    pairwise einsum 'sa,sb->so' accumulated one contracted index at a time,
    ascending, so results match a nested-loop sum bit for bit
    """
    sa, sb, so = subscripts
    size = dict(zip(sa, a.shape))
    size.update(zip(sb, b.shape))
    batch = [c for c in so if c in sa and c in sb]
    free_a = [c for c in sa if c not in sb]
    free_b = [c for c in sb if c not in sa]
    summed = [c for c in sa if c in sb and c not in so]
    n_batch, n_a, n_b, n_k = [int(np.prod([size[c] for c in g])) for g in (batch, free_a, free_b, summed)]
    lhs = np.transpose(a, [sa.index(c) for c in batch + free_a + summed]).reshape(n_batch, n_a, n_k)
    rhs = np.transpose(b, [sb.index(c) for c in batch + summed + free_b]).reshape(n_batch, n_k, n_b)
    out = np.zeros((n_batch, n_a, n_b), dtype=np.result_type(a, b))
    for k in range(n_k):
        out += lhs[:, :, k, None] * rhs[:, None, k, :]
    order = batch + free_a + free_b
    out = out.reshape([size[c] for c in order])
    return np.transpose(out, [order.index(c) for c in so])


class Contract(Function):
    """
    sum of products over paired axes; ``batch_axes`` pairs are aligned but kept,
    and lead the output, followed by the free axes of a, then of b
    """
    @staticmethod
    def forward(ctx, a, b):
        ctx.a, ctx.b = a, b
        return ordered_einsum(ctx.subscripts, a, b)

    @staticmethod
    def backward(ctx, grad):
        sa, sb, so = ctx.subscripts
        ga = ordered_einsum((so, sb, sa), grad, np.conj(ctx.b))
        gb = ordered_einsum((so, sa, sb), grad, np.conj(ctx.a))
        if not ctx.complex_inputs[0]:
            ga = ga.real
        if not ctx.complex_inputs[1]:
            gb = gb.real
        return ga, gb


def _norm_axis(axis, ndim):
    if not -ndim <= axis < ndim:
        raise ValueError('axis {} out of range for rank {}'.format(axis, ndim))
    return axis % ndim


def contract(a, b, axes, batch_axes=()):
    a, b = as_tensor(a), as_tensor(b)
    axes = [(_norm_axis(i, a.ndim), _norm_axis(j, b.ndim)) for i, j in axes]
    batch_axes = [(_norm_axis(i, a.ndim), _norm_axis(j, b.ndim)) for i, j in batch_axes]
    used_a = [i for i, _ in axes + batch_axes]
    used_b = [j for _, j in axes + batch_axes]
    if len(set(used_a)) != len(used_a) or len(set(used_b)) != len(used_b):
        raise ValueError('contracted axes must be distinct, got {} / {}'.format(axes, batch_axes))
    for i, j in axes + batch_axes:
        if a.shape[i] != b.shape[j]:
            raise ValueError('cannot pair axis {} (size {}) with axis {} (size {})'.format(i, a.shape[i], j, b.shape[j]))
    if a.ndim + b.ndim > len(_LETTERS):
        raise ValueError('contraction of rank {} with rank {} is too large'.format(a.ndim, b.ndim))
    return Contract.apply(a, b, subscripts=_contract_subscripts(a.ndim, b.ndim, axes, batch_axes))


class Reshape(Function):
    @staticmethod
    def forward(ctx, x):
        return x.reshape(ctx.new_shape)

    @staticmethod
    def backward(ctx, grad):
        return (grad.reshape(ctx.shapes[0]),)


class Permute(Function):
    @staticmethod
    def forward(ctx, x):
        return np.ascontiguousarray(np.transpose(x, ctx.axes))

    @staticmethod
    def backward(ctx, grad):
        return (np.transpose(grad, np.argsort(ctx.axes)),)


class Slice(Function):
    @staticmethod
    def forward(ctx, x):
        return np.ascontiguousarray(x[ctx.index])

    @staticmethod
    def backward(ctx, grad):
        full = np.zeros(ctx.shapes[0], dtype=grad.dtype)
        full[ctx.index] = grad
        return (full,)


class Concat(Function):
    @staticmethod
    def forward(ctx, *xs):
        return np.concatenate(xs, axis=ctx.axis)

    @staticmethod
    def backward(ctx, grad):
        bounds = np.cumsum([s[ctx.axis] for s in ctx.shapes])[:-1]
        parts = np.split(grad, bounds, axis=ctx.axis)
        return tuple(p if c else p.real for p, c in zip(parts, ctx.complex_inputs))


class ConstantPad(Function):
    @staticmethod
    def forward(ctx, x):
        return np.pad(x, ctx.pads, mode='constant', constant_values=ctx.value)

    @staticmethod
    def backward(ctx, grad):
        index = tuple(slice(lo, lo + n) for (lo, _), n in zip(ctx.pads, ctx.shapes[0]))
        return (grad[index],)


def reshape(x, shape):
    x = as_tensor(x)
    shape = tuple(int(s) for s in shape)
    if int(np.prod(shape)) != x.size:
        raise ValueError('cannot reshape {} elements into {}'.format(x.size, shape))
    return Reshape.apply(x, new_shape=shape)


def permute(x, axes):
    x = as_tensor(x)
    axes = tuple(int(a) for a in axes)
    if sorted(axes) != list(range(x.ndim)):
        raise ValueError('{} is not a permutation of {} axes'.format(axes, x.ndim))
    return Permute.apply(x, axes=axes)


def slice_(x, ranges):
    """ ``ranges`` holds one (start, stop) pair or None per axis """
    x = as_tensor(x)
    if len(ranges) != x.ndim:
        raise ValueError('need {} ranges, got {}'.format(x.ndim, len(ranges)))
    index = []
    for axis, (r, n) in enumerate(zip(ranges, x.shape)):
        if r is None:
            index.append(slice(None))
            continue
        start, stop = r
        if not 0 <= start < stop <= n:
            raise ValueError('range [{}, {}) out of bounds for axis {} of size {}'.format(start, stop, axis, n))
        index.append(slice(start, stop))
    return Slice.apply(x, index=tuple(index))


def slice_axis(x, axis, start, stop):
    ranges = [None] * x.ndim
    ranges[_norm_axis(axis, x.ndim)] = (start, stop)
    return slice_(x, ranges)


def concat(xs, axis):
    xs = [as_tensor(x) for x in xs]
    axis = _norm_axis(axis, xs[0].ndim)
    for x in xs[1:]:
        if x.ndim != xs[0].ndim or any(m != n for i, (m, n) in enumerate(zip(x.shape, xs[0].shape)) if i != axis):
            raise ValueError('cannot concatenate {} with {} along axis {}'.format(x.shape, xs[0].shape, axis))
    return Concat.apply(*xs, axis=axis)


def constant_pad(x, pads, value=0.0):
    """ ``pads`` holds one (left, right) pair per axis """
    x = as_tensor(x)
    pads = tuple((int(lo), int(hi)) for lo, hi in pads)
    if len(pads) != x.ndim or any(lo < 0 or hi < 0 for lo, hi in pads):
        raise ValueError('invalid pads {} for rank {}'.format(pads, x.ndim))
    return ConstantPad.apply(x, pads=pads, value=value)


def pad_axis(x, axis, left, right, value=0.0):
    pads = [(0, 0)] * x.ndim
    pads[_norm_axis(axis, x.ndim)] = (left, right)
    return constant_pad(x, pads, value)


_SHAPE_OPS = {'reshape': reshape, 'permute': permute, 'slice': slice_, 'concat': concat, 'constant_pad': constant_pad}


def shape_op(op, x, *params, **kwargs):
    if op not in _SHAPE_OPS:
        raise ValueError('unknown shape op [{}]'.format(op))
    return _SHAPE_OPS[op](x, *params, **kwargs)


class Take(Function):
    """ rows of x gathered along axis 0 """
    @staticmethod
    def forward(ctx, x):
        return x[ctx.indices]

    @staticmethod
    def backward(ctx, grad):
        full = np.zeros(ctx.shapes[0], dtype=grad.dtype)
        np.add.at(full, ctx.indices, grad)
        return (full,)


class SegmentSum(Function):
    """ rows of x summed into ``n_segments`` buckets, in ascending row order """
    @staticmethod
    def forward(ctx, x):
        out = np.zeros((ctx.n_segments,) + x.shape[1:], dtype=x.dtype)
        np.add.at(out, ctx.segment_ids, x)
        return out

    @staticmethod
    def backward(ctx, grad):
        return (grad[ctx.segment_ids],)


def take(x, indices):
    x = as_tensor(x)
    indices = np.asarray(indices, dtype=np.int64)
    if indices.size and (indices.min() < 0 or indices.max() >= x.shape[0]):
        raise ValueError('row index out of range for {} rows'.format(x.shape[0]))
    return Take.apply(x, indices=indices)


def segment_sum(x, segment_ids, n_segments):
    x = as_tensor(x)
    segment_ids = np.asarray(segment_ids, dtype=np.int64)
    if segment_ids.shape != (x.shape[0],):
        raise ValueError('need one segment id per row, got {} for {} rows'.format(segment_ids.shape, x.shape[0]))
    return SegmentSum.apply(x, segment_ids=segment_ids, n_segments=int(n_segments))


class Gelu(Function):
    @staticmethod
    def forward(ctx, x):
        inner = GELU_C * (x + GELU_A * x ** 3)
        ctx.x, ctx.t = x, np.tanh(inner)
        return 0.5 * x * (1.0 + ctx.t)

    @staticmethod
    def backward(ctx, grad):
        x, t = ctx.x, ctx.t
        d_inner = GELU_C * (1.0 + 3.0 * GELU_A * x * x)
        return (grad * (0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * d_inner),)


class Relu(Function):
    @staticmethod
    def forward(ctx, x):
        ctx.mask = x > 0
        return np.where(ctx.mask, x, 0.0)

    @staticmethod
    def backward(ctx, grad):
        return (grad * ctx.mask,)


def activation(op, x):
    x = as_tensor(x)
    if x.is_complex:
        raise TypeError('activation [{}] needs a real tensor'.format(op))
    if op == 'gelu':
        return Gelu.apply(x)
    if op == 'relu':
        return Relu.apply(x)
    raise ValueError('unknown activation [{}]'.format(op))


def gelu(x):
    return activation('gelu', x)


def relu(x):
    return activation('relu', x)


def ordered_sum(x, axes):
    ''' running sum over the flattened reduced axes, ascending '''
    keep = [i for i in range(x.ndim) if i not in axes]
    count = int(np.prod([x.shape[i] for i in axes]))
    flat = np.transpose(x, keep + list(axes)).reshape([x.shape[i] for i in keep] + [count])
    if flat.shape[-1] == 0:
        return np.zeros(flat.shape[:-1], dtype=x.dtype)
    return np.add.accumulate(flat, axis=-1)[..., -1]


class Sum(Function):
    @staticmethod
    def forward(ctx, x):
        out = ordered_sum(x, ctx.axes)
        return out if ctx.count == 1 else out / ctx.count

    @staticmethod
    def backward(ctx, grad):
        shape = list(ctx.shapes[0])
        for a in ctx.axes:
            shape[a] = 1
        grad = np.broadcast_to(grad.reshape(shape), ctx.shapes[0])
        return (grad if ctx.count == 1 else grad / ctx.count,)


def reduce(op, x, axes=None):
    x = as_tensor(x)
    if axes is None:
        axes = tuple(range(x.ndim))
    axes = tuple(sorted(_norm_axis(a, x.ndim) for a in axes))
    if len(set(axes)) != len(axes):
        raise ValueError('reduction axes must be distinct, got {}'.format(axes))
    if op == 'sum':
        return Sum.apply(x, axes=axes, count=1)
    if op == 'mean':
        return Sum.apply(x, axes=axes, count=int(np.prod([x.shape[a] for a in axes])))
    raise ValueError('unknown reduction [{}]'.format(op))


class Power(Function):
    """ x ** q for x >= 0; the derivative is taken as zero where x == 0 """
    @staticmethod
    def forward(ctx, x):
        if np.iscomplexobj(x):
            raise TypeError('power needs a real tensor')
        ctx.x = x
        return np.power(x, ctx.q)

    @staticmethod
    def backward(ctx, grad):
        x = ctx.x
        safe = np.where(x > 0, x, 1.0)
        return (np.where(x > 0, grad * ctx.q * np.power(safe, ctx.q - 1.0), 0.0),)


class AbsPower(Function):
    @staticmethod
    def forward(ctx, x):
        if np.iscomplexobj(x):
            raise TypeError('abs_power needs a real tensor')
        ctx.x = x
        return np.power(np.abs(x), ctx.p)

    @staticmethod
    def backward(ctx, grad):
        x = ctx.x
        a = np.abs(x)
        safe = np.where(a > 0, a, 1.0)
        return (np.where(a > 0, grad * ctx.p * np.power(safe, ctx.p - 1.0) * np.sign(x), 0.0),)


def power(x, q):
    return Power.apply(as_tensor(x), q=float(q))


def sqrt(x):
    return power(x, 0.5)


def abs_power(x, p):
    return AbsPower.apply(as_tensor(x), p=float(p))


class RealPart(Function):
    @staticmethod
    def forward(ctx, z):
        return np.ascontiguousarray(np.real(z))

    @staticmethod
    def backward(ctx, grad):
        return (grad.astype(np.complex128),)


class ImagPart(Function):
    @staticmethod
    def forward(ctx, z):
        return np.ascontiguousarray(np.imag(z)) if np.iscomplexobj(z) else np.zeros_like(z)

    @staticmethod
    def backward(ctx, grad):
        return (1j * grad,)


class ComplexJoin(Function):
    @staticmethod
    def forward(ctx, re, im):
        return re + 1j * im

    @staticmethod
    def backward(ctx, grad):
        return (_unbroadcast(grad.real, ctx.shapes[0], False),
                _unbroadcast(grad.imag, ctx.shapes[1], False))


class Conj(Function):
    @staticmethod
    def forward(ctx, z):
        return np.conj(z)

    @staticmethod
    def backward(ctx, grad):
        return (np.conj(grad),)


def real_part(z):
    return RealPart.apply(as_tensor(z))


def imag_part(z):
    return ImagPart.apply(as_tensor(z))


def complex_join(re, im):
    re, im = _operands(re, im)
    if re.is_complex or im.is_complex:
        raise TypeError('complex_join needs real parts')
    return ComplexJoin.apply(re, im)


def conj(z):
    return Conj.apply(as_tensor(z))


def backward(root, retain=False):
    """
    Gradients of a real scalar root w.r.t. every leaf registered on its tape.
    Returns an OrderedDict leaf tensor -> ndarray; the tape is reset afterwards
    unless ``retain`` is set.
    """
    if root.size != 1 or root.ndim > 1:
        raise ValueError('backward needs a scalar root, got shape {}'.format(root.shape))
    if root.is_complex:
        raise TypeError('backward needs a real root')
    if root.node is None or not root.node[0].owns(root):
        raise ValueError('root was not recorded on an active tape')
    tape, _, root_id = root.node
    grads = [None] * len(tape.nodes)
    grads[root_id] = np.ones(root.shape)
    for i in range(root_id, -1, -1):
        grad = grads[i]
        node = tape.nodes[i]
        if grad is None or node.function is None:
            continue
        for input_id, g in zip(node.inputs, node.function.backward(node.ctx, grad)):
            if input_id is None or g is None:
                continue
            grads[input_id] = g if grads[input_id] is None else grads[input_id] + g
    result = OrderedDict()
    for leaf, leaf_id in tape.leaves():
        g = grads[leaf_id]
        if g is None:
            g = np.zeros(leaf.shape, dtype=leaf.data.dtype)
        elif not leaf.is_complex:
            g = np.real(g)
        result[leaf] = np.asarray(g, dtype=leaf.data.dtype).reshape(leaf.shape)
    if not retain:
        tape.reset()
    return result
