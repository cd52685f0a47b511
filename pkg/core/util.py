import os
import json
import struct
from collections import OrderedDict
from pathlib import Path

import numpy as np

from core.tensor import Tensor, Tape, backward

DTYPE_CODES = {0: np.dtype('<f8'), 1: np.dtype('<c16')}


class FormatError(ValueError):
    """ corrupt or incompatible NOCK / NODF file """


def mkdirs(paths):
    if isinstance(paths, str):
        os.makedirs(paths, exist_ok=True)
    else:
        for path in paths:
            os.makedirs(path, exist_ok=True)


def write_json(content, fname):
    fname = Path(fname)
    with fname.open('wt') as handle:
        json.dump(content, handle, indent=4, sort_keys=False)


def derive_seeds(seed):
    """ every random stream of a run hangs off the single ``seed`` key """
    return {'data': seed, 'shuffle': seed + 1, 'init': seed + 2}


''' binary records shared by checkpoints and dataset files '''

def write_header(handle, magic, version, block):
    block = block.encode('utf-8')
    handle.write(magic)
    handle.write(struct.pack('<I', version))
    handle.write(struct.pack('<I', len(block)))
    handle.write(block)


def read_header(handle, magic, version):
    found = handle.read(4)
    if found != magic:
        raise FormatError('bad magic {!r}, expected {!r}'.format(found, magic))
    found_version, = _unpack(handle, '<I')
    if found_version != version:
        raise FormatError('format version {} is not supported (expected {})'.format(found_version, version))
    length, = _unpack(handle, '<I')
    block = handle.read(length)
    if len(block) != length:
        raise FormatError('header block truncated: {} of {} bytes'.format(len(block), length))
    return block.decode('utf-8')


def write_records(handle, arrays):
    for name, array in arrays.items():
        array = np.asarray(array)
        code = 1 if np.iscomplexobj(array) else 0
        payload = np.ascontiguousarray(array, dtype=DTYPE_CODES[code])
        encoded = name.encode('utf-8')
        handle.write(struct.pack('<I', len(encoded)))
        handle.write(encoded)
        handle.write(struct.pack('<BB', code, payload.ndim))
        handle.write(struct.pack('<{}Q'.format(payload.ndim), *payload.shape))
        handle.write(payload.tobytes())


def read_records(handle):
    arrays = OrderedDict()
    while True:
        head = handle.read(4)
        if not head:
            return arrays
        if len(head) != 4:
            raise FormatError('truncated record header')
        name_len, = struct.unpack('<I', head)
        name = handle.read(name_len).decode('utf-8')
        code, ndim = _unpack(handle, '<BB')
        if code not in DTYPE_CODES:
            raise FormatError('record [{}] has unknown dtype code {}'.format(name, code))
        dims = _unpack(handle, '<{}Q'.format(ndim))
        dtype = DTYPE_CODES[code]
        nbytes = int(np.prod(dims, dtype=np.int64)) * dtype.itemsize
        payload = handle.read(nbytes)
        if len(payload) != nbytes:
            raise FormatError('record [{}] declares dims {} but holds {} of {} bytes'.format(name, dims, len(payload), nbytes))
        arrays[name] = np.frombuffer(payload, dtype=dtype).reshape(dims).astype(dtype.newbyteorder('='))


def _unpack(handle, fmt):
    size = struct.calcsize(fmt)
    raw = handle.read(size)
    if len(raw) != size:
        raise FormatError('unexpected end of file')
    return struct.unpack(fmt, raw)


def format_block(pairs):
    """ key=value lines, floats in shortest round-trip form """
    lines = []
    for key, value in pairs.items():
        if isinstance(value, (tuple, list)):
            value = ','.join(format_value(v) for v in value)
        else:
            value = format_value(value)
        lines.append('{}={}'.format(key, value))
    return '\n'.join(lines) + '\n'


def format_value(value):
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, float):
        return repr(value)
    return str(value)


def parse_block(text):
    pairs = OrderedDict()
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith('#'):
            continue
        if '=' not in line:
            raise FormatError('malformed line [{}]'.format(line))
        key, value = line.split('=', 1)
        pairs[key.strip()] = value.strip()
    return pairs


''' central differences for gradient checks '''

def numerical_gradient(fn, arrays, index, eps=1e-6):
    """
    d fn / d arrays[index] by central differences; complex entries are perturbed
    along the real and imaginary axes separately
    """
    arrays = [np.array(a) for a in arrays]
    target = arrays[index]
    grad = np.zeros_like(target)

    def evaluate(perturbed):
        inputs = list(arrays)
        inputs[index] = perturbed
        return fn(*[Tensor(a) for a in inputs]).item()

    for idx in np.ndindex(*target.shape):
        directions = [1.0, 1j] if np.iscomplexobj(target) else [1.0]
        for direction in directions:
            plus, minus = target.copy(), target.copy()
            plus[idx] += eps * direction
            minus[idx] -= eps * direction
            slope = (evaluate(plus) - evaluate(minus)) / (2 * eps)
            grad[idx] += slope * (1.0 if direction == 1.0 else 1j)
    return grad


def analytic_gradients(fn, arrays):
    leaves = [Tensor(a, requires_grad=True) for a in arrays]
    with Tape():
        out = fn(*leaves)
        grads = backward(out)
    return [grads[leaf] for leaf in leaves]


def relative_error(analytic, numeric):
    scale = max(np.linalg.norm(np.ravel(numeric)), 1e-12)
    return float(np.linalg.norm(np.ravel(analytic - numeric)) / scale)


def gradient_check(fn, arrays, eps=1e-6):
    """ largest relative error between the tape and central differences over all inputs """
    analytic = analytic_gradients(fn, arrays)
    errors = [relative_error(a, numerical_gradient(fn, arrays, i, eps)) for i, a in enumerate(analytic)]
    return max(errors)
