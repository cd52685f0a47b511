"""
Oracle suites behind ``run.py selftest``: transforms against a naive DFT,
tape gradients against central differences, the Darcy solver against a
manufactured solution and Burgers mean conservation. One line per suite.
"""
from collections import OrderedDict

import numpy as np

from core import fft
from core.tensor import Tensor
from core.util import gradient_check
from data.util.burgers import solve_burgers
from data.util.darcy import solve_darcy
from data.util.grf import BURGERS_GRF, sample_grf_1d
from data.util.rng import Rng

FFT_SIZES = tuple(range(2, 18)) + (32, 48, 64)


def naive_dft(x, sign=-1):
    n = x.shape[-1]
    k = np.arange(n)
    return x @ np.exp(sign * 2j * np.pi * np.outer(k, k) / n)


def fft_suite():
    rng = Rng(0)
    worst = 0.0
    for n in FFT_SIZES:
        x = rng.normal((3, n))
        half = fft.rfftn(x, 1)
        worst = max(worst, np.max(np.abs(half - naive_dft(x)[:, :n // 2 + 1])))
        worst = max(worst, np.max(np.abs(fft.irfftn(half, (n,)) - x)))
        energy = np.sum(fft.hermitian_weights(n) * np.abs(half) ** 2, axis=-1) / n
        worst = max(worst, np.max(np.abs(energy - np.sum(x ** 2, axis=-1)) / np.sum(x ** 2, axis=-1)))
    return worst < 1e-9, 'max_err={:.3e}'.format(worst)


def manufactured_error(n):
    """ max nodal error for u = sin(pi x) sin(pi y), a = 1 + x y """
    s = np.arange(n) / (n - 1.0)
    x, y = np.meshgrid(s, s, indexing='ij')
    a = 1.0 + x * y
    u = np.sin(np.pi * x) * np.sin(np.pi * y)
    ux = np.pi * np.cos(np.pi * x) * np.sin(np.pi * y)
    uy = np.pi * np.sin(np.pi * x) * np.cos(np.pi * y)
    f = 2.0 * np.pi ** 2 * a * u - y * ux - x * uy
    return float(np.max(np.abs(solve_darcy(a, f, tol=1e-12) - u)))


def darcy_suite():
    errors = [manufactured_error(n) for n in (16, 32, 64)]
    ratios = [errors[0] / errors[1], errors[1] / errors[2]]
    ok = all(3.2 <= r <= 4.8 for r in ratios)
    return ok, 'ratios={:.3f},{:.3f}'.format(*ratios)


def burgers_suite():
    u0 = sample_grf_1d(64, BURGERS_GRF, Rng(0))
    u = solve_burgers(u0, 0.01, 0.5)
    drift = abs(float(np.mean(u) - np.mean(u0)))
    return drift < 1e-10 and np.all(np.isfinite(u)), 'mean_drift={:.3e}'.format(drift)


def gradients_suite():
    from models.loss import relative_lp_loss
    from models.network import build_network
    from core.tensor import contract, gelu, reduce, mul

    rng = Rng(1)
    worst = gradient_check(lambda a, b: reduce('sum', gelu(mul(contract(a, b, [(1, 0)]), a))),
                           [rng.normal((3, 3)), rng.normal((3, 3))])

    net = build_network('fno', d=1, in_channels=1, out_channels=1, hidden_channels=4, n_layers=1, modes=2, seed=3)
    names = list(net.parameters())
    x, target = Tensor(rng.normal((1, 1, 8))), Tensor(rng.normal((1, 1, 8)))

    def loss(*params):
        net.set_parameters(OrderedDict(zip(names, params)))
        return relative_lp_loss(net(x).data, target)

    arrays = [np.array(p.data) for p in net.parameters().values()]
    worst = max(worst, gradient_check(loss, arrays))
    return worst < 1e-4, 'max_rel_err={:.3e}'.format(worst)


SUITES = OrderedDict([
    ('fft', fft_suite),
    ('gradients', gradients_suite),
    ('darcy', darcy_suite),
    ('burgers', burgers_suite),
])


def run_suites(names=None, stream=print):
    """ True when every selected suite passes """
    passed = True
    for name in names or SUITES:
        try:
            ok, detail = SUITES[name]()
        except Exception as e:
            ok, detail = False, 'error={}'.format(e)
        stream('suite={} status={} {}'.format(name, 'pass' if ok else 'fail', detail))
        passed = passed and ok
    return passed
