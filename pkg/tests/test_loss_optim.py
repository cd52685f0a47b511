import math
from collections import OrderedDict

import numpy as np
import pytest

from core.base_dataset import GridFunction
from core.optim import AdamState, IncrementalModes, StepLR, adam_step, format_modes, incremental_modes, step_lr
from core.tensor import Tape, Tensor, backward, mul, reduce
from core.util import gradient_check
from data.util.rng import Rng
from models.loss import H1Loss, LpLoss, h1_loss, h1_norm_squared, relative_lp_loss


def _grid(values):
    return GridFunction(Tensor(np.asarray(values, dtype=np.float64)))


def test_relative_l2_examples():
    target = _grid([[[1.0, 1.0]]])
    assert relative_lp_loss(target, target).item() == 0.0
    assert relative_lp_loss(_grid([[[0.0, 0.0]]]), target).item() == 1.0
    assert relative_lp_loss(_grid([[[1.0, 2.0]]]), target).item() == pytest.approx(1 / math.sqrt(2), abs=1e-15)


def test_relative_lp_is_a_batch_mean_of_per_sample_ratios():
    pred = _grid([[[1.0, 2.0]], [[2.0, 2.0]]])
    target = _grid([[[1.0, 1.0]], [[2.0, 2.0]]])
    assert relative_lp_loss(pred, target).item() == pytest.approx(0.5 / math.sqrt(2), abs=1e-15)


def test_relative_lp_is_scale_covariant():
    rng = Rng(0)
    pred, target = rng.normal((3, 2, 8)), rng.normal((3, 2, 8))
    base = relative_lp_loss(_grid(pred), _grid(target)).item()
    for alpha in (-3.0, 1e-3, 250.0):
        scaled = relative_lp_loss(_grid(alpha * pred), _grid(alpha * target)).item()
        assert scaled == pytest.approx(base, abs=1e-12)


def test_relative_lp_is_resolution_agnostic_for_identical_functions():
    for n in (8, 16, 32):
        t = np.arange(n) / n
        u = _grid(np.sin(2 * np.pi * t)[None, None] + 2.0)
        assert relative_lp_loss(u, u).item() == 0.0


def test_zero_target_is_rejected_by_sample():
    target = _grid([[[1.0, 1.0]], [[0.0, 0.0]]])
    with pytest.raises(ValueError, match='sample 1'):
        relative_lp_loss(target, target)
    with pytest.raises(ValueError, match='sample 1'):
        h1_loss(target, target)
    with pytest.raises(ValueError):
        relative_lp_loss(_grid([[[1.0, 1.0, 1.0]]]), target)


def test_lp_gradients_match_central_differences():
    rng = Rng(1)
    target = Tensor(rng.normal((2, 1, 6)))
    for p in (1.5, 2.0, 3.0):
        assert gradient_check(lambda pred: relative_lp_loss(pred, target, p), [rng.normal((2, 1, 6))]) < 1e-5


def test_h1_of_constants_reduces_to_relative_difference():
    a = _grid(np.full((1, 1, 8), 3.0))
    b = _grid(np.full((1, 1, 8), 2.0))
    assert h1_loss(a, b).item() == pytest.approx(0.5, abs=1e-12)
    assert h1_loss(b, b).item() == 0.0


def test_h1_norm_of_a_single_mode_matches_naive_oracle():
    n = 16
    x = np.arange(n) / n
    u = np.sin(2 * np.pi * x)
    coeffs = np.array([np.sum(u * np.exp(-2j * np.pi * k * np.arange(n) / n)) for k in range(n)])
    k = np.where(np.arange(n) < n // 2, np.arange(n), np.arange(n) - n)
    oracle = np.sum((1 + 4 * np.pi ** 2 * k ** 2) * np.abs(coeffs) ** 2) / n ** 2
    assert h1_norm_squared(Tensor(u[None, None])).item() == pytest.approx(oracle, abs=1e-9)
    assert oracle == pytest.approx((1 + 4 * np.pi ** 2) / 2, abs=1e-9)


def test_h1_gradients_match_central_differences():
    rng = Rng(2)
    target = GridFunction(Tensor(rng.normal((1, 1, 8, 6))))
    assert gradient_check(lambda pred: h1_loss(GridFunction(pred), target), [rng.normal((1, 1, 8, 6))]) < 1e-5


def test_loss_objects_are_named():
    assert LpLoss().__name__ == 'relL2'
    assert LpLoss(1.5).__name__ == 'relL1.5'
    assert H1Loss().__name__ == 'relH1'


def test_adam_zero_gradient_is_identity():
    params = OrderedDict([('w', Tensor(np.array([1.0, -2.0]), requires_grad=True)),
                          ('z', Tensor(np.array([1 + 1j]), requires_grad=True))])
    state = AdamState(lr=0.1)
    for _ in range(3):
        params = adam_step(params, OrderedDict([('w', np.zeros(2)), ('z', np.zeros(1, dtype=complex))]), state)
    assert state.t == 3
    np.testing.assert_array_equal(params['w'].data, [1.0, -2.0])
    np.testing.assert_array_equal(params['z'].data, [1 + 1j])


def test_adam_first_step_on_a_quadratic():
    w = Tensor(np.array([1.0]), requires_grad=True)
    with Tape():
        grads = backward(reduce('sum', mul(w, w)))
    state = AdamState(lr=0.1)
    updated = adam_step(OrderedDict([('w', w)]), OrderedDict([('w', grads[w])]), state)
    assert updated['w'].data[0] == pytest.approx(1 - 0.1 * 2 / (2 + 1e-8), abs=1e-12)


def test_adam_updates_parameters_independently():
    state_a, state_b = AdamState(lr=0.01), AdamState(lr=0.01)
    both = adam_step(OrderedDict([('a', Tensor([1.0])), ('b', Tensor([5.0]))]),
                     OrderedDict([('a', np.array([0.3])), ('b', np.array([-7.0]))]), state_a)
    alone = adam_step(OrderedDict([('a', Tensor([1.0]))]), OrderedDict([('a', np.array([0.3]))]), state_b)
    assert both['a'].data[0] == alone['a'].data[0]


def test_adam_treats_complex_entries_as_real_pairs():
    state = AdamState(lr=0.1)
    out = adam_step(OrderedDict([('z', Tensor(np.array([0j])))]), OrderedDict([('z', np.array([1.0 - 1.0j]))]), state)
    np.testing.assert_allclose(out['z'].data, [-0.1 + 0.1j], atol=1e-8)


def test_adam_rejects_non_finite_gradients_by_name():
    with pytest.raises(ValueError, match='layer.weight'):
        adam_step(OrderedDict([('layer.weight', Tensor([1.0]))]), OrderedDict([('layer.weight', np.array([np.nan]))]),
                  AdamState())


def test_step_lr():
    schedule = StepLR(1e-3, gamma=0.5, step_size=10)
    assert step_lr(schedule, 0) == 1e-3
    assert schedule(25) == pytest.approx(2.5e-4, abs=1e-18)
    assert StepLR(1e-3, gamma=1.0, step_size=1)(1000) == 1e-3
    with pytest.raises(ValueError):
        StepLR(1e-3, gamma=0.0)
    with pytest.raises(ValueError):
        StepLR(1e-3, step_size=0)


def test_incremental_modes():
    schedule = IncrementalModes((8,), (2,), increment=2, step=5)
    assert incremental_modes(schedule, 0) == (2,)
    assert schedule(12) == (6,)
    assert schedule(100) == (8,)
    assert IncrementalModes((8, 6), (2,), enabled=False)(0) == (8, 6)
    assert IncrementalModes((8, 6), (2,))(0) == (2, 2)
    with pytest.raises(ValueError):
        IncrementalModes((4,), (5,))
    assert format_modes((8, 6)) == '8x6'
