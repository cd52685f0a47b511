from collections import OrderedDict

import numpy as np
import pytest

from core.tensor import Tape, Tensor, backward, mul, reduce
from core.util import gradient_check
from data.util.rng import Rng
from models.spectral import (ModeSpec, SpectralWeights, expand_modes, init_spectral_weights, irfftn,
                             rfftn, spectral_conv, spectral_resample, truncate_modes, tucker_ranks,
                             tucker_reconstruct)


def _field(shape, seed=0):
    return Tensor(Rng(seed).normal(shape))


def dense_oracle_1d(x, weight, m):
    """ explicit DFT sums, mode mixing and the half-spectrum synthesis formula """
    n = x.shape[-1]
    j = np.arange(n)
    k = np.arange(m)
    forward = np.exp(-2j * np.pi * np.outer(j, k) / n)
    coeffs = np.einsum('bij,jk->bik', x, forward)
    mixed = np.einsum('bik,kio->bok', coeffs, weight)
    mult = np.where(k == 0, 1.0, 2.0)
    basis = np.exp(2j * np.pi * np.outer(k, j) / n)
    return np.real(np.einsum('bok,kj->boj', mixed * mult, basis)) / n


def dense_oracle_2d(x, weight, m1, m2):
    n1, n2 = x.shape[-2:]
    rows = np.concatenate([np.arange(m1), np.arange(n1 - m1, n1)])
    full = np.fft.fft2(x)[..., rows, :m2]
    mixed = np.einsum('bixy,xyio->boxy', full, weight)
    spectrum = np.zeros(x.shape[:1] + (weight.shape[-1], n1, n2 // 2 + 1), dtype=complex)
    spectrum[..., rows, :m2] = mixed
    return np.fft.irfft2(spectrum, s=(n1, n2))


def test_mode_spec_checks_sizes():
    spec = ModeSpec((4, 3))
    assert spec.retained_shape() == (8, 3)
    spec.check((8, 6))
    with pytest.raises(ValueError, match='dimension 1'):
        spec.check((8, 5))
    with pytest.raises(ValueError):
        ModeSpec((0,))


def test_mask_keeps_low_corner_frequencies():
    mask = ModeSpec((3, 2)).mask((1, 1))
    assert mask.shape == (6, 2)
    expected = np.zeros((6, 2))
    expected[0, 0] = expected[5, 0] = 1.0
    np.testing.assert_array_equal(mask, expected)
    with pytest.raises(ValueError):
        ModeSpec((3, 2)).mask((4, 1))


def test_mask_in_three_dimensions_is_an_outer_product():
    mask = ModeSpec((2, 3, 2)).mask((1, 2, 2))
    assert mask.shape == (4, 6, 2)
    first = np.array([1.0, 0.0, 0.0, 1.0])
    second = np.array([1.0, 1.0, 0.0, 0.0, 1.0, 1.0])
    np.testing.assert_array_equal(mask, first[:, None, None] * second[None, :, None] * np.ones(2))
    np.testing.assert_array_equal(ModeSpec((2, 3)).mask((2, 3)), np.ones((4, 3)))


def test_truncate_then_expand_keeps_only_retained_modes():
    x = _field((1, 1, 8, 8))
    spec = ModeSpec((2, 2))
    spectrum = rfftn(x, 2)
    expanded = expand_modes(truncate_modes(spectrum, spec), (8, 8), spec)
    full = spectrum.coeffs.data
    kept = np.zeros_like(full)
    rows = [0, 1, 6, 7]
    kept[..., rows, :2] = full[..., rows, :2]
    np.testing.assert_allclose(expanded.data, kept, atol=1e-12)


def test_rfftn_irfftn_round_trip():
    x = _field((2, 3, 6, 10))
    spectrum = rfftn(x, 2)
    assert spectrum.sizes == (6, 10)
    np.testing.assert_allclose(irfftn(spectrum).data, x.data, atol=1e-12)
    with pytest.raises(TypeError):
        rfftn(Tensor(np.ones((1, 4)) * 1j), 1)


def test_spectral_conv_matches_dense_oracle_1d():
    spec = ModeSpec((3,))
    weights = init_spectral_weights(spec, 2, 3, seed=4)
    x = _field((2, 2, 8))
    out = spectral_conv(x, weights, spec)
    np.testing.assert_allclose(out.data, dense_oracle_1d(x.data, weights.weight.data, 3), atol=1e-9)


def test_spectral_conv_matches_dense_oracle_2d():
    spec = ModeSpec((2, 3))
    weights = init_spectral_weights(spec, 2, 2, seed=5)
    x = _field((1, 2, 8, 8))
    out = spectral_conv(x, weights, spec)
    np.testing.assert_allclose(out.data, dense_oracle_2d(x.data, weights.weight.data, 2, 3), atol=1e-9)


def test_spectral_conv_rejects_too_many_modes():
    spec = ModeSpec((5,))
    weights = init_spectral_weights(spec, 1, 1)
    with pytest.raises(ValueError, match='dimension 0'):
        spectral_conv(_field((1, 1, 8)), weights, spec)


def test_spectral_conv_is_resolution_consistent_on_band_limited_input():
    """ a field with only low modes gives the same function at both resolutions """
    spec = ModeSpec((3,))
    weights = init_spectral_weights(spec, 1, 1, seed=2)
    coarse = np.linspace(0, 1, 16, endpoint=False)
    fine = np.linspace(0, 1, 32, endpoint=False)

    def f(t):
        return np.sin(2 * np.pi * t) + 0.5 * np.cos(4 * np.pi * t)

    out_coarse = spectral_conv(Tensor(f(coarse)[None, None]), weights, spec).data
    out_fine = spectral_conv(Tensor(f(fine)[None, None]), weights, spec).data
    np.testing.assert_allclose(out_fine[..., ::2], out_coarse, atol=1e-12)


def test_output_sizes_resynthesize_on_a_finer_grid():
    spec = ModeSpec((3,))
    weights = init_spectral_weights(spec, 1, 1, seed=2)
    t16 = np.linspace(0, 1, 16, endpoint=False)
    t32 = np.linspace(0, 1, 32, endpoint=False)
    x16 = Tensor(np.sin(2 * np.pi * t16)[None, None])
    x32 = Tensor(np.sin(2 * np.pi * t32)[None, None])
    up = spectral_conv(x16, weights, spec, output_sizes=(32,))
    np.testing.assert_allclose(up.data, spectral_conv(x32, weights, spec).data, atol=1e-12)


def test_spectral_resample_interpolates_band_limited_fields():
    t8 = np.linspace(0, 1, 8, endpoint=False)
    t16 = np.linspace(0, 1, 16, endpoint=False)
    x = Tensor(np.cos(2 * np.pi * t8)[None, None])
    np.testing.assert_allclose(spectral_resample(x, (16,)).data[0, 0], np.cos(2 * np.pi * t16), atol=1e-12)
    assert spectral_resample(x, (8,)) is x


def test_spectral_conv_gradients():
    spec = ModeSpec((2,))
    weights = init_spectral_weights(spec, 2, 2, seed=1)

    def fn(x, w):
        weights.weight = w
        return reduce('sum', mul(spectral_conv(x, weights, spec), spectral_conv(x, weights, spec)))
    assert gradient_check(fn, [_field((1, 2, 8)).data, np.array(weights.weight.data)]) < 1e-5


def test_inactive_modes_receive_exactly_zero_gradient():
    spec = ModeSpec((4,))
    weights = init_spectral_weights(spec, 2, 2, seed=3)
    x = _field((2, 2, 16))
    with Tape():
        y = spectral_conv(x, weights, spec, active_modes=(2,))
        grads = backward(reduce('sum', mul(y, y)))
    g = grads[weights.weight]
    assert np.all(g[2:] == 0)
    assert np.any(g[:2] != 0)


@pytest.mark.parametrize('implementation', ['factorized', 'reconstructed'])
def test_full_rank_tucker_matches_its_dense_reconstruction(implementation):
    spec = ModeSpec((2, 2))
    tucker = init_spectral_weights(spec, 3, 2, kind='tucker', rank_fraction=1.0, seed=6, implementation=implementation)
    dense = tucker_reconstruct(tucker)
    x = _field((2, 3, 8, 8))
    np.testing.assert_allclose(spectral_conv(x, tucker, spec).data, spectral_conv(x, dense, spec).data, atol=1e-9)


def test_tucker_implementations_agree_with_masking():
    spec = ModeSpec((3,))
    factorized = init_spectral_weights(spec, 2, 2, kind='tucker', rank_fraction=0.5, seed=7)
    reconstructed = init_spectral_weights(spec, 2, 2, kind='tucker', rank_fraction=0.5, seed=7,
                                          implementation='reconstructed')
    x = _field((1, 2, 12))
    np.testing.assert_allclose(spectral_conv(x, factorized, spec, active_modes=(2,)).data,
                               spectral_conv(x, reconstructed, spec, active_modes=(2,)).data, atol=1e-12)


def test_half_rank_tucker_stores_at_least_twice_fewer_entries():
    spec = ModeSpec((8, 8))
    dense = SpectralWeights(spec, 32, 32)
    ranks = tucker_ranks(dense.dense_shape, 0.5)
    assert ranks == (8, 4, 16, 16)
    tucker = SpectralWeights(spec, 32, 32, kind='tucker', ranks=ranks)
    assert dense.entry_count() == 16 * 8 * 32 * 32
    assert tucker.entry_count() == 8 * 4 * 16 * 16 + 16 * 8 + 8 * 4 + 32 * 16 * 2
    assert 2 * tucker.entry_count() <= dense.entry_count()


def test_initialization_scale_and_determinism():
    spec = ModeSpec((4,))
    a = init_spectral_weights(spec, 4, 8, seed=11)
    b = init_spectral_weights(spec, 4, 8, seed=11)
    np.testing.assert_array_equal(a.weight.data, b.weight.data)
    bound = 1.0 / 32
    assert np.all(np.abs(a.weight.data.real) < bound) and np.all(np.abs(a.weight.data.imag) < bound)
    assert a.parameters() and list(a.parameters()) == ['weight']


def test_tucker_weights_register_core_and_factors():
    spec = ModeSpec((2,))
    tucker = init_spectral_weights(spec, 2, 3, kind='tucker', rank_fraction=1.0)
    names = list(tucker.parameters())
    assert names == ['core', 'factors.0', 'factors.1', 'factors.2']
    assert isinstance(tucker.parameters(), OrderedDict)
