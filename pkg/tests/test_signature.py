import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sighedge._dense import layout, taylor_eval, taylor_stack, transfer
from sighedge.signature import (
    SampledPath,
    SignatureState,
    advance,
    batch_signatures,
    expected_signature_bachelier,
    mc_expected_signature,
    path_signature,
    path_signature_sparse,
    segment_signature,
    shuffle_check,
)
from sighedge.tensor_algebra import TensorSeries, concat, proj_series, proj_word, shuffle, tensor_exp, words_upto

from .conftest import random_path, series_strategy


def test_sampled_path_validation():
    with pytest.raises(ValueError):
        SampledPath(np.array([0.0, 0.0]), np.zeros((2, 1)))
    with pytest.raises(ValueError):
        SampledPath(np.array([0.0, 1.0]), np.zeros((3, 1)))
    with pytest.raises(ValueError):
        SampledPath(np.array([0.0, 1.0]), np.array([0.0, np.nan]))


def test_constant_path_has_trivial_signature():
    p = SampledPath(np.linspace(0, 1, 5), np.ones((5, 2)))
    assert path_signature(p, 4) == TensorSeries.unit(2, 4)


def test_single_segment_is_tensor_exponential():
    dx = [0.2, -0.7]
    seg = segment_signature(dx, 3)
    assert seg[(1, 2)] == pytest.approx(0.2 * -0.7 / 2)
    assert seg[(2, 2, 2)] == pytest.approx((-0.7) ** 3 / 6)


def test_time_augmented_levels_one_and_two():
    t = np.linspace(0, 1, 201)
    S = np.sin(t)
    sig = path_signature(SampledPath.time_augmented(t, S), 2)
    assert sig[(1,)] == pytest.approx(1.0)
    assert sig[(2,)] == pytest.approx(S[-1] - S[0])
    # <21, sig> = ∫ (S_u - S_0) du, exact for the linear interpolation (trapezoid)
    assert sig[(2, 1)] == pytest.approx(np.trapezoid(S - S[0], t), abs=1e-14)


def test_dense_kernel_matches_sparse_fold(rng):
    for d, M in ((2, 5), (3, 4)):
        v = random_path(rng, d, 9)
        p = SampledPath(np.arange(9.0), v)
        assert path_signature(p, M).max_abs_diff(path_signature_sparse(p, M)) < 1e-12


def test_chen_identity_on_concatenated_paths(rng):
    v = random_path(rng, 2, 12)
    t = np.arange(12.0)
    M = 5
    full = path_signature(SampledPath(t, v), M)
    a = path_signature(SampledPath(t[:6], v[:6]), M)
    b = path_signature(SampledPath(t[5:], v[5:]), M)
    assert full.max_abs_diff(concat(a, b, M)) < 1e-12


def test_reversed_path_gives_inverse(rng):
    v = random_path(rng, 3, 7)
    p = SampledPath(np.arange(7.0), v)
    M = 4
    prod = concat(path_signature(p, M), path_signature(p.reversed(), M), M)
    assert prod.max_abs_diff(TensorSeries.unit(3, M)) < 1e-12


def test_advance_tracks_time():
    st_ = SignatureState.start(2, 3)
    st_ = advance(st_, [0.1, 0.5])
    st_ = advance(st_, [0.2, -0.1])
    assert st_.t_current == pytest.approx(0.3)
    assert st_.sig[(1,)] == pytest.approx(0.3)


def test_signature_state_rejects_non_group_like():
    with pytest.raises(ValueError):
        SignatureState(TensorSeries.zero(2, 2), 2)


@given(series_strategy(2, 2, 4), series_strategy(2, 3, 4), st.integers(0, 2**31 - 1))
def test_shuffle_identity_on_signatures(l1, l2, seed):
    rng = np.random.default_rng(seed)
    sig = path_signature(SampledPath(np.arange(6.0), random_path(rng, 2, 6)), 5)
    assert abs(shuffle_check(l1, l2, sig)) < 1e-9


def test_batch_signatures_shape_and_level_zero():
    dx = np.zeros((3, 4, 2))
    out = batch_signatures(dx, 0)
    assert out.shape == (3, 1) and np.all(out == 1.0)
    out = batch_signatures(dx + 0.1, 3)
    assert out.shape == (3, layout(2, 3).size)


def test_expected_signature_low_levels():
    t, sigma = 0.2, 2.0
    E = expected_signature_bachelier(t, sigma, 4)
    assert E[(1,)] == pytest.approx(t)
    assert E[(2,)] == 0.0
    assert E[(2, 2)] == pytest.approx(0.5 * sigma**2 * t)
    assert E[(2, 2, 2, 2)] == pytest.approx((0.5 * sigma**2 * t) ** 2 / 2)


def test_monte_carlo_expected_signature_within_four_se():
    # 4 SE since all 30 words are tested at once; 200 steps keep the O(h) grid bias small
    T, sigma, M = 0.2, 2.0, 4
    mean, se = mc_expected_signature(sigma, 0.0, T, M, 20000, 200, seed=7)
    E = expected_signature_bachelier(T, sigma, M)
    for w in words_upto(2, M):
        if se[w] > 0:
            assert abs(mean[w] - E[w]) < 4 * se[w] + 1e-12, w


# dense layout


def test_dense_index_matches_canonical_order():
    lay = layout(3, 3)
    assert [lay.index(w) for w in lay.words] == list(range(lay.size))


def test_dense_shuffle_matches_sparse(rng):
    lay = layout(3, 5)
    a = TensorSeries(3, 3, {w: float(rng.normal()) for w in words_upto(3, 2)} | {(1, 2, 3): 0.5})
    b = TensorSeries(3, 2, {w: float(rng.normal()) for w in words_upto(3, 2)})
    want = shuffle(a, b, 5)
    got = lay.from_dense(lay.shuffle(lay.to_dense(a), lay.to_dense(b)))
    assert got.max_abs_diff(want) < 1e-12
    sq = lay.from_dense(lay.shuffle_square(lay.to_dense(a)))
    assert sq.max_abs_diff(shuffle(a, a, 5)) < 1e-12


def test_dense_projection_matches_sparse(rng):
    lay = layout(2, 4)
    a = TensorSeries(2, 4, {w: float(rng.normal()) for w in words_upto(2, 4)})
    for u in ((1,), (2,), (2, 2), (1, 2)):
        assert lay.from_dense(lay.proj(lay.to_dense(a), u)).max_abs_diff(proj_word(a, u)) < 1e-15


def test_taylor_stack_is_expected_signature_projection():
    lay = layout(2, 4)
    a = TensorSeries(2, 4, {(2, 1, 2, 1): 3.0, (2, 2): -1.0, (1, 2, 2): 0.5})
    stack = taylor_stack(lay, lay.to_dense(a), 2.0)
    tau = 0.13
    want = proj_series(a, expected_signature_bachelier(tau, 2.0, 4))
    assert lay.from_dense(taylor_eval(stack, tau)).max_abs_diff(want) < 1e-13


def test_transfer_between_layouts():
    a, b = layout(2, 3), layout(3, 2)
    v = np.arange(a.size, dtype=float)
    w = transfer(v, a, b)
    for word_ in b.words:
        if all(c <= 2 for c in word_):
            assert w[b.index(word_)] == v[a.index(word_)]
        else:
            assert w[b.index(word_)] == 0.0


def test_tensor_exp_of_level_one_is_segment():
    dx = [0.3, 0.1, -0.2]
    inc = TensorSeries(3, 1, {(1,): 0.3, (2,): 0.1, (3,): -0.2})
    assert segment_signature(dx, 4).max_abs_diff(tensor_exp(inc, 4)) < 1e-16
    assert math.isclose(segment_signature(dx, 4)[(1, 1, 1, 1)], 0.3**4 / 24)
