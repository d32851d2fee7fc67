import numpy as np
import pytest

from sighedge.params import MarketParams
from sighedge.payoffs import PathPayoff
from sighedge.regression import (
    RankDeficientError,
    RegressionSpec,
    build_design,
    fit,
    reduced_words,
    regress_and_hedge,
)
from sighedge.tensor_algebra import words_upto

N, T, S0 = 200.0, 0.2, 10.0


def test_reduced_words_count():
    # words over {1,2} of length <= M not starting with 1: 1 + (2^M - 1)
    for M in range(0, 6):
        assert len(reduced_words(M)) == 2**M
    assert all(not w or w[0] == 2 for w in reduced_words(4))


def test_regression_inputs_are_validated():
    pp = PathPayoff("european_call", strike=S0, nominal=N, T=T)
    with pytest.raises(ValueError):
        RegressionSpec(pp, M=5, L=10)
    with pytest.raises(ValueError):
        RegressionSpec(pp, M=-1)


def test_exact_signature_payoff_is_recovered():
    pp = PathPayoff("asian_quadratic", strike=S0, nominal=N, T=T)
    spec = RegressionSpec(pp, M=4, L=3000, J=50, seed=1)
    X, y, words = build_design(spec, reduced_words(4))
    res = fit(X, y, words)
    assert res.mse_in < 1e-12 * np.mean(y**2)
    want = pp.as_signature_payoff(S0).xi
    assert res.ell.max_abs_diff(want) < 1e-5 * max(abs(c) for c in want.coeffs.values())


def test_full_word_design_is_rank_deficient():
    pp = PathPayoff("european_call", strike=S0, nominal=N, T=T)
    spec = RegressionSpec(pp, M=3, L=2000, J=20, seed=2)
    X, y, words = build_design(spec)
    assert len(words) == len(words_upto(2, 3))
    with pytest.raises(RankDeficientError) as e:
        fit(X, y, words)
    assert e.value.rank < e.value.n_cols
    res = fit(X, y, words, allow_rank_deficient=True)
    assert res.rank == e.value.rank


def test_in_sample_error_decreases_with_truncation():
    pp = PathPayoff("european_call", strike=S0, nominal=N, T=T)
    mse = []
    for M in (1, 2, 3, 4):
        spec = RegressionSpec(pp, M=M, L=4000, J=50, seed=3)
        X, y, w = build_design(spec, reduced_words(M))
        mse.append(fit(X, y, w).mse_in)
    assert all(a >= b for a, b in zip(mse, mse[1:]))


def test_ridge_shrinks_coefficients():
    pp = PathPayoff("european_call", strike=S0, nominal=N, T=T)
    spec = RegressionSpec(pp, M=2, L=2000, J=20, seed=4)
    X, y, w = build_design(spec, reduced_words(2))
    a = fit(X, y, w)
    b = fit(X, y, w, ridge=10.0)
    assert np.linalg.norm(list(b.ell.coeffs.values())) < np.linalg.norm(list(a.ell.coeffs.values()))


def test_same_seed_same_design():
    pp = PathPayoff("lookback_float_call", nominal=N, T=T)
    spec = RegressionSpec(pp, M=2, L=500, J=10, seed=9)
    X1, y1, _ = build_design(spec, reduced_words(2))
    X2, y2, _ = build_design(spec, reduced_words(2), threads=2)
    assert np.array_equal(X1, X2) and np.array_equal(y1, y2)


def test_regress_and_hedge_chains_into_riccati():
    pp = PathPayoff("asian_call", strike=S0, nominal=N, T=T)
    spec = RegressionSpec(pp, M=2, L=4000, J=40, seed=5)
    res, sol = regress_and_hedge(spec, MarketParams(), n_ode=200)
    assert res.rank == len(reduced_words(2))
    assert sol.params.trunc >= 2
    row = res.to_csv_row()
    assert set(row) == {"mse_in", "mse_out", "rank", "cond"}
