import numpy as np
import pytest
from scipy import integrate
from scipy.stats import norm

from sighedge._dense import layout
from sighedge.payoffs import (
    PathPayoff,
    PayoffKind,
    SignaturePayoff,
    UnsupportedPayoff,
    asian_poly,
    bachelier_delta,
    bachelier_price,
    bridge_extrema,
    european_poly,
    evaluate_path_payoff,
    payoff_values,
    xi_at,
    xi_ode_residual,
)
from sighedge.signature import SampledPath, bachelier_paths, batch_signatures, time_augmented_increments
from sighedge.tensor_algebra import TensorSeries, proj_word

N, T, SIGMA, S0 = 200.0, 0.2, 2.0, 10.0


def test_asian_quadratic_tensor():
    xi = asian_poly([0, 0, 1], S0, S0, N, T).xi
    assert dict(xi.coeffs) == pytest.approx({(2, 1, 2, 1): 2 * N / T**2, (2, 2, 1, 1): 4 * N / T**2})


def test_european_quadratic_tensor():
    xi = european_poly([0, 0, 1], S0, S0, N, T=T).xi
    assert dict(xi.coeffs) == {(2, 2): 2 * N}


def test_european_poly_off_the_money_expands_binomially():
    K = 9.0
    xi = european_poly([1.0, -2.0, 0.5], K, S0, 1.0, T=T).xi
    c = S0 - K
    assert xi[()] == pytest.approx(1.0 - 2.0 * c + 0.5 * c * c)
    assert xi[(2,)] == pytest.approx(-2.0 + c)
    assert xi[(2, 2)] == pytest.approx(1.0)


def test_fair_price_of_quadratics():
    asian = asian_poly([0, 0, 1], S0, S0, N, T)
    assert xi_at(asian, 0.0, SIGMA)[()] == pytest.approx(53.3333333333, rel=1e-10)
    euro = european_poly([0, 0, 1], S0, S0, N, T=T)
    assert xi_at(euro, 0.0, SIGMA)[()] == pytest.approx(N * SIGMA**2 * T)


def test_xi_at_maturity_is_payoff():
    p = asian_poly([0, 0, 1], S0, S0, N, T)
    assert xi_at(p, T, SIGMA) == p.xi
    with pytest.raises(ValueError):
        xi_at(p, T + 0.1, SIGMA)


def test_asian_hedge_tensor_at_intermediate_time():
    p = asian_poly([0, 0, 1], S0, S0, N, T)
    h = proj_word(xi_at(p, 0.05, SIGMA), (2,))
    assert dict(h.coeffs) == pytest.approx({(2,): 225.0, (2, 1): 1500.0})
    assert p.hedge_degree(SIGMA) == 2


def test_signature_value_equals_direct_payoff_up_to_trapezoid():
    pp = PathPayoff("asian_quadratic", strike=S0, nominal=N, T=T)
    xi = pp.as_signature_payoff(S0)
    rng = np.random.default_rng(3)
    t, S = bachelier_paths(16, 400, T, SIGMA, 0.0, S0, rng)
    sig = batch_signatures(time_augmented_increments(t, S), 4)
    lay = layout(2, 4)
    vals = sig @ lay.to_dense(xi.xi)
    assert np.allclose(vals, payoff_values(pp, t, S), rtol=1e-10, atol=1e-9)


def test_path_payoff_examples():
    t = np.linspace(0, T, 11)
    flat = np.full(11, 10.0)
    call = PathPayoff("european_call", strike=10.0, nominal=N, T=T)
    assert evaluate_path_payoff(call, SampledPath(t, flat)) == 0.0
    rising = 10.0 + np.linspace(0, 1, 11)
    look = PathPayoff("lookback_float_call", nominal=N, T=T)
    assert evaluate_path_payoff(look, SampledPath(t, rising)) == pytest.approx(N * 1.0)
    touch = PathPayoff("one_touch_max", barrier=10.5, nominal=N, T=T)
    assert evaluate_path_payoff(touch, SampledPath(t, rising)) == N
    assert evaluate_path_payoff(touch, SampledPath(t, flat)) == 0.0


def test_only_quadratics_have_signature_form():
    with pytest.raises(UnsupportedPayoff):
        PathPayoff("european_call", strike=10, T=T).as_signature_payoff(S0)


def test_xi_ode_residual_small():
    for p in (asian_poly([0, 0, 1], S0, S0, N, T), european_poly([0, 1, 2, 1], 9.0, S0, N, T=T)):
        assert xi_ode_residual(p, 0.1, SIGMA, 1e-6) < 1e-6


def test_xi_ode_residual_is_second_order():
    p = asian_poly([0, 0, 0, 1], S0, S0, 1.0, T)
    r1 = xi_ode_residual(p, 0.1, SIGMA, 1e-2)
    r2 = xi_ode_residual(p, 0.1, SIGMA, 5e-3)
    assert r1 / r2 == pytest.approx(4.0, rel=0.05)


def test_signature_payoff_rejects_other_alphabets():
    with pytest.raises(ValueError):
        SignaturePayoff(TensorSeries.unit(3), T)


# Bachelier closed forms against quadrature


def _gauss_expect(f, mean, sd):
    return integrate.quad(lambda z: f(mean + sd * z) * norm.pdf(z), -12, 12, epsabs=1e-12)[0]


def test_bachelier_call_and_asian_call_against_quadrature():
    sd = SIGMA * np.sqrt(T)
    call = PathPayoff("european_call", strike=S0, nominal=N, T=T)
    assert bachelier_price(call, S0, SIGMA) == pytest.approx(N * _gauss_expect(lambda s: max(s - S0, 0), S0, sd))
    asian = PathPayoff("asian_call", strike=S0, nominal=N, T=T)
    sa = SIGMA * np.sqrt(T / 3)
    assert bachelier_price(asian, S0, SIGMA) == pytest.approx(N * _gauss_expect(lambda s: max(s - S0, 0), S0, sa))


def test_bachelier_columns_of_the_price_table():
    prices = {
        "european_call": 71.3649,
        "asian_call": 41.2025,
        "one_touch_max": 115.2300,
        "lookback_float_call": 142.7299,
    }
    for kind, want in prices.items():
        p = PathPayoff(kind, strike=S0, barrier=1.05 * S0, nominal=N, T=T)
        assert bachelier_price(p, S0, SIGMA) == pytest.approx(want, abs=0.06)


def test_bridge_extrema_match_reflection_principle():
    rng = np.random.default_rng(11)
    t, S = bachelier_paths(40000, 20, T, SIGMA, 0.0, S0, rng)
    mx = bridge_extrema(S, SIGMA, T / 20, rng, "max")
    p = np.mean(mx >= 10.5)
    want = 2 * norm.sf(0.5 / (SIGMA * np.sqrt(T)))
    assert abs(p - want) < 4 * np.sqrt(want * (1 - want) / 40000)
    mn = bridge_extrema(S, SIGMA, T / 20, rng, "min")
    assert np.all(mn <= S.min(axis=1)) and np.all(mx >= S.max(axis=1))


def test_bachelier_deltas():
    call = PathPayoff("european_call", strike=S0, nominal=N, T=T)
    assert bachelier_delta(call, 0.0, S0, 0.0, SIGMA) == pytest.approx(N / 2)
    q = PathPayoff("european_quadratic", strike=S0, nominal=N, T=T)
    assert bachelier_delta(q, 0.1, 10.3, 0.0, SIGMA) == pytest.approx(2 * N * 0.3)
    aq = PathPayoff("asian_quadratic", strike=S0, nominal=N, T=T)
    # matches the signature hedge tensor {2: 225, 21: 1500} at t=0.05 for S_t=S0, ∫=S0·t
    assert bachelier_delta(aq, 0.05, S0, S0 * 0.05, SIGMA) == pytest.approx(0.0)
    for kind in (PayoffKind.ONE_TOUCH_MAX, PayoffKind.LOOKBACK_FLOAT_CALL):
        with pytest.raises(UnsupportedPayoff):
            bachelier_delta(PathPayoff(kind, T=T), 0.0, S0, 0.0, SIGMA)


def test_asian_call_delta_by_finite_difference():
    p = PathPayoff("asian_call", strike=S0, nominal=N, T=T)
    t, S, I = 0.08, 10.2, 10.1 * 0.08
    tau = T - t

    def price(s):
        m = (I + s * tau) / T
        sd = SIGMA * tau**1.5 / np.sqrt(3) / T
        d = (m - S0) / sd
        return N * ((m - S0) * norm.cdf(d) + sd * norm.pdf(d))

    h = 1e-5
    fd = (price(S + h) - price(S - h)) / (2 * h)
    assert bachelier_delta(p, t, S, I, SIGMA) == pytest.approx(fd, rel=1e-6)
