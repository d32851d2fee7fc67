import numpy as np
import pytest

from sighedge.frictionless import HedgePlan, fair_price, hedge_ratio, simulate_replication
from sighedge.payoffs import PathPayoff, SignaturePayoff, asian_poly, bachelier_delta, european_poly
from sighedge.signature import SampledPath, SignatureState, path_signature
from sighedge.tensor_algebra import TensorSeries

N, T, SIGMA, S0 = 200.0, 0.2, 2.0, 10.0


def asian_quadratic():
    return asian_poly([0, 0, 1], S0, S0, N, T)


def state_of(t, S, trunc=4):
    sig = path_signature(SampledPath.time_augmented(t, S), trunc)
    return SignatureState(sig, trunc, float(t[-1]))


def test_fair_prices():
    assert fair_price(asian_quadratic(), SIGMA) == pytest.approx(53.3333333333)
    assert fair_price(european_poly([0, 0, 1], S0, S0, N, T=T), SIGMA) == pytest.approx(N * SIGMA**2 * T)
    with pytest.raises(TypeError):
        fair_price(PathPayoff("european_call", strike=S0, nominal=N, T=T), SIGMA)


def test_hedge_plan_initial_wealth():
    plan = HedgePlan(asian_quadratic(), SIGMA)
    assert plan.V0 == pytest.approx(53.3333333333)


def test_hedge_ratio_examples():
    t = np.linspace(0, 0.1, 21)
    S = S0 + 0.3 * np.sin(20 * t)
    euro = european_poly([0, 0, 1], S0, S0, N, T=T)
    assert hedge_ratio(euro, 0.1, state_of(t, S), SIGMA) == pytest.approx(2 * N * (S[-1] - S0))
    fwd = SignaturePayoff(TensorSeries(2, 1, {(2,): N}), T)
    assert hedge_ratio(fwd, 0.1, state_of(t, S), SIGMA) == pytest.approx(N)
    tT = np.linspace(0, T, 41)
    ST = S0 + 0.3 * np.sin(20 * tT)
    assert hedge_ratio(asian_quadratic(), T, state_of(tT, ST), SIGMA) == 0.0


def test_asian_hedge_ratio_against_bachelier_delta():
    t = np.linspace(0, 0.08, 81)
    S = S0 + 0.4 * np.cos(30 * t) - 0.4
    want = bachelier_delta(PathPayoff("asian_quadratic", strike=S0, nominal=N, T=T), 0.08, S[-1],
                           np.trapezoid(S, t), SIGMA)
    assert hedge_ratio(asian_quadratic(), 0.08, state_of(t, S), SIGMA) == pytest.approx(float(want), rel=1e-10)


def test_static_forward_replicates_exactly():
    fwd = SignaturePayoff(TensorSeries(2, 1, {(2,): N, (): S0 * N}), T)
    st = simulate_replication(fwd, SIGMA, 0.0, 7, 500, seed=1)
    assert st.max_abs < 1e-10


def test_zero_volatility_replicates_exactly():
    st = simulate_replication(asian_quadratic(), 1e-300, 0.0, 50, 100, seed=1)
    assert st.max_abs < 1e-12


def test_replication_error_halves_when_steps_quadruple():
    r = [simulate_replication(asian_quadratic(), SIGMA, 0.0, n, 4000, seed=2).rms for n in (100, 400, 1600)]
    assert r[0] / r[1] == pytest.approx(2.0, rel=0.1)
    assert r[1] / r[2] == pytest.approx(2.0, rel=0.1)


def test_replication_rms_matches_discrete_hedging_variance():
    # Var ≈ (h/2) σ⁴ ∫ Γ_t² dt with gamma Γ_t = 2N (T-t)²/T² for the Asian quadratic
    n = 400
    h = T / n
    want = np.sqrt(0.5 * h * SIGMA**4 * 4 * N**2 * T / 5)
    st = simulate_replication(asian_quadratic(), SIGMA, 0.0, n, 8000, seed=4)
    assert st.rms == pytest.approx(want, rel=0.05)
    assert abs(st.mean) < 4 * st.rms / np.sqrt(8000)


def test_replication_under_drift_still_converges():
    a = simulate_replication(asian_quadratic(), SIGMA, 3.0, 100, 2000, seed=5).rms
    b = simulate_replication(asian_quadratic(), SIGMA, 3.0, 1600, 2000, seed=5).rms
    assert b < a / 3


def test_replication_csv(tmp_path):
    st = simulate_replication(asian_quadratic(), SIGMA, 0.0, 10, 20, seed=1)
    f = tmp_path / "rep.csv"
    st.to_csv(f)
    rows = f.read_text().splitlines()
    assert rows[0] == "path_id,error" and len(rows) == 1 + 20 + 2
