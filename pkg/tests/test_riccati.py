import math

import numpy as np
import pytest

from sighedge._dense import layout
from sighedge.params import MarketParams
from sighedge.payoffs import asian_poly, european_poly
from sighedge.riccati import (
    BLOWUP_GUARD,
    EuQuadraticClosedForm,
    NoPermanentClosedForm,
    PayoffTaylor,
    PreconditionError,
    RiccatiBlowUp,
    RiccatiParams,
    closed_form_eu_quadratic,
    closed_form_no_permanent,
    indifference_price,
    psi_support,
    riccati_rhs,
    solve_backward,
)
from sighedge.tensor_algebra import TensorSeries, lift_2_to_3, shuffle

N, T, SIGMA, S0 = 200.0, 0.2, 2.0, 10.0
M = MarketParams()


def asian_quadratic():
    return asian_poly([0, 0, 1], S0, S0, N, T)


def euro_quadratic():
    return european_poly([0, 0, 1], S0, S0, N, T=T)


@pytest.fixture(scope="module")
def asian_solutions():
    return {nu: solve_backward(RiccatiParams(M.with_(nu=nu), asian_quadratic())) for nu in (0.0, 5e-4, 1e-3, 1.5e-3)}


def test_preconditions():
    with pytest.raises(PreconditionError):
        RiccatiParams(M.with_(eta=0.0), asian_quadratic())
    with pytest.raises(PreconditionError):
        RiccatiParams(M.with_(T=0.3), asian_quadratic())
    with pytest.raises(PreconditionError):
        RiccatiParams(M, asian_quadratic(), trunc=3)


def test_default_truncation_is_twice_hedge_degree():
    assert RiccatiParams(M, asian_quadratic()).trunc == 4
    assert RiccatiParams(M, euro_quadratic()).trunc == 2


def test_rhs_at_zero_is_risk_term():
    p = RiccatiParams(M.with_(nu=0.0), asian_quadratic())
    t = 0.07
    got = riccati_rhs(TensorSeries.zero(3, p.trunc), t, p)
    tay = PayoffTaylor(p.payoff, SIGMA)
    hedge = layout(2, tay.lay.trunc).from_dense(tay.hedge(t))
    B = TensorSeries(3, 1, {(3,): 1.0, (): p.X0}) - lift_2_to_3(hedge)
    want = shuffle(B, B, p.trunc) * (-0.5 * M.lam * SIGMA**2)
    assert got.max_abs_diff(want) < 1e-9


def test_rhs_has_no_words_beyond_trunc():
    p = RiccatiParams(M, asian_quadratic())
    psi = TensorSeries(3, 4, {(3, 3): 1.0, (2, 3, 2, 3): 0.1})
    assert riccati_rhs(psi, 0.1, p).degree <= 4


def test_zero_risk_aversion_and_no_permanent_impact_gives_zero():
    p = RiccatiParams(M.with_(lam=0.0, nu=0.0), asian_quadratic())
    sol = solve_backward(p)
    assert np.max(np.abs(sol.psi)) == 0.0
    assert sol.indifference_price == pytest.approx(53.3333333333)


def test_terminal_condition_and_grid(asian_solutions):
    sol = asian_solutions[1e-3]
    assert sol.times[0] == 0.0 and sol.times[-1] == pytest.approx(T)
    assert np.all(sol.psi[-1] == 0.0)


def test_table_of_indifference_prices(asian_solutions):
    table = {0.0: 79.559, 5e-4: 80.559, 1e-3: 81.218, 1.5e-3: 81.617}
    for nu, want in table.items():
        assert asian_solutions[nu].indifference_price == pytest.approx(want, rel=1e-2)
    assert asian_solutions[1e-3].psi0_empty == pytest.approx(81.218 - 53.333, rel=2e-2)


def test_prices_increase_with_permanent_impact(asian_solutions):
    prices = [asian_solutions[nu].indifference_price for nu in (0.0, 5e-4, 1e-3, 1.5e-3)]
    assert prices == sorted(prices)


def test_psi_nonnegative_without_drift_or_permanent_impact(asian_solutions):
    assert np.all(asian_solutions[0.0].psi[:, 0] >= -1e-12)


def test_richardson_ratio_of_rk4():
    vals = [solve_backward(RiccatiParams(M, asian_quadratic(), n_ode=n)).psi0_empty for n in (10, 20, 40)]
    ratio = (vals[0] - vals[1]) / (vals[1] - vals[2])
    assert 12 <= ratio <= 20


def test_no_permanent_closed_form_matches_ode(asian_solutions):
    p = RiccatiParams(M.with_(nu=0.0), asian_quadratic())
    cf = closed_form_no_permanent(p)
    ode = asian_solutions[0.0]
    assert cf.psi0_empty == pytest.approx(ode.psi0_empty, rel=1e-3)


def test_no_permanent_rate_function():
    p = RiccatiParams(M.with_(nu=0.0), asian_quadratic())
    cf = NoPermanentClosedForm(p)
    c = math.sqrt(M.lam * SIGMA**2 * M.eta / 2)
    assert cf.f(T) == 0.0
    assert cf.f(0.0) == pytest.approx(c * math.tanh(c * T / M.eta))


def test_no_permanent_closed_form_requires_conditions():
    with pytest.raises(PreconditionError):
        NoPermanentClosedForm(RiccatiParams(M, asian_quadratic()))


def test_european_quadratic_support_closure():
    sol = solve_backward(RiccatiParams(M, euro_quadratic()))
    allowed = {(), (2,), (3,), (2, 2), (2, 3), (3, 2), (3, 3)}
    support = set(psi_support(sol.psi[0], sol.layout, tol=1e-10))
    assert support <= allowed


def test_european_quadratic_closed_form_matches_ode():
    p = RiccatiParams(M, euro_quadratic())
    ode = solve_backward(p)
    cf = closed_form_eu_quadratic(p, 2 * N)
    assert cf.indifference_price == pytest.approx(ode.indifference_price, rel=1e-9)
    for t in (0.0, 0.05, 0.13):
        assert np.max(np.abs(cf.psi_at(t) - ode.psi_at(t))) < 1e-6


def test_european_quadratic_rate_vanishes_at_maturity_without_permanent_impact():
    cf = EuQuadraticClosedForm(RiccatiParams(M.with_(nu=0.0), euro_quadratic()), 2 * N)
    assert cf.f(T) == pytest.approx(0.0, abs=1e-15)


def test_hermite_interpolation_is_accurate_between_nodes():
    p = RiccatiParams(M, asian_quadratic())
    fine = solve_backward(p)
    coarse = solve_backward(p, store_every=50)
    t = 0.0371
    assert np.max(np.abs(coarse.psi_at(t) - fine.psi_at(t))) < 1e-6 * max(1.0, np.max(np.abs(fine.psi_at(t))))


def test_indifference_price_helper():
    p = RiccatiParams(M, asian_quadratic())
    assert indifference_price(p) == pytest.approx(solve_backward(p).indifference_price)


def test_blow_up_is_reported():
    # huge risk aversion with a high-order payoff overflows the guard
    xi = asian_poly([0, 0, 0, 0, 1], S0, S0, 1e6, T)
    with pytest.raises(RiccatiBlowUp) as e:
        solve_backward(RiccatiParams(M.with_(lam=1e6, eta=1e-6), xi, n_ode=50))
    assert e.value.value > BLOWUP_GUARD or not math.isfinite(e.value.value)
