"""Impacted Bachelier market simulator, feedback strategies, P&L and the MQV criterion.

Every strategy is reduced to the affine feedback form

    θ_k = <Q_k, Z_k> + β_k X_k + γ_k Δ(t_k, P_k, I_k)

where ``Z_k`` is the truncated signature of the state path ``(t, P, X)`` (or of
``(t, P)`` when the strategy ignores inventory words) and ``Δ`` is an optional
closed-form Bachelier delta.  A single numba kernel then runs every strategy.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numba as nb
import numpy as np

from . import _rng
from ._dense import Layout, layout, transfer
from .params import MarketParams
from .payoffs import PathPayoff, PayoffKind, SignaturePayoff, UnsupportedPayoff, bachelier_delta
from .riccati import (
    EuQuadraticClosedForm,
    NoPermanentClosedForm,
    PayoffTaylor,
    RiccatiParams,
    RiccatiSolution,
    solve_backward,
)
from .signature import BLOCK, chen_block
from .tensor_algebra import bracket, restrict_letters

log = logging.getLogger(__name__)

DELTA_CODES = {
    PayoffKind.EUROPEAN_CALL: 1,
    PayoffKind.ASIAN_CALL: 2,
    PayoffKind.EUROPEAN_QUADRATIC: 3,
    PayoffKind.ASIAN_QUADRATIC: 4,
}


@dataclass
class FeedbackPlan:
    """Per-step coefficients of the affine feedback on a given time grid."""

    dim: int
    level: int
    Q: np.ndarray  # (n_steps + 1, layout size)
    beta: np.ndarray
    gamma: np.ndarray
    delta_code: int = 0
    delta_args: tuple = (0.0, 0.0, 1.0, 1.0)  # strike, nominal, maturity, sigma


class Strategy:
    """Base class; subclasses build a :class:`FeedbackPlan` on a simulation grid."""

    name = "strategy"
    dim = 2
    level = 0

    def plan(self, times: np.ndarray, lay: Layout) -> FeedbackPlan:
        raise NotImplementedError

    def default_V0(self) -> float | None:
        return None

    def default_X0(self) -> float | None:
        return None


class ZeroTrading(Strategy):
    name = "zero"

    def plan(self, times, lay):
        n = times.size
        return FeedbackPlan(lay.dim, 0, np.zeros((n, lay.size)), np.zeros(n), np.zeros(n))


@dataclass
class SigFeedback(Strategy):
    """Optimal feedback from the Riccati solution.

    ``θ* = (1/2η)[ν(X - <xi_t▷2, P̂>) - <ν ψ_t▷2 + ψ_t▷3, Ẑ>]`` with the model's own ν, η.
    """

    solution: RiccatiSolution
    name: str = "sig"
    dim = 3

    @property
    def level(self) -> int:
        p = self.solution.params
        return max(p.trunc - 1, 0)

    def plan(self, times, lay):
        p = self.solution.params
        nu, eta = p.market.nu, p.market.eta
        lay_psi = self.solution.layout
        Q = np.zeros((times.size, lay.size))
        for k, t in enumerate(times):
            G = transfer(self.solution.feedback_tensor(float(t)), lay_psi, lay)
            H = transfer(p.taylor.hedge(float(t)), p.taylor.lay, lay)
            Q[k] = -(G + nu * H) / (2.0 * eta)
        n = times.size
        return FeedbackPlan(3, self.level, Q, np.full(n, nu / (2.0 * eta)), np.zeros(n))

    def default_V0(self):
        return self.solution.indifference_price

    def default_X0(self):
        return self.solution.params.X0


@dataclass
class NoPermanentBenchmark(Strategy):
    """Explicit ν=0 tracking strategy ``θ = (f/η)(<ξ̂_t, Ẑ> - X)``, blind to permanent impact."""

    closed_form: NoPermanentClosedForm
    name: str = "no_permanent"
    dim = 2
    _price: float | None = field(default=None, repr=False)

    @classmethod
    def from_payoff(cls, payoff: SignaturePayoff, market: MarketParams, trunc: int | None = None):
        m0 = market.with_(nu=0.0, mu=0.0)
        return cls(NoPermanentClosedForm(RiccatiParams(m0, payoff, trunc)))

    @property
    def level(self) -> int:
        return self.closed_form.p.hedge_degree

    def plan(self, times, lay):
        cf = self.closed_form
        hat = transfer(cf.target(times), cf.lay2, lay)
        f = cf.f(times)
        g = f / cf.eta
        return FeedbackPlan(2, self.level, g[:, None] * hat, -g, np.zeros(times.size))

    def default_V0(self):
        if self._price is None:
            n = 400
            self._price = self.closed_form.solution(n_fine=n, node_every=n).indifference_price
        return self._price

    def default_X0(self):
        return self.closed_form.p.X0


@dataclass
class DeltaTracking(Strategy):
    """Track the closed-form Bachelier delta of a path payoff at the ν=0 optimal rate ``f/η``."""

    payoff: PathPayoff
    market: MarketParams
    name: str = "delta_tracking"
    dim = 2
    level = 0

    def __post_init__(self):
        if self.payoff.kind not in DELTA_CODES:
            raise UnsupportedPayoff(f"no closed-form Bachelier delta for {self.payoff.kind.value}")
        if self.market.eta <= 0:
            raise ValueError("delta tracking needs eta > 0")

    def f(self, t):
        m = self.market
        c = math.sqrt(m.lam * m.sigma**2 * m.eta / 2.0)
        return c * np.tanh(c * (m.T - np.asarray(t)) / m.eta)

    def plan(self, times, lay):
        g = self.f(times) / self.market.eta
        p = self.payoff
        return FeedbackPlan(
            2, 0, np.zeros((times.size, lay.size)), -g, g, DELTA_CODES[p.kind],
            (p.strike, p.nominal, p.T, self.market.sigma),
        )


@dataclass
class EuQuadraticFeedback(Strategy):
    """Scalar closed-form feedback for ``xi = Γ·22``."""

    closed_form: EuQuadraticClosedForm
    name: str = "eu_quadratic_closed_form"
    dim = 2
    level = 1

    def plan(self, times, lay):
        cf = self.closed_form
        kappa = (cf.nu - 2.0 * cf.f(times) * (1.0 - cf.nu * cf.Gamma)) / (2.0 * cf.eta)
        H = transfer(cf.p.taylor.hedge(times), cf.p.taylor.lay, lay)
        return FeedbackPlan(2, 1, -kappa[:, None] * H, kappa, np.zeros(times.size))

    def default_V0(self):
        return self.closed_form.p.taylor.price + float(self.closed_form.psi(0.0)[0])

    def default_X0(self):
        return self.closed_form.p.X0


@dataclass
class PerfectHedge(Strategy):
    """Frictionless replication: reach the Bachelier delta ``<xi_t▷2, P̂_t>`` within one step."""

    payoff: SignaturePayoff
    sigma: float
    name: str = "perfect_hedge"
    dim = 2

    @property
    def level(self) -> int:
        return PayoffTaylor(self.payoff, self.sigma).hedge_degree

    def plan(self, times, lay):
        tay = PayoffTaylor(self.payoff, self.sigma)
        h = np.diff(times)
        inv = np.r_[1.0 / h, 0.0]
        H = transfer(tay.hedge(times), tay.lay, lay)
        return FeedbackPlan(2, self.level, inv[:, None] * H, -inv, np.zeros(times.size))

    def default_V0(self):
        return PayoffTaylor(self.payoff, self.sigma).price


# kernel


@nb.njit(cache=True, nogil=True)
def _norm_cdf(x):
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


@nb.njit(cache=True, nogil=True)
def _delta(code, t, P, I, K, N, T, sigma):
    tau = T - t
    if tau < 0.0:
        tau = 0.0
    if code == 1:
        sd = sigma * math.sqrt(tau)
        if sd <= 0.0:
            return N if P > K else 0.0
        return N * _norm_cdf((P - K) / sd)
    if code == 3:
        return 2.0 * N * (P - K)
    m = (I + P * tau) / T
    if code == 4:
        return 2.0 * N * (m - K) * tau / T
    s = sigma * tau**1.5 / (math.sqrt(3.0) * T)
    if s <= 0.0:
        return N * tau / T if m > K else 0.0
    return N * _norm_cdf((m - K) / s) * tau / T


@nb.njit(cache=True, nogil=True)
def _sim_kernel(
    Z, U, times, mu, sigma, nu, eta, S0, X0, c0,
    offs, d, M, q_idx, q_val, beta, gamma, dcode, dargs, m_idx, m_val, h_idx, h_val,
    rec_n, rec,
    out_Rprev, out_QV, out_W, out_mark, out_PT, out_IT, out_max, out_min, out_qvi,
):
    n_paths, n_steps = Z.shape[0], Z.shape[1]
    NW = offs[M + 1]
    top = max(d ** M, d)
    sig = np.zeros((NW, BLOCK))
    ta = np.empty((top, BLOCK))
    tb = np.empty((top, BLOCK))
    inc = np.empty((d, BLOCK))
    S = np.empty(BLOCK)
    X = np.empty(BLOCK)
    P = np.empty(BLOCK)
    cash = np.empty(BLOCK)
    I = np.empty(BLOCK)
    Rp = np.empty(BLOCK)
    qv = np.empty(BLOCK)
    qvi = np.empty(BLOCK)
    mx = np.empty(BLOCK)
    mn = np.empty(BLOCK)
    th = np.empty(BLOCK)
    bq = np.empty(BLOCK)
    bm = np.empty(BLOCK)
    bh = np.empty(BLOCK)
    K, N, T, sg = dargs[0], dargs[1], dargs[2], dargs[3]
    use_u = U.shape[1] == n_steps
    for p0 in range(0, n_paths, BLOCK):
        nb_ = min(BLOCK, n_paths - p0)
        sig[:, :] = 0.0
        sig[0, :] = 1.0
        for b in range(nb_):
            S[b] = S0
            X[b] = X0
            P[b] = S0
            cash[b] = 0.0
            I[b] = 0.0
            qv[b] = 0.0
            qvi[b] = 0.0
            mx[b] = S0
            mn[b] = S0
        for k in range(n_steps + 1):
            t = times[k]
            for b in range(nb_):
                bq[b] = 0.0
                bm[b] = 0.0
                bh[b] = 0.0
            for jj in range(q_idx.size):
                j = q_idx[jj]
                g = q_val[k, jj]
                if g != 0.0:
                    for b in range(nb_):
                        bq[b] += g * sig[j, b]
            for jj in range(m_idx.size):
                j = m_idx[jj]
                g = m_val[k, jj]
                if g != 0.0:
                    for b in range(nb_):
                        bm[b] += g * sig[j, b]
            for jj in range(h_idx.size):
                j = h_idx[jj]
                g = h_val[k, jj]
                if g != 0.0:
                    for b in range(nb_):
                        bh[b] += g * sig[j, b]
            for b in range(nb_):
                R = c0 + X[b] * P[b] - cash[b] - bm[b]
                if k == n_steps:
                    out_W[p0 + b] = X[b] * P[b] - cash[b]
                    out_mark[p0 + b] = bm[b]
                    out_Rprev[p0 + b] = Rp[b]
                    out_QV[p0 + b] = qv[b]
                    out_PT[p0 + b] = P[b]
                    out_IT[p0 + b] = I[b]
                    out_max[p0 + b] = mx[b]
                    out_min[p0 + b] = mn[b]
                    out_qvi[p0 + b] = qvi[b]
                    if p0 + b < rec_n:
                        rec[p0 + b, k, 0] = S[b]
                        rec[p0 + b, k, 1] = P[b]
                        rec[p0 + b, k, 2] = X[b]
                        rec[p0 + b, k, 3] = 0.0
                        rec[p0 + b, k, 4] = R
                    continue
                if k > 0 and k < n_steps:
                    qv[b] += (R - Rp[b]) ** 2
                Rp[b] = R
                theta = bq[b] + beta[k] * X[b]
                if dcode != 0:
                    theta += gamma[k] * _delta(dcode, t, P[b], I[b], K, N, T, sg)
                th[b] = theta
                if p0 + b < rec_n:
                    rec[p0 + b, k, 0] = S[b]
                    rec[p0 + b, k, 1] = P[b]
                    rec[p0 + b, k, 2] = X[b]
                    rec[p0 + b, k, 3] = theta
                    rec[p0 + b, k, 4] = R
            if k == n_steps:
                break
            h = times[k + 1] - t
            sq = math.sqrt(h)
            for b in range(nb_):
                theta = th[b]
                dev = X[b] - bh[b]
                qvi[b] += sigma * sigma * dev * dev * h
                Sn = S[b] + mu * h + sigma * sq * Z[p0 + b, k]
                Xn = X[b] + theta * h
                Pn = Sn + nu * (Xn - X0)
                cash[b] += (P[b] + eta * theta) * theta * h
                I[b] += 0.5 * (P[b] + Pn) * h
                if use_u:
                    a0 = P[b]
                    r = math.sqrt((Pn - a0) ** 2 - 2.0 * sigma * sigma * h * math.log(U[p0 + b, k]))
                    hi = 0.5 * (a0 + Pn + r)
                    lo = 0.5 * (a0 + Pn - r)
                else:
                    hi = max(P[b], Pn)
                    lo = min(P[b], Pn)
                if hi > mx[b]:
                    mx[b] = hi
                if lo < mn[b]:
                    mn[b] = lo
                inc[0, b] = h
                inc[1, b] = Pn - P[b]
                if d > 2:
                    inc[2, b] = Xn - X[b]
                S[b] = Sn
                X[b] = Xn
                P[b] = Pn
            if M > 0:
                chen_block(sig, inc, ta, tb, offs, d, M, nb_)


def _sparse_cols(A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    idx = np.flatnonzero(np.any(A != 0.0, axis=0)).astype(np.int64)
    return idx, np.ascontiguousarray(A[:, idx])


@dataclass
class SimResult:
    """Per-path P&L statistics for one strategy run.

    Full trajectories are kept only for the first ``n_record`` paths
    (columns S, P, X, theta, R); per-path terminal quantities are kept for all.
    """

    strategy: str
    times: np.ndarray
    R_T: np.ndarray
    QV: np.ndarray
    payoff: np.ndarray
    qv_integrand: np.ndarray
    V0: float
    X0: float
    lam: float
    nu: float
    seed: int
    trajectories: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def n_paths(self) -> int:
        return self.R_T.size

    @property
    def utility(self) -> np.ndarray:
        return self.R_T - 0.5 * self.lam * self.QV

    @property
    def mqv(self) -> float:
        return float(self.utility.mean())

    @property
    def mqv_se(self) -> float:
        return float(self.utility.std(ddof=1) / math.sqrt(self.n_paths)) if self.n_paths > 1 else float("nan")

    @property
    def mean_R(self) -> float:
        return float(self.R_T.mean())

    def shifted(self, V0: float) -> "SimResult":
        """Same paths with another initial wealth (R_T is affine in V0 with slope 1)."""
        out = SimResult(**{**self.__dict__})
        out.R_T = self.R_T + (V0 - self.V0)
        out.V0 = V0
        if self.trajectories is not None:
            tr = self.trajectories.copy()
            tr[:, :, 4] += V0 - self.V0
            out.trajectories = tr
        return out

    def write_paths_csv(self, file) -> None:
        with open(file, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["path_id", "R_T", "QV", "payoff"])
            for i, (r, q, h) in enumerate(zip(self.R_T, self.QV, self.payoff)):
                w.writerow([i, repr(float(r)), repr(float(q)), repr(float(h))])

    def write_trajectories_csv(self, file) -> None:
        if self.trajectories is None:
            raise ValueError("no recorded trajectories")
        with open(file, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["path_id", "t", "S", "P", "X", "theta", "R"])
            for i, tr in enumerate(self.trajectories):
                for t, row in zip(self.times, tr):
                    w.writerow([i, repr(float(t))] + [repr(float(x)) for x in row])

    def aggregate_row(self, pi: float | None = None) -> dict:
        return {"strategy": self.strategy, "nu": self.nu, "MQV": self.mqv, "SE": self.mqv_se, "pi": pi}

    def histogram(self, bins: int = 50, range_: tuple | None = None) -> tuple[np.ndarray, np.ndarray]:
        return np.histogram(self.R_T, bins=bins, range=range_)


def write_aggregate_csv(rows: list[dict], file) -> None:
    with open(file, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["strategy", "nu", "MQV", "SE", "pi"])
        w.writeheader()
        for r in rows:
            w.writerow(r)


def write_histogram_csv(results: list[SimResult], file, bins: int = 60) -> None:
    lo = min(float(r.R_T.min()) for r in results)
    hi = max(float(r.R_T.max()) for r in results)
    with open(file, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["strategy", "bin_left", "bin_right", "count"])
        for r in results:
            cnt, edges = r.histogram(bins, (lo, hi))
            for c, a, b in zip(cnt, edges[:-1], edges[1:]):
                w.writerow([r.strategy, repr(float(a)), repr(float(b)), int(c)])


def run_paths(
    params: MarketParams,
    strategy: Strategy,
    payoff: SignaturePayoff,
    n_paths: int,
    n_steps: int,
    seed: int,
    true_payoff: PathPayoff | None = None,
    *,
    antithetic: bool = False,
    threads: int = 1,
    n_record: int = 0,
    bridge: bool = True,
) -> SimResult:
    """Simulate ``n_paths`` Euler paths of the impacted market under ``strategy``.

    The running mark is ``<xi_t, P̂_t>`` of the signature ``payoff``; the
    terminal value uses ``true_payoff`` when given (bridge-sampled path extrema
    for barrier and look-back kinds when ``bridge`` is set).
    """
    if n_steps < 1 or n_paths < 1:
        raise ValueError("n_steps and n_paths must be >= 1")
    if abs(payoff.T - params.T) > 1e-14:
        raise ValueError("payoff maturity differs from the market horizon")
    times = np.linspace(0.0, params.T, n_steps + 1)
    tay = PayoffTaylor(payoff, params.sigma)
    X0 = params.X0
    if X0 is None:
        X0 = strategy.default_X0()
    if X0 is None:
        X0 = tay.delta0
    V0 = params.V0 if params.V0 is not None else strategy.default_V0()
    if V0 is None:
        raise ValueError(f"strategy {strategy.name} has no default initial wealth; set params.V0")
    d = max(strategy.dim, 2)
    M = max(strategy.level, tay.lay.trunc, tay.hedge_degree)
    lay = layout(d, M)
    plan = strategy.plan(times, lay)
    q_idx, q_val = _sparse_cols(plan.Q)
    m_idx, m_val = _sparse_cols(transfer(tay.xi(times), tay.lay, lay))
    h_idx, h_val = _sparse_cols(transfer(tay.hedge(times), tay.lay, lay))
    need_u = bridge and true_payoff is not None and true_payoff.needs_extrema
    c0 = V0 - X0 * params.S0
    dargs = np.array(plan.delta_args, dtype=float)
    beta = np.ascontiguousarray(plan.beta, dtype=float)
    gamma = np.ascontiguousarray(plan.gamma, dtype=float)

    def work(s, e, rng):
        n = e - s
        Z = _rng.standard_normals(rng, n, n_steps, antithetic)
        U = rng.random((n, n_steps)) if need_u else np.empty((n, 0))
        outs = [np.empty(n) for _ in range(9)]
        rec_n = max(0, min(n_record - s, n))
        rec = np.zeros((max(rec_n, 1), n_steps + 1, 5))
        _sim_kernel(
            Z, U, times, params.mu, params.sigma, params.nu, params.eta, params.S0, X0, c0,
            lay.offs, d, M, q_idx, q_val, beta, gamma, plan.delta_code, dargs,
            m_idx, m_val, h_idx, h_val, rec_n, rec, *outs,
        )
        return outs, rec[:rec_n]

    parts = _rng.map_chunks(work, n_paths, seed, threads)
    Rprev, QVp, W, mark, PT, IT, mxs, mns, qvi = (np.concatenate([p[0][i] for p in parts]) for i in range(9))
    if true_payoff is None:
        H = mark
    else:
        H = _terminal_payoff(true_payoff, params, times, PT, IT, mxs, mns)
    R_T = c0 + W - H
    QV = QVp + (R_T - Rprev) ** 2
    rec = np.concatenate([p[1] for p in parts]) if n_record else None
    if rec is not None and rec.size:
        rec[:, -1, 4] = R_T[: rec.shape[0]]
    return SimResult(
        strategy.name, times, R_T, QV, H, qvi, float(V0), float(X0), params.lam, params.nu, seed, rec,
        {"n_steps": n_steps, "antithetic": antithetic, "level": M, "dim": d},
    )


def _terminal_payoff(p: PathPayoff, params, times, PT, IT, mx, mn) -> np.ndarray:
    N, K, T = p.nominal, p.strike, params.T
    k = p.kind
    if k is PayoffKind.EUROPEAN_CALL:
        return N * np.maximum(PT - K, 0.0)
    if k is PayoffKind.EUROPEAN_QUADRATIC:
        return N * (PT - K) ** 2
    if k is PayoffKind.ASIAN_CALL:
        return N * np.maximum(IT / T - K, 0.0)
    if k is PayoffKind.ASIAN_QUADRATIC:
        return N * (IT / T - K) ** 2
    if k is PayoffKind.ONE_TOUCH_MAX:
        return N * (mx >= p.barrier).astype(float)
    if k is PayoffKind.LOOKBACK_FLOAT_CALL:
        return N * (PT - mn)
    raise UnsupportedPayoff(str(k))


def step_market(state: dict, theta: float, dW: float, dt: float, params: MarketParams) -> dict:
    """One Euler step of the impacted market on a plain state dict.

    Keys: ``t, S, X, P, cash`` (cash is the accumulated ``∫ P̃ θ dt``).
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    X0 = state.get("X0", params.X0 or 0.0)
    S = state["S"] + params.mu * dt + params.sigma * dW
    X = state["X"] + theta * dt
    P_exec = state["P"] + params.eta * theta
    return {
        "t": state["t"] + dt,
        "S": S,
        "X": X,
        "P": S + params.nu * (X - X0),
        "cash": state["cash"] + P_exec * theta * dt,
        "X0": X0,
    }


def feedback_speed(t: float, X: float, sig_Z, sol: RiccatiSolution) -> float:
    """Optimal speed from the current state signature ``sig_Z`` (a three-letter TensorSeries)."""
    p = sol.params
    nu, eta = p.market.nu, p.market.eta
    G = sol.layout.from_dense(sol.feedback_tensor(t))
    H = layout(2, p.taylor.lay.trunc).from_dense(p.taylor.hedge(t))
    sig_P = restrict_letters(sig_Z, 2)
    return (nu * (X - bracket(H, sig_P)) - bracket(G, sig_Z)) / (2.0 * eta)


def delta_tracking_speed(t: float, X: float, P: float, running_integral: float, payoff: PathPayoff,
                         params: MarketParams) -> float:
    """``θ = (f(t)/η)(Δ(t, P) - X)`` with the ν=0 optimal rate ``f``."""
    strat = DeltaTracking(payoff, params)
    return float(strat.f(t) / params.eta * (bachelier_delta(payoff, t, P, running_integral, params.sigma) - X))


def indifference_price_riccati(payoff: SignaturePayoff, params: MarketParams, n_ode: int = 2000,
                               trunc: int | None = None) -> float:
    return solve_backward(RiccatiParams(params, payoff, trunc, n_ode)).indifference_price


def indifference_price_mc(
    path_payoff: PathPayoff | None,
    xi: SignaturePayoff,
    params: MarketParams,
    n_paths: int,
    n_steps: int,
    seed: int,
    solution: RiccatiSolution | None = None,
    **kw,
) -> tuple[float, float, SimResult]:
    """``π̃ = -MQV`` of the signature strategy started from zero wealth.

    Returns the estimate, its standard error and the underlying run.
    """
    if solution is None:
        solution = solve_backward(RiccatiParams(params, xi))
    run = run_paths(params.with_(V0=0.0), SigFeedback(solution), xi, n_paths, n_steps, seed, path_payoff, **kw)
    return -run.mqv, run.mqv_se, run


def pooled_gap(a: SimResult, b: SimResult) -> tuple[float, float]:
    """``MQV(a) - MQV(b)`` and its pooled standard error."""
    return a.mqv - b.mqv, math.hypot(a.mqv_se, b.mqv_se)


def dump_run(result: SimResult, out_dir: Path, tag: str) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    result.write_paths_csv(out_dir / f"{tag}_paths.csv")
    if result.trajectories is not None and result.trajectories.size:
        result.write_trajectories_csv(out_dir / f"{tag}_trajectories.csv")
