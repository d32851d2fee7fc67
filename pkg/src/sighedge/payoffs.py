"""Signature payoffs, their time propagation, and the path-dependent benchmark payoffs."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.stats import norm

from .signature import SampledPath, expected_signature_bachelier
from .tensor_algebra import (
    EMPTY,
    TensorSeries,
    bracket,
    linear_combination,
    proj_series,
    proj_word,
    shuffle_power,
)


class UnsupportedPayoff(ValueError):
    """Raised when a closed-form quantity does not exist for a payoff kind."""


@dataclass(frozen=True)
class SignaturePayoff:
    """Payoff ``H_T = <xi, sig of (t, P)>`` with a two-letter series ``xi``."""

    xi: TensorSeries
    T: float
    N: float = 1.0
    description: str = ""

    def __post_init__(self) -> None:
        if self.xi.dim != 2:
            raise ValueError("signature payoffs live on the two-letter alphabet (t, P)")
        if self.T <= 0:
            raise ValueError("maturity must be positive")

    @property
    def degree(self) -> int:
        return self.xi.degree

    def hedge_degree(self, sigma: float) -> int:
        """Degree of ``xi_t ▷ 2``, the order of the hedge tensor."""
        return max(proj_word(xi_at(self, 0.0, sigma), (2,)).degree, proj_word(self.xi, (2,)).degree)

    def value(self, sig: TensorSeries) -> float:
        return bracket(self.xi, sig)


def _poly_payoff(alpha: Sequence[float], base: TensorSeries, N: float) -> TensorSeries:
    deg = len(alpha) - 1
    trunc = max(deg * base.degree, 0)
    terms = [(N * float(a), shuffle_power(base, k, trunc)) for k, a in enumerate(alpha) if a != 0]
    return linear_combination(terms, 2).with_trunc(trunc) if terms else TensorSeries.zero(2, trunc)


def european_poly(alpha: Sequence[float], K: float, S0: float, N: float, *, T: float) -> SignaturePayoff:
    """``N Σ_k α_k (S_T - K)^k`` as ``N Σ_k α_k (e_2 + ø (S0-K))^{⊔k}``."""
    base = TensorSeries(2, 1, {(2,): 1.0, EMPTY: S0 - K})
    return SignaturePayoff(_poly_payoff(alpha, base, N), T, N, f"european poly {list(alpha)} K={K}")


def asian_poly(alpha: Sequence[float], K: float, S0: float, N: float, T: float) -> SignaturePayoff:
    """``N Σ_k α_k (A_T - K)^k`` with ``A_T = S0 + (1/T) <21, sig>`` the running average."""
    if T <= 0:
        raise ValueError("maturity must be positive")
    base = TensorSeries(2, 2, {(2, 1): 1.0 / T, EMPTY: S0 - K})
    return SignaturePayoff(_poly_payoff(alpha, base, N), T, N, f"asian poly {list(alpha)} K={K}")


def xi_at(payoff: SignaturePayoff, t: float, sigma: float) -> TensorSeries:
    """``xi_t = xi |_{E_{T-t}}``, the conditional-expectation tensor at time ``t``."""
    if t < 0 or t > payoff.T + 1e-15:
        raise ValueError(f"t={t} outside [0, {payoff.T}]")
    tau = max(payoff.T - t, 0.0)
    if tau == 0.0:
        return payoff.xi
    E = expected_signature_bachelier(tau, sigma, payoff.xi.trunc)
    return proj_series(payoff.xi, E)


def xi_ode_residual(payoff: SignaturePayoff, t: float, sigma: float, h: float) -> float:
    """Max-norm of ``d/dt xi_t + xi_t▷1 + (σ²/2) xi_t▷22`` with a central difference."""
    fwd = xi_at(payoff, t + h, sigma)
    bwd = xi_at(payoff, t - h, sigma)
    mid = xi_at(payoff, t, sigma)
    res = linear_combination(
        [
            (0.5 / h, fwd),
            (-0.5 / h, bwd),
            (1.0, proj_word(mid, (1,))),
            (0.5 * sigma * sigma, proj_word(mid, (2, 2))),
        ],
        2,
    )
    return max((abs(c) for c in res.coeffs.values()), default=0.0)


# path-dependent payoffs


class PayoffKind(str, enum.Enum):
    EUROPEAN_CALL = "european_call"
    ASIAN_CALL = "asian_call"
    ONE_TOUCH_MAX = "one_touch_max"
    LOOKBACK_FLOAT_CALL = "lookback_float_call"
    EUROPEAN_QUADRATIC = "european_quadratic"
    ASIAN_QUADRATIC = "asian_quadratic"


@dataclass(frozen=True)
class PathPayoff:
    """Payoff evaluated directly on a sampled price path."""

    kind: PayoffKind
    strike: float = 0.0
    barrier: float = 0.0
    nominal: float = 1.0
    T: float = 1.0
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", PayoffKind(self.kind))
        for name in ("strike", "barrier", "nominal", "T"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @property
    def needs_extrema(self) -> bool:
        return self.kind in (PayoffKind.ONE_TOUCH_MAX, PayoffKind.LOOKBACK_FLOAT_CALL)

    def as_signature_payoff(self, S0: float) -> SignaturePayoff:
        """Exact signature form for the quadratic kinds."""
        if self.kind is PayoffKind.EUROPEAN_QUADRATIC:
            return european_poly([0, 0, 1], self.strike, S0, self.nominal, T=self.T)
        if self.kind is PayoffKind.ASIAN_QUADRATIC:
            return asian_poly([0, 0, 1], self.strike, S0, self.nominal, self.T)
        raise UnsupportedPayoff(f"{self.kind.value} has no finite signature representation")


def payoff_values(
    p: PathPayoff,
    times: np.ndarray,
    P: np.ndarray,
    path_max: np.ndarray | None = None,
    path_min: np.ndarray | None = None,
) -> np.ndarray:
    """Vectorized payoff over price paths ``P`` of shape (paths, points).

    ``path_max``/``path_min`` override the grid extrema (e.g. bridge-sampled
    continuous-path extrema); by default the grid values are used.
    """
    P = np.atleast_2d(np.asarray(P, dtype=float))
    T = times[-1] - times[0]
    N = p.nominal
    k = p.kind
    if k is PayoffKind.EUROPEAN_CALL:
        return N * np.maximum(P[:, -1] - p.strike, 0.0)
    if k in (PayoffKind.ASIAN_CALL, PayoffKind.ASIAN_QUADRATIC):
        avg = np.trapezoid(P, times, axis=1) / T
        if k is PayoffKind.ASIAN_CALL:
            return N * np.maximum(avg - p.strike, 0.0)
        return N * (avg - p.strike) ** 2
    if k is PayoffKind.EUROPEAN_QUADRATIC:
        return N * (P[:, -1] - p.strike) ** 2
    if k is PayoffKind.ONE_TOUCH_MAX:
        mx = P.max(axis=1) if path_max is None else path_max
        return N * (mx >= p.barrier).astype(float)
    if k is PayoffKind.LOOKBACK_FLOAT_CALL:
        mn = P.min(axis=1) if path_min is None else path_min
        return N * (P[:, -1] - mn)
    raise UnsupportedPayoff(str(k))


def evaluate_path_payoff(p: PathPayoff, path: SampledPath) -> float:
    """Payoff of a single sampled path whose last coordinate is the price."""
    return float(payoff_values(p, path.times, path.values[:, -1][None, :])[0])


def bridge_extrema(
    P: np.ndarray, sigma: float, h: float, rng: np.random.Generator, which: str
) -> np.ndarray:
    """Sample the running max (``which="max"``) or min of the continuous path.

    Between grid points the price is a Brownian bridge with variance rate σ²,
    so a segment's maximum is ``(a + b + sqrt((b-a)² - 2σ²h log U)) / 2``.
    """
    a, b = P[:, :-1], P[:, 1:]
    U = rng.random(a.shape)
    r = np.sqrt((b - a) ** 2 - 2.0 * sigma * sigma * h * np.log(U))
    if which == "max":
        return (0.5 * (a + b + r)).max(axis=1)
    if which == "min":
        return (0.5 * (a + b - r)).min(axis=1)
    raise ValueError("which must be 'max' or 'min'")


# Bachelier closed forms (driftless, continuous monitoring)


def bachelier_price(p: PathPayoff, S0: float, sigma: float) -> float:
    T, N, K = p.T, p.nominal, p.strike
    k = p.kind
    sd = sigma * np.sqrt(T)
    if k is PayoffKind.EUROPEAN_CALL:
        d = (S0 - K) / sd
        return N * ((S0 - K) * norm.cdf(d) + sd * norm.pdf(d))
    if k is PayoffKind.ASIAN_CALL:
        sa = sigma * np.sqrt(T / 3.0)
        d = (S0 - K) / sa
        return N * ((S0 - K) * norm.cdf(d) + sa * norm.pdf(d))
    if k is PayoffKind.ONE_TOUCH_MAX:
        if p.barrier <= S0:
            return N
        return 2.0 * N * norm.sf((p.barrier - S0) / sd)
    if k is PayoffKind.LOOKBACK_FLOAT_CALL:
        return N * sd * np.sqrt(2.0 / np.pi)
    if k is PayoffKind.EUROPEAN_QUADRATIC:
        return N * ((S0 - K) ** 2 + sigma * sigma * T)
    if k is PayoffKind.ASIAN_QUADRATIC:
        return N * ((S0 - K) ** 2 + sigma * sigma * T / 3.0)
    raise UnsupportedPayoff(str(k))


def bachelier_delta(p: PathPayoff, t, S, running_integral, sigma: float):
    """Frictionless Bachelier delta at time ``t``.

    ``running_integral`` is ``∫_0^t S du`` (used by the Asian kinds only).
    Inputs broadcast; one-touch and look-back have no closed form here.
    """
    T, N, K = p.T, p.nominal, p.strike
    tau = np.maximum(T - np.asarray(t, dtype=float), 0.0)
    S = np.asarray(S, dtype=float)
    k = p.kind
    if k is PayoffKind.EUROPEAN_CALL:
        sd = sigma * np.sqrt(tau)
        with np.errstate(divide="ignore", invalid="ignore"):
            d = np.where(sd > 0, (S - K) / np.where(sd > 0, sd, 1.0), np.sign(S - K) * np.inf)
        return N * norm.cdf(d)
    if k is PayoffKind.EUROPEAN_QUADRATIC:
        return 2.0 * N * (S - K)
    if k in (PayoffKind.ASIAN_CALL, PayoffKind.ASIAN_QUADRATIC):
        m = (np.asarray(running_integral, dtype=float) + S * tau) / T
        if k is PayoffKind.ASIAN_QUADRATIC:
            return 2.0 * N * (m - K) * tau / T
        s = sigma * tau**1.5 / (np.sqrt(3.0) * T)
        with np.errstate(divide="ignore", invalid="ignore"):
            d = np.where(s > 0, (m - K) / np.where(s > 0, s, 1.0), np.sign(m - K) * np.inf)
        return N * norm.cdf(d) * tau / T
    raise UnsupportedPayoff(f"no closed-form Bachelier delta for {k.value}")


__all__ = [
    "SignaturePayoff",
    "PathPayoff",
    "PayoffKind",
    "UnsupportedPayoff",
    "european_poly",
    "asian_poly",
    "xi_at",
    "xi_ode_residual",
    "payoff_values",
    "evaluate_path_payoff",
    "bridge_extrema",
    "bachelier_price",
    "bachelier_delta",
]
