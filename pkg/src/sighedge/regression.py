"""Least-squares regression of path-dependent payoffs on truncated signature payoffs.

Training paths are unimpacted Bachelier prices; the features of a path are the
entries of the truncated signature of ``(t, S)`` at maturity.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import _rng
from ._dense import layout
from .params import MarketParams
from .payoffs import PathPayoff, SignaturePayoff, bridge_extrema, payoff_values
from .riccati import RiccatiParams, RiccatiSolution, solve_backward
from .signature import bachelier_paths, batch_signatures, time_augmented_increments
from .tensor_algebra import TensorSeries, Word, words_upto

log = logging.getLogger(__name__)


class RankDeficientError(np.linalg.LinAlgError):
    def __init__(self, rank: int, n_cols: int):
        super().__init__(f"design matrix has effective rank {rank} < {n_cols} columns")
        self.rank = rank
        self.n_cols = n_cols


@dataclass(frozen=True)
class RegressionSpec:
    """Training setup: payoff, truncation ``M``, ``L`` paths on ``J`` time steps."""

    payoff: PathPayoff
    M: int = 5
    L: int = 100_000
    J: int = 500
    seed: int = 2024
    mu: float = 0.0
    sigma: float = 2.0
    S0: float = 10.0
    bridge: bool = True

    def __post_init__(self) -> None:
        if self.M < 0:
            raise ValueError("M must be >= 0")
        if self.L < len(words_upto(2, self.M)):
            raise ValueError("need at least as many paths as signature words")
        if self.J < 1:
            raise ValueError("J must be >= 1")

    @property
    def T(self) -> float:
        return self.payoff.T


def reduced_words(M: int) -> list[Word]:
    """Words that do not start with the time letter.

    Since ``<1 ⊔ w, sig> = T <w, sig>`` on every path, a word ``1w'`` is a fixed
    combination of words with fewer leading time letters; the words kept here
    span the same payoff class with a full-rank design.
    """
    return [w for w in words_upto(2, M) if not w or w[0] != 1]


@dataclass
class RegressionResult:
    ell: TensorSeries
    mse_in: float
    mse_out: float
    rank: int
    cond: float
    words: list = field(repr=False, default_factory=list)

    def as_payoff(self, T: float, N: float = 1.0, description: str = "") -> SignaturePayoff:
        return SignaturePayoff(self.ell, T, N, description or "regressed")

    def to_csv_row(self) -> dict:
        return {"mse_in": self.mse_in, "mse_out": self.mse_out, "rank": self.rank, "cond": self.cond}


def build_design(spec: RegressionSpec, words: list[Word] | None = None, threads: int = 1):
    """Return ``(features, targets, words)``; columns follow ``words`` (all words by default)."""
    lay = layout(2, spec.M)
    words = list(lay.words) if words is None else list(words)
    cols = np.array([lay.index(w) for w in words], dtype=np.int64)
    h = spec.T / spec.J
    p = spec.payoff

    def work(s, e, rng):
        t, S = bachelier_paths(e - s, spec.J, spec.T, spec.sigma, spec.mu, spec.S0, rng)
        kw = {}
        if spec.bridge and p.needs_extrema:
            kw["path_max"] = bridge_extrema(S, spec.sigma, h, rng, "max")
            kw["path_min"] = bridge_extrema(S, spec.sigma, h, rng, "min")
        y = payoff_values(p, t, S, **kw)
        sig = batch_signatures(time_augmented_increments(t, S), spec.M)
        return sig[:, cols], y

    parts = _rng.map_chunks(work, spec.L, spec.seed, threads)
    X = np.concatenate([a for a, _ in parts])
    y = np.concatenate([b for _, b in parts])
    return X, y, words


def fit(
    features: np.ndarray,
    targets: np.ndarray,
    words: list[Word] | None = None,
    ridge: float = 0.0,
    train_frac: float = 0.8,
    rcond: float = 1e-13,
    allow_rank_deficient: bool = False,
) -> RegressionResult:
    """Minimize ``(1/L) Σ (H - <ell, sig>)² + ridge·|ell|²`` by an SVD least-squares solve.

    The first ``train_frac`` of rows (by path index) are used for fitting and
    the rest for the out-of-sample error.
    """
    A = np.asarray(features, dtype=float)
    y = np.asarray(targets, dtype=float)
    n, k = A.shape
    if n < k:
        raise ValueError("need at least as many rows as columns")
    n_tr = max(k, int(round(train_frac * n)))
    n_tr = min(n_tr, n)
    A_tr, y_tr = A[:n_tr], y[:n_tr]
    if ridge > 0.0:
        A_fit = np.vstack([A_tr, math.sqrt(ridge * n_tr) * np.eye(k)])
        y_fit = np.r_[y_tr, np.zeros(k)]
    else:
        A_fit, y_fit = A_tr, y_tr
    coef, _, rank, sv = np.linalg.lstsq(A_fit, y_fit, rcond=rcond)
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else float("inf")
    if rank < k and not allow_rank_deficient:
        raise RankDeficientError(int(rank), k)
    mse_in = float(np.mean((A_tr @ coef - y_tr) ** 2))
    mse_out = float(np.mean((A[n_tr:] @ coef - y[n_tr:]) ** 2)) if n_tr < n else float("nan")
    if words is None:
        words = words_upto(2, _order_for(k))
    M = max((len(w) for w in words), default=0)
    ell = TensorSeries(2, M, {w: c for w, c in zip(words, coef)})
    return RegressionResult(ell, mse_in, mse_out, int(rank), cond, list(words))


def _order_for(n_cols: int) -> int:
    M = 0
    while 2 ** (M + 1) - 1 < n_cols:
        M += 1
    if 2 ** (M + 1) - 1 != n_cols:
        raise ValueError("pass the word list for a non-standard column set")
    return M


def regress_and_hedge(
    spec: RegressionSpec,
    market: MarketParams,
    n_ode: int = 2000,
    words: list[Word] | None = None,
    ridge: float = 0.0,
    threads: int = 1,
) -> tuple[RegressionResult, RiccatiSolution]:
    """Fit the payoff on the reduced word basis, then solve the Riccati system at ``2·M̃``."""
    words = reduced_words(spec.M) if words is None else words
    X, y, words = build_design(spec, words, threads)
    res = fit(X, y, words, ridge=ridge)
    log.info("regression %s M=%d: mse_in=%.4g mse_out=%.4g cond=%.3g", spec.payoff.kind.value, spec.M,
             res.mse_in, res.mse_out, res.cond)
    payoff = res.as_payoff(spec.T, spec.payoff.nominal, f"regressed {spec.payoff.kind.value}")
    sol = solve_backward(RiccatiParams(market, payoff, None, n_ode))
    return res, sol
