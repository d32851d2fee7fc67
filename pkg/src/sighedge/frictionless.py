"""Frictionless pricing and replication of signature payoffs."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numba as nb
import numpy as np

from . import _rng
from ._dense import layout
from .payoffs import SignaturePayoff, xi_at
from .riccati import PayoffTaylor
from .signature import BLOCK, SignatureState, chen_block
from .tensor_algebra import bracket, proj_word


def _require_signature(payoff) -> SignaturePayoff:
    if not isinstance(payoff, SignaturePayoff):
        raise TypeError("frictionless replication is defined for signature payoffs only")
    return payoff


def fair_price(payoff: SignaturePayoff, sigma: float) -> float:
    """``V0 = xi_0^ø = <xi, E_T>``."""
    return PayoffTaylor(_require_signature(payoff), sigma).price


def hedge_ratio(payoff: SignaturePayoff, t: float, state: SignatureState, sigma: float) -> float:
    """``X_t = <xi_t ▷ 2, Ŝ_t>`` from the running signature of ``(t, S)``."""
    _require_signature(payoff)
    return bracket(proj_word(xi_at(payoff, t, sigma), (2,)), state.sig)


@dataclass(frozen=True)
class HedgePlan:
    payoff: SignaturePayoff
    sigma: float
    mu: float = 0.0

    @property
    def V0(self) -> float:
        return fair_price(self.payoff, self.sigma)

    def ratio(self, t: float, state: SignatureState) -> float:
        return hedge_ratio(self.payoff, t, state, self.sigma)


@dataclass
class ReplicationStats:
    errors: np.ndarray  # V_T - H_T per path
    price: float
    n_steps: int

    @property
    def rms(self) -> float:
        return float(np.sqrt(np.mean(self.errors**2)))

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.errors)))

    @property
    def mean(self) -> float:
        return float(np.mean(self.errors))

    def to_csv(self, file) -> None:
        with open(file, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["path_id", "error"])
            for i, e in enumerate(self.errors):
                w.writerow([i, repr(float(e))])
            w.writerow(["rms", repr(self.rms)])
            w.writerow(["max", repr(self.max_abs)])


@nb.njit(cache=True, nogil=True)
def _replicate_kernel(dS, h, hedge_idx, hedge_val, xi_idx, xi_val, offs, M, V0, out):
    n_paths, n_steps = dS.shape
    NW = offs[M + 1]
    top = max(2**M, 2)
    sig = np.zeros((NW, BLOCK))
    ta = np.empty((top, BLOCK))
    tb = np.empty((top, BLOCK))
    inc = np.empty((2, BLOCK))
    V = np.empty(BLOCK)
    for p0 in range(0, n_paths, BLOCK):
        nb_ = min(BLOCK, n_paths - p0)
        sig[:, :] = 0.0
        sig[0, :] = 1.0
        for b in range(nb_):
            V[b] = V0
        for k in range(n_steps):
            for b in range(nb_):
                x = 0.0
                for jj in range(hedge_idx.size):
                    x += hedge_val[k, jj] * sig[hedge_idx[jj], b]
                V[b] += x * dS[p0 + b, k]
                inc[0, b] = h
                inc[1, b] = dS[p0 + b, k]
            chen_block(sig, inc, ta, tb, offs, 2, M, nb_)
        for b in range(nb_):
            H = 0.0
            for jj in range(xi_idx.size):
                H += xi_val[jj] * sig[xi_idx[jj], b]
            out[p0 + b] = V[b] - H


def simulate_replication(
    payoff: SignaturePayoff,
    sigma: float,
    mu: float,
    n_steps: int,
    n_paths: int,
    seed: int,
    threads: int = 1,
) -> ReplicationStats:
    """Discrete self-financing replication with left-point hedge ratios.

    ``V_{k+1} = V_k + X_{t_k} (S_{k+1} - S_k)`` from ``V_0 = xi_0^ø``; the
    error is ``V_T - <xi, Ŝ_T>``.
    """
    _require_signature(payoff)
    tay = PayoffTaylor(payoff, sigma)
    M = tay.lay.trunc
    lay = layout(2, M)
    T = payoff.T
    h = T / n_steps
    times = np.linspace(0.0, T, n_steps + 1)
    H = tay.hedge(times[:-1])
    h_idx = np.flatnonzero(np.any(H != 0, axis=0)).astype(np.int64)
    h_val = np.ascontiguousarray(H[:, h_idx])
    xi = lay.to_dense(payoff.xi)
    x_idx = np.flatnonzero(xi).astype(np.int64)
    x_val = xi[x_idx]

    def work(s, e, rng):
        z = rng.standard_normal((e - s, n_steps))
        dS = mu * h + sigma * math.sqrt(h) * z
        out = np.empty(e - s)
        _replicate_kernel(dS, h, h_idx, h_val, x_idx, x_val, lay.offs, M, tay.price, out)
        return out

    errs = np.concatenate(_rng.map_chunks(work, n_paths, seed, threads))
    return ReplicationStats(errs, tay.price, n_steps)
