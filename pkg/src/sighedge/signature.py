"""Truncated signatures of piecewise-linear paths and the Bachelier expected signature."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

import numba as nb
import numpy as np

from . import _rng
from ._dense import layout
from .tensor_algebra import EMPTY, TensorSeries, bracket, concat, shuffle, tensor_exp

BLOCK = 8  # paths advanced together by the Chen kernel


@dataclass(frozen=True)
class SampledPath:
    """Time grid plus path values, one row per grid point."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if t.ndim != 1 or v.shape[0] != t.size:
            raise ValueError("times and values must have the same number of rows")
        if t.size < 1:
            raise ValueError("a path needs at least one point")
        if np.any(np.diff(t) <= 0):
            raise ValueError("time grid must be strictly increasing")
        if not np.all(np.isfinite(v)):
            raise ValueError("path values must be finite")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @classmethod
    def time_augmented(cls, times, *coords) -> "SampledPath":
        """Path ``(t, x_1, ..., x_k)``; the first coordinate is the time grid itself."""
        t = np.asarray(times, dtype=float)
        return cls(t, np.column_stack([t, *[np.asarray(c, dtype=float) for c in coords]]))

    def increments(self) -> np.ndarray:
        return np.diff(self.values, axis=0)

    def reversed(self) -> "SampledPath":
        t = self.times
        return SampledPath(t[-1] + t[0] - t[::-1], self.values[::-1])

    def to_csv(self, file) -> None:
        """Write ``t, x_1, ..., x_d`` rows."""
        with open(file, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t"] + [f"x_{i + 1}" for i in range(self.dim)])
            for t, row in zip(self.times, self.values):
                w.writerow([repr(float(t))] + [repr(float(x)) for x in row])


@dataclass(frozen=True)
class SignatureState:
    """Running signature valid at ``t_current``."""

    sig: TensorSeries
    trunc: int
    t_current: float = 0.0

    def __post_init__(self) -> None:
        if self.sig[EMPTY] != 1.0:
            raise ValueError("a signature has unit constant term")

    @classmethod
    def start(cls, dim: int, trunc: int, t0: float = 0.0) -> "SignatureState":
        return cls(TensorSeries.unit(dim, trunc), trunc, t0)


def _increment_series(dx: Sequence[float], trunc: int) -> TensorSeries:
    dim = len(dx)
    return TensorSeries(dim, max(trunc, 1), {(i + 1,): float(c) for i, c in enumerate(dx)})


def segment_signature(dx: Sequence[float], trunc: int) -> TensorSeries:
    """Signature of a straight segment, ``exp⊗(Σ_i dx_i e_i)``."""
    if trunc < 0:
        raise ValueError("truncation must be >= 0")
    inc = _increment_series(dx, trunc)
    return tensor_exp(inc, trunc) if trunc > 0 else TensorSeries.unit(len(dx), 0)


def advance(state: SignatureState, dx: Sequence[float], dt: float | None = None) -> SignatureState:
    """Chen step: append a linear segment with increment ``dx``.

    ``dt`` defaults to ``dx[0]`` (time-augmented paths).
    """
    seg = segment_signature(dx, state.trunc)
    dt = float(dx[0]) if dt is None else dt
    return SignatureState(concat(state.sig, seg, state.trunc), state.trunc, state.t_current + dt)


def path_signature(path: SampledPath, trunc: int) -> TensorSeries:
    """Exact signature of the piecewise-linear interpolation of ``path``."""
    lay = layout(path.dim, trunc)
    dx = path.increments()[None, :, :]
    dense = batch_signatures(dx, trunc)[0]
    return lay.from_dense(dense)


def path_signature_sparse(path: SampledPath, trunc: int) -> TensorSeries:
    """Reference fold of :func:`advance` over the segments (slow, used in tests)."""
    st = SignatureState.start(path.dim, trunc, float(path.times[0]))
    for dx, dt in zip(path.increments(), np.diff(path.times)):
        st = advance(st, dx, dt)
    return st.sig


def expected_signature_bachelier(t: float, sigma: float, trunc: int) -> TensorSeries:
    """``E[sig of (s, S_s)_{s<=t}] = exp⊗((e_1 + (σ²/2) e_22) t)`` for driftless Bachelier."""
    if t < 0:
        raise ValueError("t must be >= 0")
    gen = TensorSeries(2, max(trunc, 2), {(1,): t, (2, 2): 0.5 * sigma * sigma * t})
    return tensor_exp(gen, trunc).with_trunc(trunc) if trunc > 0 else TensorSeries.unit(2, 0)


# Chen kernels


@nb.njit(cache=True, nogil=True)
def chen_block(sig, inc, ta, tb, offs, d, M, nb_):
    """In place ``sig ← sig ⊗ exp⊗(inc)`` for ``nb_`` paths stored column-wise.

    Horner form per level n: ``(((s0 x/n + s1) x/(n-1) + s2) ...) x/1``.
    """
    for n in range(M, 0, -1):
        f = 1.0 / n
        for i in range(d):
            for b in range(nb_):
                ta[i, b] = sig[0, b] * inc[i, b] * f
        L = d
        par = 0
        for j in range(1, n):
            f = 1.0 / (n - j)
            o = offs[j]
            if par == 0:
                for q in range(L):
                    for i in range(d):
                        for b in range(nb_):
                            tb[q * d + i, b] = (ta[q, b] + sig[o + q, b]) * inc[i, b] * f
            else:
                for q in range(L):
                    for i in range(d):
                        for b in range(nb_):
                            ta[q * d + i, b] = (tb[q, b] + sig[o + q, b]) * inc[i, b] * f
            par = 1 - par
            L *= d
        o = offs[n]
        if par == 0:
            for q in range(L):
                for b in range(nb_):
                    sig[o + q, b] += ta[q, b]
        else:
            for q in range(L):
                for b in range(nb_):
                    sig[o + q, b] += tb[q, b]


@nb.njit(cache=True, nogil=True)
def _batch_sig_kernel(dx, offs, d, M, out):
    n_paths, n_steps = dx.shape[0], dx.shape[1]
    NW = offs[M + 1]
    top = max(d ** M, d)
    sig = np.zeros((NW, BLOCK))
    ta = np.empty((top, BLOCK))
    tb = np.empty((top, BLOCK))
    inc = np.empty((d, BLOCK))
    for p0 in range(0, n_paths, BLOCK):
        nb_ = min(BLOCK, n_paths - p0)
        sig[:, :] = 0.0
        sig[0, :] = 1.0
        for k in range(n_steps):
            for i in range(d):
                for b in range(nb_):
                    inc[i, b] = dx[p0 + b, k, i]
            chen_block(sig, inc, ta, tb, offs, d, M, nb_)
        for j in range(NW):
            for b in range(nb_):
                out[p0 + b, j] = sig[j, b]


def batch_signatures(dx: np.ndarray, trunc: int) -> np.ndarray:
    """Dense signatures for paths given by increments ``dx`` of shape (paths, steps, d)."""
    dx = np.ascontiguousarray(dx, dtype=float)
    d = dx.shape[2]
    lay = layout(d, trunc)
    out = np.empty((dx.shape[0], lay.size))
    if trunc == 0:
        out[:] = 1.0
        return out
    _batch_sig_kernel(dx, lay.offs, d, trunc, out)
    return out


def bachelier_paths(
    n: int, n_steps: int, T: float, sigma: float, mu: float, S0: float, rng: np.random.Generator,
    antithetic: bool = False,
) -> tuple[np.ndarray, np.ndarray]:
    """Time grid and price array of shape (n, n_steps + 1) for ``dS = μ dt + σ dW``."""
    h = T / n_steps
    z = _rng.standard_normals(rng, n, n_steps, antithetic)
    S = np.empty((n, n_steps + 1))
    S[:, 0] = S0
    np.cumsum(mu * h + sigma * np.sqrt(h) * z, axis=1, out=S[:, 1:])
    S[:, 1:] += S0
    return np.linspace(0.0, T, n_steps + 1), S


def time_augmented_increments(times: np.ndarray, S: np.ndarray) -> np.ndarray:
    dt = np.broadcast_to(np.diff(times), (S.shape[0], times.size - 1))
    return np.stack([dt, np.diff(S, axis=1)], axis=2)


def mc_expected_signature(
    sigma: float, mu: float, T: float, trunc: int, n_paths: int, n_steps: int, seed: int,
    threads: int = 1,
) -> tuple[TensorSeries, TensorSeries]:
    """Monte-Carlo mean of the time-augmented Bachelier signature and its standard errors."""
    if n_paths < 1 or n_steps < 1:
        raise ValueError("n_paths and n_steps must be >= 1")
    lay = layout(2, trunc)

    def work(s, e, rng):
        t, S = bachelier_paths(e - s, n_steps, T, sigma, mu, 0.0, rng)
        sig = batch_signatures(time_augmented_increments(t, S), trunc)
        return sig.sum(axis=0), (sig * sig).sum(axis=0)

    parts = _rng.map_chunks(work, n_paths, seed, threads)
    s1 = np.sum([p[0] for p in parts], axis=0)
    s2 = np.sum([p[1] for p in parts], axis=0)
    mean = s1 / n_paths
    var = np.maximum(s2 / n_paths - mean * mean, 0.0) * n_paths / max(n_paths - 1, 1)
    se = np.sqrt(var / n_paths)
    return lay.from_dense(mean), lay.from_dense(se)


def shuffle_check(l1: TensorSeries, l2: TensorSeries, sig: TensorSeries) -> float:
    """``<l1,sig><l2,sig> - <l1⊔l2,sig>``; zero for group-like ``sig``."""
    return bracket(l1, sig) * bracket(l2, sig) - bracket(shuffle(l1, l2, None), sig)


__all__ = [
    "SampledPath",
    "SignatureState",
    "segment_signature",
    "advance",
    "path_signature",
    "path_signature_sparse",
    "expected_signature_bachelier",
    "mc_expected_signature",
    "batch_signatures",
    "bachelier_paths",
    "time_augmented_increments",
    "chen_block",
    "shuffle_check",
]
