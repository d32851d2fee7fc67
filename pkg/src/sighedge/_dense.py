"""Dense word-indexed layout used inside the ODE solver and the simulators.

Words of length ``n`` occupy the slice ``offs[n]:offs[n+1]``; inside a level
the position is the base-``d`` number formed by the letters minus one, last
letter least significant.  With this layout appending letter ``i`` to the word
at in-level position ``q`` lands at ``q*d + (i-1)``.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import combinations

import numba as nb
import numpy as np

from .tensor_algebra import TensorSeries, Word, words_upto


class Layout:
    """Index bookkeeping for T^trunc(R^dim) stored as a flat float vector."""

    def __init__(self, dim: int, trunc: int):
        self.dim = dim
        self.trunc = trunc
        self.offs = np.array([(dim**n - 1) // (dim - 1) if dim > 1 else n for n in range(trunc + 2)], dtype=np.int64)
        self.size = int(self.offs[trunc + 1])
        self.words: list[Word] = words_upto(dim, trunc)
        self._proj: dict[int, np.ndarray] = {}

    def index(self, w: Word) -> int:
        pos = 0
        for c in w:
            pos = pos * self.dim + (c - 1)
        return int(self.offs[len(w)]) + pos

    def to_dense(self, a: TensorSeries) -> np.ndarray:
        if a.dim != self.dim:
            raise ValueError(f"expected a {self.dim}-letter series, got d={a.dim}")
        out = np.zeros(self.size)
        for w, c in a.coeffs.items():
            if len(w) <= self.trunc:
                out[self.index(w)] = c
        return out

    def from_dense(self, v: np.ndarray, trunc: int | None = None) -> TensorSeries:
        trunc = self.trunc if trunc is None else trunc
        n = int(self.offs[trunc + 1])
        nz = np.flatnonzero(v[:n])
        return TensorSeries(self.dim, trunc, {self.words[j]: float(v[j]) for j in nz})

    def letter_gather(self, i: int) -> np.ndarray:
        """Source indices for ``a ▷ i`` on words of length ``< trunc``."""
        g = self._proj.get(i)
        if g is None:
            parts = []
            for n in range(self.trunc):
                q = np.arange(self.dim**n, dtype=np.int64)
                parts.append(self.offs[n + 1] + q * self.dim + (i - 1))
            g = np.concatenate(parts) if parts else np.zeros(0, dtype=np.int64)
            self._proj[i] = g
        return g

    def proj(self, a: np.ndarray, u: Word) -> np.ndarray:
        """Right projection ``a ▷ u`` on a dense vector (or stack, last axis)."""
        out = a
        for i in reversed(u):
            g = self.letter_gather(i)
            nxt = np.zeros_like(out)
            nxt[..., : g.size] = out[..., g]
            out = nxt
        return out

    def embed_from(self, other: "Layout") -> np.ndarray:
        """Indices in ``self`` of every word of ``other`` (smaller alphabet or order)."""
        if other.dim > self.dim or other.trunc > self.trunc:
            raise ValueError("cannot embed a larger layout")
        return np.array([self.index(w) for w in other.words], dtype=np.int64)

    @property
    def shuffle_tables(self):
        return _shuffle_tables(self.dim, self.trunc)

    def shuffle(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        out = np.zeros(self.size)
        blocks, cu, cv = self.shuffle_tables
        _shuffle_kernel(a, b, out, self.offs, blocks, cu, cv)
        return out

    def shuffle_square(self, a: np.ndarray) -> np.ndarray:
        out = np.zeros(self.size)
        blocks, cu, cv = self.shuffle_tables
        _shuffle_square_kernel(a, out, self.offs, blocks, cu, cv)
        return out


@lru_cache(maxsize=None)
def layout(dim: int, trunc: int) -> Layout:
    return Layout(dim, trunc)


@lru_cache(maxsize=None)
def _shuffle_tables(dim: int, trunc: int):
    """Riffle tables: for each (n, p, mask) the in-level index contributions of u and v.

    A shuffle of ``u`` (length p) and ``v`` (length n-p) is fixed by the set of
    positions taken by ``u``; the resulting in-level index is linear in the
    letters, so it splits as ``cu[mask, u] + cv[mask, v]``.
    Block rows: (n, p, n_masks, cu_ptr, cv_ptr).
    """
    blocks = []
    cu_parts, cv_parts = [], []
    cu_ptr = cv_ptr = 0
    for n in range(trunc + 1):
        weights = dim ** np.arange(n - 1, -1, -1, dtype=np.int64)
        for p in range(n + 1):
            q = n - p
            udig = _digits(dim, p)
            vdig = _digits(dim, q)
            masks = list(combinations(range(n), p))
            cu = np.empty((len(masks), dim**p), dtype=np.int64)
            cv = np.empty((len(masks), dim**q), dtype=np.int64)
            for m, pos in enumerate(masks):
                pos = np.array(pos, dtype=np.int64)
                rest = np.array([k for k in range(n) if k not in set(pos.tolist())], dtype=np.int64)
                cu[m] = udig @ weights[pos] if p else 0
                cv[m] = vdig @ weights[rest] if q else 0
            blocks.append((n, p, len(masks), cu_ptr, cv_ptr))
            cu_parts.append(cu.ravel())
            cv_parts.append(cv.ravel())
            cu_ptr += cu.size
            cv_ptr += cv.size
    return (
        np.array(blocks, dtype=np.int64),
        np.concatenate(cu_parts),
        np.concatenate(cv_parts),
    )


def _digits(dim: int, n: int) -> np.ndarray:
    """Letter-minus-one digits of every word of length n, shape (dim**n, n)."""
    if n == 0:
        return np.zeros((1, 0), dtype=np.int64)
    idx = np.arange(dim**n, dtype=np.int64)
    cols = [(idx // dim ** (n - 1 - k)) % dim for k in range(n)]
    return np.stack(cols, axis=1)


@nb.njit(cache=True)
def _shuffle_kernel(a, b, out, offs, blocks, cu, cv):
    for r in range(blocks.shape[0]):
        n, p, nm, cup, cvp = blocks[r, 0], blocks[r, 1], blocks[r, 2], blocks[r, 3], blocks[r, 4]
        q = n - p
        nu = offs[p + 1] - offs[p]
        nv = offs[q + 1] - offs[q]
        ou, ov, on = offs[p], offs[q], offs[n]
        for u in range(nu):
            au = a[ou + u]
            if au == 0.0:
                continue
            for m in range(nm):
                base = on + cu[cup + m * nu + u]
                row = cvp + m * nv
                for v in range(nv):
                    bv = b[ov + v]
                    if bv != 0.0:
                        out[base + cv[row + v]] += au * bv


@nb.njit(cache=True)
def _shuffle_square_kernel(a, out, offs, blocks, cu, cv):
    # u ⊔ v == v ⊔ u, so pairs of unequal length are visited once with weight 2
    for r in range(blocks.shape[0]):
        n, p, nm, cup, cvp = blocks[r, 0], blocks[r, 1], blocks[r, 2], blocks[r, 3], blocks[r, 4]
        q = n - p
        if p > q:
            continue
        w = 1.0 if p == q else 2.0
        nu = offs[p + 1] - offs[p]
        nv = offs[q + 1] - offs[q]
        ou, ov, on = offs[p], offs[q], offs[n]
        for u in range(nu):
            au = a[ou + u]
            if au == 0.0:
                continue
            au *= w
            for m in range(nm):
                base = on + cu[cup + m * nu + u]
                row = cvp + m * nv
                for v in range(nv):
                    bv = a[ov + v]
                    if bv != 0.0:
                        out[base + cv[row + v]] += au * bv


def expected_signature_operator(lay: Layout, sigma: float):
    """Return ``D(a) = a▷1 + (σ²/2) a▷22``, so that ``a|_{𝓔_τ} = Σ_k τ^k/k! D^k a``."""
    g1 = lay.letter_gather(1)
    g2 = lay.letter_gather(2)
    half_var = 0.5 * sigma * sigma

    def apply(a: np.ndarray) -> np.ndarray:
        out = np.zeros_like(a)
        out[..., : g1.size] = a[..., g1]
        t = np.zeros_like(a)
        t[..., : g2.size] = a[..., g2]
        out[..., : g2.size] += half_var * t[..., g2]
        return out

    return apply


def taylor_stack(lay: Layout, a: np.ndarray, sigma: float) -> np.ndarray:
    """Stack ``[a, D a, D² a, ...]`` up to the last nonzero term (D is nilpotent)."""
    op = expected_signature_operator(lay, sigma)
    terms = [a]
    for _ in range(lay.trunc):
        nxt = op(terms[-1])
        if not np.any(nxt):
            break
        terms.append(nxt)
    return np.array(terms)


def taylor_eval(stack: np.ndarray, tau) -> np.ndarray:
    """Evaluate ``Σ_k tau^k/k! stack[k]``; ``tau`` scalar or 1-D array."""
    tau = np.asarray(tau, dtype=float)
    k = np.arange(stack.shape[0])
    fact = np.cumprod(np.r_[1.0, np.arange(1, stack.shape[0])])
    w = tau[..., None] ** k / fact
    return w @ stack


def transfer(v: np.ndarray, src: Layout, dst: Layout) -> np.ndarray:
    """Copy coefficients of words common to both layouts (others dropped or zero)."""
    si, di = _transfer_index(src.dim, src.trunc, dst.dim, dst.trunc)
    out = np.zeros(v.shape[:-1] + (dst.size,))
    out[..., di] = v[..., si]
    return out


@lru_cache(maxsize=None)
def _transfer_index(d1: int, m1: int, d2: int, m2: int):
    a, b = layout(d1, m1), layout(d2, m2)
    pairs = [(a.index(w), b.index(w)) for w in a.words if len(w) <= m2 and all(c <= d2 for c in w)]
    si = np.array([p[0] for p in pairs], dtype=np.int64)
    di = np.array([p[1] for p in pairs], dtype=np.int64)
    return si, di
