"""Sparse arithmetic on the truncated tensor algebra T^M(R^d).

A word is a tuple of letters in ``1..d``; the empty tuple is the empty word.
A :class:`TensorSeries` maps finitely many words to real coefficients.  All
series are immutable and every product takes its truncation order explicitly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping, Union

Word = tuple[int, ...]
EMPTY: Word = ()
EMPTY_SYMBOL = "ø"


class DimensionMismatch(ValueError):
    """Raised when two series over different alphabets are combined."""


def word(spec: Union[str, Iterable[int]]) -> Word:
    """Build a word from a digit string (``"12"``, ``"ø"``, ``""``) or letters."""
    if isinstance(spec, str):
        s = spec.strip()
        if s in ("", EMPTY_SYMBOL):
            return EMPTY
        return tuple(int(c) for c in s)
    return tuple(int(c) for c in spec)


def word_str(w: Word) -> str:
    return "".join(str(c) for c in w) if w else EMPTY_SYMBOL


def word_key(w: Word) -> tuple[int, Word]:
    """Sort key for the canonical order: by length, then lexicographic."""
    return (len(w), w)


def words_upto(dim: int, n: int) -> list[Word]:
    """All words over ``{1..dim}`` of length ``<= n`` in canonical order."""
    out: list[Word] = []
    for k in range(n + 1):
        out.extend(product(range(1, dim + 1), repeat=k))
    return out


@dataclass(frozen=True)
class TensorSeries:
    """Finitely supported element of T^trunc(R^dim).

    Zero coefficients are dropped on construction (exact zero only) and words
    longer than ``trunc`` raise.
    """

    dim: int
    trunc: int
    coeffs: Mapping[Word, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValueError(f"alphabet size must be >= 1, got {self.dim}")
        if self.trunc < 0:
            raise ValueError(f"truncation must be >= 0, got {self.trunc}")
        clean: dict[Word, float] = {}
        for w, c in self.coeffs.items():
            w = word(w)
            if len(w) > self.trunc:
                raise ValueError(f"word {word_str(w)} longer than truncation {self.trunc}")
            if any(i < 1 or i > self.dim for i in w):
                raise ValueError(f"word {word_str(w)} uses letters outside 1..{self.dim}")
            c = float(c)
            if c != 0.0:
                clean[w] = c
        object.__setattr__(self, "coeffs", MappingProxyType(clean))

    # construction helpers

    @classmethod
    def zero(cls, dim: int, trunc: int = 0) -> "TensorSeries":
        return cls(dim, trunc, {})

    @classmethod
    def unit(cls, dim: int, trunc: int = 0) -> "TensorSeries":
        return cls(dim, trunc, {EMPTY: 1.0})

    @classmethod
    def from_words(cls, dim: int, terms: Mapping, trunc: int | None = None) -> "TensorSeries":
        """Build from ``{"12": c, "ø": c0}``; ``trunc`` defaults to the degree."""
        parsed = {word(k): float(v) for k, v in terms.items()}
        if trunc is None:
            trunc = max((len(w) for w in parsed), default=0)
        return cls(dim, trunc, parsed)

    # queries

    def __getitem__(self, w) -> float:
        return self.coeffs.get(word(w), 0.0)

    def __iter__(self) -> Iterator[Word]:
        return iter(sorted(self.coeffs, key=word_key))

    def __len__(self) -> int:
        return len(self.coeffs)

    def items(self) -> list[tuple[Word, float]]:
        return [(w, self.coeffs[w]) for w in self]

    @property
    def degree(self) -> int:
        return max((len(w) for w in self.coeffs), default=0)

    def is_zero(self) -> bool:
        return not self.coeffs

    def with_trunc(self, trunc: int) -> "TensorSeries":
        """Same coefficients, projected onto words of length ``<= trunc``."""
        return TensorSeries(self.dim, trunc, {w: c for w, c in self.coeffs.items() if len(w) <= trunc})

    def allclose(self, other: "TensorSeries", atol: float = 1e-12, rtol: float = 0.0) -> bool:
        _check_dim(self, other)
        for w in set(self.coeffs) | set(other.coeffs):
            a, b = self[w], other[w]
            if abs(a - b) > atol + rtol * max(abs(a), abs(b)):
                return False
        return True

    def max_abs_diff(self, other: "TensorSeries") -> float:
        _check_dim(self, other)
        keys = set(self.coeffs) | set(other.coeffs)
        return max((abs(self[w] - other[w]) for w in keys), default=0.0)

    # operators

    def __add__(self, other: "TensorSeries") -> "TensorSeries":
        return add(self, other)

    def __sub__(self, other: "TensorSeries") -> "TensorSeries":
        return add(self, scale(other, -1.0))

    def __neg__(self) -> "TensorSeries":
        return scale(self, -1.0)

    def __mul__(self, lam: float) -> "TensorSeries":
        return scale(self, lam)

    __rmul__ = __mul__

    def __repr__(self) -> str:
        body = ", ".join(f"{word_str(w)}: {c:g}" for w, c in self.items())
        return f"TensorSeries(d={self.dim}, M={self.trunc}, {{{body}}})"

    # serialization

    def to_text(self) -> str:
        """One ``word=coefficient`` line per stored word, canonical order."""
        return "".join(f"{word_str(w)}={c!r}\n" for w, c in self.items())

    @classmethod
    def from_text(cls, text: str, dim: int, trunc: int | None = None) -> "TensorSeries":
        terms: dict[Word, float] = {}
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, val = line.partition("=")
            terms[word(key)] = float(val)
        if trunc is None:
            trunc = max((len(w) for w in terms), default=0)
        return cls(dim, trunc, terms)


def _check_dim(a: TensorSeries, b: TensorSeries) -> None:
    if a.dim != b.dim:
        raise DimensionMismatch(f"alphabet sizes differ: {a.dim} vs {b.dim}")


def letter(i: int, dim: int, coeff: float = 1.0) -> TensorSeries:
    return TensorSeries(dim, 1, {(i,): coeff})


def add(a: TensorSeries, b: TensorSeries) -> TensorSeries:
    _check_dim(a, b)
    out = dict(a.coeffs)
    for w, c in b.coeffs.items():
        out[w] = out.get(w, 0.0) + c
    return TensorSeries(a.dim, max(a.trunc, b.trunc), out)


def scale(a: TensorSeries, lam: float) -> TensorSeries:
    return TensorSeries(a.dim, a.trunc, {w: lam * c for w, c in a.coeffs.items()})


def linear_combination(terms: Iterable[tuple[float, TensorSeries]], dim: int) -> TensorSeries:
    out: dict[Word, float] = {}
    trunc = 0
    for lam, s in terms:
        if s.dim != dim:
            raise DimensionMismatch(f"alphabet sizes differ: {dim} vs {s.dim}")
        trunc = max(trunc, s.trunc)
        for w, c in s.coeffs.items():
            out[w] = out.get(w, 0.0) + lam * c
    return TensorSeries(dim, trunc, out)


def concat(a: TensorSeries, b: TensorSeries, trunc: int | None) -> TensorSeries:
    """Concatenation (tensor) product; words longer than ``trunc`` dropped.

    ``trunc=None`` keeps the exact product (truncation ``a.trunc + b.trunc``).
    """
    _check_dim(a, b)
    if trunc is None:
        trunc = a.trunc + b.trunc
    out: dict[Word, float] = {}
    for u, cu in a.coeffs.items():
        room = trunc - len(u)
        if room < 0:
            continue
        for v, cv in b.coeffs.items():
            if len(v) <= room:
                w = u + v
                out[w] = out.get(w, 0.0) + cu * cv
    return TensorSeries(a.dim, trunc, out)


@lru_cache(maxsize=200_000)
def shuffle_words(u: Word, v: Word) -> Mapping[Word, int]:
    """Shuffle of two words as ``{word: multiplicity}``.

    Uses the last-letter recursion ``(u i) ⊔ (v j) = (u ⊔ v j) i + (u i ⊔ v) j``.
    """
    if not u:
        return MappingProxyType({v: 1})
    if not v:
        return MappingProxyType({u: 1})
    out: dict[Word, int] = {}
    for w, m in shuffle_words(u[:-1], v).items():
        key = w + u[-1:]
        out[key] = out.get(key, 0) + m
    for w, m in shuffle_words(u, v[:-1]).items():
        key = w + v[-1:]
        out[key] = out.get(key, 0) + m
    return MappingProxyType(out)


def shuffle(a: TensorSeries, b: TensorSeries, trunc: int | None) -> TensorSeries:
    """Shuffle product projected onto words of length ``<= trunc``."""
    _check_dim(a, b)
    if trunc is None:
        trunc = a.trunc + b.trunc
    out: dict[Word, float] = {}
    for u, cu in a.coeffs.items():
        for v, cv in b.coeffs.items():
            if len(u) + len(v) > trunc:
                continue
            c = cu * cv
            for w, m in shuffle_words(u, v).items():
                out[w] = out.get(w, 0.0) + m * c
    return TensorSeries(a.dim, trunc, out)


def shuffle_power(a: TensorSeries, k: int, trunc: int | None) -> TensorSeries:
    if k < 0:
        raise ValueError("shuffle power must be >= 0")
    if trunc is None:
        trunc = k * a.trunc
    out = TensorSeries.unit(a.dim, trunc)
    for _ in range(k):
        out = shuffle(out, a, trunc)
    return out


def proj_word(a: TensorSeries, u) -> TensorSeries:
    """Right projection ``(a ▷ u)^v = a^{vu}``."""
    u = word(u)
    if any(i < 1 or i > a.dim for i in u):
        raise ValueError(f"word {word_str(u)} uses letters outside 1..{a.dim}")
    n = len(u)
    if n == 0:
        return a
    out = {w[:-n]: c for w, c in a.coeffs.items() if len(w) >= n and w[-n:] == u}
    return TensorSeries(a.dim, a.trunc, out)


def proj_series(a: TensorSeries, xi: TensorSeries) -> TensorSeries:
    """Projection against a series: ``(a|_xi)^v = sum_u a^{vu} xi^u``."""
    _check_dim(a, xi)
    out: dict[Word, float] = {}
    xc = xi.coeffs
    for w, c in a.coeffs.items():
        for k in range(len(w) + 1):
            x = xc.get(w[k:])
            if x is not None:
                v = w[:k]
                out[v] = out.get(v, 0.0) + c * x
    return TensorSeries(a.dim, a.trunc, out)


def bracket(ell: TensorSeries, p: TensorSeries) -> float:
    """Pairing ``<ell, p> = sum_w ell^w p^w``."""
    _check_dim(ell, p)
    small, big = (ell, p) if len(ell.coeffs) <= len(p.coeffs) else (p, ell)
    bc = big.coeffs
    return math.fsum(c * bc[w] for w, c in small.coeffs.items() if w in bc)


def tensor_exp(a: TensorSeries, trunc: int) -> TensorSeries:
    """Truncated tensor exponential ``sum_k a^{⊗k}/k!`` for ``a^ø == 0``."""
    if a[EMPTY] != 0.0:
        raise ValueError("tensor_exp needs a series without constant term")
    out = TensorSeries.unit(a.dim, trunc)
    term = TensorSeries.unit(a.dim, trunc)
    for k in range(1, trunc + 1):
        term = scale(concat(term, a, trunc), 1.0 / k)
        if term.is_zero():
            break
        out = add(out, term)
    return out


def lift_2_to_3(a: TensorSeries) -> TensorSeries:
    """Embed a two-letter series into the three-letter algebra (zero on letter 3)."""
    if a.dim != 2:
        raise DimensionMismatch(f"lift expects a two-letter series, got d={a.dim}")
    return TensorSeries(3, a.trunc, dict(a.coeffs))


def restrict_letters(a: TensorSeries, dim: int) -> TensorSeries:
    """Keep only words over ``{1..dim}`` (e.g. the P-part of a (t, P, X) signature)."""
    return TensorSeries(dim, a.trunc, {w: c for w, c in a.coeffs.items() if all(i <= dim for i in w)})
