"""Backward Riccati system for the value correction ψ_t on T^{2M̃}(R³) and its closed forms.

Letters of the three-letter alphabet are time (1), impacted price (2) and
inventory (3).  Internally every tensor is a dense vector in the layout of
:mod:`sighedge._dense`; the public API speaks :class:`TensorSeries`.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ._dense import Layout, expected_signature_operator, layout, taylor_stack, transfer
from .params import MarketParams
from .payoffs import SignaturePayoff
from .tensor_algebra import TensorSeries

log = logging.getLogger(__name__)

BLOWUP_GUARD = 1e12


class RiccatiBlowUp(RuntimeError):
    """A ψ coefficient left the overflow guard during backward integration."""

    def __init__(self, t: float, value: float):
        super().__init__(f"Riccati solution diverged at t={t:.6g} (|coef|={value:.3g})")
        self.t = t
        self.value = value


class PreconditionError(ValueError):
    pass


class PayoffTaylor:
    """``xi_t`` and ``xi_t ▷ 2`` as exact polynomials in ``tau = T - t``.

    Projection against the expected signature is the exponential of the
    nilpotent map ``D(a) = a▷1 + (σ²/2) a▷22``, hence
    ``xi_t = Σ_k tau^k/k! D^k xi``.
    """

    def __init__(self, payoff: SignaturePayoff, sigma: float):
        self.payoff = payoff
        self.sigma = sigma
        self.T = payoff.T
        self.lay = layout(2, max(payoff.xi.trunc, payoff.degree, 1))
        self.xi_stack = taylor_stack(self.lay, self.lay.to_dense(payoff.xi), sigma)
        self.hedge_stack = self.lay.proj(self.xi_stack, (2,))
        nz = [self._degree(v) for v in self.hedge_stack]
        self.hedge_degree = max(nz) if nz else 0

    def _degree(self, v: np.ndarray) -> int:
        nz = np.flatnonzero(v)
        if nz.size == 0:
            return 0
        return int(np.searchsorted(self.lay.offs, nz[-1], side="right") - 1)

    @staticmethod
    def _weights(tau, K):
        tau = np.asarray(tau, dtype=float)
        k = np.arange(K)
        fact = np.array([math.factorial(int(j)) for j in k], dtype=float)
        return tau[..., None] ** k / fact

    def xi(self, t) -> np.ndarray:
        return self._weights(self.T - np.asarray(t, dtype=float), len(self.xi_stack)) @ self.xi_stack

    def hedge(self, t) -> np.ndarray:
        return self._weights(self.T - np.asarray(t, dtype=float), len(self.hedge_stack)) @ self.hedge_stack

    def hedge_in(self, t, dst: Layout) -> np.ndarray:
        return transfer(self.hedge(t), self.lay, dst)

    def xi_in(self, t, dst: Layout) -> np.ndarray:
        return transfer(self.xi(t), self.lay, dst)

    @property
    def price(self) -> float:
        return float(self.xi(0.0)[0])

    @property
    def delta0(self) -> float:
        return float(self.hedge(0.0)[0])


@dataclass
class RiccatiParams:
    """Inputs of the backward Riccati system.

    ``trunc`` defaults to ``2·M̃`` with ``M̃`` the degree of ``xi_t ▷ 2``;
    ``market.X0=None`` resolves to the Bachelier delta ``(xi_0 ▷ 2)^ø``.
    """

    market: MarketParams
    payoff: SignaturePayoff
    trunc: int | None = None
    n_ode: int = 2000
    taylor: PayoffTaylor = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.market.eta <= 0:
            raise PreconditionError("temporary impact eta must be > 0")
        if abs(self.payoff.T - self.market.T) > 1e-14:
            raise PreconditionError("payoff maturity differs from the market horizon")
        self.taylor = PayoffTaylor(self.payoff, self.market.sigma)
        need = 2 * max(self.taylor.hedge_degree, 1)
        if self.trunc is None:
            self.trunc = need
        if self.trunc < 2 * self.taylor.hedge_degree:
            raise PreconditionError(f"trunc={self.trunc} below 2·deg(xi_t▷2)={2 * self.taylor.hedge_degree}")

    @property
    def X0(self) -> float:
        return self.taylor.delta0 if self.market.X0 is None else float(self.market.X0)

    @property
    def hedge_degree(self) -> int:
        return self.taylor.hedge_degree


class _System:
    """Dense right-hand side ``dψ/dt`` with the B-square precomputed as a polynomial in tau."""

    def __init__(self, p: RiccatiParams):
        m = p.market
        self.p = p
        self.lay = layout(3, p.trunc)
        lay = self.lay
        self.T = m.T
        self.sigma, self.mu, self.nu, self.eta, self.lam = m.sigma, m.mu, m.nu, m.eta, m.lam
        self.g1 = lay.letter_gather(1)
        self.g2 = lay.letter_gather(2)
        self.g3 = lay.letter_gather(3)
        # lifted hedge tensor coefficients: ξ̃_t = Σ_k τ^k/k! Y[k]
        self.Y = transfer(p.taylor.hedge_stack, p.taylor.lay, lay)
        K = len(self.Y)
        fact = np.array([math.factorial(k) for k in range(K)], dtype=float)
        self.Yw = self.Y / fact[:, None]
        base = np.zeros(lay.size)
        base[0] = p.X0
        if p.trunc >= 1:
            base[lay.index((3,))] = 1.0
        self.base = base
        R = np.zeros((2 * K - 1, lay.size))
        R[0] += lay.shuffle_square(base)
        for k in range(K):
            R[k] -= 2.0 * lay.shuffle(base, self.Yw[k])
            for j in range(K):
                R[j + k] += lay.shuffle(self.Yw[j], self.Yw[k])
        self.Bsq = R

    def _pw(self, tau: float, n: int) -> np.ndarray:
        return tau ** np.arange(n)

    def xi_tilde(self, t: float) -> np.ndarray:
        return self._pw(self.T - t, len(self.Yw)) @ self.Yw

    def _proj(self, a: np.ndarray, g: np.ndarray) -> np.ndarray:
        out = np.zeros_like(a)
        out[: g.size] = a[g]
        return out

    def feedback_tensor(self, psi: np.ndarray) -> np.ndarray:
        """``ν ψ▷2 + ψ▷3``, the tensor bracketed against the state signature."""
        return self.nu * self._proj(psi, self.g2) + self._proj(psi, self.g3)

    def rhs(self, psi: np.ndarray, t: float) -> np.ndarray:
        tau = self.T - t
        lay = self.lay
        p1 = self._proj(psi, self.g1)
        p2 = self._proj(psi, self.g2)
        p22 = self._proj(p2, self.g2)
        p3 = self._proj(psi, self.g3)
        B = self.base - self.xi_tilde(t)
        C = self.nu * B - (self.nu * p2 + p3)
        Bsq = self._pw(tau, len(self.Bsq)) @ self.Bsq
        s2 = self.sigma * self.sigma
        out = -p1 - 0.5 * s2 * p22 - 0.5 * self.lam * s2 * Bsq
        out += lay.shuffle_square(C) / (4.0 * self.eta)
        if self.mu != 0.0:
            out += self.mu * (B - p2)
        return out


@dataclass
class RiccatiSolution:
    """ψ on an ascending time grid with cubic Hermite interpolation between nodes."""

    times: np.ndarray
    psi: np.ndarray
    dpsi: np.ndarray
    params: RiccatiParams
    method: str = "rk4"
    extra: dict = field(default_factory=dict)

    @property
    def layout(self) -> Layout:
        return layout(3, self.params.trunc)

    def psi_at(self, t: float) -> np.ndarray:
        ts = self.times
        if t <= ts[0]:
            return self.psi[0].copy()
        if t >= ts[-1]:
            return self.psi[-1].copy()
        k = int(np.searchsorted(ts, t, side="right") - 1)
        k = min(k, ts.size - 2)
        h = ts[k + 1] - ts[k]
        s = (t - ts[k]) / h
        if s == 0.0:
            return self.psi[k].copy()
        h00 = 2 * s**3 - 3 * s**2 + 1
        h10 = s**3 - 2 * s**2 + s
        h01 = -2 * s**3 + 3 * s**2
        h11 = s**3 - s**2
        return h00 * self.psi[k] + h10 * h * self.dpsi[k] + h01 * self.psi[k + 1] + h11 * h * self.dpsi[k + 1]

    def psi_series(self, t: float) -> TensorSeries:
        return self.layout.from_dense(self.psi_at(t))

    @property
    def psi0(self) -> TensorSeries:
        return self.layout.from_dense(self.psi[0])

    @property
    def psi0_empty(self) -> float:
        return float(self.psi[0][0])

    @property
    def indifference_price(self) -> float:
        return self.params.taylor.price + self.psi0_empty

    def feedback_tensor(self, t: float) -> np.ndarray:
        nu = self.params.market.nu
        lay = self.layout
        psi = self.psi_at(t)
        out = np.zeros_like(psi)
        g2, g3 = lay.letter_gather(2), lay.letter_gather(3)
        out[: g2.size] = nu * psi[g2] + psi[g3]
        return out


def riccati_rhs(psi: TensorSeries, t: float, p: RiccatiParams) -> TensorSeries:
    """``dψ/dt`` of the Riccati system at time ``t`` (all shuffles projected to ``p.trunc``)."""
    if psi.dim != 3:
        raise ValueError("ψ lives on the three-letter alphabet")
    if psi.degree > p.trunc:
        raise ValueError(f"ψ has degree {psi.degree} above trunc {p.trunc}")
    sysm = _System(p)
    return sysm.lay.from_dense(sysm.rhs(sysm.lay.to_dense(psi), t))


def _auto_stride(n_ode: int, size: int) -> int:
    budget = 5_000_000
    return max(1, math.ceil((n_ode + 1) * size / budget))


def solve_backward(p: RiccatiParams, store_every: int | None = None) -> RiccatiSolution:
    """Classical RK4 from ``ψ_T = 0`` backward with fixed step ``T/n_ode``.

    Nodes are stored every ``store_every`` steps (automatic for large
    truncations to bound memory); the last stored node is always ``t = 0``.
    """
    if p.n_ode < 2:
        raise PreconditionError("n_ode must be >= 2")
    sysm = _System(p)
    n = p.n_ode
    T = p.market.T
    h = T / n
    stride = store_every or _auto_stride(n, sysm.lay.size)
    while n % stride:
        stride -= 1
    psi = np.zeros(sysm.lay.size)
    times, states, rates = [T], [psi.copy()], [sysm.rhs(psi, T)]
    for step in range(n):
        t = T - step * h
        k1 = sysm.rhs(psi, t)
        k2 = sysm.rhs(psi - 0.5 * h * k1, t - 0.5 * h)
        k3 = sysm.rhs(psi - 0.5 * h * k2, t - 0.5 * h)
        k4 = sysm.rhs(psi - h * k3, t - h)
        psi = psi - (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        big = np.max(np.abs(psi))
        if not np.isfinite(big) or big > BLOWUP_GUARD:
            raise RiccatiBlowUp(t - h, float(big))
        if (step + 1) % stride == 0:
            tn = T - (step + 1) * h if step + 1 < n else 0.0
            times.append(tn)
            states.append(psi.copy())
            rates.append(sysm.rhs(psi, tn))
    log.debug("riccati solved: trunc=%d n_ode=%d psi0=%g", p.trunc, n, psi[0])
    return RiccatiSolution(
        np.array(times[::-1]), np.array(states[::-1]), np.array(rates[::-1]), p, "rk4", {"stride": stride}
    )


# closed forms


def _simpson_weights(n: int, h: float) -> np.ndarray:
    if n % 2:
        raise ValueError("Simpson needs an even number of intervals")
    w = np.ones(n + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * h / 3.0


class NoPermanentClosedForm:
    """Explicit ν=0, μ=0 solution: tracking speed ``f``, kernel ``K`` and target ``ξ̂_t``.

    ``ξ̂_t = ∫_t^T K(t,s) ξ̃_s|_{𝓔̃_{s-t}} ds`` reduces to scalar weights on the
    tensors ``D^j((D^k xi)▷2)`` because both the projection and ``ξ̃_s`` are
    exponentials of ``D``; the scalar weights are integrated by Simpson's rule.
    """

    def __init__(self, p: RiccatiParams, n_quad: int = 400):
        m = p.market
        if m.nu != 0.0 or m.mu != 0.0:
            raise PreconditionError("closed form needs nu = 0 and mu = 0")
        self.p = p
        self.T, self.eta, self.sigma, self.lam = m.T, m.eta, m.sigma, m.lam
        self.c = math.sqrt(m.lam * m.sigma**2 * m.eta / 2.0)
        self.n_quad = n_quad
        self.lay2 = layout(2, p.trunc)
        D = expected_signature_operator(self.lay2, m.sigma)
        Y = transfer(p.taylor.hedge_stack, p.taylor.lay, self.lay2)
        self.K = len(Y)
        self.J = p.hedge_degree + 1
        dy = np.zeros((self.J, self.K, self.lay2.size))
        dy[0] = Y
        for j in range(1, self.J):
            dy[j] = D(dy[j - 1])
        self.DY = dy
        self._D = D
        u = np.linspace(0.0, 1.0, n_quad + 1)
        self._u = u
        self._wu = _simpson_weights(n_quad, 1.0 / n_quad)

    def f(self, t):
        tau = self.T - np.asarray(t, dtype=float)
        return self.c * np.tanh(self.c * tau / self.eta)

    def kernel(self, t: float, s):
        """``K(t,s) = (c/η) cosh(c(T-s)/η) / sinh(c(T-t)/η)``."""
        c, eta = self.c, self.eta
        return (c / eta) * np.cosh(c * (self.T - np.asarray(s)) / eta) / np.sinh(c * (self.T - t) / eta)

    def weights(self, t) -> np.ndarray:
        """``w[.., j, k] = ∫_t^T K(t,s) (s-t)^j (T-s)^k / (j! k!) ds``."""
        tau = np.atleast_1d(np.asarray(self.T - np.asarray(t, dtype=float), dtype=float))
        a = self.c * tau / self.eta
        u = self._u
        with np.errstate(divide="ignore", invalid="ignore"):
            num = np.exp(-np.outer(a, u)) + np.exp(-np.outer(a, 2.0 - u))
            den = -np.expm1(-2.0 * a)
            ker = np.where(a[:, None] > 1e-12, a[:, None] * num / den[:, None], 1.0)
        J, K = self.J, self.K
        w = np.empty((tau.size, J, K))
        for j in range(J):
            for k in range(K):
                mom = (ker * u**j * (1.0 - u) ** k) @ self._wu
                w[:, j, k] = tau ** (j + k) * mom / (math.factorial(j) * math.factorial(k))
        return w

    def target(self, t) -> np.ndarray:
        """``ξ̂_t`` as dense two-letter vectors, shape (len(t), size) or (size,)."""
        scalar = np.ndim(t) == 0
        w = self.weights(t)
        out = np.einsum("njk,jks->ns", w, self.DY)
        return out[0] if scalar else out

    def speed(self, t: float, target_bracket, X):
        return self.f(t) / self.eta * (target_bracket - X)

    def solution(self, n_fine: int = 400, node_every: int = 2) -> RiccatiSolution:
        """ψ on every ``node_every``-th point of a uniform fine grid with ``n_fine`` intervals."""
        if n_fine % 2 or node_every % 2:
            raise ValueError("n_fine and node_every must be even")
        p = self.p
        lay2 = self.lay2
        lay3 = layout(3, p.trunc)
        s = np.linspace(0.0, self.T, n_fine + 1)
        hat = self.target(s)
        tilde = transfer(p.taylor.hedge(s), p.taylor.lay, lay2)
        hat2 = lay2.proj(hat, (2,))
        fs = self.f(s)
        s2 = self.sigma**2
        W = np.array(
            [
                0.5 * self.lam * s2 * lay2.shuffle_square(tilde[i] - hat[i]) + s2 * fs[i] * lay2.shuffle_square(hat2[i])
                for i in range(s.size)
            ]
        )
        h = self.T / n_fine
        base3 = np.zeros(lay3.size)
        base3[0] = p.X0
        base3[lay3.index((3,))] = 1.0
        nodes = list(range(0, n_fine + 1, node_every))
        psis = []
        for i0 in nodes:
            t = s[i0]
            m = n_fine - i0
            psi = np.zeros(lay3.size)
            if m > 0:
                wq = _simpson_weights(m, h)
                dt = s[i0:] - t
                acc = np.zeros(lay2.size)
                for j in range(p.trunc + 1):
                    term = (wq * dt**j / math.factorial(j)) @ W[i0:]
                    for _ in range(j):
                        term = self._D(term)
                    acc += term
                psi += transfer(acc, lay2, lay3)
                psi += fs[i0] * lay3.shuffle_square(base3 - transfer(hat[i0], lay2, lay3))
            psis.append(psi)
        psis = np.array(psis)
        sysm = _System(p)
        times = s[nodes]
        rates = np.array([sysm.rhs(ps, t) for ps, t in zip(psis, times)])
        return RiccatiSolution(times, psis, rates, p, "closed_form_no_permanent", {"closed_form": self})


def closed_form_no_permanent(p: RiccatiParams, n_fine: int = 400, node_every: int = 2) -> RiccatiSolution:
    """ψ for ν = 0, μ = 0 from the explicit tracking solution (Simpson time integrals)."""
    return NoPermanentClosedForm(p).solution(n_fine, node_every)


class EuQuadraticClosedForm:
    """Explicit solution for ``xi = Γ·22`` with permanent impact."""

    def __init__(self, p: RiccatiParams, Gamma: float):
        m = p.market
        c = math.sqrt(2.0 * m.eta * m.lam * m.sigma**2)
        if m.mu != 0.0:
            raise PreconditionError("closed form needs mu = 0")
        if not m.nu < c:
            raise PreconditionError(f"closed form needs nu < sqrt(2·eta·lam·sigma²) = {c:.6g}")
        if not abs(m.nu * Gamma) < 1.0:
            raise PreconditionError("closed form needs |nu·Gamma| < 1")
        expect = TensorSeries(2, p.payoff.xi.trunc, {(2, 2): Gamma})
        if p.payoff.xi.max_abs_diff(expect) > 1e-12 * max(1.0, abs(Gamma)):
            raise PreconditionError("closed form needs the payoff xi = Gamma·22")
        self.p, self.Gamma, self.c = p, Gamma, c
        self.T, self.eta, self.nu, self.sigma = m.T, m.eta, m.nu, m.sigma
        self.alpha = c * (1.0 - m.nu * Gamma) / (2.0 * m.eta)
        self.beta = 0.5 * math.log((c + m.nu) / (c - m.nu))
        self.scale = 1.0 / (2.0 * (1.0 - m.nu * Gamma))

    def f(self, t):
        tau = self.T - np.asarray(t, dtype=float)
        return self.scale * (self.nu + self.c * np.tanh(self.alpha * tau - self.beta))

    def int_f(self, t):
        """``∫_t^T f(s) ds``."""
        tau = self.T - np.asarray(t, dtype=float)
        lc = np.log(np.cosh(self.alpha * tau - self.beta)) - math.log(math.cosh(self.beta))
        return self.scale * (self.nu * tau + self.c / self.alpha * lc)

    def speed(self, t, X, hedge_bracket):
        """``θ* = (ν - 2 f (1 - νΓ)) / (2η) · (X - <xi_t▷2, P̂_t>)``."""
        k = (self.nu - 2.0 * self.f(t) * (1.0 - self.nu * self.Gamma)) / (2.0 * self.eta)
        return k * (X - hedge_bracket)

    def psi(self, t: float) -> np.ndarray:
        p = self.p
        lay3 = layout(3, p.trunc)
        B = np.zeros(lay3.size)
        B[0] = p.X0
        B[lay3.index((3,))] = 1.0
        B[lay3.index((2,))] = -self.Gamma
        out = float(self.f(t)) * lay3.shuffle_square(B)
        out[0] += self.sigma**2 * self.Gamma**2 * float(self.int_f(t))
        return out

    def solution(self, n_nodes: int | None = None) -> RiccatiSolution:
        n = n_nodes or self.p.n_ode
        times = np.linspace(0.0, self.T, n + 1)
        psis = np.array([self.psi(t) for t in times])
        sysm = _System(self.p)
        rates = np.array([sysm.rhs(ps, t) for ps, t in zip(psis, times)])
        return RiccatiSolution(times, psis, rates, self.p, "closed_form_eu_quadratic", {"closed_form": self})


def closed_form_eu_quadratic(p: RiccatiParams, Gamma: float, n_nodes: int | None = None) -> RiccatiSolution:
    return EuQuadraticClosedForm(p, Gamma).solution(n_nodes)


def indifference_price(p: RiccatiParams, solver: Callable[[RiccatiParams], RiccatiSolution] = solve_backward) -> float:
    """``π = xi_0^ø + ψ_0^ø``."""
    return solver(p).indifference_price


def psi_support(psi: np.ndarray, lay: Layout, tol: float = 0.0) -> list:
    return [lay.words[j] for j in np.flatnonzero(np.abs(psi) > tol)]


__all__ = [
    "RiccatiParams",
    "RiccatiSolution",
    "RiccatiBlowUp",
    "PreconditionError",
    "PayoffTaylor",
    "riccati_rhs",
    "solve_backward",
    "closed_form_no_permanent",
    "closed_form_eu_quadratic",
    "NoPermanentClosedForm",
    "EuQuadraticClosedForm",
    "indifference_price",
    "psi_support",
]
