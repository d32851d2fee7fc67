"""Market parameters shared by the Riccati solver and the simulator."""

from __future__ import annotations

from dataclasses import asdict, dataclass, replace


@dataclass(frozen=True)
class MarketParams:
    """Impacted Bachelier market.

    Attributes
    ----------
    mu, sigma : drift (price/yr) and volatility (price/sqrt(yr)) of the unaffected price.
    T : horizon in years.
    eta : temporary impact, price per (share/yr).
    nu : permanent impact, price per share.
    lam : risk aversion of the quadratic-variation penalty.
    S0 : initial price.
    X0 : initial inventory; ``None`` means the Bachelier delta of the payoff.
    V0 : initial wealth; ``None`` means the indifference price.
    """

    mu: float = 0.0
    sigma: float = 2.0
    T: float = 0.2
    eta: float = 0.001
    nu: float = 0.001
    lam: float = 0.01
    S0: float = 10.0
    X0: float | None = None
    V0: float | None = None

    def __post_init__(self) -> None:
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.T <= 0:
            raise ValueError("T must be positive")
        if self.eta < 0 or self.nu < 0:
            raise ValueError("impact parameters must be non-negative")
        if self.lam < 0:
            raise ValueError("risk aversion must be non-negative")

    def with_(self, **kw) -> "MarketParams":
        return replace(self, **kw)

    def to_dict(self) -> dict:
        return asdict(self)


DEFAULT_MARKET = MarketParams()
