"""Experiment configuration: a YAML file with one block per pipeline stage."""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .params import MarketParams
from .payoffs import PathPayoff, PayoffKind, SignaturePayoff, asian_poly, european_poly

SIGNATURE_KINDS = ("european_poly", "asian_poly")
PATH_KINDS = tuple(k.value for k in PayoffKind)
STRATEGIES = ("sig", "no_permanent", "delta_tracking", "eu_quadratic", "perfect", "zero")


class ConfigError(ValueError):
    pass


DEFAULTS: dict = {
    "market": {"mu": 0.0, "sigma": 2.0, "T": 0.2, "eta": 0.001, "nu": 0.001, "lam": 0.01, "S0": 10.0,
               "X0": None, "V0": None},
    "payoff": {"kind": "asian_quadratic", "coefficients": None, "strike": 1.0, "barrier": 1.05, "nominal": 200.0},
    "strategies": ["sig", "no_permanent"],
    "riccati": {"trunc": None, "n_ode": 2000},
    "simulation": {"n_paths": 10000, "n_steps": 500, "seed": None, "antithetic": False, "n_record": 5,
                   "bins": 60, "bridge": True},
    "regression": {"M": 5, "L": 100000, "J": 500, "seed": None, "ridge": 0.0},
    "price": {"nu": []},
    "perfect_hedge": {"n_steps": [250, 1000, 4000], "n_paths": 10000},
}

TEMPLATE = """\
# sighedge experiment config; every block is optional and falls back to these values.
market:
  mu: 0.0        # drift of the unaffected price, price units per year
  sigma: 2.0     # Bachelier volatility, price units per sqrt(year)
  T: 0.2         # horizon, years
  eta: 0.001     # temporary impact, price per (share per year)
  nu: 0.001      # permanent impact, price per share
  lam: 0.01      # risk aversion on the quadratic variation of the P&L, 1/price
  S0: 10.0       # initial price
  X0: null       # initial inventory, shares; null = Bachelier delta of the payoff
  V0: null       # initial wealth; null = indifference price of the strategy
payoff:
  kind: asian_quadratic   # european_poly | asian_poly | european_call | asian_call | one_touch_max
                          # | lookback_float_call | european_quadratic | asian_quadratic
  coefficients: null      # polynomial coefficients a_0..a_n for the *_poly kinds
  strike: 1.0             # strike as a multiple of S0
  barrier: 1.05           # barrier as a multiple of S0 (one-touch only)
  nominal: 200.0          # number of contracts
strategies: [sig, no_permanent]   # sig | no_permanent | delta_tracking | eu_quadratic | perfect | zero
riccati:
  trunc: null    # tensor truncation; null = 2 x degree of the hedge tensor
  n_ode: 2000    # RK4 steps over [0, T]
simulation:
  n_paths: 10000
  n_steps: 500   # Euler steps over [0, T]
  seed: 1        # required for simulate, indifference and perfect-hedge
  antithetic: false
  n_record: 5    # paths whose full trajectories are written
  bins: 60       # histogram bins
  bridge: true   # Brownian-bridge path extrema for barrier and look-back payoffs
regression:
  M: 5           # signature truncation of the regressed payoff
  L: 100000      # training paths
  J: 500         # time steps per training path
  seed: 2024
  ridge: 0.0
price:
  nu: [0.0, 0.0005, 0.001, 0.0015]   # permanent-impact sweep for the price table
perfect_hedge:
  n_steps: [250, 1000, 4000]
  n_paths: 10000
"""


def _merge(base: dict, over: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if k not in base:
            raise ConfigError(f"unknown key {path}{k}")
        if isinstance(base[k], dict):
            if not isinstance(v, dict):
                raise ConfigError(f"{path}{k} must be a mapping")
            out[k] = _merge(base[k], v, f"{path}{k}.")
        else:
            out[k] = v
    return out


@dataclass
class ExperimentConfig:
    raw: dict
    source: str | None = None
    overrides: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: dict | None, source: str | None = None) -> "ExperimentConfig":
        data = data or {}
        if not isinstance(data, dict):
            raise ConfigError("top level of the config must be a mapping")
        cfg = cls(_merge(DEFAULTS, data), source)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: str | Path | None) -> "ExperimentConfig":
        if path is None:
            return cls.from_dict({})
        try:
            text = Path(path).read_text()
        except OSError as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as e:
            raise ConfigError(f"invalid YAML in {path}: {e}") from e
        return cls.from_dict(data, str(path))

    def override(self, *, seed: int | None = None) -> None:
        if seed is not None:
            self.raw["simulation"]["seed"] = seed
            self.raw["regression"]["seed"] = seed
            self.overrides["seed"] = seed

    def validate(self) -> None:
        try:
            self.market
        except (TypeError, ValueError) as e:
            raise ConfigError(f"market: {e}") from e
        p = self.raw["payoff"]
        if p["kind"] not in SIGNATURE_KINDS + PATH_KINDS:
            raise ConfigError(f"payoff.kind {p['kind']!r} is not one of {SIGNATURE_KINDS + PATH_KINDS}")
        if p["kind"] in SIGNATURE_KINDS and not p["coefficients"]:
            raise ConfigError(f"payoff.coefficients required for {p['kind']}")
        for s in self.raw["strategies"]:
            if s not in STRATEGIES:
                raise ConfigError(f"unknown strategy {s!r}; choose from {STRATEGIES}")
        sim = self.raw["simulation"]
        for k in ("n_paths", "n_steps"):
            if not isinstance(sim[k], int) or sim[k] < 1:
                raise ConfigError(f"simulation.{k} must be a positive integer")
        r = self.raw["riccati"]
        if not isinstance(r["n_ode"], int) or r["n_ode"] < 1:
            raise ConfigError("riccati.n_ode must be a positive integer")

    def require_seed(self, block: str = "simulation") -> int:
        seed = self.raw[block]["seed"]
        if seed is None:
            raise ConfigError(f"{block}.seed is required for stochastic runs (set it or pass --seed)")
        return int(seed)

    @property
    def market(self) -> MarketParams:
        return MarketParams(**{k: (None if v is None else float(v)) for k, v in self.raw["market"].items()})

    @property
    def is_signature(self) -> bool:
        return self.raw["payoff"]["kind"] in SIGNATURE_KINDS or self.raw["payoff"]["kind"] in (
            "european_quadratic", "asian_quadratic")

    def path_payoff(self) -> PathPayoff | None:
        p, m = self.raw["payoff"], self.market
        if p["kind"] in SIGNATURE_KINDS:
            return None
        return PathPayoff(p["kind"], strike=p["strike"] * m.S0, barrier=p["barrier"] * m.S0,
                          nominal=float(p["nominal"]), T=m.T)

    def signature_payoff(self) -> SignaturePayoff | None:
        """Exact signature form, or ``None`` when the payoff must be regressed."""
        p, m = self.raw["payoff"], self.market
        K = p["strike"] * m.S0
        if p["kind"] == "european_poly":
            return european_poly(p["coefficients"], K, m.S0, float(p["nominal"]), T=m.T)
        if p["kind"] == "asian_poly":
            return asian_poly(p["coefficients"], K, m.S0, float(p["nominal"]), m.T)
        if p["kind"] in ("european_quadratic", "asian_quadratic"):
            return self.path_payoff().as_signature_payoff(m.S0)
        return None

    def to_dict(self) -> dict:
        return copy.deepcopy(self.raw)
