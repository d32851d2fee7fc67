"""Command-line front end: ``sighedge <subcommand> --config FILE --out DIR``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import platform
import sys
from importlib import metadata
from pathlib import Path

import numpy as np

from .config import TEMPLATE, ConfigError, ExperimentConfig
from .frictionless import fair_price, simulate_replication
from .market import (
    DeltaTracking,
    EuQuadraticFeedback,
    NoPermanentBenchmark,
    PerfectHedge,
    SigFeedback,
    ZeroTrading,
    dump_run,
    run_paths,
    write_aggregate_csv,
    write_histogram_csv,
)
from .payoffs import UnsupportedPayoff, bachelier_price
from .regression import RankDeficientError, RegressionSpec, build_design, fit, reduced_words
from .riccati import EuQuadraticClosedForm, PreconditionError, RiccatiBlowUp, RiccatiParams, solve_backward

log = logging.getLogger("sighedge")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BLOWUP = 3
EXIT_RANK = 4


def _versions() -> dict:
    out = {"python": platform.python_version()}
    for pkg in ("artifact", "numpy", "scipy", "numba", "pyyaml"):
        try:
            out[pkg] = metadata.version(pkg)
        except metadata.PackageNotFoundError:
            out[pkg] = None
    return out


def write_manifest(out: Path, command: str, cfg: ExperimentConfig, threads: int, extra: dict | None = None) -> None:
    out.mkdir(parents=True, exist_ok=True)
    doc = {
        "command": command,
        "config_source": cfg.source,
        "config": cfg.to_dict(),
        "overrides": cfg.overrides,
        "threads": threads,
        "versions": _versions(),
    }
    if extra:
        doc.update(extra)
    (out / "manifest.json").write_text(json.dumps(doc, indent=2, default=float) + "\n")


def _write_rows(file: Path, header: list[str], rows) -> None:
    with open(file, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in r])


def _signature_payoff(cfg: ExperimentConfig, out: Path, threads: int):
    """Exact signature payoff, or the regressed one for path-dependent kinds."""
    xi = cfg.signature_payoff()
    if xi is not None:
        return xi, None
    res = _regress(cfg, out, threads)
    pp = cfg.path_payoff()
    return res.as_payoff(pp.T, pp.nominal, f"regressed {pp.kind.value}"), res


def _regress(cfg: ExperimentConfig, out: Path, threads: int):
    r, m = cfg.raw["regression"], cfg.market
    seed = cfg.require_seed("regression")
    spec = RegressionSpec(cfg.path_payoff(), M=int(r["M"]), L=int(r["L"]), J=int(r["J"]), seed=seed,
                          mu=m.mu, sigma=m.sigma, S0=m.S0, bridge=bool(cfg.raw["simulation"]["bridge"]))
    X, y, words = build_design(spec, reduced_words(spec.M), threads)
    res = fit(X, y, words, ridge=float(r["ridge"]))
    out.mkdir(parents=True, exist_ok=True)
    (out / "ell.txt").write_text(res.ell.to_text())
    _write_rows(out / "regression.csv", ["M", "L", "J", "mse_in", "mse_out", "rank", "cond"],
                [[spec.M, spec.L, spec.J, res.mse_in, res.mse_out, res.rank, res.cond]])
    return res


def _riccati(cfg: ExperimentConfig, xi, market=None):
    r = cfg.raw["riccati"]
    m = cfg.market if market is None else market
    return solve_backward(RiccatiParams(m, xi, r["trunc"], int(r["n_ode"])))


def cmd_price(cfg: ExperimentConfig, out: Path, threads: int) -> dict:
    m = cfg.market
    xi = cfg.signature_payoff()
    pp = cfg.path_payoff()
    if xi is not None:
        bach = fair_price(xi, m.sigma)
    else:
        bach = bachelier_price(pp, m.S0, m.sigma)
    rows = [["bachelier", "", bach]]
    nus = [float(v) for v in cfg.raw["price"]["nu"]]
    if nus:
        if xi is None:
            xi, _ = _signature_payoff(cfg, out, threads)
        for nu in nus:
            sol = _riccati(cfg, xi, m.with_(nu=nu))
            rows.append(["indifference", nu, sol.indifference_price])
    out.mkdir(parents=True, exist_ok=True)
    _write_rows(out / "prices.csv", ["quantity", "nu", "price"], rows)
    for q, nu, v in rows:
        print(f"{q:<13} {'' if nu == '' else f'nu={nu:g}':<12} {v:.6f}")
    return {"prices": rows}


def cmd_riccati(cfg: ExperimentConfig, out: Path, threads: int, dump_tensor: bool = False) -> dict:
    xi, _ = _signature_payoff(cfg, out, threads)
    sol = _riccati(cfg, xi)
    lay = sol.layout
    picks = [w for w in ((2,), (3,), (2, 2), (2, 3), (3, 3)) if len(w) <= lay.trunc]
    idx = [lay.index(w) for w in picks]
    rows = [[t, psi[0]] + [psi[i] for i in idx] for t, psi in zip(sol.times, sol.psi)]
    out.mkdir(parents=True, exist_ok=True)
    _write_rows(out / "psi.csv", ["t", "psi_empty"] + ["psi_" + "".join(map(str, w)) for w in picks], rows)
    (out / "psi0.txt").write_text(sol.psi0.to_text())
    if dump_tensor:
        print(sol.psi0.to_text(), end="")
    print(f"psi_0 empty-word coefficient {sol.psi0_empty:.6f}; indifference price {sol.indifference_price:.6f}")
    return {"indifference_price": sol.indifference_price, "trunc": sol.params.trunc}


def _strategies(cfg: ExperimentConfig, xi, sol):
    m = cfg.market
    out = []
    for name in cfg.raw["strategies"]:
        if name == "sig":
            out.append(SigFeedback(sol))
        elif name == "no_permanent":
            out.append(NoPermanentBenchmark.from_payoff(xi, m, cfg.raw["riccati"]["trunc"]))
        elif name == "delta_tracking":
            out.append(DeltaTracking(cfg.path_payoff(), m))
        elif name == "eu_quadratic":
            Gamma = xi.xi[(2, 2)] if set(xi.xi.coeffs) == {(2, 2)} else None
            if Gamma is None:
                raise ConfigError("eu_quadratic strategy needs an at-the-money European quadratic payoff")
            out.append(EuQuadraticFeedback(EuQuadraticClosedForm(RiccatiParams(m, xi), Gamma)))
        elif name == "perfect":
            out.append(PerfectHedge(xi, m.sigma))
        elif name == "zero":
            out.append(ZeroTrading())
    return out


def cmd_simulate(cfg: ExperimentConfig, out: Path, threads: int) -> dict:
    seed = cfg.require_seed()
    sim, m = cfg.raw["simulation"], cfg.market
    xi, _ = _signature_payoff(cfg, out, threads)
    sol = _riccati(cfg, xi) if "sig" in cfg.raw["strategies"] else None
    pp = cfg.path_payoff()
    results, rows = [], []
    for strat in _strategies(cfg, xi, sol):
        V0 = m.V0 if m.V0 is not None else strat.default_V0()
        if V0 is None:
            V0 = fair_price(xi, m.sigma)
        res = run_paths(m.with_(V0=V0), strat, xi, int(sim["n_paths"]), int(sim["n_steps"]), seed, pp,
                        antithetic=bool(sim["antithetic"]), threads=threads, n_record=int(sim["n_record"]),
                        bridge=bool(sim["bridge"]))
        dump_run(res, out, strat.name)
        results.append(res)
        rows.append(res.aggregate_row(V0))
        print(f"{strat.name:<26} V0={V0:10.4f}  MQV={res.mqv:10.4f} ± {res.mqv_se:.4f}")
    write_aggregate_csv(rows, out / "aggregate.csv")
    write_histogram_csv(results, out / "histogram.csv", int(sim["bins"]))
    return {"seed": seed, "aggregate": rows}


def cmd_indifference(cfg: ExperimentConfig, out: Path, threads: int) -> dict:
    seed = cfg.require_seed()
    sim, m = cfg.raw["simulation"], cfg.market
    xi, _ = _signature_payoff(cfg, out, threads)
    sol = _riccati(cfg, xi)
    run = run_paths(m.with_(V0=0.0), SigFeedback(sol), xi, int(sim["n_paths"]), int(sim["n_steps"]), seed,
                    cfg.path_payoff(), antithetic=bool(sim["antithetic"]), threads=threads,
                    bridge=bool(sim["bridge"]))
    pi_mc, se = -run.mqv, run.mqv_se
    pp = cfg.path_payoff()
    bach = bachelier_price(pp, m.S0, m.sigma) if pp is not None else fair_price(xi, m.sigma)
    out.mkdir(parents=True, exist_ok=True)
    _write_rows(out / "indifference.csv", ["bachelier", "pi_riccati", "pi_mc", "pi_mc_se"],
                [[bach, sol.indifference_price, pi_mc, se]])
    print(f"bachelier {bach:.4f}  pi(riccati) {sol.indifference_price:.4f}  pi~(mc) {pi_mc:.4f} ± {se:.4f}")
    return {"seed": seed, "pi_mc": pi_mc, "pi_mc_se": se}


def cmd_perfect_hedge(cfg: ExperimentConfig, out: Path, threads: int) -> dict:
    seed = cfg.require_seed()
    m = cfg.market
    xi = cfg.signature_payoff()
    if xi is None:
        raise ConfigError("perfect-hedge needs a payoff with an exact signature form")
    ph = cfg.raw["perfect_hedge"]
    rows = []
    out.mkdir(parents=True, exist_ok=True)
    for n in ph["n_steps"]:
        st = simulate_replication(xi, m.sigma, m.mu, int(n), int(ph["n_paths"]), seed, threads)
        st.to_csv(out / f"replication_{int(n)}.csv")
        rows.append([int(n), st.price, st.rms, st.max_abs, st.mean])
        print(f"n_steps={int(n):<6} rms={st.rms:.6g}  max={st.max_abs:.6g}  rms/price={st.rms / st.price:.3%}")
    _write_rows(out / "replication.csv", ["n_steps", "price", "rms", "max_abs", "mean"], rows)
    return {"seed": seed}


def cmd_regress(cfg: ExperimentConfig, out: Path, threads: int, chain: bool = False) -> dict:
    if cfg.path_payoff() is None:
        raise ConfigError("regress needs a path-dependent payoff kind")
    res = _regress(cfg, out, threads)
    print(f"M={res.ell.trunc}  mse_in={res.mse_in:.6g}  mse_out={res.mse_out:.6g}  cond={res.cond:.3g}")
    if chain:
        xi = res.as_payoff(cfg.market.T, cfg.path_payoff().nominal)
        sol = _riccati(cfg, xi)
        (out / "psi0.txt").write_text(sol.psi0.to_text())
        print(f"indifference price of the regressed payoff {sol.indifference_price:.6f}")
    return {"mse_in": res.mse_in, "mse_out": res.mse_out}


COMMANDS = {
    "price": cmd_price,
    "riccati": cmd_riccati,
    "perfect-hedge": cmd_perfect_hedge,
    "simulate": cmd_simulate,
    "regress": cmd_regress,
    "indifference": cmd_indifference,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sighedge", description="Signature hedging under market impact.")
    ap.add_argument("--print-config", action="store_true", help="print an annotated config template and exit")
    sub = ap.add_subparsers(dest="command")
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", type=Path, default=None, help="YAML experiment file")
        sp.add_argument("--out", type=Path, default=Path("out"), help="output directory")
        sp.add_argument("--threads", type=int, default=1, help="worker threads; results do not depend on the count")
        sp.add_argument("--seed", type=int, default=None, help="overrides the config seeds")
        sp.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
        if name == "riccati":
            sp.add_argument("--dump-tensor", action="store_true", help="also print the psi_0 tensor")
        if name == "regress":
            sp.add_argument("--chain", action="store_true", help="also solve the Riccati system")
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.print_config:
        print(TEMPLATE, end="")
        return EXIT_OK
    if args.command is None:
        ap.print_help()
        return EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        cfg = ExperimentConfig.load(args.config)
        cfg.override(seed=args.seed)
        kw = {}
        if args.command == "riccati":
            kw["dump_tensor"] = args.dump_tensor
        if args.command == "regress":
            kw["chain"] = args.chain
        extra = COMMANDS[args.command](cfg, args.out, args.threads, **kw)
        write_manifest(args.out, args.command, cfg, args.threads, {"result": extra})
    except (ConfigError, PreconditionError, UnsupportedPayoff) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except RiccatiBlowUp as e:
        print(f"numerical blow-up: {e}", file=sys.stderr)
        return EXIT_BLOWUP
    except RankDeficientError as e:
        print(f"rank deficiency: {e}", file=sys.stderr)
        return EXIT_RANK
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
