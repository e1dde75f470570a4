"""Command-line entry point.

    wealthdyn validate --config econ.json
    wealthdyn simulate --config econ.json --out traj.csv [--svg traj.svg] [--params p.json]
    wealthdyn solve    --config econ.json --tol 0.01 --starts 16 --seed 42 --out solved.json
    wealthdyn price    --config econ.json --params solved.json --at-time 50 \\
                       --demands GoodA=30,GoodB=60 [--quoted GoodA=100,GoodB=80]
    wealthdyn kinetic  --model no-saving --agents 1000 --exchanges 1000000 --seed 1 --out k.json

Failures exit nonzero with a single ``error: ...`` line on stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

import numpy as np

from . import __version__
from .dynamics import build_rate_matrices
from .errors import NoConvergenceError, WealthDynError
from .forward import circulation, detect_convergence, simulate, wealth_metrics
from .inverse import InverseProblem, SolveOptions, load_parameters_document, solve_inverse
from .output import histogram_csv_text, atomic_write_text, render_svg, write_json, write_trajectory_csv
from .pricing import check_price_feasibility, hyperplane_for_pair, min_norm_prices, stability_taxes
from .stochastic import RULES, equal_population, run_kinetic, wealth_histogram
from .taxonomy import EconomyConfig, load_economy_config, validate_economy

R6 = 6


class CommandError(Exception):
    pass


class UsageError(CommandError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _r(v: float) -> float:
    return round(float(v), R6)


def _distinct_paths(*paths) -> None:
    real = [os.path.realpath(p) for p in paths if p]
    if len(set(real)) != len(real):
        raise CommandError("input and output paths must be distinct")


def _kv_list(text: str, flag: str) -> dict[str, float]:
    out: dict[str, float] = {}
    for item in filter(None, (s.strip() for s in text.split(","))):
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise CommandError(f"{flag} expects name=value pairs, got {item!r}")
        try:
            out[key.strip()] = float(value)
        except ValueError:
            raise CommandError(f"{flag}: {value!r} is not a number") from None
    if not out:
        raise CommandError(f"{flag} is empty")
    return out


def _read(path) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise CommandError(f"cannot read {path}: {exc.strerror}") from None


def _load_config(path, params=None, validate=True) -> EconomyConfig:
    try:
        config = load_economy_config(path, validate=validate)
    except OSError as exc:
        raise CommandError(f"cannot read {path}: {exc.strerror}") from None
    if params:
        config = config.with_rates(load_parameters_document(_read(params), config.rates))
        report = validate_economy(config)
        if not report.ok:
            raise CommandError("invalid parameters: " + "; ".join(report.violations))
    return config


# --------------------------------------------------------------------------


def cmd_validate(args) -> int:
    config = _load_config(args.config, validate=False)
    report = validate_economy(config)
    if not report.ok:
        raise CommandError("validation failed: " + "; ".join(report.violations))
    print(
        f"valid: {len(config.categories)} categories, {len(config.interactions)} interactions, "
        f"max_supply {config.max_supply:g}, {config.steps} steps"
    )
    return 0


def cmd_simulate(args) -> int:
    _distinct_paths(args.config, args.out, args.svg, args.params)
    config = _load_config(args.config, args.params)
    traj = simulate(config)
    write_trajectory_csv(traj, args.out)
    if args.svg:
        render_svg(traj, args.svg)
    final = traj.final
    conv = detect_convergence(traj)
    metrics = wealth_metrics(final)
    print(f"simulated {len(traj)} states (t={traj.t0}..{final.t})")
    for name, v in zip(config.names, final.wealth):
        print(f"  {name:<20s} {v:.6f}")
    if conv.converged:
        print(f"attractor reached at t={conv.attractor_time}")
    else:
        print(f"no attractor (late max step change {conv.max_late_delta:.6f})")
    print(f"gini {metrics.gini:.6f}  entropy {metrics.shannon_entropy:.6f}  nakamoto {metrics.nakamoto_index}")
    if config.control_mechanism:
        print(f"circulation {circulation(final, config):.6f}")
    return 0


def cmd_solve(args) -> int:
    _distinct_paths(args.config, args.out)
    config = _load_config(args.config)
    problem = InverseProblem.from_config(config)
    opts = SolveOptions(tolerance=args.tol, max_iterations=args.max_iterations, num_starts=args.starts, seed=args.seed)
    try:
        result = solve_inverse(problem, opts)
        status = 0
    except NoConvergenceError as exc:
        result = exc.result
        status = 1
    doc = result.to_document(config)
    doc["residual_norm"] = _r(doc["residual_norm"])
    doc["final_state"] = {k: _r(v) for k, v in doc["final_state"].items()}
    write_json(args.out, doc)
    print(f"best of {result.starts_used} starts (start {result.start_index}, {result.iterations} iterations)")
    for k, v in result.parameters.items():
        print(f"  {k:<36s} {v:.6f}")
    print(f"residual norm {result.residual_norm:.6f}")
    if status:
        raise CommandError(f"no convergence: residual {result.residual_norm:.6f} > {args.tol} * max_supply")
    return 0


def _pair_for(config: EconomyConfig, names) -> tuple[str, str]:
    pairs = set()
    for n in names:
        try:
            it = config.interaction(n)
        except KeyError:
            raise CommandError(f"unknown interaction {n!r}") from None
        pairs.add((it.payer, it.receiver))
    if len(pairs) != 1:
        raise CommandError("all demanded interactions must share one payer->receiver pair")
    return pairs.pop()


def cmd_price(args) -> int:
    _distinct_paths(args.config, args.params, args.out)
    config = _load_config(args.config, args.params)
    if args.at_time < 0:
        raise CommandError("--at-time must be non-negative")
    demands = _kv_list(args.demands, "--demands")
    pair = _pair_for(config, demands)
    beta = config.rates.beta.get(pair)
    if beta is None:
        beta = -config.rates.beta.get((pair[1], pair[0]), 0.0)
    horizon = replace(config, steps=max(config.steps, args.at_time + 1))
    traj = simulate(horizon, build_rate_matrices(horizon))
    state = traj.at(args.at_time)
    plane = hyperplane_for_pair(beta, state, pair, demands, config)
    canonical = min_norm_prices(plane)
    report = {
        "t": args.at_time,
        "pair": f"{pair[0]}->{pair[1]}",
        "beta": beta,
        "wealth": {n: _r(v) for n, v in zip(config.names, state.wealth)},
        "hyperplane_constant": _r(plane.constant),
        "circulation": _r(plane.circulation_bound),
        "demands": {n: float(d) for n, d in zip(plane.interactions, plane.demands)},
        "canonical_prices": {n: _r(p) for n, p in zip(plane.interactions, canonical)},
    }
    checked = canonical
    if args.quoted:
        quoted = _kv_list(args.quoted, "--quoted")
        missing = [n for n in plane.interactions if n not in quoted]
        if missing:
            raise CommandError(f"--quoted lacks prices for {', '.join(missing)}")
        q = np.array([quoted[n] for n in plane.interactions])
        tau = stability_taxes(plane, q)
        checked = q + tau
        report["quoted_prices"] = {n: _r(p) for n, p in zip(plane.interactions, q)}
        report["stability_taxes"] = {n: _r(v) for n, v in zip(plane.interactions, tau)}
        report["taxed_prices"] = {n: _r(v) for n, v in zip(plane.interactions, checked)}
    report["feasible"] = check_price_feasibility(checked, plane.circulation_bound).feasible
    if args.out:
        write_json(args.out, report)
        print(f"t={args.at_time} {report['pair']}: H={plane.constant:.6f}, feasible={report['feasible']}")
    else:
        print(json.dumps(report, indent=2))
    return 0


def cmd_kinetic(args) -> int:
    _distinct_paths(args.out, args.hist)
    if args.agents < 2:
        raise CommandError("--agents must be at least 2")
    if args.exchanges < 0:
        raise CommandError("--exchanges must be non-negative")
    saving = None
    if args.model == "global-saving":
        saving = 0.5 if args.lambda_ is None else args.lambda_
    elif args.lambda_ is not None:
        saving = np.full(args.agents, args.lambda_) if args.model == "individual-saving" else None
        if args.model == "no-saving":
            raise CommandError("--lambda does not apply to the no-saving model")
    pop = equal_population(args.agents, args.model, saving, args.seed)
    final, summary = run_kinetic(pop, args.exchanges)
    doc = summary.to_document()
    for k in ("mean", "gini", "top_1pct_share"):
        doc[k] = _r(doc[k])
    write_json(args.out, doc)
    if args.hist:
        atomic_write_text(args.hist, histogram_csv_text(wealth_histogram(final.wealths, args.bins)))
    print(
        f"{summary.model}: {summary.agents} agents, {summary.exchanges} exchanges, seed {summary.seed}; "
        f"gini {summary.gini:.6f}, top 1% share {summary.top_1pct_share:.6f}"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wealthdyn", description="Token-economy wealth dynamics")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("validate", help="check an economy document")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("simulate", help="forward propagation")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="trajectory CSV")
    p.add_argument("--svg")
    p.add_argument("--params", help="rates or solution document overriding the config rates")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("solve", help="inverse propagation toward desired_wealth")
    p.add_argument("--config", required=True)
    p.add_argument("--tol", type=float, required=True)
    p.add_argument("--starts", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--max-iterations", type=int, default=200)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("price", help="price hyperplane and stability taxes")
    p.add_argument("--config", required=True)
    p.add_argument("--params", required=True)
    p.add_argument("--at-time", type=int, required=True)
    p.add_argument("--demands", required=True)
    p.add_argument("--quoted")
    p.add_argument("--out", help="write the JSON report here instead of stdout")
    p.set_defaults(func=cmd_price)

    p = sub.add_parser("kinetic", help="kinetic wealth-exchange model")
    p.add_argument("--model", required=True, choices=RULES)
    p.add_argument("--agents", type=int, required=True)
    p.add_argument("--exchanges", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--lambda", dest="lambda_", type=float)
    p.add_argument("--out", required=True)
    p.add_argument("--hist", help="wealth histogram CSV")
    p.add_argument("--bins", type=int, default=50)
    p.set_defaults(func=cmd_kinetic)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except (CommandError, WealthDynError, ValueError, KeyError, OSError) as exc:
        msg = str(exc).replace("\n", " ").strip() or type(exc).__name__
        print(f"error: {msg}", file=sys.stderr)
        return 2 if isinstance(exc, UsageError) else 1


if __name__ == "__main__":
    sys.exit(main())
