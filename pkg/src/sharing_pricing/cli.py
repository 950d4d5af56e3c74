"""Command-line experiment harness.

Every subcommand writes CSV (default) or JSON records. Output depends only
on the command line and seed, never on ``--workers``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from . import network as nv
from .complete import solve_complete
from .differentiated import virtual_surplus_realization
from .mc import NonFiniteEstimate
from .poi import estimate_poi, profit_estimates
from .sweep import COLUMNS as SWEEP_COLUMNS
from .sweep import default_replicates, run_ratio_sweep
from .two_sided import (
    TwoSidedInstance,
    alternate_poi,
    alternate_profit_expression,
    solve_two_sided_uniform,
    large_market_closed_form,
    two_sided_profits,
)
from .uniform import solve_uniform
from .valuation import UNIFORM, ValuationProfile

FIGURE_GRID = [10, 100, 1_000, 10_000]
FIGURE_MODELS = {
    1: [("bounded", 0.9), ("bounded", 0.99)],
    2: [("zipf", None), ("metcalfe", None)],
}
FIGURE_COLUMNS = ["n", "model_params", "ratio_U_over_D", "ratio_se", "poi", "poi_se"]

DEFAULTS = {
    "model": None, "rho": None, "cost": 0.0, "n": None, "n_grid": None,
    "n1": None, "n2": None, "samples": None, "seed": 0, "workers": 1,
    "output": None, "format": "csv", "theta": None, "mechanism": "all", "figure": None,
}


class UsageError(Exception):
    pass


@dataclass
class ExperimentConfig:
    model: Optional[str] = None
    rho: Optional[float] = None
    cost: float = 0.0
    n: Optional[int] = None
    n_grid: list[int] = field(default_factory=list)
    n1: Optional[int] = None
    n2: Optional[int] = None
    samples: Optional[int] = None
    seed: int = 0
    workers: int = 1
    output: Optional[str] = None
    format: str = "csv"
    theta: Optional[list[float]] = None
    mechanism: str = "all"
    figure: Optional[int] = None

    def validate(self, command: str) -> None:
        if self.model is not None:
            if self.model not in ("bounded", "zipf", "metcalfe"):
                raise UsageError(f"unknown model {self.model!r}")
            if (self.model == "bounded") != (self.rho is not None):
                raise UsageError("--rho is required for the bounded model and only valid for it")
        if self.cost is None or not math.isfinite(self.cost) or self.cost < 0:
            raise UsageError("--cost must be a non-negative number")
        if self.n_grid:
            if any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])) or self.n_grid[0] < 1:
                raise UsageError("--n-grid must be positive and strictly increasing")
        if self.samples is not None and self.samples < 2:
            raise UsageError("--samples must be at least 2")
        if self.workers < 1:
            raise UsageError("--workers must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise UsageError("--seed must be a 64-bit unsigned integer")
        if self.format not in ("csv", "json"):
            raise UsageError("--format must be csv or json")
        if command in ("solve", "poi") and self.model is None:
            raise UsageError("--model is required")
        if command == "sweep" and (self.model is None or not self.n_grid):
            raise UsageError("--model and --n-grid are required")
        if command in ("solve", "poi") and self.n is None and self.theta is None:
            raise UsageError("--n is required")
        if self.n is not None and self.n < 1:
            raise UsageError("--n must be at least 1")
        if self.theta is not None:
            if self.n is not None and self.n != len(self.theta):
                raise UsageError("--n does not match the number of --theta values")
            if any(not 0.0 <= t <= 1.0 for t in self.theta):
                raise UsageError("--theta values must lie in [0, 1]")
        if command == "two-sided":
            if self.n1 is None or self.n2 is None or self.n1 < 1 or self.n2 < 1:
                raise UsageError("--n1 and --n2 must both be at least 1")
        if command == "figure" and self.figure not in FIGURE_MODELS:
            raise UsageError("--figure must be 1 or 2")

    def network(self) -> nv.NetworkValueFn:
        return nv.from_name(self.model, self.rho)


def _int_list(text: str) -> list[int]:
    return [int(float(x)) for x in text.split(",") if x.strip()]


def _float_list(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _count(text: str) -> int:
    value = float(text)
    if not value.is_integer():
        raise argparse.ArgumentTypeError(f"expected an integer count, got {text}")
    return int(value)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sharing-pricing",
        description="Optimal pricing for a sharing platform with network externalities.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="JSON file of flag values; explicit flags take precedence")
    common.add_argument("--cost", type=float, help="per-user cost c (default 0)")
    common.add_argument("--samples", type=_count, help="Monte-Carlo replicates")
    common.add_argument("--seed", type=int, help="master seed (default 0)")
    common.add_argument("--workers", type=int, help="worker processes (default 1)")
    common.add_argument("--output", "-o", help="output path (default stdout)")
    common.add_argument("--format", choices=["csv", "json"], help="output format (default csv)")

    model = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    model.add_argument("--model", choices=["bounded", "zipf", "metcalfe"])
    model.add_argument("--rho", type=float, help="non-coverage probability, bounded model only")

    p = sub.add_parser("solve", parents=[common, model], argument_default=argparse.SUPPRESS,
                       help="solve one market with each mechanism")
    p.add_argument("--n", type=_count)
    p.add_argument("--theta", type=_float_list, help="comma-separated valuations for a fixed instance")
    p.add_argument("--mechanism", choices=["complete", "differentiated", "uniform", "all"])

    p = sub.add_parser("poi", parents=[common, model], argument_default=argparse.SUPPRESS,
                       help="estimate the price of information")
    p.add_argument("--n", type=_count)

    p = sub.add_parser("sweep", parents=[common, model], argument_default=argparse.SUPPRESS,
                       help="profit ratios and price of information over a grid of n")
    p.add_argument("--n-grid", dest="n_grid", type=_int_list)

    p = sub.add_parser("figure", parents=[common], argument_default=argparse.SUPPRESS,
                       help="data behind the ratio / price-of-information figures")
    p.add_argument("--figure", type=int, choices=[1, 2])
    p.add_argument("--n-grid", dest="n_grid", type=_int_list)

    p = sub.add_parser("two-sided", parents=[common], argument_default=argparse.SUPPRESS,
                       help="two-group market with contributors and pure consumers")
    p.add_argument("--n1", type=_count)
    p.add_argument("--n2", type=_count)
    return parser


def load_config(command: str, args: argparse.Namespace) -> ExperimentConfig:
    values = dict(DEFAULTS)
    explicit = vars(args).copy()
    explicit.pop("command", None)
    path = explicit.pop("config", None)
    if path:
        try:
            loaded = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise UsageError("config file must hold a JSON object")
        for key, value in loaded.items():
            key = key.replace("-", "_")
            if key not in DEFAULTS:
                raise UsageError(f"unknown config key {key!r}")
            values[key] = value
    values.update(explicit)
    if isinstance(values["n_grid"], str):
        values["n_grid"] = _int_list(values["n_grid"])
    if isinstance(values["theta"], str):
        values["theta"] = _float_list(values["theta"])
    values["n_grid"] = values["n_grid"] or []
    cfg = ExperimentConfig(**values)
    cfg.validate(command)
    return cfg


# -- commands ---------------------------------------------------------------

def cmd_solve(cfg: ExperimentConfig) -> tuple[list[str], list[dict]]:
    fn = cfg.network()
    mechanisms = ["complete", "differentiated", "uniform"] if cfg.mechanism == "all" else [cfg.mechanism]
    columns = ["mechanism", "n", "m_or_theta", "price", "profit", "std_error"]
    rows = []
    if cfg.theta is not None:
        profile = ValuationProfile.from_values(cfg.theta)
        n = len(profile)
        for mech in mechanisms:
            if mech == "complete":
                sol = solve_complete(profile, fn, cfg.cost)
                rows.append({"mechanism": mech, "n": n, "m_or_theta": sol.m_star,
                             "price": ";".join(_fmt(p) for p in sol.prices), "profit": sol.profit,
                             "std_error": ""})
            elif mech == "differentiated":
                real = virtual_surplus_realization(profile, UNIFORM, fn, cfg.cost)
                rows.append({"mechanism": mech, "n": n, "m_or_theta": real.m_star, "price": "",
                             "profit": real.virtual_surplus, "std_error": ""})
            else:
                rows.append(_uniform_row(fn, cfg.cost, n))
        return columns, rows

    n = cfg.n
    if {"complete", "differentiated"} & set(mechanisms):
        reps = cfg.samples or default_replicates(n)
        complete, diff, m_c, m_d = profit_estimates(UNIFORM, fn, cfg.cost, n, reps, cfg.seed, cfg.workers)
    for mech in mechanisms:
        if mech == "complete":
            rows.append({"mechanism": mech, "n": n, "m_or_theta": m_c.mean, "price": "",
                         "profit": complete.mean, "std_error": complete.std_error})
        elif mech == "differentiated":
            rows.append({"mechanism": mech, "n": n, "m_or_theta": m_d.mean, "price": "",
                         "profit": diff.mean, "std_error": diff.std_error})
        else:
            rows.append(_uniform_row(fn, cfg.cost, n))
    return columns, rows


def _uniform_row(fn, cost, n) -> dict:
    sol = solve_uniform(UNIFORM, fn, cost, n)
    return {"mechanism": "uniform", "n": n, "m_or_theta": sol.theta_bar, "price": sol.price,
            "profit": sol.expected_profit, "std_error": ""}


def cmd_poi(cfg: ExperimentConfig) -> tuple[list[str], list[dict]]:
    fn = cfg.network()
    reps = cfg.samples or default_replicates(cfg.n)
    rep = estimate_poi(UNIFORM, fn, cfg.cost, cfg.n, reps, cfg.seed, cfg.workers)
    columns = ["model_params", "n", "cost", "replicates", "poi", "poi_se", "closed_form",
               "complete_profit", "complete_se", "uniform_profit", "diff_profit", "diff_se", "poi_vs_diff"]
    row = {
        "model_params": rep.model, "n": rep.n, "cost": cfg.cost, "replicates": reps,
        "poi": rep.poi_estimate, "poi_se": rep.poi_se,
        "closed_form": "" if rep.closed_form is None else rep.closed_form,
        "complete_profit": rep.complete_profit.mean, "complete_se": rep.complete_profit.std_error,
        "uniform_profit": rep.uniform_profit, "diff_profit": rep.diff_profit.mean,
        "diff_se": rep.diff_profit.std_error,
        "poi_vs_diff": "" if rep.poi_vs_diff is None else rep.poi_vs_diff,
    }
    return columns, [row]


def cmd_sweep(cfg: ExperimentConfig) -> tuple[list[str], list[dict]]:
    rows = run_ratio_sweep(UNIFORM, cfg.network(), cfg.cost, cfg.n_grid, cfg.seed, cfg.samples, cfg.workers)
    return SWEEP_COLUMNS, rows


def cmd_figure(cfg: ExperimentConfig) -> tuple[list[str], list[dict]]:
    grid = cfg.n_grid or FIGURE_GRID
    rows = []
    for model, rho in FIGURE_MODELS[cfg.figure]:
        fn = nv.from_name(model, rho)
        rows.extend(run_ratio_sweep(UNIFORM, fn, cfg.cost, grid, cfg.seed, cfg.samples, cfg.workers))
    return FIGURE_COLUMNS, rows


def cmd_two_sided(cfg: ExperimentConfig) -> tuple[list[str], list[dict]]:
    inst = TwoSidedInstance(cfg.n1, cfg.n2, cfg.cost)
    sol = solve_two_sided_uniform(inst)
    cf = large_market_closed_form(cfg.n1, cfg.n2)
    reps = cfg.samples or default_replicates(cfg.n1 + cfg.n2)
    complete, diff = two_sided_profits(inst, reps, cfg.seed, cfg.workers)
    columns = ["n1", "n2", "k", "cost", "replicates", "theta1_bar", "theta2_bar", "P1", "P2", "profit",
               "P1_closed", "P2_closed", "profit_closed", "profit_closed_alt", "poi_closed", "poi_closed_alt",
               "poi_mc", "poi_mc_se", "complete_profit", "complete_se", "diff_profit", "diff_se"]
    row = {
        "n1": cfg.n1, "n2": cfg.n2, "k": inst.k, "cost": cfg.cost, "replicates": reps,
        "theta1_bar": sol.theta1_bar, "theta2_bar": sol.theta2_bar, "P1": sol.P1, "P2": sol.P2,
        "profit": sol.expected_profit,
        "P1_closed": cf.P1, "P2_closed": cf.P2, "profit_closed": cf.profit,
        "profit_closed_alt": alternate_profit_expression(cfg.n1, cfg.n2),
        "poi_closed": cf.poi, "poi_closed_alt": alternate_poi(cfg.n1, cfg.n2),
        "poi_mc": complete.mean / sol.expected_profit, "poi_mc_se": complete.std_error / sol.expected_profit,
        "complete_profit": complete.mean, "complete_se": complete.std_error,
        "diff_profit": diff.mean, "diff_se": diff.std_error,
    }
    return columns, [row]


COMMANDS = {
    "solve": cmd_solve,
    "poi": cmd_poi,
    "sweep": cmd_sweep,
    "figure": cmd_figure,
    "two-sided": cmd_two_sided,
}


# -- output -----------------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def render(columns: Sequence[str], rows: Sequence[dict], fmt: str) -> str:
    if fmt == "json":
        return json.dumps([{c: r.get(c, "") for c in columns} for r in rows], indent=2) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for r in rows:
        writer.writerow([_fmt(r.get(c, "")) for c in columns])
    return buf.getvalue()


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.command, args)
        columns, rows = COMMANDS[args.command](cfg)
    except (UsageError, ValueError) as exc:
        parser.error(str(exc))
    except (ArithmeticError, NonFiniteEstimate) as exc:
        print(f"sharing-pricing: numeric failure: {exc}", file=sys.stderr)
        return 1
    text = render(columns, rows, cfg.format)
    output = cfg.output
    if output is None and args.command == "figure":
        output = f"figure{cfg.figure}.{cfg.format}"
    if output is None or output == "-":
        sys.stdout.write(text)
    else:
        Path(output).write_text(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
