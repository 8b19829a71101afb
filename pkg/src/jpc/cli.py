"""Command-line front end: ``simulate``, ``sweep``, ``analyze`` and ``validate``.

Exit codes: 0 success, 1 validation failure, 2 configuration error,
3 state budget exceeded, 4 formula evaluated outside its domain.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from dataclasses import astuple, dataclass, fields
from pathlib import Path
from typing import Optional

from . import analysis, sim, validation
from .errors import DomainError, InvalidProfile, StateBudgetExceeded
from .model import RequestProfile, SystemConfig
from .trellis import DEFAULT_STATE_BUDGET, statistical_plan

SCHEMA_VERSION = 1
HEADER = [f.name for f in fields(sim.Row)]

EXIT_OK, EXIT_VALIDATION, EXIT_CONFIG, EXIT_BUDGET, EXIT_DOMAIN = 0, 1, 2, 3, 4


class ConfigError(Exception):
    pass


@dataclass
class ExperimentConfig:
    L: int
    N: list
    K: list
    profile: object  # "uniform_iid" or a RequestProfile
    policies: list
    trials: int
    base_seed: int
    output: Optional[str]
    format: str
    formulas: Optional[list]
    state_budget: int

    def profile_for(self, L: int, K: int) -> RequestProfile:
        if self.profile == "uniform_iid":
            return RequestProfile.uniform_iid(L, K)
        prof = self.profile
        if prof.catalog_size != L or prof.horizon != K:
            raise ConfigError(
                f"profile: is {prof.catalog_size} x {prof.horizon}, cell needs {L} x {K}"
            )
        return prof

    def cells(self):
        return [(self.L, N, K) for N in self.N for K in self.K]


def _int_list(doc, key):
    value = doc.get(key)
    values = value if isinstance(value, list) else [value]
    if not values or any(not isinstance(v, int) or isinstance(v, bool) or v < 1 for v in values):
        raise ConfigError(f"{key}: expected a positive integer or a non-empty list of them, got {value!r}")
    return values


def load_config(path: str, args) -> ExperimentConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config: file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: {path} is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config: top level must be a JSON object")
    version = doc.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"schema_version: unsupported value {version!r}")

    L = _int_list(doc, "L")
    if len(L) != 1:
        raise ConfigError("L: must be a single integer")
    N, K = _int_list(doc, "N"), _int_list(doc, "K")

    entry = doc.get("profile", "uniform_iid")
    if entry == "uniform_iid":
        profile = entry
    elif isinstance(entry, dict):
        try:
            profile = RequestProfile.from_json({"L": L[0], "K": K[0], **entry})
        except InvalidProfile as exc:
            raise ConfigError(f"profile: {exc}") from None
    elif isinstance(entry, str):
        ppath = Path(entry)
        if not ppath.is_absolute():
            ppath = path.parent / ppath
        if not ppath.exists():
            raise ConfigError(f"profile: file not found: {ppath}")
        try:
            profile = RequestProfile.load(ppath)
        except (InvalidProfile, json.JSONDecodeError) as exc:
            raise ConfigError(f"profile: {ppath}: {exc}") from None
    else:
        raise ConfigError(f"profile: expected 'uniform_iid', an object or a path, got {entry!r}")

    policies = doc.get("policies", list(sim.POLICIES))
    if not isinstance(policies, list) or not policies or any(p not in sim.POLICIES for p in policies):
        raise ConfigError(f"policies: expected a non-empty subset of {list(sim.POLICIES)}, got {policies!r}")

    trials = args.trials if args.trials is not None else doc.get("trials", 10_000)
    if not isinstance(trials, int) or trials < 1:
        raise ConfigError(f"trials: expected an integer >= 1, got {trials!r}")
    seed = args.seed if args.seed is not None else doc.get("base_seed", 0)
    if not isinstance(seed, int) or not 0 <= seed < 2**64:
        raise ConfigError(f"base_seed: expected an unsigned 64-bit integer, got {seed!r}")
    fmt = args.format or doc.get("format", "csv")
    if fmt not in ("csv", "json"):
        raise ConfigError(f"format: expected 'csv' or 'json', got {fmt!r}")
    formulas = doc.get("formulas")
    if formulas is not None:
        unknown = [f for f in formulas if f not in FORMULAS] if isinstance(formulas, list) else [formulas]
        if unknown:
            raise ConfigError(f"formulas: unknown entries {unknown!r}")
    budget = doc.get("state_budget", DEFAULT_STATE_BUDGET)
    if not isinstance(budget, int) or budget < 1:
        raise ConfigError(f"state_budget: expected a positive integer, got {budget!r}")

    return ExperimentConfig(
        L=L[0],
        N=N,
        K=K,
        profile=profile,
        policies=policies,
        trials=trials,
        base_seed=seed,
        output=args.out or doc.get("output"),
        format=fmt,
        formulas=formulas,
        state_budget=budget,
    )


# --- analytical formulas -----------------------------------------------------


def _iid_q(cfg, L, K):
    profile = cfg.profile_for(L, K)
    return profile.q[0] if profile.is_iid else None


def _needs_uniform(fn):
    def wrapped(cfg, L, N, K):
        if cfg.profile != "uniform_iid":
            return None
        return fn(L, N, K)

    return wrapped


def _needs_iid(fn):
    def wrapped(cfg, L, N, K):
        q = _iid_q(cfg, L, K)
        return None if q is None else fn(q, L, N, K)

    return wrapped


def _plan_value(cfg, L, N, K):
    profile = cfg.profile_for(L, K)
    plan = statistical_plan(profile, SystemConfig(L, N, K), cfg.state_budget)
    return analysis.statistical_throughput(plan, profile)


def _offline_approx(L, N, K):
    if N > K:
        raise DomainError(f"need N <= K, got N={N}, K={K}")
    return analysis.offline_throughput_uniform_approx(L, N, K)


# name -> (policy, evaluator returning a report, None when not applicable)
FORMULAS = {
    "offline_throughput_exact": ("offline", _needs_iid(analysis.offline_throughput_exact)),
    "offline_throughput_uniform_approx": ("offline", _needs_uniform(_offline_approx)),
    "offline_throughput_uniform_simple": (
        "offline",
        _needs_uniform(analysis.offline_throughput_uniform_simple),
    ),
    "statistical_throughput": ("statistical", _plan_value),
    "statistical_throughput_iid": ("statistical", _needs_iid(analysis.statistical_throughput_iid)),
    "statistical_throughput_uniform": (
        "statistical",
        _needs_uniform(analysis.statistical_throughput_uniform),
    ),
    "causal_throughput_exact": ("causal", _needs_iid(analysis.causal_throughput_exact)),
    "causal_policy_throughput": ("causal", _needs_iid(analysis.causal_policy_throughput)),
    "causal_throughput_uniform": ("causal", _needs_uniform(analysis.causal_throughput_uniform)),
    "causal_throughput_simple": (
        "causal",
        _needs_uniform(lambda L, N, K: analysis.causal_throughput_simple(L, N)),
    ),
}


def analyze_rows(cfg: ExperimentConfig) -> list:
    explicit = cfg.formulas is not None
    names = cfg.formulas if explicit else list(FORMULAS)
    rows = []
    for L, N, K in cfg.cells():
        for name in names:
            policy, evaluate = FORMULAS[name]
            if not explicit and policy not in cfg.policies:
                continue
            try:
                report = evaluate(cfg, L, N, K)
            except DomainError:
                if explicit:
                    raise
                continue
            if report is None:
                continue
            rows.append(
                sim.Row(policy, L, N, K, 0, None, None, float(report.value), f"{report.method}:{name}")
            )
    return rows


# --- output ------------------------------------------------------------------


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.9g}"
    return str(value)


def render(rows, fmt: str, plot_data: bool = False) -> str:
    if plot_data:
        rows = sorted(rows, key=lambda r: (r.policy, r.method, r.L, r.N, r.K))
    if fmt == "json":
        doc = [
            {name: (None if v is None else (float(_fmt(v)) if isinstance(v, float) else v))
             for name, v in zip(HEADER, astuple(r))}
            for r in rows
        ]
        return json.dumps(doc, indent=2) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(HEADER)
    for r in rows:
        writer.writerow([_fmt(v) for v in astuple(r)])
    return buf.getvalue()


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# --- commands ----------------------------------------------------------------


def cmd_simulate(args) -> int:
    cfg = load_config(args.config, args)
    rows = sim.simulate_grid(
        cfg.policies, cfg.cells(), cfg.profile_for, cfg.trials, cfg.base_seed, args.jobs, cfg.state_budget
    )
    _emit(render(rows, cfg.format, args.emit_plot_data), cfg.output)
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = load_config(args.config, args)
    if len(cfg.N) > 1 and len(cfg.K) > 1:
        raise ConfigError("N, K: a sweep varies exactly one of them; use simulate for grids")
    if len(cfg.N) > 1:
        rows = sim.sweep_N(
            cfg.policies, cfg.L, cfg.K[0], cfg.N, cfg.trials, cfg.base_seed, args.jobs,
            cfg.profile_for, cfg.state_budget,
        )
    else:
        rows = sim.sweep_K(
            cfg.policies, cfg.L, cfg.N[0], cfg.K, cfg.trials, cfg.base_seed, args.jobs,
            cfg.profile_for, cfg.state_budget,
        )
    _emit(render(rows, cfg.format, args.emit_plot_data), cfg.output)
    return EXIT_OK


def cmd_analyze(args) -> int:
    cfg = load_config(args.config, args)
    _emit(render(analyze_rows(cfg), cfg.format, args.emit_plot_data), cfg.output)
    return EXIT_OK


def cmd_validate(args) -> int:
    ok = True
    for result in validation.run_all(args.scale, args.seed or 0):
        if result.passed:
            print(f"PASS {result.name} ({result.cases} cases, {result.seconds:.1f}s)")
        else:
            ok = False
            print(f"FAIL {result.name} after {result.cases} cases")
            print(f"  counterexample: {result.counterexample}")
    return EXIT_OK if ok else EXIT_VALIDATION


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="jpc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True, help="experiment config (JSON)")
            p.add_argument("--out", help="output file (default: stdout)")
            p.add_argument("--format", choices=["csv", "json"])
            p.add_argument("--trials", type=int)
            p.add_argument("--jobs", type=int, default=1, help="worker processes")
            p.add_argument("--emit-plot-data", action="store_true", help="group rows per curve")
        p.add_argument("--seed", type=int, help="base seed (unsigned 64-bit)")

    for name, fn, help_ in [
        ("simulate", cmd_simulate, "Monte-Carlo every policy on every (N, K) cell"),
        ("sweep", cmd_sweep, "Monte-Carlo sweep over N or over K"),
        ("analyze", cmd_analyze, "evaluate the analytical throughput formulas"),
    ]:
        p = sub.add_parser(name, help=help_)
        common(p)
        p.set_defaults(func=fn)

    p = sub.add_parser("validate", help="run the oracle-equivalence suites")
    common(p, needs_config=False)
    p.add_argument("--scale", choices=sorted(validation.SCALES), default="default")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StateBudgetExceeded as exc:
        print(f"resource error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
