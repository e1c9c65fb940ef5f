"""Command-line entry point: run episodes, sweep trials, evaluate bounds, export traces.

Flags mirror config-file keys one-to-one; precedence is CLI > file > defaults.
Exit codes: 0 success, 2 config error, 3 numerical-failure quota exceeded,
4 regret verification violation.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import asdict

import numpy as np

from .actions import SCHEMES, enumerate_actions
from .errors import ActiveSearchError, ConfigError
from .experiments import ExperimentConfig, emit_results, full_recovery, run_sweep
from .grid import GridShape, NoiseModel, generate_signal
from .policies import POLICY_NAMES, make_policy
from .regret import (
    bound_regret_1sparse,
    bound_regret_block,
    bound_regret_multi,
    dyadic_action_count,
    lemma1_bound,
    mc_regret_game,
    regret_single_exact,
)
from .sim import DurationModel, SearchEnvironment, run_episode, write_trace_jsonl

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_VERIFY = 4
FAILURE_QUOTA = 0.10


def parse_dims(text: str) -> tuple[int, ...]:
    try:
        dims = tuple(int(p) for p in text.lower().split("x"))
    except ValueError as e:
        raise ConfigError(f"cannot parse grid size {text!r}; use e.g. 128 or 8x16") from e
    return dims


def _read_config_file(path: str) -> dict[str, str]:
    """Flat key = value lines; '#' starts a comment."""
    out: dict[str, str] = {}
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected key = value")
                key, val = (p.strip() for p in line.split("=", 1))
                out[key.replace("-", "_")] = val
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e}") from e
    return out


_SWEEP_KEYS = {
    "policy": str, "n": str, "k": int, "sigma2": float, "agents": int,
    "alpha": float, "eta": float, "t_grid": str, "trials": int, "seed": int,
    "action_scheme": str, "duration": str, "jobs": int,
}


def _resolve(args: argparse.Namespace, defaults: dict) -> dict:
    """CLI > config file > defaults, for the sweep/run keys."""
    merged = dict(defaults)
    if getattr(args, "config", None):
        file_vals = _read_config_file(args.config)
        for key, val in file_vals.items():
            if key not in _SWEEP_KEYS:
                raise ConfigError(f"unknown config key {key!r}")
            merged[key] = _SWEEP_KEYS[key](val)
    for key in _SWEEP_KEYS:
        cli_val = getattr(args, key, None)
        if cli_val is not None:
            merged[key] = cli_val
    env_seed = os.environ.get("ACTIVE_SEARCH_SEED")
    if env_seed is not None:
        merged["seed"] = int(env_seed)
    return merged


def _t_grid_from(text: str, n: int) -> tuple[int, ...]:
    if text:
        return tuple(int(p) for p in text.split(","))
    # default grid spans [1, 2n] coarsely
    pts = sorted({max(1, round(f * 2 * n)) for f in (0.125, 0.25, 0.375, 0.5, 0.75, 1.0)})
    return tuple(pts)


def _config_from(merged: dict) -> ExperimentConfig:
    dims = parse_dims(merged["n"])
    n = int(np.prod(dims))
    return ExperimentConfig(
        dims=dims,
        k=merged["k"],
        sigma2=merged["sigma2"],
        policy=merged["policy"],
        t_grid=_t_grid_from(merged.get("t_grid", ""), n),
        g=merged["agents"],
        alpha=merged["alpha"],
        eta=merged["eta"],
        trials=merged["trials"],
        seed=merged["seed"],
        action_scheme=merged["action_scheme"],
        duration=merged["duration"],
        jobs=merged["jobs"],
    )


_DEFAULTS = {
    "policy": "spats", "n": "128", "k": 1, "sigma2": 1.0, "agents": 1,
    "alpha": 1.0, "eta": 1.0, "t_grid": "", "trials": 50, "seed": 0,
    "action_scheme": "dyadic", "duration": "det", "jobs": 1,
}


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--policy", choices=POLICY_NAMES)
    p.add_argument("--n", help="grid size, e.g. 128 or 8x16")
    p.add_argument("--k", type=int, help="number of targets")
    p.add_argument("--sigma2", type=float, help="observation noise variance")
    p.add_argument("--agents", type=int, help="number of asynchronous agents g")
    p.add_argument("--alpha", type=float, help="LATSI information/reward blend weight")
    p.add_argument("--eta", type=float, help="Laplace prior rate (sqrt(eta) = 1/b)")
    p.add_argument("--seed", type=int, help="base seed (env ACTIVE_SEARCH_SEED overrides)")
    p.add_argument("--action-scheme", dest="action_scheme", choices=SCHEMES)
    p.add_argument("--duration", help="det | det:v | unif:a,b | exp:rate")
    p.add_argument("--print-config", action="store_true", help="dump the resolved configuration")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="activesearch",
        description="Asynchronous multi-agent active search simulator and regret analytics",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one seeded episode and print a trace summary")
    _add_common_flags(run_p)
    run_p.add_argument("--budget", type=int, default=None, help="measurements to complete (T)")
    run_p.add_argument("--trace-out", help="write the event trace as JSON lines")

    sweep_p = sub.add_parser("sweep", help="run seeded trials and emit recovery curves")
    _add_common_flags(sweep_p)
    sweep_p.add_argument("--t-grid", dest="t_grid", help="comma-separated measurement budgets")
    sweep_p.add_argument("--trials", type=int, help="number of seeded trials")
    sweep_p.add_argument("--jobs", type=int, help="parallel trial workers")
    sweep_p.add_argument("--out", required=True, help="output path stem")
    sweep_p.add_argument("--format", default="csv", help="comma list of csv,json,svg")

    bounds_p = sub.add_parser("bounds", help="print the closed-form regret/availability table")
    bounds_p.add_argument("--n", required=True, help="grid size, e.g. 128 or 8x16")
    bounds_p.add_argument("--T", type=int, required=True)
    bounds_p.add_argument("--agents", type=int, default=1)
    bounds_p.add_argument("--action-scheme", dest="action_scheme", choices=SCHEMES,
                          default="dyadic")

    verify_p = sub.add_parser("verify-regret", help="Monte-Carlo check of the regret formulas")
    verify_p.add_argument("--n", default="32", help="grid size (1D)")
    verify_p.add_argument("--T", type=int, default=32)
    verify_p.add_argument("--trials", type=int, default=100000)
    verify_p.add_argument("--agents-list", default="1,2,4,8")
    verify_p.add_argument("--seed", type=int, default=0)

    actions_p = sub.add_parser("actions", help="print the action-set size per scheme")
    actions_p.add_argument("--n", required=True, help="grid size, e.g. 128 or 8x16")
    actions_p.add_argument("--action-scheme", dest="action_scheme", choices=SCHEMES,
                           default="dyadic")

    export_p = sub.add_parser("export", help="convert a JSONL trace to CSV")
    export_p.add_argument("trace", help="JSON-lines trace file")
    export_p.add_argument("--out", required=True, help="CSV output path")
    return ap


def _cmd_run(args: argparse.Namespace) -> int:
    merged = _resolve(args, _DEFAULTS)
    dims = parse_dims(merged["n"])
    shape = GridShape(dims)
    T = args.budget if args.budget is not None else 2 * shape.n
    if args.print_config:
        print(json.dumps({**merged, "budget": T}, indent=2, sort_keys=True))
    rng = np.random.default_rng(np.random.SeedSequence(entropy=merged["seed"], spawn_key=(0,)))
    actions = enumerate_actions(shape, merged["action_scheme"])
    signal = generate_signal(shape, merged["k"], rng)
    env = SearchEnvironment(shape=shape, signal=signal, noise=NoiseModel(merged["sigma2"]))
    policy = make_policy(
        merged["policy"], shape, actions, merged["sigma2"],
        g=merged["agents"], alpha=merged["alpha"], eta=merged["eta"],
        k=merged["k"], rng=rng,
    )
    trace = run_episode(
        env, policy, g=merged["agents"], T=T,
        durations=DurationModel.parse(merged["duration"]), rng=rng,
    )
    estimate = policy.recover(trace.measurements)
    recovered = full_recovery(estimate, signal)
    print(f"policy={merged['policy']} n={merged['n']} k={merged['k']} "
          f"g={merged['agents']} T={T} sigma2={merged['sigma2']}")
    print(f"events={len(trace.events)} measurements={len(trace.measurements)}")
    print(f"true support={sorted(signal.support)}")
    print(f"estimated support={sorted(estimate.support)}")
    print(f"full recovery={recovered}")
    if args.trace_out:
        write_trace_jsonl(trace, args.trace_out)
        print(f"trace written to {args.trace_out}")
    return EXIT_OK


def _cmd_sweep(args: argparse.Namespace) -> int:
    merged = _resolve(args, _DEFAULTS)
    config = _config_from(merged)
    if args.print_config:
        print(json.dumps(asdict(config), indent=2, sort_keys=True))
    curve = run_sweep(config)
    formats = tuple(f.strip() for f in args.format.split(",") if f.strip())
    paths = emit_results([curve], args.out, formats)
    for p in paths:
        print(f"wrote {p}")
    if curve.failures > FAILURE_QUOTA * config.trials:
        print(f"numerical-failure quota exceeded: {curve.failures}/{config.trials}",
              file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def _cmd_bounds(args: argparse.Namespace) -> int:
    dims = parse_dims(args.n)
    shape = GridShape(dims)
    n, g, T = shape.n, args.agents, args.T
    count = len(enumerate_actions(shape, args.action_scheme))
    print(f"n={n} T={T} g={g} scheme={args.action_scheme} |X|={count}")
    rows = [
        ("regret_single_exact (Thm 2, exact, g=1)", regret_single_exact(n, T)),
        ("bound_regret_multi  (Thm 2, upper bound)", bound_regret_multi(n, T, g)),
        ("bound_regret_1sparse (Thm 1, upper bound)", bound_regret_1sparse(n, T, count)),
    ]
    if n & (n - 1) == 0:
        rows.append(("bound_regret_block  (Thm 1, upper bound)", bound_regret_block(n, T, count)))
    rows.append((f"lemma1_bound at t=T", lemma1_bound(n, max(T, 1), g)))
    for name, val in rows:
        print(f"  {name:44s} {val:.6f}")
    return EXIT_OK


def _cmd_verify(args: argparse.Namespace) -> int:
    dims = parse_dims(args.n)
    n = int(np.prod(dims))
    T = args.T
    seed = int(os.environ.get("ACTIVE_SEARCH_SEED", args.seed))
    violations = 0
    for g in (int(v) for v in args.agents_list.split(",")):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(g,)))
        mean, se = mc_regret_game(n, T, g, args.trials, rng)
        if g == 1:
            target = regret_single_exact(n, T)
            ok = abs(mean - target) <= 3 * se
            rel = "==" if ok else "!="
            print(f"g=1 mc={mean:.4f} +- {se:.4f} {rel} exact={target:.4f} "
                  f"({'PASS' if ok else 'FAIL'})")
        else:
            target = bound_regret_multi(n, T, g)
            ok = mean <= target + 3 * se
            rel = "<=" if ok else ">"
            print(f"g={g} mc={mean:.4f} +- {se:.4f} {rel} bound={target:.4f} "
                  f"({'PASS' if ok else 'FAIL'})")
        violations += 0 if ok else 1
    return EXIT_OK if violations == 0 else EXIT_VERIFY


def _cmd_actions(args: argparse.Namespace) -> int:
    shape = GridShape(parse_dims(args.n))
    print(len(enumerate_actions(shape, args.action_scheme)))
    return EXIT_OK


def _cmd_export(args: argparse.Namespace) -> int:
    try:
        with open(args.trace, encoding="utf-8") as fh:
            events = [json.loads(line) for line in fh if line.strip()]
    except OSError as e:
        raise ConfigError(f"cannot read trace {args.trace}: {e}") from e
    try:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["type", "t", "agent", "time", "offset", "extent", "y"])
            for ev in events:
                act = ev.get("action") or {}
                w.writerow([
                    ev["type"], ev["t"], ev["agent"], repr(ev["time"]),
                    "x".join(str(v) for v in act.get("offset", [])),
                    "x".join(str(v) for v in act.get("extent", [])),
                    "" if ev.get("y") is None else repr(ev["y"]),
                ])
    except OSError as e:
        raise ConfigError(f"cannot write CSV {args.out}: {e}") from e
    print(f"wrote {args.out}")
    return EXIT_OK


_COMMANDS = {
    "run": _cmd_run,
    "sweep": _cmd_sweep,
    "bounds": _cmd_bounds,
    "verify-regret": _cmd_verify,
    "actions": _cmd_actions,
    "export": _cmd_export,
}


def parse_and_dispatch(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except ActiveSearchError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NUMERICAL


def main() -> None:
    sys.exit(parse_and_dispatch())


if __name__ == "__main__":
    main()
