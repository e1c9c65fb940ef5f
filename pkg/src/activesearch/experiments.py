"""Seeded trial sweeps producing full-recovery curves, with CSV/JSON/SVG export.

One trial draws a fresh signal, runs a single episode of length max(T grid),
and evaluates full recovery at every grid point as the episode passes it (the
policies are online, so prefixes of one long run are distributionally identical
to shorter runs).  Trials are independent work items reduced in trial order,
so serial and parallel execution emit byte-identical files.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, asdict

import numpy as np

from .actions import SCHEMES, enumerate_actions
from .errors import ConfigError, NumericalError
from .grid import GridShape, MeasurementSet, NoiseModel, SparseSignal, generate_signal
from .policies import POLICY_NAMES, make_policy
from .sim import DurationModel, SearchEnvironment, run_episode

CSV_HEADER = ["policy", "n_dims", "k", "sigma2", "agents", "T", "trials",
              "mean_recovery", "std_error", "seed"]


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one sweep needs; validated on construction."""

    dims: tuple[int, ...]
    k: int
    sigma2: float
    policy: str
    t_grid: tuple[int, ...]
    g: int = 1
    alpha: float = 1.0
    eta: float = 1.0
    trials: int = 50
    seed: int = 0
    action_scheme: str = "dyadic"
    duration: str = "det"
    jobs: int = 1

    def __post_init__(self):
        if self.policy not in POLICY_NAMES:
            raise ConfigError(f"unknown policy {self.policy!r}; expected one of {POLICY_NAMES}")
        if self.action_scheme not in SCHEMES:
            raise ConfigError(f"unknown action scheme {self.action_scheme!r}")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if len(self.t_grid) == 0 or any(t < 1 for t in self.t_grid):
            raise ConfigError("T grid must contain positive measurement counts")
        if list(self.t_grid) != sorted(set(self.t_grid)):
            raise ConfigError("T grid must be strictly increasing")
        if self.g < 1:
            raise ConfigError("agents must be >= 1")
        if self.k < 1 or self.k > int(np.prod(self.dims)):
            raise ConfigError(f"k={self.k} outside [1, n]")
        if self.sigma2 < 0:
            raise ConfigError("sigma2 must be >= 0")
        try:
            GridShape(self.dims)
            DurationModel.parse(self.duration)
        except Exception as e:  # re-tag shape/duration parse errors as config errors
            raise ConfigError(str(e)) from e

    @property
    def shape(self) -> GridShape:
        return GridShape(self.dims)

    def dims_label(self) -> str:
        return "x".join(str(d) for d in self.dims)


@dataclass
class RecoveryCurve:
    """Mean +- binomial standard error of full recovery per measurement budget."""

    policy: str
    t_values: tuple[int, ...]
    mean: np.ndarray
    std_error: np.ndarray
    trials: int
    failures: int = 0
    config: ExperimentConfig | None = None

    def t50(self) -> float:
        """First budget where the mean curve crosses 0.5 (linear interpolation)."""
        for i, m in enumerate(self.mean):
            if m >= 0.5:
                if i == 0 or self.mean[i - 1] >= 0.5:
                    return float(self.t_values[i])
                t0, t1 = self.t_values[i - 1], self.t_values[i]
                m0, m1 = self.mean[i - 1], self.mean[i]
                return float(t0 + (0.5 - m0) * (t1 - t0) / (m1 - m0))
        return math.inf


def full_recovery(estimate: SparseSignal, truth: SparseSignal) -> bool:
    """True iff the estimated support equals the true support exactly."""
    if estimate.values.shape != truth.values.shape:
        raise ConfigError("estimate and truth have different grid sizes")
    return estimate.support == truth.support


def _run_trial(config: ExperimentConfig, trial: int) -> list[bool]:
    """One seeded trial; returns recovery at each grid T."""
    rng = np.random.default_rng(np.random.SeedSequence(entropy=config.seed, spawn_key=(trial,)))
    shape = config.shape
    actions = enumerate_actions(shape, config.action_scheme)
    signal = generate_signal(shape, config.k, rng)
    env = SearchEnvironment(shape=shape, signal=signal, noise=NoiseModel(config.sigma2))
    policy = make_policy(
        config.policy, shape, actions, config.sigma2,
        g=config.g, alpha=config.alpha, eta=config.eta, k=config.k, rng=rng,
    )
    grid = set(config.t_grid)
    hits: dict[int, bool] = {}

    def checkpoint(count: int, visible: MeasurementSet, pol) -> None:
        if count in grid:
            hits[count] = full_recovery(pol.recover(visible), signal)

    run_episode(
        env, policy, g=config.g, T=max(config.t_grid),
        durations=DurationModel.parse(config.duration), rng=rng, on_complete=checkpoint,
    )
    return [hits[t] for t in config.t_grid]


def run_sweep(config: ExperimentConfig, jobs: int | None = None) -> RecoveryCurve:
    """Seeded trials -> mean/SE recovery per T.  Failed trials are excluded loudly."""
    jobs = config.jobs if jobs is None else jobs
    results: list[list[bool] | None] = [None] * config.trials
    failures = 0
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_run_trial, config, i) for i in range(config.trials)]
            for i, fut in enumerate(futures):
                try:
                    results[i] = fut.result()
                except (NumericalError, np.linalg.LinAlgError) as e:
                    warnings.warn(f"trial {i} failed numerically: {e}")
                    failures += 1
    else:
        for i in range(config.trials):
            try:
                results[i] = _run_trial(config, i)
            except (NumericalError, np.linalg.LinAlgError) as e:
                warnings.warn(f"trial {i} failed numerically: {e}")
                failures += 1
    ok = [r for r in results if r is not None]
    if not ok:
        raise NumericalError("every trial failed numerically")
    mat = np.array(ok, dtype=float)
    mean = mat.mean(axis=0)
    n_eff = mat.shape[0]
    se = np.sqrt(mean * (1.0 - mean) / n_eff)
    return RecoveryCurve(
        policy=config.policy, t_values=config.t_grid, mean=mean, std_error=se,
        trials=n_eff, failures=failures, config=config,
    )


def emit_results(
    curves: list[RecoveryCurve],
    path: str,
    formats: tuple[str, ...] = ("csv",),
) -> list[str]:
    """Persist curves: CSV rows per (policy, T); JSON mirror with configs; SVG bands.

    `path` is the stem; each format appends its extension.  Returns the paths
    written.  Float cells use repr so a round-trip parse is exact.
    """
    written = []
    for fmt in formats:
        if fmt == "csv":
            out = path if path.endswith(".csv") else path + ".csv"
            try:
                with open(out, "w", newline="", encoding="utf-8") as fh:
                    w = csv.writer(fh)
                    w.writerow(CSV_HEADER)
                    for c in curves:
                        cfg = c.config
                        for i, t in enumerate(c.t_values):
                            w.writerow([
                                c.policy, cfg.dims_label(), cfg.k, repr(cfg.sigma2), cfg.g,
                                t, c.trials, repr(float(c.mean[i])),
                                repr(float(c.std_error[i])), cfg.seed,
                            ])
            except OSError as e:
                raise ConfigError(f"cannot write CSV to {out}: {e}") from e
        elif fmt == "json":
            out = path if path.endswith(".json") else path + ".json"
            payload = []
            for c in curves:
                payload.append({
                    "config": asdict(c.config),
                    "policy": c.policy,
                    "trials": c.trials,
                    "failures": c.failures,
                    "points": [
                        {"T": int(t), "mean_recovery": float(c.mean[i]),
                         "std_error": float(c.std_error[i])}
                        for i, t in enumerate(c.t_values)
                    ],
                })
            try:
                with open(out, "w", encoding="utf-8") as fh:
                    json.dump(payload, fh, indent=2, sort_keys=True)
                    fh.write("\n")
            except OSError as e:
                raise ConfigError(f"cannot write JSON to {out}: {e}") from e
        elif fmt == "svg":
            out = path if path.endswith(".svg") else path + ".svg"
            _plot_curves(curves, out)
        else:
            raise ConfigError(f"unknown output format {fmt!r}")
        written.append(out)
    return written


def _plot_curves(curves: list[RecoveryCurve], out: str) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    for c in curves:
        t = np.array(c.t_values, dtype=float)
        label = f"{c.policy}-g{c.config.g}" if c.config else c.policy
        ax.plot(t, c.mean, marker="o", label=label)
        ax.fill_between(t, c.mean - c.std_error, c.mean + c.std_error, alpha=0.25)
    ax.set_xlabel("measurements T")
    ax.set_ylabel("full recovery rate")
    ax.set_ylim(-0.02, 1.02)
    ax.legend()
    fig.tight_layout()
    try:
        fig.savefig(out, format="svg", metadata={"Date": None})
    except OSError as e:
        raise ConfigError(f"cannot write SVG to {out}: {e}") from e
    finally:
        plt.close(fig)


def parse_results(path: str) -> list[dict]:
    """Read back an emitted CSV with exact float round-trip."""
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            rows.append({
                "policy": row["policy"],
                "n_dims": row["n_dims"],
                "k": int(row["k"]),
                "sigma2": float(row["sigma2"]),
                "agents": int(row["agents"]),
                "T": int(row["T"]),
                "trials": int(row["trials"]),
                "mean_recovery": float(row["mean_recovery"]),
                "std_error": float(row["std_error"]),
                "seed": int(row["seed"]),
            })
    return rows
