"""Campaign execution: scenario presets, config-file loading, multi-seed run
grids, and CSV serialization.

Presets follow the two evaluation scenarios: "high" has 12 clients with
p_i = 0.9 - 0.05 i and requirements 0.85/0.75; "low" has 18 clients with
p_i = 1 - 0.05 i and requirements 0.5/0.35. Both use 20-slot intervals and the
quadratic cost.

Output schemas (exact):
  summary.csv      run_id, policy, epsilon, seed, client, p, q, xbar_star,
                   xbar_emp, sigma_i_emp, sigma_tot_emp, mean_rolling_loc,
                   eq2_residual, eq7_slack
  per_interval.csv run_id, policy, seed, t, total_loc, rolling_loc,
                   deficit_spread

Floats are serialized with repr() (shortest round-trip form), so identical
campaigns produce byte-identical files. A run refused for infeasible targets
contributes a single error row with client 0 and empty numeric fields.
"""

from __future__ import annotations

import csv
import io
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

from .engine import InfeasibleTargetsError, run
from .metrics import summarize
from .model import (
    ConfigError,
    CostSpec,
    ScheduleTargets,
    SystemConfig,
    compute_targets,
    parse_cost,
)
from .policies import POLICIES

DEFAULT_SEEDS = 20
DEFAULT_EPSILON = 5.0
DEFAULT_HORIZON = 10_000
DEFAULT_WINDOW = 100
DEFAULT_TAU = 20

SUMMARY_COLUMNS = (
    "run_id", "policy", "epsilon", "seed", "client", "p", "q", "xbar_star",
    "xbar_emp", "sigma_i_emp", "sigma_tot_emp", "mean_rolling_loc",
    "eq2_residual", "eq7_slack",
)
PER_INTERVAL_COLUMNS = (
    "run_id", "policy", "seed", "t", "total_loc", "rolling_loc", "deficit_spread",
)


def preset(name: str) -> SystemConfig:
    """Named evaluation scenario with the documented defaults
    (window_T=100, epsilon=5, horizon=10^4, seed=1)."""
    if name == "high":
        p = [(90 - 5 * i) / 100 for i in range(1, 13)]
        q = [0.85] * 6 + [0.75] * 6
    elif name == "low":
        p = [(100 - 5 * i) / 100 for i in range(1, 19)]
        q = [0.5] * 9 + [0.35] * 9
    else:
        raise ConfigError(f"unknown scenario {name!r} (expected 'high' or 'low')")
    return SystemConfig.from_rates(
        p, q,
        tau=DEFAULT_TAU,
        window_T=DEFAULT_WINDOW,
        epsilon=DEFAULT_EPSILON,
        cost=CostSpec(),
        horizon=DEFAULT_HORIZON,
        seed=1,
    )


_CONFIG_KEYS = ("tau", "window_T", "epsilon", "horizon", "seed", "cost", "p", "q")


def _parse_float_list(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip() != ""]


def load_config(path) -> SystemConfig:
    """Parse a flat key=value config file (UTF-8, '#' comments).

    Keys: tau, window_T, epsilon, horizon, seed, cost (quadratic | power:K),
    p (comma list), q (comma list). p and q are required; the rest default to
    tau=20, window_T=100, epsilon=5, horizon=10000, seed=1, cost=quadratic.
    """
    path = Path(path)
    values: dict[str, object] = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        try:
            if key in ("tau", "window_T", "horizon", "seed"):
                values[key] = int(val)
            elif key == "epsilon":
                values[key] = float(val)
            elif key == "cost":
                values[key] = parse_cost(val)
            else:
                values[key] = _parse_float_list(val)
        except (ValueError, ConfigError) as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}: {exc}") from exc
    for required in ("p", "q"):
        if required not in values:
            raise ConfigError(f"{path}: missing required key {required!r}")
    p, q = values.pop("p"), values.pop("q")
    if len(p) != len(q):
        raise ConfigError(f"{path}: p has {len(p)} entries but q has {len(q)}")
    values.setdefault("tau", DEFAULT_TAU)
    values.setdefault("window_T", DEFAULT_WINDOW)
    values.setdefault("epsilon", DEFAULT_EPSILON)
    values.setdefault("horizon", DEFAULT_HORIZON)
    values.setdefault("seed", 1)
    values.setdefault("cost", CostSpec())
    return SystemConfig.from_rates(p, q, **values)


@dataclass(frozen=True)
class CampaignSpec:
    """A grid of runs: every (policy, epsilon, seed) combination of the lists,
    all over the same base config."""

    config: SystemConfig
    policies: tuple[str, ...]
    seeds: tuple[int, ...]
    output_dir: Path
    epsilon_grid: tuple[float, ...] | None = None
    per_interval: bool = False
    jobs: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "policies", tuple(self.policies))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        object.__setattr__(self, "output_dir", Path(self.output_dir))
        if self.epsilon_grid is not None:
            object.__setattr__(self, "epsilon_grid", tuple(float(e) for e in self.epsilon_grid))
        if not self.policies:
            raise ConfigError("campaign needs at least one policy")
        for pol in self.policies:
            if pol not in POLICIES:
                raise ConfigError(f"unknown policy {pol!r} (known: {', '.join(POLICIES)})")
        if not self.seeds:
            raise ConfigError("campaign needs at least one seed")
        if self.epsilon_grid is not None:
            if not self.epsilon_grid:
                raise ConfigError("epsilon_grid, when given, must be nonempty")
            if any(e < 0 for e in self.epsilon_grid):
                raise ConfigError("epsilon_grid entries must be >= 0")
        if self.jobs < 1:
            raise ConfigError(f"jobs must be >= 1, got {self.jobs}")

    def run_grid(self) -> list[tuple[str, float, int]]:
        """All (policy, epsilon, seed) combinations in deterministic order."""
        eps = self.epsilon_grid if self.epsilon_grid is not None else (self.config.epsilon,)
        grid = sorted({
            (pol, float(e), int(seed))
            for pol in self.policies
            for e in eps
            for seed in self.seeds
        })
        return grid


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def run_id_for(policy: str, epsilon: float, seed: int) -> str:
    return f"{policy}-eps{epsilon:g}-seed{seed}"


def _execute_run(args) -> tuple[tuple[str, float, int], list[list], list[list] | None, str | None]:
    """One campaign cell. Returns (grid key, summary rows, per-interval rows,
    error). Top-level so process pools can pickle it."""
    config, policy, epsilon, seed, targets, want_interval = args
    cfg = replace(config, epsilon=epsilon, seed=seed)
    rid = run_id_for(policy, epsilon, seed)
    try:
        trace = run(cfg, policy, targets)
    except InfeasibleTargetsError as exc:
        row = [rid, policy, _fmt(float(epsilon)), str(seed), "0"] + [""] * 9
        return (policy, epsilon, seed), [row], None, str(exc)
    report = summarize(trace, cfg, targets)
    rows = []
    for i, client in enumerate(cfg.clients):
        rows.append([
            rid,
            policy,
            _fmt(float(epsilon)),
            str(seed),
            str(client.id),
            _fmt(client.p),
            _fmt(client.q),
            _fmt(float(targets.xbar_star[i])),
            _fmt(float(report.xbar_emp[i])),
            _fmt(float(report.sigma_i_emp[i])),
            _fmt(report.sigma_tot_emp),
            _fmt(report.mean_rolling_loc),
            _fmt(report.constraint_checks["eq2_residual"]),
            _fmt(report.constraint_checks["eq7_slack"]),
        ])
    interval_rows = None
    if want_interval:
        T = cfg.window_T
        spread = report.deficit_spread_series
        interval_rows = []
        for k in range(report.loc_series.size):
            t = T + 1 + k
            interval_rows.append([
                rid,
                policy,
                str(seed),
                str(t),
                _fmt(float(report.loc_series[k])),
                _fmt(float(report.rolling_loc[k])),
                _fmt(float(spread[t - 1])) if spread is not None else "",
            ])
    return (policy, epsilon, seed), rows, interval_rows, None


def _write_csv(path: Path, header, rows) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    path.write_text(buf.getvalue(), encoding="utf-8")


def run_campaign(spec: CampaignSpec, progress=None) -> tuple[Path, Path | None]:
    """Execute the full grid and write summary.csv (and per_interval.csv when
    requested) under spec.output_dir. Results are merged in sorted
    (policy, epsilon, seed) order regardless of execution order, so reruns of
    the same spec are byte-identical."""
    targets = compute_targets(spec.config)
    if not targets.feasible:
        print(
            f"warning: requirements infeasible "
            f"(violations={len(targets.violations)}, "
            f"targets in range: {targets.in_range})",
            file=sys.stderr,
        )
    grid = spec.run_grid()
    tasks = [
        (spec.config, pol, eps, seed, targets, spec.per_interval)
        for (pol, eps, seed) in grid
    ]
    results = {}
    if spec.jobs > 1:
        with ProcessPoolExecutor(max_workers=spec.jobs) as pool:
            for key, rows, interval_rows, error in pool.map(_execute_run, tasks):
                results[key] = (rows, interval_rows, error)
                if progress:
                    progress(key)
    else:
        for task in tasks:
            key, rows, interval_rows, error = _execute_run(task)
            results[key] = (rows, interval_rows, error)
            if progress:
                progress(key)

    spec.output_dir.mkdir(parents=True, exist_ok=True)
    summary_rows: list[list] = []
    interval_rows_all: list[list] = []
    for key in grid:
        rows, interval_rows, error = results[key]
        if error is not None:
            print(f"warning: {run_id_for(*key)} skipped: {error}", file=sys.stderr)
        summary_rows.extend(rows)
        if interval_rows:
            interval_rows_all.extend(interval_rows)
    summary_path = spec.output_dir / "summary.csv"
    _write_csv(summary_path, SUMMARY_COLUMNS, summary_rows)
    interval_path = None
    if spec.per_interval:
        interval_path = spec.output_dir / "per_interval.csv"
        _write_csv(interval_path, PER_INTERVAL_COLUMNS, interval_rows_all)
    return summary_path, interval_path
