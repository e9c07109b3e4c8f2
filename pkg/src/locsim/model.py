"""Problem model: instances, work/idle-time distributions, throughput targets,
and the Gaussian loss-of-credibility objective.

Everything here is pure computation on a problem instance; no simulation state.
Arrays handed back to callers are read-only copies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

# Floor on per-transmission success probability; deficits and shortages scale
# with 1/p, so arbitrarily small p would make them numerically meaningless.
P_MIN = 0.01

# Trapezoid grid for the Gaussian objective. The integrand is C(a*z + b) * phi(z),
# once continuously differentiable at the kink (C'(0) = 0), so this grid holds
# the quadrature error well below 1e-6 against the quadratic closed form.
QUAD_POINTS = 32769
QUAD_ZMAX = 8.0

_SLACK_TOL = 1e-9


class ConfigError(ValueError):
    """Invalid problem instance or malformed input."""


@dataclass(frozen=True)
class CostSpec:
    """Loss-of-credibility cost applied to the unbiased shortage.

    C(x) = max(x, 0) ** exponent; zero on the negative half-line, strictly
    convex with C'(0) = 0 on the positive one (exponent > 1 enforced).
    kind "quadratic" pins the exponent to 2.
    """

    kind: str = "quadratic"
    exponent: float = 2.0

    def __post_init__(self) -> None:
        if self.kind not in ("quadratic", "power"):
            raise ConfigError(f"unknown cost kind {self.kind!r}")
        if self.kind == "quadratic":
            object.__setattr__(self, "exponent", 2.0)
        elif not self.exponent > 1.0:
            raise ConfigError(f"power cost needs exponent > 1, got {self.exponent}")

    def __call__(self, x):
        clipped = np.maximum(np.asarray(x, dtype=float), 0.0)
        out = clipped ** self.exponent
        return float(out) if out.ndim == 0 else out

    def label(self) -> str:
        return "quadratic" if self.kind == "quadratic" else f"power:{self.exponent:g}"


def parse_cost(text: str) -> CostSpec:
    """Parse "quadratic" or "power:K" into a CostSpec."""
    text = text.strip()
    if text == "quadratic":
        return CostSpec()
    if text.startswith("power:"):
        try:
            exponent = float(text.split(":", 1)[1])
        except ValueError as exc:
            raise ConfigError(f"bad cost spec {text!r}") from exc
        return CostSpec("power", exponent)
    raise ConfigError(f"bad cost spec {text!r} (expected 'quadratic' or 'power:K')")


@dataclass(frozen=True)
class ClientParams:
    """One flow: 1-based id, per-transmission success probability p, and the
    fraction q of window intervals that must carry a delivery."""

    id: int
    p: float
    q: float

    def __post_init__(self) -> None:
        if self.id < 1:
            raise ConfigError(f"client ids are 1-based, got {self.id}")
        if not 0.0 < self.p <= 1.0:
            raise ConfigError(f"client {self.id}: p must be in (0, 1], got {self.p}")
        if self.p < P_MIN:
            raise ConfigError(f"client {self.id}: p={self.p} below supported floor {P_MIN}")
        if not 0.0 <= self.q <= 1.0:
            raise ConfigError(f"client {self.id}: q must be in [0, 1], got {self.q}")


@dataclass(frozen=True)
class SystemConfig:
    """A full problem instance.

    tau       slots per interval
    window_T  credibility window length, in intervals
    clients   ClientParams with ids 1..N in order
    epsilon   urgency weight of the deficit policy family
    horizon   simulated intervals (must exceed window_T)
    seed      64-bit channel seed
    """

    tau: int
    window_T: int
    clients: tuple[ClientParams, ...]
    epsilon: float = 5.0
    cost: CostSpec = CostSpec()
    horizon: int = 10_000
    seed: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "clients", tuple(self.clients))
        if not self.clients:
            raise ConfigError("need at least one client")
        ids = [c.id for c in self.clients]
        if ids != list(range(1, len(self.clients) + 1)):
            raise ConfigError(f"client ids must be 1..N in order, got {ids}")
        if self.tau < 1:
            raise ConfigError(f"tau must be >= 1, got {self.tau}")
        if self.window_T < 1:
            raise ConfigError(f"window_T must be >= 1, got {self.window_T}")
        if self.horizon <= self.window_T:
            raise ConfigError(
                f"horizon ({self.horizon}) must exceed window_T ({self.window_T})"
            )
        if self.epsilon < 0.0:
            raise ConfigError(f"epsilon must be >= 0, got {self.epsilon}")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError(f"seed must fit in 64 bits, got {self.seed}")

    @classmethod
    def from_rates(cls, p: Sequence[float], q: Sequence[float], **kwargs) -> "SystemConfig":
        if len(p) != len(q):
            raise ConfigError(f"p has {len(p)} entries but q has {len(q)}")
        clients = tuple(
            ClientParams(id=i + 1, p=float(pi), q=float(qi))
            for i, (pi, qi) in enumerate(zip(p, q))
        )
        return cls(clients=clients, **kwargs)

    @property
    def n(self) -> int:
        return len(self.clients)

    @cached_property
    def p(self) -> np.ndarray:
        arr = np.array([c.p for c in self.clients])
        arr.setflags(write=False)
        return arr

    @cached_property
    def q(self) -> np.ndarray:
        arr = np.array([c.q for c in self.clients])
        arr.setflags(write=False)
        return arr


@dataclass(frozen=True)
class WorkPmf:
    """Distribution of W_S, the slots a work-conserving server needs to clear
    every flow in subset S once. mass[w] = P(W_S = w) for w < tau; anything
    at or beyond tau is lumped into tail."""

    tau: int
    mass: np.ndarray
    tail: float


def work_pmf(subset: Iterable[int], tau: int, p: Sequence[float]) -> WorkPmf:
    """Truncated pmf of the total first-success attempt count over `subset`.

    W_S is a sum of independent geometrics with rates p[i-1], i in subset
    (1-based ids). Only mass below tau is tracked exactly.
    """
    if tau < 1:
        raise ConfigError(f"tau must be >= 1, got {tau}")
    ids = sorted({int(i) for i in subset})
    parr = np.asarray(p, dtype=float)
    if ids:
        if parr.size == 0:
            raise ConfigError("nonempty subset but empty probability vector")
        if ids[0] < 1 or ids[-1] > parr.size:
            raise ConfigError(f"subset {ids} outside 1..{parr.size}")

    mass = np.zeros(tau)
    mass[0] = 1.0
    tail = 0.0
    w = np.arange(tau)
    for i in ids:
        pi = parr[i - 1]
        if not 0.0 < pi <= 1.0:
            raise ConfigError(f"p[{i}] = {pi} outside (0, 1]")
        # Paths that cross tau during this client's geometric stay crossed.
        tail += float(mass @ (1.0 - pi) ** (tau - 1 - w))
        geo = np.concatenate(([0.0], pi * (1.0 - pi) ** np.arange(tau - 1)))
        mass = np.convolve(mass, geo)[:tau]
    mass.setflags(write=False)
    return WorkPmf(tau=tau, mass=mass, tail=tail)


def idle_time(subset: Iterable[int], tau: int, p: Sequence[float]) -> float:
    """Expected slots left idle per interval when only `subset` is served:
    I_S = E[(tau - W_S)^+]."""
    pmf = work_pmf(subset, tau, p)
    return float(pmf.mass @ (tau - np.arange(tau)))


def _xbar_star(p: np.ndarray, q: np.ndarray, tau: int, idle_full: float) -> np.ndarray:
    """Closed-form minimizer of the Gaussian objective over mean throughputs:
    every client gets its requirement plus an equal share (in 1/p units) of
    the residual capacity tau - I."""
    n = p.size
    slack = (tau - idle_full - float(np.sum(q / p))) / n
    return (q / p + slack) * p


def _subset_loads(values: np.ndarray) -> np.ndarray:
    """Subset sums of `values` over all bitmasks (index = mask)."""
    n = values.size
    out = np.zeros(1 << n)
    for m in range(1, 1 << n):
        low = (m & -m).bit_length() - 1
        out[m] = out[m & (m - 1)] + values[low]
    return out


def _idles_all_subsets(p: np.ndarray, tau: int) -> np.ndarray:
    """idle_time for every subset at once, sharing pmf work along the
    subset lattice (each mask extends mask-without-lowest-bit by one client)."""
    n = p.size
    geos = [
        np.concatenate(([0.0], p[i] * (1.0 - p[i]) ** np.arange(tau - 1)))
        for i in range(n)
    ]
    coeff = tau - np.arange(tau)
    masses: list[np.ndarray | None] = [None] * (1 << n)
    base = np.zeros(tau)
    base[0] = 1.0
    masses[0] = base
    idles = np.empty(1 << n)
    idles[0] = float(tau)
    for m in range(1, 1 << n):
        low = (m & -m).bit_length() - 1
        masses[m] = np.convolve(masses[m & (m - 1)], geos[low])[:tau]
        idles[m] = float(masses[m] @ coeff)
    return idles


def _mask_ids(mask: int) -> tuple[int, ...]:
    ids = []
    i = 1
    while mask:
        if mask & 1:
            ids.append(i)
        mask >>= 1
        i += 1
    return tuple(ids)


@dataclass(frozen=True)
class FeasibilityReport:
    """Outcome of the capacity checks.

    violations    subsets whose required load q/p exceeds capacity tau - I_S
                  (with the shortfall), making the requirements unservable
    pooling_flags proper subsets with no slack left at the optimal targets;
                  the equalized solution leans on capacity pooling there
    """

    feasible: bool
    xbar_in_range: bool
    xbar_star: np.ndarray
    idle_full: float
    violations: tuple[tuple[tuple[int, ...], float], ...]
    pooling_flags: tuple[tuple[tuple[int, ...], float], ...]
    exhaustive: bool
    checked_subsets: int


def validate_feasibility(config: SystemConfig, depth: str = "auto") -> FeasibilityReport:
    """Check every examined subset S for q-load q/p within capacity tau - I_S,
    and the closed-form targets for range and pooling slack.

    depth: "exhaustive" walks all 2^N - 1 subsets, "partial" only the full set
    plus singletons and pairs, "auto" picks exhaustive for N <= 16.
    """
    if depth not in ("auto", "exhaustive", "partial"):
        raise ConfigError(f"unknown feasibility depth {depth!r}")
    p, q, tau, n = config.p, config.q, config.tau, config.n
    exhaustive = depth == "exhaustive" or (depth == "auto" and n <= 16)

    violations: list[tuple[tuple[int, ...], float]] = []
    pooling: list[tuple[tuple[int, ...], float]] = []

    if exhaustive:
        idles = _idles_all_subsets(p, tau)
        idle_full = float(idles[(1 << n) - 1])
        xbar = _xbar_star(p, q, tau, idle_full)
        q_loads = _subset_loads(q / p)
        x_loads = _subset_loads(xbar / p)
        full = (1 << n) - 1
        for m in range(1, 1 << n):
            cap = tau - idles[m]
            q_slack = cap - q_loads[m]
            if q_slack < -_SLACK_TOL:
                violations.append((_mask_ids(m), float(q_slack)))
            if m != full:
                x_slack = cap - x_loads[m]
                if x_slack <= _SLACK_TOL:
                    pooling.append((_mask_ids(m), float(x_slack)))
        checked = (1 << n) - 1
    else:
        subsets = [tuple(range(1, n + 1))]
        subsets += [(i,) for i in range(1, n + 1)]
        subsets += [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)]
        idle_full = idle_time(subsets[0], tau, p)
        xbar = _xbar_star(p, q, tau, idle_full)
        for ids in subsets:
            sel = np.array(ids) - 1
            cap = tau - idle_time(ids, tau, p)
            q_slack = cap - float(np.sum(q[sel] / p[sel]))
            if q_slack < -_SLACK_TOL:
                violations.append((ids, float(q_slack)))
            if len(ids) < n:
                x_slack = cap - float(np.sum(xbar[sel] / p[sel]))
                if x_slack <= _SLACK_TOL:
                    pooling.append((ids, float(x_slack)))
        checked = len(subsets)

    xbar.setflags(write=False)
    in_range = bool(np.all(xbar >= -_SLACK_TOL) and np.all(xbar <= 1.0 + _SLACK_TOL))
    return FeasibilityReport(
        feasible=in_range and not violations,
        xbar_in_range=in_range,
        xbar_star=xbar,
        idle_full=idle_full,
        violations=tuple(violations),
        pooling_flags=tuple(pooling),
        exhaustive=exhaustive,
        checked_subsets=checked,
    )


@dataclass(frozen=True)
class ScheduleTargets:
    """Per-client mean throughput targets and the capacity facts behind them."""

    xbar_star: np.ndarray
    idle_full: float
    feasible: bool
    violations: tuple[tuple[tuple[int, ...], float], ...]
    report: FeasibilityReport

    @property
    def in_range(self) -> bool:
        return self.report.xbar_in_range


def compute_targets(config: SystemConfig, depth: str = "auto") -> ScheduleTargets:
    """Equalized mean-throughput targets: the unique split of serviceable
    throughput tau - I that shares slack equally across clients in 1/p units.
    By construction sum(xbar_star / p) == tau - idle_full."""
    report = validate_feasibility(config, depth)
    return ScheduleTargets(
        xbar_star=report.xbar_star,
        idle_full=report.idle_full,
        feasible=report.feasible,
        violations=report.violations,
        report=report,
    )


def predicted_loc(
    xbar: float,
    sigma: float,
    client: ClientParams,
    window_T: int,
    cost: CostSpec,
) -> float:
    """Long-run mean per-window cost under the Gaussian delivery approximation:
    E[C(a Z + b)] with a = sigma * sqrt(T) / p, b = (q - xbar) * T / p.

    Computed by trapezoid quadrature of the standard normal expectation on
    z in [-QUAD_ZMAX, QUAD_ZMAX]; degenerate sigma = 0 short-circuits to C(b).
    """
    if not 0.0 <= xbar <= 1.0:
        raise ConfigError(f"xbar must be in [0, 1], got {xbar}")
    if sigma < 0.0:
        raise ConfigError(f"sigma must be >= 0, got {sigma}")
    if window_T < 1:
        raise ConfigError(f"window_T must be >= 1, got {window_T}")
    a = sigma * math.sqrt(window_T) / client.p
    b = (client.q - xbar) * window_T / client.p
    if a == 0.0:
        return float(cost(b))
    z = np.linspace(-QUAD_ZMAX, QUAD_ZMAX, QUAD_POINTS)
    pdf = np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
    return float(np.trapezoid(cost(a * z + b) * pdf, z))


def predicted_total_loc(
    xbar: Sequence[float],
    sigma: Sequence[float],
    config: SystemConfig,
) -> float:
    """Sum of predicted_loc across clients."""
    xbar = np.asarray(xbar, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if xbar.size != config.n or sigma.size != config.n:
        raise ConfigError("xbar/sigma length must match the client count")
    return sum(
        predicted_loc(float(xbar[i]), float(sigma[i]), c, config.window_T, config.cost)
        for i, c in enumerate(config.clients)
    )
