"""Interval-start scheduling policies: priority keys, orders, and the deficit
bookkeeping they share.

A policy fixes one priority order per interval (keys frozen at interval start);
the slot engine then serves clients in that order until delivery or slot
exhaustion. All orders break ties by ascending client id.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ClientParams, ConfigError, ScheduleTargets, SystemConfig

MDVF = "mdvf"
LDF = "ldf"
MW_AOI = "mw-aoi"
MAX_DEFICIT = "max-deficit"
POLICIES = (MDVF, LDF, MW_AOI, MAX_DEFICIT)

# Policies that track virtual deficits against the throughput targets.
DEFICIT_POLICIES = (MDVF, MAX_DEFICIT)

DEFAULT_AOI_WEIGHT = 1.0


@dataclass
class DeficitState:
    """Virtual deficits at the start of interval t:
    d[i] = (xbar_star[i] * (t - 1) - X_i(t)) / p[i], in expected-transmission
    units, where X_i counts deliveries in intervals 1..t-1."""

    d: np.ndarray
    t: int = 1

    def mean(self) -> float:
        return float(self.d.mean())

    def spread(self) -> float:
        return float(self.d.max() - self.d.min())


def update_deficits(
    deficit: DeficitState,
    delivered,
    targets: ScheduleTargets,
    p,
) -> DeficitState:
    """Advance deficits by one interval: d += (xbar_star - delivered) / p."""
    hit = np.asarray(delivered, dtype=float)
    parr = np.asarray(p, dtype=float)
    if hit.shape != deficit.d.shape or parr.shape != deficit.d.shape:
        raise ConfigError("delivered/p length must match the deficit vector")
    return DeficitState(d=deficit.d + (targets.xbar_star - hit) / parr, t=deficit.t + 1)


def mdvf_key(client: ClientParams, deficit: DeficitState, epsilon: float) -> float:
    """Smallest key is served first: urgency epsilon / p minus the deficit."""
    return epsilon / client.p - float(deficit.d[client.id - 1])


def max_deficit_key(client_id: int, deficit: DeficitState) -> float:
    """Largest deficit first."""
    return float(deficit.d[client_id - 1])


def ldf_key(client: ClientParams, t: int, deliveries: int) -> float:
    """Largest cumulative delivery debt q * t - X_i(t) first."""
    return client.q * t - deliveries


def mwaoi_key(client: ClientParams, aoi: int, debt: float, weight: float) -> float:
    """Max-weight age-of-information key, largest first: expected drift of
    aoi^2/2 plus `weight` times the positive part of the delivery debt."""
    return client.p * (aoi * (aoi + 2) / 2.0 + weight * debt)


@dataclass
class PolicyState:
    """Everything a policy carries between intervals. Only the fields the
    policy uses are populated: deficits for the deficit family, cumulative
    deliveries X (ldf, mw-aoi) and ages h (mw-aoi) for the baselines."""

    policy_id: str
    t: int
    p: np.ndarray
    q: np.ndarray
    epsilon: float
    deficit: DeficitState | None = None
    X: np.ndarray | None = None
    h: np.ndarray | None = None
    V: float = DEFAULT_AOI_WEIGHT

    @classmethod
    def initial(cls, policy_id: str, config: SystemConfig) -> "PolicyState":
        if policy_id not in POLICIES:
            raise ConfigError(f"unknown policy {policy_id!r} (known: {', '.join(POLICIES)})")
        n = config.n
        state = cls(policy_id=policy_id, t=1, p=config.p, q=config.q, epsilon=config.epsilon)
        if policy_id in DEFICIT_POLICIES:
            state.deficit = DeficitState(d=np.zeros(n), t=1)
        else:
            state.X = np.zeros(n, dtype=np.int64)
            if policy_id == MW_AOI:
                state.h = np.ones(n, dtype=np.int64)
        return state

    def advance(self, delivered: np.ndarray, targets: ScheduleTargets) -> "PolicyState":
        """Fold one interval's delivery vector into the state."""
        if self.deficit is not None:
            self.deficit = update_deficits(self.deficit, delivered, targets, self.p)
        if self.X is not None:
            self.X = self.X + delivered.astype(np.int64)
        if self.h is not None:
            self.h = np.where(delivered, 1, self.h + 1)
        self.t += 1
        return self


def interval_order(state: PolicyState, targets: ScheduleTargets, t: int) -> tuple[int, ...]:
    """Priority order (highest first) for interval t, as 1-based client ids.

    Keys are computed from state as of the interval start and stay frozen for
    the whole interval. Ties break toward the lower client id.
    """
    pid = state.policy_id
    if pid == MDVF:
        keys = state.epsilon / state.p - state.deficit.d
    elif pid == MAX_DEFICIT:
        keys = -state.deficit.d
    elif pid == LDF:
        keys = -(state.q * t - state.X)
    elif pid == MW_AOI:
        debt = np.maximum(state.q * t - state.X, 0.0)
        keys = -(state.p * (state.h * (state.h + 2) / 2.0 + state.V * debt))
    else:
        raise ConfigError(f"unknown policy {pid!r}")
    order = np.lexsort((np.arange(keys.size), keys))
    return tuple(int(i) + 1 for i in order)


def select_next(order: tuple[int, ...], pending) -> int | None:
    """First client in priority order still waiting for its delivery."""
    for cid in order:
        if cid in pending:
            return cid
    return None
