"""Slot-level simulator with a keyed, counter-based channel.

Channel model: attempt `a` (0-based) for client `c` in interval `t` under seed
`s` succeeds iff u(s, t, c, a) < p_c, where u is a fixed 64-bit mix (a chain of
SplitMix64 finalizers over the key words) mapped to [0, 1). The draw depends
only on the key, never on scheduling decisions, so different policies under the
same seed face literally the same channel (common random numbers) and traces
are reproducible byte for byte.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .model import ConfigError, ScheduleTargets, SystemConfig, compute_targets
from .policies import DEFICIT_POLICIES, POLICIES, PolicyState, interval_order

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_INV53 = 1.0 / (1 << 53)

# Intervals per cached block of channel draws.
_CHUNK = 1024


class InfeasibleTargetsError(RuntimeError):
    """Raised when a deficit policy is asked to chase targets outside [0, 1]."""


@dataclass(frozen=True)
class ChannelKey:
    """Identity of a single transmission attempt."""

    seed: int
    client: int
    interval: int
    attempt: int


def _fmix(x: int) -> int:
    x ^= x >> 30
    x = (x * _MIX1) & _MASK
    x ^= x >> 27
    x = (x * _MIX2) & _MASK
    return x ^ (x >> 31)


def channel_uniform(key: ChannelKey) -> float:
    """Uniform [0, 1) draw for one attempt; a pure function of the key."""
    h = key.seed & _MASK
    for word in (key.interval, key.client, key.attempt):
        h = _fmix((h + word + _GAMMA) & _MASK)
    return (h >> 11) * _INV53


def channel_outcome(key: ChannelKey, p: float) -> bool:
    """Whether the attempt identified by `key` succeeds under rate p."""
    if not 0.0 < p <= 1.0:
        raise ConfigError(f"p must be in (0, 1], got {p}")
    return channel_uniform(key) < p


def _fmix_u64(x: np.ndarray) -> np.ndarray:
    x = x ^ (x >> np.uint64(30))
    x = x * np.uint64(_MIX1)
    x = x ^ (x >> np.uint64(27))
    x = x * np.uint64(_MIX2)
    return x ^ (x >> np.uint64(31))


def _uniform_lattice(seed: int, t0: int, count: int, n: int, tau: int) -> np.ndarray:
    """channel_uniform evaluated on intervals t0..t0+count-1, clients 1..n,
    attempts 0..tau-1, as a (count, n, tau) array. Bit-identical to the scalar
    path (uint64 arithmetic wraps mod 2^64 either way)."""
    t = np.arange(t0, t0 + count, dtype=np.uint64).reshape(-1, 1, 1)
    c = np.arange(1, n + 1, dtype=np.uint64).reshape(1, -1, 1)
    a = np.arange(tau, dtype=np.uint64).reshape(1, 1, -1)
    g = np.uint64(_GAMMA)
    h = _fmix_u64(np.uint64(seed & _MASK) + t + g)
    h = _fmix_u64(h + c + g)
    h = _fmix_u64(h + a + g)
    return (h >> np.uint64(11)).astype(np.float64) * _INV53


def _first_success(seed: int, t0: int, count: int, p: np.ndarray, tau: int) -> np.ndarray:
    """Attempts needed for the first success in each (interval, client) cell,
    1-based; tau + 1 means no success within tau dedicated slots."""
    u = _uniform_lattice(seed, t0, count, p.size, tau)
    hit = u < p.reshape(1, -1, 1)
    first = hit.argmax(axis=2)
    state = np.where(hit.any(axis=2), first + 1, tau + 1)
    return state.astype(np.int64)


@lru_cache(maxsize=8)
def _first_success_chunk(seed: int, chunk: int, p_key: tuple, tau: int) -> np.ndarray:
    arr = _first_success(seed, chunk * _CHUNK + 1, _CHUNK, np.array(p_key), tau)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class IntervalRecord:
    """Outcome of one interval: who got through, attempt counts, and the
    priority order the slots followed."""

    t: int
    delivered: tuple[bool, ...]
    attempts: tuple[int, ...]
    order: tuple[int, ...]


def _advance_interval(
    config: SystemConfig,
    targets: ScheduleTargets,
    state: PolicyState,
    t: int,
    needed: list[int],
) -> tuple[IntervalRecord, PolicyState]:
    order = interval_order(state, targets, t)
    n = config.n
    attempts = [0] * n
    delivered = [False] * n
    slots_left = config.tau
    for cid in order:
        if slots_left == 0:
            break
        k = needed[cid - 1]
        if k <= slots_left:
            attempts[cid - 1] = k
            delivered[cid - 1] = True
            slots_left -= k
        else:
            # Client burns the rest of the interval without getting through.
            attempts[cid - 1] = slots_left
            slots_left = 0
    record = IntervalRecord(
        t=t, delivered=tuple(delivered), attempts=tuple(attempts), order=order
    )
    state.advance(np.array(delivered), targets)
    return record, state


def step_interval(
    config: SystemConfig,
    targets: ScheduleTargets,
    policy_state: PolicyState,
    t: int,
    seed: int | None = None,
) -> tuple[IntervalRecord, PolicyState]:
    """Simulate interval t: freeze the priority order, serve clients in order
    (one keeps the channel until delivered), stop at tau slots. Returns the
    record and the advanced state."""
    if t < 1:
        raise ConfigError(f"intervals are 1-based, got {t}")
    if t != policy_state.t:
        raise ConfigError(f"state is at interval {policy_state.t}, asked to step {t}")
    s = config.seed if seed is None else seed
    chunk = _first_success_chunk(s, (t - 1) // _CHUNK, tuple(config.p), config.tau)
    return _advance_interval(config, targets, policy_state, t, chunk[(t - 1) % _CHUNK].tolist())


@dataclass
class Trace:
    """Complete record of one run. Row t-1 of each per-interval array covers
    interval t; deficits (deficit policies only) has horizon + 1 rows, row t
    being the state at the start of interval t + 1."""

    policy: str
    config: SystemConfig
    targets: ScheduleTargets
    delivered: np.ndarray
    attempts: np.ndarray
    order: np.ndarray
    deficits: np.ndarray | None

    @property
    def horizon(self) -> int:
        return self.delivered.shape[0]

    def cum_deliveries(self) -> np.ndarray:
        """X_i(t) after interval t, per row."""
        return np.cumsum(self.delivered, axis=0, dtype=np.int64)

    def slot_schedule(self, t: int) -> tuple[int, ...]:
        """Per-slot client ids for interval t (0 marks an idle slot)."""
        if not 1 <= t <= self.horizon:
            raise ConfigError(f"interval {t} outside 1..{self.horizon}")
        row = t - 1
        slots: list[int] = []
        for cid in self.order[row]:
            slots.extend([int(cid)] * int(self.attempts[row][cid - 1]))
        slots.extend([0] * (self.config.tau - len(slots)))
        return tuple(slots)

    def digest(self) -> str:
        """SHA-256 over the run identity and every per-interval array."""
        h = hashlib.sha256()
        meta = (
            f"{self.policy}|{self.config.seed}|{self.config.tau}|"
            f"{self.config.horizon}|{self.config.n}|{self.config.epsilon!r}"
        )
        h.update(meta.encode())
        for arr in (self.delivered, self.attempts, self.order):
            h.update(np.ascontiguousarray(arr).tobytes())
        if self.deficits is not None:
            h.update(np.ascontiguousarray(self.deficits).tobytes())
        return h.hexdigest()


def run(config: SystemConfig, policy: str, targets: ScheduleTargets | None = None) -> Trace:
    """Simulate `policy` for config.horizon intervals.

    Deficit policies are refused (InfeasibleTargetsError) when any closed-form
    target lies outside [0, 1]: their deficits would chase throughputs no
    schedule can produce.
    """
    if policy not in POLICIES:
        raise ConfigError(f"unknown policy {policy!r} (known: {', '.join(POLICIES)})")
    if targets is None:
        targets = compute_targets(config)
    tracks_deficit = policy in DEFICIT_POLICIES
    if tracks_deficit and not targets.in_range:
        bad = {
            i + 1: float(x)
            for i, x in enumerate(targets.xbar_star)
            if not 0.0 <= x <= 1.0
        }
        raise InfeasibleTargetsError(
            f"policy {policy!r} needs targets in [0, 1]; out of range: {bad}"
        )

    horizon, n, tau = config.horizon, config.n, config.tau
    state = PolicyState.initial(policy, config)
    delivered = np.zeros((horizon, n), dtype=bool)
    attempts = np.zeros((horizon, n), dtype=np.int16)
    order_mat = np.zeros((horizon, n), dtype=np.int16)
    deficits = np.zeros((horizon + 1, n)) if tracks_deficit else None

    p_key = tuple(config.p)
    chunk: np.ndarray | None = None
    chunk_rows: list[list[int]] = []
    for t in range(1, horizon + 1):
        row = (t - 1) % _CHUNK
        if row == 0:
            chunk = _first_success_chunk(config.seed, (t - 1) // _CHUNK, p_key, tau)
            chunk_rows = chunk.tolist()
        record, state = _advance_interval(config, targets, state, t, chunk_rows[row])
        delivered[t - 1] = record.delivered
        attempts[t - 1] = record.attempts
        order_mat[t - 1] = record.order
        if deficits is not None:
            deficits[t] = state.deficit.d

    if deficits is not None:
        deficits.setflags(write=False)
    for arr in (delivered, attempts, order_mat):
        arr.setflags(write=False)
    return Trace(
        policy=policy,
        config=config,
        targets=targets,
        delivered=delivered,
        attempts=attempts,
        order=order_mat,
        deficits=deficits,
    )
