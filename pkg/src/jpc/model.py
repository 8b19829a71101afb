"""Core data model: system configuration, request statistics, buffer updates.

Items are 0-based internally. JSON and CSV formats use 1-based item
indices; the conversion happens only at those boundaries.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Union

import numpy as np

from .errors import (
    CapacityViolation,
    DuplicatePush,
    InvalidProfile,
    InvalidRemoval,
)

NEVER = -1
"""Request-slot sentinel for an item that is never requested."""

BufferState = frozenset
EMPTY: frozenset = frozenset()

SeedLike = Union[int, np.random.SeedSequence]

_ROW_SUM_TOL = 1e-12


@dataclass(frozen=True)
class SystemConfig:
    """Catalog size ``L``, buffer size ``N`` and horizon ``K`` (slots)."""

    catalog_size: int
    buffer_size: int
    horizon: int

    def __post_init__(self):
        for name in ("catalog_size", "buffer_size", "horizon"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
            object.__setattr__(self, name, int(value))


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class RequestProfile:
    """Per-item, per-slot request probabilities plus the never-requested mass.

    ``q[i, k]`` is the probability that item ``i`` is requested in slot ``k``
    and ``q_never[i]`` the probability that it is never requested.
    """

    q: np.ndarray
    q_never: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.q, dtype=np.float64)
        q_never = np.asarray(self.q_never, dtype=np.float64)
        if q.ndim != 2 or q.shape[0] < 1 or q.shape[1] < 1:
            raise InvalidProfile(f"q must be a non-empty L x K matrix, got shape {q.shape}")
        if q_never.shape != (q.shape[0],):
            raise InvalidProfile(
                f"q_never must have length {q.shape[0]}, got shape {q_never.shape}"
            )
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(q_never))):
            raise InvalidProfile("probabilities must be finite")
        if np.any(q < 0) or np.any(q_never < 0):
            raise InvalidProfile("probabilities must be nonnegative")
        totals = q.sum(axis=1) + q_never
        bad = np.flatnonzero(np.abs(totals - 1.0) > _ROW_SUM_TOL)
        if bad.size:
            i = int(bad[0])
            raise InvalidProfile(
                f"row {i + 1} sums to {totals[i]!r}, expected 1"
            )
        object.__setattr__(self, "q", _frozen(q))
        object.__setattr__(self, "q_never", _frozen(q_never))

    @classmethod
    def uniform_iid(cls, catalog_size: int, horizon: int) -> "RequestProfile":
        """Every item requested uniformly over the horizon, never-mass zero."""
        q = np.full((catalog_size, horizon), 1.0 / horizon)
        return cls(q, np.zeros(catalog_size))

    @classmethod
    def iid(cls, per_slot: Iterable[float], catalog_size: int) -> "RequestProfile":
        q_k = np.asarray(list(per_slot), dtype=np.float64)
        never = max(0.0, 1.0 - float(q_k.sum()))
        return cls(np.tile(q_k, (catalog_size, 1)), np.full(catalog_size, never))

    @property
    def catalog_size(self) -> int:
        return self.q.shape[0]

    @property
    def horizon(self) -> int:
        return self.q.shape[1]

    @property
    def is_iid(self) -> bool:
        return bool(np.all(self.q == self.q[0]) and np.all(self.q_never == self.q_never[0]))

    def check(self, config: SystemConfig) -> None:
        if self.q.shape != (config.catalog_size, config.horizon):
            raise InvalidProfile(
                f"profile is {self.q.shape[0]} x {self.q.shape[1]}, config needs "
                f"{config.catalog_size} x {config.horizon}"
            )

    def to_json(self) -> dict:
        return {
            "L": self.catalog_size,
            "K": self.horizon,
            "q": self.q.tolist(),
            "q_never": self.q_never.tolist(),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "RequestProfile":
        try:
            L, K = int(doc["L"]), int(doc["K"])
            q = np.asarray(doc["q"], dtype=np.float64)
            q_never = np.asarray(doc.get("q_never", np.zeros(L)), dtype=np.float64)
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidProfile(f"malformed profile document: {exc}") from exc
        if q.shape != (L, K):
            raise InvalidProfile(f"q has shape {q.shape}, header says ({L}, {K})")
        return cls(q, q_never)

    def save(self, path: Union[str, Path]) -> None:
        Path(path).write_text(json.dumps(self.to_json()) + "\n")

    @classmethod
    def load(cls, path: Union[str, Path]) -> "RequestProfile":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


@dataclass(frozen=True, eq=False)
class RequestRealization:
    """Realized request slot per item, ``NEVER`` for items never requested."""

    request_slot: np.ndarray

    def __post_init__(self):
        slots = np.array(self.request_slot, dtype=np.int64, copy=True)
        if slots.ndim != 1:
            raise ValueError("request_slot must be a vector")
        if np.any(slots < NEVER):
            raise ValueError("request slots must be >= 0 or NEVER")
        slots.setflags(write=False)
        object.__setattr__(self, "request_slot", slots)

    @classmethod
    def from_slots(cls, slots: Iterable[Optional[int]]) -> "RequestRealization":
        """Build from a sequence where ``None`` marks a never-requested item."""
        return cls(np.array([NEVER if s is None else s for s in slots], dtype=np.int64))

    @property
    def catalog_size(self) -> int:
        return self.request_slot.shape[0]

    def check(self, config: SystemConfig) -> None:
        if self.catalog_size != config.catalog_size:
            raise ValueError(
                f"realization has {self.catalog_size} items, config has {config.catalog_size}"
            )
        if np.any(self.request_slot >= config.horizon):
            raise ValueError("a request slot lies beyond the horizon")

    def __eq__(self, other):
        if not isinstance(other, RequestRealization):
            return NotImplemented
        return np.array_equal(self.request_slot, other.request_slot)

    def __hash__(self):
        return hash(self.request_slot.tobytes())


@dataclass
class SimTrace:
    """Per-slot record of one policy run on one realization."""

    state_before: list = field(default_factory=list)
    pushed: list = field(default_factory=list)
    removed: list = field(default_factory=list)
    requested: list = field(default_factory=list)
    hits: list = field(default_factory=list)

    def record(self, state, pushed, removed, requested, hits):
        self.state_before.append(state)
        self.pushed.append(pushed)
        self.removed.append(removed)
        self.requested.append(requested)
        self.hits.append(hits)

    @property
    def total_hits(self) -> int:
        return int(sum(self.hits))

    def __len__(self):
        return len(self.state_before)


def step_buffer(state, push, remove, config: SystemConfig) -> frozenset:
    """Apply one slot's push and end-of-slot removals to the buffer.

    The pushed item lands at the end of the slot, together with the
    removals, so it may itself be removed (it was requested while in flight).
    """
    state = frozenset(state)
    remove = frozenset(remove)
    incoming = state if push is None else state | {push}
    if not remove <= incoming:
        raise InvalidRemoval(f"cannot remove {sorted(remove - incoming)}: not cached")
    if push is not None and push in state and push not in remove:
        raise DuplicatePush(f"item {push} is already cached")
    result = incoming - remove
    if len(result) > config.buffer_size:
        raise CapacityViolation(
            f"buffer would hold {len(result)} items, capacity is {config.buffer_size}"
        )
    return result


def requested_in_slot(realization: RequestRealization, k: int) -> frozenset:
    return frozenset(np.flatnonzero(realization.request_slot == k).tolist())


def count_hits(state, requested) -> int:
    return len(frozenset(state) & frozenset(requested))


def occupancy_step(s: int, m: int, N: int) -> int:
    """Cached-item count after a slot with ``m`` requests and one push."""
    return min(max(s - m, 0) + 1, N)


def _slot_cdf(profile: RequestProfile) -> np.ndarray:
    # Columns 0..K-1 are slots, column K is NEVER. The last category with
    # positive mass is pinned to +inf so rounding can never land beyond it.
    probs = np.concatenate([profile.q, profile.q_never[:, None]], axis=1)
    cdf = np.cumsum(probs, axis=1)
    last = probs.shape[1] - 1 - np.argmax(probs[:, ::-1] > 0, axis=1)
    cdf[np.arange(cdf.shape[0]), last] = np.inf
    return cdf


def _draw(cdf: np.ndarray, u: np.ndarray, horizon: int) -> np.ndarray:
    slots = np.sum(cdf <= u[..., None], axis=-1).astype(np.int64)
    slots[slots >= horizon] = NEVER
    return slots


def sample_realization(profile: RequestProfile, seed: SeedLike) -> RequestRealization:
    """Draw each item's request slot independently from its categorical row."""
    rng = np.random.default_rng(seed)
    u = rng.random(profile.catalog_size)
    return RequestRealization(_draw(_slot_cdf(profile), u, profile.horizon))


def trial_seed(base_seed: int, trial: int) -> np.random.SeedSequence:
    """Counter-based per-trial seed; independent of how trials are scheduled."""
    return np.random.SeedSequence(entropy=int(base_seed), spawn_key=(int(trial),))


def sample_realizations(
    profile: RequestProfile, base_seed: int, start: int, stop: int
) -> np.ndarray:
    """Request slots for trials ``start..stop-1`` as a ``(trials, L)`` array.

    Row ``t`` equals ``sample_realization(profile, trial_seed(base_seed, start + t))``.
    """
    cdf = _slot_cdf(profile)
    u = np.empty((stop - start, profile.catalog_size))
    for row, trial in enumerate(range(start, stop)):
        u[row] = np.random.default_rng(trial_seed(base_seed, trial)).random(
            profile.catalog_size
        )
    return _draw(cdf[None, :, :], u, profile.horizon)
