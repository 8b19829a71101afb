"""Causal-feedback policy: re-plan every slot after learning which items were read.

At slot ``k`` the sender knows every request made before ``k``. Requested
items are outdated and excluded from all future buffer states; the remaining
request mass of each item is renormalised over the slots still ahead and the
trellis is re-solved from the current (post-removal) buffer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (
    RequestProfile,
    RequestRealization,
    SimTrace,
    SystemConfig,
    count_hits,
    requested_in_slot,
    step_buffer,
)
from .trellis import DEFAULT_STATE_BUDGET, TrellisProblem, solve_local


def conditional_weights(profile: RequestProfile, k: int) -> np.ndarray:
    """``q[i, j] / sum_{l>k} q[i, l]`` for ``j > k``, zero elsewhere.

    Items with no request mass left after slot ``k`` get weight zero.
    """
    q = profile.q
    # tail[:, j] = sum_{l >= j} q[:, l]
    tail = np.cumsum(q[:, ::-1], axis=1)[:, ::-1]
    w = np.zeros_like(q)
    if k + 1 >= q.shape[1]:
        return w
    denom = tail[:, k + 1]
    live = denom > 0
    w[live, k + 1 :] = q[live, k + 1 :] / denom[live, None]
    return w


def conditional_weight(profile: RequestProfile, i: int, j: int, k: int) -> float:
    if not k + 1 <= j <= profile.horizon - 1:
        raise ValueError(f"slot {j} is not after slot {k} within the horizon")
    return float(conditional_weights(profile, k)[i, j])


def feedback_width(L: int) -> int:
    """Bits per item index in a feedback message: ``ceil(log2 L)``, at least 1."""
    return max(1, (L - 1).bit_length())


def encode_feedback(requested, L: int) -> tuple:
    """Pack the indices read in one slot as fixed-width big-endian fields.

    Returns ``(payload, n_bits)``. A slot can report at most ``L`` items, so
    ``n_bits <= L * ceil(log2 L)`` whenever ``L >= 2``.
    """
    width = feedback_width(L)
    value = 0
    for i in sorted(requested):
        if not 0 <= i < L:
            raise ValueError(f"item {i} outside the catalog of {L}")
        value = (value << width) | i
    n_bits = width * len(requested)
    return value.to_bytes((n_bits + 7) // 8, "big"), n_bits


def decode_feedback(payload: bytes, n_bits: int, L: int) -> frozenset:
    width = feedback_width(L)
    if n_bits % width:
        raise ValueError(f"{n_bits} bits is not a whole number of {width}-bit fields")
    value = int.from_bytes(payload, "big")
    mask = (1 << width) - 1
    return frozenset((value >> (width * p)) & mask for p in range(n_bits // width))


@dataclass(frozen=True)
class CausalState:
    """What the sender knows at the start of slot ``slot``."""

    slot: int
    buffer_sharp: frozenset
    outdated: frozenset

    def __post_init__(self):
        object.__setattr__(self, "buffer_sharp", frozenset(self.buffer_sharp))
        object.__setattr__(self, "outdated", frozenset(self.outdated))
        if self.buffer_sharp & self.outdated:
            raise ValueError("buffer holds outdated items")

    def conditional_weights(self, profile: RequestProfile) -> np.ndarray:
        return conditional_weights(profile, self.slot)


def _problem(causal: CausalState, profile: RequestProfile, config: SystemConfig):
    return TrellisProblem(
        conditional_weights(profile, causal.slot),
        config.buffer_size,
        start_state=causal.buffer_sharp,
        start_slot=causal.slot,
        forbidden=causal.outdated,
    )


def replan(
    causal: CausalState,
    profile: RequestProfile,
    config: SystemConfig,
    state_budget: int = DEFAULT_STATE_BUDGET,
) -> frozenset:
    """Target buffer state for the next slot, solved from scratch.

    In the last slot there is nothing left to plan for and the buffer is
    kept as is.
    """
    profile.check(config)
    if causal.slot >= config.horizon - 1:
        return causal.buffer_sharp
    problem = _problem(causal, profile, config)
    rows, _ = solve_local(problem, state_budget)
    avail = problem.available
    return frozenset(avail[i] for i in rows[1])


class CausalPlanner:
    """Solves and memoises the per-slot trellis problems of one (profile, config).

    A solved path stays optimal, tie-breaks included, for as long as no
    request arrives, provided the profile is i.i.d.: then every reachable
    state of a slice scores exactly the same, so the recursion is decided by
    reachability and lexicographic order alone, and both only shrink along
    the path. Paths are memoised on ``(slot, start, outdated)``; for i.i.d.
    profiles the key is taken relative to the surviving items, which is
    exact because all of them carry identical weights.
    """

    def __init__(
        self,
        profile: RequestProfile,
        config: SystemConfig,
        state_budget: int = DEFAULT_STATE_BUDGET,
    ):
        profile.check(config)
        self.profile = profile
        self.config = config
        self.state_budget = state_budget
        self.iid = profile.is_iid
        self._weights = {}
        self._paths = {}

    def _weights_at(self, k: int) -> np.ndarray:
        w = self._weights.get(k)
        if w is None:
            w = self._weights[k] = conditional_weights(self.profile, k)
        return w

    def path(self, k: int, start: frozenset, outdated: frozenset) -> tuple:
        """Optimal states for slots ``k..K-1`` starting from ``start`` at ``k``."""
        L = self.config.catalog_size
        avail = tuple(i for i in range(L) if i not in outdated)
        if self.iid:
            pos = {item: r for r, item in enumerate(avail)}
            key = (k, len(avail), tuple(sorted(pos[i] for i in start)))
        else:
            key = (k, start, outdated)
        rows = self._paths.get(key)
        if rows is None:
            problem = TrellisProblem(
                self._weights_at(k),
                self.config.buffer_size,
                start_state=start,
                start_slot=k,
                forbidden=outdated,
            )
            rows, _ = solve_local(problem, self.state_budget)
            self._paths[key] = rows
        return tuple(frozenset(avail[i] for i in row) for row in rows)

    def total_hits(self, realization: RequestRealization) -> int:
        """Hit count of :func:`run_causal`, visiting only the slots with requests."""
        if not self.iid:
            return run_causal(
                self.config, self.profile, realization, planner=self
            ).total_hits
        K = self.config.horizon
        slots = realization.request_slot
        events = np.unique(slots[slots >= 0])
        start, outdated, path_slot = frozenset(), frozenset(), 0
        path = self.path(0, start, outdated) if K > 1 else (start,)
        hits = 0
        for e in events.tolist():
            state = path[e - path_slot]
            requested = frozenset(np.flatnonzero(slots == e).tolist())
            hits += len(state & requested)
            if e + 1 >= K:
                break
            target = path[e + 1 - path_slot]
            start = target - requested
            outdated = outdated | requested
            path_slot = e + 1
            path = self.path(path_slot, start, outdated)
        return hits


def run_causal(
    config: SystemConfig,
    profile: RequestProfile,
    realization: RequestRealization,
    state_budget: int = DEFAULT_STATE_BUDGET,
    incremental: bool = True,
    planner: CausalPlanner | None = None,
) -> SimTrace:
    """Simulate the causal-feedback policy slot by slot.

    With ``incremental=False`` every slot's problem is solved from scratch
    through :func:`replan`; otherwise solved paths are memoised and, for
    i.i.d. profiles, reused until the next request.
    """
    realization.check(config)
    profile.check(config)
    K = config.horizon
    if incremental and planner is None:
        planner = CausalPlanner(profile, config, state_budget)
    reuse = incremental and planner.iid

    trace = SimTrace()
    sharp, outdated = frozenset(), frozenset()
    path, path_slot = None, 0
    for k in range(K):
        if k == K - 1:
            target = sharp
        elif not incremental:
            target = replan(CausalState(k, sharp, outdated), profile, config, state_budget)
        else:
            if path is None:
                path, path_slot = planner.path(k, sharp, outdated), k
            target = path[k + 1 - path_slot]
        new = target - sharp
        push = next(iter(new)) if new else None
        requested = requested_in_slot(realization, k)
        removed = (sharp - target) | (requested & target)
        trace.record(sharp, push, removed, requested, count_hits(sharp, requested))
        sharp = step_buffer(sharp, push, removed, config)
        if requested:
            outdated = outdated | requested
        if requested or not reuse:
            path = None
    return trace
