"""Trellis dynamic program over buffer states and the statistical-RDI policy.

A trellis slice holds every buffer state of a fixed size for one slot; two
states in neighbouring slices are connected when the later one contains at
most one item the earlier one lacks. The survival-path recursion keeps, for
each state, the best-scoring path reaching it.

States are stored as rows of a ``members`` matrix over the *available*
items (catalog minus forbidden) relabelled ``0..n-1`` in increasing order.
Rows are generated in lexicographic order, so "smallest row index" is the
same as "lexicographically smallest sorted item list"; every tie is broken
that way.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np

from . import kernels
from .errors import StateBudgetExceeded
from .model import (
    EMPTY,
    RequestProfile,
    SimTrace,
    SystemConfig,
    count_hits,
    requested_in_slot,
    step_buffer,
)

DEFAULT_STATE_BUDGET = 10**6


@dataclass(frozen=True, eq=False)
class TrellisProblem:
    """Maximise ``sum_j sum_{i in S_j} weights[i, j]`` over slots after the start.

    The path starts in ``start_state`` at ``start_slot`` (which earns no
    reward) and has one state per slot up to ``end_slot - 1``.
    """

    weights: np.ndarray
    buffer_size: int
    start_state: frozenset = EMPTY
    start_slot: int = 0
    end_slot: int | None = None
    forbidden: frozenset = EMPTY

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "start_state", frozenset(self.start_state))
        object.__setattr__(self, "forbidden", frozenset(self.forbidden))
        if self.end_slot is None:
            object.__setattr__(self, "end_slot", w.shape[1])
        if not 0 <= self.start_slot < self.end_slot <= w.shape[1]:
            raise ValueError(
                f"need 0 <= start_slot < end_slot <= {w.shape[1]}, got "
                f"{self.start_slot}, {self.end_slot}"
            )
        if self.start_state & self.forbidden:
            raise ValueError("start state contains forbidden items")
        if len(self.start_state) > self.buffer_size:
            raise ValueError("start state exceeds the buffer size")
        if any(not 0 <= i < w.shape[0] for i in self.start_state | self.forbidden):
            raise ValueError("item index out of range")

    @property
    def catalog_size(self) -> int:
        return self.weights.shape[0]

    @property
    def available(self) -> tuple:
        return tuple(i for i in range(self.catalog_size) if i not in self.forbidden)

    @property
    def slice_cardinality(self) -> np.ndarray:
        """Target state size for each slot ``start_slot..end_slot-1``."""
        offsets = np.arange(self.end_slot - self.start_slot)
        cap = min(self.buffer_size, len(self.available))
        return np.minimum(len(self.start_state) + offsets, cap)


@dataclass(frozen=True)
class SurvivalPath:
    """Optimal state sequence (one state per slice, start included) and its reward."""

    states: tuple
    reward: float
    start_slot: int = 0

    def state_at(self, slot: int) -> frozenset:
        return self.states[slot - self.start_slot]


# --- combinatorial tables (depend only on n and state sizes) -----------------


@lru_cache(maxsize=256)
def _members(n: int, c: int) -> np.ndarray:
    if c == 0:
        out = np.zeros((1, 0), dtype=np.int64)
    else:
        out = np.fromiter(
            itertools.chain.from_iterable(itertools.combinations(range(n), c)),
            dtype=np.int64,
            count=comb(n, c) * c,
        ).reshape(-1, c)
    out.setflags(write=False)
    return out


@lru_cache(maxsize=256)
def _mask_index(n: int, c: int):
    masks = np.zeros(comb(n, c), dtype=np.int64)
    for p in range(c):
        masks |= np.left_shift(np.int64(1), _members(n, c)[:, p])
    order = np.argsort(masks, kind="stable")
    return masks, masks[order], order


def _lookup(n: int, c: int, query: np.ndarray) -> np.ndarray:
    _, sorted_masks, order = _mask_index(n, c)
    return order[np.searchsorted(sorted_masks, query)]


@lru_cache(maxsize=256)
def _same_size_preds(n: int, c: int) -> np.ndarray:
    """For each size-``c`` state: itself and every one-swap neighbour, ascending."""
    members = _members(n, c)
    masks = _mask_index(n, c)[0]
    n_states = masks.shape[0]
    if c == 0 or c == n:
        preds = np.arange(n_states, dtype=np.int64)[:, None]
    else:
        bits = np.left_shift(np.int64(1), np.arange(n, dtype=np.int64))
        outgoing = np.left_shift(np.int64(1), members)  # (S, c)
        cand = masks[:, None, None] - outgoing[:, :, None] + bits[None, None, :]
        valid = np.broadcast_to(
            ((masks[:, None] & bits[None, :]) == 0)[:, None, :], cand.shape
        )
        swaps = cand[valid].reshape(n_states, c * (n - c))
        idx = _lookup(n, c, swaps)
        preds = np.concatenate([np.arange(n_states)[:, None], idx], axis=1)
        preds.sort(axis=1)
    preds = np.ascontiguousarray(preds, dtype=np.int64)
    preds.setflags(write=False)
    return preds


@lru_cache(maxsize=256)
def _grow_preds(n: int, c: int) -> np.ndarray:
    """For each size-``c`` state: its size-``c-1`` subsets, ascending."""
    members = _members(n, c)
    masks = _mask_index(n, c)[0]
    cand = masks[:, None] - np.left_shift(np.int64(1), members)
    preds = _lookup(n, c - 1, cand.reshape(-1)).reshape(cand.shape)
    preds.sort(axis=1)
    preds = np.ascontiguousarray(preds, dtype=np.int64)
    preds.setflags(write=False)
    return preds


# --- solver ------------------------------------------------------------------


def _check_budget(problem: TrellisProblem, state_budget: int) -> None:
    n = len(problem.available)
    c = int(problem.slice_cardinality.max())
    count = comb(n, c)
    if count > state_budget:
        raise StateBudgetExceeded(count, state_budget)


def build_slices(problem: TrellisProblem, state_budget: int = DEFAULT_STATE_BUDGET) -> list:
    """Candidate states (frozensets of item indices) for every slot of the problem."""
    _check_budget(problem, state_budget)
    avail = np.array(problem.available, dtype=np.int64)
    slices = [[problem.start_state]]
    for c in problem.slice_cardinality[1:]:
        slices.append([frozenset(avail[row].tolist()) for row in _members(len(avail), int(c))])
    return slices


def _to_local(state: frozenset, avail: tuple) -> tuple:
    pos = {item: k for k, item in enumerate(avail)}
    return tuple(sorted(pos[i] for i in state))


def solve_local(problem: TrellisProblem, state_budget: int = DEFAULT_STATE_BUDGET):
    """Run the survival-path recursion; return local state rows per slot and reward.

    The result is ``(rows, reward)`` where ``rows[t]`` is the sorted tuple of
    local item indices of the optimal state in slot ``start_slot + t``.
    """
    _check_budget(problem, state_budget)
    avail = problem.available
    n = len(avail)
    cards = problem.slice_cardinality
    start = _to_local(problem.start_state, avail)
    steps = len(cards) - 1
    if steps == 0:
        return [start], 0.0

    w = np.ascontiguousarray(problem.weights[list(avail), :]) if n else np.zeros(
        (0, problem.weights.shape[1])
    )
    j0 = problem.start_slot

    # First transition: only successors of the start state are reachable.
    c1 = int(cards[1])
    members = _members(n, c1)
    in_start = np.zeros(n, dtype=np.bool_)
    in_start[list(start)] = True
    reachable = (c1 - in_start[members].sum(axis=1)) <= 1 if c1 else np.ones(1, np.bool_)
    reward = np.zeros(members.shape[0])
    for p in range(c1):
        reward = reward + w[members[:, p], j0 + 1]
    gamma = np.where(reachable, reward, -np.inf)

    # back[t] maps each state at path position t + 2 to its predecessor at t + 1
    back_steps = []
    t = 1
    while t < steps:
        c_prev, c_next = int(cards[t]), int(cards[t + 1])
        if c_next == c_prev + 1:
            gamma, back = kernels.relax(
                gamma, _members(n, c_next), _grow_preds(n, c_next), w, j0 + t + 1, 1
            )
            run = 1
        else:
            run = 1
            while t + run < steps and int(cards[t + run + 1]) == c_prev:
                run += 1
            gamma, back = kernels.relax(
                gamma, _members(n, c_prev), _same_size_preds(n, c_prev), w, j0 + t + 1, run
            )
        back_steps.extend(back)
        t += run

    idx = int(np.argmax(gamma))
    reward_total = float(gamma[idx])
    rows = [None] * (steps + 1)
    rows[0] = start
    for pos in range(steps, 0, -1):
        rows[pos] = tuple(_members(n, int(cards[pos]))[idx].tolist())
        if pos > 1:
            idx = int(back_steps[pos - 2][idx])
    return rows, reward_total


def solve(problem: TrellisProblem, state_budget: int = DEFAULT_STATE_BUDGET) -> SurvivalPath:
    """Exact maximum-reward path through the trellis of ``problem``."""
    rows, reward = solve_local(problem, state_budget)
    avail = problem.available
    states = tuple(frozenset(avail[i] for i in row) for row in rows)
    states = (problem.start_state,) + states[1:]
    return SurvivalPath(states, reward, problem.start_slot)


def path_reward(states, weights: np.ndarray, start_slot: int = 0) -> float:
    """Sum of slice rewards along ``states``; the first state earns nothing."""
    total = 0.0
    for offset, state in enumerate(states[1:], start=1):
        r = 0.0
        for i in sorted(state):
            r = r + weights[i, start_slot + offset]
        total = total + r
    return total


def statistical_plan(
    profile: RequestProfile,
    config: SystemConfig,
    state_budget: int = DEFAULT_STATE_BUDGET,
) -> tuple:
    """Optimal buffer states for slots ``1..K-1`` under statistical knowledge only."""
    profile.check(config)
    problem = TrellisProblem(profile.q, config.buffer_size)
    return solve(problem, state_budget).states[1:]


def plan_decisions(plan) -> tuple:
    """Per-slot pushes and removals induced by a plan of states for slots ``1..K-1``.

    Returns ``(pushes, removals)`` indexed by slot ``k = 0..K-1``.
    """
    states = [EMPTY, *plan]
    pushes, removals = [], []
    for k in range(len(states)):
        nxt = states[k + 1] if k + 1 < len(states) else states[k]
        new = nxt - states[k]
        pushes.append(next(iter(new)) if new else None)
        removals.append(states[k] - nxt)
    return pushes, removals


def run_statistical(config: SystemConfig, plan, realization) -> SimTrace:
    """Follow a precomputed plan; requests are never observed."""
    realization.check(config)
    pushes, removals = plan_decisions(plan)
    trace = SimTrace()
    state = EMPTY
    for k in range(config.horizon):
        requested = requested_in_slot(realization, k)
        trace.record(state, pushes[k], removals[k], requested, count_hits(state, requested))
        state = step_buffer(state, pushes[k], removals[k], config)
    return trace
