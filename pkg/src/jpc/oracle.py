"""Brute-force references for the optimised code paths.

Everything here is exhaustive and deliberately naive. Each oracle refuses
instances above a hard size limit instead of running for hours.
"""

from __future__ import annotations

import itertools
from functools import lru_cache
from math import comb, factorial

import numpy as np

from .analysis import ENUMERATION, ThroughputReport
from .errors import InstanceTooLarge
from .model import RequestRealization, SystemConfig

MAX_PATHS = 10**7
MAX_PATTERNS = 10**7


def brute_force_offline(config: SystemConfig, realization: RequestRealization) -> int:
    """Most hits achievable by any feasible push/remove sequence.

    Limited to ``L <= 4``, ``K <= 4``, ``N <= 2``.
    """
    L, N, K = config.catalog_size, config.buffer_size, config.horizon
    if L > 4 or K > 4 or N > 2:
        raise InstanceTooLarge(f"brute-force offline search needs L<=4, K<=4, N<=2; got {L}, {K}, {N}")
    slots = [int(s) for s in realization.request_slot]
    requested = [frozenset(i for i in range(L) if slots[i] == k) for k in range(K)]

    @lru_cache(maxsize=None)
    def best(k: int, state: frozenset) -> int:
        if k == K:
            return 0
        gained = len(state & requested[k])
        options = 0
        for r in range(len(state) + 1):
            for remove in itertools.combinations(sorted(state), r):
                kept = state - frozenset(remove)
                for push in [None, *range(L)]:
                    if push is not None and push in kept:
                        continue
                    nxt = kept if push is None else kept | {push}
                    if len(nxt) > N:
                        continue
                    options = max(options, best(k + 1, nxt))
        return gained + options

    return best(0, frozenset())


def _feasible_successors(prev: frozenset, avail, N: int):
    for size in range(min(N, len(avail)) + 1):
        for combo in itertools.combinations(avail, size):
            state = frozenset(combo)
            if len(state - prev) <= 1:
                yield state


def count_trellis_paths(problem) -> int:
    avail = problem.available
    N = problem.buffer_size
    counts = {problem.start_state: 1}
    for _ in range(problem.start_slot + 1, problem.end_slot):
        nxt = {}
        for prev, c in counts.items():
            for state in _feasible_successors(prev, avail, N):
                nxt[state] = nxt.get(state, 0) + c
        counts = nxt
    return sum(counts.values())


def brute_force_trellis(problem) -> float:
    """Maximum reward over every feasible state sequence, partial buffers included."""
    n_paths = count_trellis_paths(problem)
    if n_paths > MAX_PATHS:
        raise InstanceTooLarge(f"{n_paths} trellis paths exceed the limit of {MAX_PATHS}")
    avail = problem.available
    N = problem.buffer_size
    w = problem.weights
    end = problem.end_slot
    best = -np.inf

    def walk(slot: int, prev: frozenset, total: float):
        nonlocal best
        if slot == end:
            best = max(best, total)
            return
        for state in _feasible_successors(prev, avail, N):
            r = 0.0
            for i in sorted(state):
                r = r + w[i, slot]
            walk(slot + 1, state, total + r)

    walk(problem.start_slot + 1, problem.start_state, 0.0)
    return float(best)


def enumerate_patterns(L: int, K: int, q):
    """Yield every request pattern ``m`` with ``sum(m) == L`` and its multinomial probability."""
    n_patterns = comb(L + K - 1, K - 1)
    if n_patterns > MAX_PATTERNS:
        raise InstanceTooLarge(f"{n_patterns} patterns exceed the limit of {MAX_PATTERNS}")
    q = [float(x) for x in q]
    if len(q) != K:
        raise ValueError(f"need {K} probabilities, got {len(q)}")
    # stars and bars: choose K-1 bar positions among L+K-1 places
    for bars in itertools.combinations(range(L + K - 1), K - 1):
        edges = (-1, *bars, L + K - 1)
        m = tuple(edges[t + 1] - edges[t] - 1 for t in range(K))
        p = float(factorial(L))
        for k in range(K):
            p = p / factorial(m[k]) * q[k] ** m[k]
        yield m, p


def _with_never(q, K: int):
    q = [float(x) for x in q]
    never = max(0.0, 1.0 - sum(q))
    return (q + [never], K + 1) if never > 0 else (q, K)


def _enumerate_expectation(q, L: int, N: int, K: int, per_slot) -> float:
    qq, bins = _with_never(q, K)
    total = 0.0
    for m, p in enumerate_patterns(L, bins, qq):
        s, before, hits = 0, 0, 0.0
        for k in range(K):
            hits += per_slot(m[k], s, before)
            s = min(max(s - m[k], 0) + 1, N)
            before += m[k]
        total += p * hits
    return total


def enumerate_offline_throughput(q, L: int, N: int, K: int) -> ThroughputReport:
    value = _enumerate_expectation(q, L, N, K, lambda m, s, before: min(m, s))
    return ThroughputReport(value, ENUMERATION, L, N, K)


def enumerate_causal_throughput(q, L: int, N: int, K: int) -> ThroughputReport:
    def per_slot(m, s, before):
        return 0.0 if m == 0 else min(m * s / (L - before), m)

    value = _enumerate_expectation(q, L, N, K, per_slot)
    return ThroughputReport(value, ENUMERATION, L, N, K)
