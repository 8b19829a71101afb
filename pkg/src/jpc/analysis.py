"""Throughput calculators for the three policies (i.i.d. request delays).

The exact calculators condition on the number of items requested so far:
given ``c`` earlier requests, the number requested in slot ``k`` is binomial
over the ``L - c`` remaining items with the slot probability renormalised by
the mass not yet spent. Per-slot hits depend on the request pattern only
through that prefix count and the cached-item count, so a DP over
``(requests so far, cached count)`` gives the multinomial expectation exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from math import comb

import numpy as np

from .errors import DomainError, InvalidProfile
from .model import occupancy_step

EXACT_DP = "exact_dp"
ENUMERATION = "enumeration"
CLOSED_FORM = "closed_form"
APPROXIMATION = "approximation"


@dataclass(frozen=True)
class ThroughputReport:
    value: float
    method: str
    L: int
    N: int
    K: int


def _check_per_slot(q, K: int) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64)
    if q.shape != (K,):
        raise InvalidProfile(f"need {K} per-slot probabilities, got shape {q.shape}")
    if np.any(q < 0) or not np.all(np.isfinite(q)):
        raise InvalidProfile("per-slot probabilities must be finite and nonnegative")
    if q.sum() > 1 + 1e-12:
        raise InvalidProfile(f"per-slot probabilities sum to {q.sum()!r} > 1")
    return q


def _binom_pmf(n: int, p: float) -> np.ndarray:
    m = np.arange(n + 1)
    coef = np.array([comb(n, int(x)) for x in m], dtype=np.float64)
    return coef * p**m * (1.0 - p) ** (n - m)


def _pattern_dp(q, L: int, N: int, K: int, slot_hits) -> float:
    q = _check_per_slot(q, K)
    never = max(0.0, 1.0 - float(q.sum()))
    # remaining[k] = probability an unrequested item is requested at slot >= k or never
    remaining = np.concatenate([np.cumsum(q[::-1])[::-1], [0.0]]) + never
    # prob[c, s]: c items requested before slot k, s items cached at slot k
    prob = np.zeros((L + 1, N + 1))
    prob[0, 0] = 1.0
    expected = 0.0
    for k in range(K):
        p = 0.0 if remaining[k] <= 0 else min(1.0, q[k] / remaining[k])
        nxt = np.zeros_like(prob)
        for c in range(L + 1):
            pmf = _binom_pmf(L - c, p)
            for s in range(N + 1):
                mass = prob[c, s]
                if mass == 0.0:
                    continue
                for m in range(L - c + 1):
                    pm = mass * pmf[m]
                    if pm == 0.0:
                        continue
                    expected += pm * slot_hits(m, s, c)
                    nxt[c + m, occupancy_step(s, m, N)] += pm
        prob = nxt
    return float(expected)


def offline_throughput_exact(q, L: int, N: int, K: int) -> ThroughputReport:
    """Expected hits of the offline policy: ``E[sum_k min(m_k, s_k)]``."""
    value = _pattern_dp(q, L, N, K, lambda m, s, c: min(m, s))
    return ThroughputReport(value, EXACT_DP, L, N, K)


def causal_throughput_exact(q, L: int, N: int, K: int) -> ThroughputReport:
    """Expected hits with causal feedback: ``E[sum_k min(m_k s_k / (L - c_k), m_k)]``."""

    def slot_hits(m, s, c):
        if m == 0:
            return 0.0
        return min(m * s / (L - c), m)

    value = _pattern_dp(q, L, N, K, slot_hits)
    return ThroughputReport(value, EXACT_DP, L, N, K)


def causal_policy_throughput(q, L: int, N: int, K: int) -> ThroughputReport:
    """Expected hits of the causal-feedback policy itself.

    Unlike :func:`causal_throughput_exact`, the cached count follows the
    policy: the next buffer is planned before this slot's requests are
    known, so it holds ``min(s + 1, N, L - c)`` items of which a
    hypergeometric number is read and dropped. A slot freed by a read is
    refilled one slot later, not immediately.
    """
    q = _check_per_slot(q, K)
    never = max(0.0, 1.0 - float(q.sum()))
    remaining = np.concatenate([np.cumsum(q[::-1])[::-1], [0.0]]) + never
    prob = np.zeros((L + 1, N + 1))
    prob[0, 0] = 1.0
    expected = 0.0
    for k in range(K):
        p = 0.0 if remaining[k] <= 0 else min(1.0, q[k] / remaining[k])
        nxt = np.zeros_like(prob)
        for c in range(L + 1):
            n = L - c
            pmf = _binom_pmf(n, p)
            for s in range(N + 1):
                mass = prob[c, s]
                if mass == 0.0:
                    continue
                # no slot is left to plan for in the last one
                size = min(s + 1, N, n) if k < K - 1 else s
                for m in range(n + 1):
                    pm = mass * pmf[m]
                    if pm == 0.0:
                        continue
                    if m:
                        expected += pm * m * s / n
                    for h in range(min(size, m) + 1):
                        ph = comb(size, h) * comb(n - size, m - h) / comb(n, m)
                        if ph:
                            nxt[c + m, size - h] += pm * ph
        prob = nxt
    return ThroughputReport(float(expected), EXACT_DP, L, N, K)


def offline_throughput_uniform_approx(L: int, N: int, K: int) -> ThroughputReport:
    """Two-term binomial approximation for uniform delays.

    The second factor ``1 - K/N`` is negative whenever ``N < K``.
    """
    if N > K:
        raise DomainError(f"need N <= K, got N={N}, K={K}")
    x = N / K
    tail = sum(
        j * comb(L, N + j) * x ** (N + j) * (1 - x) ** (L - N - j)
        for j in range(1, L - N + 1)
    )
    value = (1 - x) * L + (1 - K / N) * tail
    return ThroughputReport(value, APPROXIMATION, L, N, K)


def offline_throughput_uniform_simple(L: int, N: int, K: int) -> ThroughputReport:
    value = N * K * -math.expm1(-L / (N * K))
    return ThroughputReport(value, APPROXIMATION, L, N, K)


def statistical_throughput(plan, profile) -> ThroughputReport:
    """Expected hits of a plan ``S_1..S_{K-1}`` under ``profile``."""
    q = profile.q
    total = 0.0
    for k, state in enumerate(plan, start=1):
        r = 0.0
        for i in sorted(state):
            r = r + q[i, k]
        total = total + r
    L, K = q.shape
    n_max = max((len(s) for s in plan), default=0)
    return ThroughputReport(float(total), EXACT_DP, L, n_max, K)


def statistical_throughput_iid(q, L: int, N: int, K: int) -> ThroughputReport:
    q = _check_per_slot(q, K)
    M = min(N, L)
    head = sum(k * q[k] for k in range(1, min(M, K)))
    tail = M * float(np.sum(q[M:K]))
    return ThroughputReport(float(head + tail), CLOSED_FORM, L, N, K)


def statistical_throughput_uniform(L: int, N: int, K: int) -> ThroughputReport:
    """Closed form ``M (1 - (M + 3) / (2K))`` for uniform delays, ``M = min(N, L)``.

    Whenever ``M <= K`` this is ``M / K`` below
    :func:`statistical_throughput_iid` at ``q_k = 1/K``.
    """
    if K < 1:
        raise DomainError("K must be positive")
    M = min(N, L)
    return ThroughputReport(M * (1 - (M + 3) / (2 * K)), CLOSED_FORM, L, N, K)


def causal_throughput_uniform(L: int, N: int, K: int) -> ThroughputReport:
    """Double binomial sum for uniform delays, accumulated in exact rationals."""
    if K < L:
        raise DomainError(f"formula needs K >= L, got K={K}, L={L}")
    total = Fraction(0)
    for i in range(1, L + 1):
        # k = 0 contributes nothing: min(i, 0, N) = 0
        for k in range(1, K - L + 1):
            weight = min(i, k, N)
            total += Fraction(weight, i) * comb(L + k - i - 1, L - i) * comb(
                K - L + i - k, i - 1
            )
    value = float(total / comb(K, L))
    return ThroughputReport(value, APPROXIMATION, L, N, K)


def causal_throughput_simple(L: int, N: int) -> ThroughputReport:
    M = min(N, L)
    value = M * (math.log(L / M) + 1)
    return ThroughputReport(value, APPROXIMATION, L, N, 0)
