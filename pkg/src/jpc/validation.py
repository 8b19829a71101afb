"""Oracle-equivalence suites shared by the ``validate`` command and the tests."""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import analysis, oracle
from .causal import CausalPlanner
from .model import NEVER, RequestProfile, RequestRealization, SystemConfig
from .offline import run_offline
from .trellis import TrellisProblem, solve

TOL = 1e-12

SCALES = {
    # offline grid bounds, trellis problem count, pattern grid bounds
    "tiny": dict(offline=(3, 3, 2), trellis=100, patterns=(4, 4, 3), causal=(3, 4, 2)),
    "default": dict(offline=(4, 4, 2), trellis=1000, patterns=(6, 6, 3), causal=(4, 5, 3)),
}


@dataclass
class SuiteResult:
    name: str
    cases: int
    counterexample: Optional[str] = None
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return self.counterexample is None


def offline_vs_brute_force(max_L=4, max_K=4, max_N=2) -> SuiteResult:
    """Greedy offline hits equal the exhaustive optimum on every realization."""
    cases = 0
    for L in range(1, max_L + 1):
        for K in range(1, max_K + 1):
            for N in range(1, max_N + 1):
                config = SystemConfig(L, N, K)
                for slots in itertools.product([NEVER, *range(K)], repeat=L):
                    realization = RequestRealization(np.array(slots))
                    greedy = run_offline(config, realization).total_hits
                    best = oracle.brute_force_offline(config, realization)
                    cases += 1
                    if greedy != best:
                        return SuiteResult(
                            "offline_vs_brute_force",
                            cases,
                            f"L={L} N={N} K={K} request_slot={list(slots)}: "
                            f"greedy={greedy} optimum={best}",
                        )
    return SuiteResult("offline_vs_brute_force", cases)


def random_trellis_problem(rng: np.random.Generator, max_L=4, max_K=5, max_N=2):
    L = int(rng.integers(1, max_L + 1))
    K = int(rng.integers(1, max_K + 1))
    N = int(rng.integers(1, max_N + 1))
    weights = rng.random((L, K))
    if rng.random() < 0.3:
        # coarse weights force exact ties
        weights = np.round(weights * 3) / 3
    forbidden = frozenset(i for i in range(L) if rng.random() < 0.25)
    avail = [i for i in range(L) if i not in forbidden]
    start = sorted(i for i in avail if rng.random() < 0.4)[:N]
    start_slot = int(rng.integers(0, K)) if rng.random() < 0.5 else 0
    if start_slot == 0 and rng.random() < 0.5:
        start, forbidden = [], frozenset()
    return TrellisProblem(weights, N, frozenset(start), start_slot, forbidden=forbidden)


def trellis_vs_enumeration(n_problems=1000, seed=0) -> SuiteResult:
    """Survival-path reward equals the best of all feasible paths."""
    rng = np.random.default_rng(seed)
    for case in range(1, n_problems + 1):
        problem = random_trellis_problem(rng)
        got = solve(problem).reward
        want = oracle.brute_force_trellis(problem)
        if abs(got - want) > TOL:
            return SuiteResult(
                "trellis_vs_enumeration",
                case,
                f"N={problem.buffer_size} start={sorted(problem.start_state)} "
                f"start_slot={problem.start_slot} forbidden={sorted(problem.forbidden)} "
                f"weights={problem.weights.tolist()}: solve={got!r} enumeration={want!r}",
            )
    return SuiteResult("trellis_vs_enumeration", n_problems)


def dp_vs_pattern_enumeration(max_L=6, max_K=6, max_N=3) -> SuiteResult:
    """Both pattern-conditioned DPs equal direct multinomial enumeration."""
    pairs = [
        (analysis.offline_throughput_exact, oracle.enumerate_offline_throughput),
        (analysis.causal_throughput_exact, oracle.enumerate_causal_throughput),
    ]
    cases = 0
    for L in range(1, max_L + 1):
        for K in range(1, max_K + 1):
            q = [1.0 / K] * K
            for N in range(1, max_N + 1):
                for dp, enum in pairs:
                    got, want = dp(q, L, N, K).value, enum(q, L, N, K).value
                    cases += 1
                    if abs(got - want) > TOL:
                        return SuiteResult(
                            "dp_vs_pattern_enumeration",
                            cases,
                            f"{dp.__name__} L={L} N={N} K={K}: dp={got!r} enumeration={want!r}",
                        )
    return SuiteResult("dp_vs_pattern_enumeration", cases)


def causal_dp_vs_realizations(max_L=4, max_K=5, max_N=3) -> SuiteResult:
    """Causal-policy DP equals the average over every realization of the policy."""
    cases = 0
    for L in range(1, max_L + 1):
        for K in range(1, max_K + 1):
            profile = RequestProfile.uniform_iid(L, K)
            for N in range(1, max_N + 1):
                planner = CausalPlanner(profile, SystemConfig(L, N, K))
                total = 0
                for slots in itertools.product(range(K), repeat=L):
                    total += planner.total_hits(RequestRealization(np.array(slots)))
                want = total / K**L
                got = analysis.causal_policy_throughput([1.0 / K] * K, L, N, K).value
                cases += 1
                if abs(got - want) > TOL:
                    return SuiteResult(
                        "causal_dp_vs_realizations",
                        cases,
                        f"L={L} N={N} K={K}: dp={got!r} realizations={want!r}",
                    )
    return SuiteResult("causal_dp_vs_realizations", cases)


def run_all(scale: str = "default", seed: int = 0):
    """Yield each suite's result as soon as it finishes."""
    if scale not in SCALES:
        raise ValueError(f"unknown scale {scale!r}; expected one of {sorted(SCALES)}")
    s = SCALES[scale]
    suites = [
        (offline_vs_brute_force, s["offline"]),
        (trellis_vs_enumeration, (s["trellis"], seed)),
        (dp_vs_pattern_enumeration, s["patterns"]),
        (causal_dp_vs_realizations, s["causal"]),
    ]
    for fn, params in suites:
        t0 = time.perf_counter()
        result = fn(*params)
        result.seconds = time.perf_counter() - t0
        yield result
