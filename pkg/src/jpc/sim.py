"""Seeded Monte-Carlo evaluation of the three policies and the figure sweeps."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from . import analysis, kernels
from .causal import CausalPlanner
from .model import RequestProfile, RequestRealization, SystemConfig, sample_realizations
from .trellis import DEFAULT_STATE_BUDGET, statistical_plan

POLICIES = ("offline", "statistical", "causal")

ProfileFactory = Callable[[int, int], RequestProfile]


@dataclass(frozen=True)
class MonteCarloResult:
    policy: str
    mean_throughput: float
    std_error: float
    trials: int
    L: int
    N: int
    K: int
    base_seed: int


@dataclass(frozen=True)
class Row:
    """One line of the results table; field order is the CSV column order."""

    policy: str
    L: int
    N: int
    K: int
    trials: int
    mean: Optional[float]
    std_error: Optional[float]
    analytical: Optional[float]
    method: str


def _plan_membership(plan, config: SystemConfig) -> np.ndarray:
    member = np.zeros((config.horizon, config.catalog_size), dtype=np.bool_)
    for k, state in enumerate(plan, start=1):
        member[k, list(state)] = True
    return member


def _chunk_hits(policy, profile, config, base_seed, start, stop, state_budget, plan=None):
    slots = sample_realizations(profile, base_seed, start, stop)
    if policy == "offline":
        return kernels.offline_hits_batch(slots, config.buffer_size, config.horizon)
    if policy == "statistical":
        if plan is None:
            plan = statistical_plan(profile, config, state_budget)
        member = _plan_membership(plan, config)
        finite = slots >= 0
        cols = np.broadcast_to(np.arange(config.catalog_size), slots.shape)
        return (member[np.where(finite, slots, 0), cols] & finite).sum(axis=1)
    if policy == "causal":
        planner = CausalPlanner(profile, config, state_budget)
        return np.array(
            [planner.total_hits(RequestRealization(row)) for row in slots], dtype=np.int64
        )
    raise ValueError(f"unknown policy {policy!r}; expected one of {POLICIES}")


def _chunks(trials: int, jobs: int):
    n = max(1, min(jobs, trials))
    edges = np.linspace(0, trials, n + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def trial_hits(
    policy: str,
    profile: RequestProfile,
    config: SystemConfig,
    trials: int,
    base_seed: int,
    jobs: int = 1,
    state_budget: int = DEFAULT_STATE_BUDGET,
) -> np.ndarray:
    """Hit count of every trial, in trial order, whatever ``jobs`` is."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if policy not in POLICIES:
        raise ValueError(f"unknown policy {policy!r}; expected one of {POLICIES}")
    profile.check(config)
    plan = statistical_plan(profile, config, state_budget) if policy == "statistical" else None
    chunks = _chunks(trials, jobs)
    if len(chunks) == 1:
        return _chunk_hits(policy, profile, config, base_seed, 0, trials, state_budget, plan)
    with ProcessPoolExecutor(max_workers=len(chunks)) as pool:
        futures = [
            pool.submit(_chunk_hits, policy, profile, config, base_seed, a, b, state_budget, plan)
            for a, b in chunks
        ]
        return np.concatenate([f.result() for f in futures])


def monte_carlo(
    policy: str,
    profile: RequestProfile,
    config: SystemConfig,
    trials: int,
    base_seed: int,
    jobs: int = 1,
    state_budget: int = DEFAULT_STATE_BUDGET,
) -> MonteCarloResult:
    hits = trial_hits(policy, profile, config, trials, base_seed, jobs, state_budget)
    mean = float(np.mean(hits))
    se = float(np.std(hits, ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return MonteCarloResult(
        policy,
        mean,
        se,
        trials,
        config.catalog_size,
        config.buffer_size,
        config.horizon,
        int(base_seed),
    )


def reference_value(
    policy: str,
    profile: RequestProfile,
    config: SystemConfig,
    state_budget: int = DEFAULT_STATE_BUDGET,
) -> Optional[analysis.ThroughputReport]:
    """Analytical counterpart of a simulated policy, or ``None`` if unavailable.

    The offline and causal calculators need i.i.d. request delays.
    """
    L, N, K = config.catalog_size, config.buffer_size, config.horizon
    if policy == "statistical":
        plan = statistical_plan(profile, config, state_budget)
        report = analysis.statistical_throughput(plan, profile)
        return analysis.ThroughputReport(report.value, report.method, L, N, K)
    if not profile.is_iid:
        return None
    q = profile.q[0]
    if policy == "offline":
        return analysis.offline_throughput_exact(q, L, N, K)
    if policy == "causal":
        return analysis.causal_throughput_exact(q, L, N, K)
    raise ValueError(f"unknown policy {policy!r}")


def _row(result: MonteCarloResult, ref) -> Row:
    return Row(
        result.policy,
        result.L,
        result.N,
        result.K,
        result.trials,
        result.mean_throughput,
        result.std_error,
        None if ref is None else ref.value,
        "" if ref is None else ref.method,
    )


def simulate_grid(
    policies: Sequence[str],
    cells: Iterable[tuple],
    profile_for: ProfileFactory,
    trials: int,
    base_seed: int,
    jobs: int = 1,
    state_budget: int = DEFAULT_STATE_BUDGET,
) -> list:
    """Monte-Carlo plus analytical value for every policy on every ``(L, N, K)`` cell."""
    rows = []
    for L, N, K in cells:
        config = SystemConfig(L, N, K)
        profile = profile_for(L, K)
        for policy in policies:
            result = monte_carlo(policy, profile, config, trials, base_seed, jobs, state_budget)
            rows.append(_row(result, reference_value(policy, profile, config, state_budget)))
    return rows


def _uniform(L: int, K: int) -> RequestProfile:
    return RequestProfile.uniform_iid(L, K)


def sweep_K(
    policies: Sequence[str],
    L: int,
    N: int,
    K_values: Sequence[int],
    trials: int,
    base_seed: int,
    jobs: int = 1,
    profile_for: ProfileFactory = _uniform,
    state_budget: int = DEFAULT_STATE_BUDGET,
) -> list:
    """Throughput against the number of slots, one row per (K, policy)."""
    cells = [(L, N, K) for K in K_values]
    return simulate_grid(policies, cells, profile_for, trials, base_seed, jobs, state_budget)


def sweep_N(
    policies: Sequence[str],
    L: int,
    K: int,
    N_values: Sequence[int],
    trials: int,
    base_seed: int,
    jobs: int = 1,
    profile_for: ProfileFactory = _uniform,
    state_budget: int = DEFAULT_STATE_BUDGET,
) -> list:
    """Throughput against the buffer size, one row per (N, policy)."""
    cells = [(L, N, K) for N in N_values]
    return simulate_grid(policies, cells, profile_for, trials, base_seed, jobs, state_budget)


def rows_as_dicts(rows) -> list:
    return [asdict(r) for r in rows]
