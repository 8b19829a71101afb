"""Acceptance criteria, one verdict line each.

Run with pytest (verdicts appear in the terminal summary) or directly:
``python3 tests/test_acceptance.py``.
"""

import math
import sys
import time
from functools import lru_cache
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from conftest import ACCEPTANCE_LINES  # noqa: E402

from jpc import analysis, cli, sim, validation  # noqa: E402
from jpc.model import RequestProfile, SystemConfig  # noqa: E402
from jpc.trellis import statistical_plan  # noqa: E402

L, N, K = 10, 5, 200
TRIALS = 10_000
SEED = 0
Q = [1 / K] * K


def verdict(number, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title}: {detail}"
    ACCEPTANCE_LINES[str(number)] = line
    print(line)
    assert ok, line


@lru_cache(maxsize=None)
def headline(policy):
    t0 = time.perf_counter()
    result = sim.monte_carlo(policy, RequestProfile.uniform_iid(L, K), SystemConfig(L, N, K), TRIALS, SEED)
    return result, time.perf_counter() - t0


@lru_cache(maxsize=None)
def fig4():
    return tuple(sim.sweep_N(sim.POLICIES, L, K, range(1, 11), TRIALS, SEED))


@lru_cache(maxsize=None)
def fig3():
    return tuple(sim.sweep_K(sim.POLICIES, L, N, range(20, 201, 20), TRIALS, SEED))


def _curve(rows, policy):
    return [r for r in rows if r.policy == policy]


def test_criterion_1_statistical_exactness():
    target = 5 * (1 - 8 / 400)  # uniform closed form, evaluated independently
    assert analysis.statistical_throughput_uniform(L, N, K).value == pytest.approx(target)
    profile = RequestProfile.uniform_iid(L, K)
    plan_reward = analysis.statistical_throughput(statistical_plan(profile, SystemConfig(L, N, K)), profile).value
    mc, seconds = headline("statistical")
    within = abs(mc.mean_throughput - target) <= 3 * mc.std_error
    exact = abs(plan_reward - target) <= 1e-9
    verdict(
        1,
        "statistical policy vs 4.9",
        within and exact and seconds < 120,
        f"MC {mc.mean_throughput:.4f} +/- {mc.std_error:.4f} ({abs(mc.mean_throughput - target) / mc.std_error:.1f} SE "
        f"from {target}); plan reward {plan_reward:.9f} (|diff| {abs(plan_reward - target):.3g}, tol 1e-9); {seconds:.1f}s",
    )


def test_criterion_1_companion_slice_counting():
    # Same checks against the slice-counting value the trellis actually attains.
    target = sum(min(k, N) for k in range(1, K)) / K
    profile = RequestProfile.uniform_iid(L, K)
    plan_reward = analysis.statistical_throughput(statistical_plan(profile, SystemConfig(L, N, K)), profile).value
    mc, seconds = headline("statistical")
    ok = abs(plan_reward - target) <= 1e-9 and abs(mc.mean_throughput - target) <= 3 * mc.std_error and seconds < 120
    verdict(
        "1b",
        f"statistical policy vs slice-counting value {target}",
        ok,
        f"MC {mc.mean_throughput:.4f} +/- {mc.std_error:.4f}; plan reward {plan_reward:.12f}; {seconds:.1f}s",
    )


def test_criterion_2_offline():
    dp = analysis.offline_throughput_exact(Q, L, N, K).value
    eq8 = N * K * (1 - math.exp(-L / (N * K)))
    assert round(eq8, 5) == 9.95017
    mc, seconds = headline("offline")
    ok = (
        abs(mc.mean_throughput - dp) <= 3 * mc.std_error
        and abs(mc.mean_throughput - eq8) / eq8 <= 0.02
        and seconds < 120
    )
    verdict(
        2,
        "offline policy",
        ok,
        f"MC {mc.mean_throughput:.4f} +/- {mc.std_error:.4f}; DP {dp:.6f} ({abs(mc.mean_throughput - dp) / mc.std_error:.1f} SE); "
        f"{100 * abs(mc.mean_throughput - eq8) / eq8:.2f}% from {eq8:.5f}; {seconds:.1f}s",
    )


def test_criterion_3_causal():
    dp = analysis.causal_throughput_exact(Q, L, N, K).value
    eq26 = N * (math.log(L / N) + 1)
    assert round(eq26, 4) == 8.4657
    mc, seconds = headline("causal")
    ok = abs(mc.mean_throughput - dp) <= 3 * mc.std_error and abs(mc.mean_throughput - eq26) / eq26 <= 0.10
    verdict(
        3,
        "causal policy",
        ok,
        f"MC {mc.mean_throughput:.4f} +/- {mc.std_error:.4f}; DP {dp:.6f} ({abs(mc.mean_throughput - dp) / mc.std_error:.1f} SE); "
        f"{100 * abs(mc.mean_throughput - eq26) / eq26:.2f}% from {eq26:.4f}; {seconds:.1f}s",
    )


def test_criterion_4_narrative():
    off = headline("offline")[0].mean_throughput
    sta = headline("statistical")[0].mean_throughput
    cau = headline("causal")[0].mean_throughput
    ratio = sta / off
    recovered = (cau - sta) / (off - sta)
    ok = abs(ratio - 0.5) <= 0.05 and recovered > 0.6
    verdict(
        4,
        "throughput loss and recovery",
        ok,
        f"statistical/offline {100 * ratio:.1f}% (50 +/- 5); causal recovers {100 * recovered:.1f}% of the gap (> 60%)",
    )


@pytest.mark.slow
def test_criterion_5_buffer_sweep():
    rows = fig4()
    curves = {p: [r.mean for r in _curve(rows, p)] for p in sim.POLICIES}
    monotone = all(all(b >= a for a, b in zip(c, c[1:])) for c in curves.values())
    gains = [c / s for c, s in zip(curves["causal"][:3], curves["statistical"][:3])]
    ok = monotone and all(g > 2 for g in gains) and curves["offline"][0] > 9.5
    verdict(
        5,
        "buffer-size sweep (K=200, N=1..10)",
        ok,
        f"nondecreasing in N: {monotone}; causal/statistical at N=1..3: "
        + ", ".join(f"{g:.2f}" for g in gains)
        + f"; offline at N=1: {curves['offline'][0]:.4f}",
    )


def test_criterion_6_oracle_equivalence():
    t0 = time.perf_counter()
    results = list(validation.run_all("default"))
    seconds = time.perf_counter() - t0
    ok = all(r.passed for r in results) and seconds < 300
    detail = "; ".join(f"{r.name} {'ok' if r.passed else 'FAILED'} ({r.cases} cases)" for r in results)
    trellis = next(r for r in results if r.name == "trellis_vs_enumeration")
    ok = ok and trellis.cases >= 1000
    verdict(6, "oracle equivalence", ok, f"{detail}; {seconds:.1f}s")


def _ordered(a, b):
    return a.mean >= b.mean - 3 * math.hypot(a.std_error, b.std_error)


@pytest.mark.slow
def test_criterion_7_ordering():
    exact_violations = 0
    cells = 0
    for l in range(1, 7):
        for k in range(1, 7):
            q = [1 / k] * k
            for n in range(1, 4):
                off = analysis.offline_throughput_exact(q, l, n, k).value
                cau = analysis.causal_throughput_exact(q, l, n, k).value
                sta = analysis.statistical_throughput_iid(q, l, n, k).value
                cells += 1
                exact_violations += not (off >= cau - 1e-12 and cau >= sta - 1e-12)
    mc_violations = []
    swept = 0
    for rows in (fig3(), fig4()):
        for i in range(0, len(rows), 3):
            by = {r.policy: r for r in rows[i : i + 3]}
            swept += 1
            if not (_ordered(by["offline"], by["causal"]) and _ordered(by["causal"], by["statistical"])):
                mc_violations.append((by["offline"].N, by["offline"].K))
    ok = exact_violations == 0 and not mc_violations
    verdict(
        7,
        "offline >= causal >= statistical",
        ok,
        f"exact: {cells - exact_violations}/{cells} grid cells; Monte-Carlo: {swept - len(mc_violations)}/{swept} swept cells",
    )


def test_criterion_8_determinism(tmp_path):
    config = tmp_path / "fig.json"
    config.write_text(
        '{"schema_version": 1, "L": 10, "N": 5, "K": [100, 200], "trials": 2000, "base_seed": 0}'
    )
    outputs = {}
    for run, jobs in enumerate(["1", "1", "2", "4"]):
        out = tmp_path / f"run{run}.csv"
        assert cli.main(["simulate", "--config", str(config), "--jobs", jobs, "--out", str(out)]) == 0
        outputs[(run, jobs)] = out.read_bytes()
    first = next(iter(outputs.values()))
    ok = all(o == first for o in outputs.values())
    verdict(
        8,
        "byte-identical simulate output",
        ok,
        f"{len(outputs)} runs at --jobs 1, 1, 2, 4: {'identical' if ok else 'differ'} ({len(first)} bytes)",
    )


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
