import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from jpc import analysis
from jpc.causal import (
    CausalPlanner,
    CausalState,
    conditional_weight,
    conditional_weights,
    decode_feedback,
    encode_feedback,
    feedback_width,
    replan,
    run_causal,
)
from jpc.model import EMPTY, RequestProfile, RequestRealization, SystemConfig, sample_realization, step_buffer
from jpc.trellis import statistical_plan

from conftest import items, realization


# --- conditional weights ---------------------------------------------------------


def test_uniform_conditional_weight():
    p = RequestProfile.uniform_iid(3, 10)
    assert conditional_weight(p, 0, 7, 4) == pytest.approx((1 / 10) / (5 / 10))


def test_exhausted_item_weighs_zero():
    q = np.zeros((2, 10))
    q[0, 2] = 1.0
    q[1, :] = 0.1
    w = conditional_weights(RequestProfile(q, np.zeros(2)), 4)
    assert np.all(w[0] == 0)
    assert np.allclose(w[1, 5:], 0.2)


def test_penultimate_slot_weight_is_one():
    p = RequestProfile.uniform_iid(2, 6)
    assert conditional_weight(p, 1, 5, 4) == pytest.approx(1.0)


def test_weights_zero_up_to_current_slot():
    w = conditional_weights(RequestProfile.uniform_iid(2, 6), 3)
    assert np.all(w[:, :4] == 0)


def test_conditional_weight_rejects_past_slot():
    with pytest.raises(ValueError):
        conditional_weight(RequestProfile.uniform_iid(2, 6), 0, 3, 3)


def test_never_mass_excluded_from_denominator():
    # requested with prob 0.2 per slot, 0.2 never; from slot 2: 0.4 of request mass left
    p = RequestProfile.iid([0.2] * 4, 1)
    assert conditional_weight(p, 0, 3, 1) == pytest.approx(0.2 / 0.4)


# --- replan ----------------------------------------------------------------------


def test_first_replan_equals_statistical_first_state():
    for L, N, K in [(10, 5, 200), (4, 3, 5), (6, 2, 9)]:
        p = RequestProfile.uniform_iid(L, K)
        config = SystemConfig(L, N, K)
        assert replan(CausalState(0, EMPTY, EMPTY), p, config) == statistical_plan(p, config)[0]


def test_first_replan_equals_statistical_common_tail_mass(rng):
    # Per-item normalisation at slot 0 is a common factor when every item
    # has the same request mass after slot 0, so the two problems coincide.
    for _ in range(20):
        L, K, N = 5, 6, 2
        q = rng.random((L, K))
        q[:, 1:] *= 0.8 / q[:, 1:].sum(axis=1, keepdims=True)
        q[:, 0] = 0.2
        p = RequestProfile(q, np.zeros(L))
        config = SystemConfig(L, N, K)
        assert replan(CausalState(0, EMPTY, EMPTY), p, config) == statistical_plan(p, config)[0]


def test_first_replan_uses_conditional_weights():
    # Without a common tail mass the slot-0 problems differ: item 1 is
    # mostly read in slot 0, so given it survives slot 0 it is likely in slot 1.
    q = np.array([[0.9, 0.06, 0.04], [0.0, 0.08, 0.92]])
    p = RequestProfile(q, np.zeros(2))
    config = SystemConfig(2, 1, 3)
    w = conditional_weights(p, 0)
    assert w[0, 1] == pytest.approx(0.6) and w[1, 1] == pytest.approx(0.08)
    assert statistical_plan(p, config)[0] == items(2)
    assert replan(CausalState(0, EMPTY, EMPTY), p, config) == items(1)


def test_all_outdated():
    p = RequestProfile.uniform_iid(3, 5)
    assert replan(CausalState(2, EMPTY, items(1, 2, 3)), p, SystemConfig(3, 2, 5)) == EMPTY


def test_replan_tie_break():
    p = RequestProfile.uniform_iid(3, 4)
    got = replan(CausalState(1, EMPTY, items(2)), p, SystemConfig(3, 1, 4))
    assert got == items(1)


def test_replan_last_slot_keeps_buffer():
    p = RequestProfile.uniform_iid(3, 4)
    assert replan(CausalState(3, items(2), EMPTY), p, SystemConfig(3, 2, 4)) == items(2)


def test_causal_state_rejects_outdated_in_buffer():
    with pytest.raises(ValueError):
        CausalState(1, items(1), items(1))


# --- run_causal ------------------------------------------------------------------


def test_all_never_fills_lexicographically():
    L, N, K = 5, 3, 8
    p = RequestProfile.iid([0.05] * K, L)
    trace = run_causal(SystemConfig(L, N, K), p, realization(*[None] * L))
    assert trace.total_hits == 0
    sizes = [len(s) for s in trace.state_before]
    assert sizes == [min(k, N, L) for k in range(K)]
    assert trace.state_before[-1] == items(1, 2, 3)


def test_single_item_hand_trace():
    config = SystemConfig(1, 1, 3)
    p = RequestProfile.uniform_iid(1, 3)
    trace = run_causal(config, p, realization(2))
    assert trace.pushed[0] == 0
    assert trace.hits == [0, 0, 1]
    assert trace.total_hits == 1
    # average over every realization equals both expectation calculators
    mean = np.mean([run_causal(config, p, realization(s)).total_hits for s in range(3)])
    assert mean == pytest.approx(2 / 3)
    assert analysis.causal_throughput_exact([1 / 3] * 3, 1, 1, 3).value == pytest.approx(2 / 3)
    assert analysis.causal_policy_throughput([1 / 3] * 3, 1, 1, 3).value == pytest.approx(2 / 3)


def _check_trace(config, trace, r):
    state = EMPTY
    outdated = set()
    for k in range(config.horizon):
        assert trace.state_before[k] == state
        assert len(state) <= config.buffer_size
        push = trace.pushed[k]
        if push is not None:
            assert push not in outdated, "pushed an outdated item"
        nxt = step_buffer(state, push, trace.removed[k], config)
        assert len(nxt - state) <= 1
        outdated |= trace.requested[k]
        assert not nxt & outdated, "requested item still cached"
        state = nxt


def _random_profile(rng, L, K, iid):
    if iid:
        raw = rng.random(K + 1)
        raw /= raw.sum()
        return RequestProfile.iid(raw[:K], L)
    raw = rng.random((L, K + 1)) ** 3
    raw /= raw.sum(axis=1, keepdims=True)
    return RequestProfile(raw[:, :K], raw[:, K])


@pytest.mark.parametrize("iid", [True, False])
def test_incremental_matches_from_scratch(iid):
    rng = np.random.default_rng(11 if iid else 12)
    for case in range(150):
        L, K, N = int(rng.integers(1, 7)), int(rng.integers(1, 9)), int(rng.integers(1, 4))
        p = _random_profile(rng, L, K, iid)
        config = SystemConfig(L, N, K)
        planner = CausalPlanner(p, config)
        for seed in range(3):
            r = sample_realization(p, 1000 * case + seed)
            fast = run_causal(config, p, r, planner=planner)
            slow = run_causal(config, p, r, incremental=False)
            assert fast.state_before == slow.state_before
            assert fast.pushed == slow.pushed
            assert fast.removed == slow.removed
            assert planner.total_hits(r) == slow.total_hits
            _check_trace(config, slow, r)


def test_policy_dp_matches_all_realizations():
    for L, N, K in [(3, 1, 4), (3, 2, 4), (4, 2, 3), (2, 2, 5)]:
        p = RequestProfile.uniform_iid(L, K)
        planner = CausalPlanner(p, SystemConfig(L, N, K))
        hits = [
            planner.total_hits(RequestRealization(np.array(s)))
            for s in itertools.product(range(K), repeat=L)
        ]
        want = analysis.causal_policy_throughput([1 / K] * K, L, N, K).value
        assert np.mean(hits) == pytest.approx(want, abs=1e-12)


# --- feedback payload ------------------------------------------------------------


def test_feedback_width():
    assert [feedback_width(L) for L in (1, 2, 3, 4, 5, 8, 9, 10)] == [1, 1, 2, 2, 3, 3, 4, 4]
    for L in range(2, 300):
        assert feedback_width(L) == math.ceil(math.log2(L))


@given(st.integers(2, 64), st.data())
def test_feedback_round_trip_and_bound(L, data):
    requested = frozenset(data.draw(st.sets(st.integers(0, L - 1))))
    payload, n_bits = encode_feedback(requested, L)
    assert n_bits <= L * math.ceil(math.log2(L))
    assert len(payload) * 8 >= n_bits
    assert decode_feedback(payload, n_bits, L) == requested


def test_feedback_bound_on_simulated_traces():
    L, N, K = 10, 5, 40
    p = RequestProfile.uniform_iid(L, K)
    config = SystemConfig(L, N, K)
    for seed in range(50):
        trace = run_causal(config, p, sample_realization(p, seed))
        for requested in trace.requested:
            payload, n_bits = encode_feedback(requested, L)
            assert n_bits <= L * math.ceil(math.log2(L))
            assert decode_feedback(payload, n_bits, L) == requested


def test_feedback_rejects_foreign_item():
    with pytest.raises(ValueError):
        encode_feedback({10}, 10)
