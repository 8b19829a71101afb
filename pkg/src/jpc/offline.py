"""Greedy offline policy: the request slot of every item is known up front.

Each slot the sender pushes the uncached item whose request comes soonest
(strictly after the current slot), provided the buffer has room once this
slot's read items are dropped. Items are removed only after being read.
"""

from __future__ import annotations

import numpy as np

from .model import (
    RequestRealization,
    SimTrace,
    SystemConfig,
    count_hits,
    requested_in_slot,
    step_buffer,
)


def offline_push(state, realization: RequestRealization, k: int, config: SystemConfig):
    """Item to push in slot ``k``, or ``None``.

    ``state`` is the buffer content that survives slot ``k``, i.e. with this
    slot's read items already taken out. Ties on the request slot go to the
    lowest item index; never-requested items are never pushed.
    """
    if len(state) >= config.buffer_size:
        return None
    slots = realization.request_slot
    eligible = slots >= k + 1
    if state:
        eligible[list(state)] = False
    if not eligible.any():
        return None
    candidates = np.flatnonzero(eligible)
    return int(candidates[np.argmin(slots[candidates])])


def offline_remove(state, requested) -> frozenset:
    return frozenset(state) & frozenset(requested)


def run_offline(config: SystemConfig, realization: RequestRealization) -> SimTrace:
    realization.check(config)
    trace = SimTrace()
    state = frozenset()
    for k in range(config.horizon):
        requested = requested_in_slot(realization, k)
        removed = offline_remove(state, requested)
        push = offline_push(state - removed, realization, k, config)
        trace.record(state, push, removed, requested, count_hits(state, requested))
        state = step_buffer(state, push, removed, config)
    return trace
