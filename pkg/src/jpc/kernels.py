"""Hot inner loops, each in a numba and a pure-numpy flavour.

The public names at the bottom dispatch on :data:`jpc._jit.USE_JIT`. Both
flavours perform the same floating-point operations in the same order, so
their results are bit-identical.
"""

import numpy as np

from ._jit import USE_JIT, njit

NEG_INF = -np.inf


# --- trellis relaxation ------------------------------------------------------


def _relax_numpy(gamma0, members, preds, weights, j0, steps):
    """Run ``steps`` survival-path updates starting from slice scores ``gamma0``.

    ``members[x]`` lists the (local) items of state ``x`` in ascending order,
    ``preds[x]`` the ascending indices of its admissible predecessors and
    ``weights[i, j]`` the reward of item ``i`` in slot ``j``. Slot ``j0 + t``
    is scored at step ``t``. Returns the final scores and the chosen
    predecessor of every state at every step.
    """
    n_states = members.shape[0]
    rows = np.arange(n_states)
    back = np.empty((steps, n_states), dtype=np.int32)
    gamma = gamma0
    for t in range(steps):
        j = j0 + t
        reward = np.zeros(n_states)
        for p in range(members.shape[1]):
            reward = reward + weights[members[:, p], j]
        cand = gamma[preds]
        arg = np.argmax(cand, axis=1)
        back[t] = preds[rows, arg]
        gamma = cand[rows, arg] + reward
    return gamma, back


@njit(cache=True)
def _relax_numba(gamma0, members, preds, weights, j0, steps):
    n_states = members.shape[0]
    width = members.shape[1]
    n_preds = preds.shape[1]
    back = np.empty((steps, n_states), dtype=np.int32)
    gamma = gamma0.copy()
    nxt = np.empty(n_states)
    for t in range(steps):
        j = j0 + t
        for x in range(n_states):
            reward = 0.0
            for p in range(width):
                reward = reward + weights[members[x, p], j]
            best_arg = preds[x, 0]
            best = gamma[best_arg]
            for u in range(1, n_preds):
                cand = preds[x, u]
                if gamma[cand] > best:
                    best = gamma[cand]
                    best_arg = cand
            back[t, x] = best_arg
            nxt[x] = best + reward
        if t + 1 < steps:
            gamma = nxt.copy()
        else:
            gamma = nxt
    return gamma, back


# --- offline greedy policy over a batch of realizations -----------------------


def _offline_hits_numpy(slots, buffer_size, horizon):
    """Total hits of the greedy offline policy for each row of ``slots``."""
    n_trials, n_items = slots.shape
    rows = np.arange(n_trials)
    cached = np.zeros((n_trials, n_items), dtype=np.bool_)
    count = np.zeros(n_trials, dtype=np.int64)
    hits = np.zeros(n_trials, dtype=np.int64)
    # Items ranked by (request slot, index); NEVER items rank last.
    big = horizon * n_items + n_items
    rank = np.where(slots >= 0, slots * n_items + np.arange(n_items), big)
    for k in range(horizon):
        read = cached & (slots == k)
        n_read = read.sum(axis=1)
        hits += n_read
        cached &= ~read
        count -= n_read
        eligible = ~cached & (slots >= k + 1)
        key = np.where(eligible, rank, big)
        pick = np.argmin(key, axis=1)
        push = (count < buffer_size) & (key[rows, pick] < big)
        cached[rows[push], pick[push]] = True
        count += push
    return hits


@njit(cache=True)
def _offline_hits_numba(slots, buffer_size, horizon):
    n_trials, n_items = slots.shape
    hits = np.zeros(n_trials, dtype=np.int64)
    cached = np.zeros(n_items, dtype=np.bool_)
    for r in range(n_trials):
        cached[:] = False
        count = 0
        total = 0
        for k in range(horizon):
            for i in range(n_items):
                if cached[i] and slots[r, i] == k:
                    cached[i] = False
                    count -= 1
                    total += 1
            if count < buffer_size:
                pick = -1
                best = horizon
                for i in range(n_items):
                    s = slots[r, i]
                    if not cached[i] and s >= k + 1 and s < best:
                        best = s
                        pick = i
                if pick >= 0:
                    cached[pick] = True
                    count += 1
        hits[r] = total
    return hits


if USE_JIT:
    relax = _relax_numba
    offline_hits_batch = _offline_hits_numba
else:
    relax = _relax_numpy
    offline_hits_batch = _offline_hits_numpy
