import os
import subprocess
import sys

import numpy as np
import pytest

from jpc import kernels
from jpc._jit import HAS_NUMBA
from jpc.model import RequestProfile, sample_realizations
from jpc.trellis import _grow_preds, _members, _same_size_preds

needs_numba = pytest.mark.skipif(not HAS_NUMBA, reason="numba not installed")


def _relax_inputs(rng, n, c, K, grow=False):
    members = _members(n, c)
    preds = _grow_preds(n, c) if grow else _same_size_preds(n, c)
    n_prev = _members(n, c - 1).shape[0] if grow else members.shape[0]
    gamma0 = rng.random(n_prev)
    gamma0[rng.random(n_prev) < 0.2] = -np.inf
    w = np.round(rng.random((n, K)) * 4) / 4  # coarse weights force ties
    return gamma0, members, preds, w


@needs_numba
@pytest.mark.parametrize("n,c", [(4, 1), (5, 2), (6, 3), (10, 5), (7, 7)])
def test_relax_flavours_bit_identical(n, c):
    rng = np.random.default_rng(n * 10 + c)
    gamma0, members, preds, w = _relax_inputs(rng, n, c, 12)
    a = kernels._relax_numpy(gamma0, members, preds, w, 1, 9)
    b = kernels._relax_numba(gamma0, members, preds, w, 1, 9)
    assert np.array_equal(a[0], b[0])
    assert np.array_equal(a[1], b[1])


@needs_numba
@pytest.mark.parametrize("n,c", [(4, 1), (5, 3), (8, 4)])
def test_grow_relax_flavours_bit_identical(n, c):
    rng = np.random.default_rng(n + c)
    gamma0, members, preds, w = _relax_inputs(rng, n, c, 5, grow=True)
    a = kernels._relax_numpy(gamma0, members, preds, w, 2, 1)
    b = kernels._relax_numba(gamma0, members, preds, w, 2, 1)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


@needs_numba
@pytest.mark.parametrize("L,N,K", [(1, 1, 1), (3, 1, 3), (10, 5, 200), (8, 3, 6)])
def test_offline_flavours_identical(L, N, K):
    p = RequestProfile.iid([0.9 / K] * K, L)  # includes never-requested items
    slots = sample_realizations(p, 17, 0, 500)
    assert np.array_equal(
        kernels._offline_hits_numpy(slots, N, K), kernels._offline_hits_numba(slots, N, K)
    )


def test_relax_prefers_first_predecessor_on_ties():
    members = _members(3, 1)
    preds = _same_size_preds(3, 1)
    gamma, back = kernels._relax_numpy(np.zeros(3), members, preds, np.zeros((3, 3)), 1, 1)
    assert back[0].tolist() == [0, 0, 0]


def test_env_flag_selects_numpy():
    code = "from jpc import kernels, _jit; print(_jit.USE_JIT, kernels.relax is kernels._relax_numpy)"
    env = dict(os.environ, JPC_DISABLE_JIT="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["False", "True"]


def test_pure_numpy_mode_gives_same_statistics(tmp_path):
    code = (
        "from jpc import sim; from jpc.model import RequestProfile, SystemConfig;"
        "r = [sim.monte_carlo(p, RequestProfile.uniform_iid(6, 30), SystemConfig(6, 2, 30), 300, 4)"
        " for p in sim.POLICIES];"
        "print([(x.mean_throughput, x.std_error) for x in r])"
    )
    outs = []
    for flag in ("0", "1"):
        env = dict(os.environ, JPC_DISABLE_JIT=flag)
        outs.append(
            subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True).stdout
        )
    assert outs[0] == outs[1]
