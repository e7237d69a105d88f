"""Backend equivalence: the jitted kernels must agree with their own
uncompiled numpy source."""

import numpy as np
import pytest

from catgain import kernels
from catgain._accel import NUMBA_ENABLED, pure

needs_numba = pytest.mark.skipif(not NUMBA_ENABLED, reason="numpy backend selected")


def _toy_net(rng):
    sizes = np.array([4, 5, 6], dtype=np.int64)
    acts = np.array([kernels.ACT_RELU, kernels.ACT_HEAD], dtype=np.int64)
    head_starts = np.array([0, 3, 5, 6], dtype=np.int64)
    head_kinds = np.array(
        [kernels.HEAD_SOFTMAX, kernels.HEAD_SIGMOID, kernels.HEAD_SIGMOID], dtype=np.int64
    )
    n_params = 5 * 5 + 6 * 6
    params = rng.normal(size=n_params)
    x = rng.normal(size=(7, 4))
    return params, sizes, acts, head_starts, head_kinds, x


@needs_numba
def test_forward_matches_python_source(rng):
    args = _toy_net(rng)
    jitted = kernels.mlp_forward(*args)
    plain = pure(kernels.mlp_forward)(*args)
    np.testing.assert_allclose(jitted, plain, rtol=1e-13, atol=1e-15)


@needs_numba
def test_backward_matches_python_source(rng):
    args = _toy_net(rng)
    cache = kernels.mlp_forward(*args)
    d_out = rng.normal(size=(7, 6))
    g1, dx1 = kernels.mlp_backward(*args[:5], cache, d_out)
    g2, dx2 = pure(kernels.mlp_backward)(*args[:5], cache, d_out)
    np.testing.assert_allclose(g1, g2, rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(dx1, dx2, rtol=1e-12, atol=1e-14)


@needs_numba
def test_adam_matches_python_source(rng):
    params = rng.normal(size=40)
    grads = rng.normal(size=40)
    a = [params.copy(), grads, np.zeros(40), np.zeros(40)]
    b = [params.copy(), grads, np.zeros(40), np.zeros(40)]
    assert kernels.adam_update(a[0], a[1], a[2], a[3], 1, 1e-3, 0.9, 0.999, 1e-8)
    assert pure(kernels.adam_update)(b[0], b[1], b[2], b[3], 1, 1e-3, 0.9, 0.999, 1e-8)
    np.testing.assert_allclose(a[0], b[0], rtol=1e-15)


@needs_numba
def test_rowmax_matches_numpy(rng):
    a = rng.normal(size=(11, 5))
    np.testing.assert_array_equal(kernels.rowmax(a), a.max(axis=1))


def test_adam_rejects_nonfinite_without_mutating(rng):
    params = rng.normal(size=8)
    before = params.copy()
    grads = np.ones(8)
    grads[3] = np.nan
    assert not kernels.adam_update(params, grads, np.zeros(8), np.zeros(8), 1, 1e-3, 0.9, 0.999, 1e-8)
    np.testing.assert_array_equal(params, before)


def test_warmup_runs():
    kernels.warmup()
