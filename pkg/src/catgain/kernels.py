"""Hot numeric kernels: dense forward/backward passes and the Adam update.

One source serves two backends.  Each kernel is written against the numpy
array API and compiled with numba when enabled (see :mod:`catgain._accel`);
with ``CATGAIN_NUMBA=0`` the very same function bodies run as plain numpy.

Network layout convention: parameters of an L-layer net live in one flat
float64 vector; layer l contributes its (out x in) weight matrix in row-major
order followed by its bias vector.  A forward pass returns a flat activation
cache laid out as the concatenation of the (batch x width) post-activation
matrices of every layer, input included.  Post-activations are all the
backward pass needs: relu/sigmoid/tanh derivatives and the softmax Jacobian
are functions of the outputs alone.
"""

import numpy as np

from ._accel import NUMBA_ENABLED, jit

ACT_RELU = 0
ACT_SIGMOID = 1
ACT_LINEAR = 2
ACT_TANH = 3
ACT_HEAD = 4  # per-block softmax / sigmoid over an output partition

HEAD_SOFTMAX = 0
HEAD_SIGMOID = 1


def _rowmax_loop(a):
    out = np.empty(a.shape[0])
    for i in range(a.shape[0]):
        m = a[i, 0]
        for j in range(1, a.shape[1]):
            if a[i, j] > m:
                m = a[i, j]
        out[i] = m
    return out


def _rowmax_numpy(a):
    return a.max(axis=1)


# numba has no axis argument for max(); the loop compiles to the same thing
rowmax = jit(_rowmax_loop) if NUMBA_ENABLED else _rowmax_numpy


def _mlp_forward(params, sizes, acts, head_starts, head_kinds, x):
    n_layers = acts.shape[0]
    b_rows = x.shape[0]
    total = 0
    for i in range(sizes.shape[0]):
        total += sizes[i]
    cache = np.empty(b_rows * total)

    a_in = cache[: b_rows * sizes[0]].reshape(b_rows, sizes[0])
    a_in[:, :] = x

    c_off = b_rows * sizes[0]
    p_off = 0
    for l in range(n_layers):
        n_in = sizes[l]
        n_out = sizes[l + 1]
        w = params[p_off : p_off + n_out * n_in].reshape(n_out, n_in)
        b = params[p_off + n_out * n_in : p_off + n_out * (n_in + 1)]
        p_off += n_out * (n_in + 1)

        a_out = cache[c_off : c_off + b_rows * n_out].reshape(b_rows, n_out)
        z = np.dot(a_in, w.T) + b
        act = acts[l]
        if act == ACT_RELU:
            a_out[:, :] = np.maximum(z, 0.0)
        elif act == ACT_SIGMOID:
            a_out[:, :] = 1.0 / (1.0 + np.exp(-z))
        elif act == ACT_TANH:
            a_out[:, :] = np.tanh(z)
        elif act == ACT_LINEAR:
            a_out[:, :] = z
        else:  # ACT_HEAD
            for nb in range(head_kinds.shape[0]):
                s = head_starts[nb]
                e = head_starts[nb + 1]
                blk = z[:, s:e]
                if head_kinds[nb] == HEAD_SOFTMAX:
                    mx = rowmax(blk).reshape(-1, 1)
                    ex = np.exp(blk - mx)
                    a_out[:, s:e] = ex / ex.sum(axis=1).reshape(-1, 1)
                else:
                    a_out[:, s:e] = 1.0 / (1.0 + np.exp(-blk))
        a_in = a_out
        c_off += b_rows * n_out
    return cache


def _mlp_backward(params, sizes, acts, head_starts, head_kinds, cache, d_out):
    n_layers = acts.shape[0]
    b_rows = d_out.shape[0]
    grads = np.zeros(params.shape[0])

    c_offs = np.empty(sizes.shape[0], dtype=np.int64)
    off = 0
    for i in range(sizes.shape[0]):
        c_offs[i] = off
        off += b_rows * sizes[i]
    p_offs = np.empty(n_layers, dtype=np.int64)
    off = 0
    for l in range(n_layers):
        p_offs[l] = off
        off += sizes[l + 1] * (sizes[l] + 1)

    d_a = d_out.copy()
    for l in range(n_layers - 1, -1, -1):
        n_in = sizes[l]
        n_out = sizes[l + 1]
        a_out = cache[c_offs[l + 1] : c_offs[l + 1] + b_rows * n_out].reshape(b_rows, n_out)
        a_in = cache[c_offs[l] : c_offs[l] + b_rows * n_in].reshape(b_rows, n_in)
        act = acts[l]
        if act == ACT_RELU:
            d_z = np.where(a_out > 0.0, d_a, 0.0)
        elif act == ACT_SIGMOID:
            d_z = d_a * a_out * (1.0 - a_out)
        elif act == ACT_TANH:
            d_z = d_a * (1.0 - a_out * a_out)
        elif act == ACT_LINEAR:
            d_z = d_a.copy()
        else:  # ACT_HEAD
            d_z = np.empty((b_rows, n_out))
            for nb in range(head_kinds.shape[0]):
                s = head_starts[nb]
                e = head_starts[nb + 1]
                y = a_out[:, s:e]
                da = d_a[:, s:e]
                if head_kinds[nb] == HEAD_SOFTMAX:
                    inner = (y * da).sum(axis=1).reshape(-1, 1)
                    d_z[:, s:e] = y * (da - inner)
                else:
                    d_z[:, s:e] = da * y * (1.0 - y)
        p0 = p_offs[l]
        w = params[p0 : p0 + n_out * n_in].reshape(n_out, n_in)
        g_w = grads[p0 : p0 + n_out * n_in].reshape(n_out, n_in)
        g_b = grads[p0 + n_out * n_in : p0 + n_out * (n_in + 1)]
        g_w[:, :] = np.dot(np.ascontiguousarray(d_z.T), a_in)
        g_b[:] = d_z.sum(axis=0)
        d_a = np.dot(d_z, w)
    return grads, d_a


def _adam_update(params, grads, m, v, step, lr, beta1, beta2, eps):
    if not np.all(np.isfinite(grads)):
        return False
    c1 = 1.0 - beta1 ** step
    c2 = 1.0 - beta2 ** step
    m[:] = beta1 * m + (1.0 - beta1) * grads
    v[:] = beta2 * v + (1.0 - beta2) * grads * grads
    params -= lr * (m / c1) / (np.sqrt(v / c2) + eps)
    return True


mlp_forward = jit(_mlp_forward)
mlp_backward = jit(_mlp_backward)
adam_update = jit(_adam_update)


def warmup() -> None:
    """Trigger JIT compilation of all kernels (no-op on the numpy backend)."""
    sizes = np.array([2, 3, 2], dtype=np.int64)
    acts = np.array([ACT_RELU, ACT_HEAD], dtype=np.int64)
    hs = np.array([0, 1, 2], dtype=np.int64)
    hk = np.array([HEAD_SIGMOID, HEAD_SIGMOID], dtype=np.int64)
    params = np.linspace(-0.5, 0.5, 17)
    x = np.ones((1, 2))
    cache = mlp_forward(params, sizes, acts, hs, hk, x)
    grads, _ = mlp_backward(params, sizes, acts, hs, hk, cache, np.ones((1, 2)))
    adam_update(params.copy(), grads, np.zeros(17), np.zeros(17), 1, 1e-3, 0.9, 0.999, 1e-8)
