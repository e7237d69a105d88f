"""Minimal dense-network substrate: forward passes, exact manual gradients,
an adaptive first-order optimizer, and model persistence.

Parameters live in one flat float64 vector per network (see
:mod:`catgain.kernels` for the layout), which keeps the optimizer state
trivial and makes saved models plain row-major arrays.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import NumericError, SchemaError
from .kernels import (  # noqa: F401  (re-exported activation codes)
    ACT_HEAD,
    ACT_LINEAR,
    ACT_RELU,
    ACT_SIGMOID,
    ACT_TANH,
    HEAD_SIGMOID,
    HEAD_SOFTMAX,
)

_TRIVIAL_HEAD = (np.zeros(1, dtype=np.int64), np.zeros(0, dtype=np.int64))


def param_count(sizes) -> int:
    return int(sum(int(sizes[l + 1]) * (int(sizes[l]) + 1) for l in range(len(sizes) - 1)))


@dataclass
class Mlp:
    """A fully connected net with per-layer activations and flat parameters.

    ``head_starts``/``head_kinds`` describe the output block partition used
    by the ACT_HEAD activation (softmax over multiclass blocks, sigmoid
    elsewhere); they are ignored for other output activations.
    """

    sizes: np.ndarray
    acts: np.ndarray
    head_starts: np.ndarray
    head_kinds: np.ndarray
    params: np.ndarray

    def __post_init__(self):
        if self.acts.shape[0] != self.sizes.shape[0] - 1:
            raise SchemaError("need one activation per layer")
        if self.params.shape[0] != param_count(self.sizes):
            raise SchemaError(
                f"parameter vector has {self.params.shape[0]} entries, "
                f"layout needs {param_count(self.sizes)}"
            )

    @property
    def n_in(self) -> int:
        return int(self.sizes[0])

    @property
    def n_out(self) -> int:
        return int(self.sizes[-1])

    def forward(self, x: np.ndarray):
        """Run the net on a (batch, n_in) matrix; returns (output, cache)."""
        x = np.ascontiguousarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.n_in:
            raise SchemaError(f"input shape {x.shape} does not match input width {self.n_in}")
        cache = kernels.mlp_forward(
            self.params, self.sizes, self.acts, self.head_starts, self.head_kinds, x
        )
        out = cache[-x.shape[0] * self.n_out :].reshape(x.shape[0], self.n_out)
        return out, cache

    def backward(self, cache: np.ndarray, d_out: np.ndarray):
        """Backpropagate an output gradient through a cached forward pass.

        Returns (parameter gradients, input gradient).  ``d_out`` is the
        gradient with respect to the post-activation outputs.
        """
        d_out = np.ascontiguousarray(d_out, dtype=np.float64)
        b_rows = d_out.shape[0]
        if d_out.ndim != 2 or d_out.shape[1] != self.n_out:
            raise SchemaError(f"output gradient shape {d_out.shape} does not match width {self.n_out}")
        if cache.shape[0] != b_rows * int(self.sizes.sum()):
            raise SchemaError("activation cache does not match this net and batch size")
        return kernels.mlp_backward(
            self.params, self.sizes, self.acts, self.head_starts, self.head_kinds, cache, d_out
        )

    def copy(self) -> "Mlp":
        return Mlp(self.sizes, self.acts, self.head_starts, self.head_kinds, self.params.copy())


def init_params(sizes, rng: np.random.Generator) -> np.ndarray:
    """Uniform +-sqrt(6/(fan_in+fan_out)) weights, zero biases."""
    params = np.zeros(param_count(sizes))
    off = 0
    for l in range(len(sizes) - 1):
        n_in, n_out = int(sizes[l]), int(sizes[l + 1])
        limit = np.sqrt(6.0 / (n_in + n_out))
        params[off : off + n_out * n_in] = rng.uniform(-limit, limit, size=n_out * n_in)
        off += n_out * (n_in + 1)
    return params


def make_mlp(layer_sizes, activations, rng: np.random.Generator,
             head_starts=None, head_kinds=None) -> Mlp:
    sizes = np.asarray(layer_sizes, dtype=np.int64)
    acts = np.asarray(activations, dtype=np.int64)
    if head_starts is None:
        head_starts, head_kinds = _TRIVIAL_HEAD
    return Mlp(
        sizes=sizes,
        acts=acts,
        head_starts=np.asarray(head_starts, dtype=np.int64),
        head_kinds=np.asarray(head_kinds, dtype=np.int64),
        params=init_params(sizes, rng),
    )


@dataclass
class Adam:
    """Adaptive moment estimation over one flat parameter vector."""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    m: np.ndarray = field(default=None, repr=False)
    v: np.ndarray = field(default=None, repr=False)
    step: int = 0

    @classmethod
    def for_params(cls, params: np.ndarray, lr: float = 1e-3, **kw) -> "Adam":
        return cls(lr=lr, m=np.zeros_like(params), v=np.zeros_like(params), **kw)

    def update(self, params: np.ndarray, grads: np.ndarray) -> np.ndarray:
        """One in-place step; raises NumericError on non-finite gradients."""
        if grads.shape != params.shape or params.shape != self.m.shape:
            raise SchemaError("optimizer state does not match parameter shape")
        self.step += 1
        ok = kernels.adam_update(
            params, grads, self.m, self.v, self.step, self.lr, self.beta1, self.beta2, self.eps
        )
        if not ok:
            self.step -= 1
            raise NumericError("non-finite gradient in optimizer step")
        return params


_MAGIC = b"CGNET1\n"


def save_model(path, nets: dict[str, Mlp], schema_hash: str, meta: dict | None = None) -> None:
    """Write named nets to a versioned binary file.

    Header: magic, uint32 little-endian JSON length, JSON (schema hash, layer
    dimensions, activation tags, metadata); body: the row-major float64
    parameter vectors of the nets in sorted name order.
    """
    header = {
        "format": 1,
        "schema_hash": schema_hash,
        "meta": meta or {},
        "nets": {
            name: {
                "sizes": net.sizes.tolist(),
                "acts": net.acts.tolist(),
                "head_starts": net.head_starts.tolist(),
                "head_kinds": net.head_kinds.tolist(),
            }
            for name, net in sorted(nets.items())
        },
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for name in sorted(nets):
            fh.write(np.ascontiguousarray(nets[name].params, dtype="<f8").tobytes())


def load_model(path, expect_schema_hash: str | None = None):
    """Read a model file; returns (nets, schema_hash, meta).

    Rejects unknown formats and, when ``expect_schema_hash`` is given, any
    schema-hash mismatch.
    """
    with open(path, "rb") as fh:
        magic = fh.read(len(_MAGIC))
        if magic != _MAGIC:
            raise SchemaError(f"{path}: not a model file (bad magic)")
        (hlen,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(hlen).decode("utf-8"))
        if header.get("format") != 1:
            raise SchemaError(f"{path}: unsupported model format {header.get('format')!r}")
        if expect_schema_hash is not None and header["schema_hash"] != expect_schema_hash:
            raise SchemaError(
                f"{path}: model was built for schema {header['schema_hash']}, "
                f"expected {expect_schema_hash}"
            )
        nets = {}
        for name in sorted(header["nets"]):
            spec = header["nets"][name]
            sizes = np.asarray(spec["sizes"], dtype=np.int64)
            count = param_count(sizes)
            params = np.frombuffer(fh.read(count * 8), dtype="<f8").astype(np.float64)
            if params.shape[0] != count:
                raise SchemaError(f"{path}: truncated parameter block for net {name!r}")
            nets[name] = Mlp(
                sizes=sizes,
                acts=np.asarray(spec["acts"], dtype=np.int64),
                head_starts=np.asarray(spec["head_starts"], dtype=np.int64),
                head_kinds=np.asarray(spec["head_kinds"], dtype=np.int64),
                params=params,
            )
    return nets, header["schema_hash"], header["meta"]
