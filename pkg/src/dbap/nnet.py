"""Minimal dense numerical kernel with reverse-mode gradients.

Covers exactly what the biaffine head needs: matrices up to three
axes, feedforward layers, bilinear forms with an augmented bias
column, ReLU, softmax cross-entropy, inverted dropout, and Adam with
decoupled weight decay and per-group learning rates. All math is
float64.
"""

from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import CheckpointError

_CHECKED = True


def set_checked(enabled: bool) -> bool:
    """Toggle NaN/Inf rejection at tensor construction; returns the old value."""
    global _CHECKED
    old = _CHECKED
    _CHECKED = enabled
    return old


def checked() -> bool:
    return _CHECKED


class GraphStaleError(RuntimeError):
    """A recorded graph was replayed after one of its tensors changed."""


class Tensor:
    """A float64 array node in a dynamically recorded computation graph."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "_version")

    def __init__(self, data, requires_grad: bool = False):
        arr = np.asarray(data, dtype=np.float64)
        if _CHECKED and not np.all(np.isfinite(arr)):
            raise ValueError("tensor rejected: non-finite entries")
        if arr.ndim > 3:
            raise ValueError(f"tensors support up to 3 axes, got {arr.ndim}")
        self.data = arr
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents: tuple[tuple["Tensor", int], ...] = ()
        self._backward: Callable[[np.ndarray], None] | None = None
        self._version = 0

    # -- bookkeeping ---------------------------------------------------

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def assign(self, data: np.ndarray):
        """Replace the stored value (optimizer updates); invalidates graphs."""
        arr = np.asarray(data, dtype=np.float64)
        if arr.shape != self.data.shape:
            raise ValueError("assign must preserve the shape")
        self.data = arr
        self._version += 1

    def detach(self) -> "Tensor":
        return Tensor(self.data.copy())

    def _accumulate(self, g: np.ndarray):
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def backward(self):
        """Reverse-mode gradients of this scalar into every ancestor."""
        if self.data.shape != ():
            raise ValueError("backward requires a scalar loss")
        order: list[Tensor] = []
        seen: set[int] = set()

        def topo(node: Tensor):
            if id(node) in seen:
                return
            seen.add(id(node))
            for parent, version in node._parents:
                if parent._version != version:
                    raise GraphStaleError(
                        "graph is stale: a tensor changed after recording"
                    )
                topo(parent)
            order.append(node)

        topo(self)
        self._accumulate(np.asarray(1.0))
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    # -- operator sugar -------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return mul(self, -1.0)

    def __sub__(self, other):
        return add(self, mul(_as_tensor(other), -1.0))

    def __matmul__(self, other):
        return matmul(self, other)

    def relu(self) -> "Tensor":
        return relu(self)

    def sum(self) -> "Tensor":
        return tsum(self)

    def transpose(self) -> "Tensor":
        return transpose(self)


def _as_tensor(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def _make(data: np.ndarray, parents: Sequence[Tensor], backward) -> Tensor:
    out = Tensor(data)
    if any(p.requires_grad or p._parents for p in parents):
        out.requires_grad = any(p.requires_grad for p in parents)
        out._parents = tuple((p, p._version) for p in parents)
        out._backward = backward
    return out


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Reduce a broadcast gradient back to the operand's shape."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g.reshape(shape)


# -- primitive ops -------------------------------------------------------


def add(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    data = a.data + b.data

    def backward(g):
        a._accumulate(_unbroadcast(g, a.data.shape))
        b._accumulate(_unbroadcast(g, b.data.shape))

    return _make(data, (a, b), backward)


def mul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    ad, bd = a.data, b.data
    data = ad * bd

    def backward(g):
        a._accumulate(_unbroadcast(g * bd, ad.shape))
        b._accumulate(_unbroadcast(g * ad, bd.shape))

    return _make(data, (a, b), backward)


def matmul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    if a.data.ndim != 2 or b.data.ndim != 2 or a.data.shape[1] != b.data.shape[0]:
        raise ValueError(f"matmul shape mismatch: {a.data.shape} @ {b.data.shape}")
    ad, bd = a.data, b.data
    data = ad @ bd

    def backward(g):
        a._accumulate(g @ bd.T)
        b._accumulate(ad.T @ g)

    return _make(data, (a, b), backward)


def relu(a) -> Tensor:
    a = _as_tensor(a)
    mask = a.data > 0

    def backward(g):
        a._accumulate(g * mask)

    return _make(a.data * mask, (a,), backward)


def tsum(a) -> Tensor:
    a = _as_tensor(a)
    shape = a.data.shape

    def backward(g):
        a._accumulate(np.broadcast_to(g, shape).copy() if shape else np.asarray(g))

    return _make(np.asarray(a.data.sum()), (a,), backward)


def reshape(a, shape: tuple[int, ...]) -> Tensor:
    a = _as_tensor(a)
    old = a.data.shape

    def backward(g):
        a._accumulate(g.reshape(old))

    return _make(a.data.reshape(shape), (a,), backward)


def transpose(a) -> Tensor:
    a = _as_tensor(a)
    if a.data.ndim != 2:
        raise ValueError("transpose expects a matrix")

    def backward(g):
        a._accumulate(g.T)

    return _make(a.data.T.copy(), (a,), backward)


def augment_ones(a) -> Tensor:
    """Append a constant-1 column to a matrix (bias terms of bilinear forms)."""
    a = _as_tensor(a)
    if a.data.ndim != 2:
        raise ValueError("augment_ones expects a matrix")
    m = a.data.shape[0]
    data = np.hstack([a.data, np.ones((m, 1))])

    def backward(g):
        a._accumulate(g[:, :-1])

    return _make(data, (a,), backward)


def gather_rows(a, indices: Sequence[int]) -> Tensor:
    a = _as_tensor(a)
    idx = np.asarray(indices, dtype=np.intp)
    if a.data.ndim != 2:
        raise ValueError("gather_rows expects a matrix")

    def backward(g):
        full = np.zeros_like(a.data)
        np.add.at(full, idx, g)
        a._accumulate(full)

    return _make(a.data[idx], (a,), backward)


def concat_cols(parts: Sequence[Tensor]) -> Tensor:
    parts = [_as_tensor(p) for p in parts]
    widths = [p.data.shape[1] for p in parts]
    data = np.hstack([p.data for p in parts])

    def backward(g):
        offset = 0
        for p, w in zip(parts, widths):
            p._accumulate(g[:, offset : offset + w])
            offset += w

    return _make(data, tuple(parts), backward)


def stack_cols(vectors: Sequence[Tensor]) -> Tensor:
    """Stack 1-D tensors as the columns of a matrix."""
    vectors = [_as_tensor(v) for v in vectors]
    data = np.stack([v.data for v in vectors], axis=1)

    def backward(g):
        for j, v in enumerate(vectors):
            v._accumulate(g[:, j])

    return _make(data, tuple(vectors), backward)


def vecdot_last(a, v) -> Tensor:
    """Contract the last axis of a 3-axis tensor with a vector."""
    a, v = _as_tensor(a), _as_tensor(v)
    if a.data.ndim != 3 or v.data.ndim != 1 or a.data.shape[2] != v.data.shape[0]:
        raise ValueError(f"vecdot_last shape mismatch: {a.data.shape} . {v.data.shape}")
    ad, vd = a.data, v.data
    data = ad @ vd

    def backward(g):
        a._accumulate(g[..., None] * vd[None, None, :])
        v._accumulate(np.tensordot(ad, g, axes=([0, 1], [0, 1])))

    return _make(data, (a, v), backward)


def softmax_xent_rows(logits, gold: Sequence[int]) -> Tensor:
    """Summed cross-entropy of each row against its gold class index."""
    logits = _as_tensor(logits)
    if logits.data.ndim != 2:
        raise ValueError("softmax_xent_rows expects a matrix of logits")
    idx = np.asarray(gold, dtype=np.intp)
    if idx.shape[0] != logits.data.shape[0]:
        raise ValueError("one gold index per row required")
    z = logits.data
    zmax = z.max(axis=1, keepdims=True)
    exp = np.exp(z - zmax)
    softmax = exp / exp.sum(axis=1, keepdims=True)
    logsumexp = np.log(exp.sum(axis=1)) + zmax[:, 0]
    losses = logsumexp - z[np.arange(len(idx)), idx]

    def backward(g):
        grad = softmax.copy()
        grad[np.arange(len(idx)), idx] -= 1.0
        logits._accumulate(g * grad)

    return _make(np.asarray(losses.sum()), (logits,), backward)


def softmax_xent(scores: np.ndarray, gold_index: int) -> tuple[float, np.ndarray]:
    """Loss and gradient of one softmax cross-entropy row (plain numpy)."""
    z = np.asarray(scores, dtype=np.float64)
    zmax = z.max()
    exp = np.exp(z - zmax)
    softmax = exp / exp.sum()
    loss = float(np.log(exp.sum()) + zmax - z[gold_index])
    grad = softmax.copy()
    grad[gold_index] -= 1.0
    return loss, grad


def dropout(x: Tensor, rate: float, rng, training: bool) -> Tensor:
    """Inverted dropout during training; identity at inference.

    ``rng`` is a numpy Generator or a seed for one.
    """
    if not training or rate == 0.0:
        return x
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate {rate} outside [0, 1)")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    mask = (rng.random(x.data.shape) >= rate) / (1.0 - rate)
    return mul(x, Tensor(mask))


# -- layers ---------------------------------------------------------------


IDENTITY = "identity"
RELU = "relu"


@dataclass
class FFLayer:
    """Dense layer ``act(XW + b)`` with identity or ReLU activation."""

    W: Tensor
    b: Tensor
    activation: str = IDENTITY

    def __post_init__(self):
        if self.activation not in (IDENTITY, RELU):
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.W.data.ndim != 2 or self.b.data.shape != (self.W.data.shape[1],):
            raise ValueError("layer parameter shapes are inconsistent")

    @classmethod
    def init(
        cls, d_in: int, d_out: int, rng: np.random.Generator, activation: str = RELU
    ) -> "FFLayer":
        bound = np.sqrt(6.0 / (d_in + d_out))
        W = Tensor(rng.uniform(-bound, bound, size=(d_in, d_out)), requires_grad=True)
        b = Tensor(np.zeros(d_out), requires_grad=True)
        return cls(W=W, b=b, activation=activation)

    def __call__(self, X: Tensor) -> Tensor:
        out = add(matmul(X, self.W), self.b)
        return relu(out) if self.activation == RELU else out

    @property
    def params(self) -> list[Tensor]:
        return [self.W, self.b]


def ff_forward(layer: FFLayer, X) -> Tensor:
    return layer(_as_tensor(X))


def bilinear_scores(dep: Tensor, par: Tensor, U: Tensor, bias) -> Tensor:
    """Score every (dependent row, parent row) pair with a bilinear form.

    Both inputs get a constant-1 column appended, so ``U`` must be
    ``(d + 1) x (d + 1)``; the output cell ``[i, j]`` scores dependent
    ``i`` against candidate parent ``j``, plus a shared bias.
    """
    dep, par, U = _as_tensor(dep), _as_tensor(par), _as_tensor(U)
    d = dep.data.shape[1]
    if par.data.shape[1] != d:
        raise ValueError("dependent and parent representations disagree on width")
    if U.data.shape != (d + 1, d + 1):
        raise ValueError(f"bilinear tensor must be {(d + 1, d + 1)}, got {U.data.shape}")
    scores = matmul(matmul(augment_ones(dep), U), transpose(augment_ones(par)))
    return add(scores, bias)


# -- optimizer ------------------------------------------------------------


@dataclass
class ParamGroup:
    params: list[Tensor]
    lr: float
    weight_decay: float = 0.0


class Adam:
    """Adam with bias correction and decoupled weight decay."""

    def __init__(
        self,
        groups: Sequence[ParamGroup],
        beta1: float = 0.9,
        beta2: float = 0.9,
        eps: float = 1e-8,
    ):
        self.groups = list(groups)
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self._m: dict[int, np.ndarray] = {}
        self._v: dict[int, np.ndarray] = {}

    def zero_grad(self):
        for group in self.groups:
            for p in group.params:
                p.grad = None

    def step(self):
        self.step_count += 1
        bc1 = 1.0 - self.beta1 ** self.step_count
        bc2 = 1.0 - self.beta2 ** self.step_count
        for group in self.groups:
            for p in group.params:
                g = p.grad if p.grad is not None else np.zeros_like(p.data)
                key = id(p)
                if key not in self._m:
                    self._m[key] = np.zeros_like(p.data)
                    self._v[key] = np.zeros_like(p.data)
                m = self._m[key]
                v = self._v[key]
                m *= self.beta1
                m += (1.0 - self.beta1) * g
                v *= self.beta2
                v += (1.0 - self.beta2) * g * g
                update = (m / bc1) / (np.sqrt(v / bc2) + self.eps)
                new = p.data - group.lr * update
                if group.weight_decay:
                    new = new - group.lr * group.weight_decay * p.data
                p.assign(new)


# -- checkpoint i/o --------------------------------------------------------

_CKPT_MAGIC = b"NNCP"
_CKPT_VERSION = 1


def save_tensors(path: str | Path, named: Mapping[str, np.ndarray], meta: dict):
    """Versioned binary checkpoint: JSON header plus raw little-endian f64."""
    entries = []
    blobs = []
    for name, arr in named.items():
        arr = np.asarray(arr, dtype=np.float64)
        entries.append({"name": name, "shape": list(arr.shape)})
        blobs.append(arr.astype("<f8").tobytes())
    header = json.dumps({"meta": meta, "tensors": entries}).encode("utf-8")
    payload = bytearray()
    payload += _CKPT_MAGIC
    payload += struct.pack("<HI", _CKPT_VERSION, len(header))
    payload += header
    for blob in blobs:
        payload += blob
    payload += struct.pack("<I", zlib.crc32(bytes(payload)))
    Path(path).write_bytes(bytes(payload))


def load_tensors(path: str | Path) -> tuple[dict[str, np.ndarray], dict]:
    raw = Path(path).read_bytes()
    if len(raw) < 14 or raw[:4] != _CKPT_MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint file")
    stored = struct.unpack("<I", raw[-4:])[0]
    if zlib.crc32(raw[:-4]) != stored:
        raise CheckpointError(f"{path}: checksum mismatch")
    version, header_len = struct.unpack_from("<HI", raw, 4)
    if version != _CKPT_VERSION:
        raise CheckpointError(f"{path}: unsupported version {version}")
    header = json.loads(raw[10 : 10 + header_len].decode("utf-8"))
    pos = 10 + header_len
    named: dict[str, np.ndarray] = {}
    for entry in header["tensors"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(raw, dtype="<f8", count=count, offset=pos).copy()
        named[entry["name"]] = arr.reshape(shape)
        pos += 8 * count
    if pos != len(raw) - 4:
        raise CheckpointError(f"{path}: trailing or missing tensor data")
    return named, header["meta"]
