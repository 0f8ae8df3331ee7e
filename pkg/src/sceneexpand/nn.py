"""Minimal reverse-mode autodiff with just the layers the expansion model needs.

Everything is float64. A Tensor wraps an ndarray, remembers its parents and a
backward closure; `backward` walks the recorded graph once in reverse
topological order. Parameters are Tensors with requires_grad=True, owned by
layer objects as name -> Tensor dicts so the optimizer and checkpoints can
address them uniformly.
"""

from __future__ import annotations

import json
import struct
from typing import Callable, Sequence

import numpy as np


class NnError(Exception):
    pass


class BackwardReuseError(NnError):
    """backward() called twice on the same recorded graph."""


class NanGradientError(NnError):
    """A gradient contained NaN; the optimizer step was aborted."""


class CheckpointFormatError(NnError):
    pass


class Tensor:
    __slots__ = ("value", "grad", "requires_grad", "_parents", "_backward", "_done")

    def __init__(self, value, requires_grad: bool = False, _parents=(), _backward=None):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = _parents
        self._backward: Callable[[np.ndarray], None] | None = _backward
        self._done = False

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        return f"Tensor(shape={self.value.shape}, grad={'set' if self.grad is not None else 'none'})"

    # -- operator sugar ------------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return add(self, mul(other, -1.0))

    def __rsub__(self, other):
        return add(mul(self, -1.0), other)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(self, other)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def item(self) -> float:
        return float(self.value)

    def backward(self) -> None:
        """Populate .grad for every reachable tensor with requires_grad."""
        if self._done:
            raise BackwardReuseError("backward() already ran on this graph; re-run forward first")
        topo: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in seen:
                    stack.append((p, False))
        grads: dict[int, np.ndarray] = {id(self): np.ones_like(self.value)}
        for node in reversed(topo):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node.requires_grad:
                node.grad = g if node.grad is None else node.grad + g
            if node._backward is not None:
                for parent, pg in node._backward(g):
                    key = id(parent)
                    if key in grads:
                        grads[key] = grads[key] + pg
                    else:
                        grads[key] = pg
            node._done = True
        self._done = True


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum grad over axes introduced or expanded by numpy broadcasting."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad.reshape(shape)


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out_val = a.value + b.value

    def back(g):
        return ((a, _unbroadcast(g, a.value.shape)), (b, _unbroadcast(g, b.value.shape)))

    return Tensor(out_val, _parents=(a, b), _backward=back)


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out_val = a.value * b.value

    def back(g):
        return (
            (a, _unbroadcast(g * b.value, a.value.shape)),
            (b, _unbroadcast(g * a.value, b.value.shape)),
        )

    return Tensor(out_val, _parents=(a, b), _backward=back)


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out_val = a.value @ b.value

    def back(g):
        ga = g @ b.value.T if a.value.ndim > 1 else b.value @ g
        gb = a.value.T @ g if a.value.ndim > 1 else np.outer(a.value, g)
        return ((a, ga.reshape(a.value.shape)), (b, gb.reshape(b.value.shape)))

    return Tensor(out_val, _parents=(a, b), _backward=back)


def sigmoid(x) -> Tensor:
    x = as_tensor(x)
    s = 1.0 / (1.0 + np.exp(-x.value))

    def back(g):
        return ((x, g * s * (1.0 - s)),)

    return Tensor(s, _parents=(x,), _backward=back)


def tanh(x) -> Tensor:
    x = as_tensor(x)
    t = np.tanh(x.value)

    def back(g):
        return ((x, g * (1.0 - t * t)),)

    return Tensor(t, _parents=(x,), _backward=back)


def exp(x) -> Tensor:
    x = as_tensor(x)
    e = np.exp(x.value)

    def back(g):
        return ((x, g * e),)

    return Tensor(e, _parents=(x,), _backward=back)


def log(x) -> Tensor:
    x = as_tensor(x)

    def back(g):
        return ((x, g / x.value),)

    return Tensor(np.log(x.value), _parents=(x,), _backward=back)


def tsum(x, axis=None) -> Tensor:
    x = as_tensor(x)
    out_val = x.value.sum(axis=axis)

    def back(g):
        if axis is None:
            return ((x, np.broadcast_to(g, x.value.shape).copy()),)
        return ((x, np.broadcast_to(np.expand_dims(g, axis), x.value.shape).copy()),)

    return Tensor(out_val, _parents=(x,), _backward=back)


def reshape(x: Tensor, shape: tuple[int, ...]) -> Tensor:
    x = as_tensor(x)
    old = x.value.shape

    def back(g):
        return ((x, g.reshape(old)),)

    return Tensor(x.value.reshape(shape), _parents=(x,), _backward=back)


def slice_cols(x: Tensor, start: int, stop: int) -> Tensor:
    """Slice the last axis; used to split a bridge output into layer states."""
    x = as_tensor(x)

    def back(g):
        gx = np.zeros_like(x.value)
        gx[..., start:stop] = g
        return ((x, gx),)

    return Tensor(x.value[..., start:stop], _parents=(x,), _backward=back)


def concat(parts: Sequence[Tensor], axis: int = -1) -> Tensor:
    parts = [as_tensor(p) for p in parts]
    out_val = np.concatenate([p.value for p in parts], axis=axis)
    sizes = [p.value.shape[axis] for p in parts]
    offsets = np.cumsum([0] + sizes)

    def back(g):
        out = []
        for p, start, stop in zip(parts, offsets[:-1], offsets[1:]):
            sl = [slice(None)] * g.ndim
            sl[axis if axis >= 0 else g.ndim + axis] = slice(start, stop)
            out.append((p, g[tuple(sl)]))
        return tuple(out)

    return Tensor(out_val, _parents=tuple(parts), _backward=back)


def gather_rows(table: Tensor, idx: np.ndarray) -> Tensor:
    """Select rows of a (N, D) table by an integer index array."""
    idx = np.asarray(idx, dtype=np.int64)
    out_val = table.value[idx]

    def back(g):
        gt = np.zeros_like(table.value)
        np.add.at(gt, idx, g)
        return ((table, gt),)

    return Tensor(out_val, _parents=(table,), _backward=back)


def log_softmax(logits: Tensor) -> Tensor:
    """Row-wise log softmax, numerically stable."""
    v = logits.value
    m = v.max(axis=-1, keepdims=True)
    shifted = v - m
    lse = np.log(np.exp(shifted).sum(axis=-1, keepdims=True)) + m
    out_val = v - lse
    soft = np.exp(out_val)

    def back(g):
        return ((logits, g - soft * g.sum(axis=-1, keepdims=True)),)

    return Tensor(out_val, _parents=(logits,), _backward=back)


def softmax(logits: Tensor) -> Tensor:
    return exp(log_softmax(logits))


def softmax_cross_entropy(logits: Tensor, target: np.ndarray) -> Tensor:
    """H(target, softmax(logits)) per row; gradient is softmax(logits) - target."""
    target = np.asarray(target, dtype=np.float64)
    sums = target.sum(axis=-1)
    if not np.allclose(sums, 1.0, atol=1e-8):
        raise NnError("cross-entropy target must be normalized")
    lsm = log_softmax(logits)
    return tsum(mul(lsm, -target), axis=-1)


# ---------------------------------------------------------------------------
# Layers

def uniform_init(rng: np.random.Generator, shape: tuple[int, ...], fan: int) -> Tensor:
    bound = 1.0 / np.sqrt(fan)
    return Tensor(rng.uniform(-bound, bound, size=shape), requires_grad=True)


class Linear:
    def __init__(self, in_size: int, out_size: int, rng: np.random.Generator, name: str):
        self.name = name
        self.weight = uniform_init(rng, (in_size, out_size), in_size)
        self.bias = Tensor(np.zeros(out_size), requires_grad=True)

    def __call__(self, x: Tensor) -> Tensor:
        return add(matmul(x, self.weight), self.bias)

    def params(self) -> dict[str, Tensor]:
        return {f"{self.name}.weight": self.weight, f"{self.name}.bias": self.bias}


class GruStack:
    """L stacked GRU layers, convention h' = (1-z)*h + z*htilde."""

    def __init__(
        self,
        input_size: int,
        hidden_size: int,
        num_layers: int,
        rng: np.random.Generator,
        name: str,
    ):
        if num_layers < 1:
            raise NnError("GruStack needs at least one layer")
        self.name = name
        self.input_size = input_size
        self.hidden_size = hidden_size
        self.num_layers = num_layers
        self._params: dict[str, Tensor] = {}
        for layer in range(num_layers):
            din = input_size if layer == 0 else hidden_size
            for gate in ("z", "r", "h"):
                self._params[f"{name}.l{layer}.W{gate}"] = uniform_init(
                    rng, (din, hidden_size), hidden_size
                )
                self._params[f"{name}.l{layer}.U{gate}"] = uniform_init(
                    rng, (hidden_size, hidden_size), hidden_size
                )
                self._params[f"{name}.l{layer}.b{gate}"] = Tensor(
                    np.zeros(hidden_size), requires_grad=True
                )

    def params(self) -> dict[str, Tensor]:
        return dict(self._params)

    def init_hidden(self, batch: int | None = None) -> list[Tensor]:
        shape = (self.hidden_size,) if batch is None else (batch, self.hidden_size)
        return [Tensor(np.zeros(shape)) for _ in range(self.num_layers)]

    def __call__(self, x: Tensor, hidden: list[Tensor]) -> tuple[Tensor, list[Tensor]]:
        if len(hidden) != self.num_layers:
            raise NnError(f"expected {self.num_layers} hidden states, got {len(hidden)}")
        if x.value.shape[-1] != self.input_size:
            raise NnError(f"input size {x.value.shape[-1]} != {self.input_size}")
        p = self._params
        new_hidden = []
        inp = x
        for layer in range(self.num_layers):
            h = hidden[layer]
            pre = f"{self.name}.l{layer}"
            z = sigmoid(add(add(matmul(inp, p[f"{pre}.Wz"]), matmul(h, p[f"{pre}.Uz"])), p[f"{pre}.bz"]))
            r = sigmoid(add(add(matmul(inp, p[f"{pre}.Wr"]), matmul(h, p[f"{pre}.Ur"])), p[f"{pre}.br"]))
            cand = tanh(
                add(add(matmul(inp, p[f"{pre}.Wh"]), matmul(mul(r, h), p[f"{pre}.Uh"])), p[f"{pre}.bh"])
            )
            h_new = add(mul(add(1.0, mul(z, -1.0)), h), mul(z, cand))
            new_hidden.append(h_new)
            inp = h_new
        return inp, new_hidden


class Adam:
    """Standard Adam with bias correction over a named parameter dict."""

    def __init__(
        self,
        params: dict[str, Tensor],
        lr: float = 1e-3,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.m = {k: np.zeros_like(p.value) for k, p in params.items()}
        self.v = {k: np.zeros_like(p.value) for k, p in params.items()}

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.grad = None

    def step(self) -> None:
        for name, p in self.params.items():
            if p.grad is not None and not np.all(np.isfinite(p.grad)):
                raise NanGradientError(f"non-finite gradient for {name}")
        self.step_count += 1
        t = self.step_count
        for name, p in self.params.items():
            g = p.grad
            if g is None:
                continue
            self.m[name] = self.beta1 * self.m[name] + (1 - self.beta1) * g
            self.v[name] = self.beta2 * self.v[name] + (1 - self.beta2) * g * g
            m_hat = self.m[name] / (1 - self.beta1**t)
            v_hat = self.v[name] / (1 - self.beta2**t)
            p.value = p.value - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


# ---------------------------------------------------------------------------
# Checkpoints: magic + version, JSON header (names, shapes, metadata), then
# raw little-endian float64 payload in header order. Byte layout is
# deterministic so identical runs produce identical files.

_MAGIC = b"SXCKPT\x01"


def save_params(path: str, params: dict[str, Tensor], metadata: dict | None = None) -> None:
    names = sorted(params)
    header = {
        "format_version": 1,
        "metadata": metadata or {},
        "params": [{"name": n, "shape": list(params[n].value.shape)} for n in names],
    }
    hdr = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack(">Q", len(hdr)))
        fh.write(hdr)
        for n in names:
            fh.write(np.ascontiguousarray(params[n].value, dtype="<f8").tobytes())


def load_params(path: str) -> tuple[dict[str, np.ndarray], dict]:
    with open(path, "rb") as fh:
        magic = fh.read(len(_MAGIC))
        if magic != _MAGIC:
            raise CheckpointFormatError("not a checkpoint file (bad magic)")
        (hdr_len,) = struct.unpack(">Q", fh.read(8))
        header = json.loads(fh.read(hdr_len).decode())
        if header.get("format_version") != 1:
            raise CheckpointFormatError(f"unsupported format version {header.get('format_version')}")
        arrays: dict[str, np.ndarray] = {}
        for rec in header["params"]:
            shape = tuple(rec["shape"])
            count = int(np.prod(shape)) if shape else 1
            buf = fh.read(count * 8)
            if len(buf) != count * 8:
                raise CheckpointFormatError(f"truncated payload for {rec['name']}")
            arrays[rec["name"]] = np.frombuffer(buf, dtype="<f8").reshape(shape).copy()
    return arrays, header["metadata"]
