"""Dense float64 tensors with reverse-mode automatic differentiation.

Everything trainable in this package runs through this module: a Tensor is a
numpy float64 array that optionally participates in an explicit, single-use
Tape. Ops executed while a Tape is active append nodes (inputs, outputs,
backward rule) in execution order, which is already a topological order, so
``Tape.backward`` is a single reverse sweep with gradient accumulation for
shared subexpressions.

Design constraints, fixed deliberately:

* float64 everywhere -- sizes are desk-scale and finite-difference gradient
  checks need the precision.
* broadcasting is limited to leading-axis expansion (the smaller operand's
  shape must equal the trailing shape of the larger one) plus scalars;
  anything richer must be reshaped explicitly.
* a Tape is confined to one thread and one forward+backward pass; there is
  no implicit global graph. Ops executed with no active tape just compute
  values, which is the inference mode.
"""

from __future__ import annotations

import math
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "Tensor",
    "Tape",
    "Node",
    "ShapeError",
    "ContractError",
    "GradCheckError",
    "ELEMENTWISE_UNARY",
    "ELEMENTWISE_BINARY",
    "elementwise",
    "add",
    "sub",
    "mul",
    "div",
    "neg",
    "sin",
    "cos",
    "exp",
    "tanh",
    "gelu",
    "square",
    "cos_sin",
    "scale",
    "matmul",
    "reduce",
    "reduce_sum",
    "reduce_mean",
    "transpose",
    "reshape",
    "concat",
    "broadcast_rows",
    "repeat_rows",
    "tile_rows",
    "backward",
    "grad_check",
]


class ShapeError(ValueError):
    """Operand shapes violate an op's dimension contract."""


class ContractError(ValueError):
    """An op precondition (beyond shapes) was violated."""


class GradCheckError(RuntimeError):
    """grad_check hit non-finite values; the message names the parameter."""


# sqrt(2/pi) and the cubic coefficient of the tanh-form GELU
_GELU_C0 = math.sqrt(2.0 / math.pi)
_GELU_C1 = 0.044715


def _as_f64(data) -> np.ndarray:
    arr = np.asarray(data, dtype=np.float64)
    return arr


class Tensor:
    """A dense float64 array, optionally tracked on the active Tape.

    ``requires_grad`` marks trainable leaves. ``node`` is set when the tensor
    was produced by a registered op on a tape; ``grad`` is populated by
    ``Tape.backward`` for watched leaves.
    """

    __slots__ = ("data", "requires_grad", "grad", "node", "tape", "_needs_grad")

    def __init__(self, data, requires_grad: bool = False):
        self.data = _as_f64(data)
        self.requires_grad = bool(requires_grad)
        self.grad: np.ndarray | None = None
        self.node: "Node | None" = None
        self.tape: "Tape | None" = None
        self._needs_grad = self.requires_grad

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.data.shape}{flag})"

    # operator sugar; scalars are wrapped as constants
    def __add__(self, other):
        return add(self, _wrap(other))

    def __radd__(self, other):
        return add(_wrap(other), self)

    def __sub__(self, other):
        return sub(self, _wrap(other))

    def __rsub__(self, other):
        return sub(_wrap(other), self)

    def __mul__(self, other):
        return mul(self, _wrap(other))

    def __rmul__(self, other):
        return mul(_wrap(other), self)

    def __truediv__(self, other):
        return div(self, _wrap(other))

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)


def _wrap(value) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


class Node:
    """One recorded op: inputs, outputs and the rule mapping output gradients
    to input gradients. ``backward`` receives one gradient (or None) per
    output and returns one gradient (or None) per input."""

    __slots__ = ("op", "inputs", "outputs", "backward")

    def __init__(self, op: str, inputs: tuple[Tensor, ...], outputs: tuple[Tensor, ...],
                 backward: Callable[[tuple], tuple]):
        self.op = op
        self.inputs = inputs
        self.outputs = outputs
        self.backward = backward


_ACTIVE_TAPE: "Tape | None" = None


class Tape:
    """Explicit, single-use record of ops for one forward+backward pass."""

    def __init__(self):
        self.nodes: list[Node] = []
        self._leaves: dict[int, Tensor] = {}
        self._consumed = False

    def __enter__(self) -> "Tape":
        global _ACTIVE_TAPE
        if _ACTIVE_TAPE is not None:
            raise ContractError("a Tape is already active; tapes do not nest")
        _ACTIVE_TAPE = self
        return self

    def __exit__(self, exc_type, exc, tb):
        global _ACTIVE_TAPE
        _ACTIVE_TAPE = None
        return False

    def watch(self, *tensors: Tensor) -> None:
        """Register trainable leaves so backward() fills their .grad even if
        the loss turns out not to depend on them."""
        for t in tensors:
            t._needs_grad = True
            self._leaves[id(t)] = t

    def _record(self, node: Node) -> None:
        if self._consumed:
            raise ContractError("tape already consumed by backward(); build a new one")
        self.nodes.append(node)
        for t in node.inputs:
            if t.requires_grad and t.node is None:
                self._leaves[id(t)] = t
        for t in node.outputs:
            t.node = node
            t.tape = self
            t._needs_grad = True

    def backward(self, loss: Tensor) -> dict[Tensor, np.ndarray]:
        """Reverse sweep from a scalar loss; populates .grad on every watched
        leaf (zeros if untouched) and returns the leaf gradient map."""
        if self._consumed:
            raise ContractError("tape already consumed by backward(); build a new one")
        if loss.data.size != 1:
            raise ContractError(
                f"backward() needs a scalar loss, got shape {loss.data.shape}")
        if loss.tape is not self and loss.node is not None:
            raise ContractError("loss was not recorded on this tape")
        self._consumed = True

        grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
        owned: set[int] = set()  # accumulators we allocated and may add into
        for node in reversed(self.nodes):
            out_grads = tuple(grads.get(id(o)) for o in node.outputs)
            if all(g is None for g in out_grads):
                continue
            in_grads = node.backward(out_grads)
            for t, g in zip(node.inputs, in_grads):
                if g is None or not t._needs_grad:
                    continue
                key = id(t)
                acc = grads.get(key)
                if acc is None:
                    grads[key] = g
                elif key in owned:
                    acc += g
                else:
                    # first stored gradient may be a view into another
                    # accumulator; never mutate it in place
                    grads[key] = acc + g
                    owned.add(key)

        leaf_map: dict[Tensor, np.ndarray] = {}
        for leaf in self._leaves.values():
            g = grads.get(id(leaf))
            if g is None:
                g = np.zeros_like(leaf.data)
            leaf.grad = g
            leaf_map[leaf] = g
        return leaf_map


def backward(loss: Tensor) -> dict[Tensor, np.ndarray]:
    """Run the reverse sweep of the tape that recorded ``loss``."""
    if loss.tape is None:
        raise ContractError("loss is not tape-tracked; run the forward pass under a Tape")
    return loss.tape.backward(loss)


def _maybe_record(op: str, inputs: tuple[Tensor, ...], outputs: tuple[Tensor, ...],
                  backward_fn: Callable[[tuple], tuple]) -> None:
    tape = _ACTIVE_TAPE
    if tape is None:
        return
    if not any(t._needs_grad or t.requires_grad for t in inputs):
        return
    tape._record(Node(op, inputs, outputs, backward_fn))


# ---------------------------------------------------------------------------
# broadcasting helpers (leading-axis expansion only)

def _check_broadcast(sa: tuple[int, ...], sb: tuple[int, ...], op: str) -> tuple[int, ...]:
    if sa == sb:
        return sa
    if int(np.prod(sb, dtype=np.int64)) == 1:
        return sa
    if int(np.prod(sa, dtype=np.int64)) == 1:
        return sb
    if len(sb) < len(sa) and sa[len(sa) - len(sb):] == sb:
        return sa
    if len(sa) < len(sb) and sb[len(sb) - len(sa):] == sa:
        return sb
    raise ShapeError(
        f"{op}: shapes {sa} and {sb} are neither equal nor broadcastable "
        "along leading axes; reshape explicitly")


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, (gd, sd) in enumerate(zip(g.shape, shape)) if sd == 1 and gd != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


# ---------------------------------------------------------------------------
# elementwise ops

ELEMENTWISE_UNARY = ("neg", "sin", "cos", "exp", "tanh", "gelu", "square")
ELEMENTWISE_BINARY = ("add", "sub", "mul", "div")


def elementwise(op_kind: str, a: Tensor, b: Tensor | None = None) -> Tensor:
    """Dispatch entry for the registered elementwise ops."""
    if op_kind in ELEMENTWISE_BINARY:
        if b is None:
            raise ContractError(f"{op_kind} is binary; second operand missing")
        return _BINARY[op_kind](a, b)
    if op_kind in ELEMENTWISE_UNARY:
        if b is not None:
            raise ContractError(f"{op_kind} is unary; unexpected second operand")
        return _UNARY[op_kind](a)
    raise ContractError(f"unknown elementwise op kind {op_kind!r}")


def add(a: Tensor, b: Tensor) -> Tensor:
    _check_broadcast(a.shape, b.shape, "add")
    out = Tensor(a.data + b.data)
    sa, sb = a.shape, b.shape

    def bwd(gs):
        (g,) = gs
        return _unbroadcast(g, sa), _unbroadcast(g, sb)

    _maybe_record("add", (a, b), (out,), bwd)
    return out


def sub(a: Tensor, b: Tensor) -> Tensor:
    _check_broadcast(a.shape, b.shape, "sub")
    out = Tensor(a.data - b.data)
    sa, sb = a.shape, b.shape

    def bwd(gs):
        (g,) = gs
        return _unbroadcast(g, sa), _unbroadcast(-g, sb)

    _maybe_record("sub", (a, b), (out,), bwd)
    return out


def mul(a: Tensor, b: Tensor) -> Tensor:
    _check_broadcast(a.shape, b.shape, "mul")
    out = Tensor(a.data * b.data)
    da, db = a.data, b.data
    sa, sb = a.shape, b.shape

    def bwd(gs):
        (g,) = gs
        return _unbroadcast(g * db, sa), _unbroadcast(g * da, sb)

    _maybe_record("mul", (a, b), (out,), bwd)
    return out


def div(a: Tensor, b: Tensor) -> Tensor:
    """IEEE semantics on division by zero; callers gate with a finiteness
    check where that matters."""
    _check_broadcast(a.shape, b.shape, "div")
    with np.errstate(divide="ignore", invalid="ignore"):
        out = Tensor(a.data / b.data)
    da, db = a.data, b.data
    sa, sb = a.shape, b.shape

    def bwd(gs):
        (g,) = gs
        with np.errstate(divide="ignore", invalid="ignore"):
            ga = g / db
            gb = -g * da / (db * db)
        return _unbroadcast(ga, sa), _unbroadcast(gb, sb)

    _maybe_record("div", (a, b), (out,), bwd)
    return out


def neg(a: Tensor) -> Tensor:
    out = Tensor(-a.data)
    _maybe_record("neg", (a,), (out,), lambda gs: (-gs[0],))
    return out


def sin(a: Tensor) -> Tensor:
    out = Tensor(np.sin(a.data))
    da = a.data
    _maybe_record("sin", (a,), (out,), lambda gs: (gs[0] * np.cos(da),))
    return out


def cos(a: Tensor) -> Tensor:
    out = Tensor(np.cos(a.data))
    da = a.data
    _maybe_record("cos", (a,), (out,), lambda gs: (-gs[0] * np.sin(da),))
    return out


def exp(a: Tensor) -> Tensor:
    out = Tensor(np.exp(a.data))
    y = out.data
    _maybe_record("exp", (a,), (out,), lambda gs: (gs[0] * y,))
    return out


def tanh(a: Tensor) -> Tensor:
    out = Tensor(np.tanh(a.data))
    y = out.data

    def bwd(gs):
        d = y * y
        np.subtract(1.0, d, out=d)
        d *= gs[0]
        return (d,)

    _maybe_record("tanh", (a,), (out,), bwd)
    return out


def _gelu_fwd(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # in-place pipeline: u = C0*(x + C1*x^3), y = 0.5*x*(1 + tanh(u))
    u = x * x
    u *= x
    u *= _GELU_C1
    u += x
    u *= _GELU_C0
    t = np.tanh(u)
    y = t + 1.0
    y *= x
    y *= 0.5
    return y, t


def gelu(a: Tensor) -> Tensor:
    """tanh-form GELU; the backward rule differentiates this exact form."""
    y, t = _gelu_fwd(a.data)
    out = Tensor(y)
    x = a.data

    def bwd(gs):
        # dy/dx = 0.5(1+t) + 0.5 x (1-t^2) C0 (1 + 3 C1 x^2), in place
        (g,) = gs
        d = t * t
        np.subtract(1.0, d, out=d)
        d *= x
        tmp = x * x
        tmp *= 3.0 * _GELU_C1
        tmp += 1.0
        tmp *= 0.5 * _GELU_C0
        d *= tmp
        np.add(t, 1.0, out=tmp)
        tmp *= 0.5
        d += tmp
        d *= g
        return (d,)

    _maybe_record("gelu", (a,), (out,), bwd)
    return out


def square(a: Tensor) -> Tensor:
    out = Tensor(a.data * a.data)
    da = a.data
    _maybe_record("square", (a,), (out,), lambda gs: (gs[0] * (2.0 * da),))
    return out


def cos_sin(a: Tensor) -> tuple[Tensor, Tensor]:
    """Fused cos/sin with a shared backward; used by the coupling readout
    where both halves of the phase modulation are always needed."""
    c = Tensor(np.cos(a.data))
    s = Tensor(np.sin(a.data))
    cd, sd = c.data, s.data

    def bwd(gs):
        gc, gsin = gs
        g = None
        if gc is not None:
            g = gc * sd
            np.negative(g, out=g)
        if gsin is not None:
            if g is None:
                g = gsin * cd
            else:
                g += gsin * cd
        return (g,)

    _maybe_record("cos_sin", (a,), (c, s), bwd)
    return c, s


def scale(a: Tensor, s: float) -> Tensor:
    """Multiply by a python scalar constant (no gradient to the scalar)."""
    s = float(s)
    out = Tensor(a.data * s)
    _maybe_record("scale", (a,), (out,), lambda gs: (gs[0] * s,))
    return out


_UNARY = {"neg": neg, "sin": sin, "cos": cos, "exp": exp, "tanh": tanh,
          "gelu": gelu, "square": square}
_BINARY = {"add": add, "sub": sub, "mul": mul, "div": div}


# ---------------------------------------------------------------------------
# linear algebra and structure ops

def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise ShapeError(
            f"matmul expects 2-D operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(
            f"matmul inner dimensions disagree: {a.shape} @ {b.shape}")
    out = Tensor(a.data @ b.data)
    da, db = a.data, b.data

    def bwd(gs):
        (g,) = gs
        return g @ db.T, da.T @ g

    _maybe_record("matmul", (a, b), (out,), bwd)
    return out


def reduce(op_kind: str, a: Tensor, axis: int | None = None) -> Tensor:
    if op_kind not in ("sum", "mean"):
        raise ContractError(f"unknown reduce kind {op_kind!r}")
    if axis is not None and not (-a.data.ndim <= axis < a.data.ndim):
        raise ShapeError(f"reduce axis {axis} invalid for shape {a.shape}")
    if op_kind == "sum":
        out = Tensor(a.data.sum(axis=axis))
    else:
        out = Tensor(a.data.mean(axis=axis))
    src_shape = a.shape
    n = a.data.size if axis is None else a.shape[axis]
    factor = 1.0 if op_kind == "sum" else 1.0 / n

    def bwd(gs):
        (g,) = gs
        if axis is None:
            ge = np.full(src_shape, float(g) * factor)
        else:
            ge = np.broadcast_to(np.expand_dims(g, axis % len(src_shape)),
                                 src_shape) * factor
        return (ge,)

    _maybe_record(op_kind, (a,), (out,), bwd)
    return out


def reduce_sum(a: Tensor, axis: int | None = None) -> Tensor:
    return reduce("sum", a, axis)


def reduce_mean(a: Tensor, axis: int | None = None) -> Tensor:
    return reduce("mean", a, axis)


def transpose(a: Tensor) -> Tensor:
    if a.data.ndim != 2:
        raise ShapeError(f"transpose expects a 2-D tensor, got {a.shape}")
    out = Tensor(a.data.T)
    _maybe_record("transpose", (a,), (out,), lambda gs: (gs[0].T,))
    return out


def reshape(a: Tensor, shape: Sequence[int]) -> Tensor:
    shape = tuple(int(s) for s in shape)
    out = Tensor(a.data.reshape(shape))
    src = a.shape
    _maybe_record("reshape", (a,), (out,), lambda gs: (gs[0].reshape(src),))
    return out


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    if not tensors:
        raise ContractError("concat of an empty sequence")
    out = Tensor(np.concatenate([t.data for t in tensors], axis=axis))
    sizes = [t.shape[axis] for t in tensors]
    offsets = np.cumsum(sizes)[:-1]

    def bwd(gs):
        # views into g; the accumulator never mutates unowned arrays
        (g,) = gs
        return tuple(np.split(g, offsets, axis=axis))

    _maybe_record("concat", tuple(tensors), (out,), bwd)
    return out


def broadcast_rows(a: Tensor, m: int) -> Tensor:
    """Expand a [C] or [1, C] tensor to [m, C]; backward sums over rows."""
    if a.data.ndim == 1:
        base = a.data[None, :]
    elif a.data.ndim == 2 and a.shape[0] == 1:
        base = a.data
    else:
        raise ShapeError(f"broadcast_rows expects [C] or [1, C], got {a.shape}")
    out = Tensor(np.broadcast_to(base, (m, base.shape[1])))
    src = a.shape

    def bwd(gs):
        (g,) = gs
        return (g.sum(axis=0).reshape(src),)

    _maybe_record("broadcast_rows", (a,), (out,), bwd)
    return out


def repeat_rows(a: Tensor, k: int) -> Tensor:
    """Repeat each row of [B, C] k times -> [B*k, C]; backward sums blocks."""
    if a.data.ndim != 2:
        raise ShapeError(f"repeat_rows expects a 2-D tensor, got {a.shape}")
    out = Tensor(np.repeat(a.data, k, axis=0))
    b, c = a.shape

    def bwd(gs):
        (g,) = gs
        return (g.reshape(b, k, c).sum(axis=1),)

    _maybe_record("repeat_rows", (a,), (out,), bwd)
    return out


def tile_rows(a: Tensor, k: int) -> Tensor:
    """Stack k copies of [M, C] -> [k*M, C]; backward sums the copies."""
    if a.data.ndim != 2:
        raise ShapeError(f"tile_rows expects a 2-D tensor, got {a.shape}")
    out = Tensor(np.tile(a.data, (k, 1)))
    m, c = a.shape

    def bwd(gs):
        (g,) = gs
        return (g.reshape(k, m, c).sum(axis=0),)

    _maybe_record("tile_rows", (a,), (out,), bwd)
    return out


# ---------------------------------------------------------------------------
# finite-difference gradient checking

def grad_check(model_eval: Callable[[], Tensor],
               params: Mapping[str, Tensor] | Sequence[tuple[str, Tensor]],
               h: float = 1e-5) -> float:
    """Compare tape gradients of a deterministic closure against central
    finite differences, element by element.

    Returns max over all parameter elements of
    ``|analytic - fd| / (|fd| + 1e-12)``. Raises GradCheckError, naming the
    offending parameter, if any evaluation or gradient is non-finite.
    """
    if h <= 0:
        raise ContractError("grad_check needs h > 0")
    items = list(params.items()) if isinstance(params, Mapping) else list(params)

    with Tape() as tape:
        tape.watch(*(t for _, t in items))
        loss = model_eval()
    if not np.isfinite(loss.data).all():
        raise GradCheckError("closure returned a non-finite loss at the base point")
    tape.backward(loss)

    worst = 0.0
    for name, p in items:
        analytic = p.grad
        if analytic is None or not np.isfinite(analytic).all():
            raise GradCheckError(f"non-finite analytic gradient for parameter {name!r}")
        flat = p.data.ravel()
        for i in range(flat.size):
            saved = flat[i]
            flat[i] = saved + h
            f_plus = float(model_eval().data)
            flat[i] = saved - h
            f_minus = float(model_eval().data)
            flat[i] = saved
            if not (math.isfinite(f_plus) and math.isfinite(f_minus)):
                raise GradCheckError(
                    f"non-finite closure value while perturbing parameter {name!r}")
            fd = (f_plus - f_minus) / (2.0 * h)
            rel = abs(analytic.ravel()[i] - fd) / (abs(fd) + 1e-12)
            worst = max(worst, rel)
    return worst
