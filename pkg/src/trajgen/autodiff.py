"""Scalar reverse-mode automatic differentiation.

A :class:`Tape` records every operation applied to its :class:`Scalar`
variables.  Calling :func:`backward` on a result sweeps the tape in reverse
and returns the adjoint of every recorded node.

Example::

    tape = Tape()
    x = tape.variable(0.7)
    y = sin(x) * cos(x)
    grads = backward(y)
    grads.wrt(x)   # == cos(1.4)
"""
from __future__ import annotations

import math
from typing import Iterable

__all__ = [
    "AutodiffError",
    "GradientMap",
    "Scalar",
    "Tape",
    "backward",
    "constant",
    "cos",
    "op",
    "sigmoid",
    "sin",
    "sqrt",
    "square",
]


class AutodiffError(ArithmeticError):
    """Raised on invalid arithmetic or misuse of a tape."""


class Tape:
    """Append-only record of operations.

    Node ``k`` stores the operation kind, the ids of its parents and the local
    partial derivative with respect to each parent.  Parents always precede
    their children, so node order is already topological.
    """

    __slots__ = ("kinds", "parents", "partials", "values")

    def __init__(self):
        self.kinds: list[str] = []
        self.parents: list[tuple[int, ...]] = []
        self.partials: list[tuple[float, ...]] = []
        self.values: list[float] = []

    def __len__(self):
        return len(self.values)

    def _record(self, kind, value, parents=(), partials=()):
        idx = len(self.values)
        if not math.isfinite(value):
            raise AutodiffError(f"non-finite result {value!r} at node {idx} ({kind})")
        self.kinds.append(kind)
        self.parents.append(parents)
        self.partials.append(partials)
        self.values.append(value)
        return Scalar(value, idx, self)

    def variable(self, value) -> "Scalar":
        """Create an independent input on this tape."""
        return self._record("var", float(value))

    def variables(self, values: Iterable[float]) -> list["Scalar"]:
        return [self.variable(v) for v in values]


class Scalar:
    """A real number, optionally tied to a node of a :class:`Tape`.

    Scalars without a node are constants and never receive gradient.
    Arithmetic with plain ``int``/``float`` operands treats them as constants.
    """

    __slots__ = ("value", "node", "tape")

    def __init__(self, value: float, node: int | None = None, tape: Tape | None = None):
        value = float(value)
        if not math.isfinite(value):
            raise AutodiffError(f"non-finite scalar value {value!r}")
        self.value = value
        self.node = node
        self.tape = tape

    def __repr__(self):
        if self.node is None:
            return f"Scalar({self.value!r})"
        return f"Scalar({self.value!r}, node={self.node})"

    def __float__(self):
        return self.value

    def __add__(self, other):
        return op("add", self, other)

    def __radd__(self, other):
        return op("add", other, self)

    def __sub__(self, other):
        return op("sub", self, other)

    def __rsub__(self, other):
        return op("sub", other, self)

    def __mul__(self, other):
        return op("mul", self, other)

    def __rmul__(self, other):
        return op("mul", other, self)

    def __truediv__(self, other):
        return op("div", self, other)

    def __rtruediv__(self, other):
        return op("div", other, self)

    def __neg__(self):
        return op("neg", self)

    def __pos__(self):
        return self


def constant(value: float) -> Scalar:
    return Scalar(value)


def _tape_of(a, b):
    ta = a.tape if isinstance(a, Scalar) else None
    tb = b.tape if isinstance(b, Scalar) else None
    if ta is not None and tb is not None and ta is not tb:
        raise AutodiffError("operands belong to different tapes")
    return ta if ta is not None else tb


def _node(x):
    return x.node if isinstance(x, Scalar) else None


def _val(x):
    return x.value if isinstance(x, Scalar) else float(x)


_UNARY = frozenset({"neg", "sin", "cos", "sqrt", "sigmoid", "square"})
_BINARY = frozenset({"add", "sub", "mul", "div"})


def _sigmoid(x: float) -> float:
    if x >= 0.0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def op(kind: str, a, b=None) -> Scalar:
    """Apply ``kind`` to ``a`` (and ``b`` for binary kinds), recording it.

    Supported kinds: add, sub, mul, div, neg, sin, cos, sqrt, sigmoid, square.
    If no operand lives on a tape the result is a constant.
    """
    if kind in _BINARY:
        if b is None:
            raise AutodiffError(f"{kind} needs two operands")
        x, y = _val(a), _val(b)
        tape = _tape_of(a, b)
        if kind == "add":
            value, pa, pb = x + y, 1.0, 1.0
        elif kind == "sub":
            value, pa, pb = x - y, 1.0, -1.0
        elif kind == "mul":
            value, pa, pb = x * y, y, x
        else:
            if y == 0.0:
                where = f" at node {len(tape)}" if tape is not None else ""
                raise AutodiffError(f"division by zero{where}")
            value = x / y
            pa, pb = 1.0 / y, -value / y
        if tape is None:
            return Scalar(value)
        na, nb = _node(a), _node(b)
        if na is None:
            return tape._record(kind, value, (nb,), (pb,))
        if nb is None:
            return tape._record(kind, value, (na,), (pa,))
        return tape._record(kind, value, (na, nb), (pa, pb))

    if kind not in _UNARY:
        raise AutodiffError(f"unsupported operation {kind!r}")
    if b is not None:
        raise AutodiffError(f"{kind} takes one operand")
    x = _val(a)
    if kind == "neg":
        value, d = -x, -1.0
    elif kind == "sin":
        value, d = math.sin(x), math.cos(x)
    elif kind == "cos":
        value, d = math.cos(x), -math.sin(x)
    elif kind == "sqrt":
        if x < 0.0:
            raise AutodiffError(f"sqrt of negative value {x!r}")
        value = math.sqrt(x)
        if value == 0.0 and _node(a) is not None:
            raise AutodiffError("sqrt derivative undefined at 0")
        d = 0.5 / value if value else 0.0
    elif kind == "sigmoid":
        value = _sigmoid(x)
        d = value * (1.0 - value)
    else:
        value, d = x * x, 2.0 * x
    na = _node(a)
    if na is None:
        return Scalar(value)
    return a.tape._record(kind, value, (na,), (d,))


def sin(x):
    return op("sin", x)


def cos(x):
    return op("cos", x)


def sqrt(x):
    return op("sqrt", x)


def sigmoid(x):
    return op("sigmoid", x)


def square(x):
    return op("square", x)


class GradientMap(dict):
    """Mapping of node id to adjoint, as returned by :func:`backward`."""

    def wrt(self, x) -> float:
        """Adjoint of ``x``; zero for constants and unreached nodes."""
        if not isinstance(x, Scalar) or x.node is None:
            return 0.0
        return self.get(x.node, 0.0)


def backward(root) -> GradientMap:
    """Reverse sweep from ``root``; adjoints are d(root)/d(node).

    Every node recorded up to and including ``root`` gets an entry.  A
    constant root yields an empty map.
    """
    if not isinstance(root, Scalar) or root.node is None:
        return GradientMap()
    tape = root.tape
    if root.node >= len(tape) or tape.values[root.node] != root.value:
        raise AutodiffError("root is not on its tape")
    parents = tape.parents
    partials = tape.partials
    adj = [0.0] * (root.node + 1)
    adj[root.node] = 1.0
    for k in range(root.node, -1, -1):
        g = adj[k]
        if g == 0.0:
            continue
        for p, d in zip(parents[k], partials[k]):
            adj[p] += g * d
    return GradientMap(enumerate(adj))
