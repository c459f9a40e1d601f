"""Elementary column operations, certificates, and their networks.

A certificate is a list of operations applied left to right to the identity
``I_m``. Indices are 1-based and linear; reaching across the wrap takes an
explicit :class:`Shift`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence, Union

from .cylnet import CylNetwork, Edge, contract_degree_two, require_valid
from .errors import FormatError, InputError
from .exactmat import Matrix, format_rational, parse_rational


@dataclass(frozen=True)
class Join:
    """Replace columns ``i, i+1`` by their sum."""

    i: int

    def __str__(self):
        return f"join {self.i}"


@dataclass(frozen=True)
class Double:
    """Duplicate column ``i``."""

    i: int

    def __str__(self):
        return f"double {self.i}"


@dataclass(frozen=True)
class Shift:
    """Move the last column to the front."""

    def __str__(self):
        return "shift"


@dataclass(frozen=True)
class Rescale:
    i: int
    a: Fraction

    def __post_init__(self):
        object.__setattr__(self, "a", Fraction(self.a))

    def __str__(self):
        return f"rescale {self.i} {format_rational(self.a)}"


ColumnOp = Union[Join, Double, Shift, Rescale]


@dataclass(frozen=True)
class Certificate:
    m: int
    ops: tuple[ColumnOp, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "ops", tuple(self.ops))
        if self.m < 1:
            raise InputError("certificate needs at least one row")

    def __len__(self):
        return len(self.ops)


def check_op(op: ColumnOp, n: int) -> None:
    """Raise :class:`InputError` if ``op`` is not applicable at width ``n``."""
    if isinstance(op, Join):
        if n < 2 or not 1 <= op.i <= n - 1:
            raise InputError(f"{op}: index must be in 1..{n - 1} at width {n}")
    elif isinstance(op, (Double, Rescale)):
        if not 1 <= op.i <= n:
            raise InputError(f"{op}: index must be in 1..{n} at width {n}")
        if isinstance(op, Rescale) and op.a < 0:
            raise InputError(f"{op}: factor must be nonnegative")
    elif not isinstance(op, Shift):
        raise InputError(f"not a column operation: {op!r}")


def apply_to_columns(op: ColumnOp, cols: list) -> list:
    check_op(op, len(cols))
    if isinstance(op, Join):
        k = op.i - 1
        merged = tuple(x + y for x, y in zip(cols[k], cols[k + 1]))
        return cols[:k] + [merged] + cols[k + 2:]
    if isinstance(op, Double):
        k = op.i - 1
        return cols[: k + 1] + [cols[k]] + cols[k + 1:]
    if isinstance(op, Shift):
        return cols[-1:] + cols[:-1]
    k = op.i - 1
    return cols[:k] + [tuple(op.a * x for x in cols[k])] + cols[k + 1:]


def apply(op: ColumnOp, M: Matrix) -> Matrix:
    return Matrix.from_columns(apply_to_columns(op, M.columns()))


def apply_ops(ops: Iterable[ColumnOp], M: Matrix) -> Matrix:
    cols = M.columns()
    for step, op in enumerate(ops, 1):
        try:
            cols = apply_to_columns(op, cols)
        except InputError as e:
            raise InputError(f"step {step}: {e}") from None
    return Matrix.from_columns(cols)


def apply_certificate(c: Certificate) -> Matrix:
    return apply_ops(c.ops, Matrix.identity(c.m))


def first_difference(c: Certificate, M: Matrix) -> str | None:
    """Describe how ``apply_certificate(c)`` differs from ``M``; ``None`` if equal."""
    try:
        got = apply_certificate(c)
    except InputError as e:
        return str(e)
    if got.shape != M.shape:
        return f"dimension mismatch: certificate gives {got.m}x{got.n}, matrix is {M.m}x{M.n}"
    for i in range(M.m):
        for j in range(M.n):
            if got[i, j] != M[i, j]:
                return f"entry ({i + 1},{j + 1}): certificate gives {format_rational(got[i, j])}, matrix has {format_rational(M[i, j])}"
    return None


def verify_certificate(c: Certificate, M: Matrix) -> bool:
    return first_difference(c, M) is None


def rotate(M: Matrix, r: int) -> Matrix:
    """``Shift`` applied ``r`` times."""
    cols = M.columns()
    r %= len(cols)
    return Matrix.from_columns(cols[len(cols) - r:] + cols[: len(cols) - r]) if r else M


def step_between(A: Matrix, B: Matrix) -> ColumnOp | None:
    """The single operation that turns ``A`` into ``B`` up to cyclic
    relabelling of columns, or ``None``. Pure rotations report ``Shift()``."""
    if A.m != B.m:
        return None
    target = {rotate(B, r) for r in range(B.n)}
    for r in range(A.n):
        R = rotate(A, r)
        if R in target and A.n == B.n:
            return Shift()
        cols = R.columns()
        if B.n == A.n + 1:
            for i in range(1, A.n + 1):
                if Matrix.from_columns(apply_to_columns(Double(i), cols)) in target:
                    return Double(i)
        if B.n == A.n - 1:
            for i in range(1, A.n):
                if Matrix.from_columns(apply_to_columns(Join(i), cols)) in target:
                    return Join(i)
        if B.n == A.n:
            for j in range(A.n):
                for s in range(B.n):
                    other = rotate(B, s).columns()
                    if all(cols[k] == other[k] for k in range(A.n) if k != j):
                        a = _ratio(cols[j], other[j])
                        if a is not None:
                            return Rescale(j + 1, a)
    return None


def _ratio(u, v) -> Fraction | None:
    """``a >= 0`` with ``a * u == v``, if one exists."""
    pivot = next((k for k, x in enumerate(u) if x != 0), None)
    if pivot is None:
        return Fraction(0) if all(x == 0 for x in v) else None
    a = v[pivot] / u[pivot]
    if a < 0 or any(a * x != y for x, y in zip(u, v)):
        return None
    return a


# -- compilation to a network ---------------------------------------------


@dataclass
class _Wire:
    tail: str
    tail_x: Fraction  # cover coordinate of the tail vertex
    lo: Fraction  # angular interval in cover coordinates
    hi: Fraction
    weight: Fraction = Fraction(1)
    via: list = field(default_factory=list)

    @property
    def mid(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def modded(self) -> tuple[Fraction, Fraction]:
        k = math.floor(self.lo)
        return self.lo - k, self.hi - k


def _finish(w: _Wire, head: str, head_x: Fraction) -> Edge:
    base = math.floor(w.tail_x)
    pts = [(l, x - base) for l, x in w.via]
    # drop waypoints that sit on a straight run
    xs = [w.tail_x - base, *(x for _, x in pts), head_x - base]
    via = tuple(p for k, p in enumerate(pts) if not (xs[k] == xs[k + 1] == xs[k + 2]))
    return Edge(w.tail, head, w.weight, math.floor(head_x) - base, via)


def to_network(c: Certificate) -> CylNetwork:
    """Realize a certificate as a layered network in the cylinder.

    Every column is a wire owning an arc of the circle; op ``k`` happens at
    layer ``k/(L+1)``. Double splits a wire's arc at a new trivalent vertex,
    Join merges two neighbouring arcs at one, Rescale multiplies the wire's
    pending edge weight, and Shift rotates all arcs so the last one crosses
    the seam at angle 0. Cutting the result between op layers lists the
    columns in slot order.

    Zero rescale factors kill a wire; dead edges and the vertices that only
    fed them are pruned, so zero columns (rows) come out as isolated sinks
    (sources).
    """
    m, L = c.m, len(c.ops)
    step = Fraction(1, L + 1)
    h = step / 4
    sources = [f"s{i}" for i in range(1, m + 1)]
    angles = {}
    layers = {}
    edges: list[Edge] = []
    wires = []
    for i, s in enumerate(sources):
        lo, hi = Fraction(i, m), Fraction(i + 1, m)
        angles[s] = (lo + hi) / 2
        wires.append(_Wire(s, (lo + hi) / 2, lo, hi))

    for k, op in enumerate(c.ops, 1):
        check_op(op, len(wires))
        ell = step * k
        if isinstance(op, Rescale):
            wires[op.i - 1].weight *= op.a
        elif isinstance(op, Shift):
            last = wires[-1]
            a, b = last.modded()
            delta = b - a
            for w in wires:
                w.via.append((ell - h, w.mid))
                w.lo += delta
                w.hi += delta
                w.via.append((ell + h, w.mid))
            wires = wires[-1:] + wires[:-1]
        elif isinstance(op, Double):
            w = wires[op.i - 1]
            v = f"v{k}"
            a, b = w.modded()
            split = (a + b) / 2
            layers[v] = ell
            angles[v] = split
            w.via.append((ell - h, w.mid))
            edges.append(_finish(w, v, w.mid))
            left = _Wire(v, split, a, split)
            right = _Wire(v, split, split, b)
            for x in (left, right):
                x.via.append((ell + h, x.mid))
            wires[op.i - 1: op.i] = [left, right]
        else:
            w1, w2 = wires[op.i - 1], wires[op.i]
            v = f"v{k}"
            a, b = w1.modded()
            _, c_ = w2.modded()
            layers[v] = ell
            angles[v] = b
            w1.via.append((ell - h, w1.mid))
            w2.via.append((ell - h, w2.mid))
            edges.append(_finish(w1, v, w1.hi))
            edges.append(_finish(w2, v, w2.lo))
            merged = _Wire(v, b, a, c_)
            merged.via.append((ell + h, merged.mid))
            wires[op.i - 1: op.i + 1] = [merged]

    sinks = [f"t{j}" for j in range(1, len(wires) + 1)]
    for t, w in zip(sinks, wires):
        x = w.mid
        angles[t] = x - math.floor(x)
        w.via.append((1 - h, x))
        edges.append(_finish(w, t, x))

    N = _prune(CylNetwork(tuple(sources), tuple(sinks), layers, tuple(edges), angles))
    require_valid(N)
    return N


def _prune(N: CylNetwork) -> CylNetwork:
    """Drop zero-weight edges and interior vertices left without inputs or
    outputs, then splice out degree-2 vertices."""
    edges = [e for e in N.edges if e.weight != 0]
    if len(edges) == len(N.edges):
        return N
    layers = dict(N.layers)
    while True:
        ins = {e.head for e in edges}
        outs = {e.tail for e in edges}
        dead = {v for v in layers if v not in ins or v not in outs}
        if not dead:
            break
        for v in dead:
            del layers[v]
        edges = [e for e in edges if e.tail not in dead and e.head not in dead]
    angles = {v: a for v, a in N.angles.items() if v in layers or v in N.sources or v in N.sinks}
    return contract_degree_two(CylNetwork(N.sources, N.sinks, layers, tuple(edges), angles))


# -- text format ----------------------------------------------------------


def parse_certificate(text: str) -> Certificate:
    m = None
    ops: list[ColumnOp] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        toks = raw.split("#", 1)[0].split()
        if not toks:
            continue
        if m is None:
            if len(toks) != 2 or toks[0] != "rows" or not toks[1].isdigit() or int(toks[1]) < 1:
                raise FormatError("first line must be 'rows m'", lineno)
            m = int(toks[1])
            continue
        word = toks[0]
        try:
            if word == "shift" and len(toks) == 1:
                ops.append(Shift())
            elif word in ("join", "double") and len(toks) == 2 and toks[1].isdigit():
                ops.append((Join if word == "join" else Double)(int(toks[1])))
            elif word == "rescale" and len(toks) == 3 and toks[1].isdigit():
                a = parse_rational(toks[2])
                if a < 0:
                    raise InputError("rescale factor must be nonnegative")
                ops.append(Rescale(int(toks[1]), a))
            else:
                raise InputError(f"cannot parse operation {' '.join(toks)!r}")
        except InputError as e:
            raise FormatError(str(e), lineno) from None
    if m is None:
        raise FormatError("empty certificate file", 1)
    return Certificate(m, tuple(ops))


def format_certificate(c: Certificate) -> str:
    return "\n".join([f"rows {c.m}", *map(str, c.ops)]) + "\n"
