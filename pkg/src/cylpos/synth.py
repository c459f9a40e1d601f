"""Decide whether a rank-2 or rank-3 matrix is a boundary measurement
matrix, and when it is, produce a certificate building it from ``I_m``.

Both synthesizers reduce the input to a small base matrix while recording
each reduction, build the base from the identity, and then undo the
reductions one by one with column operations. Every certificate is
re-applied and compared with the input before it is returned.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Union

from . import colops
from .colops import Certificate, ColumnOp, Double, Join, Rescale, Shift
from .errors import InputError, InternalError
from .exactmat import (
    Matrix,
    column_det,
    cvar_matrix,
    first_negative_entry,
    format_rational,
    maximal_minors,
    rank,
    vector_rank,
)

Column = tuple[Fraction, ...]


# -- verdicts -------------------------------------------------------------

NEGATIVE_ENTRY = "negative-entry"
NEGATIVE_ODD_MINOR = "negative-odd-minor"
CVAR_TOO_LARGE = "cvar-too-large"
CVAR_ZERO = "cvar-zero"
RANK_DEFECT = "rank-defect"
WRONG_SHAPE = "wrong-shape"


@dataclass(frozen=True)
class Witness:
    """Why a matrix was rejected.

    ``rows``/``cols`` are 1-based. For the cvar kinds, ``cols`` lists the
    columns the cyclic sign variation was taken over: all of them, or only
    the nonzero ones when the violation shows up after zero columns are
    deleted.
    """

    kind: str
    value: Fraction | int
    rows: tuple[int, ...] = ()
    cols: tuple[int, ...] = ()

    def holds(self, M: Matrix) -> bool:
        """Re-evaluate the witness against ``M``."""
        if self.kind == NEGATIVE_ENTRY:
            (i,), (j,) = self.rows, self.cols
            return M[i - 1, j - 1] == self.value < 0
        if self.kind == NEGATIVE_ODD_MINOR:
            from .exactmat import minor

            return minor(M, self.rows, self.cols) == self.value < 0
        if self.kind in (CVAR_TOO_LARGE, CVAR_ZERO):
            sub = Matrix.from_columns([M.column(j) for j in self.cols])
            value = cvar_matrix(sub)
            return value == self.value and (value > 2 if self.kind == CVAR_TOO_LARGE else value == 0)
        if self.kind == RANK_DEFECT:
            return rank(M) == self.value < M.m
        if self.kind == WRONG_SHAPE:
            return M.n < M.m
        return False

    def __str__(self) -> str:
        v = format_rational(Fraction(self.value))
        if self.kind == NEGATIVE_ENTRY:
            return f"{self.kind} row={self.rows[0]} col={self.cols[0]} value={v}"
        if self.kind == NEGATIVE_ODD_MINOR:
            return f"{self.kind} rows={_ids(self.rows)} cols={_ids(self.cols)} value={v}"
        if self.kind in (CVAR_TOO_LARGE, CVAR_ZERO):
            return f"{self.kind} cvar={v} cols={_ids(self.cols)}"
        if self.kind == RANK_DEFECT:
            return f"{self.kind} rank={v}"
        return f"{self.kind} cols={v}"


def _ids(xs) -> str:
    return ",".join(map(str, xs))


@dataclass(frozen=True)
class RemoveColumn:
    """Column ``i`` equals ``a * v[i-1] + b * v[i+1]`` and was dropped."""

    i: int
    a: Fraction
    b: Fraction


@dataclass(frozen=True)
class SubtractNeighbor:
    """Column ``i`` was replaced by ``v[i] - eps * v[j]``."""

    i: int
    j: int
    eps: Fraction


@dataclass(frozen=True)
class RemoveZeroColumn:
    i: int


Step = Union[RemoveColumn, SubtractNeighbor, RemoveZeroColumn]


@dataclass
class ReductionLog:
    """``snapshots[k]`` is the matrix just before ``steps[k]``; ``reduced``
    is the base matrix the reduction stopped at."""

    steps: list[Step] = field(default_factory=list)
    snapshots: list[Matrix] = field(default_factory=list)
    reduced: Matrix | None = None

    def after(self, k: int) -> Matrix:
        """The matrix just after ``steps[k]``."""
        return self.snapshots[k + 1] if k + 1 < len(self.steps) else self.reduced

    def record(self, before: Matrix, step: Step) -> None:
        self.snapshots.append(before)
        self.steps.append(step)


@dataclass(frozen=True)
class Accept:
    certificate: Certificate
    log: ReductionLog | None = field(default=None, compare=False)
    accepted = True


@dataclass(frozen=True)
class Reject:
    witness: Witness
    accepted = False


Verdict = Union[Accept, Reject]


# -- small vector helpers -------------------------------------------------


def _det2(u: Column, v: Column) -> Fraction:
    return u[0] * v[1] - u[1] * v[0]


def _is_zero(v: Column) -> bool:
    return all(x == 0 for x in v)


def _scalar(u: Column, v: Column) -> Fraction | None:
    """``a`` with ``v == a * u`` (``u`` nonzero), else ``None``."""
    k = next(k for k, x in enumerate(u) if x != 0)
    a = v[k] / u[k]
    return a if all(a * x == y for x, y in zip(u, v)) else None


def _solve_pair(left: Column, mid: Column, right: Column) -> tuple[Fraction, Fraction] | None:
    """Nonnegative ``(a, b)`` with ``mid == a*left + b*right``, trying the
    degenerate cases first and then Cramer's rule on the first pair of rows
    where ``left`` and ``right`` are independent."""
    if _is_zero(mid):
        return Fraction(0), Fraction(0)
    if not _is_zero(left):
        a = _scalar(left, mid)
        if a is not None:
            return (a, Fraction(0)) if a >= 0 else None
    if not _is_zero(right):
        b = _scalar(right, mid)
        if b is not None:
            return (Fraction(0), b) if b >= 0 else None
    for r, s in combinations(range(len(mid)), 2):
        d = left[r] * right[s] - left[s] * right[r]
        if d != 0:
            a = (mid[r] * right[s] - mid[s] * right[r]) / d
            b = (left[r] * mid[s] - left[s] * mid[r]) / d
            if all(a * x + b * y == z for x, y, z in zip(left, right, mid)):
                return (a, b) if a >= 0 and b >= 0 else None
            return None
    return None


def _drop(cols: list[Column], i: int) -> list[Column]:
    return cols[: i - 1] + cols[i:]


def _zero_count(M: Matrix) -> int:
    return sum(1 for x in M.entries() if x == 0)


# -- rank 3 building blocks -----------------------------------------------


class Order(enum.Enum):
    I_BEFORE_J = "i<=j"
    J_BEFORE_I = "j<=i"
    BOTH = "both"
    NEITHER = "neither"


def _precedes(u: Column, v: Column) -> bool:
    """Every zero coordinate of ``u`` is zero in ``v``."""
    return all(y == 0 for x, y in zip(u, v) if x == 0)


def _adjacent(n: int, i: int, j: int) -> bool:
    return (j - i) % n in (1, n - 1) and i != j


def comparable(M: Matrix, i: int, j: int) -> Order:
    """Zero-support comparison of cyclically adjacent columns ``i`` and ``j``."""
    if M.m != 3:
        raise InputError("comparability is used on 3-row matrices")
    if not (1 <= i <= M.n and 1 <= j <= M.n and _adjacent(M.n, i, j)):
        raise InputError(f"columns {i} and {j} are not cyclically adjacent")
    u, v = M.column(i), M.column(j)
    ij, ji = _precedes(u, v), _precedes(v, u)
    if ij and ji:
        return Order.BOTH
    if ij:
        return Order.I_BEFORE_J
    if ji:
        return Order.J_BEFORE_I
    return Order.NEITHER


def _check_rank3_input(M: Matrix, strict: bool = False) -> None:
    if M.m != 3:
        raise InputError(f"expected 3 rows, got {M.m}")
    if first_negative_entry(M) is not None:
        raise InputError("matrix has a negative entry")
    for cols, value in maximal_minors(M):
        if value < 0 or (strict and value == 0):
            raise InputError(f"3x3 minor on columns {cols} is {format_rational(value)}")
    if rank(M) != 3:
        raise InputError("matrix does not have rank 3")


def _find_removable(cols: list[Column]) -> tuple[int, Fraction, Fraction] | None:
    n = len(cols)
    for i in range(1, n + 1):
        left, mid, right = cols[(i - 2) % n], cols[i - 1], cols[i % n]
        if vector_rank([left, mid, right]) == 3:
            continue
        ab = _solve_pair(left, mid, right)
        if ab is not None:
            return i, *ab
    return None


def remove_dependent_column(M: Matrix, check: bool = True) -> tuple[Matrix, RemoveColumn] | None:
    """Drop the first column (smallest cyclic index) that is a nonnegative
    combination of its two neighbours, or return ``None`` when every three
    consecutive columns are independent."""
    if check:
        _check_rank3_input(M)
    cols = M.columns()
    found = _find_removable(cols)
    if found is None:
        if any(vector_rank([cols[i - 1], cols[i], cols[(i + 1) % len(cols)]]) < 3 for i in range(len(cols))):
            raise InternalError("dependent consecutive triple without a nonnegative representation")
        return None
    i, a, b = found
    return Matrix.from_columns(_drop(cols, i)), RemoveColumn(i, a, b)


def max_epsilon_subtract(M: Matrix, i: int, j: int, check: bool = True) -> tuple[Matrix, Fraction]:
    """Subtract the largest multiple of neighbour ``j`` from column ``i``
    that keeps every entry and every 3x3 minor nonnegative.

    The bound is the smaller of the entry ratios ``v_i[k] / v_j[k]`` and,
    over triples containing ``i`` but not ``j``, the ratio of the minor to
    the same minor with ``v_j`` in place of ``v_i`` (where that is positive).
    """
    if check:
        _check_rank3_input(M, strict=True)
        if not _adjacent(M.n, i, j):
            raise InputError(f"columns {i} and {j} are not cyclically adjacent")
    u, v = M.column(i), M.column(j)
    if not _precedes(u, v):
        raise InputError(f"column {i} is not below column {j} in the zero-support order")
    bounds = [x / y for x, y in zip(u, v) if y > 0]
    cols = M.columns()
    others = [k for k in range(1, M.n + 1) if k not in (i, j)]
    for p, q in combinations(others, 2):
        idx = sorted((i, p, q))
        here = column_det([cols[k - 1] for k in idx])
        swapped = column_det([v if k == i else cols[k - 1] for k in idx])
        if swapped > 0:
            bounds.append(here / swapped)
    eps = min(bounds)
    cols[i - 1] = tuple(x - eps * y for x, y in zip(u, v))
    return Matrix.from_columns(cols), eps


def _find_comparable_pair(M: Matrix) -> tuple[int, int] | None:
    n = M.n
    for i in range(1, n + 1):
        for j in (i % n + 1, (i - 2) % n + 1):
            if _precedes(M.column(i), M.column(j)):
                return i, j
    return None


def _all_minors_positive(M: Matrix) -> bool:
    return all(v > 0 for _, v in maximal_minors(M))


def base_case_3x3(M: Matrix) -> list[ColumnOp]:
    """Operations building a 3x3 nonnegative matrix with positive
    determinant and no comparable columns from ``I_3``."""
    if M.shape != (3, 3):
        raise InputError("base case needs a 3x3 matrix")
    cols = M.columns()
    support = [tuple(x != 0 for x in c) for c in cols]
    if all(sum(s) == 1 for s in support):
        for s in range(3):
            perm = colops.rotate(Matrix.identity(3), s).columns()
            if all(tuple(x != 0 for x in p) == sup for p, sup in zip(perm, support)):
                ops: list[ColumnOp] = [Shift()] * s
                for j, (p, c) in enumerate(zip(perm, cols), 1):
                    a = c[p.index(1)]
                    if a != 1:
                        ops.append(Rescale(j, a))
                return ops
        raise InternalError("monomial 3x3 matrix with an odd support pattern")
    for s in range(3):
        D = colops.rotate(M, -s)
        if all(D[k, k] == 0 for k in range(3)) and all(D[r, c] != 0 for r in range(3) for c in range(3) if r != c):
            ops = [Double(1), Double(3), Double(5), Shift(), Shift(), Shift()]
            factors = [D[1, 0], D[2, 0], D[2, 1], D[0, 1], D[0, 2], D[1, 2]]
            ops += [Rescale(k, a) for k, a in enumerate(factors, 1) if a != 1]
            ops += [Join(1), Join(2), Join(3)]
            return ops + [Shift()] * s
    raise InternalError(f"3x3 base matrix has neither pattern: {M.tolist()}")


# -- rank 2 building blocks -----------------------------------------------


def _arg_monotone(left: Column, mid: Column, right: Column) -> bool:
    # for nonnegative vectors the sign of det[u, v] is the sign of Arg(v) - Arg(u)
    return _det2(left, mid) * _det2(mid, right) >= 0


def _reduce_rank2(M: Matrix, log: ReductionLog) -> Matrix:
    """Strip zero columns, then drop Arg-monotone middle columns."""
    cur = M
    while cur.n > 1:
        cols = cur.columns()
        z = next((k for k, c in enumerate(cols, 1) if _is_zero(c)), None)
        if z is None:
            break
        log.record(cur, RemoveZeroColumn(z))
        cur = Matrix.from_columns(_drop(cols, z))
    while cur.n > 2:
        cols = cur.columns()
        n = len(cols)
        for i in range(1, n + 1):
            left, mid, right = cols[(i - 2) % n], cols[i - 1], cols[i % n]
            if _arg_monotone(left, mid, right):
                ab = _solve_pair(left, mid, right)
                if ab is None:
                    raise InternalError("Arg-monotone triple without a nonnegative representation")
                log.record(cur, RemoveColumn(i, *ab))
                cur = Matrix.from_columns(_drop(cols, i))
                break
        else:
            break
    return cur


def base_case_2x2(M: Matrix) -> list[ColumnOp]:
    (p, q), (r, s) = M.rows
    if q == 0 and r == 0:
        return [Rescale(j, a) for j, a in ((1, p), (2, s)) if a != 1]
    if p == 0 and s == 0:
        return [Shift()] + [Rescale(j, a) for j, a in ((1, r), (2, q)) if a != 1]
    ops: list[ColumnOp] = [Double(1), Double(3), Shift(), Shift(), Shift()]
    ops += [Rescale(j, a) for j, a in ((1, p), (2, r), (3, s), (4, q)) if a != 1]
    return ops + [Join(1), Join(2)]


# -- replay ---------------------------------------------------------------


def _scale(j: int, a: Fraction) -> list[ColumnOp]:
    return [] if a == 1 else [Rescale(j, a)]


def _undo(step: Step, cur: Matrix, target: Matrix) -> list[ColumnOp]:
    n = target.n
    pre: list[ColumnOp] = []
    if isinstance(step, RemoveZeroColumn):
        p = max(step.i - 1, 1)
        local = [Double(p), Rescale(step.i, Fraction(0))]
    elif isinstance(step, RemoveColumn):
        i, a, b = step.i, step.a, step.b
        if 2 <= i <= n - 1:
            p = i - 1
        else:
            pre, p = [Shift()], 1
        if a == 0 and b == 0:
            local = [Double(p), Rescale(p + 1, Fraction(0))]
        elif b == 0:
            local = [Double(p), *_scale(p + 1, a)]
        elif a == 0:
            local = [Double(p + 1), *_scale(p + 1, b)]
        else:
            local = [Double(p), *_scale(p + 1, a), Double(p + 2), *_scale(p + 2, b), Join(p + 1)]
    else:
        i, j, eps = step.i, step.j, step.eps
        left_is_i = j == i % n + 1
        left = i if left_is_i else j
        if left == n:
            pre, p = [Shift()], 1
        else:
            p = left
        if left_is_i:
            local = [Double(p + 1), Rescale(p + 1, eps), Join(p)]
        else:
            local = [Double(p), Rescale(p + 1, eps), Join(p + 1)]
    got = colops.apply_ops(pre + local, cur)
    for r in range(n):
        if colops.rotate(got, r) == target:
            return pre + local + [Shift()] * r
    raise InternalError(f"cannot undo {step}")


def replay(log: ReductionLog, reduced: Matrix | None = None) -> list[ColumnOp]:
    """Operations taking the reduced matrix back to the original input."""
    ops: list[ColumnOp] = []
    cur = log.reduced if reduced is None else reduced
    for step, before in zip(reversed(log.steps), reversed(log.snapshots)):
        ops += _undo(step, cur, before)
        cur = before
    return ops


def _finish(M: Matrix, base_ops: list[ColumnOp], log: ReductionLog, reduced: Matrix) -> Accept:
    log.reduced = reduced
    cert = Certificate(M.m, tuple(base_ops + replay(log, reduced)))
    problem = colops.first_difference(cert, M)
    if problem is not None:
        raise InternalError(f"synthesized certificate does not rebuild the input: {problem}")
    return Accept(cert, log)


# -- entry points ---------------------------------------------------------


def _common_rejection(M: Matrix) -> Reject | None:
    bad = first_negative_entry(M)
    if bad is not None:
        return Reject(Witness(NEGATIVE_ENTRY, bad.value, bad.rows, bad.cols))
    if M.n < M.m:
        return Reject(Witness(WRONG_SHAPE, M.n))
    return None


def nonzero_columns(M: Matrix) -> tuple[int, ...]:
    return tuple(j for j, c in enumerate(M.columns(), 1) if not _is_zero(c))


def construct_rank2(M: Matrix) -> Accept | None:
    """Certificate for a nonnegative rank-2 matrix whenever one exists,
    regardless of ``cvar(M)``; ``None`` when the matrix is not constructible.

    Deleting zero columns is itself a sequence of joins, so ``M`` is
    constructible exactly when its nonzero columns have cyclic sign
    variation 2.
    """
    if M.m != 2 or first_negative_entry(M) is not None or rank(M) != 2:
        return None
    log = ReductionLog()
    reduced = _reduce_rank2(M, log)
    if reduced.n != 2:
        return None
    return _finish(M, base_case_2x2(reduced), log, reduced)


def synthesize_rank2(M: Matrix) -> Verdict:
    """Accept iff entries are nonnegative, rank is 2 and ``cvar(M) == 2``,
    with a certificate; otherwise reject with a witness.

    A matrix with ``cvar(M) == 2`` whose nonzero columns have a larger
    cyclic sign variation is not constructible (joining away its zero
    columns would raise cvar) and is rejected with a witness over the
    nonzero columns.
    """
    if M.m != 2:
        raise InputError(f"rank-2 synthesis needs 2 rows, got {M.m}")
    early = _common_rejection(M)
    if early is not None:
        return early
    r = rank(M)
    if r != 2:
        return Reject(Witness(RANK_DEFECT, r))
    c = cvar_matrix(M)
    every = tuple(range(1, M.n + 1))
    if c > 2:
        return Reject(Witness(CVAR_TOO_LARGE, c, cols=every))
    if c == 0:
        return Reject(Witness(CVAR_ZERO, 0, cols=every))
    keep = nonzero_columns(M)
    stripped = cvar_matrix(Matrix.from_columns([M.column(j) for j in keep]))
    if stripped > 2:
        return Reject(Witness(CVAR_TOO_LARGE, stripped, cols=keep))
    built = construct_rank2(M)
    if built is None:
        raise InternalError("cvar 2 matrix did not reduce to two columns")
    return built


def synthesize_rank3(M: Matrix) -> Verdict:
    """Accept iff entries and 3x3 minors are nonnegative and rank is 3."""
    if M.m != 3:
        raise InputError(f"rank-3 synthesis needs 3 rows, got {M.m}")
    early = _common_rejection(M)
    if early is not None:
        return early
    for cols, value in maximal_minors(M):
        if value < 0:
            return Reject(Witness(NEGATIVE_ODD_MINOR, value, (1, 2, 3), cols))
    r = rank(M)
    if r != 3:
        return Reject(Witness(RANK_DEFECT, r))

    log = ReductionLog()
    cur = M
    potential = (cur.n, -_zero_count(cur))
    owed = False  # a subtraction zeroed a minor without adding a zero entry
    while True:
        while True:
            removed = remove_dependent_column(cur, check=False)
            if removed is None:
                break
            reduced, step = removed
            log.record(cur, step)
            cur = reduced
            new = (cur.n, -_zero_count(cur))
            if not new < potential:
                raise InternalError("reduction potential did not decrease")
            potential, owed = new, False
        if owed:
            raise InternalError("a zero minor appeared but no column could be removed")
        if not _all_minors_positive(cur):
            raise InternalError("independent consecutive triples but a vanishing 3x3 minor")
        pair = _find_comparable_pair(cur)
        if pair is None:
            break
        i, j = pair
        nxt, eps = max_epsilon_subtract(cur, i, j, check=False)
        log.record(cur, SubtractNeighbor(i, j, eps))
        zero_minor = any(v == 0 for _, v in maximal_minors(nxt))
        if not zero_minor and _precedes(nxt.column(i), nxt.column(j)):
            raise InternalError("maximal subtraction left the column comparable and all minors positive")
        cur = nxt
        new = (cur.n, -_zero_count(cur))
        if new < potential:
            potential = new
        elif zero_minor:
            owed = True
        else:
            raise InternalError("reduction potential did not decrease")
    if cur.n != 3:
        raise InternalError(f"reduction stopped at {cur.n} columns")
    return _finish(M, base_case_3x3(cur), log, cur)


def decide(M: Matrix) -> Verdict:
    if M.m == 2:
        return synthesize_rank2(M)
    if M.m == 3:
        return synthesize_rank3(M)
    raise InputError(f"unsupported rank class: {M.m} rows (only 2 and 3 are characterized)")
