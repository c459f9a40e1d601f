"""Exact rational matrices: minors, rank, and cyclic sign variation.

Every value is a :class:`fractions.Fraction`. Column indices in the public
API are 1-based, matching the way the column operations are written.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Sequence

from .errors import FormatError, InputError

Rational = Fraction

_TOKEN = re.compile(r"^(-?\d+)(?:/(\d+))?$")


def as_rational(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool) or not isinstance(x, (int, str)):
        raise InputError(f"not an exact rational: {x!r}")
    return parse_rational(x) if isinstance(x, str) else Fraction(x)


def parse_rational(token: str) -> Fraction:
    """Parse ``p`` or ``p/q`` with ``q`` a positive integer."""
    m = _TOKEN.match(token)
    if m is None:
        raise InputError(f"malformed rational {token!r}")
    num, den = m.group(1), m.group(2)
    if den is None:
        return Fraction(int(num))
    if int(den) == 0:
        raise InputError(f"zero denominator in {token!r}")
    return Fraction(int(num), int(den))


def format_rational(x: Fraction) -> str:
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


@dataclass(frozen=True)
class Matrix:
    """Immutable ``m x n`` matrix of Fractions, stored row-major."""

    rows: tuple[tuple[Fraction, ...], ...]

    def __init__(self, rows: Iterable[Iterable]):
        data = tuple(tuple(as_rational(x) for x in row) for row in rows)
        if not data or not data[0]:
            raise InputError("matrix must have at least one row and one column")
        width = len(data[0])
        if any(len(r) != width for r in data):
            raise InputError("ragged rows")
        object.__setattr__(self, "rows", data)

    @classmethod
    def identity(cls, m: int) -> Matrix:
        return cls([[int(i == j) for j in range(m)] for i in range(m)])

    @classmethod
    def zeros(cls, m: int, n: int) -> Matrix:
        return cls([[0] * n for _ in range(m)])

    @classmethod
    def from_columns(cls, columns: Sequence[Sequence[Fraction]]) -> Matrix:
        if not columns:
            raise InputError("matrix must have at least one column")
        return cls(zip(*columns))

    @property
    def m(self) -> int:
        return len(self.rows)

    @property
    def n(self) -> int:
        return len(self.rows[0])

    @property
    def shape(self) -> tuple[int, int]:
        return self.m, self.n

    def __getitem__(self, ij: tuple[int, int]) -> Fraction:
        """0-based entry access."""
        i, j = ij
        return self.rows[i][j]

    def column(self, j: int) -> tuple[Fraction, ...]:
        """1-based column, index taken cyclically."""
        j = (j - 1) % self.n
        return tuple(r[j] for r in self.rows)

    def columns(self) -> list[tuple[Fraction, ...]]:
        return [tuple(c) for c in zip(*self.rows)]

    def entries(self) -> Iterable[Fraction]:
        for r in self.rows:
            yield from r

    def __str__(self) -> str:
        return format_matrix(self)

    def tolist(self) -> list[list[Fraction]]:
        return [list(r) for r in self.rows]


# -- determinants ---------------------------------------------------------


def _integer_rows(rows: Sequence[Sequence[Fraction]]) -> tuple[list[list[int]], Fraction]:
    """Scale each row to integers; returns the rows and the product of scales."""
    scale = Fraction(1)
    out = []
    for r in rows:
        lcm = 1
        for x in r:
            lcm = lcm * x.denominator // math.gcd(lcm, x.denominator)
        out.append([int(x * lcm) for x in r])
        scale *= lcm
    return out, scale


def _bareiss(a: list[list[int]]) -> tuple[int, int]:
    """Fraction-free elimination in place. Returns (rank, signed last pivot).

    For a square full-rank input the second value is the determinant.
    """
    rows, cols = len(a), len(a[0])
    sign, prev, r = 1, 1, 0
    for c in range(cols):
        if r == rows:
            break
        pivot = next((k for k in range(r, rows) if a[k][c] != 0), None)
        if pivot is None:
            continue
        if pivot != r:
            a[r], a[pivot] = a[pivot], a[r]
            sign = -sign
        for k in range(r + 1, rows):
            for j in range(c + 1, cols):
                a[k][j] = (a[k][j] * a[r][c] - a[k][c] * a[r][j]) // prev
            a[k][c] = 0
        prev = a[r][c]
        r += 1
    return r, sign * prev


def det(rows: Sequence[Sequence[Fraction]]) -> Fraction:
    """Determinant of a square list of rows."""
    k = len(rows)
    if k == 0:
        return Fraction(1)
    if any(len(r) != k for r in rows):
        raise InputError("determinant of a non-square array")
    if k == 1:
        return Fraction(rows[0][0])
    if k == 2:
        return rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0]
    ints, scale = _integer_rows(rows)
    rank, d = _bareiss(ints)
    if rank < k:
        return Fraction(0)
    return Fraction(d) / scale


def minor(M: Matrix, rows: Iterable[int], cols: Iterable[int]) -> Fraction:
    """Determinant of the submatrix on 1-based ``rows`` x ``cols``.

    Indices are used in the order given, so passing columns out of order
    permutes the determinant's sign accordingly.
    """
    rows, cols = list(rows), list(cols)
    if len(rows) != len(cols) or not rows:
        raise InputError(f"minor needs equal nonempty index sets, got {len(rows)}x{len(cols)}")
    for i in rows:
        if not 1 <= i <= M.m:
            raise InputError(f"row index {i} out of range 1..{M.m}")
    for j in cols:
        if not 1 <= j <= M.n:
            raise InputError(f"column index {j} out of range 1..{M.n}")
    return det([[M.rows[i - 1][j - 1] for j in cols] for i in rows])


def column_det(columns: Sequence[Sequence[Fraction]]) -> Fraction:
    """Determinant of the square matrix whose columns are given."""
    return det([list(r) for r in zip(*columns)])


def rank(M: Matrix) -> int:
    ints, _ = _integer_rows(M.rows)
    r, _ = _bareiss(ints)
    return r


def vector_rank(vectors: Sequence[Sequence[Fraction]]) -> int:
    if not vectors:
        return 0
    ints, _ = _integer_rows([list(v) for v in vectors])
    r, _ = _bareiss(ints)
    return r


# -- sign variation -------------------------------------------------------


def _sign(x: Fraction) -> int:
    return (x > 0) - (x < 0)


def cyclic_minor_sequence(M: Matrix) -> tuple[Fraction, ...]:
    """``(D_1, ..., D_n)`` where ``D_i`` is the determinant of the ``m``
    consecutive columns starting at ``i``, indices mod ``n``.

    Empty when ``n < m``.
    """
    m, n = M.shape
    if n < m:
        return ()
    cols = M.columns()
    return tuple(column_det([cols[(i + k) % n] for k in range(m)]) for i in range(n))


def var(v: Sequence[Fraction]) -> int:
    signs = [s for s in map(_sign, v) if s]
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def cvar_vector(v: Sequence[Fraction]) -> int:
    k = next((i for i, x in enumerate(v) if x != 0), None)
    if k is None:
        return 0
    return var(list(v[k:]) + [v[k]])


def cvar_matrix(M: Matrix) -> int:
    return cvar_vector(cyclic_minor_sequence(M))


# -- odd minors (m = 3) ---------------------------------------------------


@dataclass(frozen=True)
class MinorViolation:
    rows: tuple[int, ...]
    cols: tuple[int, ...]
    value: Fraction


def first_negative_entry(M: Matrix) -> MinorViolation | None:
    for i, row in enumerate(M.rows, 1):
        for j, x in enumerate(row, 1):
            if x < 0:
                return MinorViolation((i,), (j,), x)
    return None


def maximal_minors(M: Matrix):
    """Yield ``(cols, value)`` for every ``m x m`` minor, columns ascending."""
    rows = list(range(1, M.m + 1))
    for cols in combinations(range(1, M.n + 1), M.m):
        yield cols, minor(M, rows, cols)


def odd_minors_nonneg(M: Matrix) -> tuple[bool, MinorViolation | None]:
    """Check every entry and every 3x3 minor of a 3-row matrix."""
    if M.m != 3:
        raise InputError(f"odd-minor test is defined here for 3 rows, got {M.m}")
    bad = first_negative_entry(M)
    if bad is not None:
        return False, bad
    for cols, value in maximal_minors(M):
        if value < 0:
            return False, MinorViolation((1, 2, 3), cols, value)
    return True, None


# -- text format ----------------------------------------------------------


def parse_matrix(text: str) -> Matrix:
    """Read the ``m n`` header format; blank lines and ``#`` comments ignored."""
    lines = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        body = raw.split("#", 1)[0].split()
        if body:
            lines.append((lineno, body))
    if not lines:
        raise FormatError("empty matrix file", 1)
    lineno, header = lines[0]
    if len(header) != 2 or not all(t.isdigit() for t in header):
        raise FormatError("header must be 'm n'", lineno)
    m, n = int(header[0]), int(header[1])
    if m < 1 or n < 1:
        raise FormatError("dimensions must be positive", lineno)
    if len(lines) - 1 != m:
        raise FormatError(f"expected {m} rows, found {len(lines) - 1}", lineno)
    rows = []
    for lineno, toks in lines[1:]:
        if len(toks) != n:
            raise FormatError(f"expected {n} entries, found {len(toks)}", lineno)
        row = []
        for col, tok in enumerate(toks, 1):
            try:
                row.append(parse_rational(tok))
            except InputError as e:
                raise FormatError(str(e), lineno, col) from None
        rows.append(row)
    return Matrix(rows)


def format_matrix(M: Matrix) -> str:
    out = [f"{M.m} {M.n}"]
    out += [" ".join(format_rational(x) for x in row) for row in M.rows]
    return "\n".join(out) + "\n"
