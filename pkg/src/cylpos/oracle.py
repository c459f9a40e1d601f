"""Brute-force generators and checkers used to validate the rest of the
package: exhaustive matrix enumeration, explicit path enumeration, random
certificates and networks, and a cross-check that re-derives the
acceptance condition with deliberately naive linear algebra.

Randomness comes from :class:`random.Random` (Mersenne Twister) seeded with
a string, so a run is reproducible from its recorded seed.
"""

from __future__ import annotations

import os
import random
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, islice, product
from typing import Callable, Iterator, Sequence

from . import colops, synth
from .colops import Certificate, ColumnOp, Double, Join, Rescale, Shift
from .cylnet import CylNetwork, Edge, boundary_measurements, require_valid
from .errors import InputError
from .exactmat import Matrix, format_rational, parse_matrix

DEFAULT_PATH_BOUND = 10**6


# -- enumeration ----------------------------------------------------------


FILTERS: dict[str, Callable[[Matrix], bool]] = {
    "all": lambda M: True,
    "no-zero-column": lambda M: all(any(x != 0 for x in c) for c in M.columns()),
}


@dataclass(frozen=True)
class EnumSpec:
    """Every ``m x n`` matrix over ``alphabet`` for ``m <= n <= n_max``."""

    m: int
    n_max: int
    alphabet: tuple[int, ...]
    filter: str = "all"

    def __post_init__(self):
        object.__setattr__(self, "alphabet", tuple(self.alphabet))
        if not self.alphabet:
            raise InputError("alphabet must be nonempty")
        if len(set(self.alphabet)) != len(self.alphabet):
            raise InputError("alphabet has repeated symbols")
        if self.filter not in FILTERS:
            raise InputError(f"unknown filter {self.filter!r}")

    def size(self) -> int:
        """Number of matrices before filtering."""
        k = len(self.alphabet)
        return sum(k ** (self.m * n) for n in range(self.m, self.n_max + 1))

    def describe(self) -> str:
        alpha = ",".join(map(str, self.alphabet))
        return f"m={self.m} n<={self.n_max} alphabet={alpha} filter={self.filter}"


def _raw(spec: EnumSpec) -> Iterator[Matrix]:
    m = spec.m
    for n in range(m, spec.n_max + 1):
        for flat in product(spec.alphabet, repeat=m * n):
            yield Matrix([flat[r * n:(r + 1) * n] for r in range(m)])


def enumerate_indexed(spec: EnumSpec, start: int = 0, stop: int | None = None) -> Iterator[tuple[int, Matrix]]:
    """``(index, matrix)`` in odometer order, for raw indices in ``[start, stop)``.

    Indices count every matrix, filtered or not, so shards of an index
    range line up regardless of the filter.
    """
    keep = FILTERS[spec.filter]
    for k, M in enumerate(islice(_raw(spec), start, stop), start):
        if keep(M):
            yield k, M


def enumerate_matrices(spec: EnumSpec) -> Iterator[Matrix]:
    for _, M in enumerate_indexed(spec):
        yield M


# -- random instances -----------------------------------------------------


def _rng(seed, *salt) -> random.Random:
    return random.Random(":".join(map(str, (seed, *salt))))


def random_op(rng: random.Random, n: int, zero_rescale: bool = False) -> ColumnOp:
    """A uniformly chosen operation kind, valid at width ``n``."""
    kinds = ["double", "shift", "rescale"] + (["join"] if n >= 2 else [])
    kind = rng.choice(kinds)
    if kind == "join":
        return Join(rng.randint(1, n - 1))
    if kind == "double":
        return Double(rng.randint(1, n))
    if kind == "shift":
        return Shift()
    if zero_rescale and rng.random() < 0.1:
        return Rescale(rng.randint(1, n), Fraction(0))
    return Rescale(rng.randint(1, n), Fraction(rng.randint(1, 9), rng.randint(1, 9)))


def random_certificate(m: int, length: int, seed: int) -> Certificate:
    """Deterministic in ``(m, length, seed)``. Rescale factors are ``p/q``
    with ``p, q`` in ``1..9``."""
    if m < 1:
        raise InputError("certificate needs at least one row")
    if length < 0:
        raise InputError("length must be nonnegative")
    rng = _rng(seed, m, length)
    ops, n = [], m
    for _ in range(length):
        op = random_op(rng, n)
        ops.append(op)
        n += 1 if isinstance(op, Double) else -1 if isinstance(op, Join) else 0
    return Certificate(m, tuple(ops))


def random_network(seed, sources: int = 2, sinks: int = 3, interior: int = 4, extra_edges: int = 4) -> CylNetwork:
    """A valid layered network with positive rational weights.

    Every interior vertex gets an incoming edge from something at a lower
    layer and an outgoing edge to something at a higher layer, and every
    boundary vertex is used, so the result is always perfectizable.
    """
    rng = _rng(seed, "net")
    S = [f"s{k}" for k in range(1, sources + 1)]
    T = [f"t{k}" for k in range(1, sinks + 1)]
    V = [f"v{k}" for k in range(1, interior + 1)]
    layers = {v: Fraction(k, interior + 1) for k, v in enumerate(V, 1)}
    level = {**{s: Fraction(0) for s in S}, **{t: Fraction(1) for t in T}, **layers}

    def weight() -> Fraction:
        return Fraction(rng.randint(1, 5), rng.randint(1, 3))

    edges: list[Edge] = []
    for v in V:
        below = [u for u in (*S, *V) if level[u] < level[v]]
        above = [u for u in (*V, *T) if level[u] > level[v]]
        edges.append(Edge(rng.choice(below), v, weight()))
        edges.append(Edge(v, rng.choice(above), weight()))
    for s in S:
        if not any(e.tail == s for e in edges):
            edges.append(Edge(s, rng.choice([*V, *T]), weight()))
    for t in T:
        if not any(e.head == t for e in edges):
            edges.append(Edge(rng.choice([*S, *V]), t, weight()))
    for _ in range(extra_edges):
        u = rng.choice([*S, *V])
        later = [w for w in (*V, *T) if level[w] > level[u]]
        edges.append(Edge(u, rng.choice(later), weight()))
    N = CylNetwork(tuple(S), tuple(T), layers, tuple(edges))
    require_valid(N)
    return N


# -- explicit path enumeration --------------------------------------------


class PathBoundExceeded(Exception):
    """Signals that an oracle run was skipped: too many paths to list."""


def path_bound() -> int:
    raw = os.environ.get("CYLPOS_PATH_BOUND")
    if raw is None:
        return DEFAULT_PATH_BOUND
    try:
        value = int(raw)
    except ValueError:
        raise InputError(f"CYLPOS_PATH_BOUND must be an integer, got {raw!r}") from None
    if value < 1:
        raise InputError("CYLPOS_PATH_BOUND must be positive")
    return value


def brute_force_paths(N: CylNetwork, bound: int | None = None) -> Matrix:
    """Boundary measurements by listing every source-to-sink path.

    Raises :class:`PathBoundExceeded` once more than ``bound`` paths have
    been walked.
    """
    require_valid(N)
    bound = path_bound() if bound is None else bound
    out: dict[str, list[tuple[str, Fraction]]] = {}
    for e in N.edges:
        out.setdefault(e.tail, []).append((e.head, e.weight))
    col = {t: j for j, t in enumerate(N.sinks)}
    M = [[Fraction(0)] * len(N.sinks) for _ in N.sources]
    walked = 0
    for i, s in enumerate(N.sources):
        stack = [(s, Fraction(1))]
        while stack:
            v, w = stack.pop()
            if v in col:
                walked += 1
                if walked > bound:
                    raise PathBoundExceeded(f"more than {bound} paths")
                M[i][col[v]] += w
                continue
            for head, x in out.get(v, ()):
                stack.append((head, w * x))
    return Matrix(M)


# -- naive condition checker ----------------------------------------------


def laplace_det(rows: Sequence[Sequence[Fraction]]) -> Fraction:
    """Cofactor expansion along the first row."""
    if not rows:
        return Fraction(1)
    if len(rows) == 1:
        return Fraction(rows[0][0])
    total = Fraction(0)
    for j, x in enumerate(rows[0]):
        if x:
            sub = [r[:j] + r[j + 1:] for r in rows[1:]]
            total += (-1) ** j * x * laplace_det(sub)
    return total


def naive_rank(M: Matrix) -> int:
    """Size of the largest nonvanishing square minor."""
    rows = [list(r) for r in M.rows]
    for k in range(min(M.m, M.n), 0, -1):
        for ri in combinations(range(M.m), k):
            for ci in combinations(range(M.n), k):
                if laplace_det([[rows[r][c] for c in ci] for r in ri]) != 0:
                    return k
    return 0


def naive_cvar(M: Matrix) -> int:
    """Sign changes around the cycle of consecutive maximal minors,
    counted straight from the definition."""
    m, n = M.shape
    cols = M.columns()
    deltas = []
    for i in range(n):
        block = [cols[(i + k) % n] for k in range(m)]
        deltas.append(laplace_det([[c[r] for c in block] for r in range(m)]))
    signs = [1 if d > 0 else -1 for d in deltas if d != 0]
    if not signs:
        return 0
    signs.append(signs[0])
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def naive_condition(M: Matrix) -> bool:
    """The closed-form acceptance condition, from scratch."""
    m, n = M.shape
    if any(x < 0 for x in M.entries()):
        return False
    if m == 2:
        return naive_rank(M) == 2 and naive_cvar(M) == 2
    if m == 3:
        rows = [list(r) for r in M.rows]
        for ci in combinations(range(n), 3):
            if laplace_det([[r[c] for c in ci] for r in rows]) < 0:
                return False
        return naive_rank(M) == 3
    raise InputError(f"no condition for {m} rows")


# -- reports --------------------------------------------------------------


def _inline(M: Matrix) -> str:
    return " | ".join([f"{M.m} {M.n}", *(" ".join(format_rational(x) for x in r) for r in M.rows)])


def parse_inline(text: str) -> Matrix:
    return parse_matrix("\n".join(part.strip() for part in text.split("|")))


@dataclass(frozen=True)
class Discrepancy:
    index: int
    matrix: Matrix
    expected: str
    got: str

    def line(self) -> str:
        return f"discrepancy {self.index}: expected {self.expected}; got {self.got}; matrix {_inline(self.matrix)}"


@dataclass
class TrialReport:
    """Counts per verdict class, discrepancies, and free-form tallies."""

    label: str
    seed: int | str | None = None
    totals: Counter = field(default_factory=Counter)
    notes: Counter = field(default_factory=Counter)
    discrepancies: list[Discrepancy] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.discrepancies

    def merge(self, other: TrialReport) -> TrialReport:
        if (self.label, self.seed) != (other.label, other.seed):
            raise InputError("cannot merge reports of different runs")
        found = sorted({d.index: d for d in (*self.discrepancies, *other.discrepancies)}.values(), key=lambda d: d.index)
        return TrialReport(self.label, self.seed, self.totals + other.totals, self.notes + other.notes, found)

    def to_text(self) -> str:
        out = [f"report {self.label}", f"seed {self.seed if self.seed is not None else '-'}"]
        out += [f"total {k} {v}" for k, v in sorted(self.totals.items())]
        out += [f"note {k} {v}" for k, v in sorted(self.notes.items())]
        out.append(f"discrepancies {len(self.discrepancies)}")
        out += [d.line() for d in self.discrepancies]
        return "\n".join(out) + "\n"


def _verdict_name(v) -> str:
    return "accept" if v.accepted else f"reject {v.witness.kind}"


def check_one(M: Matrix, index: int, report: TrialReport, condition=naive_condition, decide=synth.decide, networks: bool = True) -> None:
    """Cross-check one matrix and record the outcome in ``report``."""
    expected = condition(M)
    verdict = decide(M)
    report.totals[_verdict_name(verdict)] += 1

    def flag(exp: str, got: str) -> None:
        report.discrepancies.append(Discrepancy(index, M, exp, got))

    if verdict.accepted != expected:
        flag("accept" if expected else "reject", _verdict_name(verdict))
    if verdict.accepted:
        problem = colops.first_difference(verdict.certificate, M)
        if problem is not None:
            flag("certificate rebuilding the input", problem)
        elif networks:
            got = boundary_measurements(colops.to_network(verdict.certificate))
            if got != M:
                flag("compiled network measuring the input", _inline(got))
    else:
        if not verdict.witness.holds(M):
            flag("a witness that holds", str(verdict.witness))
        if M.m == 2 and verdict.witness.kind == synth.CVAR_ZERO and synth.construct_rank2(M) is not None:
            report.notes["cvar-zero but constructible"] += 1


def cross_check_characterization(
    spec: EnumSpec,
    start: int = 0,
    stop: int | None = None,
    condition=naive_condition,
    decide=synth.decide,
    networks: bool = True,
) -> TrialReport:
    """Compare ``decide`` with the closed-form condition over the index
    range ``[start, stop)`` of ``spec``; accepted certificates are re-applied
    and compiled to networks. Pass ``condition`` or ``decide`` to inject a
    mutant."""
    if spec.m not in (2, 3):
        raise InputError("cross-check covers 2 and 3 rows")
    report = TrialReport(spec.describe())
    for k, M in enumerate_indexed(spec, start, stop):
        check_one(M, k, report, condition, decide, networks)
    return report


def _shard(args) -> TrialReport:
    spec, start, stop, networks = args
    return cross_check_characterization(spec, start, stop, networks=networks)


def sharded_cross_check(spec: EnumSpec, jobs: int = 1, networks: bool = True) -> TrialReport:
    """Same report as :func:`cross_check_characterization`, split across processes."""
    if jobs < 1:
        raise InputError("jobs must be at least 1")
    total = spec.size()
    cuts = [total * k // jobs for k in range(jobs + 1)]
    tasks = [(spec, a, b, networks) for a, b in zip(cuts, cuts[1:])]
    if jobs == 1:
        parts = [_shard(t) for t in tasks]
    else:
        from multiprocessing import Pool

        with Pool(jobs) as pool:
            parts = pool.map(_shard, tasks)
    report = parts[0]
    for p in parts[1:]:
        report = report.merge(p)
    return report


def recheck(d: Discrepancy, condition=naive_condition, decide=synth.decide) -> bool:
    """Re-run a single input; True if it still disagrees."""
    report = TrialReport("recheck")
    check_one(d.matrix, d.index, report, condition, decide)
    return not report.ok
