"""Networks in a cylinder: data model, validation, path sums, slicing.

A network lives on ``S^1 x [0, 1]``. Sources sit on the left circle (layer
0), sinks on the right circle (layer 1), and every interior vertex carries
a layer coordinate in ``(0, 1)``. Layers stand in for an embedding: every
edge must strictly increase the layer.

Optionally a vertex also carries an *angle* in ``[0, 1)`` (its position on
the circle) and an edge carries a ``wind`` count and ``via`` waypoints.
An edge is then the polyline

    (layer(u), angle(u)) -> via... -> (layer(v), angle(v) + wind)

drawn in the universal cover ``R x [0, 1]``. Slicing needs this geometry to
order the cut points around the circle; everything else ignores it.
"""

from __future__ import annotations

import graphlib
import math
from collections import defaultdict
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import FormatError, InputError
from .exactmat import Matrix, format_rational, parse_rational

SOURCE, SINK, INTERIOR = "source", "sink", "interior"


@dataclass(frozen=True)
class Edge:
    tail: str
    head: str
    weight: Fraction
    wind: int = 0
    via: tuple[tuple[Fraction, Fraction], ...] = ()


def _frac(x) -> Fraction:
    return x if type(x) is Fraction else Fraction(x)


def _exact_edge(e: Edge) -> Edge:
    if type(e.weight) is Fraction and all(type(l) is Fraction and type(a) is Fraction for l, a in e.via):
        return e if type(e.via) is tuple else replace(e, via=tuple(e.via))
    return replace(e, weight=Fraction(e.weight), via=tuple((Fraction(l), Fraction(a)) for l, a in e.via))


@dataclass(frozen=True)
class Violation:
    condition: str
    detail: str
    witness: tuple = ()

    def __str__(self) -> str:
        return f"{self.condition}: {self.detail}"


class InvalidNetwork(InputError):
    def __init__(self, violation: Violation):
        self.violation = violation
        super().__init__(str(violation))


@dataclass(frozen=True)
class CylNetwork:
    """Immutable network. ``layers`` and ``angles`` map vertex id to value;
    sources and sinks are absent from ``layers`` (their layers are 0 and 1)."""

    sources: tuple[str, ...]
    sinks: tuple[str, ...]
    layers: dict[str, Fraction]
    edges: tuple[Edge, ...]
    angles: dict[str, Fraction] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "sources", tuple(self.sources))
        object.__setattr__(self, "sinks", tuple(self.sinks))
        object.__setattr__(self, "layers", {v: _frac(t) for v, t in self.layers.items()})
        object.__setattr__(self, "angles", {v: _frac(a) for v, a in self.angles.items()})
        object.__setattr__(self, "edges", tuple(map(_exact_edge, self.edges)))
        object.__setattr__(self, "_source_set", frozenset(self.sources))
        object.__setattr__(self, "_sink_set", frozenset(self.sinks))

    def __hash__(self):
        return hash((self.sources, self.sinks, self.edges))

    @property
    def interior(self) -> list[str]:
        return list(self.layers)

    @property
    def vertices(self) -> list[str]:
        return [*self.sources, *self.layers, *self.sinks]

    def kind(self, v: str) -> str:
        if v in self.layers:
            return INTERIOR
        if v in self._source_set:
            return SOURCE
        if v in self._sink_set:
            return SINK
        raise KeyError(v)


    def layer(self, v: str) -> Fraction:
        if v in self.layers:
            return self.layers[v]
        if v in self._source_set:
            return Fraction(0)
        if v in self._sink_set:
            return Fraction(1)
        raise KeyError(v)

    def has_geometry(self) -> bool:
        return all(v in self.angles for v in self.vertices)

    def out_edges(self) -> dict[str, list[int]]:
        out = defaultdict(list)
        for k, e in enumerate(self.edges):
            out[e.tail].append(k)
        return out

    def in_edges(self) -> dict[str, list[int]]:
        inc = defaultdict(list)
        for k, e in enumerate(self.edges):
            inc[e.head].append(k)
        return inc

    def degree(self, v: str) -> int:
        return sum((e.tail == v) + (e.head == v) for e in self.edges)

    def canonical(self) -> CylNetwork:
        """Same network with interior vertices and edges in sorted order."""
        layers = dict(sorted(self.layers.items()))
        edges = tuple(sorted(self.edges, key=lambda e: (e.tail, e.head, e.weight, e.wind, e.via)))
        angles = {v: self.angles[v] for v in self.vertices if v in self.angles}
        return CylNetwork(self.sources, self.sinks, layers, edges, angles)


# -- validation -----------------------------------------------------------


def _find_cycle(vertices: Iterable[str], edges: Sequence[Edge]) -> list[str] | None:
    succ = defaultdict(list)
    for e in edges:
        succ[e.tail].append(e.head)
    color = {}
    for root in vertices:
        if root in color:
            continue
        stack = [(root, iter(succ[root]))]
        path = [root]
        color[root] = 1
        while stack:
            v, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                color[v] = 2
                stack.pop()
                path.pop()
            elif color.get(nxt) == 1:
                return path[path.index(nxt):] + [nxt]
            elif nxt not in color:
                color[nxt] = 1
                stack.append((nxt, iter(succ[nxt])))
                path.append(nxt)
    return None


def validate(N: CylNetwork) -> Violation | None:
    """Return ``None`` if ``N`` is a valid network in a cylinder, else the
    first violated condition with a witness.

    Boundary vertices may be isolated: a right-boundary vertex with no
    edges is still a sink, and it is how a zero column is realized.
    """
    seen = set()
    for v in N.vertices:
        if v in seen:
            return Violation("duplicate-vertex", f"vertex {v!r} declared twice", (v,))
        seen.add(v)
    for k, e in enumerate(N.edges):
        for end in (e.tail, e.head):
            if end not in seen:
                return Violation("unknown-vertex", f"edge {k} references undeclared {end!r}", (k, end))
        if e.weight <= 0:
            return Violation("nonpositive-weight", f"edge {k} has weight {format_rational(e.weight)}", (k,))
    for v, t in N.layers.items():
        if not 0 < t < 1:
            return Violation("layer-range", f"interior vertex {v!r} has layer {format_rational(t)} outside (0,1)", (v,))
    for v, a in N.angles.items():
        if not 0 <= a < 1:
            return Violation("angle-range", f"vertex {v!r} has angle {format_rational(a)} outside [0,1)", (v,))

    indeg, outdeg = defaultdict(int), defaultdict(int)
    for e in N.edges:
        outdeg[e.tail] += 1
        indeg[e.head] += 1
    for s in N.sources:
        if indeg[s]:
            return Violation("boundary", f"source {s!r} has an incoming edge", (s,))
    for s in N.sinks:
        if outdeg[s]:
            return Violation("boundary", f"sink {s!r} has an outgoing edge", (s,))
    for v in N.layers:
        if not indeg[v]:
            return Violation("interior", f"interior vertex {v!r} is a source of the digraph", (v,))
        if not outdeg[v]:
            return Violation("interior", f"interior vertex {v!r} is a sink of the digraph", (v,))

    cycle = _find_cycle(N.vertices, N.edges)
    if cycle is not None:
        return Violation("oriented loop", " -> ".join(cycle), tuple(cycle))

    for k, e in enumerate(N.edges):
        lt, lh = N.layer(e.tail), N.layer(e.head)
        if not lt < lh:
            return Violation(
                "orientation",
                f"edge {k} {e.tail}->{e.head} does not increase the layer",
                (k,),
            )
        prev = lt
        for l, _ in e.via:
            if not prev < l:
                return Violation("orientation", f"edge {k} waypoints are not layer-increasing", (k,))
            prev = l
        if e.via and not prev < lh:
            return Violation("orientation", f"edge {k} waypoints are not layer-increasing", (k,))
    return None


def require_valid(N: CylNetwork) -> None:
    bad = validate(N)
    if bad is not None:
        raise InvalidNetwork(bad)


def is_perfect(N: CylNetwork) -> bool:
    require_valid(N)
    deg = defaultdict(int)
    for e in N.edges:
        deg[e.tail] += 1
        deg[e.head] += 1
    return all(deg[v] == 1 for v in (*N.sources, *N.sinks)) and all(deg[v] == 3 for v in N.layers)


# -- boundary measurements ------------------------------------------------


def topological_order(N: CylNetwork) -> list[str]:
    ts = graphlib.TopologicalSorter({v: () for v in N.vertices})
    for e in N.edges:
        ts.add(e.head, e.tail)
    return list(ts.static_order())


def boundary_measurements(N: CylNetwork) -> Matrix:
    """Path sums ``M[i][j]`` from source ``i`` to sink ``j`` by dynamic
    programming over a topological order; no path is enumerated."""
    require_valid(N)
    m = len(N.sources)
    acc = {v: [Fraction(0)] * m for v in N.vertices}
    for i, s in enumerate(N.sources):
        acc[s][i] = Fraction(1)
    inc = N.in_edges()
    sources = set(N.sources)
    for v in topological_order(N):
        if v in sources:
            continue
        total = acc[v]
        for k in inc.get(v, ()):
            e = N.edges[k]
            src = acc[e.tail]
            for i in range(m):
                if src[i]:
                    total[i] += src[i] * e.weight
    return Matrix([[acc[t][i] for t in N.sinks] for i in range(m)])


# -- perfectization -------------------------------------------------------


class _Fresh:
    def __init__(self, taken: Iterable[str], prefix: str):
        self.taken = set(taken)
        self.prefix = prefix
        self.k = 0

    def __call__(self) -> str:
        while True:
            self.k += 1
            name = f"{self.prefix}{self.k}"
            if name not in self.taken:
                self.taken.add(name)
                return name


def _spaced(lo: Fraction, hi: Fraction, count: int) -> list[Fraction]:
    step = (hi - lo) / (count + 1)
    return [lo + step * (k + 1) for k in range(count)]


def contract_degree_two(N: CylNetwork) -> CylNetwork:
    """Splice out interior vertices with one in-edge and one out-edge.

    The merged edge carries the product weight; when both edges and the
    vertex have geometry the vertex becomes a waypoint.
    """
    layers = dict(N.layers)
    angles = dict(N.angles)
    edges = list(N.edges)
    changed = True
    while changed:
        changed = False
        inc, out = defaultdict(list), defaultdict(list)
        for k, e in enumerate(edges):
            out[e.tail].append(k)
            inc[e.head].append(k)
        for v in list(layers):
            if len(inc[v]) == 1 and len(out[v]) == 1:
                a, b = edges[inc[v][0]], edges[out[v][0]]
                if v in angles:
                    lift = angles[v] + a.wind
                    via = (*a.via, (layers[v], lift), *((l, x + lift - angles[v]) for l, x in b.via))
                else:
                    via = ()
                merged = Edge(a.tail, b.head, a.weight * b.weight, a.wind + b.wind, via)
                edges = [e for k, e in enumerate(edges) if k not in (inc[v][0], out[v][0])] + [merged]
                del layers[v]
                angles.pop(v, None)
                changed = True
                break
    return CylNetwork(N.sources, N.sinks, layers, tuple(edges), angles)


def perfectize(N: CylNetwork) -> CylNetwork:
    """Equivalent perfect network: boundary vertices of degree 1, interior
    vertices of degree 3.

    High-degree vertices become left combs joined by weight-1 edges; new
    vertices get no angle, so the result is only sliceable when ``N`` was
    already perfect.
    """
    require_valid(N)
    if is_perfect(N):
        return N
    for v in (*N.sources, *N.sinks):
        if N.degree(v) == 0:
            raise InputError(f"boundary vertex {v!r} is isolated; no perfect network realizes a zero row or column")
    N = contract_degree_two(N)
    fresh = _Fresh(N.vertices, "p")
    layers = dict(N.layers)
    angles = {v: a for v, a in N.angles.items()}
    edges = list(N.edges)

    def layer(v):
        return N.layer(v) if v not in layers else layers[v]

    def strip(e: Edge, **kw) -> Edge:
        return replace(e, via=(), **kw)

    # interior vertices
    for v in list(N.layers):
        ins = [k for k, e in enumerate(edges) if e.head == v]
        outs = [k for k, e in enumerate(edges) if e.tail == v]
        if len(ins) + len(outs) == 3:
            continue
        lo = max(layer(edges[k].tail) for k in ins)
        hi = min(layer(edges[k].head) for k in outs)
        p, q = len(ins), len(outs)
        chain = [fresh() for _ in range(p - 1 + q - 1)]
        merge, split = chain[: p - 1], chain[p - 1:]
        new_edges = []
        # in-edges: first two into merge[0], then one more into each next
        if merge:
            new_edges.append(strip(edges[ins[0]], head=merge[0]))
            for a, k in enumerate(ins[1:]):
                new_edges.append(strip(edges[k], head=merge[a]))
                if a + 1 < len(merge):
                    new_edges.append(Edge(merge[a], merge[a + 1], Fraction(1)))
            hub_in = merge[-1]
        else:
            hub_in = None
        if split:
            entry = split[0]
            if hub_in is None:
                new_edges.append(strip(edges[ins[0]], head=entry))
            else:
                new_edges.append(Edge(hub_in, entry, Fraction(1)))
            for a, k in enumerate(outs[:-1]):
                new_edges.append(strip(edges[k], tail=split[a]))
                if a + 1 < len(split):
                    new_edges.append(Edge(split[a], split[a + 1], Fraction(1)))
            new_edges.append(strip(edges[outs[-1]], tail=split[-1]))
        else:
            new_edges.append(strip(edges[outs[0]], tail=hub_in))
        for name, t in zip(chain, _spaced(lo, hi, len(chain))):
            layers[name] = t
        del layers[v]
        angles.pop(v, None)
        drop = set(ins) | set(outs)
        edges = [e for k, e in enumerate(edges) if k not in drop] + new_edges

    # sources with several out-edges
    for s in N.sources:
        outs = [k for k, e in enumerate(edges) if e.tail == s]
        if len(outs) < 2:
            continue
        hi = min(layer(edges[k].head) for k in outs)
        chain = [fresh() for _ in range(len(outs) - 1)]
        new_edges = [Edge(s, chain[0], Fraction(1))]
        for a, k in enumerate(outs[:-1]):
            new_edges.append(strip(edges[k], tail=chain[a]))
            if a + 1 < len(chain):
                new_edges.append(Edge(chain[a], chain[a + 1], Fraction(1)))
        new_edges.append(strip(edges[outs[-1]], tail=chain[-1]))
        for name, t in zip(chain, _spaced(Fraction(0), hi, len(chain))):
            layers[name] = t
        edges = [e for k, e in enumerate(edges) if k not in outs] + new_edges

    # sinks with several in-edges
    for t in N.sinks:
        ins = [k for k, e in enumerate(edges) if e.head == t]
        if len(ins) < 2:
            continue
        lo = max(layer(edges[k].tail) for k in ins)
        chain = [fresh() for _ in range(len(ins) - 1)]
        new_edges = [strip(edges[ins[0]], head=chain[0])]
        for a, k in enumerate(ins[1:]):
            new_edges.append(strip(edges[k], head=chain[a]))
            new_edges.append(Edge(chain[a], chain[a + 1] if a + 1 < len(chain) else t, Fraction(1)))
        for name, x in zip(chain, _spaced(lo, Fraction(1), len(chain))):
            layers[name] = x
        edges = [e for k, e in enumerate(edges) if k not in ins] + new_edges

    out = CylNetwork(N.sources, N.sinks, layers, tuple(edges), angles)
    require_valid(out)
    return out


# -- slicing --------------------------------------------------------------


@dataclass(frozen=True)
class SliceResult:
    network: CylNetwork
    cut_edges: dict[int, int]  # new sink index (1-based) -> edge index in the original


def _lift_at(N: CylNetwork, e: Edge, t: Fraction) -> Fraction:
    """Cover coordinate where ``e`` crosses layer ``t``, on the tail's sheet."""
    pts = [(N.layer(e.tail), N.angles[e.tail]), *e.via, (N.layer(e.head), N.angles[e.head] + e.wind)]
    for (l0, a0), (l1, a1) in zip(pts, pts[1:]):
        if l0 <= t <= l1:
            return a0 + (a1 - a0) * (t - l0) / (l1 - l0)
    raise InputError("edge does not cross the cut")


def slice_network(N: CylNetwork, t) -> SliceResult:
    """The subnetwork on ``S^1 x [0, t]``: edges crossing layer ``t`` are
    cut and their crossing points become the new sinks, ordered by angle
    counting up from 0. Layers are rescaled by ``1/t``.
    """
    t = Fraction(t)
    require_valid(N)
    if not 0 < t < 1:
        raise InputError(f"cut {format_rational(t)} must lie in (0,1)")
    for v, l in N.layers.items():
        if l == t:
            raise InputError(f"cut {format_rational(t)} collides with vertex {v!r}")
    for k, e in enumerate(N.edges):
        for l, _ in e.via:
            if l == t:
                raise InputError(f"cut {format_rational(t)} collides with a waypoint of edge {k}")
    if not N.has_geometry():
        raise InputError("slicing needs an angle for every vertex (this network carries no embedding data)")

    keep = {v for v, l in N.layers.items() if l < t}
    crossing = []
    edges = []
    for k, e in enumerate(N.edges):
        lt, lh = N.layer(e.tail), N.layer(e.head)
        if lh < t:
            edges.append((k, e))
        elif lt < t:
            lift = _lift_at(N, e, t)
            crossing.append((lift - math.floor(lift), k))
    crossing.sort()
    if any(a == b for (a, _), (b, _) in zip(crossing, crossing[1:])):
        raise InputError("two cut points coincide; cyclic order is ambiguous")

    fresh = _Fresh(N.vertices, "cut")
    new_sinks, cut_map, angles = [], {}, {}
    for v in (*N.sources, *keep):
        if v in N.angles:
            angles[v] = N.angles[v]
    out_edges = [replace(e, via=tuple((l / t, a) for l, a in e.via)) for _, e in edges]
    for idx, (pos, k) in enumerate(crossing, 1):
        e = N.edges[k]
        name = fresh()
        new_sinks.append(name)
        cut_map[idx] = k
        angles[name] = pos
        via = tuple((l / t, a) for l, a in e.via if l < t)
        out_edges.append(Edge(e.tail, name, e.weight, math.floor(_lift_at(N, e, t)), via))
    layers = {v: N.layers[v] / t for v in N.layers if v in keep}
    sliced = CylNetwork(N.sources, tuple(new_sinks), layers, tuple(out_edges), angles)
    require_valid(sliced)
    return SliceResult(sliced, cut_map)


def vertex_layers(N: CylNetwork) -> list[Fraction]:
    return sorted(set(N.layers.values()))


# -- text format ----------------------------------------------------------


def parse_network(text: str) -> CylNetwork:
    """Read the line-oriented network format.

    ::

        cylinder S K
        source <id> [angle]
        sink <id> [angle]
        vertex <id> <layer> [angle]
        edge <from> <to> <weight> [wind <k>] [via <layer>:<angle> ...]
    """
    header = None
    sources, sinks, layers, angles, edges = [], [], {}, {}, []

    def rat(tok, lineno, col):
        try:
            return parse_rational(tok)
        except InputError as e:
            raise FormatError(str(e), lineno, col) from None

    for lineno, raw in enumerate(text.splitlines(), 1):
        toks = raw.split("#", 1)[0].split()
        if not toks:
            continue
        word = toks[0]
        if header is None:
            if word != "cylinder" or len(toks) != 3 or not all(x.isdigit() for x in toks[1:]):
                raise FormatError("first line must be 'cylinder S K'", lineno)
            header = (int(toks[1]), int(toks[2]))
            continue
        if word in ("source", "sink"):
            if len(toks) not in (2, 3):
                raise FormatError(f"'{word} <id> [angle]' expected", lineno)
            (sources if word == "source" else sinks).append(toks[1])
            if len(toks) == 3:
                angles[toks[1]] = rat(toks[2], lineno, 3)
        elif word == "vertex":
            if len(toks) not in (3, 4):
                raise FormatError("'vertex <id> <layer> [angle]' expected", lineno)
            if toks[1] in layers:
                raise FormatError(f"vertex {toks[1]!r} declared twice", lineno)
            layers[toks[1]] = rat(toks[2], lineno, 3)
            if len(toks) == 4:
                angles[toks[1]] = rat(toks[3], lineno, 4)
        elif word == "edge":
            if len(toks) < 4:
                raise FormatError("'edge <from> <to> <weight>' expected", lineno)
            wind, via, k = 0, [], 4
            while k < len(toks):
                if toks[k] == "wind" and k + 1 < len(toks):
                    try:
                        wind = int(toks[k + 1])
                    except ValueError:
                        raise FormatError("wind must be an integer", lineno, k + 2) from None
                    k += 2
                elif toks[k] == "via":
                    k += 1
                    while k < len(toks) and ":" in toks[k]:
                        l, a = toks[k].split(":", 1)
                        via.append((rat(l, lineno, k + 1), rat(a, lineno, k + 1)))
                        k += 1
                else:
                    raise FormatError(f"unexpected token {toks[k]!r}", lineno, k + 1)
            edges.append(Edge(toks[1], toks[2], rat(toks[3], lineno, 4), wind, tuple(via)))
        else:
            raise FormatError(f"unknown directive {word!r}", lineno, 1)
    if header is None:
        raise FormatError("empty network file", 1)
    if (len(sources), len(sinks)) != header:
        raise FormatError(f"header declares {header[0]} sources and {header[1]} sinks, found {len(sources)} and {len(sinks)}")
    return CylNetwork(tuple(sources), tuple(sinks), layers, tuple(edges), angles)


def format_network(N: CylNetwork) -> str:
    N = N.canonical()
    fr = format_rational
    out = [f"cylinder {len(N.sources)} {len(N.sinks)}"]
    for kind, ids in (("source", N.sources), ("sink", N.sinks)):
        for v in ids:
            out.append(f"{kind} {v}" + (f" {fr(N.angles[v])}" if v in N.angles else ""))
    for v, t in N.layers.items():
        out.append(f"vertex {v} {fr(t)}" + (f" {fr(N.angles[v])}" if v in N.angles else ""))
    for e in N.edges:
        line = f"edge {e.tail} {e.head} {fr(e.weight)}"
        if e.wind:
            line += f" wind {e.wind}"
        if e.via:
            line += " via " + " ".join(f"{fr(l)}:{fr(a)}" for l, a in e.via)
        out.append(line)
    return "\n".join(out) + "\n"


# -- shipped example ------------------------------------------------------

EXAMPLE_CUT = Fraction(3, 5)


def example_network() -> CylNetwork:
    """The three-source example network shipped in ``data/example.net``."""
    from importlib import resources

    return parse_network(resources.files("cylpos").joinpath("data/example.net").read_text())
