"""Decorated contours, cycles, loose ends and the canonical vertex order.

Space-time points are integer tuples ``(z..., t)`` with height ``-t``. Every
edge points one unit up in height, so an edge ``(v, w)`` always satisfies
``psi[w] = psi[v] + j`` with ``j[-1] == -1``. Charge-sigma edges are grown
backwards by the chain but stored in the same direction as the others.

Vertex kinds are ``"o"`` (source), ``"*"`` (sink) or an int charge. Vertex 0
is the root and always has kind ``"o"``; a lone root with no edges is the
trivial contour, which is a source and a sink at once.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable

from ..errors import ConfigError, NotConnected

SOURCE = "o"
SINK = "*"


def add(a, b) -> tuple:
    return tuple(x + y for x, y in zip(a, b))


def sub(a, b) -> tuple:
    return tuple(x - y for x, y in zip(a, b))


def height(point) -> int:
    return -point[-1]


@dataclass(frozen=True)
class DecoratedContour:
    sigma: int
    kinds: tuple
    edges: tuple  # (v, w, s), sorted
    psi: tuple
    kappa: tuple  # ((point, k), ...), sorted by point

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple(sorted(tuple(e) for e in self.edges)))
        object.__setattr__(self, "psi", tuple(tuple(p) for p in self.psi))
        object.__setattr__(self, "kappa", tuple(sorted((tuple(p), int(k)) for p, k in dict(self.kappa).items())))

    @classmethod
    def trivial(cls, sigma: int, dimension: int = 2) -> "DecoratedContour":
        origin = (0,) * (dimension + 1)
        return cls(sigma, (SOURCE,), (), (origin,), ((origin, 0),))

    @property
    def is_trivial(self) -> bool:
        return len(self.kinds) == 1 and not self.edges

    @property
    def n_vertices(self) -> int:
        return len(self.kinds)

    @property
    def kappa_map(self) -> dict:
        return dict(self.kappa)

    def sinks(self) -> list:
        if self.is_trivial:
            return [0]
        return [v for v, k in enumerate(self.kinds) if k == SINK]

    def sources(self) -> list:
        return [v for v, k in enumerate(self.kinds) if k == SOURCE]

    def is_root_like(self, v: int, s: int) -> bool:
        """Membership in ``V'_s``: internal of charge s, or the root."""
        return v == 0 or self.kinds[v] == s

    def edge_class(self, v: int) -> str:
        """``"circ"`` for edges leaving a non-root source, ``"bullet"`` otherwise."""
        return "circ" if v != 0 and self.kinds[v] == SOURCE else "bullet"

    def counts(self) -> dict:
        """``n_star``, ``n_diamond``, ``n_circ``, ``n_bullet`` (per-charge counts taken at charge 1)."""
        sink_points = {self.psi[v] for v in self.sinks()}
        per = {s: [0, 0] for s in range(1, self.sigma + 1)}
        for v, _, s in self.edges:
            per[s][0 if self.edge_class(v) == "circ" else 1] += 1
        return {
            "n_star": len(self.sinks()),
            "n_diamond": len(set(self.psi) - sink_points),
            "n_circ": per[1][0],
            "n_bullet": per[1][1],
            "per_charge": {s: tuple(c) for s, c in per.items()},
        }

    def to_json(self) -> dict:
        return {
            "sigma": self.sigma,
            "kinds": [k if isinstance(k, str) else int(k) for k in self.kinds],
            "edges": [list(e) for e in self.edges],
            "psi": [list(p) for p in self.psi],
            "kappa": [[list(p), k] for p, k in self.kappa],
        }


# -- loose ends ----------------------------------------------------------------

def loose_ends_of(kinds: list, out_mask: list, in_mask: list, sigma: int) -> list:
    """Loose ends ``(s, v)`` sorted by urgency, from per-vertex charge bitmasks."""
    out = []
    for v, kind in enumerate(kinds):
        for s in range(1, sigma):
            if (kind == SOURCE or kind == s) and not out_mask[v] >> s & 1:
                out.append((s, v))
        if (kind == SINK or kind == sigma) and not in_mask[v] >> sigma & 1:
            out.append((sigma, v))
    out.sort()
    return out


def _masks(n: int, edges: Iterable) -> tuple:
    out_mask, in_mask = [0] * n, [0] * n
    for v, w, s in edges:
        out_mask[v] |= 1 << s
        in_mask[w] |= 1 << s
    return out_mask, in_mask


def loose_ends(contour: DecoratedContour) -> list:
    """Loose ends as ``(v, s)`` pairs, most urgent first."""
    if contour.is_trivial:
        return []
    out_mask, in_mask = _masks(contour.n_vertices, contour.edges)
    return [(v, s) for s, v in loose_ends_of(list(contour.kinds), out_mask, in_mask, contour.sigma)]


def most_urgent(contour: DecoratedContour):
    ends = loose_ends(contour)
    return ends[0] if ends else None


# -- canonical order -----------------------------------------------------------

def canonical_order(contour: DecoratedContour) -> tuple:
    """Relabeling ``eta`` (old -> new) and the replayed extension sequence.

    The graph is rebuilt from the root by always extending the most urgent
    loose end. Each step of the sequence is ``(v, w, s)`` in the new labels.
    """
    if contour.is_trivial:
        return {0: 0}, []
    sig = contour.sigma
    out_of = defaultdict(dict)
    into = defaultdict(dict)
    for v, w, s in contour.edges:
        if s in out_of[v] or s in into[w]:
            raise ConfigError(f"vertex has two edges of charge {s}")
        out_of[v][s] = w
        into[w][s] = v
    eta = {0: 0}
    kinds = [SOURCE]
    out_mask, in_mask = [0], [0]
    steps = []
    inverse = [0]
    while True:
        ends = loose_ends_of(kinds, out_mask, in_mask, sig)
        if not ends:
            break
        s, v_new = ends[0]
        v = inverse[v_new]
        other = out_of[v].get(s) if s < sig else into[v].get(s)
        if other is None:
            raise ConfigError(f"vertex {v} is missing its charge-{s} edge")
        if other not in eta:
            eta[other] = len(inverse)
            inverse.append(other)
            kinds.append(contour.kinds[other])
            out_mask.append(0)
            in_mask.append(0)
        w_new = eta[other]
        a, b = (v_new, w_new) if s < sig else (w_new, v_new)
        out_mask[a] |= 1 << s
        in_mask[b] |= 1 << s
        steps.append((a, b, s))
    if len(eta) != contour.n_vertices or len(steps) != len(contour.edges):
        raise NotConnected("replay from the root does not reach the whole graph")
    return eta, steps


def canonicalize(contour: DecoratedContour) -> DecoratedContour:
    eta, _ = canonical_order(contour)
    n = contour.n_vertices
    kinds = [None] * n
    psi = [None] * n
    for old, new in eta.items():
        kinds[new] = contour.kinds[old]
        psi[new] = contour.psi[old]
    edges = [(eta[v], eta[w], s) for v, w, s in contour.edges]
    return DecoratedContour(contour.sigma, tuple(kinds), tuple(edges), tuple(psi), contour.kappa)


# -- validation ----------------------------------------------------------------

def _graph_issues(c: DecoratedContour) -> list:
    issues = []
    sig, n = c.sigma, c.n_vertices
    if c.kinds[0] != SOURCE:
        issues.append("root must be a source")
    out_deg = defaultdict(int)
    in_deg = defaultdict(int)
    for v, w, s in c.edges:
        if not (0 <= v < n and 0 <= w < n and 1 <= s <= sig):
            issues.append(f"edge {(v, w, s)} out of range")
            continue
        out_deg[(v, s)] += 1
        in_deg[(w, s)] += 1
    for v, kind in enumerate(c.kinds):
        for s in range(1, sig + 1):
            o, i = out_deg[(v, s)], in_deg[(v, s)]
            if kind == SOURCE:
                want = (0 if c.is_trivial else 1, 0)
            elif kind == SINK:
                want = (0, 1)
            elif kind == s:
                want = (1, 1)
            elif isinstance(kind, int) and 1 <= kind <= sig:
                want = (0, 0)
            else:
                issues.append(f"vertex {v} has unknown kind {kind!r}")
                break
            if (o, i) != want:
                issues.append(f"vertex {v} ({kind}) has {o} out / {i} in edges of charge {s}")
    counts = [sum(1 for e in c.edges if e[2] == s) for s in range(1, sig + 1)]
    if len(set(counts)) > 1:
        issues.append(f"charges have unequal edge counts {counts}")
    if len(c.sources()) != len(c.sinks()):
        issues.append("number of sources and sinks differ")
    adj = defaultdict(set)
    for v, w, _ in c.edges:
        adj[v].add(w)
        adj[w].add(v)
    seen, stack = {0}, [0]
    while stack:
        for u in adj[stack.pop()]:
            if u not in seen:
                seen.add(u)
                stack.append(u)
    if len(seen) != n:
        issues.append("graph is not connected")
    return issues


def _embedding_issues(c: DecoratedContour) -> list:
    issues = []
    if any(x != 0 for x in c.psi[0]):
        issues.append("root is not embedded at the origin")
    for v, w, s in c.edges:
        if height(c.psi[w]) != height(c.psi[v]) + 1:
            issues.append(f"edge {(v, w, s)} does not climb one unit of height")
    sinks = set(c.sinks())
    for v in sinks:
        for u in range(c.n_vertices):
            if u != v and c.psi[u] == c.psi[v]:
                issues.append(f"sink {v} overlaps vertex {u}")
    for s in range(1, c.sigma + 1):
        seen = {}
        for v in range(c.n_vertices):
            if c.is_root_like(v, s) and v not in sinks:
                p = c.psi[v]
                if p in seen:
                    issues.append(f"vertices {seen[p]} and {v} of charge {s} overlap")
                seen[p] = v
    return issues


def _decoration_issues(c: DecoratedContour, A: dict, m: int, mode: str) -> list:
    issues = []
    kap = c.kappa_map
    if set(kap) != set(c.psi):
        issues.append("decoration domain differs from the embedded points")
        return issues
    for v in c.sinks():
        if kap[c.psi[v]] != 0:
            issues.append(f"sink {v} is not decorated 0")
    sig = c.sigma
    for v, w, s in c.edges:
        k = kap[c.psi[v]]
        j = sub(c.psi[w], c.psi[v])
        if not 1 <= k <= m:
            issues.append(f"edge {(v, w, s)} leaves a point decorated {k}")
            continue
        if c.edge_class(v) == "bullet":
            allowed = A[(s, k)]
        elif mode == "cycle":
            allowed = A[(3 - s, k)]
        else:
            allowed = {x for t in range(1, sig + 1) for x in A[(t, k)]}
        if j not in allowed:
            issues.append(f"edge {(v, w, s)} uses offset {j} not allowed by decoration {k}")
    return issues


def validate(c: DecoratedContour, A: dict | None = None, m: int | None = None,
             mode: str = "general") -> list:
    """Every violated condition as a string; empty when the contour is valid."""
    issues = _graph_issues(c)
    if not issues:
        issues += _embedding_issues(c)
    if A is not None and not issues:
        issues += _decoration_issues(c, A, m, mode)
    return issues


# -- Toom cycles ---------------------------------------------------------------

@dataclass(frozen=True)
class ToomCycle:
    """Closed walk ``psi_0 .. psi_n`` with ``psi_0 == psi_n``."""

    psi: tuple

    def __post_init__(self):
        object.__setattr__(self, "psi", tuple(tuple(p) for p in self.psi))

    @property
    def length(self) -> int:
        return len(self.psi) - 1

    def steps(self) -> list:
        return [height(self.psi[v]) - height(self.psi[v - 1]) for v in range(1, len(self.psi))]

    def types(self) -> list:
        """Type of each index ``0..n``: ``"o"``, ``"*"``, 1 or 2."""
        n = self.length
        if n == 0:
            return [SOURCE]
        d = self.steps()
        out = [1]
        for v in range(1, n):
            out.append({(-1, 1): SOURCE, (1, -1): SINK, (1, 1): 1, (-1, -1): 2}[(d[v - 1], d[v])])
        out.append(2)
        return out

    def issues(self) -> list:
        n = self.length
        if n == 0:
            return []
        out = []
        if n % 2:
            out.append("cycle length must be even")
        if self.psi[0] != self.psi[-1]:
            out.append("cycle is not closed")
        d = self.steps()
        if any(x not in (-1, 1) for x in d):
            out.append("height increments must be +1 or -1")
            return out
        if d[0] != 1 or d[-1] != -1:
            out.append("first step must climb and last step descend")
            return out
        types = self.types()
        rank = {1: 0, SOURCE: 1, 2: 2}
        for v in range(n + 1):
            for w in range(n + 1):
                if v == w or self.psi[v] != self.psi[w]:
                    continue
                if types[v] == SINK and {v, w} != {0, n}:
                    out.append(f"sink {v} overlaps index {w}")
                elif types[v] != SINK and types[w] != SINK and rank[types[v]] <= rank[types[w]] and v > w:
                    if {v, w} != {0, n}:
                        out.append(f"indices {w} and {v} overlap out of order")
        return out

    def to_contour(self, kappa: dict, sigma: int = 2) -> DecoratedContour:
        n = self.length
        if n == 0:
            return DecoratedContour(sigma, (SOURCE,), (), (self.psi[0],), tuple(kappa.items()))
        types = self.types()
        kinds = [SOURCE] + types[1:n]
        d = self.steps()
        edges = []
        for v in range(1, n + 1):
            if d[v - 1] == 1:
                edges.append((v - 1, v % n, 1))
            else:
                edges.append((v % n, v - 1, 2))
        return DecoratedContour(sigma, tuple(kinds), tuple(edges), self.psi[:n], tuple(kappa.items()))


def as_cycle(c: DecoratedContour):
    """The Toom cycle inducing ``c``, or None when ``c`` is not of that form."""
    if c.sigma != 2:
        return None
    if c.is_trivial:
        return ToomCycle((c.psi[0],))
    try:
        canon = canonicalize(c)
    except (ConfigError, NotConnected):
        return None
    cyc = ToomCycle(canon.psi + (canon.psi[0],))
    if cyc.length % 2 or cyc.issues():
        return None
    if cyc.to_contour(canon.kappa_map) != canon:
        return None
    return cyc


def is_toom_cycle(c: DecoratedContour) -> bool:
    return as_cycle(c) is not None
