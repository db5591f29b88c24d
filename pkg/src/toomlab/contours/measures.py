"""Presence checks, presence-probabilities and the chain measure of a contour."""
from __future__ import annotations

from dataclasses import dataclass

from ..certify import SOURCE as RHAT_SOURCE, ContourSpec, compute_B
from ..errors import WindowClip
from .graph import SOURCE, DecoratedContour, canonicalize, sub


@dataclass(frozen=True)
class DependenceRealization:
    """Map choices ``mu`` on a finite window; 0 marks a defective point.

    ``(i, i + j)`` is an edge of charge ``s`` iff ``mu(i) >= 1`` and
    ``j`` lies in ``A[(s, mu(i))]``.
    """

    A: dict
    mu: dict  # point -> int
    sigma: int

    def __contains__(self, point) -> bool:
        return tuple(point) in self.mu

    def has_edge(self, i, j_point, s: int) -> bool:
        k = self.mu[i]
        return k >= 1 and sub(j_point, i) in self.A[(s, k)]

    def has_any_edge(self, i, j_point) -> bool:
        return any(self.has_edge(i, j_point, s) for s in range(1, self.sigma + 1))


def presence_check(c: DecoratedContour, real: DependenceRealization, mode: str = "general") -> bool:
    """Whether the contour is present; ``mode="cycle"`` uses the stricter source-edge rule."""
    for p in c.psi:
        if p not in real:
            raise WindowClip(f"point {p} lies outside the realization window")
    if any(real.mu[c.psi[v]] != 0 for v in c.sinks()):
        return False
    for v, w, s in c.edges:
        i, j = c.psi[v], c.psi[w]
        if c.edge_class(v) == "bullet":
            ok = real.has_edge(i, j, s)
        elif mode == "cycle":
            ok = real.has_edge(i, j, 3 - s)
        else:
            ok = real.has_any_edge(i, j)
        if not ok:
            return False
    return True


def presence_probability(c: DecoratedContour, p, r) -> object:
    """``p^n_star (1-p)^n_diamond`` times the intrinsic weights of non-sink points."""
    counts = c.counts()
    sink_points = {c.psi[v] for v in c.sinks()}
    out = p ** counts["n_star"] * (1 - p) ** counts["n_diamond"]
    for point, k in c.kappa:
        if point not in sink_points:
            out = out * r[k - 1]
    return out


def first_visit_types(c: DecoratedContour) -> dict:
    """Type of the first vertex (natural order) at each point; the root counts as charge 1."""
    out = {}
    for v, point in enumerate(c.psi):
        if point in out:
            continue
        kind = c.kinds[v]
        if v == 0:
            out[point] = 1
        else:
            out[point] = RHAT_SOURCE if kind == SOURCE else kind
    return out


def nu_value(c: DecoratedContour, spec: ContourSpec, phat, pcirc, B: tuple | None = None,
             canonical: bool = False):
    """Probability that the contour-extending chain ends in ``c``, from the closed-form product."""
    if c.is_trivial:
        return phat
    if not canonical:
        c = canonicalize(c)
    B_bullet, B_circ = B if B is not None else compute_B(spec)
    counts = c.counts()
    sink_points = {c.psi[v] for v in c.sinks()}
    kap = c.kappa_map
    out = phat ** counts["n_star"] * (1 - phat) ** counts["n_diamond"]
    for point, t in first_visit_types(c).items():
        if point not in sink_points:
            out = out * spec.rhat[t][kap[point] - 1]
    n_circ = n_bullet = 0
    for v, w, s in c.edges:
        table = spec.a_circ if c.edge_class(v) == "circ" else spec.a_bullet
        k = kap[c.psi[v]]
        if k < 1:
            return 0
        out = out * table[(s, k)].get(sub(c.psi[w], c.psi[v]), 0)
        if s == spec.sigma:
            if c.edge_class(v) == "circ":
                n_circ += 1
            else:
                n_bullet += 1
    out = out * pcirc ** n_circ * (1 - pcirc) ** n_bullet
    return out / (B_circ ** n_circ * B_bullet ** n_bullet)
