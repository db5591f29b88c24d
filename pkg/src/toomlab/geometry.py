"""Linear forms, polar functions, edge speeds and drift search.

All arithmetic is exact. Edge speeds of zero are common, and a float
perturbation would flip eroder and shrinker verdicts.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Sequence

from .automaton import MonotoneMap, RuleFamily, parse_number
from .errors import ConfigError, Infeasible
from .lp import feasible_point


def _frac(x) -> Fraction:
    x = parse_number(x)
    if isinstance(x, float):
        return Fraction(x).limit_denominator(10**12)
    return x


@dataclass(frozen=True)
class LinearForm:
    coeffs: tuple

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(_frac(c) for c in self.coeffs))

    @property
    def dimension(self) -> int:
        return len(self.coeffs)

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coeffs)

    def __call__(self, z) -> Fraction:
        return sum((c * x for c, x in zip(self.coeffs, z)), Fraction(0))

    def scaled(self, k) -> "LinearForm":
        return LinearForm(tuple(k * c for c in self.coeffs))

    def __str__(self):
        return "(" + ", ".join(str(c) for c in self.coeffs) + ")"


@dataclass(frozen=True)
class SpatialPolar:
    forms: tuple

    def __post_init__(self):
        forms = tuple(f if isinstance(f, LinearForm) else LinearForm(f) for f in self.forms)
        if len(forms) < 2:
            raise ConfigError("a polar function needs at least two forms")
        dims = {f.dimension for f in forms}
        if len(dims) != 1:
            raise ConfigError("forms of a polar function must share a dimension")
        if any(sum(col) != 0 for col in zip(*(f.coeffs for f in forms))):
            raise ConfigError("forms of a polar function must sum to zero")
        object.__setattr__(self, "forms", forms)

    @property
    def sigma(self) -> int:
        return len(self.forms)

    @property
    def dimension(self) -> int:
        return self.forms[0].dimension

    def __getitem__(self, s):
        return self.forms[s]

    def __iter__(self):
        return iter(self.forms)


@dataclass(frozen=True)
class SpaceTimePolar:
    """Lift of a spatial polar with drift ``v``: ``L_s(z, t) = l_s(z + v t)``."""

    base: SpatialPolar
    drift: tuple = None

    def __post_init__(self):
        v = self.drift if self.drift is not None else (0,) * self.base.dimension
        object.__setattr__(self, "drift", tuple(_frac(c) for c in v))

    @property
    def sigma(self) -> int:
        return self.base.sigma

    def value(self, s: int, point) -> Fraction:
        """``s`` is 1-based to match charge labels; ``point`` is (z..., t)."""
        *z, t = point
        form = self.base.forms[s - 1]
        return form(z) + t * form(self.drift)


def edge_speed(phi: MonotoneMap, form: LinearForm) -> Fraction:
    return max(min(form(i) for i in a) for a in phi.one_sets)


def compensated_edge_speed(phi: MonotoneMap, form: LinearForm, v) -> Fraction:
    v = tuple(_frac(c) for c in v)
    return max(min(form(tuple(x - y for x, y in zip(i, v))) for i in a) for a in phi.one_sets)


def speed_table(family: RuleFamily, polar: SpatialPolar) -> list:
    """``table[s][k]`` is the edge speed of map k in direction s (0-based)."""
    return [[edge_speed(phi, form) for phi in family.maps] for form in polar]


@dataclass(frozen=True)
class WorstCase:
    total: Fraction
    holds: bool
    worst: tuple  # min over maps, per direction


def check_worst_case_condition(family: RuleFamily, polar: SpatialPolar) -> WorstCase:
    worst = tuple(min(row) for row in speed_table(family, polar))
    total = sum(worst, Fraction(0))
    return WorstCase(total, total > 0, worst)


def check_shrinker(phi: MonotoneMap, polar: SpatialPolar) -> bool:
    speeds = [edge_speed(phi, form) for form in polar]
    return all(e >= 0 for e in speeds) and sum(speeds) > 0


@dataclass(frozen=True)
class FarkasOutcome:
    point: tuple | None = None
    multipliers: tuple | None = None

    @property
    def feasible(self) -> bool:
        return self.point is not None

    def verify(self, forms: Sequence[LinearForm], eps: Sequence) -> bool:
        if (self.point is None) == (self.multipliers is None):
            return False
        if self.point is not None:
            return all(f(self.point) >= e for f, e in zip(forms, eps))
        lam = self.multipliers
        if any(x < 0 for x in lam):
            return False
        dim = forms[0].dimension
        combo = [sum(l * f.coeffs[c] for l, f in zip(lam, forms)) for c in range(dim)]
        return all(x == 0 for x in combo) and sum(l * e for l, e in zip(lam, eps)) > 0


def _halfspace_point(forms, eps, equalities=()):
    """Some z with ``forms[s](z) >= eps[s]``; indices in ``equalities`` are tight."""
    d = forms[0].dimension
    k = len(forms)
    rows, rhs = [], []
    for s, (f, e) in enumerate(zip(forms, eps)):
        slack = [Fraction(0)] * k
        if s not in equalities:
            slack[s] = Fraction(-1)
        rows.append(list(f.coeffs) + [-c for c in f.coeffs] + slack)
        rhs.append(_frac(e))
    x = feasible_point(rows, rhs)
    if x is None:
        return None
    return tuple(x[c] - x[d + c] for c in range(d))


def _multipliers(forms, eps):
    d = forms[0].dimension
    k = len(forms)
    rows = [[f.coeffs[c] for f in forms] for c in range(d)]
    rhs = [Fraction(0)] * d
    rows.append([_frac(e) for e in eps])
    rhs.append(Fraction(1))
    x = feasible_point(rows, rhs)
    return None if x is None else tuple(x[:k])


def farkas_alternative(forms: Sequence, eps: Sequence) -> FarkasOutcome:
    """Either a point in all half-spaces ``{l_s >= eps_s}`` or multipliers proving there is none."""
    forms = [f if isinstance(f, LinearForm) else LinearForm(f) for f in forms]
    if not forms:
        raise ConfigError("farkas_alternative needs at least one form")
    z = _halfspace_point(forms, eps)
    if z is not None:
        return FarkasOutcome(point=z)
    lam = _multipliers(forms, eps)
    if lam is None:  # would contradict the Farkas alternative
        raise ArithmeticError("neither alternative holds; LP solver is inconsistent")
    return FarkasOutcome(multipliers=lam)


@dataclass(frozen=True)
class DriftResult:
    indices: tuple  # 0-based directions kept from the input polar
    multipliers: tuple
    polar: SpatialPolar  # the rescaled, reduced polar
    drift: tuple
    speeds: tuple  # compensated speeds, speeds[s][k]


def find_drift(family: RuleFamily, polar: SpatialPolar) -> DriftResult:
    """Reduced polar and drift making every compensated speed positive.

    Takes the smallest (then lexicographically first) set of directions whose
    worst-case half-spaces do not intersect, rescales those forms by the
    multipliers of the empty intersection, and averages one boundary point per
    dropped constraint.
    """
    wc = check_worst_case_condition(family, polar)
    if not wc.holds:
        raise Infeasible(f"worst-case speeds sum to {wc.total}, which is not positive")
    forms = list(polar.forms)
    eps = list(wc.worst)
    chosen = None
    for size in range(2, len(forms) + 1):
        for subset in combinations(range(len(forms)), size):
            if _halfspace_point([forms[s] for s in subset], [eps[s] for s in subset]) is None:
                chosen = subset
                break
        if chosen:
            break
    if chosen is None:  # the sum condition guarantees an empty intersection
        raise Infeasible("half-spaces intersect; no drift certificate")
    sub_forms = [forms[s] for s in chosen]
    sub_eps = [eps[s] for s in chosen]
    lam = _multipliers(sub_forms, sub_eps)
    scaled = [f.scaled(l) for f, l in zip(sub_forms, lam)]
    scaled_eps = [l * e for l, e in zip(lam, sub_eps)]

    points = []
    for drop in range(len(chosen)):
        keep = [s for s in range(len(chosen)) if s != drop]
        z = _halfspace_point([scaled[s] for s in keep], [scaled_eps[s] for s in keep],
                             equalities=set(range(len(keep))))
        if z is None:
            raise Infeasible("boundary system has no solution")
        points.append(z)
    v = tuple(sum(c) / len(points) for c in zip(*points))
    reduced = SpatialPolar(tuple(scaled))
    speeds = tuple(tuple(compensated_edge_speed(phi, f, v) for phi in family.maps) for f in reduced)
    if not all(e > 0 for row in speeds for e in row):
        raise Infeasible(f"drift {v} failed post-verification")
    return DriftResult(tuple(chosen), tuple(lam), reduced, v, speeds)
