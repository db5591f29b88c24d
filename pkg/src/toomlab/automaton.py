"""Monotone local maps, rule families and the noisy automaton.

A map is stored only through its antichain of minimal one-sets. Offsets are
spatial (they refer to the previous time slice), so the time coordinate is
implicit everywhere in this module.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .errors import ConfigError, ConstantMap, NonMonotone, UnknownModel

Vec = tuple  # tuple of ints

MAX_EXHAUSTIVE = 20


def _vec(x) -> Vec:
    return tuple(int(c) for c in x)


def _sort_key(one_set: frozenset) -> tuple:
    return (len(one_set), sorted(one_set))


@dataclass(frozen=True)
class MonotoneMap:
    dimension: int
    one_sets: tuple  # tuple of frozensets of offsets
    name: str = ""

    def __post_init__(self):
        if not self.one_sets:
            raise ConstantMap("a monotone map needs at least one one-set")
        cleaned = []
        for a in self.one_sets:
            a = frozenset(_vec(i) for i in a)
            if not a:
                raise ConstantMap("empty one-set gives the constant-one map")
            for i in a:
                if len(i) != self.dimension:
                    raise ConfigError(f"offset {i} does not have dimension {self.dimension}")
            cleaned.append(a)
        cleaned = sorted(set(cleaned), key=_sort_key)
        for a, b in combinations(cleaned, 2):
            if a <= b or b <= a:
                raise ConfigError(f"one-sets {sorted(a)} and {sorted(b)} are not an antichain")
        object.__setattr__(self, "one_sets", tuple(cleaned))

    @classmethod
    def from_lists(cls, one_sets: Iterable[Iterable[Sequence[int]]], name: str = "") -> "MonotoneMap":
        sets = [frozenset(_vec(i) for i in a) for a in one_sets]
        if not sets:
            raise ConstantMap("no one-sets given")
        dim = len(next(iter(sets[0]))) if sets[0] else 0
        return cls(dim, tuple(sets), name)

    @property
    def neighborhood(self) -> frozenset:
        return frozenset().union(*self.one_sets)

    @property
    def radius(self) -> int:
        return max(max(abs(c) for c in i) for i in self.neighborhood)

    def __call__(self, support) -> int:
        return eval_map(self, support)

    def to_json(self) -> dict:
        return {"name": self.name, "one_sets": [[list(i) for i in sorted(a)] for a in self.one_sets]}


def eval_map(phi: MonotoneMap, support) -> int:
    """1 iff some minimal one-set lies inside ``support``."""
    s = support if isinstance(support, (set, frozenset)) else {_vec(i) for i in support}
    return int(any(a <= s for a in phi.one_sets))


def minimal_one_sets_from_predicate(neighborhood, predicate: Callable[[frozenset], bool],
                                    name: str = "") -> MonotoneMap:
    """Build a map from a truth table on the subsets of ``neighborhood``.

    The predicate is checked for monotonicity on every subset, so the
    neighborhood is capped at ``MAX_EXHAUSTIVE`` cells.
    """
    cells = sorted({_vec(i) for i in neighborhood})
    n = len(cells)
    if n == 0:
        raise ConstantMap("empty neighborhood")
    if n > MAX_EXHAUSTIVE:
        raise ConfigError(f"neighborhood of {n} cells is too large for an exhaustive check")
    table = [bool(predicate(frozenset(cells[b] for b in range(n) if mask >> b & 1)))
             for mask in range(1 << n)]
    if all(table) or not any(table):
        raise ConstantMap("predicate is constant")
    minimal = []
    for mask in range(1 << n):
        for b in range(n):
            bit = 1 << b
            if mask & bit:
                continue
            if table[mask] and not table[mask | bit]:
                raise NonMonotone(f"predicate drops from 1 to 0 when adding {cells[b]}")
        if table[mask] and all(not table[mask & ~(1 << b)] for b in range(n) if mask >> b & 1):
            minimal.append(frozenset(cells[b] for b in range(n) if mask >> b & 1))
    return MonotoneMap(len(cells[0]), tuple(minimal), name)


@dataclass(frozen=True)
class RuleFamily:
    dimension: int
    maps: tuple
    probs: tuple
    name: str = ""

    def __post_init__(self):
        if not self.maps:
            raise ConfigError("a rule family needs at least one map")
        if len(self.maps) != len(self.probs):
            raise ConfigError("one intrinsic probability per map is required")
        for phi in self.maps:
            if phi.dimension != self.dimension:
                raise ConfigError("all maps must share the family dimension")
        if any(q <= 0 for q in self.probs):
            raise ConfigError("intrinsic probabilities must be positive")
        total = sum(self.probs)
        exact = all(isinstance(q, (int, Fraction)) for q in self.probs)
        if (total != 1) if exact else abs(total - 1) > 1e-12:
            raise ConfigError(f"intrinsic probabilities sum to {total}, not 1")

    @property
    def m(self) -> int:
        return len(self.maps)

    @property
    def radius(self) -> int:
        return max(phi.radius for phi in self.maps)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "dimension": self.dimension,
            "maps": [phi.to_json() for phi in self.maps],
            "intrinsic_probs": [str(q) for q in self.probs],
        }


@dataclass(frozen=True)
class NoisyAutomaton:
    family: RuleFamily
    p: float

    def __post_init__(self):
        if not 0 <= self.p <= 1:
            raise ConfigError(f"noise level {self.p} outside [0, 1]")


def parse_number(x) -> Fraction | float:
    """Exact Fraction for ints, fraction strings and short decimals, float otherwise."""
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    if isinstance(x, float):
        return x
    s = str(x).strip()
    try:
        return Fraction(s)
    except ValueError:
        return float(s)


# -- builtin maps --------------------------------------------------------------

C, N, E, S, W, U = (0, 0), (0, 1), (1, 0), (0, -1), (-1, 0), (1, 1)


def majority(cells, name="") -> MonotoneMap:
    cells = list(cells)
    return minimal_one_sets_from_predicate(cells, lambda s: 2 * len(s) > len(cells), name)


def nec_map() -> MonotoneMap:
    return majority([N, E, C], "nec")


def triangular_maps() -> tuple:
    return (majority([S, W, C], "swc"), majority([S, U, C], "suc"), majority([W, U, C], "wuc"))


def coop_map() -> MonotoneMap:
    return MonotoneMap(2, (frozenset({C}), frozenset({N, E})), "coop")


def identity_map(dimension: int = 2) -> MonotoneMap:
    return MonotoneMap(dimension, (frozenset({(0,) * dimension}),), "id")


def cc_map() -> MonotoneMap:
    return MonotoneMap(2, (frozenset({N, E}), frozenset({(-1, 1), C, (1, -1)})), "cc")


def _two_map_family(phi, r, name) -> RuleFamily:
    r = parse_number(r)
    if not 0 < r <= 1:
        raise ConfigError(f"r={r} must lie in (0, 1]")
    if r == 1:
        return RuleFamily(2, (phi,), (Fraction(1) if isinstance(r, Fraction) else 1.0,), name)
    return RuleFamily(2, (phi, identity_map(2)), (r, 1 - r), name)


BUILTIN_NAMES = ("toom-nec", "triangular-majority", "coop-id", "cc-id", "coop", "cc")

_PARAM = re.compile(r"^([a-z-]+)(?:\((.+)\))?$")


def builtin_model(name: str, r=None) -> RuleFamily:
    """Rule family of a builtin model.

    ``coop-id`` and ``cc-id`` take the weight ``r`` of the non-identity map,
    either as the keyword or inline as ``coop-id(1/3)``. With ``r=1`` the
    identity map is dropped, so ``coop-id(1)`` equals the single-map ``coop``.
    """
    match = _PARAM.match(name.strip())
    if not match:
        raise UnknownModel(name)
    base, inline = match.groups()
    if inline is not None:
        r = inline
    if base == "toom-nec":
        return RuleFamily(2, (nec_map(),), (Fraction(1),), base)
    if base == "triangular-majority":
        third = Fraction(1, 3)
        return RuleFamily(2, triangular_maps(), (third, third, third), base)
    if base == "coop":
        return RuleFamily(2, (coop_map(),), (Fraction(1),), base)
    if base == "cc":
        return RuleFamily(2, (cc_map(),), (Fraction(1),), base)
    if base == "coop-id":
        return _two_map_family(coop_map(), Fraction(1, 2) if r is None else r, f"coop-id({r})")
    if base == "cc-id":
        return _two_map_family(cc_map(), Fraction(1, 2) if r is None else r, f"cc-id({r})")
    raise UnknownModel(name)


def family_from_json(data: dict) -> RuleFamily:
    try:
        dim = int(data["dimension"])
        maps = tuple(MonotoneMap(dim, tuple(frozenset(_vec(i) for i in a) for a in m["one_sets"]),
                                 m.get("name", f"map{k + 1}"))
                     for k, m in enumerate(data["maps"]))
        probs = data.get("intrinsic_probs")
        if probs:
            probs = tuple(parse_number(q) for q in probs)
        else:
            probs = (Fraction(1, len(maps)),) * len(maps)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed model description: {exc}") from exc
    return RuleFamily(dim, maps, probs, data.get("name", "file"))


def load_model(ref: str, r=None) -> RuleFamily:
    """Resolve a builtin name or a path to a model description file."""
    try:
        return builtin_model(ref, r)
    except UnknownModel:
        pass
    path = Path(ref)
    if not path.is_file():
        raise ConfigError(f"model {ref!r} is neither a builtin nor a readable file")
    try:
        data = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read model file {ref}: {exc}") from exc
    return family_from_json(data)
