"""A family of cycles whose presence-probabilities sum to infinity.

For the cc/identity mixture each member is fixed by a lattice path ``f``
(steps in {-1, 0, 1}, returning to 0 after ``n`` steps) and labels ``g`` in
{1, 2}, with label 1 forced wherever the path moves. Summing over the
family reduces to extracting the constant coefficient of a Laurent
polynomial, done here by a dynamic program over the running sum.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product

import numpy as np

from .automaton import parse_number
from .contours.graph import ToomCycle
from .errors import ConfigError, InvalidPath

EXACT_MAX = 200


def _check_path(f, g) -> int:
    n = len(f) - 1
    if n < 1 or len(g) != n + 1:
        raise InvalidPath("need n >= 1 and labels for every index 0..n")
    if f[0] != 0 or f[n] != 0:
        raise InvalidPath("path must start and end at 0")
    for k in range(n):
        if abs(f[k + 1] - f[k]) > 1:
            raise InvalidPath(f"path step {k} has size {abs(f[k + 1] - f[k])}")
    if any(x not in (1, 2) for x in g) or g[0] != 1 or g[n] != 1:
        raise InvalidPath("labels must lie in {1, 2} with both ends equal to 1")
    for k in range(n):
        if f[k + 1] != f[k] and g[k] != 1:
            raise InvalidPath(f"label {k} must be 1 because the path moves there")
    return n


def build_special_cycle(f, g) -> tuple:
    """The cycle of length ``2n + 4`` and its decoration, as ``(ToomCycle, kappa)``."""
    n = _check_path(f, g)
    psi = [None] * (2 * n + 5)
    psi[0] = (0, 0, 0)
    for k in range(1, n + 2):
        psi[k] = (0, 1, -k)
    psi[n + 2] = (0, 0, -n)
    psi[n + 3] = (0, 0, -n - 1)
    for k in range(n + 1):
        psi[2 * n + 4 - k] = (f[k], -f[k], -k)
    kappa = {(f[k], -f[k], -k): g[k] for k in range(n + 1)}
    for k in range(1, n + 1):
        kappa[(0, 1, -k)] = 2
    kappa[(0, 0, -n - 1)] = 0
    kappa[(0, 1, -n - 1)] = 0
    return ToomCycle(tuple(psi)), kappa


def special_contour(f, g):
    cyc, kappa = build_special_cycle(f, g)
    return cyc.to_contour(kappa)


def iter_paths(n: int):
    """All admissible ``(f, g)`` pairs of length ``n``."""
    moves = ((-1, 1), (0, 1), (1, 1), (0, 2))
    for seq in product(moves, repeat=n):
        if seq[0][1] != 1 or sum(d for d, _ in seq) != 0:
            continue
        f = [0]
        for d, _ in seq:
            f.append(f[-1] + d)
        yield f, [g for _, g in seq] + [1]


def brute_force_sum(n: int, p, r):
    """Sum of presence-probabilities over every member, built one contour at a time."""
    from .contours.measures import presence_probability

    return sum((presence_probability(special_contour(f, g), p, (r, 1 - r)) for f, g in iter_paths(n)),
               Fraction(0) if isinstance(p, Fraction) and isinstance(r, Fraction) else 0.0)


def family_sum(n: int, p, r):
    """Exact for rational inputs and ``n <= EXACT_MAX``; floats otherwise."""
    if n < 1:
        raise ConfigError("n must be at least 1")
    p, r = parse_number(p), parse_number(r)
    if not (0 <= p <= 1 and 0 <= r <= 1):
        raise ConfigError("p and r must lie in [0, 1]")
    if isinstance(p, Fraction) and isinstance(r, Fraction) and n <= EXACT_MAX:
        W = _exact_W(n, r)
        return p ** 2 * (1 - p) ** (2 * n + 1) * r ** 2 * (1 - r) ** n * W
    return math.exp(log_family_sum(n, float(p), float(r))) if p and r and r < 1 else 0.0


def _exact_W(n: int, r: Fraction) -> Fraction:
    """``[z^0] (z + 1 + 1/z) (r (z + 1 + 1/z) + 1 - r)^(n - 1)``."""
    # centre weight: a stay with label 1 (r) or label 2 (1 - r)
    step = {-1: r, 0: Fraction(1), 1: r}
    vec = {-1: Fraction(1), 0: Fraction(1), 1: Fraction(1)}
    for _ in range(n - 1):
        nxt = {}
        for s, c in vec.items():
            for d, w in step.items():
                if abs(s + d) <= n:
                    nxt[s + d] = nxt.get(s + d, 0) + c * w
        vec = nxt
    return vec.get(0, Fraction(0))


def _log_W_series(n_max: int, r: float) -> np.ndarray:
    """``log W(n)`` for ``n = 1..n_max``, with running renormalization."""
    out = np.empty(n_max)
    size = 2 * n_max + 3
    c = n_max + 1
    vec = np.zeros(size)
    vec[c - 1:c + 2] = 1.0
    log_scale = 0.0
    out[0] = math.log(vec[c]) + log_scale
    for n in range(2, n_max + 1):
        nxt = vec.copy()
        nxt[1:] += r * vec[:-1]
        nxt[:-1] += r * vec[1:]
        top = nxt.max()
        vec = nxt / top
        log_scale += math.log(top)
        out[n - 1] = math.log(vec[c]) + log_scale if vec[c] > 0 else -math.inf
    return out


def log_family_sum(n: int, p: float, r: float) -> float:
    return _log_prefactor(n, p, r) + _log_W_series(n, r)[n - 1]


def _log_prefactor(n, p, r):
    if p <= 0 or p >= 1 or r <= 0 or r >= 1:
        return -math.inf
    return 2 * math.log(p) + (2 * n + 1) * math.log1p(-p) + 2 * math.log(r) + n * math.log1p(-r)


def ld_rate(p: float, r: float) -> float:
    """Lower bound on the growth rate from the large-deviation argument."""
    return 3 ** r * (1 - r) * (1 - p) ** 2


def exact_rate(p: float, r: float) -> float:
    """Limit of the nth root: the constant coefficient grows like ``(1 + 2r)^n``."""
    return (1 + 2 * r) * (1 - r) * (1 - p) ** 2


@dataclass
class GrowthReport:
    p: float
    r: float
    n: list
    log_sums: list
    nth_roots: list
    ld_rate: float
    exact_rate: float
    verdict: str
    n0: int | None

    def rows(self) -> list:
        return [{"n": n, "sum": math.exp(ls) if ls > -math.inf else 0.0, "nth_root": root,
                 "rate": self.ld_rate, "verdict": self.verdict}
                for n, ls, root in zip(self.n, self.log_sums, self.nth_roots)]


def growth_and_verdict(p, r, n_max: int = 2000) -> GrowthReport:
    """Growth series and a divergence verdict.

    The verdict is ``Diverges`` when either the large-deviation rate or the
    exact rate exceeds 1; both are sufficient for the family sum to blow up.
    """
    p, r = float(p), float(r)
    if n_max < 100:
        raise ConfigError("n_max must be at least 100")
    if not (0 <= p <= 1 and 0 <= r <= 1):
        raise ConfigError("p and r must lie in [0, 1]")
    ns = list(range(1, n_max + 1))
    if 0 < r < 1 and 0 < p < 1:
        logW = _log_W_series(n_max, r)
        logs = [_log_prefactor(n, p, r) + logW[n - 1] for n in ns]
    else:
        logs = [-math.inf] * n_max
    roots = [math.exp(ls / n) if ls > -math.inf else 0.0 for n, ls in zip(ns, logs)]
    pr, er = ld_rate(p, r), exact_rate(p, r)
    verdict = "Diverges" if (pr > 1 or er > 1) and 0 < p and 0 < r < 1 else "Inconclusive"
    n0 = None
    for i in range(len(logs) - 1, 0, -1):
        if not logs[i] > logs[i - 1]:
            n0 = ns[i] if i + 1 < len(ns) else None
            break
    else:
        n0 = 1
    return GrowthReport(p, r, ns, logs, roots, pr, er, verdict, n0)
