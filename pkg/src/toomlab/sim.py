"""Monte Carlo for the noisy automaton on a torus, plus interface-speed runs.

Random numbers come from a Philox stream keyed by ``(seed, replica)`` whose
counter is set from the time step, so a slice is reproducible on its own
and independent of how replicas are spread over threads. Each site uses two
uniforms per step: one decides the defect and one picks the map. Runs at
different ``p`` with the same seed therefore share the map choices, and
their configurations are ordered site by site.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .automaton import MonotoneMap, RuleFamily, eval_map
from .errors import ConfigError, WindowTooSmall
from .geometry import LinearForm, edge_speed

THREADS_ENV = "TOOMLAB_THREADS"


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def _as_family(target) -> RuleFamily:
    if isinstance(target, RuleFamily):
        return target
    if isinstance(target, MonotoneMap):
        return RuleFamily(target.dimension, (target,), (Fraction(1),), target.name)
    raise ConfigError(f"expected a map or a rule family, got {type(target).__name__}")


def uniforms(seed: int, replica: int, t: int, shape) -> tuple:
    """Defect and map-choice uniforms for slice ``t``."""
    bits = np.random.Philox(key=np.array([seed % 2**64, replica % 2**64], dtype=np.uint64),
                            counter=np.array([0, 0, t, 0], dtype=np.uint64))
    u = np.random.Generator(bits).random((2,) + tuple(shape))
    return u[0], u[1]


def _choices(family: RuleFamily, u_map: np.ndarray) -> np.ndarray:
    cum = np.cumsum([float(q) for q in family.probs])
    cum[-1] = 1.0
    return np.searchsorted(cum, u_map, side="right")


def apply_map(phi: MonotoneMap, state: np.ndarray) -> np.ndarray:
    """Evaluate ``phi`` at every site of a periodic array."""
    out = np.zeros_like(state)
    axes = tuple(range(state.ndim))
    for a in phi.one_sets:
        acc = np.ones_like(state)
        for i in a:
            acc &= np.roll(state, tuple(-c for c in i), axis=axes)
        out |= acc
    return out


def step(state: np.ndarray, family: RuleFamily, p: float, u_defect: np.ndarray,
         u_map: np.ndarray) -> np.ndarray:
    if state.ndim != family.dimension:
        raise ConfigError("state and model dimensions differ")
    choice = _choices(family, u_map)
    out = np.zeros_like(state)
    for k, phi in enumerate(family.maps):
        mask = choice == k
        if mask.any():
            out[mask] = apply_map(phi, state)[mask]
    out[u_defect < p] = False
    return out


def step_naive(state: np.ndarray, family: RuleFamily, p: float, u_defect: np.ndarray,
               u_map: np.ndarray) -> np.ndarray:
    """Site-by-site reference for :func:`step`."""
    choice = _choices(family, u_map)
    shape = state.shape
    out = np.zeros_like(state)
    for x in np.ndindex(shape):
        if u_defect[x] < p:
            continue
        phi = family.maps[choice[x]]
        support = {i for i in phi.neighborhood
                   if state[tuple((xc + ic) % n for xc, ic, n in zip(x, i, shape))]}
        out[x] = bool(eval_map(phi, support))
    return out


def evolve(state: np.ndarray, family: RuleFamily, p: float, steps: int, seed: int,
           replica: int = 0, t0: int = 0) -> list:
    """Slices ``t0 .. t0 + steps`` starting from ``state``."""
    out = [state]
    for t in range(t0 + 1, t0 + steps + 1):
        ud, um = uniforms(seed, replica, t, state.shape)
        state = step(state, family, p, ud, um)
        out.append(state)
    return out


@dataclass
class SimReport:
    p: float
    L: int
    T: int
    replicas: int
    seed: int
    mean_density: np.ndarray  # index t = 0..T
    stderr: np.ndarray

    @property
    def final_mean(self) -> float:
        return float(self.mean_density[-1])

    @property
    def final_stderr(self) -> float:
        return float(self.stderr[-1])

    def rows(self) -> list:
        return [{"t": t, "mean_density": float(m), "stderr": float(s)}
                for t, (m, s) in enumerate(zip(self.mean_density, self.stderr))]


def _replica_series(family, p, L, T, seed, replica) -> np.ndarray:
    state = np.ones((L,) * family.dimension, dtype=bool)
    series = np.empty(T + 1)
    series[0] = 1.0
    for t in range(1, T + 1):
        ud, um = uniforms(seed, replica, t, state.shape)
        state = step(state, family, p, ud, um)
        series[t] = state.mean()
    return series


def run_max_trajectory(family: RuleFamily, p: float, L: int, T: int, replicas: int = 1,
                       seed: int = 0, threads: int | None = None) -> SimReport:
    """Density of the all-ones start on an ``L``-torus, averaged over replicas."""
    if not 0 <= p <= 1:
        raise ConfigError("p must lie in [0, 1]")
    if L < 4 * family.radius or T < 1 or replicas < 1:
        raise ConfigError("need L >= 4 * radius, T >= 1 and replicas >= 1")
    threads = threads or default_threads()
    args = [(family, p, L, T, seed, r) for r in range(replicas)]
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            series = list(pool.map(lambda a: _replica_series(*a), args))
    else:
        series = [_replica_series(*a) for a in args]
    data = np.array(series)
    mean = data.mean(axis=0)
    err = data.std(axis=0, ddof=1) / math.sqrt(replicas) if replicas > 1 else np.zeros(T + 1)
    return SimReport(p, L, T, replicas, seed, mean, err)


# -- interface speeds ----------------------------------------------------------

@dataclass
class EdgeSpeedResult:
    speed: object  # Fraction when exact
    stderr: float | None
    exact: bool
    halfspace: bool  # whether the p=0 run kept an exact half-space shape


def _shift_open(a: np.ndarray, offset, fill: bool) -> np.ndarray:
    """``out[z] = a[z + offset]`` with ``fill`` outside the window."""
    out = np.full_like(a, fill)
    src, dst = [], []
    for c, n in zip(offset, a.shape):
        if abs(c) >= n:
            return out
        src.append(slice(max(c, 0), n + min(c, 0)))
        dst.append(slice(max(-c, 0), n - max(c, 0)))
    out[tuple(dst)] = a[tuple(src)]
    return out


def _open_step(state, valid, phi: MonotoneMap):
    new = np.zeros_like(state)
    for a in phi.one_sets:
        acc = np.ones_like(state)
        for i in a:
            acc &= _shift_open(state, i, False)
        new |= acc
    ok = valid.copy()
    for i in phi.neighborhood:
        ok &= _shift_open(valid, i, False)
    return new, ok


def _levels(form: LinearForm, L: int, d: int):
    scale = math.lcm(*(c.denominator for c in form.coeffs))
    ints = [int(c * scale) for c in form.coeffs]
    g = math.gcd(*ints)
    grids = np.meshgrid(*([np.arange(-L, L + 1)] * d), indexing="ij")
    level = sum(c * x for c, x in zip(ints, grids))
    return level, scale, g


def empirical_edge_speed(target, form, L: int = 20, T: int = 3, p: float = 0.0, seed: int = 0,
                         replicas: int = 16) -> EdgeSpeedResult:
    """Speed at which the half-space ``{form >= 0}`` of ones grows, in units of ``form``.

    With ``p = 0`` and a single map the run is deterministic and the result
    is exact. Otherwise the advance is read off from the number of ones in the
    region the window boundary cannot influence.
    """
    form = form if isinstance(form, LinearForm) else LinearForm(form)
    if form.is_zero():
        raise ConfigError("the linear form must not vanish")
    family = _as_family(target)
    d = family.dimension
    if form.dimension != d:
        raise ConfigError("form and model dimensions differ")
    if L <= 2 * T * family.radius + 1:
        raise WindowTooSmall(f"window half-width {L} too small for {T} steps")
    level, scale, g = _levels(form, L, d)
    if p == 0 and family.m == 1:
        return _exact_speed(family.maps[0], level, scale, g, T)
    return _estimated_speed(family, level, scale, g, T, p, seed, replicas)


def _exact_speed(phi, level, scale, g, T) -> EdgeSpeedResult:
    state = level >= 0
    valid = np.ones_like(state)
    for _ in range(T):
        state, valid = _open_step(state, valid, phi)
    ones = level[valid & state]
    zeros = level[valid & ~state]
    if ones.size == 0 or zeros.size == 0:
        raise WindowTooSmall("the interface left the region the boundary cannot reach")
    threshold = int(ones.min())
    halfspace = int(zeros.max()) == threshold - g
    if not halfspace:
        raise WindowTooSmall("ones and zeros in the reliable region do not form a half-space")
    return EdgeSpeedResult(Fraction(-threshold, scale * T), None, True, True)


def _estimated_speed(family, level, scale, g, T, p, seed, replicas) -> EdgeSpeedResult:
    valid = np.ones(level.shape, dtype=bool)
    for _ in range(T):
        for i in set().union(*(phi.neighborhood for phi in family.maps)):
            valid &= _shift_open(valid, i, False)
    values = level[valid]
    per_level = values.size / ((values.max() - values.min()) / g + 1)
    start = (level >= 0)[valid].sum()
    shape = level.shape
    speeds = []
    for rep in range(replicas):
        state = level >= 0
        for t in range(1, T + 1):
            ud, um = uniforms(seed, rep, t, shape)
            choice = _choices(family, um)
            new = np.zeros_like(state)
            for k, phi in enumerate(family.maps):
                mask = choice == k
                if mask.any():
                    out = np.zeros_like(state)
                    for a in phi.one_sets:
                        acc = np.ones_like(state)
                        for i in a:
                            acc &= _shift_open(state, i, False)
                        out |= acc
                    new[mask] = out[mask]
            new[ud < p] = False
            state = new
        gained = state[valid].sum() - start
        speeds.append(gained * g / (per_level * scale * T))
    speeds = np.array(speeds, dtype=float)
    err = float(speeds.std(ddof=1) / math.sqrt(len(speeds))) if len(speeds) > 1 else float("nan")
    return EdgeSpeedResult(float(speeds.mean()), err, False, False)


def exact_speed_table(family: RuleFamily, forms: Sequence) -> list:
    return [[edge_speed(phi, f if isinstance(f, LinearForm) else LinearForm(f)) for phi in family.maps]
            for f in forms]
