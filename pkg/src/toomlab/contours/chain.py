"""The contour-extending Markov chain: sampling, exact enumeration, partial Peierls sums.

Each step extends the most urgent loose end of an incomplete decorated
contour. Charges below sigma grow upward from the loose end; charge sigma
grows downward, ending either in a new internal vertex (probability
``1 - pcirc``) or in a new source (probability ``pcirc``). Any failed draw or
embedding clash sends the chain to the cemetery.

Vertices are numbered in the order they are created, which is exactly the
natural order of the finished contour, so chain output needs no
canonicalization.
"""
from __future__ import annotations

import bisect
from concurrent.futures import ProcessPoolExecutor
import random
from collections import Counter
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from ..certify import SOURCE as RHAT_SOURCE, ContourSpec, compute_B, uniform_weights
from ..errors import ConfigError, Explosion
from .graph import SINK, SOURCE, DecoratedContour, add, is_toom_cycle, sub
from .measures import presence_probability

NEW = -1


@dataclass(frozen=True)
class Cemetery:
    cause: str  # "weight", "clash" or "cap"


class _State:
    __slots__ = ("kinds", "psi", "edges", "kappa", "at", "out_mask", "in_mask", "into",
                 "trivial", "succ")

    def __init__(self, kinds, psi, edges, kappa, at, out_mask, in_mask, into, trivial=False):
        self.kinds, self.psi, self.edges, self.kappa = kinds, psi, edges, kappa
        self.at, self.out_mask, self.in_mask, self.into = at, out_mask, in_mask, into
        self.trivial = trivial
        self.succ = None

    @classmethod
    def root(cls, origin, k, trivial=False):
        return cls([SOURCE], [origin], [], {origin: k}, {origin: [0]}, [0], [0], frozenset(), trivial)

    def most_urgent(self, sigma: int):
        if self.trivial:
            return None
        best = None
        kinds, out_mask, in_mask = self.kinds, self.out_mask, self.in_mask
        for v, kind in enumerate(kinds):
            if kind == SOURCE:
                for s in range(1, sigma):
                    if not out_mask[v] >> s & 1:
                        if best is None or (s, v) < best:
                            best = (s, v)
                        break
            elif kind == SINK or kind == sigma:
                if not in_mask[v] >> sigma & 1 and (best is None or (sigma, v) < best):
                    best = (sigma, v)
            elif not out_mask[v] >> kind & 1 and (best is None or (kind, v) < best):
                best = (kind, v)
            if best is not None and best[0] == 1 and best[1] <= v:
                break
        return best

    def apply(self, action) -> "_State":
        kind, point, k, a, b, s = action
        kinds, psi, out_mask, in_mask = list(self.kinds), list(self.psi), list(self.out_mask), list(self.in_mask)
        kappa, at = self.kappa, self.at
        if kind is not None:
            w = len(kinds)
            kinds.append(kind)
            psi.append(point)
            out_mask.append(0)
            in_mask.append(0)
            at = dict(at)
            at[point] = at.get(point, []) + [w]
            if k is not None:
                kappa = dict(kappa)
                kappa[point] = k
            a = w if a == NEW else a
            b = w if b == NEW else b
        out_mask[a] |= 1 << s
        in_mask[b] |= 1 << s
        return _State(kinds, psi, self.edges + [(a, b, s)], kappa, at, out_mask, in_mask,
                      self.into | {(psi[b], s)})

    def freeze(self, sigma: int) -> DecoratedContour:
        return DecoratedContour(sigma, tuple(self.kinds), tuple(self.edges), tuple(self.psi),
                                tuple(self.kappa.items()))


class ContourChain:
    """Transition kernel for a spec with sink tilt ``phat`` and source rate ``pcirc``."""

    def __init__(self, spec: ContourSpec, phat, pcirc, cache: bool = False):
        if spec.sigma < 2:
            raise ConfigError("the chain needs at least two charges")
        if not (0 <= phat <= 1 and 0 <= pcirc <= 1):
            raise ConfigError("phat and pcirc must lie in [0, 1]")
        self.spec, self.phat, self.pcirc, self.cache = spec, phat, pcirc, cache
        self.sigma, self.m = spec.sigma, spec.m
        self.origin = (0,) * (spec.family.dimension + 1)
        self.B = compute_B(spec)
        sig = self.sigma
        self.up = {}
        for s in range(1, sig):
            for k in range(1, self.m + 1):
                self.up[(s, k, "bullet")] = [(j, w) for j, w in sorted(spec.a_bullet[(s, k)].items()) if w > 0]
                self.up[(s, k, "circ")] = [(j, w) for j, w in sorted(spec.a_circ[(s, k)].items()) if w > 0]
        self.down = {k: [(j, w / self.B[0]) for j, w in sorted(spec.a_bullet[(sig, k)].items()) if w > 0]
                     for k in range(1, self.m + 1)}
        self.src = {k: [(j, w / self.B[1]) for j, w in sorted(spec.a_circ[(sig, k)].items()) if w > 0]
                    for k in range(1, self.m + 1)}
        self.rhat = spec.rhat

    def initial(self) -> list:
        out = [(self.phat, _State.root(self.origin, 0, trivial=True))]
        for k in range(1, self.m + 1):
            q = (1 - self.phat) * self.rhat[1][k - 1]
            if q > 0:
                out.append((q, _State.root(self.origin, k)))
        return out

    def _new_point(self, out, base, kind, point, a, b, s, law):
        for k, q in enumerate(law, start=1):
            if q > 0:
                out.append((base * (1 - self.phat) * q, (kind, point, k, a, b, s)))

    def actions(self, st: _State) -> list:
        """``(probability, action)`` pairs; failures appear as ``("fail", cause)`` actions."""
        end = st.most_urgent(self.sigma)
        if end is None:
            return []
        s, v = end
        out = []
        i = st.psi[v]
        if s < self.sigma:
            cls = "circ" if v != 0 and st.kinds[v] == SOURCE else "bullet"
            for j, w in self.up[(s, st.kappa[i], cls)]:
                tgt = add(i, j)
                if (tgt, s) in st.into:
                    out.append((w, ("fail", "clash")))
                    continue
                there = st.at.get(tgt)
                if there:
                    if st.kinds[there[0]] == SINK:
                        out.append((w, (None, tgt, None, v, there[0], s)))
                    elif tgt == self.origin:
                        out.append((w, ("fail", "clash")))
                    else:
                        out.append((w, (s, tgt, None, v, NEW, s)))
                else:
                    out.append((w * self.phat, (SINK, tgt, 0, v, NEW, s)))
                    self._new_point(out, w, s, tgt, v, NEW, s, self.rhat[s])
            return out
        sig = self.sigma
        for k in range(1, self.m + 1):
            for j, w in self.down[k]:
                tgt = sub(i, j)
                q = (1 - self.pcirc) * w
                if tgt in st.kappa:
                    if st.kappa[tgt] != k:
                        continue
                    if tgt == self.origin:
                        if not st.out_mask[0] >> sig & 1:
                            out.append((q, (None, tgt, None, 0, v, sig)))
                        else:
                            out.append((q, ("fail", "clash")))
                    elif any(st.kinds[u] in (sig, SINK) for u in st.at[tgt]):
                        out.append((q, ("fail", "clash")))
                    else:
                        out.append((q, (sig, tgt, None, NEW, v, sig)))
                else:
                    out.append((q * (1 - self.phat) * self.rhat[sig][k - 1], (sig, tgt, k, NEW, v, sig)))
            for j, w in self.src[k]:
                tgt = sub(i, j)
                q = self.pcirc * w
                if tgt in st.kappa:
                    if st.kappa[tgt] == k:
                        out.append((q, (SOURCE, tgt, None, NEW, v, sig)))
                else:
                    out.append((q * (1 - self.phat) * self.rhat[RHAT_SOURCE][k - 1],
                                (SOURCE, tgt, k, NEW, v, sig)))
        return out

    def successors(self, st: _State) -> tuple:
        """Cumulative probabilities and the matching next states (or cemeteries)."""
        if st.succ is not None:
            return st.succ
        cum, nxt, total = [], [], 0
        for q, act in self.actions(st):
            if q <= 0:
                continue
            total += q
            cum.append(float(total))
            nxt.append(Cemetery(act[1]) if act[0] == "fail" else st.apply(act))
        res = (cum, nxt)
        if self.cache:
            st.succ = res
        return res


# -- sampling ------------------------------------------------------------------

def _choose(cum: list, u: float):
    idx = bisect.bisect_right(cum, u)
    return idx if idx < len(cum) else None


class Sampler:
    def __init__(self, chain: ContourChain, max_steps: int = 10_000):
        if max_steps < 1:
            raise ConfigError("max_steps must be at least 1")
        self.chain, self.max_steps = chain, max_steps
        init = chain.initial()
        self._init_cum, total = [], 0
        for q, _ in init:
            total += q
            self._init_cum.append(float(total))
        self._init_states = [s for _, s in init]

    def draw(self, rng: random.Random):
        chain = self.chain
        idx = _choose(self._init_cum, rng.random())
        if idx is None:
            return Cemetery("weight")
        st = self._init_states[idx]
        if st.trivial:
            return st.freeze(chain.sigma)
        for _ in range(self.max_steps):
            cum, nxt = chain.successors(st)
            idx = _choose(cum, rng.random())
            if idx is None:
                return Cemetery("weight")
            st = nxt[idx]
            if isinstance(st, Cemetery):
                return st
            if st.most_urgent(chain.sigma) is None:
                return st.freeze(chain.sigma)
        return Cemetery("cap")


def sample_contour(spec: ContourSpec, phat, pcirc, seed: int, max_steps: int = 10_000):
    """One draw of the chain: a finished contour, or a ``Cemetery`` naming the failure."""
    return Sampler(ContourChain(spec, phat, pcirc), max_steps).draw(random.Random(seed))


def chunk_seeds(seed: int, n_chunks: int) -> list:
    return [int(s.generate_state(1, dtype=np.uint64)[0]) for s in np.random.SeedSequence(seed).spawn(n_chunks)]


def _sample_chunk(spec, phat, pcirc, max_steps, cache, seed, n) -> Counter:
    draw = Sampler(ContourChain(spec, phat, pcirc, cache=cache), max_steps).draw
    rng = random.Random(seed)
    counts = Counter()
    for _ in range(n):
        counts[draw(rng)] += 1
    return counts


def sample_many(spec: ContourSpec, phat, pcirc, runs: int, seed: int, max_steps: int = 10_000,
                chunk: int = 50_000, cache: bool | None = None, threads: int = 1) -> Counter:
    """Outcome counts over ``runs`` draws; chunks use independent derived streams.

    Transition caching pays off for small step caps and is on by default there.
    ``threads > 1`` farms chunks out to worker processes; the counts do not
    depend on the number of workers.
    """
    if cache is None:
        cache = max_steps <= 12
    n_chunks = -(-runs // chunk)
    jobs = [(s, min(chunk, runs - c * chunk)) for c, s in enumerate(chunk_seeds(seed, n_chunks))]
    counts = Counter()
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(min(threads, len(jobs))) as pool:
            futures = [pool.submit(_sample_chunk, spec, phat, pcirc, max_steps, cache, s, n)
                       for s, n in jobs]
            for f in futures:
                counts.update(f.result())
        return counts
    sampler = Sampler(ContourChain(spec, phat, pcirc, cache=cache), max_steps)
    for s, n in jobs:
        rng = random.Random(s)
        draw = sampler.draw
        for _ in range(n):
            counts[draw(rng)] += 1
    return counts


# -- exact enumeration ---------------------------------------------------------

@dataclass
class ChainDistribution:
    contours: dict  # DecoratedContour -> probability
    cemetery: object = 0
    unfinished: object = 0
    steps: dict = field(default_factory=dict)  # DecoratedContour -> number of extension steps

    @property
    def total(self):
        return sum(self.contours.values())


def exact_chain_distribution(spec: ContourSpec, phat, pcirc, depth: int,
                             budget: int = 2_000_000) -> ChainDistribution:
    """Every branch of the chain up to ``depth`` extension steps, with exact weights."""
    chain = ContourChain(spec, phat, pcirc)
    dist = ChainDistribution({})
    frontier = []
    start = chain.initial()
    dist.cemetery = 1 - sum(q for q, _ in start)
    for q, st in start:
        if st.trivial:
            c = st.freeze(chain.sigma)
            dist.contours[c] = q
            dist.steps[c] = 0
        else:
            frontier.append((q, st))
    explored = 0
    for step in range(1, depth + 1):
        nxt = []
        for q, st in frontier:
            acts = chain.actions(st)
            explored += len(acts)
            if explored > budget:
                raise Explosion(f"more than {budget} branches at depth {step}")
            lost = q
            for w, act in acts:
                pr = q * w
                if act[0] == "fail":
                    continue
                lost -= pr
                new = st.apply(act)
                if new.most_urgent(chain.sigma) is None:
                    c = new.freeze(chain.sigma)
                    dist.contours[c] = dist.contours.get(c, 0) + pr
                    dist.steps[c] = step
                else:
                    nxt.append((pr, new))
            dist.cemetery += lost
        frontier = nxt
    dist.unfinished = sum(q for q, _ in frontier)
    return dist


def exploration_spec(spec: ContourSpec) -> ContourSpec:
    """Same one-sets, uniform weights and laws: the chain then reaches every contour."""
    m = spec.m
    circ = {(s, k): spec.circ_support(s, k) for s in range(1, spec.sigma + 1) for k in range(1, m + 1)}
    uni = tuple(Fraction(1, m) for _ in range(m))
    return replace(spec, a_bullet=uniform_weights(spec.A), a_circ=uniform_weights(circ),
                   rhat={t: uni for t in spec.rhat}, beta_split=None)


def enumerate_contours(spec: ContourSpec, cap: int, budget: int = 2_000_000) -> dict:
    """All decorated contours with at most ``cap`` edges, mapped to their edge count.

    In cycle mode only genuine Toom cycles are kept.
    """
    dist = exact_chain_distribution(exploration_spec(spec), Fraction(1, 2), Fraction(1, 2), cap, budget)
    out = {}
    for c, steps in dist.steps.items():
        if spec.mode == "cycle" and not is_toom_cycle(c):
            continue
        out[c] = steps
    return out


def partial_peierls_sum(spec: ContourSpec, cap: int, p, r=None, budget: int = 2_000_000) -> list:
    """Sums of presence-probabilities over contours with at most ``c`` edges, for ``c = 0..cap``."""
    r = spec.r() if r is None else r
    by_size = [0] * (cap + 1)
    for c, steps in enumerate_contours(spec, cap, budget).items():
        by_size[steps] += presence_probability(c, p, r)
    out, acc = [], 0
    for x in by_size:
        acc += x
        out.append(acc)
    return out
