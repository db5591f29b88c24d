"""Peierls-bound constants and stability certificates.

A :class:`ContourSpec` fixes everything the bound depends on: the chosen
one-sets per charge and map, a space-time polar function, the tilt ``theta``
(so that ``exp(-lambda * L) = theta ** (L / unit)``), the edge weights, the
tilted intrinsic laws ``rhat`` and the sink tilt ``phat``.

Two certificate flavours exist. ``cycle`` mode needs two charges and uses
the tighter source-edge constraint of cycles. ``general`` mode works for any
number of charges but pays a factor ``1/delta`` for overlapping vertices of
different types.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable

from .automaton import RuleFamily, builtin_model
from .errors import AllFailed, ConfigError, InvalidBeta, OutOfRange, ZeroWeight
from .geometry import SpaceTimePolar, SpatialPolar
from .surd import Sqrt

SOURCE = "o"


def _is_exact(*xs) -> bool:
    return all(isinstance(x, (int, Fraction, Sqrt)) for x in xs)


def _close(a, b, rel=1e-12) -> bool:
    if _is_exact(a, b):
        return a == b
    return abs(a - b) <= rel * max(1.0, abs(a), abs(b))


@dataclass
class ContourSpec:
    family: RuleFamily
    sigma: int
    A: dict  # (s, k) -> tuple of space-time offsets (z..., -1)
    polar: SpaceTimePolar
    theta: object
    unit: int
    a_bullet: dict  # (s, k) -> {offset: weight}
    a_circ: dict
    rhat: dict  # SOURCE or 1..sigma -> tuple of m probabilities
    phat: object
    mode: str = "general"
    beta_split: dict | None = None  # (upper, s, k) -> value
    name: str = ""
    params: dict = field(default_factory=dict)

    @property
    def m(self) -> int:
        return self.family.m

    def delta(self, k: int) -> tuple:
        pts = set()
        for s in range(1, self.sigma + 1):
            pts.update(self.A[(s, k)])
        return tuple(sorted(pts))

    def circ_support(self, s: int, k: int) -> tuple:
        if self.mode == "cycle":
            return tuple(self.A[(3 - s, k)])
        return self.delta(k)

    def tilt(self, s: int, j):
        """``exp(-lambda * L_s(j))``; exact when theta is rational and the power integral."""
        L = self.polar.value(s, j) / self.unit
        if isinstance(self.theta, Fraction) and L.denominator == 1:
            return self.theta ** int(L)
        return float(self.theta) ** float(L)

    def r(self) -> tuple:
        return self.family.probs


def validate_spec(spec: ContourSpec) -> list:
    """Violated assumptions, as human-readable strings."""
    issues = []
    sig, m = spec.sigma, spec.m
    if sig < 2 or spec.polar.sigma != sig:
        issues.append("sigma must be at least 2 and match the polar function")
    if spec.mode not in ("cycle", "general"):
        issues.append(f"unknown mode {spec.mode}")
    if spec.mode == "cycle" and sig != 2:
        issues.append("cycle mode needs exactly two charges")
    for s in range(1, sig + 1):
        for k in range(1, m + 1):
            spatial = frozenset(tuple(j[:-1]) for j in spec.A[(s, k)])
            if any(j[-1] != -1 for j in spec.A[(s, k)]):
                issues.append(f"A[{s},{k}] must live on time slice -1")
            if spatial not in spec.family.maps[k - 1].one_sets:
                issues.append(f"A[{s},{k}] is not a minimal one-set of map {k}")
            for name, table, support in (("a_bullet", spec.a_bullet, spec.A[(s, k)]),
                                         ("a_circ", spec.a_circ, spec.circ_support(s, k))):
                w = table[(s, k)]
                if any(x < 0 for x in w.values()):
                    issues.append(f"{name}[{s},{k}] has a negative entry")
                if sum(w.values()) > 1 + (0 if _is_exact(*w.values()) else 1e-12):
                    issues.append(f"{name}[{s},{k}] sums to more than one")
                if not set(w) <= set(support):
                    issues.append(f"{name}[{s},{k}] charges points outside its support")
    for t, law in spec.rhat.items():
        if len(law) != m or any(x < 0 for x in law) or not _close(sum(law), 1):
            issues.append(f"rhat[{t}] is not a probability vector on {m} maps")
    if not all(_close(a, b) for a, b in zip(spec.rhat[SOURCE], spec.r())):
        issues.append("rhat for sources must equal the intrinsic law")
    if spec.mode == "cycle" and not all(_close(a, b) for a, b in zip(spec.rhat[2], spec.r())):
        issues.append("cycle mode needs rhat[2] equal to the intrinsic law")
    if not 0 < spec.phat < 1:
        issues.append("phat must lie in (0, 1)")
    return issues


# -- one-set selection and weight families -------------------------------------

def spacetime(offset) -> tuple:
    return tuple(offset) + (-1,)


def select_one_sets(family: RuleFamily, polar: SpaceTimePolar) -> dict:
    """Per (charge, map) the one-set maximizing the smallest value of ``L_s``; ties lexicographic."""
    A = {}
    for s in range(1, polar.sigma + 1):
        for k, phi in enumerate(family.maps, start=1):
            best = max(phi.one_sets, key=lambda a: (min(polar.value(s, spacetime(i)) for i in a),
                                                     [tuple(-c for c in i) for i in sorted(a)]))
            A[(s, k)] = tuple(sorted(spacetime(i) for i in best))
    return A


def uniform_weights(supports: dict) -> dict:
    out = {}
    for key, pts in supports.items():
        w = Fraction(1, len(pts))
        out[key] = {j: w for j in pts}
    return out


def exponential_weights(spec: ContourSpec) -> dict:
    """``a(j) = exp(-lambda L_s(j)) / Z`` with one normalizer Z shared by all (s, k)."""
    raw = {}
    for s in range(1, spec.sigma + 1):
        for k in range(1, spec.m + 1):
            raw[(s, k)] = {j: spec.tilt(s, j) for j in spec.circ_support(s, k)}
    Z = max(sum(w.values()) for w in raw.values())
    return {key: {j: x / Z for j, x in w.items()} for key, w in raw.items()}


def trivial_beta_split(spec: ContourSpec) -> dict:
    beta = beta_table(spec)
    return {(u, s, k): beta[(s, k)] if u == s else 1
            for u in range(1, spec.sigma + 1)
            for s in range(1, spec.sigma + 1)
            for k in range(1, spec.m + 1)}


# -- constants -----------------------------------------------------------------

def compute_alphas(spec: ContourSpec) -> dict:
    """Smallest constants with ``exp(-lambda L_s(j)) <= alpha * a(j)`` on each support."""
    out = {"bullet": {}, "circ": {}}
    for s in range(1, spec.sigma + 1):
        for k in range(1, spec.m + 1):
            for kind, table, support in (("bullet", spec.a_bullet, spec.A[(s, k)]),
                                         ("circ", spec.a_circ, spec.circ_support(s, k))):
                w = table[(s, k)]
                best = 0
                for j in support:
                    num = spec.tilt(s, j)
                    den = w.get(j, 0)
                    if den == 0:
                        if num > 0:
                            raise ZeroWeight(f"{kind} weight ({s},{k}) vanishes at {j}")
                        continue
                    best = max(best, num / den)
                out[kind][(s, k)] = best
    return out


def compute_B(spec: ContourSpec) -> tuple:
    """``B = sum_j max_k a_{sigma,k}(j)`` for the bullet and circ weights."""
    out = []
    for table in (spec.a_bullet, spec.a_circ):
        pts = set()
        for k in range(1, spec.m + 1):
            pts.update(table[(spec.sigma, k)])
        out.append(sum((max(table[(spec.sigma, k)].get(j, 0) for k in range(1, spec.m + 1))
                        for j in sorted(pts)), Fraction(0)))
    return tuple(out)


def beta_table(spec: ContourSpec) -> dict:
    """``beta[(t, k)] = r(k) / rhat_t(k)``; infinite where rhat vanishes."""
    r = spec.r()
    out = {}
    for t, law in spec.rhat.items():
        for k in range(1, spec.m + 1):
            out[(t, k)] = r[k - 1] / law[k - 1] if law[k - 1] else math.inf
    return out


@dataclass
class CertificateReport:
    mode: str
    phat: object
    theta: object
    alpha_bullet: dict
    alpha_circ: dict
    beta: dict
    B_bullet: object
    B_circ: object
    gamma_bullet: tuple
    gamma_circ: tuple
    delta: object
    C_bullet: object
    C_circ: object
    p_circ: float
    eps: float | None
    name: str = ""
    params: dict = field(default_factory=dict)

    @property
    def failed(self) -> bool:
        return self.eps is None

    @property
    def pc_lower(self) -> float:
        return 0.0 if self.eps is None else self.eps

    def bound(self, p) -> float:
        """Upper bound on ``1 - density`` valid for ``p <= eps``."""
        return float(p) / (float(self.phat) * (1 - float(self.phat)))

    def to_json(self) -> dict:
        def num(x):
            if isinstance(x, Fraction):
                return str(x)
            if isinstance(x, Sqrt):
                return f"sqrt({x.square})"
            return float(x)

        def tab(d):
            return {f"{a},{b}": num(v) for (a, b), v in sorted(d.items(), key=lambda kv: str(kv[0]))}

        return {
            "name": self.name,
            "mode": self.mode,
            "status": "failed" if self.failed else "ok",
            "params": {k: num(v) for k, v in self.params.items()},
            "phat": num(self.phat),
            "theta": num(self.theta),
            "alpha_bullet": tab(self.alpha_bullet),
            "alpha_circ": tab(self.alpha_circ),
            "beta": tab(self.beta),
            "B_bullet": num(self.B_bullet),
            "B_circ": num(self.B_circ),
            "gamma_bullet": [num(g) for g in self.gamma_bullet],
            "gamma_circ": [num(g) for g in self.gamma_circ],
            "delta": num(self.delta),
            "C_bullet": num(self.C_bullet),
            "C_circ": num(self.C_circ),
            "p_circ": float(self.p_circ),
            "eps": None if self.eps is None else float(self.eps),
            "pc_lower": float(self.pc_lower),
        }


def _finish(spec, alphas, beta, B, gb, gc, delta, Cb, Cc) -> CertificateReport:
    phat = spec.phat
    p_circ = 1 - float(Cb) / (1 - float(phat)) ** spec.sigma
    eps = float(phat) * (1 - float(phat)) * p_circ / float(Cc) if p_circ > 0 else None
    return CertificateReport(spec.mode, phat, spec.theta, alphas["bullet"], alphas["circ"], beta,
                             B[0], B[1], tuple(gb), tuple(gc), delta, Cb, Cc, p_circ, eps,
                             spec.name, dict(spec.params))


def _product(xs):
    out = 1
    for x in xs:
        out = out * x
    return out


def cycle_certificate(spec: ContourSpec) -> CertificateReport:
    if spec.sigma != 2 or spec.mode != "cycle":
        raise ConfigError("cycle certificates need a two-charge spec in cycle mode")
    issues = validate_spec(spec)
    if issues:
        raise ConfigError("; ".join(issues))
    alphas = compute_alphas(spec)
    beta = beta_table(spec)
    B = compute_B(spec)
    ks = range(1, spec.m + 1)
    gb = [max(beta[(s, k)] * alphas["bullet"][(s, k)] for k in ks) for s in (1, 2)]
    gc = [max(alphas["circ"][(s, k)] for k in ks) for s in (1, 2)]
    return _finish(spec, alphas, beta, B, gb, gc, 1, B[0] * _product(gb), B[1] * _product(gc))


def check_beta_split(spec: ContourSpec, split: dict) -> None:
    beta = beta_table(spec)
    sig = spec.sigma
    for s in range(1, sig + 1):
        for k in range(1, spec.m + 1):
            prod = _product(split[(u, s, k)] for u in range(1, sig + 1))
            if not _close(prod, beta[(s, k)], 1e-10):
                raise InvalidBeta(f"split of beta[{s},{k}] multiplies to {prod}, not {beta[(s, k)]}")
            for u in range(1, sig + 1):
                v = split[(u, s, k)]
                if v < 0 or (u != s and v > 1 + (0 if _is_exact(v) else 1e-12)):
                    raise InvalidBeta(f"split entry ({u};{s},{k}) = {v} is not allowed")


def general_certificate(spec: ContourSpec) -> CertificateReport:
    issues = validate_spec(spec)
    if issues:
        raise ConfigError("; ".join(issues))
    split = spec.beta_split if spec.beta_split is not None else trivial_beta_split(spec)
    check_beta_split(spec, split)
    alphas = compute_alphas(spec)
    sig, ks = spec.sigma, range(1, spec.m + 1)
    upper = {(s, k): max(split[(s, u, k)] for u in range(1, sig + 1))
             for s in range(1, sig + 1) for k in ks}
    delta = min(_product(min(1, upper[(s, k)]) for s in range(1, sig + 1)) for k in ks)
    B = compute_B(spec)
    gb = [max(upper[(s, k)] * alphas["bullet"][(s, k)] for k in ks) for s in range(1, sig + 1)]
    gc = [max(alphas["circ"][(s, k)] for k in ks) for s in range(1, sig + 1)]
    Cb = B[0] * _product(gb)
    Cc = B[1] * _product(gc) / delta
    return _finish(spec, alphas, beta_table(spec), B, gb, gc, delta, Cb, Cc)


def certificate(spec: ContourSpec) -> CertificateReport:
    return cycle_certificate(spec) if spec.mode == "cycle" else general_certificate(spec)


def rho_lower_bound(report: CertificateReport, p) -> float:
    if report.failed:
        raise OutOfRange("certificate failed; no bound available")
    if p < 0 or p > report.eps:
        raise OutOfRange(f"p={p} outside [0, eps={report.eps}]")
    return 1 - report.bound(p)


# -- presets -------------------------------------------------------------------

TOOM_POLAR = SpaceTimePolar(SpatialPolar(((-3, 0), (0, -3), (3, 3))), (Fraction(1, 3), Fraction(1, 3)))
TRIANGULAR_POLAR = SpaceTimePolar(SpatialPolar(((-1, -1), (2, -1), (-1, 2))))
COOP_POLAR = SpaceTimePolar(SpatialPolar(((1, 1), (-1, -1))))


def generic_spec(family: RuleFamily, polar: SpaceTimePolar, theta, phat, unit: int = 1,
                 mode: str = "general", name: str = "") -> ContourSpec:
    """Default weights: uniform on each one-set, shared-normalizer exponential for sources."""
    A = select_one_sets(family, polar)
    sig = polar.sigma
    spec = ContourSpec(family, sig, A, polar, theta, unit, uniform_weights(A), {},
                       {t: family.probs for t in (SOURCE, *range(1, sig + 1))}, phat, mode,
                       None, name or family.name, {"theta": theta, "phat": phat})
    spec.a_circ = exponential_weights(spec)
    return spec


def toom_spec(theta=Fraction(1, 20), phat=Fraction(7, 50)) -> ContourSpec:
    return generic_spec(builtin_model("toom-nec"), TOOM_POLAR, theta, phat, unit=3, name="toom")


def _triangular_split(spec: ContourSpec) -> dict:
    half = Sqrt(Fraction(3, 4))
    out = {}
    for u in range(1, 4):
        for s in range(1, 4):
            for k in range(1, 4):
                if u != k:
                    out[(u, s, k)] = half
                elif s == k:
                    out[(u, s, k)] = Fraction(4)
                else:
                    out[(u, s, k)] = Fraction(1)
    return out


def triangular_spec(theta=Fraction(1, 100), phat=Fraction(1, 500), weights: str = "first") -> ContourSpec:
    """Three-map triangular model.

    ``weights="first"`` puts 1/10 on each point of a diagonal one-set and
    9/10, 1/10 on the two points of an off-diagonal one-set, ordered by the
    value of the polar function. ``weights="improved"`` uses the
    theta-dependent family with ``c = 4 / sqrt(3/4)``.
    """
    spec = generic_spec(builtin_model("triangular-majority"), TRIANGULAR_POLAR, theta, phat,
                        name=f"triangular-{weights}")
    third = Fraction(1, 3)
    spec.rhat = {SOURCE: (third,) * 3}
    for s in range(1, 4):
        spec.rhat[s] = tuple(Fraction(1, 9) if k == s else Fraction(4, 9) for k in range(1, 4))
    c = 4 / math.sqrt(0.75)
    th = theta
    for s in range(1, 4):
        for k in range(1, 4):
            pts = spec.A[(s, k)]
            if weights == "first":
                if s == k:
                    w = {j: Fraction(1, 10) for j in pts}
                else:
                    w = {j: Fraction(9, 10) if spec.polar.value(s, j) == 0 else Fraction(1, 10)
                         for j in pts}
            elif weights == "improved":
                if s == k:
                    w = {j: c * th / (1 + th) for j in pts}
                else:
                    w = {j: 1 / (1 + th) if spec.polar.value(s, j) == 0 else th / (1 + th)
                         for j in pts}
            else:
                raise ConfigError(f"unknown triangular weight family {weights!r}")
            spec.a_bullet[(s, k)] = w
    spec.a_circ = exponential_weights(spec)
    spec.beta_split = _triangular_split(spec)
    if weights == "improved":
        spec.params["c"] = c
    return spec


def coop_optimal_rhat(r, theta):
    """Root of ``2 theta r / x = (1 - r) / (1 - x)``."""
    return 2 * theta * r / (1 - r + 2 * theta * r)


def coop_spec(r=Fraction(1, 2), theta=Fraction(1, 6), phat=None, rhat1=None) -> ContourSpec:
    """Coop/identity mixture in cycle mode; ``phat`` defaults to ``theta * r``."""
    family = builtin_model("coop-id", r)
    if phat is None:
        phat = theta * r
    spec = generic_spec(family, COOP_POLAR, theta, phat, mode="cycle", name="coop")
    m = family.m
    if rhat1 is None:
        rhat1 = coop_optimal_rhat(r, theta) if m == 2 else 1
    spec.rhat = {SOURCE: family.probs, 2: family.probs,
                 1: (rhat1, 1 - rhat1) if m == 2 else (Fraction(1),)}
    spec.a_circ = {}
    for s in (1, 2):
        for k in range(1, m + 1):
            spec.a_circ[(s, k)] = uniform_weights({0: spec.A[(3 - s, k)]})[0]
    spec.params.update({"r": r, "rhat1": rhat1})
    return spec


PRESETS: dict = {
    "toom": lambda theta, phat: toom_spec(theta, phat),
    "triangular": lambda theta, phat: triangular_spec(theta, phat, "first"),
    "triangular-improved": lambda theta, phat: triangular_spec(theta, phat, "improved"),
    "coop": lambda theta, phat: coop_spec(Fraction(1, 2), theta, phat),
}

PRESET_DEFAULTS = {
    "toom": (Fraction(1, 20), Fraction(7, 50)),
    "triangular": (Fraction(1, 100), Fraction(1, 500)),
    "triangular-improved": (0.033, 0.016),
    "coop": (Fraction(1, 6), Fraction(1, 12)),
}


def optimize(builder: Callable, theta_grid: Iterable, phat_grid: Iterable) -> CertificateReport:
    """Grid search for the largest eps; ties keep the lexicographically first point."""
    best = None
    for theta in theta_grid:
        for phat in phat_grid:
            try:
                report = certificate(builder(theta, phat))
            except (ZeroWeight, InvalidBeta, ConfigError):
                continue
            if report.eps is not None and (best is None or report.eps > best.eps):
                best = report
    if best is None:
        raise AllFailed("no grid point gives a positive p_circ")
    return best
