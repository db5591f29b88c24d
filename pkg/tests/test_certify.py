import math
import random
from fractions import Fraction

import pytest

from toomlab.certify import (PRESET_DEFAULTS, PRESETS, certificate, check_beta_split, compute_alphas,
                             compute_B, coop_optimal_rhat, coop_spec, optimize, rho_lower_bound,
                             toom_spec, triangular_spec)
from toomlab.errors import AllFailed, InvalidBeta, OutOfRange, ZeroWeight
from toomlab.surd import Sqrt


def test_toom_constants():
    rep = certificate(toom_spec(0.05, 0.14))
    th = 0.05
    assert rep.C_bullet == pytest.approx(8 * th, rel=1e-12)
    assert rep.C_circ == pytest.approx(th ** -2 * (1 + 2 * th) ** 3, rel=1e-12)
    assert rep.eps == pytest.approx(8.3928e-5, rel=1e-4)
    assert rep.eps >= 1 / 12000
    assert rho_lower_bound(rep, 1 / 12000) >= 0.999


def test_toom_tilt_is_cube_root():
    spec = toom_spec(Fraction(1, 20), Fraction(7, 50))
    a = compute_alphas(spec)
    # uniform weight 1/2 on each point of a two-point one-set
    assert a["bullet"][(1, 1)] == pytest.approx(2 * 0.05 ** (1 / 3), rel=1e-12)


def test_triangular_first_preset_exact():
    rep = certificate(triangular_spec(Fraction(1, 100), Fraction(1, 500)))
    assert rep.B_bullet == Fraction(11, 10)
    assert rep.delta == Fraction(3, 4) and isinstance(rep.delta, Fraction)
    assert rep.C_bullet == Fraction(275, 243) * Sqrt(Fraction(3, 4))
    assert float(rep.C_bullet) == pytest.approx(275 / 243 * math.sqrt(0.75), abs=1e-12)


def test_triangular_first_preset_with_float_theta():
    rep = certificate(triangular_spec(0.01, 0.002))
    assert rep.delta == Fraction(3, 4)
    assert float(rep.C_bullet) == pytest.approx(275 / 243 * math.sqrt(0.75), abs=1e-12)


def test_triangular_improved():
    rep = certificate(triangular_spec(0.033, 0.016, "improved"))
    assert rep.eps > 7.7e-13
    assert rho_lower_bound(rep, rep.eps) > 1 - 5e-11


def test_coop_closed_form_rhat():
    r, th = Fraction(1, 3), Fraction(1, 6)
    x = coop_optimal_rhat(r, th)
    assert 2 * th * r / x == (1 - r) / (1 - x)


def test_coop_bullet_constant_random():
    rng = random.Random(8)
    for _ in range(20):
        r, th = rng.uniform(0.01, 0.99), rng.uniform(0.01, 0.4)
        rep = certificate(coop_spec(r, th))
        assert abs(rep.C_bullet - (1 - r + 2 * th * r)) <= 1e-12


def test_coop_quadratic_coefficient():
    th = 1 / 6
    c = {r: certificate(coop_spec(r, th)).eps / r ** 2 for r in (1e-2, 1e-3, 1e-4)}
    target = 0.5 * th ** 3
    assert abs(c[1e-4] - target) < 1e-6
    assert abs((10 * c[1e-4] - c[1e-3]) / 9 - target) < 1e-6


def test_coop_B_values():
    # bullet weights sit on {C} for both maps; circ weights on {N, E} and {C}
    assert compute_B(coop_spec()) == (1, 2)


def test_bad_beta_split():
    spec = triangular_spec()
    split = dict(spec.beta_split)
    split[(1, 1, 1)] = Fraction(5)
    with pytest.raises(InvalidBeta):
        check_beta_split(spec, split)
    spec.beta_split = split
    with pytest.raises(InvalidBeta):
        certificate(spec)


def test_zero_weight():
    spec = toom_spec()
    key = next(iter(spec.a_bullet))
    spec.a_bullet[key] = {j: 0 for j in spec.a_bullet[key]}
    with pytest.raises(ZeroWeight):
        certificate(spec)


def test_failed_certificate_and_range():
    rep = certificate(triangular_spec(Fraction(1, 100), Fraction(1, 100)))
    assert rep.failed and rep.eps is None and rep.p_circ < 0
    with pytest.raises(OutOfRange):
        rho_lower_bound(rep, 0)
    good = certificate(toom_spec())
    with pytest.raises(OutOfRange):
        rho_lower_bound(good, 2 * good.eps)


def test_optimize_picks_best_grid_point():
    grid_t, grid_p = [0.04, 0.05, 0.06], [0.1, 0.14, 0.18]
    best = optimize(PRESETS["toom"], grid_t, grid_p)
    every = [certificate(toom_spec(t, p)).eps for t in grid_t for p in grid_p]
    assert best.eps == max(e for e in every if e is not None)
    with pytest.raises(AllFailed):
        optimize(PRESETS["toom"], [0.5], [0.9])


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_presets_certify_at_defaults(name):
    rep = certificate(PRESETS[name](*PRESET_DEFAULTS[name]))
    assert not rep.failed and rep.eps > 0
    assert rep.to_json()["status"] == "ok"


def test_sqrt_arithmetic():
    h = Sqrt(Fraction(3, 4))
    assert h * h == Fraction(3, 4) and isinstance(h * h, Fraction)
    assert h * 2 == Sqrt(3)
    assert h < 1 and min(1, h) is h
    assert Fraction(1) > h
    assert float(h) == pytest.approx(math.sqrt(0.75))
