import random
from fractions import Fraction
from itertools import product

import pytest

from toomlab.automaton import builtin_model, cc_map, coop_map, eval_map, nec_map, triangular_maps
from toomlab.errors import ConfigError, Infeasible
from toomlab.geometry import (LinearForm, SpaceTimePolar, SpatialPolar, check_shrinker,
                              check_worst_case_condition, compensated_edge_speed, edge_speed,
                              farkas_alternative, find_drift, speed_table)
from toomlab.lp import feasible_point

MAPS = [nec_map(), *triangular_maps(), coop_map(), cc_map()]


def one_step_threshold(phi, form, box=6):
    """Smallest form value at which one step of phi on {form >= 0} gives a one."""
    pts = list(product(range(-box, box + 1), repeat=2))
    vals = [form(z) for z in pts if eval_map(phi, {i for i in phi.neighborhood
                                                 if form((z[0] + i[0], z[1] + i[1])) >= 0})]
    return min(vals)


def random_form(rng):
    while True:
        f = LinearForm(tuple(Fraction(rng.randint(-4, 4), rng.randint(1, 4)) for _ in range(2)))
        if not f.is_zero():
            return f


@pytest.mark.parametrize("phi", MAPS, ids=lambda m: m.name)
def test_edge_speed_matches_one_step_image(phi):
    rng = random.Random(5)
    for _ in range(15):
        f = random_form(rng)
        assert one_step_threshold(phi, f) == -edge_speed(phi, f)


def test_triangular_table_and_coop_speeds():
    fam = builtin_model("triangular-majority")
    polar = SpatialPolar(((-1, -1), (2, -1), (-1, 2)))
    table = speed_table(fam, polar)
    assert table == [[1, 0, 0], [0, 1, 0], [0, 0, 1]]
    assert all(isinstance(e, Fraction) for row in table for e in row)
    wc = check_worst_case_condition(fam, polar)
    assert wc.total == 0 and not wc.holds
    coop = speed_table(builtin_model("coop"), SpatialPolar(((1, 1), (-1, -1))))
    assert coop == [[1], [0]]


def test_polar_must_sum_to_zero():
    with pytest.raises(ConfigError):
        SpatialPolar(((1, 0), (0, 1)))


def test_spacetime_polar_zero_sum_exact():
    rng = random.Random(2)
    for _ in range(5):
        a, b = random_form(rng), random_form(rng)
        c = LinearForm(tuple(-x - y for x, y in zip(a.coeffs, b.coeffs)))
        polar = SpaceTimePolar(SpatialPolar((a, b, c)), (Fraction(1, 3), Fraction(-2, 5)))
        for _ in range(20):
            pt = (rng.randint(-9, 9), rng.randint(-9, 9), rng.randint(-9, 0))
            assert sum(polar.value(s, pt) for s in (1, 2, 3)) == 0


def test_shrinker():
    polar = SpatialPolar(((-1, -1), (2, -1), (-1, 2)))
    assert all(check_shrinker(phi, polar) for phi in triangular_maps())
    assert check_shrinker(nec_map(), SpatialPolar(((-1, 0), (0, -1), (1, 1))))
    assert not check_shrinker(nec_map(), SpatialPolar(((1, 0), (0, 1), (-1, -1))))


@pytest.mark.parametrize("name,polar", [
    ("coop", ((1, 1), (-1, -1))),
    ("toom-nec", ((-3, 0), (0, -3), (3, 3))),
    ("toom-nec", ((-1, 0), (0, -1), (1, 1))),
])
def test_find_drift_post_verified(name, polar):
    fam = builtin_model(name)
    res = find_drift(fam, SpatialPolar(polar))
    for f in res.polar:
        for phi in fam.maps:
            assert compensated_edge_speed(phi, f, res.drift) > 0


def test_find_drift_infeasible_for_triangular():
    with pytest.raises(Infeasible):
        find_drift(builtin_model("triangular-majority"), SpatialPolar(((-1, -1), (2, -1), (-1, 2))))


def test_compensated_speed_shift():
    f = LinearForm((1, 2))
    phi = nec_map()
    assert compensated_edge_speed(phi, f, (Fraction(1, 2), 0)) == edge_speed(phi, f) - Fraction(1, 2)


def test_farkas_random_systems_verify():
    rng = random.Random(11)
    seen = set()
    for _ in range(100):
        k = rng.randint(2, 4)
        forms = [LinearForm((rng.randint(-3, 3), rng.randint(-3, 3))) for _ in range(k)]
        eps = [Fraction(rng.randint(-3, 3), rng.randint(1, 3)) for _ in range(k)]
        out = farkas_alternative(forms, eps)
        assert out.verify(forms, eps)
        seen.add(out.feasible)
    assert seen == {True, False}


def test_lp_against_scipy():
    linprog = pytest.importorskip("scipy.optimize").linprog
    rng = random.Random(3)
    for _ in range(40):
        A = [[rng.randint(-3, 3) for _ in range(4)] for _ in range(3)]
        b = [rng.randint(-4, 4) for _ in range(3)]
        x = feasible_point([[Fraction(a) for a in row] for row in A], [Fraction(v) for v in b])
        res = linprog([0] * 4, A_eq=A, b_eq=b, bounds=[(0, None)] * 4, method="highs")
        assert (x is not None) == (res.status == 0)
        if x is not None:
            assert all(v >= 0 for v in x)
            assert all(sum(a * v for a, v in zip(row, x)) == rhs for row, rhs in zip(A, b))
