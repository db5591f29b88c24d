import math
from fractions import Fraction

import pytest

from toomlab.contours import is_toom_cycle
from toomlab.divergence import (brute_force_sum, build_special_cycle, exact_rate, family_sum,
                                growth_and_verdict, iter_paths, log_family_sum, ld_rate,
                                special_contour)
from toomlab.errors import ConfigError, InvalidPath


def test_path_count_matches_transfer_count():
    # first step: down, stay or up with label 1; later steps may also stay with label 2
    for n in range(1, 7):
        direct = sum(1 for _ in iter_paths(n))
        dp = {0: 1}
        for k in range(n):
            nxt = {}
            for s, c in dp.items():
                for d in ((-1, 0, 1) if k == 0 else (-1, 0, 0, 1)):
                    nxt[s + d] = nxt.get(s + d, 0) + c
            dp = nxt
        assert direct == dp[0]


def test_special_cycle_shape():
    f, g = [0, 1, 0], [1, 1, 1]
    cyc, kappa = build_special_cycle(f, g)
    assert cyc.length == 2 * 2 + 4
    assert cyc.issues() == []
    assert is_toom_cycle(special_contour(f, g))


@pytest.mark.parametrize("f,g", [
    ([0, 2, 0], [1, 1, 1]),
    ([1, 0], [1, 1]),
    ([0, 0, 0], [1, 2, 2]),
    ([0, 1, 0], [1, 2, 1]),
    ([0], [1]),
])
def test_invalid_paths(f, g):
    with pytest.raises(InvalidPath):
        build_special_cycle(f, g)


def test_family_sum_equals_brute_force_small():
    p, r = Fraction(1, 7), Fraction(2, 5)
    for n in range(1, 6):
        assert family_sum(n, p, r) == brute_force_sum(n, p, r)


def test_n_equals_two_closed_form():
    p, r = Fraction(1, 10), Fraction(1, 3)
    # W(2) = 2r + 1: paths 0,0,0 with labels (1,1) or (1,2), and the two excursions
    W = 2 * r + 1
    assert family_sum(2, p, r) == p ** 2 * (1 - p) ** 5 * r ** 2 * (1 - r) ** 2 * W


def test_float_and_exact_agree():
    p, r = Fraction(1, 100), Fraction(1, 20)
    exact = family_sum(150, p, r)
    assert math.log(exact) == pytest.approx(log_family_sum(150, 0.01, 0.05), rel=1e-10)


def test_zero_cases():
    assert family_sum(5, 0, Fraction(1, 2)) == 0
    assert family_sum(5, Fraction(1, 2), 0) == 0
    with pytest.raises(ConfigError):
        family_sum(0, 0.1, 0.1)


def test_rates():
    assert ld_rate(0.01, 0.05) == pytest.approx(3 ** 0.05 * 0.95 * 0.99 ** 2)
    assert exact_rate(0.01, 0.05) == pytest.approx(1.1 * 0.95 * 0.99 ** 2)
    rep = growth_and_verdict(0.01, 0.05, 3000)
    assert rep.nth_roots[-1] == pytest.approx(exact_rate(0.01, 0.05), rel=1e-2)


def test_verdicts():
    assert growth_and_verdict(0.01, 0.1, 500).verdict == "Diverges"
    assert growth_and_verdict(0.001, 0.1, 500).verdict == "Diverges"
    assert growth_and_verdict(0.01, 1.0, 500).verdict == "Inconclusive"
    assert growth_and_verdict(0.5, 0.1, 500).verdict == "Inconclusive"
    with pytest.raises(ConfigError):
        growth_and_verdict(0.01, 0.1, 50)


def test_monotone_growth_witness():
    rep = growth_and_verdict(0.01, 0.3, 400)
    assert rep.verdict == "Diverges" and rep.n0 is not None
    ls = rep.log_sums
    assert all(ls[i] > ls[i - 1] for i in range(rep.n0, len(ls)))
