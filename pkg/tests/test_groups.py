import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from flatchain import (
    GroupSpec,
    check_group_axioms,
    group_from_dict,
    make_cyclic_group,
    make_free_group,
    make_int_group,
)


def test_int_group_linear_norm():
    g = make_int_group(1.0, 1.0)
    assert g.norm(3) == 3.0
    assert g.norm(-3) == 3.0
    assert g.norm(0) == 0.0
    assert g.alpha == 1.0


def test_int_group_sublinear_norm_value():
    g = make_int_group(1.0, 0.75)
    assert g.norm(16) == pytest.approx(8.0, abs=1e-12)


def test_int_group_sublinear_subadditive_brute():
    # exhaustive over |a|, |b| <= 20: |a+b|^e <= |a|^e + |b|^e
    g = make_int_group(1.0, 0.75)
    for a in range(-20, 21):
        for b in range(-20, 21):
            assert g.norm(a + b) <= g.norm(a) + g.norm(b) + 1e-12


def test_int_group_scale_two_pi_alpha():
    # minimal nontrivial loop length on the circle; cross-checked against
    # the descent estimate in test_homotopy
    g = make_int_group(2 * math.pi, 1.0)
    assert g.alpha == pytest.approx(2 * math.pi)
    assert g.norm(1) == pytest.approx(2 * math.pi)


@pytest.mark.parametrize("scale,exponent", [(0.0, 1.0), (-1.0, 1.0),
                                            (1.0, 0.0), (1.0, 1.5)])
def test_int_group_rejects_bad_parameters(scale, exponent):
    with pytest.raises(ValueError):
        make_int_group(scale, exponent)


def test_int_ball_enumeration():
    g = make_int_group(1.0, 0.75)
    for radius in (0.5, 1.0, 3.7, 10.0):
        want = {d for d in range(-1000, 1001) if g.norm(d) <= radius + 1e-12}
        assert set(g.ball(radius)) == want


def test_cyclic_group_basics():
    g = make_cyclic_group(4, 2.5)
    assert g.norm(3) == pytest.approx(2.5)  # min(3, 1) = 1
    g2 = make_cyclic_group(2)
    assert g2.add(1, 1) == 0
    with pytest.raises(ValueError):
        make_cyclic_group(1)


def test_cyclic_ball():
    g = make_cyclic_group(5, 1.0)
    assert set(g.ball(2.0)) == {0, 1, 2, 3, 4}
    assert set(g.ball(1.0)) == {0, 1, 4}


def test_free_group():
    g = make_free_group(2, 1.0)
    assert g.add((1, 2), (3, -2)) == (4, 0)
    assert g.norm((1, -2)) == pytest.approx(3.0)
    assert set(g.ball(1.0)) == {(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)}


@pytest.mark.parametrize("g", [make_int_group(1.0, 1.0),
                               make_int_group(1.0, 0.75),
                               make_int_group(2 * math.pi, 1.0),
                               make_cyclic_group(4, 1.0),
                               make_cyclic_group(7, 0.5),
                               make_free_group(2, 1.0)])
def test_axiom_checker_passes_shipped_groups(g):
    report = check_group_axioms(g, samples=1000, seed=1)
    assert report.passed, report.violations


def test_axiom_checker_catches_broken_norm():
    base = make_int_group(1.0, 1.0)
    broken = GroupSpec(
        name="int", zero=0, add=base.add, neg=base.neg,
        norm=lambda d: 0.0 if d == 2 else base.norm(d),
        alpha=1.0, ball=base.ball, params=base.params)
    report = check_group_axioms(broken, samples=2000, seed=0)
    assert not report.passed
    assert any(w == 2 or w == -2 or (isinstance(w, tuple) and 2 in map(abs, w))
               for _, w in report.violations)


def test_gap_constant_exact():
    for g in (make_int_group(0.5, 0.75), make_cyclic_group(6, 2.0)):
        for sigma in g.ball(10 * g.alpha):
            if sigma != g.zero:
                assert g.norm(sigma) >= g.alpha


@given(a=st.integers(-50, 50), b=st.integers(-50, 50),
       e=st.sampled_from([0.5, 0.75, 1.0]))
@settings(max_examples=200, deadline=None)
def test_norm_axioms_property(a, b, e):
    g = make_int_group(1.0, e)
    assert g.norm(a) == g.norm(g.neg(a))
    assert g.norm(g.add(a, b)) <= g.norm(a) + g.norm(b) + 1e-12
    if a != 0:
        assert g.norm(a) >= g.alpha


def test_serialization_round_trip():
    for g in (make_int_group(2 * math.pi, 0.75), make_cyclic_group(5, 1.5),
              make_free_group(3, 2.0)):
        g2 = group_from_dict(g.to_dict())
        assert g2.same_as(g)
        assert g2.norm(g2.ball(5 * g2.alpha)[-1]) == pytest.approx(
            g.norm(g.ball(5 * g.alpha)[-1]))
