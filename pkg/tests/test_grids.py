import math

import numpy as np
import pytest

from flatchain import (
    BoxDomain,
    Grid,
    OnSkeleton,
    canonicalize,
    deform,
    deformation_flatsize_test,
    deformation_scaling_test,
    make_int_group,
    mass,
    sample_offset,
    skeleton_average_test,
    skeleton_integral,
)

from conftest import random_chain


@pytest.fixture
def big_box():
    return BoxDomain((0.0, 0.0), (2.0, 2.0))


def test_cube_of_basic(big_box):
    grid = Grid(1.0, (0.0, 0.0), big_box)
    assert grid.cube_of((0.2, 0.3)) == (0, 0)
    assert grid.center((0, 0)) == (0.0, 0.0)


def test_cube_of_on_skeleton(big_box):
    grid = Grid(1.0, (0.0, 0.0), big_box)
    with pytest.raises(OnSkeleton):
        grid.cube_of((0.5, 0.3))


def test_cube_of_shifted(big_box):
    grid = Grid(0.5, (0.5, 0.5), big_box)
    z = grid.cube_of((0.2, 0.3))
    assert grid.center(z) == (0.25, 0.25)


def test_deform_monopole_and_cancellation(big_box, z_linear):
    grid = Grid(0.5, (0.5, 0.5), big_box)
    S = canonicalize([((0.2, 0.3), 2)], big_box, z_linear)
    assert deform(S, grid).atoms == (((0.25, 0.25), 2),)
    T = canonicalize([((0.2, 0.3), 1), ((0.3, 0.2), -1)], big_box, z_linear)
    assert deform(T, grid).is_zero()


def test_deform_adjacent_cubes_make_dipole(big_box, z_linear):
    grid = Grid(0.5, (0.5, 0.5), big_box)
    S = canonicalize([((0.2, 0.3), 1), ((0.6, 0.3), -1)], big_box, z_linear)
    P = deform(S, grid)
    assert P.atoms == (((0.25, 0.25), 1), ((0.75, 0.25), -1))
    gap = np.subtract(P.atoms[1][0], P.atoms[0][0])
    assert np.linalg.norm(gap) == pytest.approx(0.5)


def test_deform_is_homomorphism(big_box, z_linear):
    rng = np.random.default_rng(0)
    for _ in range(20):
        S = random_chain(rng, big_box, z_linear)
        T = random_chain(rng, big_box, z_linear)
        pts = [x for x, _ in S.atoms] + [x for x, _ in T.atoms]
        y = sample_offset(rng, pts, 0.3, 2)
        grid = Grid(0.3, y, big_box)
        assert deform(S + T, grid) == deform(S, grid) + deform(T, grid)


def test_deform_idempotent_on_centered_chains(big_box, z_linear):
    grid = Grid(0.5, (0.5, 0.5), big_box)
    S = canonicalize([(grid.center((0, 0)), 1), (grid.center((2, 1)), -2)],
                     big_box, z_linear)
    assert deform(S, grid) == S


def test_nonzero_chains_deform_nonzero(big_box, z_linear):
    # contrapositive of vanishing-deformation: once h is below half the
    # minimal separation, interior atoms cannot cancel
    rng = np.random.default_rng(1)
    for _ in range(20):
        S = random_chain(rng, big_box, z_linear, margin=0.3)
        if S.is_zero():
            continue
        sep = min((np.linalg.norm(np.subtract(a, b))
                   for i, (a, _) in enumerate(S.atoms)
                   for b, _ in S.atoms[i + 1:]), default=1.0)
        h = min(0.45 * sep, 0.2)
        for _ in range(5):
            y = sample_offset(rng, [x for x, _ in S.atoms], h, 2)
            assert not deform(S, Grid(h, y, big_box)).is_zero()


def test_cubes_meeting_domain_count():
    box = BoxDomain((0.0, 0.0), (1.0, 1.0))
    grid = Grid(0.25, (0.5, 0.5), box)
    cubes = list(grid.cubes_meeting_domain())
    assert len(cubes) == 16  # aligned offset tiles the box exactly
    grid2 = Grid(0.25, (0.3, 0.7), box)
    assert len(list(grid2.cubes_meeting_domain())) == 25


def test_deformation_scaling_monopole_bound(big_box, z_linear):
    S = canonicalize([((1.0, 1.0), 3)], big_box, z_linear)
    rep = deformation_scaling_test(S, [0.2, 0.1], samples=60, seed=2)
    for h, m in zip(rep.h_values, rep.means):
        assert m <= (math.sqrt(2) / 2) * h * mass(S) + 1e-9


def test_deformation_scaling_empty(big_box, z_linear):
    S = canonicalize([], big_box, z_linear)
    rep = deformation_scaling_test(S, [0.2, 0.1], samples=10, seed=3)
    assert rep.means == [0.0, 0.0]


def test_deformation_flatsize_monopole_exact(z_linear):
    # deep interior monopole: FS of the snapped chain equals the norm for
    # every admissible offset
    dom = BoxDomain((0.0, 0.0), (4.0, 4.0))
    S = canonicalize([((2.0, 2.0), 1)], dom, z_linear)
    rep = deformation_flatsize_test(S, [0.25, 0.1], samples=40, seed=4)
    assert rep.means == [pytest.approx(1.0, abs=1e-12)] * 2


def test_deformation_flatsize_tight_dipole_fraction(z_linear):
    dom = BoxDomain((0.0, 0.0), (4.0, 4.0))
    v = 0.004
    h = 0.1
    S = canonicalize([((2.0, 2.0), 1), ((2.0 + v, 2.0), -1)], dom, z_linear)
    rep = deformation_flatsize_test(S, [h], samples=600, seed=5)
    frac = rep.extra["nonzero_fraction"][0]
    predicted = v / h  # separating-plane probability along one axis
    sigma = math.sqrt(predicted * (1 - predicted) / 600)
    assert abs(frac - predicted) <= 4 * sigma


def test_deformation_flatsize_zero(big_box, z_linear):
    S = canonicalize([], big_box, z_linear)
    rep = deformation_flatsize_test(S, [0.2], samples=10, seed=6)
    assert rep.means == [0.0]


def test_skeleton_integral_full_dimension_exact():
    box = BoxDomain((0.0, 0.0), (1.0, 1.0))
    grid = Grid(0.3, (0.17, 0.83), box)
    one = lambda pts: np.ones(len(pts))
    assert skeleton_integral(one, grid, 2, box) == pytest.approx(1.0)


def test_skeleton_average_constant(unit_box):
    one = lambda pts: np.ones(len(pts))
    rep = skeleton_average_test(one, 1.0, unit_box, 1, 0.15, samples=300,
                                seed=7)
    assert abs(rep.estimate - 2.0) <= max(3 * rep.stderr, 1e-9)


def test_skeleton_average_indicator(unit_box):
    left = lambda pts: (pts[:, 0] < 0.5).astype(float)
    rep = skeleton_average_test(left, 0.5, unit_box, 0, 0.15, samples=300,
                                seed=8)
    assert abs(rep.estimate - 0.5) <= 3 * rep.stderr


def test_sample_offset_margin():
    rng = np.random.default_rng(9)
    pts = [(0.5, 0.5)]
    for _ in range(50):
        y = sample_offset(rng, pts, 0.1, 2, margin=0.02)
        grid = Grid(0.1, y, BoxDomain((0, 0), (1, 1)))
        assert grid.skeleton_distance(pts[0]) >= 0.02
