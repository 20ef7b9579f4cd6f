"""Projection operators: exact cases, metric properties, oracle agreement."""

import math

import numpy as np
import pytest

from tinysocp.oracles import grid_projection_oracle
from tinysocp.problem import ConeSlice
from tinysocp.projections import (
    box_inplace,
    project_box,
    project_slacks,
    project_soc,
    soc_inplace,
)


def test_box_basic_clamp():
    lo = np.array([-1.0, 0.0])
    hi = np.array([1.0, 2.0])
    assert np.array_equal(project_box(np.array([-3.0, 5.0]), lo, hi), [-1.0, 2.0])
    assert np.array_equal(project_box(np.array([0.5, 1.5]), lo, hi), [0.5, 1.5])


def test_box_open_sides():
    lo = np.array([-np.inf, 0.0])
    hi = np.array([np.inf, np.inf])
    v = np.array([-1e9, -3.0])
    assert np.array_equal(project_box(v, lo, hi), [-1e9, 0.0])


def test_box_inplace_matches_functional():
    rng = np.random.default_rng(7)
    for _ in range(25):
        v = rng.normal(size=(4, 3)) * 3
        lo = -rng.random(3)
        hi = rng.random(3)
        expect = project_box(v, lo, hi)
        box_inplace(v, lo, hi)
        assert np.array_equal(v, expect)


def test_soc_interior_point_unchanged():
    z = np.array([0.3, -0.4, 2.0])
    assert np.array_equal(project_soc(z), z)


def test_soc_polar_cone_maps_to_origin():
    # apex more negative than the head norm: projection is zero
    z = np.array([0.3, 0.4, -0.6])
    assert np.array_equal(project_soc(z), np.zeros(3))


def test_soc_boundary_case_halves_the_gap():
    # z = (1, 0, 0): projection is (0.5, 0, 0.5)
    z = np.array([1.0, 0.0, 0.0])
    p = project_soc(z)
    assert np.allclose(p, [0.5, 0.0, 0.5], atol=1e-15)


def test_soc_axis_negative_apex_zero_head():
    z = np.array([0.0, 0.0, -1.0])
    assert np.array_equal(project_soc(z), np.zeros(3))


def test_soc_inplace_segment_only():
    row = np.array([9.0, 1.0, 0.0, 0.0, 7.0])
    soc_inplace(row, 1, 3)
    assert row[0] == 9.0 and row[4] == 7.0
    assert np.allclose(row[1:4], [0.5, 0.0, 0.5])


def test_soc_membership_after_projection():
    rng = np.random.default_rng(11)
    for _ in range(300):
        z = rng.normal(size=3) * rng.lognormal()
        p = project_soc(z)
        assert np.linalg.norm(p[:2]) <= p[2] + 1e-12


def test_soc_idempotent():
    rng = np.random.default_rng(12)
    for _ in range(300):
        z = rng.normal(size=4) * 5
        p = project_soc(z)
        assert np.max(np.abs(project_soc(p) - p)) <= 1e-12


def test_soc_nonexpansive():
    rng = np.random.default_rng(13)
    for _ in range(300):
        a = rng.normal(size=3) * 3
        b = rng.normal(size=3) * 3
        pa, pb = project_soc(a), project_soc(b)
        assert np.linalg.norm(pa - pb) <= np.linalg.norm(a - b) + 1e-12


def test_soc_matches_grid_oracle_2d_and_3d():
    rng = np.random.default_rng(14)
    for size in (2, 3):
        for _ in range(40):
            z = rng.normal(size=size) * 2
            p = project_soc(z)
            y = grid_projection_oracle(z, grid_resolution=200)
            assert np.linalg.norm(z - p) <= np.linalg.norm(z - y) + 1e-6


def test_soc_rejects_degenerate_length():
    with pytest.raises(ValueError):
        project_soc(np.array([1.0]))


def test_project_slacks_box_then_cones():
    # box touches only the last coordinate, cone the first three
    lo = np.array([-np.inf, -np.inf, -np.inf, -10.0])
    hi = np.array([np.inf, np.inf, np.inf, 10.0])
    v = np.array([1.0, 0.0, 0.0, -20.0])
    out = project_slacks(v, lo, hi, cones=[ConeSlice(0, 3)])
    assert np.allclose(out[:3], [0.5, 0.0, 0.5])
    assert out[3] == -10.0
    assert np.array_equal(v, [1.0, 0.0, 0.0, -20.0]), "input must stay untouched"


def test_projection_moves_no_farther_than_origin():
    # the cone contains 0, so ||p|| <= 2*||z|| trivially and in fact
    # ||z - p|| <= ||z - 0||; used by the grid oracle's radius bound
    rng = np.random.default_rng(15)
    for _ in range(200):
        z = rng.normal(size=3) * 4
        p = project_soc(z)
        assert np.linalg.norm(z - p) <= np.linalg.norm(z) + 1e-12


def test_soc_scale_factor_formula():
    # boundary-case output lies on the cone surface: z_n = ||head||
    rng = np.random.default_rng(16)
    hits = 0
    for _ in range(200):
        z = rng.normal(size=3) * 3
        vnorm = np.linalg.norm(z[:2])
        if -vnorm < z[2] < vnorm:
            p = project_soc(z)
            assert math.isclose(p[2], np.linalg.norm(p[:2]), rel_tol=0, abs_tol=1e-12)
            hits += 1
    assert hits > 50
