import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from funnel_semiconvex.errors import HypothesisViolation, UnsupportedDimension
from funnel_semiconvex.geometry import (HPolyhedron, build_projection, classify,
                                        extract_funnel, extreme_rays_bruteforce, extreme_rays_dd,
                                        has_full_cone, recession_cone, reduce, verify_projection,
                                        width_dominates)
from funnel_semiconvex.omega_eta import ConstantWidth, PowerShiftWidth

FUNNEL3 = HPolyhedron([[-1, 0, 0], [0, 1, 1], [0, 1, -1], [0, -1, 1], [0, -1, -1]],
                      [0, 1, 1, 1, 1])
STRIP3 = HPolyhedron([[0, 1, 0], [0, -1, 0]], [1, 0])
ORTHANT3 = HPolyhedron(-np.eye(3), np.zeros(3))
CUBE3 = HPolyhedron(np.vstack([np.eye(3), -np.eye(3)]), np.ones(6))


def as_set(R):
    return sorted(tuple(np.round(r / np.linalg.norm(r), 9)) for r in R)


def test_membership_is_strict_for_open_sets():
    assert FUNNEL3.contains([[1.0, 0.0, 0.0]])[0]
    assert not FUNNEL3.contains([[0.0, 0.0, 0.0]])[0]
    closed = HPolyhedron(FUNNEL3.A, FUNNEL3.c, open=False)
    assert closed.contains([[0.0, 0.0, 0.0]])[0]


def test_recession_cones_of_test_sets():
    assert as_set(recession_cone(FUNNEL3).rays) == [(1.0, 0.0, 0.0)]
    strip = recession_cone(STRIP3)
    assert strip.lineality.shape[0] == 2 and len(strip.rays) == 0
    assert has_full_cone(ORTHANT3)
    assert recession_cone(CUBE3).span_dim == 0


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_double_description_matches_brute_force(seed):
    r = np.random.default_rng(seed)
    n = int(r.integers(2, 5))
    # cone containing the positive direction of a random vector, cut by random half-spaces
    w = r.normal(size=n)
    A = r.normal(size=(int(r.integers(n, n + 4)), n))
    A -= np.outer(np.maximum(A @ w, 0) + 0.1, w) / (w @ w)  # make w strictly feasible
    assert as_set(extreme_rays_dd(A)) == as_set(extreme_rays_bruteforce(A))


def test_high_dimension_rejected():
    P = HPolyhedron(-np.eye(7), np.zeros(7))
    with pytest.raises(UnsupportedDimension):
        recession_cone(P)


def test_projection_on_funnel():
    cone = recession_cone(FUNNEL3)
    L, steps = build_projection(cone)
    assert L.norm == pytest.approx(1.0)
    rep = verify_projection(FUNNEL3, cone, L, np.random.default_rng(0))
    assert rep.passed
    assert classify(cone, L) == "Funnel"


def test_strip_classification():
    cone = recession_cone(STRIP3)
    L, _ = build_projection(cone)
    assert classify(cone, L) == "Strip"


@pytest.mark.parametrize("P,msg", [(ORTHANT3, "contains full cone"), (CUBE3, "G bounded")])
def test_hypothesis_violations(P, msg):
    with pytest.raises(HypothesisViolation, match=msg):
        reduce(P, np.random.default_rng(0))


def test_funnel_extraction_exact_on_polygon():
    # {x > 0, |y| < min(1 + x, 6)}
    P = HPolyhedron([[-1, 0], [-1, 1], [-1, -1], [0, 1], [0, -1]], [0, 1, 1, 6, 6])
    red = reduce(P, np.random.default_rng(0))
    ex = red.funnel
    xs = np.linspace(0, 20, 41)
    np.testing.assert_allclose(ex.eta(xs), np.minimum(1 + xs, 6), rtol=1e-7)
    assert red.containment["violations"] == 0


def test_funnel3_extraction_and_domination():
    red = reduce(FUNNEL3, np.random.default_rng(0))
    assert red.case == "Funnel"
    np.testing.assert_allclose(red.funnel.eta(np.array([0.0, 1.0, 1e3])), 1.0, rtol=1e-7)
    assert width_dominates(PowerShiftWidth(0.4, 1.0), red.funnel)
    assert not width_dominates(ConstantWidth(0.5), red.funnel)


def test_extraction_image_is_contained():
    red = reduce(FUNNEL3, np.random.default_rng(1), containment_samples=5000)
    assert red.containment["violations"] == 0 and red.containment["axis_inside"]


def test_extract_funnel_direct():
    cone = recession_cone(FUNNEL3)
    L, _ = build_projection(cone)
    ex = extract_funnel(FUNNEL3, L)
    assert ex.tail_slope == pytest.approx(0.0, abs=1e-9)
