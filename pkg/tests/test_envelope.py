import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from funnel_semiconvex.envelope import (check_envelope_growth, check_envelope_sandwich,
                                        check_psi_uniform_bound, upper_concave_envelope)
from funnel_semiconvex.counterexample import log_uniform_pairs
from funnel_semiconvex.piecewise import GridFunction


def brute_envelope(xs, ys, t):
    """Largest chord value over all node pairs straddling ``t``."""
    best = -np.inf
    for i in range(len(xs)):
        for j in range(i, len(xs)):
            if xs[i] <= t <= xs[j]:
                if i == j:
                    v = ys[i]
                else:
                    v = ys[i] + (ys[j] - ys[i]) * (t - xs[i]) / (xs[j] - xs[i])
                best = max(best, v)
    return best


@st.composite
def grid_functions(draw):
    dx = draw(st.lists(st.floats(0.05, 5.0), min_size=2, max_size=15))
    xs = np.concatenate([[0.0], np.cumsum(dx)])
    ys = np.concatenate([[0.0], draw(st.lists(st.floats(0.0, 10.0), min_size=len(dx),
                                              max_size=len(dx)))])
    return GridFunction(xs, ys)


@settings(max_examples=80, deadline=None)
@given(grid_functions())
def test_envelope_matches_brute_force(f):
    psi = upper_concave_envelope(f)
    for t in np.linspace(0.0, f.last, 23):
        assert psi(t) == pytest.approx(brute_envelope(f.xs, f.ys, t), rel=1e-9, abs=1e-9)
    assert np.all(psi.slopes[1:] < psi.slopes[:-1])


def test_concave_input_is_reproduced():
    xs = np.linspace(0, 10, 11)
    f = GridFunction(xs, np.sqrt(xs))
    psi = upper_concave_envelope(f)
    np.testing.assert_array_equal(psi.breakpoints, xs)


def test_collinear_runs_are_merged():
    f = GridFunction([0, 1, 2, 3], [0, 1, 2, 2.5])
    np.testing.assert_array_equal(upper_concave_envelope(f).breakpoints, [0, 2, 3])


def test_envelope_checks_on_small_run(small_run, rng):
    om, eta, res, env = small_run
    assert check_envelope_sandwich(env).passed
    ts = np.exp(rng.uniform(np.log(1e-3), np.log(env.t_max), 1000))
    assert check_envelope_growth(env, om, eta, ts).passed
    pairs = log_uniform_pairs(rng, 1000, 1e-3, env.t_max)
    rep = check_psi_uniform_bound(env, om, eta, pairs)
    assert rep.passed and rep.violations == 0


def test_sandwich_check_detects_a_corrupted_envelope(small_run):
    from funnel_semiconvex.envelope import EnvelopeResult
    from funnel_semiconvex.piecewise import PiecewiseAffine
    om, eta, res, env = small_run
    bad = EnvelopeResult(PiecewiseAffine(env.psi.breakpoints, env.psi.values * 0.9), res)
    assert not check_envelope_sandwich(bad).passed


def test_rows_have_nan_last_slope(small_run):
    env = small_run[3]
    rows = env.rows()
    assert np.isnan(rows[-1][2]) and rows[0][0] == 0.0
