import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from funnel_semiconvex.counterexample import log_uniform_pairs
from funnel_semiconvex.errors import ConfigError, GridTooFine, RangeError
from funnel_semiconvex.modulus import Power
from funnel_semiconvex.omega_eta import (AdaptiveGrid, AffineWidth, ConstantWidth, Partition,
                                         PiecewiseWidth, PowerShiftWidth, build_grid,
                                         check_structural_inequalities, compute_omega_eta,
                                         liminf_ratio_report, optimal_partition, segment_cost,
                                         width_from_dict)
from funnel_semiconvex.piecewise import PiecewiseAffine


def exhaustive_min(nodes, eta, omega):
    """Minimum cost over every subset of interior nodes (exponential, tiny grids only)."""
    inner = nodes[1:-1]
    best = np.inf
    for r in range(len(inner) + 1):
        for sub in itertools.combinations(inner, r):
            pts = np.concatenate([[0.0], sub, [nodes[-1]]])
            best = min(best, Partition(pts).cost(eta, omega))
    return best


def test_widths_basic():
    assert ConstantWidth(2.0)(5.0) == 2.0
    assert PowerShiftWidth(0.4, 1.0)(0.0) == 1.0
    assert AffineWidth(0.5, 1.0)(2.0) == 2.0
    with pytest.raises(ConfigError):
        ConstantWidth(0.0)


def test_piecewise_width_requires_concave_nondecreasing_tail():
    PiecewiseWidth(PiecewiseAffine([0, 1, 2], [1, 2, 2.5]))
    with pytest.raises(ConfigError):
        PiecewiseWidth(PiecewiseAffine([0, 1, 2], [1, 1.2, 2.5]))
    with pytest.raises(ConfigError):
        PiecewiseWidth(PiecewiseAffine([0, 1, 2], [1, 2, 1.5]))


def test_width_from_dict():
    assert isinstance(width_from_dict({"kind": "power_shift", "beta": 0.4}), PowerShiftWidth)
    with pytest.raises(ConfigError):
        width_from_dict({"kind": "piecewise", "breakpoints": [0, 1, 2], "values": [1, 1.1, 3]})
    with pytest.raises(ConfigError):
        width_from_dict({"kind": "mystery"})


@pytest.mark.parametrize("eta", [ConstantWidth(1.0), PowerShiftWidth(0.4, 1.0),
                                 AffineWidth(0.25, 0.5)])
def test_grid_invariant(eta):
    g = build_grid(eta, 500.0)
    assert g.check_invariant(eta)
    assert g.nodes[0] == 0.0 and g.nodes[-1] == 500.0


def test_grid_validation():
    eta = ConstantWidth(1.0)
    with pytest.raises(ConfigError):
        build_grid(eta, 10.0, gamma=1.0)
    with pytest.raises(GridTooFine):
        build_grid(eta, 1e6, cap=1000)


def test_grid_matches_oracle_node_count(oracles):
    ref = oracles["power_shift_sqrt"]
    g = build_grid(PowerShiftWidth(0.4, 1.0), ref["t_max"], include=(1.0,))
    assert len(g) == ref["nodes"]


def test_snapping_and_index():
    g = AdaptiveGrid(np.array([0.0, 1.0, 2.0, 4.0]), 2.0, 1.0, 4.0)
    assert g.snap_down(1.5) == 1.0 and g.snap_up(1.5) == 2.0
    assert g.index_of(2.0) == 2
    with pytest.raises(RangeError):
        g.index_of(1.5)
    assert g.local_step(3.0) == 2.0 and g.local_step(4.0) == 2.0


def test_segment_cost():
    assert segment_cost(0.0, 4.0, ConstantWidth(1.0), Power(0.5)) == pytest.approx(8.0)
    assert segment_cost(0.0, 0.25, ConstantWidth(1.0), Power(0.5)) == pytest.approx(0.5)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(0.05, 3.0), min_size=2, max_size=9), st.floats(0.2, 3.0),
       st.floats(0.2, 1.0))
def test_dp_equals_exhaustive_search(dx, c, alpha):
    nodes = np.concatenate([[0.0], np.cumsum(dx)])
    eta, om = ConstantWidth(c), Power(alpha)
    grid = AdaptiveGrid(nodes, 10.0, 1.0, float(nodes[-1]))
    res = compute_omega_eta(om, eta, grid)
    assert res.values.ys[-1] == pytest.approx(exhaustive_min(nodes, eta, om), rel=1e-12)


def test_dp_matches_oracle(oracles, small_run):
    ref = oracles["power_shift_sqrt"]
    res = small_run[2]
    np.testing.assert_allclose(res.values(np.array(ref["h"])), ref["values"], rtol=1e-12)


def test_partition_cost_reproduces_value(small_run):
    om, eta, res, _ = small_run
    for h in res.grid.snap_down([0.5, 7.0, 300.0, 1000.0]):
        p = optimal_partition(res, float(h))
        assert p.h == h
        assert p.cost(eta, om) == pytest.approx(float(res(h)), rel=1e-12)
    assert optimal_partition(res, 1000.0).to_text().startswith("0 ")


def test_structural_inequalities_small(small_run, rng):
    om, eta, res, _ = small_run
    pairs = log_uniform_pairs(rng, 1000, 1e-3, 1000.0)
    rep = check_structural_inequalities(res, om, eta, pairs)
    assert rep.passed, rep.to_dict()


def test_liminf_ratio_decreasing_for_power(small_run):
    om, eta, res, _ = small_run
    rep = liminf_ratio_report(om, res, (1.0, 1000.0))
    assert rep.non_increasing and rep.end_ratio < 1
    with pytest.raises(ConfigError):
        liminf_ratio_report(om, res, (1.0, 1e9))


def test_csv_layout(small_run):
    text = small_run[2].to_csv()
    lines = text.split("\n")
    assert lines[0] == "h,omega_eta,lower,upper,ratio"
    assert lines[1] == "0,0,0,0,nan"
    assert text.endswith("\n") and "\r" not in text
