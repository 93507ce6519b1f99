"""Acceptance criteria 1-12 at their stated sizes and tolerances.

Each test records a PASS/FAIL line that the terminal summary prints.
"""

import json
import time

import numpy as np
import pytest

from funnel_semiconvex.cli import main
from funnel_semiconvex.counterexample import (build_counterexample, check_delta_sandwich,
                                              divergence_witness, funnel_point_sampler,
                                              log_uniform_pairs, triple_sampler,
                                              verify_g_conditions, verify_semiconvexity)
from funnel_semiconvex.envelope import EnvelopeResult, check_envelope_growth, check_envelope_sandwich
from funnel_semiconvex.geometry import (HPolyhedron, build_projection, recession_cone,
                                        verify_projection)
from funnel_semiconvex.modulus import LinearOverLog, Power, condition_star_estimate
from funnel_semiconvex.omega_eta import (ConstantWidth, PowerShiftWidth, build_grid,
                                         check_structural_inequalities, compute_omega_eta)

from conftest import CONFIGS

PROBES = [10.0, 100.0, 1e3, 1e4, 1e5, 1e6]


@pytest.fixture(scope="module")
def million_run():
    om, eta = Power(0.5), PowerShiftWidth(0.4, 1.0)
    t0 = time.perf_counter()
    res = compute_omega_eta(om, eta, build_grid(eta, 1e6))
    return om, eta, res, time.perf_counter() - t0


@pytest.fixture(scope="module")
def standard_bundle(standard_run):
    om, eta, res, env = standard_run
    return build_counterexample(om, eta, res, env)


def test_criterion_01_sandwich(million_run, record_criterion):
    om, eta, res, elapsed = million_run
    v, lo, hi = res.values.ys, res.lower_bound.ys, res.upper_bound.ys
    ok = bool(np.all(lo - 1e-9 <= v) and np.all(v <= hi + 1e-9)) and elapsed <= 60.0
    record_criterion(1, ok, f"{len(v)} nodes, DP {elapsed:.1f}s")
    assert ok


def test_criterion_02_pinch(oracles, record_criterion):
    om, eta = Power(0.5), ConstantWidth(1.0)
    grid = build_grid(eta, 100.0)
    res = compute_omega_eta(om, eta, grid)
    val = float(res(100.0))
    step_fraction = 1.0 / grid.rho  # every step is at most eta / rho
    ok = 100.0 <= val <= 100.0 * (1 + 5 * step_fraction)
    ok &= val == pytest.approx(oracles["constant_width_sqrt"]["value_at_100"], rel=1e-12)
    ok &= val <= oracles["constant_width_sqrt"]["unit_pieces_cost"] * (1 + 5 * step_fraction)
    record_criterion(2, ok, f"omega_eta(100) = {val:.6f}")
    assert ok


def test_criterion_03_structural(million_run, record_criterion):
    om, eta, res, _ = million_run
    pairs = log_uniform_pairs(np.random.default_rng(3), 1000, float(res.grid.nodes[1]), 1e6)
    rep = check_structural_inequalities(res, om, eta, pairs)
    n = rep.subadditivity.violations + rep.le_est.violations + rep.le_est2.violations
    record_criterion(3, rep.passed, f"violations {n}")
    assert rep.passed and n == 0


def test_criterion_04_envelope(million_run, record_criterion):
    om, eta, res, _ = million_run
    env = EnvelopeResult.of(res)
    sand = check_envelope_sandwich(env)
    ts = np.exp(np.random.default_rng(4).uniform(np.log(1e-3), np.log(1e6), 1000))
    growth = check_envelope_growth(env, om, eta, ts)
    ok = sand.passed and growth.passed and bool(np.all(np.diff(env.psi.slopes) <= 0))
    record_criterion(4, ok, f"violations {sand.violations + growth.violations}")
    assert ok


def test_criterion_05_construction(standard_bundle, record_criterion):
    B = standard_bundle
    q = max(1.0, float(B.eta(B.a)) / B.a)
    ok = B.q == q and B.b == 1280 * q ** 2
    xs = np.random.default_rng(5).uniform(B.a, B.psi.t_max / 2, 1000)
    ok &= check_delta_sandwich(B, xs).passed
    x = np.geomspace(1e-6, B.domain_x[1] * (1 - 1e-9), 1000)
    d = B.delta(B.a + x)
    ok &= bool(np.all(np.abs(B.dg(x) * B.b - d) <= 1e-15 * np.abs(d)))
    record_criterion(5, ok, f"a={B.a:g} q={B.q:.6f} b={B.b:.4f}")
    assert ok


def test_criterion_06_g_inequalities(standard_bundle, record_criterion):
    B = standard_bundle
    pairs = log_uniform_pairs(np.random.default_rng(6), 10_000, 1e-3, B.domain_x[1])
    reps = verify_g_conditions(B, pairs)
    ok = all(r.passed and r.violations == 0 for r in reps.values())
    record_criterion(6, ok, ", ".join(f"{k}:{r.violations}" for k, r in reps.items()))
    assert ok


def _semiconvexity_report(B, seed):
    dom = B.funnel
    return verify_semiconvexity(B.as_function(), B.omega, dom,
                                triple_sampler(funnel_point_sampler(dom)), 1.0,
                                np.random.default_rng(seed), 100_000, rel_tol=1e-9)


def test_criterion_07_semiconvexity(standard_bundle, record_criterion):
    t0 = time.perf_counter()
    rep = _semiconvexity_report(standard_bundle, 7)
    elapsed = time.perf_counter() - t0
    ok = rep.passed and rep.violations == 0 and elapsed <= 30.0
    record_criterion(7, ok, f"{rep.samples} triples, C_emp={rep.empirical_constant:.3g}, "
                            f"{elapsed:.2f}s")
    assert ok


def test_criterion_08_divergence(standard_bundle, record_criterion):
    rep = divergence_witness(standard_bundle, PROBES, x_ref=1e3)
    om, eta = Power(1.0), PowerShiftWidth(0.4, 1.0)
    res = compute_omega_eta(om, eta, build_grid(eta, 1.05e6, include=(1.0,)))
    ctrl = divergence_witness(build_counterexample(om, eta, res, EnvelopeResult.of(res)),
                              PROBES, x_ref=1e3)
    ok = rep.passed and rep.growth_ratio >= 4 and ctrl.growth_ratio <= 1.5
    record_criterion(8, ok, f"growth {rep.growth_ratio:.3f}, control {ctrl.growth_ratio:.3f}")
    assert ok


def test_criterion_09_condition_star(record_criterion):
    ok = True
    for alpha in (0.3, 0.5, 0.9):
        rep = condition_star_estimate(Power(alpha), 16, (1e3, 1e6))
        est = dict(rep.per_n)
        ok &= all(abs(est[n] - n ** (alpha - 1)) <= 1e-9 * n ** (alpha - 1) for n in (2, 4, 8, 16))
    v1 = condition_star_estimate(Power(1.0), 64, (1e3, 1e6)).verdict
    v2 = condition_star_estimate(LinearOverLog(beta=1.0), 64, (1e3, 1e6)).verdict
    ok &= v1 == "FailsOnWindow" and v2 == "FailsOnWindow"
    record_criterion(9, ok, f"Power(1): {v1}, LinearOverLog: {v2}")
    assert ok


def _reduce_exit(tmp_path, name):
    cfg = tmp_path / f"reduce_{name}.json"
    cfg.write_text(json.dumps({"seed": 10, "polyhedron": str(CONFIGS / f"{name}.json")}))
    return main(["reduce", "--config", str(cfg), "--out", str(tmp_path / name)])


def test_criterion_10_geometry(tmp_path, record_criterion):
    P = HPolyhedron.from_dict(json.loads((CONFIGS / "funnel3.json").read_text()))
    cone = recession_cone(P)
    L, _ = build_projection(cone)
    rep = verify_projection(P, cone, L, np.random.default_rng(10), lambdas=(1, 10, 100),
                            raise_on_fail=False)
    codes = {n: _reduce_exit(tmp_path, n) for n in ("funnel3", "orthant3", "strip3")}
    err = json.loads((tmp_path / "orthant3" / "error.json").read_text())
    ok = (len(cone.rays) == 1 and rep.passed and codes == {"funnel3": 0, "orthant3": 4,
                                                            "strip3": 10}
          and err["message"].startswith("Theorem hypothesis violated"))
    record_criterion(10, ok, f"exit codes {codes}")
    assert ok


def _pipeline(out):
    return main(["pipeline", "--config", str(CONFIGS / "pipeline_funnel3.json"), "--out", str(out)])


def test_criterion_11_end_to_end(tmp_path, record_criterion):
    code = _pipeline(tmp_path / "run")
    rep = json.loads((tmp_path / "run" / "report.json").read_text())
    sc = rep["pullback_semiconvexity"]
    lifted = rep["lifted_divergence"]
    ok = (code == 0 and sc["passed"] and sc["samples"] == 100_000
          and 0.5 <= lifted["factor"] <= 2.0)
    record_criterion(11, ok, f"exit {code}, lifted/planar growth {lifted['factor']:.3f}")
    assert ok


def test_criterion_12_determinism(tmp_path, record_criterion):
    files = {}
    for run in ("a", "b"):
        out = tmp_path / run
        assert main(["construct", "--config", str(CONFIGS / "standard.json"),
                     "--out", str(out / "construct")]) == 0
        assert _pipeline(out / "pipeline") == 0
        files[run] = {p.relative_to(out): p.read_bytes() for p in sorted(out.rglob("*"))
                      if p.is_file()}
    ok = files["a"] == files["b"] and len(files["a"]) >= 8
    record_criterion(12, ok, f"{len(files['a'])} files compared")
    assert ok
