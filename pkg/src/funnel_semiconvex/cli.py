"""Command-line front end: ``omega-eta``, ``envelope``, ``construct``, ``reduce``, ``pipeline``.

Every subcommand reads one JSON config, writes its outputs into ``--out`` and
returns an exit code: 0 all checks pass, 1 a check failed, 2 bad config or
input, 3 construction failure, 4 geometry failure or violated hypothesis,
10 strip case (classified but no witness built).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import counterexample as cx
from . import geometry as geo
from .envelope import (EnvelopeResult, check_envelope_growth, check_envelope_sandwich,
                       check_psi_uniform_bound)
from .errors import ConfigError, FunnelError, GeometryError
from .modulus import Modulus, condition_star_estimate, modulus_from_dict
from .omega_eta import (OmegaEtaResult, build_grid, check_structural_inequalities,
                        compute_omega_eta, liminf_ratio_report, partitions_to_text,
                        width_from_dict)
from .serialize import csv_text, write_json, write_text

EXIT_STRIP = 10

# stable stream ids so that changing one sample count leaves the others alone
_STREAMS = {"structural": 1, "envelope": 2, "delta": 3, "g": 4, "semiconvexity": 5,
            "taylor": 6, "lines": 7, "reduce": 8, "pullback": 9}

_GRID_DEFAULTS = {"gamma": 1.05, "rho": 4.0, "cap": 200_000, "h_min": 1e-3, "include": []}
_COUNT_DEFAULTS = {"structural_pairs": 1000, "envelope_samples": 1000, "delta_samples": 1000,
                   "g_pairs": 10_000, "triples": 100_000, "taylor_pairs": 10_000,
                   "lines": 200, "line_pairs": 50, "projection_points": 20,
                   "containment_samples": 2000, "pullback_triples": 100_000}
_STAR_DEFAULTS = {"n_max": 512, "h_window": [1e3, 1e6], "samples": 200, "eps_star": 0.05}


@dataclass
class PipelineConfig:
    omega: Modulus | None
    eta: object | None
    polyhedron: geo.HPolyhedron | None
    grid: dict
    a_min: float
    eps_pos: float | None
    seed: int
    counts: dict
    probes: list
    x_ref: float
    tol_rel: float
    growth_min: float | None
    condition_star: dict
    raw: dict = field(repr=False, default_factory=dict)

    def rng(self, stream: str) -> np.random.Generator:
        return np.random.default_rng([self.seed, _STREAMS[stream]])


def _positive(name, v):
    if not (isinstance(v, (int, float)) and not isinstance(v, bool) and v > 0):
        raise ConfigError(f"{name} must be a positive number, got {v!r}")
    return float(v)


def load_config(path: Path, seed_override: int | None = None) -> PipelineConfig:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    ver = raw.get("verification", {})
    seed = seed_override if seed_override is not None else raw.get("seed", ver.get("seed"))
    if seed is None:
        raise ConfigError("a seed is required (config 'seed' or --seed)")
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigError(f"seed must be a non-negative integer, got {seed!r}")

    for sec in ("omega", "eta", "grid", "construction", "verification", "condition_star"):
        if sec in raw and not isinstance(raw[sec], dict):
            raise ConfigError(f"config section '{sec}' must be an object")
    omega = modulus_from_dict(raw["omega"]) if "omega" in raw else None
    eta = width_from_dict(raw["eta"]) if "eta" in raw else None
    poly = None
    if "polyhedron" in raw:
        spec = raw["polyhedron"]
        if isinstance(spec, str):
            p = Path(spec)
            if not p.is_absolute():
                p = Path(path).parent / p
            try:
                spec = json.loads(p.read_text(encoding="utf-8"))
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read polyhedron {p}: {exc}") from None
        try:
            poly = geo.HPolyhedron.from_dict(spec)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad polyhedron: {exc}") from None

    grid = {**_GRID_DEFAULTS, **raw.get("grid", {})}
    if "t_max" in grid:
        _positive("grid.t_max", grid["t_max"])
    if not (isinstance(grid["gamma"], (int, float)) and grid["gamma"] > 1):
        raise ConfigError(f"grid.gamma must exceed 1, got {grid['gamma']!r}")
    for k in ("rho", "cap", "h_min"):
        _positive(f"grid.{k}", grid[k])

    con = raw.get("construction", {})
    a_min = _positive("construction.a_min", con.get("a_min", 1.0))
    eps_pos = con.get("eps_pos")
    if eps_pos is not None:
        eps_pos = _positive("construction.eps_pos", eps_pos)

    counts = {**_COUNT_DEFAULTS, **ver.get("counts", {})}
    for k, v in counts.items():
        if not isinstance(v, int) or v <= 0:
            raise ConfigError(f"verification.counts.{k} must be a positive integer")
    probes = ver.get("probes", np.geomspace(10.0, 1e6, 11).tolist())
    for p in probes:
        _positive("verification.probes[]", p)
    x_ref = _positive("verification.x_ref", ver.get("x_ref", 1e3))
    tol_rel = _positive("verification.tol_rel", ver.get("tol_rel", 1e-9))
    growth_min = ver.get("growth_min")
    if growth_min is not None:
        growth_min = _positive("verification.growth_min", growth_min)

    star = {**_STAR_DEFAULTS, **raw.get("condition_star", {})}
    if not (isinstance(star["n_max"], int) and star["n_max"] >= 2):
        raise ConfigError("condition_star.n_max must be an integer >= 2")
    lo, hi = star["h_window"]
    if not 0 < lo < hi:
        raise ConfigError("condition_star.h_window must satisfy 0 < lo < hi")

    return PipelineConfig(omega, eta, poly, grid, a_min, eps_pos, int(seed), counts,
                          [float(p) for p in probes], x_ref, tol_rel, growth_min, star, raw)


def _need(cfg: PipelineConfig, *names):
    for n in names:
        if n == "t_max":
            if "t_max" not in cfg.grid:
                raise ConfigError("grid.t_max is required")
        elif getattr(cfg, n) is None:
            raise ConfigError(f"config section '{n}' is required")


# ---------------------------------------------------------------- stages

@dataclass
class Stage:
    """Accumulates named check verdicts and report sections."""

    report: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    def check(self, name: str, rep) -> None:
        d = rep if isinstance(rep, dict) else rep.to_dict()
        self.report[name] = d
        self.checks[name] = bool(d["passed"])

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def finish(self, **extra) -> dict:
        return {"passed": self.passed, "checks": self.checks, "warnings": self.warnings,
                **extra, **self.report}


def _omega_eta_stage(cfg: PipelineConfig, st: Stage, eta) -> OmegaEtaResult:
    g = cfg.grid
    include = list(g["include"]) + [cfg.a_min]
    grid = build_grid(eta, float(g["t_max"]), float(g["gamma"]), float(g["rho"]), int(g["cap"]),
                      float(g["h_min"]), include)
    res = compute_omega_eta(cfg.omega, eta, grid)
    st.report["omega_eta"] = res.summary()
    st.checks["grid_invariant"] = grid.check_invariant(eta)
    pairs = cx.log_uniform_pairs(cfg.rng("structural"), cfg.counts["structural_pairs"],
                                 float(grid.nodes[1]), grid.t_max)
    st.check("structural", check_structural_inequalities(res, cfg.omega, eta, pairs))
    return res


def _envelope_stage(cfg: PipelineConfig, st: Stage, res: OmegaEtaResult, eta) -> EnvelopeResult:
    env = EnvelopeResult.of(res)
    rng = cfg.rng("envelope")
    n = cfg.counts["envelope_samples"]
    lo = float(res.grid.nodes[1])
    ts = np.exp(rng.uniform(np.log(lo), np.log(env.t_max), n))
    st.check("envelope_sandwich", check_envelope_sandwich(env))
    st.check("envelope_growth", check_envelope_growth(env, cfg.omega, eta, ts))
    st.check("psi_uniform_bound", check_psi_uniform_bound(
        env, cfg.omega, eta, cx.log_uniform_pairs(rng, n, lo, env.t_max)))
    return env


def _condition_star(cfg: PipelineConfig, st: Stage) -> None:
    s = cfg.condition_star
    rep = condition_star_estimate(cfg.omega, int(s["n_max"]), tuple(s["h_window"]),
                                  int(s["samples"]), float(s["eps_star"]))
    st.report["condition_star"] = rep.to_dict()
    if rep.verdict == "FailsOnWindow":
        st.warnings.append("condition (*) fails on window")
    elif rep.verdict != "Holds":
        st.warnings.append("condition (*) inconclusive on window")


def _construct_stage(cfg: PipelineConfig, st: Stage, res, env, eta, extended: bool):
    bundle = cx.build_counterexample(cfg.omega, eta, res, env, cfg.eps_pos, cfg.a_min)
    lo_x, hi_x = bundle.domain_x
    rng = cfg.rng("delta")
    xs = np.exp(rng.uniform(np.log(bundle.a), np.log(env.t_max / 2), cfg.counts["delta_samples"]))
    st.check("delta_sandwich", cx.check_delta_sandwich(bundle, xs))
    pairs = cx.log_uniform_pairs(cfg.rng("g"), cfg.counts["g_pairs"], 1e-3, hi_x)
    for name, rep in cx.verify_g_conditions(bundle, pairs).items():
        st.check(name, rep)
    fun, dom = bundle.as_function(), bundle.funnel
    ps = cx.funnel_point_sampler(dom)
    st.check("semiconvexity", cx.verify_semiconvexity(
        fun, cfg.omega, dom, cx.triple_sampler(ps), 1.0, cfg.rng("semiconvexity"),
        cfg.counts["triples"], cfg.tol_rel))
    if extended:
        st.check("taylor_bound", cx.verify_taylor_bound(
            fun, cfg.omega, dom, cx.pair_sampler(ps), cfg.rng("taylor"), cfg.counts["taylor_pairs"]))
        st.check("line_modulus", cx.verify_line_modulus(
            fun, cfg.omega, dom, ps, cfg.rng("lines"), cfg.counts["lines"], cfg.counts["line_pairs"]))
    div = cx.divergence_witness(bundle, cfg.probes, cfg.x_ref)
    st.check("divergence", div)
    if cfg.growth_min is not None:
        st.checks["divergence_growth"] = bool(div.growth_ratio >= cfg.growth_min)
    return bundle, div


# ---------------------------------------------------------------- commands

def cmd_omega_eta(cfg: PipelineConfig, out: Path) -> int:
    _need(cfg, "omega", "eta", "t_max")
    st = Stage()
    res = _omega_eta_stage(cfg, st, cfg.eta)
    hi = res.grid.t_max
    st.report["liminf_ratio"] = liminf_ratio_report(
        cfg.omega, res, (min(1.0, hi / 2), hi)).to_dict()
    # partitions are only defined at nodes, so probes snap down to the grid
    probes = sorted({float(res.grid.snap_down(p)) for p in cfg.probes if p <= hi})
    write_text(out / "omega_eta.csv", res.to_csv())
    write_text(out / "partitions.txt", partitions_to_text(res, probes))
    write_json(out / "omega_eta.json", st.finish(sandwich="passed", probes={
        "h": probes, "omega_eta": [float(res(p)) for p in probes]}))
    # the sandwich is asserted inside the DP; reaching this point means it held
    return 0


def _envelope_csv(env: EnvelopeResult) -> str:
    return csv_text(["t", "psi", "right_slope"], env.rows())


def cmd_envelope(cfg: PipelineConfig, out: Path) -> int:
    _need(cfg, "omega", "eta", "t_max")
    st = Stage()
    res = _omega_eta_stage(cfg, st, cfg.eta)
    env = _envelope_stage(cfg, st, res, cfg.eta)
    write_text(out / "omega_eta.csv", res.to_csv())
    write_text(out / "envelope.csv", _envelope_csv(env))
    write_json(out / "envelope.json", st.finish())
    return 0 if st.passed else 1


def cmd_construct(cfg: PipelineConfig, out: Path) -> int:
    _need(cfg, "omega", "eta", "t_max")
    st = Stage()
    _condition_star(cfg, st)
    for w in st.warnings:
        print(f"warning: {w}", file=sys.stderr)
    res = _omega_eta_stage(cfg, st, cfg.eta)
    env = _envelope_stage(cfg, st, res, cfg.eta)
    bundle, div = _construct_stage(cfg, st, res, env, cfg.eta, extended=True)
    write_text(out / "omega_eta.csv", res.to_csv())
    write_text(out / "envelope.csv", _envelope_csv(env))
    write_text(out / "divergence.csv", div.to_csv())
    write_json(out / "bundle.json", bundle.to_dict())
    write_json(out / "verification.json", st.finish(seed=cfg.seed))
    return 0 if st.passed else 1


def _reduce(cfg: PipelineConfig) -> geo.Reduction:
    return geo.reduce(cfg.polyhedron, cfg.rng("reduce"), cfg.counts["projection_points"],
                      cfg.counts["containment_samples"])


def cmd_reduce(cfg: PipelineConfig, out: Path) -> int:
    _need(cfg, "polyhedron")
    red = _reduce(cfg)
    rep = {"passed": bool(red.projection.passed), **red.to_dict()}
    if red.case == "Strip":
        rep["note"] = "classified Strip; witness out of scope (external reference)"
    write_json(out / "reduction.json", rep)
    if red.case == "Strip":
        return EXIT_STRIP
    return 0 if red.projection.passed else 1


def cmd_pipeline(cfg: PipelineConfig, out: Path) -> int:
    _need(cfg, "omega", "polyhedron", "t_max")
    st = Stage()
    stage = "reduce"
    try:
        red = _reduce(cfg)
        st.report["reduction"] = red.to_dict()
        st.checks["projection"] = bool(red.projection.passed)
        if red.case == "Strip":
            write_json(out / "report.json", st.finish(
                case="Strip", note="classified Strip; witness out of scope (external reference)"))
            return EXIT_STRIP
        st.checks["containment"] = red.containment["violations"] == 0
        if cfg.eta is not None:
            eta = cfg.eta
            if not geo.width_dominates(eta, red.funnel):
                raise GeometryError("configured eta does not dominate the extracted funnel width")
            st.report["eta_source"] = "config (dominates extracted width)"
        else:
            eta = red.funnel.eta
            st.report["eta_source"] = "extracted"
        st.report["eta"] = eta.to_dict()

        stage = "omega_eta"
        _condition_star(cfg, st)
        res = _omega_eta_stage(cfg, st, eta)
        stage = "envelope"
        env = _envelope_stage(cfg, st, res, eta)
        stage = "construct"
        bundle, div = _construct_stage(cfg, st, res, env, eta, extended=False)
        stage = "pullback"
        pb = geo.pullback(bundle, red)
        st.check("pullback_semiconvexity", cx.verify_semiconvexity(
            pb.function, cfg.omega, pb.domain, cx.triple_sampler(pb.point_sampler()), 1.0,
            cfg.rng("pullback"), cfg.counts["pullback_triples"], cfg.tol_rel))
        lifted = pb.lifted_divergence(cfg.probes, cfg.x_ref)
        factor = lifted["growth_ratio"] / div.growth_ratio
        lifted["planar_growth_ratio"] = div.growth_ratio
        lifted["factor"] = factor
        lifted["passed"] = bool(0.5 <= factor <= 2.0)
        st.check("lifted_divergence", lifted)
        st.report["witness_ray"] = {"p1": pb.p1.tolist(), "d": pb.d.tolist(),
                                    "v_hat": pb.v_hat.tolist()}
    except FunnelError as exc:
        exc.stage = getattr(exc, "stage", stage)
        raise
    write_text(out / "divergence.csv", div.to_csv())
    write_json(out / "bundle.json", bundle.to_dict())
    write_json(out / "report.json", st.finish(case="Funnel", seed=cfg.seed))
    return 0 if st.passed else 1


COMMANDS = {"omega-eta": cmd_omega_eta, "envelope": cmd_envelope, "construct": cmd_construct,
            "reduce": cmd_reduce, "pipeline": cmd_pipeline}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="funnel-semiconvex", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, type=Path)
        s.add_argument("--out", required=True, type=Path)
        s.add_argument("--seed", type=int, default=None)
    return p


def _write_error(out: Path, exc: Exception, code: int, stage: str) -> None:
    err = {"error": type(exc).__name__, "message": str(exc), "exit_code": code, "stage": stage}
    print(json.dumps(err), file=sys.stderr)
    try:
        out.mkdir(parents=True, exist_ok=True)
        write_json(out / "error.json", err)
    except OSError:
        pass


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out: Path = args.out
    try:
        cfg = load_config(args.config, args.seed)
        out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg, out)
    except FunnelError as exc:
        _write_error(out, exc, exc.exit_code, getattr(exc, "stage", args.command))
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
