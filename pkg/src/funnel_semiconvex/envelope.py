"""Least concave majorant of a grid function and the growth checks it must pass."""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .piecewise import GridFunction, PiecewiseAffine
from .reports import VerificationReport, gap_report

if TYPE_CHECKING:
    from .omega_eta import OmegaEtaResult


def upper_concave_envelope(f: GridFunction) -> PiecewiseAffine:
    """Upper hull of the node set of ``f`` (monotone chain, collinear runs merged).

    Hull vertices are kept only while consecutive chord slopes strictly
    decrease; the comparison uses the same floating-point slopes the returned
    object reports, so its ``slopes`` are exactly non-increasing.
    """
    xs, ys = f.xs, f.ys
    if len(xs) == 1:
        return PiecewiseAffine([xs[0], xs[0] + 1.0], [ys[0], ys[0]])
    hull = [0]
    for i in range(1, len(xs)):
        while len(hull) >= 2:
            j, k = hull[-2], hull[-1]
            s_left = (ys[k] - ys[j]) / (xs[k] - xs[j])
            s_right = (ys[i] - ys[k]) / (xs[i] - xs[k])
            if s_right >= s_left:
                hull.pop()
            else:
                break
        hull.append(i)
    return PiecewiseAffine(xs[hull], ys[hull])


def right_derivative(psi: PiecewiseAffine, x):
    return psi.right_slope(x)


@dataclass(frozen=True)
class EnvelopeResult:
    psi: PiecewiseAffine
    source: "OmegaEtaResult"

    @classmethod
    def of(cls, result: "OmegaEtaResult") -> "EnvelopeResult":
        return cls(upper_concave_envelope(result.values), result)

    def slope_at(self, x):
        return self.psi.right_slope(x)

    @property
    def t_max(self) -> float:
        return self.psi.last

    def rows(self):
        """(breakpoint, value, right slope) triples; the last slope is NaN."""
        slopes = np.append(self.psi.slopes, np.nan)
        return list(zip(self.psi.breakpoints.tolist(), self.psi.values.tolist(), slopes.tolist()))


def check_envelope_sandwich(env: EnvelopeResult, rel_tol: float = 1e-12) -> VerificationReport:
    """``ω_η <= ψ <= 2 ω_η`` at every source node, plus exact hull concavity."""
    nodes = env.source.values.xs
    vals = env.source.values.ys
    psi = env.psi(nodes)
    scale = rel_tol * np.maximum(vals, 1e-300)
    below = vals - psi
    above = psi - 2.0 * vals
    tau = env.source.tau_grid(nodes)
    gap = np.maximum(below - scale, above - tau)
    s = env.psi.slopes
    concave = bool(np.all(s[1:] <= s[:-1]))
    rep = gap_report(
        "envelope_sandwich", gap, 0.0,
        max_lower_gap=float(np.max(below)),
        max_upper_gap=float(np.max(above)),
        concave_exact=concave,
        psi_at_zero=float(env.psi(0.0)),
        hull_vertices=int(len(env.psi.breakpoints)),
    )
    if not concave or env.psi(0.0) != 0.0:
        rep.passed = False
    return rep


def check_envelope_growth(env: EnvelopeResult, omega, eta, ts) -> VerificationReport:
    """``ψ(t + η(t)) <= ψ(t) + 2 ω(η(t))`` for admissible ``t`` (``η(t) <= t``)."""
    ts = np.asarray(ts, dtype=float)
    et = eta(ts)
    ok = (ts > 0) & (et <= ts) & (ts + et <= env.t_max)
    t, e = ts[ok], et[ok]
    gap = env.psi(t + e) - env.psi(t) - 2.0 * omega(e)
    tau = env.source.tau_grid(t + e)
    return gap_report("envelope_growth", gap, tau, skipped=int(np.count_nonzero(~ok)))


def check_psi_uniform_bound(env: EnvelopeResult, omega, eta, pairs) -> VerificationReport:
    """``ψ(x+h) - ψ(x) <= 4 max(1, h/η(x+h)) ω(h)`` on the sampled pairs."""
    pairs = np.asarray(pairs, dtype=float).reshape(-1, 2)
    x, h = pairs[:, 0], pairs[:, 1]
    ok = (x > 0) & (h > 0) & (x + h <= env.t_max)
    x, h = x[ok], h[ok]
    rhs = 4.0 * np.maximum(1.0, h / eta(x + h)) * omega(h)
    gap = env.psi(x + h) - env.psi(x) - rhs
    case = np.where(x <= h, "a", np.where(h <= eta(h), "b", "cd"))
    by_case = {c: int(np.count_nonzero(case == c)) for c in ("a", "b", "cd")}
    return gap_report("psi_uniform_bound", gap, env.source.tau_grid(x + h),
                      skipped=int(np.count_nonzero(~ok)), case_counts=by_case)
