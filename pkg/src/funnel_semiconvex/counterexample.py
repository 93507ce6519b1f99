"""The odd function ``f(x, y) = g(x) · y`` on a planar funnel and its sampled checks.

``g`` integrates a non-increasing piecewise-affine ``δ`` that interpolates the
right slopes of the concave envelope ``ψ`` at dyadic points ``2^n a``.  Both
``g`` and ``g'`` are evaluated in closed form.  The verifiers below accept any
:class:`FunctionWithGradient` on any domain with a ``contains`` test, so they
are reused for pulled-back functions in higher dimension.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .envelope import EnvelopeResult
from .errors import DomainError, FlatEnvelope, SamplerContractError
from .omega_eta import OmegaEtaResult
from .piecewise import PiecewiseAffine, _scalar_or_array
from .reports import VerificationReport, gap_report
from .serialize import csv_text


@dataclass(frozen=True)
class FunnelDomain:
    """``{(x, y): 0 < x < x_max, |y| < η(x)}``."""

    eta: Callable
    x_max: float

    @property
    def dim(self) -> int:
        return 2

    def contains(self, P) -> np.ndarray:
        P = np.atleast_2d(np.asarray(P, dtype=float))
        x, y = P[:, 0], P[:, 1]
        inside = (x > 0) & (x < self.x_max)
        out = np.zeros(len(P), dtype=bool)
        out[inside] = np.abs(y[inside]) < self.eta(x[inside])
        return out


@dataclass(frozen=True)
class FunctionWithGradient:
    """Vectorised ``f`` and ``∇f`` on rows of an ``(n, d)`` array."""

    f: Callable
    grad: Callable
    dim: int


@dataclass(frozen=True)
class CounterexampleBundle:
    eta: object
    omega: object
    omega_eta: OmegaEtaResult = field(repr=False)
    psi: EnvelopeResult = field(repr=False)
    a: float
    q: float
    b: float
    delta: PiecewiseAffine

    @property
    def domain_x(self) -> tuple[float, float]:
        return (0.0, self.delta.last - self.a)

    @property
    def funnel(self) -> FunnelDomain:
        return FunnelDomain(self.eta, self.domain_x[1])

    def _local(self, x):
        # work in offsets from a so that small x keeps full relative precision
        xa = np.asarray(x, dtype=float)
        _check_x(self, xa)
        off = self.delta.breakpoints - self.a
        i = np.clip(np.searchsorted(off, xa, side="right") - 1, 0, len(off) - 2)
        return xa, i, xa - off[i]

    def g(self, x):
        """``(1/b) ∫_a^{a+x} δ``, exact for the piecewise-affine integrand."""
        xa, i, dx = self._local(x)
        d = self.delta
        out = d._cumint[i] + dx * (d.values[i] + 0.5 * d.slopes[i] * dx)
        return _scalar_or_array(x, out / self.b)

    def dg(self, x):
        xa, i, dx = self._local(x)
        d = self.delta
        return _scalar_or_array(x, (d.values[i] + d.slopes[i] * dx) / self.b)

    def as_function(self) -> FunctionWithGradient:
        def f(P):
            P = np.atleast_2d(P)
            return self.g(P[:, 0]) * P[:, 1]

        def grad(P):
            P = np.atleast_2d(P)
            return np.column_stack([self.dg(P[:, 0]) * P[:, 1], self.g(P[:, 0])])

        return FunctionWithGradient(f, grad, 2)

    def to_dict(self) -> dict:
        return {
            "eta": self.eta.to_dict(),
            "omega": self.omega.to_dict(),
            "a": self.a,
            "q": self.q,
            "b": self.b,
            "delta": {"breakpoints": self.delta.breakpoints.tolist(),
                      "values": self.delta.values.tolist()},
            "domain_x": list(self.domain_x),
        }


def _check_x(bundle: CounterexampleBundle, x: np.ndarray):
    if np.any(x <= 0) or np.any(x > bundle.domain_x[1]):
        raise DomainError(f"x outside the domain (0, {bundle.domain_x[1]!r}]")


def build_counterexample(omega, eta, omega_eta: OmegaEtaResult, psi: EnvelopeResult,
                         eps_pos: float | None = None, a_min: float = 1.0) -> CounterexampleBundle:
    """Pick the smallest node ``a >= a_min`` with ``ψ'_+(4a) >= eps_pos`` and build δ, g."""
    t_max = psi.t_max
    slopes = psi.psi.slopes
    if eps_pos is None:
        eps_pos = 1e-12 * float(slopes[0])
    nodes = omega_eta.grid.nodes
    cand = nodes[(nodes >= a_min) & (4 * nodes < t_max)]
    if len(cand) == 0:
        raise FlatEnvelope(f"no node a >= {a_min} with 4a < {t_max}")
    ok = np.nonzero(psi.slope_at(4 * cand) >= eps_pos)[0]
    if len(ok) == 0:
        raise FlatEnvelope(f"right slope of the envelope stays below {eps_pos:.3g}")
    a = float(cand[ok[0]])
    q = max(1.0, float(eta(a)) / a)
    b = 1280.0 * q ** 2
    dyadic = [a]
    while 2 * dyadic[-1] < t_max:
        dyadic.append(2 * dyadic[-1])
    dyadic = np.array(dyadic)
    vals = np.asarray(psi.slope_at(dyadic), dtype=float)
    bp = np.append(dyadic, t_max)
    vals = np.append(vals, vals[-1])
    delta = PiecewiseAffine(bp, vals)
    return CounterexampleBundle(eta, omega, omega_eta, psi, a, q, b, delta)


def eval_f(bundle: CounterexampleBundle, x, y):
    P = np.column_stack([np.ravel(x), np.ravel(y)])
    if not np.all(bundle.funnel.contains(P)):
        raise DomainError("point outside the funnel")
    return _scalar_or_array(x, bundle.as_function().f(P))


def eval_grad_f(bundle: CounterexampleBundle, x, y):
    P = np.column_stack([np.ravel(x), np.ravel(y)])
    if not np.all(bundle.funnel.contains(P)):
        raise DomainError("point outside the funnel")
    G = bundle.as_function().grad(P)
    if np.ndim(x) == 0:
        return float(G[0, 0]), float(G[0, 1])
    return G[:, 0], G[:, 1]


def check_delta_sandwich(bundle: CounterexampleBundle, xs) -> VerificationReport:
    """``ψ'_+(2x) <= δ(x) <= ψ'_+(x/2)`` for ``x`` in ``[a, T_max/2)``."""
    xs = np.asarray(xs, dtype=float)
    ok = (xs >= bundle.a) & (2 * xs < bundle.psi.t_max)
    x = xs[ok]
    d = bundle.delta(x)
    gap = np.maximum(bundle.psi.slope_at(2 * x) - d, d - bundle.psi.slope_at(x / 2))
    return gap_report("delta_sandwich", gap, 0.0, skipped=int(np.count_nonzero(~ok)))


# ---------------------------------------------------------------- samplers

def log_uniform_pairs(rng: np.random.Generator, n: int, lo: float, hi: float,
                      h_lo: float | None = None) -> np.ndarray:
    """``(x, h)`` with ``x`` log-uniform on ``[lo, hi/2]`` and ``h`` log-uniform on ``[h_lo, hi - x]``."""
    h_lo = lo if h_lo is None else h_lo
    x = np.exp(rng.uniform(np.log(lo), np.log(hi / 2), n))
    h = np.exp(rng.uniform(0.0, 1.0, n) * (np.log(hi - x) - np.log(h_lo)) + np.log(h_lo))
    return np.column_stack([x, h])


def funnel_point_sampler(funnel: FunnelDomain, x_lo: float = 1e-3):
    """Points with ``x`` log-uniform on ``[x_lo, x_max)`` and ``y`` uniform across the width."""
    hi = funnel.x_max * (1 - 1e-12)

    def sample(rng: np.random.Generator, n: int) -> np.ndarray:
        x = np.exp(rng.uniform(np.log(x_lo), np.log(hi), n))
        y = rng.uniform(-1.0, 1.0, n) * funnel.eta(x)
        return np.column_stack([x, y])

    return sample


def triple_sampler(point_sampler):
    """``(p, q, λ)`` with independent endpoints and uniform ``λ``."""

    def sample(rng: np.random.Generator, n: int):
        P = point_sampler(rng, n)
        Q = point_sampler(rng, n)
        lam = rng.uniform(0.0, 1.0, n)
        return P, Q, lam

    return sample


def pair_sampler(point_sampler, t_lo: float = 1e-8):
    """``(p, p + h)`` where ``p + h`` lies on a segment of log-uniform relative length.

    Shrinking ``q - p`` by ``t ∈ [t_lo, 1]`` keeps both points inside a convex
    domain and covers many scales of ``|h|``.
    """

    def sample(rng: np.random.Generator, n: int):
        P = point_sampler(rng, n)
        Q = point_sampler(rng, n)
        t = np.exp(rng.uniform(np.log(t_lo), 0.0, n))
        return P, (Q - P) * t[:, None]

    return sample


# ---------------------------------------------------------------- verifiers

def _require_inside(domain, *arrays):
    for A in arrays:
        if not np.all(domain.contains(A)):
            raise SamplerContractError("sampler produced a point outside the domain")


def verify_semiconvexity(func: FunctionWithGradient, omega, domain, sampler, C: float,
                         rng: np.random.Generator, n: int, rel_tol: float = 1e-9) -> VerificationReport:
    """Both-sided ``ωC``-semiconvexity on sampled triples.

    Gap per triple is ``|f(λp+(1-λ)q) - λf(p) - (1-λ)f(q)| - Cλ(1-λ)|p-q|ω(|p-q|)``
    (the larger of the semiconvex and semiconcave gaps); the tolerance is
    ``rel_tol`` times the largest ``|f|`` among the three points.
    """
    P, Q, lam = sampler(rng, n)
    _require_inside(domain, P, Q)
    M = lam[:, None] * P + (1 - lam)[:, None] * Q
    fp, fq, fm = func.f(P), func.f(Q), func.f(M)
    r = np.linalg.norm(P - Q, axis=1)
    bound = C * lam * (1 - lam) * r * omega(r)
    defect = fm - lam * fp - (1 - lam) * fq
    gap = np.abs(defect) - bound
    scale = rel_tol * np.maximum.reduce([np.abs(fp), np.abs(fq), np.abs(fm)])
    nz = bound > 0
    emp = float(np.max(np.abs(defect[nz]) / (bound[nz] / C))) if np.any(nz) else 0.0
    rep = gap_report("semiconvexity", gap, scale, C=C, convex_side=float(np.max(defect - bound)),
                     concave_side=float(np.max(-defect - bound)))
    rep.empirical_constant = emp
    return rep


def taylor_constant(func: FunctionWithGradient, omega, P, H) -> tuple[float, int]:
    r = np.linalg.norm(H, axis=1)
    ok = r > 0
    P, H, r = P[ok], H[ok], r[ok]
    f1, f0 = func.f(P + H), func.f(P)
    lin = np.einsum("ij,ij->i", func.grad(P), H)
    # remove what floating-point cancellation alone can produce
    noise = 8 * np.finfo(float).eps * (np.abs(f1) + np.abs(f0) + np.abs(lin))
    rem = np.maximum(np.abs(f1 - f0 - lin) - noise, 0.0)
    return float(np.max(rem / (r * omega(r)))), int(np.count_nonzero(~ok))


def verify_taylor_bound(func: FunctionWithGradient, omega, domain, sampler,
                        rng: np.random.Generator, n: int) -> VerificationReport:
    """Empirical ``C₃`` from ``n`` pairs and again from ``2n`` further pairs."""
    P1, H1 = sampler(rng, n)
    P2, H2 = sampler(rng, 2 * n)
    _require_inside(domain, P1, P1 + H1, P2, P2 + H2)
    c1, s1 = taylor_constant(func, omega, P1, H1)
    c2, s2 = taylor_constant(func, omega, np.vstack([P1, P2]), np.vstack([H1, H2]))
    stable = bool(np.isfinite(c2) and (c1 == c2 or (c1 > 0 and c2 / c1 < 1.5)))
    return VerificationReport("taylor_bound", 3 * n, float("nan"), 0 if stable else 1, stable,
                              empirical_constant=c2, skipped=s2,
                              details={"constant_first_run": c1, "constant_doubled": c2})


def verify_line_modulus(func: FunctionWithGradient, omega, domain, point_sampler,
                        rng: np.random.Generator, n_lines: int, n_pairs: int) -> VerificationReport:
    """Empirical ``C₂`` for directional derivatives along sampled chords.

    Each line runs through two sampled points; parameters ``t < t'`` are drawn
    on the chord between them, which lies in the domain by convexity.
    """
    A = point_sampler(rng, n_lines)
    B = point_sampler(rng, n_lines)
    _require_inside(domain, A, B)
    L = np.linalg.norm(B - A, axis=1)
    ok = L > 0
    A, B, L = A[ok], B[ok], L[ok]
    V = (B - A) / L[:, None]
    T = np.sort(rng.uniform(0.0, 1.0, (len(A), n_pairs, 2)), axis=2) * L[:, None, None]
    p0 = A[:, None, :] + T[..., 0:1] * V[:, None, :]
    p1 = A[:, None, :] + T[..., 1:2] * V[:, None, :]
    d = func.dim
    g0 = np.einsum("ijk,ik->ij", func.grad(p0.reshape(-1, d)).reshape(p0.shape), V)
    g1 = np.einsum("ijk,ik->ij", func.grad(p1.reshape(-1, d)).reshape(p1.shape), V)
    dt = T[..., 1] - T[..., 0]
    pos = dt > 0
    ratio = np.abs(g1 - g0)[pos] / omega(dt[pos])
    c2 = float(np.max(ratio)) if ratio.size else 0.0
    return VerificationReport("line_modulus", int(ratio.size), float("nan"),
                              0 if np.isfinite(c2) else 1, bool(np.isfinite(c2)),
                              empirical_constant=c2,
                              skipped=int(np.count_nonzero(~ok)) * n_pairs + int(np.count_nonzero(~pos)))


def verify_g_conditions(bundle: CounterexampleBundle, sample_pairs) -> dict[str, VerificationReport]:
    """The three one-dimensional inequalities that make ``f`` semiconvex and semiconcave.

    Slack: each inequality is derived from increments of ``ψ`` scaled by a
    constant times ``1/b``; the slack is that multiple of ``τ_grid`` at the
    scale where ``ψ`` is used.
    """
    pairs = np.asarray(sample_pairs, dtype=float).reshape(-1, 2)
    hi = bundle.domain_x[1]
    ok = (pairs[:, 0] > 0) & (pairs[:, 1] > 0) & (pairs.sum(axis=1) <= hi)
    x, h = pairs[ok, 0], pairs[ok, 1]
    skipped = int(np.count_nonzero(~ok))
    om, eta, b, q, a = bundle.omega, bundle.eta, bundle.b, bundle.q, bundle.a
    tau = bundle.omega_eta.tau_grid
    gx, gxh = bundle.g(x), bundle.g(x + h)
    dgx, dgxh = bundle.dg(x), bundle.dg(x + h)
    ex = eta(x)
    th1 = gxh - gx - (8 / b) * np.maximum(1.0, h / eta(x + h)) * om(h)
    th2 = ex * dgx - (8 * q / b) * om(ex)
    th3 = ex * (dgx - dgxh) - om(h) / 5
    s1 = (2 / b) * tau((a + x + h) / 2)
    s2 = (2 * q / b) * tau((a + x) / 2)
    return {
        "th_1": gap_report("g_increment", th1, s1, skipped=skipped),
        "th_2": gap_report("g_slope_width", th2, s2, skipped=skipped),
        # the slope-drop bound is derived from th_2 through ω(4qt) <= 4qω(t)
        "th_3": gap_report("g_slope_drop", th3, 4 * q * s2, skipped=skipped),
    }


@dataclass
class DivergenceReport:
    x: list
    W: list
    lower_bound: list
    violations: int
    growth_ratio: float
    x_ref: float
    x_top: float

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def to_dict(self):
        return {"x": self.x, "W": self.W, "lower_bound": self.lower_bound,
                "violations": self.violations, "growth_ratio": self.growth_ratio,
                "x_ref": self.x_ref, "x_top": self.x_top, "passed": self.passed}

    def to_csv(self) -> str:
        return csv_text(["x", "W", "lower_bound"], zip(self.x, self.W, self.lower_bound))


def divergence_witness(bundle: CounterexampleBundle, probes, x_ref: float = 1e3) -> DivergenceReport:
    """``W(x) = |g(x) - g(1)| / ω(x - 1)`` against its lower bound from ω_η.

    The bound ``(ω_η(x) - ψ(2(a+1))) / (2bω(x))`` holds for the true ω_η; the
    grid value over-approximates it, so each probe gets the slack
    ``τ_grid(x) / (2bω(x))``.  ``growth_ratio`` is ``W`` at the largest probe
    over ``W`` at ``x_ref`` (which is added to the probes).
    """
    hi = bundle.domain_x[1]
    xs = np.unique(np.append(np.asarray(probes, dtype=float), x_ref))
    xs = xs[(xs > 1) & (xs <= hi)]
    om, b = bundle.omega, bundle.b
    W = np.abs(bundle.g(xs) - bundle.g(1.0)) / om(xs - 1)
    psi_c = bundle.psi.psi(2 * (bundle.a + 1))
    lower = (bundle.omega_eta.values(xs) - psi_c) / (2 * b * om(xs))
    slack = bundle.omega_eta.tau_grid(xs) / (2 * b * om(xs))
    viol = int(np.count_nonzero(W < lower - slack))
    ref = float(W[xs == x_ref][0]) if np.any(xs == x_ref) else float("nan")
    return DivergenceReport(xs.tolist(), W.tolist(), lower.tolist(), viol,
                            float(W[-1] / ref), float(x_ref), float(xs[-1]))
