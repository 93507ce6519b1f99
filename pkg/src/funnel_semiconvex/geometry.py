"""Polyhedral recession cones and the reduction of an n-D convex set to a planar funnel.

Pipeline for an open H-polyhedron ``G = {z : Az < c}``:

1. ``recession_cone``: H-form ``{Az <= 0}``, lineality ``null(A)``, extreme rays of
   the pointed part by double description.
2. ``build_projection``: a surjection ``L: R^n -> R^2`` with orthonormal rows
   that sends every recession direction into ``span{(1, 0)}`` and some
   direction onto a positive multiple of ``(1, 0)``.  Built one dimension at
   a time, dropping a kernel direction chosen by the three cases below.
3. ``classify``: Strip when ``-(1, 0)`` is also a recession direction of the
   image, Funnel otherwise.
4. ``extract_funnel``: shear and shift so that the image lies in ``{x > 0}``
   with the positive x-axis inside, then a concave width dominating both
   half-widths.
5. ``pullback``: compose a planar function with the affine map.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .counterexample import CounterexampleBundle, FunctionWithGradient
from .errors import (ConfigError, ExtractionFailed, HypothesisViolation, InternalConsistency,
                     ProjectionInvalid, ReductionNotApplicable, UnsupportedDimension)
from .omega_eta import PiecewiseWidth
from .piecewise import PiecewiseAffine, _frozen

MAX_DIM = 6
_TOL = 1e-9
_LP_OPTS = {"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10}


def _lp(cost, A_ub=None, b_ub=None, A_eq=None, b_eq=None, bounds=None):
    res = linprog(cost, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds,
                  method="highs", options=_LP_OPTS)
    return res


def _orth_rows(M: np.ndarray, tol: float = _TOL) -> np.ndarray:
    """Orthonormal basis (as rows) of the row space of ``M``."""
    M = np.atleast_2d(M)
    if M.size == 0:
        return np.zeros((0, M.shape[1]))
    _, s, Vt = np.linalg.svd(M)
    r = int(np.sum(s > tol * max(1.0, s[0])))
    return Vt[:r]


def _complement_rows(M: np.ndarray, d: int, tol: float = _TOL) -> np.ndarray:
    """Orthonormal basis (as rows) of the orthogonal complement of ``rowspace(M)``."""
    M = np.asarray(M, dtype=float).reshape(-1, d)
    if M.shape[0] == 0:
        return np.eye(d)
    _, s, Vt = np.linalg.svd(M, full_matrices=True)
    r = int(np.sum(s > tol * max(1.0, s[0])))
    return Vt[r:]


def _rank(M: np.ndarray, tol: float = _TOL) -> int:
    M = np.atleast_2d(M)
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    return int(np.sum(s > tol * max(1.0, s[0])))


# ---------------------------------------------------------------- polyhedra

@dataclass(frozen=True)
class HPolyhedron:
    """``{z : Az < c}`` (or ``<=`` when ``open`` is false)."""

    A: np.ndarray
    c: np.ndarray
    open: bool = True

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        c = np.asarray(self.c, dtype=float).ravel()
        if A.shape[0] != c.shape[0]:
            raise ConfigError("A and c disagree in the number of inequalities")
        if A.shape[1] < 2:
            raise ConfigError("polyhedra must live in dimension n >= 2")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(c))):
            raise ConfigError("polyhedron data must be finite")
        object.__setattr__(self, "A", _frozen(A))
        object.__setattr__(self, "c", _frozen(c))

    @property
    def dim(self) -> int:
        return self.A.shape[1]

    def contains(self, Z) -> np.ndarray:
        Z = np.atleast_2d(np.asarray(Z, dtype=float))
        lhs = Z @ self.A.T
        return np.all(lhs < self.c, axis=1) if self.open else np.all(lhs <= self.c, axis=1)

    def interior_point(self, box: float = 1e4) -> tuple[np.ndarray, float]:
        """Centre and radius of a largest ball (radius capped at 1) inside the box."""
        n = self.dim
        norms = np.linalg.norm(self.A, axis=1)
        cost = np.zeros(n + 1)
        cost[-1] = -1.0
        res = _lp(cost, A_ub=np.column_stack([self.A, norms]), b_ub=self.c,
                  bounds=[(-box, box)] * n + [(0.0, 1.0)])
        if res.status != 0 or res.x[-1] <= _TOL:
            raise HypothesisViolation("polyhedron has empty interior")
        return res.x[:n], float(res.x[-1])

    def to_dict(self) -> dict:
        return {"A": self.A.tolist(), "c": self.c.tolist(), "open": self.open}

    @classmethod
    def from_dict(cls, d: dict) -> "HPolyhedron":
        try:
            return cls(d["A"], d["c"], bool(d.get("open", True)))
        except KeyError as exc:
            raise ConfigError(f"polyhedron is missing {exc}") from None


@dataclass(frozen=True)
class PolyCone:
    """``{z : Az <= 0}`` with extreme rays of its pointed part and a lineality basis."""

    A: np.ndarray
    rays: np.ndarray
    lineality: np.ndarray

    @property
    def dim(self) -> int:
        return self.A.shape[1]

    @property
    def generators(self) -> np.ndarray:
        """Rays plus both signs of each lineality vector."""
        return np.vstack([self.rays, self.lineality, -self.lineality])

    @property
    def span_dim(self) -> int:
        return _rank(np.vstack([self.rays, self.lineality]))

    def to_dict(self) -> dict:
        return {"rays": self.rays.tolist(), "lineality": self.lineality.tolist(),
                "span_dim": self.span_dim}


def extreme_rays_dd(A: np.ndarray, tol: float = _TOL) -> np.ndarray:
    """Extreme rays of the pointed cone ``{z : Az <= 0}`` (``rank A = d``), by double description.

    Starts from the simplicial cone of ``d`` independent rows and inserts the
    remaining rows one at a time; two rays are combined only when the
    constraints active at both have rank ``d - 2``.
    """
    A = np.asarray(A, dtype=float)
    m, d = A.shape
    if d == 0:
        return np.zeros((0, 0))
    A = A / np.maximum(np.linalg.norm(A, axis=1), 1e-300)[:, None]
    basis: list[int] = []
    for i in range(m):
        if _rank(A[basis + [i]]) > len(basis):
            basis.append(i)
        if len(basis) == d:
            break
    if len(basis) < d:
        raise ValueError("cone is not pointed")
    rays = (-np.linalg.inv(A[basis])).T
    rays /= np.linalg.norm(rays, axis=1)[:, None]
    done = list(basis)
    for i in range(m):
        if i in basis:
            continue
        a = A[i]
        vals = rays @ a
        pos = np.nonzero(vals > tol)[0]
        neg = np.nonzero(vals < -tol)[0]
        keep = [rays[j] for j in range(len(rays)) if vals[j] <= tol]
        if len(pos) and len(neg):
            act = np.abs(rays @ A[done].T) <= tol
            for p in pos:
                for q in neg:
                    common = act[p] & act[q]
                    if d >= 2 and _rank(A[done][common]) == d - 2:
                        w = vals[p] * rays[q] - vals[q] * rays[p]
                        keep.append(w / np.linalg.norm(w))
        rays = _dedupe(np.array(keep).reshape(-1, d))
        done.append(i)
    return rays


def extreme_rays_bruteforce(A: np.ndarray, tol: float = _TOL) -> np.ndarray:
    """Reference enumeration: null vectors of every rank ``d-1`` row subset."""
    A = np.asarray(A, dtype=float)
    m, d = A.shape
    A = A / np.maximum(np.linalg.norm(A, axis=1), 1e-300)[:, None]
    out = []
    for rows in itertools.combinations(range(m), d - 1):
        sub = A[list(rows)].reshape(-1, d)
        if _rank(sub) != d - 1:
            continue
        null = _complement_rows(sub, d)
        r = null[0]
        for cand in (r, -r):
            if np.all(A @ cand <= tol):
                out.append(cand)
    return _dedupe(np.array(out).reshape(-1, d))


def _dedupe(R: np.ndarray, tol: float = 1e-7) -> np.ndarray:
    out: list[np.ndarray] = []
    for r in R:
        r = r / np.linalg.norm(r)
        if not any(np.linalg.norm(r - s) < tol for s in out):
            out.append(r)
    if not out:
        return np.zeros((0, R.shape[1]))
    out.sort(key=lambda v: tuple(np.round(-v, 9)))
    return np.array(out)


def recession_cone(P: HPolyhedron) -> PolyCone:
    n = P.dim
    if n > MAX_DIM:
        raise UnsupportedDimension(f"ray enumeration supports n <= {MAX_DIM}, got {n}")
    A = P.A / np.maximum(np.linalg.norm(P.A, axis=1), 1e-300)[:, None]
    lin = _complement_rows(A, n)
    U = _complement_rows(lin, n)          # rows span lin^⊥
    if U.shape[0] == 0:
        rays = np.zeros((0, n))
    else:
        rays_local = extreme_rays_dd(A @ U.T)
        rays = rays_local @ U if rays_local.size else np.zeros((0, n))
        rays = _dedupe(rays) if len(rays) else rays
    return PolyCone(_frozen(P.A), _frozen(rays.reshape(-1, n)), _frozen(lin.reshape(-1, n)))


def has_full_cone(P: HPolyhedron, cone: PolyCone | None = None) -> bool:
    cone = cone or recession_cone(P)
    return cone.span_dim == P.dim


# ---------------------------------------------------------------- projection

@dataclass(frozen=True)
class LinearMap:
    matrix: np.ndarray

    def __post_init__(self):
        M = np.atleast_2d(np.asarray(self.matrix, dtype=float))
        if _rank(M) != M.shape[0]:
            raise ProjectionInvalid("linear map is not surjective")
        object.__setattr__(self, "matrix", _frozen(M))

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.matrix, 2))

    def __call__(self, Z):
        return np.asarray(Z, dtype=float) @ self.matrix.T

    def to_dict(self):
        return {"matrix": self.matrix.tolist(), "norm": self.norm}


@dataclass
class ProjectionStep:
    case: str
    dim_in: int
    kernel: list

    def to_dict(self):
        return {"case": self.case, "dim_in": self.dim_in, "kernel": self.kernel}


def _positive_functional(rays: np.ndarray) -> np.ndarray:
    """``ℓ`` with ``ℓ·r >= 1`` on every ray of a pointed cone."""
    d = rays.shape[1]
    res = _lp(np.zeros(d), A_ub=-rays, b_ub=-np.ones(len(rays)), bounds=[(-1e6, 1e6)] * d)
    if res.status != 0:
        raise ReductionNotApplicable("recession cone is not pointed")
    return res.x


def build_projection(cone: PolyCone) -> tuple[LinearMap, list[ProjectionStep]]:
    """Surjection onto ``R^2`` sending ``rec`` into ``span{(1,0)}``, norm 1.

    Each reduction step removes a kernel direction ``u``:
    (a) span of rec has codimension >= 2: ``u`` orthogonal to that span;
    (b) pointed cone of codimension 1: ``u`` in the span of two basis vectors
        and in the kernel of a functional positive on rec, so ``±u ∉ rec``;
    (c) codimension 1 with a lineality space: ``u`` in the lineality space.
    Each factor has orthonormal rows, so the composite does too.
    """
    n = cone.dim
    k0 = cone.span_dim
    if not 1 <= k0 < n:
        raise ReductionNotApplicable(
            f"need 1 <= dim span rec < n, got {k0} with n = {n}")
    R = np.array(cone.rays, dtype=float).reshape(-1, n)
    W = np.array(cone.lineality, dtype=float).reshape(-1, n)
    total = np.eye(n)
    steps: list[ProjectionStep] = []
    d = n
    while d > 2:
        span = _orth_rows(np.vstack([R, W]))
        k, m = span.shape[0], W.shape[0]
        if k < d - 1:
            u = _complement_rows(span, d)[0]
            case = "a"
        elif m == 0:
            ell = _positive_functional(R)
            b1, b2 = span[0], span[1]
            w = (ell @ b2) * b1 - (ell @ b1) * b2
            u = w if np.linalg.norm(w) > _TOL else b1
            case = "b"
        else:
            u = W[0]
            case = "c"
        u = u / np.linalg.norm(u)
        L1 = _complement_rows(u[None, :], d)
        if case != "c":
            img = R @ L1.T
            if np.any(np.linalg.norm(img, axis=1) <= _TOL):
                raise InternalConsistency("kernel meets the pointed part of the cone")
        steps.append(ProjectionStep(case, d, u.tolist()))
        R = R @ L1.T
        R = R[np.linalg.norm(R, axis=1) > _TOL]
        R = R / np.linalg.norm(R, axis=1)[:, None] if len(R) else R.reshape(0, d - 1)
        W = _orth_rows(W @ L1.T) if len(W) else np.zeros((0, d - 1))
        total = L1 @ total
        d -= 1
        k_new = _rank(np.vstack([R, W]))
        if not 1 <= k_new < d:
            raise InternalConsistency(f"projection step {case} left span dimension {k_new}")
    v = R[0] if len(R) else W[0]
    v = v / np.linalg.norm(v)
    base = np.array([[v[0], v[1]], [-v[1], v[0]]])
    steps.append(ProjectionStep("base", 2, v.tolist()))
    return LinearMap(base @ total), steps


@dataclass
class ProjectionReport:
    passed: bool
    checks: dict

    def to_dict(self):
        return {"passed": self.passed, "checks": self.checks}


def image_membership(P: HPolyhedron, L: np.ndarray, targets: np.ndarray, offset=None) -> np.ndarray:
    """Largest inscribed-ball margin of the preimage section ``{z ∈ P : Lz (+offset) = t}``.

    Positive margin means ``t`` lies in the image of the open polyhedron.
    """
    n = P.dim
    norms = np.linalg.norm(P.A, axis=1)
    off = np.zeros(L.shape[0]) if offset is None else np.asarray(offset, dtype=float)
    cost = np.zeros(n + 1)
    cost[-1] = -1.0
    out = []
    for t in np.atleast_2d(targets):
        res = _lp(cost, A_ub=np.column_stack([P.A, norms]), b_ub=P.c,
                  A_eq=np.column_stack([L, np.zeros(L.shape[0])]), b_eq=t - off,
                  bounds=[(None, None)] * n + [(0.0, 1.0)])
        out.append(res.x[-1] if res.status == 0 else -np.inf)
    return np.array(out)


def verify_projection(P: HPolyhedron, cone: PolyCone, L: LinearMap, rng: np.random.Generator,
                      n_points: int = 20, lambdas=(1.0, 10.0, 100.0), raise_on_fail: bool = True,
                      tol: float = 1e-9) -> ProjectionReport:
    """Sampled and exact checks that ``(1,0) ∈ rec L(P) = L(rec P) ⊂ span{(1,0)}``."""
    M = L.matrix
    rays, lin = cone.rays, cone.lineality
    img_r = rays @ M.T
    img_l = lin @ M.T
    in_span = bool(np.all(np.abs(img_r[:, 1]) <= tol) and np.all(np.abs(img_l[:, 1]) <= tol))
    nonneg = bool(np.all(img_r[:, 0] >= -tol))
    positive = bool(np.any(img_r[:, 0] > tol) or np.any(np.abs(img_l[:, 0]) > tol))
    kernel_ok = bool(np.all(np.linalg.norm(img_r, axis=1) > tol))
    Z = sample_polyhedron(P, cone, rng, n_points)
    ray_ok = True
    gens = cone.generators
    scale = tol * np.maximum(1.0, np.abs(P.c))
    for lam in lambdas:
        for r in gens:
            ray_ok &= bool(np.all((Z + lam * r) @ P.A.T < P.c + scale))
    targets = np.array([z @ M.T + lam * np.array([1.0, 0.0]) for z in Z for lam in lambdas])
    margins = image_membership(P, M, targets)
    image_ok = bool(np.all(margins > tol))
    checks = {
        "generators_in_span_e1": in_span,
        "rays_nonnegative_on_e1": nonneg,
        "some_generator_positive": positive,
        "kernel_meets_only_lineality": kernel_ok,
        "ray_membership": ray_ok,
        "image_ray_membership": image_ok,
        "image_samples": int(len(targets)),
        "min_image_margin": float(np.min(margins)),
        "operator_norm": L.norm,
    }
    passed = in_span and nonneg and positive and kernel_ok and ray_ok and image_ok
    rep = ProjectionReport(passed, checks)
    if raise_on_fail and not passed:
        failed = [k for k, v in checks.items() if v is False]
        raise ProjectionInvalid(f"projection checks failed: {failed}")
    return rep


def classify(cone: PolyCone, L: LinearMap, tol: float = 1e-9) -> str:
    """``Strip`` when some recession direction maps to a negative multiple of ``(1,0)``."""
    img = cone.generators @ L.matrix.T
    return "Strip" if np.any(img[:, 0] < -tol) else "Funnel"


# ---------------------------------------------------------------- sampling

def sample_polyhedron(P: HPolyhedron, cone: PolyCone, rng: np.random.Generator, n: int,
                      radius: float = 10.0) -> np.ndarray:
    """Interior points: recession-shifted centre plus a random chord step."""
    z0, _ = P.interior_point()
    gens = cone.generators
    base = np.tile(z0, (n, 1))
    if len(gens):
        base = base + rng.uniform(0.0, radius, (n, len(gens))) @ gens
    return _random_chord_step(P.A, P.c, base, rng, radius)


def _random_chord_step(A, c, base, rng, cap):
    n, d = base.shape
    U = rng.normal(size=(n, d))
    U /= np.linalg.norm(U, axis=1)[:, None]
    slack = c[None, :] - base @ A.T
    rate = U @ A.T
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(rate > 0, slack / rate, np.inf)
    tmax = np.minimum(np.min(t, axis=1), cap)
    return base + (0.999 * rng.uniform(0.0, 1.0, n) * tmax)[:, None] * U


# ---------------------------------------------------------------- funnel extraction

@dataclass
class FunnelExtraction:
    Lt: np.ndarray
    b: np.ndarray
    eta: PiecewiseWidth
    tail_slope: float
    shear: float
    apex: tuple
    details: dict = field(default_factory=dict)

    def to_dict(self):
        return {"L": self.Lt.tolist(), "b": self.b.tolist(), "shear": self.shear,
                "apex": list(self.apex), "eta": self.eta.to_dict(), "tail_slope": self.tail_slope,
                "details": self.details}

    def image(self, Z):
        return np.atleast_2d(Z) @ self.Lt.T + self.b


def _section(P: HPolyhedron, M: np.ndarray, off: np.ndarray, x0: float, sign: float):
    """``sign * max{sign * y : (Mz + off) = (x0, y), Az <= c}`` and its derivative in ``x0``."""
    n = P.dim
    cost = -sign * M[1]
    res = _lp(cost, A_ub=P.A, b_ub=P.c, A_eq=M[:1], b_eq=[x0 - off[0]],
              bounds=[(None, None)] * n)
    if res.status == 3:
        raise ExtractionFailed("half-width is unbounded; the image is not a funnel")
    if res.status != 0:
        raise ExtractionFailed(f"section LP at x={x0!r} failed: {res.message}")
    val = -res.fun + sign * off[1]
    slope = -float(res.eqlin.marginals[0])
    return sign * val, sign * slope


def extract_funnel(P: HPolyhedron, L: LinearMap, n_abscissae: int = 48,
                   x_min: float = 1e-3, flat_tol: float = 1e-12) -> FunnelExtraction:
    """Shift/shear the image into ``{x > 0}`` and build a concave width above it.

    Steps: a centre ``v0`` of a vertical section; the apex ``u_a``, leftmost
    image point on the line ``y = v0``, with a subgradient ``s`` of the left
    boundary there; the shear ``(x, y) -> (x - s y, y)`` makes the supporting
    line vertical.  Upper and lower half-widths are concave in ``x``; LP duals
    give tangent lines at sample abscissae, whose lower envelopes ``H ≥ hi``
    and ``Λ ≥ -lo`` are exact on polyhedral images once abscissae cover every
    edge.  The width is the least concave majorant of ``max(H, Λ)`` including
    its tail, evaluated at all line intersections, so it dominates both
    half-widths everywhere.
    """
    M = L.matrix
    n = P.dim
    z0, _ = P.interior_point()
    u0 = float(M[0] @ z0)
    hi0, _ = _section(P, M, np.zeros(2), u0, +1.0)
    lo0, _ = _section(P, M, np.zeros(2), u0, -1.0)
    v0 = 0.5 * (hi0 + lo0)
    res = _lp(M[0], A_ub=P.A, b_ub=P.c, A_eq=M[1:2], b_eq=[v0], bounds=[(None, None)] * n)
    if res.status == 3:
        raise ReductionNotApplicable("image contains the negative x-direction (strip case)")
    if res.status != 0:
        raise ExtractionFailed(f"apex LP failed: {res.message}")
    u_a = float(res.fun)
    s = float(res.eqlin.marginals[0])
    T = np.array([[1.0, -s], [0.0, 1.0]])
    TM = T @ M
    nrm = float(np.linalg.norm(TM, 2))
    Lt = TM / nrm
    b = -(T @ np.array([u_a, v0])) / nrm + 0.0

    x_max = 1.0
    for _ in range(80):
        xs = np.concatenate([[0.0], np.geomspace(x_min, x_max, n_abscissae)])
        up = [_section(P, Lt, b, x, +1.0) for x in xs]
        dn = [_section(P, Lt, b, x, -1.0) for x in xs]
        tail_hi, tail_lo = up[-1][1], dn[-1][1]
        scale = max(1.0, abs(up[-1][0]), abs(dn[-1][0]))
        if abs(tail_hi) <= flat_tol * scale and abs(tail_lo) <= flat_tol * scale:
            break
        x_max *= 2.0
    else:
        raise ExtractionFailed("half-widths keep growing linearly; no funnel width exists")

    # tangent lines y = v + m (x - x0) for hi and for -lo
    lines_h = [(v, m, x) for x, (v, m) in zip(xs, up)]
    lines_l = [(-v, -m, x) for x, (v, m) in zip(xs, dn)]
    H = _line_env(lines_h)
    Lam = _line_env(lines_l)
    cand = set(xs.tolist())
    allines = lines_h + lines_l
    for (v1, m1, x1), (v2, m2, x2) in itertools.combinations(allines, 2):
        if abs(m1 - m2) > 1e-15:
            xc = ((v2 - m2 * x2) - (v1 - m1 * x1)) / (m1 - m2)
            if xc > 0 and np.isfinite(xc):
                cand.add(float(xc))
    pts = np.array(sorted(cand))
    last = pts[-1]
    pts = np.append(pts, [2 * last + 1.0])
    vals = np.maximum(H(pts), Lam(pts))
    # past every intersection max(H, Λ) is the steeper of the two flattest lines
    tail = max(0.0, min(m for _, m, _ in lines_h), min(m for _, m, _ in lines_l))
    hx, hy = _hull_with_tail(pts, vals, tail)
    hx = np.append(hx, hx[-1] + 1.0)
    hy = np.append(hy, hy[-1] + tail)
    try:
        width = PiecewiseWidth(PiecewiseAffine(hx, hy, extrapolate=True))
    except ConfigError as exc:
        raise ExtractionFailed(f"extracted width is invalid: {exc}") from None
    return FunnelExtraction(Lt, b, width, float(tail), s, (u_a, v0),
                            {"x_max": x_max, "abscissae": int(len(xs)),
                             "section_centre": [u0, v0]})


def _line_env(lines):
    V = np.array([v for v, _, _ in lines])
    Mm = np.array([m for _, m, _ in lines])
    X = np.array([x for _, _, x in lines])

    def env(x):
        x = np.asarray(x, dtype=float)
        return np.min(V[None, :] + Mm[None, :] * (x[:, None] - X[None, :]), axis=1)

    return env


def _hull_with_tail(xs, ys, tail):
    """Least concave majorant of points followed by a ray of slope ``tail``."""
    hull: list[int] = []
    for i in range(len(xs)):
        while len(hull) >= 2:
            j, k = hull[-2], hull[-1]
            if (ys[i] - ys[k]) / (xs[i] - xs[k]) >= (ys[k] - ys[j]) / (xs[k] - xs[j]):
                hull.pop()
            else:
                break
        hull.append(i)
    while len(hull) >= 2:
        j, k = hull[-2], hull[-1]
        if (ys[k] - ys[j]) / (xs[k] - xs[j]) <= tail:
            hull.pop()
        else:
            break
    return xs[hull], ys[hull]


def width_dominates(user_eta, extracted: FunnelExtraction, rtol: float = 0.0) -> bool:
    """Concave ``user_eta >= extracted width`` everywhere on ``[0, ∞)``.

    Checking the breakpoints suffices between them (a concave function above
    both ends of a segment is above the chord); the tail needs the user width
    to keep growing at least as fast as the extracted tail slope.
    """
    pa = extracted.eta.pa
    bp = pa.breakpoints
    ok = bool(np.all(user_eta(bp) >= pa.values * (1 + rtol)))
    if extracted.tail_slope > 0:
        far = bp[-1] * 1e6 + 1e6
        slope = (user_eta(far + 1.0) - user_eta(far))
        ok &= bool(slope >= extracted.tail_slope)
    return ok


@dataclass
class StripData:
    Q: np.ndarray
    b: np.ndarray
    interval: tuple

    def to_dict(self):
        return {"Q": self.Q.tolist(), "b": self.b.tolist(), "interval": list(self.interval)}


def strip_data(P: HPolyhedron, L: LinearMap) -> StripData:
    """``Q`` and ``b'`` with ``Q(L(P)) + b' = R × (0, 1)``."""
    M = L.matrix
    n = P.dim
    lo = _lp(M[1], A_ub=P.A, b_ub=P.c, bounds=[(None, None)] * n)
    hi = _lp(-M[1], A_ub=P.A, b_ub=P.c, bounds=[(None, None)] * n)
    if lo.status != 0 or hi.status != 0:
        raise ExtractionFailed("strip image is not bounded in the transverse direction")
    a, z = float(lo.fun), float(-hi.fun)
    Q = np.diag([1.0, 1.0 / (z - a)])
    return StripData(Q, np.array([0.0, -a / (z - a)]), (a, z))


# ---------------------------------------------------------------- reduction

@dataclass
class Reduction:
    polyhedron: HPolyhedron
    cone: PolyCone
    L: LinearMap
    steps: list
    projection: ProjectionReport
    case: str
    funnel: FunnelExtraction | None = None
    strip: StripData | None = None
    containment: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "case": self.case,
            "recession_cone": self.cone.to_dict(),
            "L": self.L.to_dict(),
            "steps": [s.to_dict() for s in self.steps],
            "projection": self.projection.to_dict(),
            "funnel": self.funnel.to_dict() if self.funnel else None,
            "strip": self.strip.to_dict() if self.strip else None,
            "containment": self.containment,
        }


def check_hypotheses(P: HPolyhedron, cone: PolyCone):
    if cone.span_dim == 0:
        raise HypothesisViolation("Theorem hypothesis violated: G bounded")
    if cone.span_dim == P.dim:
        raise HypothesisViolation("Theorem hypothesis violated: contains full cone")


def reduce(P: HPolyhedron, rng: np.random.Generator, n_points: int = 20,
           containment_samples: int = 2000) -> Reduction:
    cone = recession_cone(P)
    check_hypotheses(P, cone)
    L, steps = build_projection(cone)
    rep = verify_projection(P, cone, L, rng, n_points=n_points)
    case = classify(cone, L)
    red = Reduction(P, cone, L, steps, rep, case)
    if case == "Strip":
        red.strip = strip_data(P, L)
        Z = sample_polyhedron(P, cone, rng, containment_samples)
        Y = Z @ (red.strip.Q @ L.matrix).T + red.strip.b
        red.containment = {"samples": containment_samples,
                           "violations": int(np.count_nonzero((Y[:, 1] <= 0) | (Y[:, 1] >= 1)))}
        return red
    red.funnel = extract_funnel(P, L)
    Z = sample_polyhedron(P, cone, rng, containment_samples)
    Y = red.funnel.image(Z)
    bad = (Y[:, 0] <= 0) | (np.abs(Y[:, 1]) >= red.funnel.eta(np.maximum(Y[:, 0], 0.0)))
    axis = np.column_stack([np.geomspace(1e-3, 1e3, 25), np.zeros(25)])
    axis_margin = image_membership(P, red.funnel.Lt, axis, offset=red.funnel.b)
    red.containment = {
        "samples": containment_samples,
        "violations": int(np.count_nonzero(bad)),
        "axis_samples": int(len(axis)),
        "axis_inside": bool(np.all(axis_margin > 0)),
    }
    if red.containment["violations"] or not red.containment["axis_inside"]:
        raise ExtractionFailed(f"funnel containment failed: {red.containment}")
    return red


# ---------------------------------------------------------------- pull-back

@dataclass(frozen=True)
class PulledBackDomain:
    """``{z ∈ P : 0 < (L̃z + b)_x < x_dom}``."""

    polyhedron: HPolyhedron
    Lt: np.ndarray
    b: np.ndarray
    x_dom: float

    @property
    def dim(self) -> int:
        return self.polyhedron.dim

    def contains(self, Z) -> np.ndarray:
        Z = np.atleast_2d(Z)
        x = Z @ self.Lt[0] + self.b[0]
        return self.polyhedron.contains(Z) & (x > 0) & (x < self.x_dom)


@dataclass
class Pullback:
    function: FunctionWithGradient
    domain: PulledBackDomain
    p1: np.ndarray
    d: np.ndarray
    v_hat: np.ndarray
    bundle: CounterexampleBundle = field(repr=False)

    def point_sampler(self, x_hi_frac: float = 0.999, radius: float = 10.0):
        """Points of the domain: witness-ray base points plus a random chord step."""
        P = self.domain.polyhedron
        A = np.vstack([P.A, self.domain.Lt[0], -self.domain.Lt[0]])
        c = np.concatenate([P.c, [self.domain.x_dom * x_hi_frac - self.domain.b[0],
                                  self.domain.b[0]]])
        x_top = self.domain.x_dom * x_hi_frac

        def sample(rng: np.random.Generator, n: int) -> np.ndarray:
            lam = np.exp(rng.uniform(0.0, np.log(x_top), n)) - 1.0
            base = self.p1[None, :] + lam[:, None] * self.d[None, :]
            return _random_chord_step(A, c, base, rng, radius)

        return sample

    def lifted_divergence(self, probes, x_ref: float = 1e3) -> dict:
        """``|∂_v F(p) - ∂_v F(p1)| / ω(|p - p1|)`` along ``p = p1 + λd``."""
        xs = np.unique(np.append(np.asarray(probes, dtype=float), x_ref))
        xs = xs[(xs > 1) & (xs <= self.bundle.domain_x[1])]
        lam = xs - 1.0
        Z = self.p1[None, :] + lam[:, None] * self.d[None, :]
        G = self.function.grad(Z) @ self.v_hat
        G1 = float(self.function.grad(self.p1[None, :])[0] @ self.v_hat)
        W = np.abs(G - G1) / self.bundle.omega(np.linalg.norm(Z - self.p1, axis=1))
        ref = float(W[xs == x_ref][0]) if np.any(xs == x_ref) else float("nan")
        return {"x": xs.tolist(), "W": W.tolist(), "x_ref": float(x_ref),
                "growth_ratio": float(W[-1] / ref)}


def pullback(bundle: CounterexampleBundle, red: Reduction) -> Pullback:
    """``F(z) = f₀(L̃z + b)`` with ``∇F = L̃ᵀ∇f₀``, plus a witness ray in ``P``."""
    if red.funnel is None:
        raise ReductionNotApplicable("pull-back needs a funnel reduction")
    Lt, b = red.funnel.Lt, red.funnel.b
    f0 = bundle.as_function()
    x_dom = bundle.domain_x[1]
    P = red.polyhedron

    def f(Z):
        return f0.f(np.atleast_2d(Z) @ Lt.T + b)

    def grad(Z):
        return f0.grad(np.atleast_2d(Z) @ Lt.T + b) @ Lt

    n = P.dim
    norms = np.linalg.norm(P.A, axis=1)
    cost = np.zeros(n + 1)
    cost[-1] = -1.0
    res = _lp(cost, A_ub=np.column_stack([P.A, norms]), b_ub=P.c,
              A_eq=np.column_stack([Lt, np.zeros(2)]), b_eq=np.array([1.0, 0.0]) - b,
              bounds=[(None, None)] * n + [(0.0, 1.0)])
    if res.status != 0 or res.x[-1] <= 0:
        raise ExtractionFailed("no interior preimage of (1, 0)")
    p1 = res.x[:n]
    gens = red.cone.generators
    img = gens @ Lt.T
    j = int(np.argmax(img[:, 0]))
    if img[j, 0] <= _TOL:
        raise ExtractionFailed("no recession direction maps onto the positive axis")
    d = gens[j] / img[j, 0]
    v = np.linalg.pinv(Lt) @ np.array([0.0, 1.0])
    v_hat = v / np.linalg.norm(v)
    return Pullback(FunctionWithGradient(f, grad, n), PulledBackDomain(P, Lt, b, x_dom),
                    p1, d, v_hat, bundle)
