"""Partition-infimum modulus ω_η by dynamic programming on an adaptive grid.

For a modulus ω and a concave positive width η,

    ω_η(h) = inf  Σ_j max(1, (x_j - x_{j-1}) / η(x_j)) · ω(x_j - x_{j-1})

over partitions ``0 = x_0 < ... < x_n = h``.  Restricting the partition points
to grid nodes turns this into a shortest-path problem solved in O(N²).  The
grid value is an upper approximation of the infimum.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DegenerateModulus, DomainError, GridTooFine, InternalConsistency, RangeError
from .piecewise import GridFunction, PiecewiseAffine, _frozen, _scalar_or_array
from .reports import VerificationReport, gap_report
from .serialize import csv_text, fmt_float


# ---------------------------------------------------------------- widths

class Width:
    """Concave positive ``η: (0, ∞) -> (0, ∞)``.  Callable, vectorised."""

    kind: str = ""

    def __call__(self, x):
        xa = np.asarray(x, dtype=float)
        if np.any(xa < 0) or np.any(np.isnan(xa)):
            raise DomainError("width evaluated at a negative argument")
        return _scalar_or_array(x, self._eval(xa))

    def _eval(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class ConstantWidth(Width):
    c: float
    kind = "constant"

    def __post_init__(self):
        if not self.c > 0:
            raise ConfigError("constant width must be positive")

    def _eval(self, x):
        return np.full_like(x, self.c)

    def to_dict(self):
        return {"kind": self.kind, "c": self.c}


@dataclass(frozen=True)
class PowerShiftWidth(Width):
    """``η(x) = (s + x)^β``."""

    beta: float
    s: float = 1.0
    kind = "power_shift"

    def __post_init__(self):
        if not (0 < self.beta < 1 and self.s > 0):
            raise ConfigError("power_shift width needs beta in (0, 1) and s > 0")

    def _eval(self, x):
        return np.power(self.s + x, self.beta)

    def to_dict(self):
        return {"kind": self.kind, "beta": self.beta, "s": self.s}


@dataclass(frozen=True)
class AffineWidth(Width):
    slope: float
    intercept: float
    kind = "affine"

    def __post_init__(self):
        if not (self.slope >= 0 and self.intercept > 0):
            raise ConfigError("affine width needs slope >= 0 and intercept > 0")

    def _eval(self, x):
        return self.intercept + self.slope * x

    def to_dict(self):
        return {"kind": self.kind, "slope": self.slope, "intercept": self.intercept}


@dataclass(frozen=True)
class PiecewiseWidth(Width):
    """Concave piecewise-affine width, extended linearly past both ends."""

    pa: PiecewiseAffine
    kind = "piecewise"

    def __post_init__(self):
        pa = self.pa
        if not pa.extrapolate:
            pa = PiecewiseAffine(pa.breakpoints, pa.values, extrapolate=True)
            object.__setattr__(self, "pa", pa)
        s = pa.slopes
        if not np.all(s[1:] <= s[:-1]):
            raise ConfigError("piecewise width must be concave")
        if s[-1] < 0:
            raise ConfigError("piecewise width must be non-decreasing")
        # positive on (0, ∞); a zero value is allowed only at the origin
        at0 = pa(0.0)
        if at0 < 0 or (at0 == 0 and not pa.right_slope(0.0) > 0):
            raise ConfigError("piecewise width must be positive on (0, ∞)")
        if np.any(pa.values[pa.breakpoints > 0] <= 0):
            raise ConfigError("piecewise width must be positive on (0, ∞)")

    def _eval(self, x):
        return np.asarray(self.pa(x), dtype=float)

    def to_dict(self):
        return {"kind": self.kind, "breakpoints": self.pa.breakpoints.tolist(),
                "values": self.pa.values.tolist()}


def width_from_dict(d: dict) -> Width:
    kind = d.get("kind")
    try:
        if kind == "constant":
            return ConstantWidth(float(d["c"]))
        if kind == "power_shift":
            return PowerShiftWidth(float(d["beta"]), float(d.get("s", 1.0)))
        if kind == "affine":
            return AffineWidth(float(d["slope"]), float(d["intercept"]))
        if kind == "piecewise":
            return PiecewiseWidth(PiecewiseAffine(d["breakpoints"], d["values"], True))
    except KeyError as exc:
        raise ConfigError(f"width spec {d!r} is missing {exc}") from None
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    raise ConfigError(f"unknown width kind {kind!r}")


# ---------------------------------------------------------------- grid

@dataclass(frozen=True)
class AdaptiveGrid:
    """Nodes ``0 = x_0 < x_1 < ... = t_max`` with
    ``x_{k+1} - x_k <= min((γ-1) x_k, η(x_{k+1}) / ρ)`` for ``k >= 1``.

    The first step ``x_1 - x_0 = x_1`` only obeys the width bound; no
    geometric bound relative to ``x_1`` can hold for it when ``γ < 2``.
    """

    nodes: np.ndarray
    gamma: float
    rho: float
    t_max: float

    def __post_init__(self):
        object.__setattr__(self, "nodes", _frozen(self.nodes))

    def __len__(self):
        return len(self.nodes)

    def index_of(self, h) -> np.ndarray | int:
        """Index of each ``h`` among the nodes; ``RangeError`` for non-nodes."""
        ha = np.asarray(h, dtype=float)
        idx = np.searchsorted(self.nodes, ha)
        bad = (idx >= len(self.nodes)) | (self.nodes[np.minimum(idx, len(self.nodes) - 1)] != ha)
        if np.any(bad):
            raise RangeError(f"{np.asarray(ha)[bad].ravel()[:3]} is not a grid node")
        return int(idx) if np.ndim(h) == 0 else idx

    def snap_down(self, h) -> np.ndarray:
        i = np.searchsorted(self.nodes, h, side="right") - 1
        return self.nodes[np.clip(i, 0, len(self.nodes) - 1)]

    def snap_up(self, h) -> np.ndarray:
        i = np.searchsorted(self.nodes, h, side="left")
        return self.nodes[np.clip(i, 0, len(self.nodes) - 1)]

    def local_step(self, h) -> np.ndarray:
        """Length of the grid interval containing ``h`` (the last one at ``t_max``)."""
        i = np.searchsorted(self.nodes, h, side="right") - 1
        i = np.clip(i, 0, len(self.nodes) - 2)
        return self.nodes[i + 1] - self.nodes[i]

    def check_invariant(self, eta: Width, rtol: float = 1e-12) -> bool:
        x = self.nodes
        step = np.diff(x)
        growth = (self.gamma - 1) * x[:-1]
        growth[0] = np.inf
        width = eta(x[1:]) / self.rho
        return bool(np.all(step <= np.minimum(growth, width) * (1 + rtol))
                    and x[0] == 0.0 and x[-1] == self.t_max)


def build_grid(
    eta: Width,
    t_max: float,
    gamma: float = 1.05,
    rho: float = 4.0,
    cap: int = 200_000,
    h_min: float = 1e-3,
    include=(),
) -> AdaptiveGrid:
    """Geometric-then-width-limited grid on ``[0, t_max]``.

    ``include`` lists extra points that must be nodes; inserting a node only
    shortens intervals so the spacing invariant survives.
    """
    if not (t_max > 0 and gamma > 1 and rho >= 1 and h_min > 0 and cap >= 2):
        raise ConfigError("grid needs t_max > 0, gamma > 1, rho >= 1, h_min > 0, cap >= 2")
    x1 = min(h_min, t_max)
    while x1 > float(eta(x1)) / rho:
        x1 /= 2.0
    pts = [0.0, x1]
    x = x1
    g1 = gamma - 1.0
    while x < t_max:
        x = x + min(g1 * x, float(eta(x)) / rho)
        pts.append(x)
        if len(pts) > cap:
            raise GridTooFine(f"grid on [0, {t_max}] needs more than {cap} nodes")
    pts[-1] = t_max
    extra = [float(p) for p in include if 0 < float(p) < t_max]
    nodes = np.unique(np.concatenate([pts, extra]))
    if len(nodes) > cap:
        raise GridTooFine(f"grid on [0, {t_max}] needs more than {cap} nodes")
    return AdaptiveGrid(nodes, float(gamma), float(rho), float(t_max))


# ---------------------------------------------------------------- DP

def segment_cost(x_prev, x, eta, omega):
    """``max(1, (x - x_prev) / η(x)) · ω(x - x_prev)``, vectorised."""
    d = np.asarray(x, dtype=float) - np.asarray(x_prev, dtype=float)
    if np.any(d <= 0):
        raise DomainError("segment_cost needs x > x_prev")
    out = np.maximum(1.0, d / eta(x)) * omega(d)
    return _scalar_or_array(d, np.asarray(out, dtype=float))


@dataclass(frozen=True)
class Partition:
    points: np.ndarray

    def __post_init__(self):
        pts = _frozen(self.points)
        if pts[0] != 0.0 or np.any(np.diff(pts) <= 0):
            raise ValueError("partition points must start at 0 and strictly increase")
        object.__setattr__(self, "points", pts)

    @property
    def h(self) -> float:
        return float(self.points[-1])

    def cost(self, eta, omega) -> float:
        return float(np.sum(segment_cost(self.points[:-1], self.points[1:], eta, omega)))

    def to_text(self) -> str:
        return " ".join(fmt_float(p) for p in self.points)


@dataclass(frozen=True)
class OmegaEtaResult:
    grid: AdaptiveGrid
    values: GridFunction
    predecessors: np.ndarray
    lower_bound: GridFunction
    upper_bound: GridFunction
    omega: object = field(repr=False)
    eta: object = field(repr=False)
    upper_approximation: bool = True

    def __call__(self, h):
        return self.values(h)

    def tau_grid(self, h):
        """Discretisation slack at ``h``: twice one grid step's segment cost."""
        ha = np.asarray(h, dtype=float)
        step = self.grid.local_step(ha)
        out = 2.0 * np.maximum(1.0, step / self.eta(ha + step)) * self.omega(step)
        return _scalar_or_array(h, np.asarray(out, dtype=float))

    def ratio(self) -> np.ndarray:
        """``ω(h) / ω_η(h)`` at every positive node (NaN at 0)."""
        v = self.values.ys
        out = np.full_like(v, np.nan)
        out[1:] = self.omega(self.grid.nodes[1:]) / v[1:]
        return out

    def to_csv(self) -> str:
        return csv_text(["h", "omega_eta", "lower", "upper", "ratio"],
                        zip(self.grid.nodes, self.values.ys, self.lower_bound.ys,
                            self.upper_bound.ys, self.ratio()))

    def summary(self) -> dict:
        return {
            "nodes": len(self.grid),
            "t_max": self.grid.t_max,
            "gamma": self.grid.gamma,
            "rho": self.grid.rho,
            "omega_eta_at_t_max": float(self.values.ys[-1]),
            "upper_approximation": self.upper_approximation,
        }


def compute_omega_eta(omega, eta, grid: AdaptiveGrid, sandwich_rtol: float = 1e-9) -> OmegaEtaResult:
    """Shortest path over grid partitions; asserts the analytic sandwich at every node."""
    x = grid.nodes
    n = len(x)
    e = eta(x[1:])
    v = np.zeros(n)
    pred = np.zeros(n, dtype=np.int64)
    pred[0] = -1
    for k in range(1, n):
        d = x[k] - x[:k]
        c = v[:k] + np.maximum(1.0, d / e[k - 1]) * omega(d)
        j = int(np.argmin(c))
        v[k] = c[j]
        pred[k] = j
    h = x[1:]
    lower = np.concatenate([[0.0], h * omega(e) / e])
    upper = np.concatenate([[0.0], np.maximum(1.0, h / e) * omega(h)])
    if np.any(v[1:] <= 0):
        raise DegenerateModulus("omega_eta vanishes at a positive node")
    scale = sandwich_rtol * np.maximum(1.0, np.abs(v))
    bad = (lower - v > scale) | (v - upper > scale)
    if np.any(bad):
        k = int(np.argmax(bad))
        raise InternalConsistency(
            f"sandwich violated at h={x[k]!r}: {lower[k]!r} <= {v[k]!r} <= {upper[k]!r} fails")
    return OmegaEtaResult(
        grid=grid,
        values=GridFunction(x, v),
        predecessors=_frozen(pred).astype(np.int64),
        lower_bound=GridFunction(x, lower),
        upper_bound=GridFunction(x, upper),
        omega=omega,
        eta=eta,
    )


def optimal_partition(result: OmegaEtaResult, h: float) -> Partition:
    k = result.grid.index_of(h)
    if k == 0:
        raise RangeError("no partition of [0, 0]")
    chain = []
    while k > 0:
        chain.append(k)
        k = int(result.predecessors[k])
    chain.append(0)
    return Partition(result.grid.nodes[chain[::-1]])


def partitions_to_text(result: OmegaEtaResult, hs) -> str:
    return "".join(optimal_partition(result, h).to_text() + "\n" for h in hs)


# ---------------------------------------------------------------- checks

@dataclass
class StructuralReport:
    subadditivity: VerificationReport
    le_est: VerificationReport
    le_est2: VerificationReport

    @property
    def passed(self) -> bool:
        return self.subadditivity.passed and self.le_est.passed and self.le_est2.passed

    def to_dict(self) -> dict:
        return {"passed": self.passed, "subadditivity": self.subadditivity.to_dict(),
                "le_est": self.le_est.to_dict(), "le_est2": self.le_est2.to_dict()}


def check_structural_inequalities(result: OmegaEtaResult, omega, eta, sample_pairs) -> StructuralReport:
    """Subadditivity and the two one-step growth estimates on snapped node pairs.

    Each pair ``(x, h)`` becomes ``x' = ⌊x⌋`` and ``s = ⌊x' + h⌋`` (floors to
    nodes) with ``h' = s - x'``.  Subadditivity compares against the value at
    the node just above ``h'``, which dominates ω_η(h') by monotonicity.
    """
    g = result.grid
    pairs = np.asarray(sample_pairs, dtype=float).reshape(-1, 2)
    xp = g.snap_down(pairs[:, 0])
    s = g.snap_down(np.minimum(xp + pairs[:, 1], g.t_max))
    ok = (xp > 0) & (s > xp)
    xp, s = xp[ok], s[ok]
    hp = s - xp
    skipped = int(np.count_nonzero(~ok))
    V = result.values
    tau = result.tau_grid(s)
    lhs = V(s)

    sub = gap_report("subadditivity", lhs - V(xp) - V(g.snap_up(hp)), tau, skipped=skipped)
    est = gap_report("le_est", lhs - V(xp) - np.maximum(1.0, hp / eta(s)) * omega(hp), tau,
                     skipped=skipped)
    ex = eta(xp)
    big = hp >= ex / 2
    est2 = gap_report("le_est2",
                      lhs[big] - V(xp[big]) - 2.0 * hp[big] * omega(ex[big]) / ex[big],
                      tau[big], skipped=skipped + int(np.count_nonzero(~big)))
    return StructuralReport(sub, est, est2)


@dataclass
class LiminfRatioReport:
    hs: list
    ratios: list
    window: tuple
    end_ratio: float
    non_increasing: bool

    def to_dict(self):
        return {"h": self.hs, "ratio": self.ratios, "window": list(self.window),
                "end_ratio": self.end_ratio, "non_increasing": self.non_increasing}


def liminf_ratio_report(omega, result: OmegaEtaResult, window, samples: int = 25) -> LiminfRatioReport:
    """``r(h) = ω(h) / ω_η(h)`` at log-spaced nodes across the window."""
    lo, hi = map(float, window)
    if not 0 < lo < hi <= result.grid.t_max:
        raise ConfigError("window must lie inside (0, t_max]")
    hs = np.unique(result.grid.snap_down(np.geomspace(lo, hi, samples)))
    vals = result.values(hs)
    if np.any(vals <= 0):
        raise DegenerateModulus("omega_eta vanishes inside the window")
    r = omega(hs) / vals
    return LiminfRatioReport(hs.tolist(), r.tolist(), (lo, hi), float(r[-1] / r[0]),
                             bool(np.all(np.diff(r) <= 1e-12 * r[:-1])))
