"""Moduli of continuity: closed-form families, sampled moduli and structural checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .envelope import upper_concave_envelope
from .errors import ConfigError, DegenerateModulus, DomainError, SubadditivityViolation
from .piecewise import GridFunction, PiecewiseAffine, _scalar_or_array

__all__ = [
    "Modulus", "Power", "PowerLog", "LinearOverLog", "Sampled", "GridFunction",
    "modulus_from_dict", "eval_modulus", "is_concave_on_grid", "is_subadditive_sampled",
    "SubadditivityReport", "stechkin_concave_majorant", "ConditionStarReport",
    "condition_star_estimate",
]


class Modulus:
    """Non-decreasing ``ω: [0, ∞) -> [0, ∞)`` with ``ω(0) = 0``.  Callable, vectorised."""

    kind: str = ""
    concave: bool = True
    domain_max: float = math.inf

    def __call__(self, t):
        ta = np.asarray(t, dtype=float)
        if np.any(ta < 0) or np.any(np.isnan(ta)):
            raise DomainError("modulus evaluated at a negative argument")
        return _scalar_or_array(t, self._eval(ta))

    def _eval(self, t: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Power(Modulus):
    alpha: float
    kind = "power"

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise ConfigError(f"power modulus needs alpha in (0, 1], got {self.alpha}")

    def _eval(self, t):
        return t if self.alpha == 1 else np.power(t, self.alpha)

    def to_dict(self):
        return {"kind": self.kind, "alpha": self.alpha}


@dataclass(frozen=True)
class _ChordExtended(Modulus):
    """Closed form ``F(h) + C`` on ``[h0, ∞)``, chord from the origin below ``h0``."""

    C: float | None = None
    h0: float | None = None
    _slope0: float = field(init=False, repr=False, compare=False, default=0.0)

    def _f0(self, h):
        raise NotImplementedError

    def _df0(self, h):
        raise NotImplementedError

    def _concavity_start(self) -> float:
        """Smallest ``log h`` beyond which the closed form is concave and increasing."""
        raise NotImplementedError

    def _setup(self):
        u_star = self._concavity_start()
        h0 = self.h0
        if h0 is None:
            h0 = math.exp(max(u_star, 1.0))
        elif not h0 > 1 or math.log(h0) < u_star - 1e-12:
            raise ConfigError(
                f"h0={h0} lies below the concavity breakpoint exp({u_star:.6g})")
        chord_min_C = h0 * self._df0(h0) - self._f0(h0)
        C = self.C
        if C is None:
            C = max(0.0, chord_min_C)
        elif C < 0 or C < chord_min_C - 1e-12 * max(1.0, abs(chord_min_C)):
            raise ConfigError(
                f"C={C} too small: concave chord extension needs C >= {chord_min_C:.6g}")
        object.__setattr__(self, "h0", float(h0))
        object.__setattr__(self, "C", float(C))
        object.__setattr__(self, "_slope0", (self._f0(h0) + C) / h0)

    def _eval(self, t):
        out = self._slope0 * t
        hi = t > self.h0
        if np.any(hi):
            out = np.where(hi, self._f0(np.where(hi, t, self.h0)) + self.C, out)
        return out


@dataclass(frozen=True)
class PowerLog(_ChordExtended):
    """``h^α log^β(h) + C`` for ``h >= h0``; ``α ∈ [0, 1)``, ``β > 0``."""

    alpha: float = 0.5
    beta: float = 1.0
    kind = "power_log"

    def __post_init__(self):
        if not (0 <= self.alpha < 1 and self.beta > 0):
            raise ConfigError("power_log modulus needs alpha in [0, 1) and beta > 0")
        self._setup()

    def _f0(self, h):
        return np.power(h, self.alpha) * np.power(np.log(h), self.beta)

    def _df0(self, h):
        u = math.log(h)
        return h ** (self.alpha - 1) * (self.alpha * u ** self.beta + self.beta * u ** (self.beta - 1))

    def _concavity_start(self):
        # sign of F'' is the sign of a(a-1)u^2 + b(2a-1)u + b(b-1), u = log h
        a, b = self.alpha, self.beta
        if a == 0:
            return max(b - 1.0, 0.0)
        qa, qb, qc = a * (a - 1), b * (2 * a - 1), b * (b - 1)
        disc = qb * qb - 4 * qa * qc
        if disc < 0:
            return 0.0
        roots = ((-qb + math.sqrt(disc)) / (2 * qa), (-qb - math.sqrt(disc)) / (2 * qa))
        return max(max(roots), 0.0)

    def to_dict(self):
        return {"kind": self.kind, "alpha": self.alpha, "beta": self.beta,
                "C": self.C, "h0": self.h0}


@dataclass(frozen=True)
class LinearOverLog(_ChordExtended):
    """``h / log^β(h) + C`` for ``h >= h0``."""

    beta: float = 1.0
    kind = "linear_over_log"

    def __post_init__(self):
        if not self.beta > 0:
            raise ConfigError("linear_over_log modulus needs beta > 0")
        self._setup()

    def _f0(self, h):
        return h / np.power(np.log(h), self.beta)

    def _df0(self, h):
        u = math.log(h)
        return u ** (-self.beta - 1) * (u - self.beta)

    def _concavity_start(self):
        return self.beta + 1.0

    def to_dict(self):
        return {"kind": self.kind, "beta": self.beta, "C": self.C, "h0": self.h0}


@dataclass(frozen=True)
class Sampled(Modulus):
    grid: GridFunction
    kind = "sampled"

    def __post_init__(self):
        if np.any(np.diff(self.grid.ys) < 0):
            raise ConfigError("sampled modulus must be non-decreasing")
        object.__setattr__(self, "concave", is_concave_on_grid(self.grid))

    @property
    def domain_max(self):
        return self.grid.last

    def _eval(self, t):
        return np.asarray(self.grid(t), dtype=float)

    def to_dict(self):
        return {"kind": self.kind, **self.grid.to_dict()}


def modulus_from_dict(d: dict) -> Modulus:
    kind = d.get("kind")
    try:
        if kind == "power":
            return Power(float(d["alpha"]))
        if kind == "power_log":
            return PowerLog(C=d.get("C"), h0=d.get("h0"),
                            alpha=float(d["alpha"]), beta=float(d["beta"]))
        if kind == "linear_over_log":
            return LinearOverLog(C=d.get("C"), h0=d.get("h0"), beta=float(d["beta"]))
        if kind == "sampled":
            return Sampled(GridFunction(d["xs"], d["ys"]))
    except KeyError as exc:
        raise ConfigError(f"modulus spec {d!r} is missing {exc}") from None
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    raise ConfigError(f"unknown modulus kind {kind!r}")


def eval_modulus(spec: Modulus, t):
    return spec(t)


def is_concave_on_grid(f: GridFunction, tol: float = 1e-9) -> bool:
    """Chord slopes non-increasing up to ``tol`` times the largest slope magnitude."""
    if len(f) < 3:
        return True
    s = f.slopes()
    scale = max(float(np.max(np.abs(s))), 1e-300)
    return bool(np.all(s[1:] <= s[:-1] + tol * scale))


@dataclass(frozen=True)
class SubadditivityReport:
    max_violation: float
    worst_pair: tuple[float, float]
    passed: bool

    def to_dict(self):
        return {"max_violation": self.max_violation, "worst_pair": list(self.worst_pair),
                "passed": self.passed}


def is_subadditive_sampled(omega: Modulus, pairs, tol: float = 1e-9) -> SubadditivityReport:
    """Largest ``ω(x+h) - ω(x) - ω(h)`` over the sampled pairs."""
    pairs = np.asarray(pairs, dtype=float).reshape(-1, 2)
    x, h = pairs[:, 0], pairs[:, 1]
    gap = omega(x + h) - omega(x) - omega(h)
    i = int(np.argmax(gap))
    scale = float(np.max(omega(x + h)))
    return SubadditivityReport(float(gap[i]), (float(x[i]), float(h[i])),
                               bool(gap[i] <= tol * max(scale, 1.0)))


def stechkin_concave_majorant(omega: GridFunction, tol: float = 1e-9) -> PiecewiseAffine:
    """Concave ``φ`` with ``ω <= φ <= 2ω`` at every node of ``omega``.

    ``φ`` is the least concave majorant on the node set.  If it exceeds ``2ω``
    somewhere, the input was not subadditive at grid resolution.
    """
    phi = upper_concave_envelope(omega)
    at_nodes = phi(omega.xs)
    scale = tol * max(float(np.max(omega.ys)), 1e-300)
    if np.any(at_nodes < omega.ys - scale):
        raise AssertionError("hull fell below its input")
    excess = at_nodes - 2.0 * omega.ys
    if np.any(excess > scale):
        i = int(np.argmax(excess))
        raise SubadditivityViolation(
            f"concave majorant exceeds 2*omega at x={omega.xs[i]!r} by {excess[i]:.3g}")
    return phi


@dataclass
class ConditionStarReport:
    per_n: list[tuple[int, float]]
    infimum_estimate: float
    verdict: str
    window: tuple[float, float]
    details: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "window": list(self.window),
            "n": [n for n, _ in self.per_n],
            "liminf_estimate": [v for _, v in self.per_n],
            "infimum_estimate": self.infimum_estimate,
            "verdict": self.verdict,
            "details": self.details,
        }


def condition_star_estimate(
    omega: Modulus,
    n_max: int,
    h_window: tuple[float, float],
    samples: int = 200,
    eps_star: float = 0.05,
    fail_floor: float = 0.5,
    tol: float = 1e-9,
) -> ConditionStarReport:
    """Finite-window estimate of ``inf_n liminf_h ω(h) / (n ω(h/n))``.

    Verdicts: ``Holds`` when the estimate drops below ``eps_star``;
    ``FailsOnWindow`` when every per-n ratio is non-decreasing in ``h`` across
    the window (so the window minimum is a floor for the liminf) and even the
    largest ``n`` keeps the top-of-window ratio above ``fail_floor``;
    otherwise ``Inconclusive``.
    """
    lo, hi = map(float, h_window)
    if not 0 < lo < hi:
        raise ValueError("h_window must satisfy 0 < h_lo < h_hi")
    if n_max < 2:
        raise ValueError("n_max must be at least 2")
    hs = np.geomspace(lo, hi, samples)
    w = omega(hs)
    per_n, tops, monotone = [], [], True
    for n in range(1, n_max + 1):
        denom = n * omega(hs / n)
        if np.any(denom == 0):
            raise DegenerateModulus(f"omega(h/{n}) vanishes inside the window")
        r = w / denom
        per_n.append((n, float(np.min(r))))
        tops.append(float(r[-1]))
        monotone &= bool(np.all(np.diff(r) >= -tol * r[1:]))
    inf_est = min(v for _, v in per_n)
    if inf_est < eps_star:
        verdict = "Holds"
    elif monotone and min(tops) >= fail_floor:
        verdict = "FailsOnWindow"
    else:
        verdict = "Inconclusive"
    return ConditionStarReport(
        per_n, inf_est, verdict, (lo, hi),
        {"eps_star": eps_star, "fail_floor": fail_floor, "non_decreasing_in_h": monotone,
         "min_top_of_window_ratio": min(tops)},
    )
