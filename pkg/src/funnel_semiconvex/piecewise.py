"""Discrete function carriers: node-valued grid functions and piecewise-affine maps.

Both evaluate by linear interpolation between nodes.  ``GridFunction`` is the
carrier for sampled moduli and the dynamic-programming output; it lives on
``[0, xs[-1]]``.  ``PiecewiseAffine`` adds slope queries, exact integration and
optional linear extrapolation past either end.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import RangeError


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


def _scalar_or_array(x, out: np.ndarray):
    return float(np.asarray(out).reshape(())) if np.ndim(x) == 0 else out


@dataclass(frozen=True)
class GridFunction:
    xs: np.ndarray
    ys: np.ndarray

    def __post_init__(self):
        xs, ys = _frozen(self.xs), _frozen(self.ys)
        if xs.ndim != 1 or xs.shape != ys.shape:
            raise ValueError("xs and ys must be 1-D arrays of equal length")
        if len(xs) < 1 or xs[0] != 0.0:
            raise ValueError("xs must start at 0")
        if np.any(np.diff(xs) <= 0):
            raise ValueError("xs must be strictly increasing")
        if ys[0] != 0.0:
            raise ValueError("ys[0] must be 0")
        if np.any(ys < 0) or not np.all(np.isfinite(ys)):
            raise ValueError("ys must be finite and non-negative")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    @classmethod
    def sample(cls, func, xs) -> "GridFunction":
        xs = np.asarray(xs, dtype=float)
        return cls(xs, np.asarray(func(xs), dtype=float))

    @property
    def last(self) -> float:
        return float(self.xs[-1])

    def __len__(self):
        return len(self.xs)

    def __call__(self, t):
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr < 0):
            raise RangeError("grid function evaluated at a negative argument")
        if np.any(t_arr > self.xs[-1] * (1 + 1e-14)):
            raise RangeError(
                f"grid function evaluated beyond its last node {self.xs[-1]!r}")
        return _scalar_or_array(t, np.interp(t_arr, self.xs, self.ys))

    def slopes(self) -> np.ndarray:
        return np.diff(self.ys) / np.diff(self.xs)

    def to_dict(self) -> dict:
        return {"xs": self.xs.tolist(), "ys": self.ys.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "GridFunction":
        return cls(d["xs"], d["ys"])


@dataclass(frozen=True)
class PiecewiseAffine:
    """Continuous piecewise-affine function through ``(breakpoints, values)``.

    With ``extrapolate=False`` evaluation outside ``[first, last]`` raises
    :class:`RangeError`; otherwise the end segments are extended linearly.
    """

    breakpoints: np.ndarray
    values: np.ndarray
    extrapolate: bool = False
    _cumint: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        bp, vals = _frozen(self.breakpoints), _frozen(self.values)
        if bp.ndim != 1 or bp.shape != vals.shape:
            raise ValueError("breakpoints and values must be 1-D of equal length")
        if len(bp) < 2:
            raise ValueError("need at least two breakpoints")
        if np.any(np.diff(bp) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        if not (np.all(np.isfinite(bp)) and np.all(np.isfinite(vals))):
            raise ValueError("breakpoints and values must be finite")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)
        seg = 0.5 * (vals[:-1] + vals[1:]) * np.diff(bp)
        object.__setattr__(self, "_cumint", _frozen(np.concatenate([[0.0], np.cumsum(seg)])))

    @property
    def first(self) -> float:
        return float(self.breakpoints[0])

    @property
    def last(self) -> float:
        return float(self.breakpoints[-1])

    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self.values) / np.diff(self.breakpoints)

    def _check_range(self, x: np.ndarray):
        if self.extrapolate:
            return
        span = self.last - self.first
        slack = 1e-14 * max(abs(self.first), abs(self.last), span)
        if np.any(x < self.first - slack) or np.any(x > self.last + slack):
            raise RangeError(
                f"argument outside [{self.first!r}, {self.last!r}]")

    def _segment(self, x: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(self.breakpoints, x, side="right") - 1
        return np.clip(idx, 0, len(self.breakpoints) - 2)

    def __call__(self, x):
        xa = np.asarray(x, dtype=float)
        self._check_range(xa)
        i = self._segment(xa)
        s = self.slopes[i]
        out = self.values[i] + s * (xa - self.breakpoints[i])
        return _scalar_or_array(x, out)

    def right_slope(self, x):
        """Slope of the segment immediately to the right of ``x``."""
        xa = np.asarray(x, dtype=float)
        if not self.extrapolate:
            if np.any(xa >= self.last) or np.any(xa < self.first):
                raise RangeError("right slope requested at or past the last breakpoint")
        return _scalar_or_array(x, self.slopes[self._segment(xa)])

    def left_slope(self, x):
        xa = np.asarray(x, dtype=float)
        if not self.extrapolate:
            if np.any(xa <= self.first) or np.any(xa > self.last):
                raise RangeError("left slope requested at or before the first breakpoint")
        idx = np.searchsorted(self.breakpoints, xa, side="left") - 1
        idx = np.clip(idx, 0, len(self.breakpoints) - 2)
        return _scalar_or_array(x, self.slopes[idx])

    def antiderivative(self, x):
        """Exact ``∫_{first}^{x}`` of the function (piecewise quadratic)."""
        xa = np.asarray(x, dtype=float)
        self._check_range(xa)
        i = self._segment(xa)
        dx = xa - self.breakpoints[i]
        out = self._cumint[i] + dx * (self.values[i] + 0.5 * self.slopes[i] * dx)
        return _scalar_or_array(x, out)

    def integral(self, lo, hi):
        return self.antiderivative(hi) - self.antiderivative(lo)

    def is_concave(self, tol: float = 0.0) -> bool:
        s = self.slopes
        return bool(np.all(s[1:] <= s[:-1] + tol))

    def to_dict(self) -> dict:
        return {
            "breakpoints": self.breakpoints.tolist(),
            "values": self.values.tolist(),
            "extrapolate": self.extrapolate,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PiecewiseAffine":
        return cls(d["breakpoints"], d["values"], bool(d.get("extrapolate", False)))
