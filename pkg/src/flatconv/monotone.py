"""Tabulated monotone scalar maps with exact segment-wise inversion.

Every one-dimensional quantity in the kernel pipeline (continuity moduli,
flatness profiles, penalty kernels and their derivatives) is a table on
geometrically spaced knots.  The default interpolation is piecewise linear
in log-log coordinates, i.e. piecewise power law: pure powers are then
reproduced to round-off at any resolution, and positive monotone tables
invert exactly segment by segment.  A plain linear scale is available for
data that is not sign-definite.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = ["MonotoneMap", "strictly_increasing"]


def _as_array(x):
    a = np.asarray(x, dtype=float)
    return a, (a.ndim == 0)


def strictly_increasing(values: np.ndarray) -> np.ndarray:
    """Nudge a non-decreasing array to strict increase by single ulps.

    Exact float plateaus (from saturated suprema or underflowed tails) are
    lifted one ulp above the running maximum; already strict segments are
    untouched, so the distortion is at the round-off level.
    """
    v = np.asarray(values, dtype=float).copy()
    if np.any(np.diff(v) < 0):
        raise ValueError("input must be non-decreasing")
    for i in range(1, len(v)):
        floor = np.nextafter(v[i - 1], np.inf)
        if v[i] < floor:
            v[i] = floor
    return v


@dataclass(frozen=True)
class MonotoneMap:
    """Piecewise interpolated monotone function on strictly increasing knots.

    Parameters
    ----------
    knots : array
        Strictly increasing abscissae (all positive when ``scale='loglog'``).
    values : array
        Strictly monotone ordinates (all positive for loglog).  A constant
        table is accepted, but such a map cannot be inverted.
    scale : str
        ``'loglog'`` for piecewise power-law interpolation, ``'linear'``
        for ordinary piecewise linear interpolation.
    """

    knots: np.ndarray
    values: np.ndarray
    scale: str = "loglog"
    _xk: np.ndarray = field(init=False, repr=False, compare=False)
    _yk: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        k = np.ascontiguousarray(np.asarray(self.knots, dtype=float))
        v = np.ascontiguousarray(np.asarray(self.values, dtype=float))
        if k.ndim != 1 or v.ndim != 1 or k.size != v.size:
            raise ValueError("knots and values must be 1-d arrays of equal length")
        if k.size < 2:
            raise ValueError("need at least two knots")
        if not np.all(np.isfinite(k)) or not np.all(np.isfinite(v)):
            raise ValueError("knots and values must be finite")
        dk = np.diff(k)
        if not np.all(dk > 0):
            raise ValueError("knots must be strictly increasing")
        dv = np.diff(v)
        if not (np.all(dv > 0) or np.all(dv < 0) or np.all(dv == 0)):
            raise ValueError("values must be strictly monotone or constant")
        if self.scale not in ("loglog", "linear"):
            raise ValueError(f"unknown scale {self.scale!r}")
        if self.scale == "loglog":
            if k[0] <= 0 or np.any(v <= 0):
                raise ValueError("loglog scale requires positive knots and values")
            xk, yk = np.log(k), np.log(v)
        else:
            xk, yk = k, v
        object.__setattr__(self, "knots", k)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "_xk", xk)
        object.__setattr__(self, "_yk", yk)

    # -- basic facts ------------------------------------------------------

    @property
    def direction(self) -> int:
        """+1 increasing, -1 decreasing, 0 constant."""
        d = self.values[-1] - self.values[0]
        return 0 if d == 0 else (1 if d > 0 else -1)

    @property
    def domain(self) -> tuple[float, float]:
        return float(self.knots[0]), float(self.knots[-1])

    @property
    def value_range(self) -> tuple[float, float]:
        lo = min(self.values[0], self.values[-1])
        hi = max(self.values[0], self.values[-1])
        return float(lo), float(hi)

    @classmethod
    def from_callable(cls, f: Callable, lo: float, hi: float, n: int = 512,
                      scale: str = "loglog") -> "MonotoneMap":
        if scale == "loglog":
            knots = np.geomspace(lo, hi, n)
        else:
            knots = np.linspace(lo, hi, n)
        return cls(knots, np.asarray(f(knots), dtype=float), scale=scale)

    # -- evaluation -------------------------------------------------------

    def __call__(self, x, extrapolate: bool = True):
        a, scalar = _as_array(x)
        if self.scale == "loglog":
            if np.any(a < 0):
                raise ValueError("loglog map evaluated at negative argument")
            zero = a == 0.0
            if np.any(zero):
                # limit value at 0+ for an increasing positive table is 0
                if self.direction <= 0:
                    raise ValueError("evaluation at 0 undefined for this map")
                out = np.empty_like(a)
                nz = ~zero
                out[nz] = self(a[nz], extrapolate=extrapolate)
                out[zero] = 0.0
                return float(out) if scalar else out
            xq = np.log(a)
        else:
            xq = a
        if not extrapolate:
            lo, hi = self._xk[0], self._xk[-1]
            tol = 1e-12 * (abs(lo) + abs(hi) + 1.0)
            if np.any(xq < lo - tol) or np.any(xq > hi + tol):
                raise ValueError("argument outside table domain")
        idx = np.clip(np.searchsorted(self._xk, xq, side="right"), 1, len(self._xk) - 1)
        x0 = self._xk[idx - 1]
        s = (self._yk[idx] - self._yk[idx - 1]) / (self._xk[idx] - x0)
        yq = self._yk[idx - 1] + s * (xq - x0)
        out = np.exp(yq) if self.scale == "loglog" else yq
        return float(out) if scalar else out

    def invert(self, y, extrapolate: bool = False):
        """Exact inverse of the interpolant.  Constant maps cannot invert."""
        if self.direction == 0:
            raise ValueError("constant map has no inverse")
        a, scalar = _as_array(y)
        if self.scale == "loglog":
            if np.any(a <= 0):
                raise ValueError("loglog map takes positive values only")
            yq = np.log(a)
        else:
            yq = a
        yk = self._yk if self.direction > 0 else -self._yk
        q = yq if self.direction > 0 else -yq
        if not extrapolate:
            tol = 1e-12 * (abs(yk[0]) + abs(yk[-1]) + 1.0)
            if np.any(q < yk[0] - tol) or np.any(q > yk[-1] + tol):
                raise ValueError("value outside table range")
        idx = np.clip(np.searchsorted(yk, q, side="right"), 1, len(yk) - 1)
        s = (self._yk[idx] - self._yk[idx - 1]) / (self._xk[idx] - self._xk[idx - 1])
        xq = self._xk[idx - 1] + (yq - self._yk[idx - 1]) / s
        out = np.exp(xq) if self.scale == "loglog" else xq
        return float(out) if scalar else out

    def derivative(self, x):
        """Slope of the interpolant at x (segment-wise, extrapolating)."""
        a, scalar = _as_array(x)
        y = self(a)
        if self.scale == "loglog":
            xq = np.log(a)
        else:
            xq = a
        idx = np.clip(np.searchsorted(self._xk, xq, side="right"), 1, len(self._xk) - 1)
        s = (self._yk[idx] - self._yk[idx - 1]) / (self._xk[idx] - self._xk[idx - 1])
        out = y * s / a if self.scale == "loglog" else s + 0.0 * a
        return float(out) if scalar else out

    # -- export -----------------------------------------------------------

    def to_pairs(self) -> list:
        return [[float(k), float(v)] for k, v in zip(self.knots, self.values)]

    @classmethod
    def from_pairs(cls, pairs, scale: str = "loglog") -> "MonotoneMap":
        arr = np.asarray(pairs, dtype=float)
        return cls(arr[:, 0], arr[:, 1], scale=scale)
