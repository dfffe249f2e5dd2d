"""Convex integrand models F(a) and their derivative structure.

All built-in models are radial, F(a) = f(|a|) for a convex profile f, which
makes gradients, Hessians and Laplacians available in closed form:

    F_A(a)  = f'(r) a/r,            r = |a|
    F_AA(a) = f''(r) e e^T + (f'(r)/r) (I - e e^T),   e = a/r
    tr F_AA = f''(r) + (n-1) f'(r)/r

The singular set K collects the points where F fails to be twice
differentiable; derivative evaluations inside K are rejected.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = ["SingularSet", "Hamiltonian", "RadialEnvelope"]

_GROWTH_PROBE = (1.0e3, 1.0e6)


@dataclass(frozen=True)
class SingularSet:
    """Locus of second-derivative breakdown: nothing, the origin, or a sphere."""

    kind: str = "empty"
    radius: float = 1.0

    def __post_init__(self):
        if self.kind not in ("empty", "origin", "sphere"):
            raise ValueError(f"unknown singular set kind {self.kind!r}")
        if self.kind == "sphere" and self.radius <= 0:
            raise ValueError("sphere radius must be positive")

    def distance(self, a) -> np.ndarray:
        """Euclidean distance from point(s) a to the set (inf when empty)."""
        a = np.asarray(a, dtype=float)
        r = np.linalg.norm(a, axis=-1)
        if self.kind == "empty":
            return np.full_like(r, np.inf)
        if self.kind == "origin":
            return r
        return np.abs(r - self.radius)

    def distance_radial(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if self.kind == "empty":
            return np.full_like(r, np.inf)
        if self.kind == "origin":
            return np.abs(r)
        return np.abs(r - self.radius)

    def to_config(self):
        if self.kind == "sphere":
            return {"type": "sphere", "radius": self.radius}
        return self.kind

    @classmethod
    def from_config(cls, cfg) -> "SingularSet":
        if cfg is None:
            return cls("empty")
        if isinstance(cfg, str):
            return cls(cfg)
        return cls("sphere", float(cfg.get("radius", 1.0)))


@dataclass(frozen=True)
class Hamiltonian:
    """Radial convex integrand F(a) = f(|a|) on R^dim.

    value, dvalue, d2value are the scalar profile f and its first two
    derivatives, each accepting numpy arrays of radii.  d2value is only
    consulted away from the singular set.
    """

    dim: int
    value: Callable
    dvalue: Callable
    d2value: Callable
    singular_set: SingularSet
    name: str = "custom"
    params: dict = field(default_factory=dict)
    # F is C1 on all of R^dim (true for every built-in model with p > 1)
    smooth_gradient: bool = True

    # -- constructors -----------------------------------------------------

    @classmethod
    def p_dirichlet(cls, p: float, dim: int, singular_set: SingularSet | None = None) -> "Hamiltonian":
        """F(a) = |a|^p with p > 1."""
        if p <= 1:
            raise ValueError("p must exceed 1")
        if singular_set is None:
            singular_set = SingularSet("origin")
        return cls(
            dim=dim,
            value=lambda r: np.asarray(r, dtype=float) ** p,
            dvalue=lambda r: p * np.asarray(r, dtype=float) ** (p - 1),
            d2value=lambda r: p * (p - 1) * np.asarray(r, dtype=float) ** (p - 2),
            singular_set=singular_set,
            name="p_dirichlet",
            params={"p": p},
        )

    @classmethod
    def congestion(cls, p: float, dim: int, singular_set: SingularSet | None = None) -> "Hamiltonian":
        """F(a) = max(|a| - 1, 0)^p with p > 1; flat inside the unit ball."""
        if p <= 1:
            raise ValueError("p must exceed 1")
        if singular_set is None:
            singular_set = SingularSet("sphere", 1.0)

        def f(r):
            t = np.maximum(np.asarray(r, dtype=float) - 1.0, 0.0)
            return t ** p

        def df(r):
            t = np.maximum(np.asarray(r, dtype=float) - 1.0, 0.0)
            return p * t ** (p - 1)

        def d2f(r):
            r = np.asarray(r, dtype=float)
            t = np.maximum(r - 1.0, 0.0)
            with np.errstate(divide="ignore", invalid="ignore"):
                out = np.where(r > 1.0, p * (p - 1) * t ** (p - 2), 0.0)
            return out

        return cls(dim=dim, value=f, dvalue=df, d2value=d2f,
                   singular_set=singular_set, name="congestion", params={"p": p})

    @classmethod
    def quadratic(cls, dim: int, singular_set: SingularSet | None = None) -> "Hamiltonian":
        """F(a) = |a|^2, smooth everywhere."""
        if singular_set is None:
            singular_set = SingularSet("empty")
        return cls(
            dim=dim,
            value=lambda r: np.asarray(r, dtype=float) ** 2,
            dvalue=lambda r: 2.0 * np.asarray(r, dtype=float),
            d2value=lambda r: np.full_like(np.asarray(r, dtype=float), 2.0),
            singular_set=singular_set,
            name="quadratic",
            params={},
        )

    @classmethod
    def custom_radial(cls, f, df, d2f, dim: int, singular_set: SingularSet,
                      smooth_gradient: bool = False, name: str = "custom_radial",
                      params: dict | None = None) -> "Hamiltonian":
        return cls(dim=dim, value=f, dvalue=df, d2value=d2f,
                   singular_set=singular_set, name=name, params=params or {},
                   smooth_gradient=smooth_gradient)

    @classmethod
    def from_config(cls, cfg: dict) -> "Hamiltonian":
        model = cfg["model"]
        dim = int(cfg["dim"])
        sing = None
        if "singular_set" in cfg:
            sing = SingularSet.from_config(cfg["singular_set"])
        if model == "p_dirichlet":
            return cls.p_dirichlet(float(cfg["p"]), dim, sing)
        if model == "congestion":
            return cls.congestion(float(cfg["p"]), dim, sing)
        if model == "quadratic":
            return cls.quadratic(dim, sing)
        raise ValueError(f"unknown model {model!r}")

    def to_config(self) -> dict:
        cfg = {"model": self.name, "dim": self.dim,
               "singular_set": self.singular_set.to_config()}
        cfg.update(self.params)
        return cfg

    # -- pointwise operations ---------------------------------------------

    def _radius(self, a) -> tuple[np.ndarray, np.ndarray]:
        a = np.asarray(a, dtype=float)
        if a.shape[-1] != self.dim:
            raise ValueError(f"expected points in R^{self.dim}, got shape {a.shape}")
        return a, np.linalg.norm(a, axis=-1)

    def eval(self, a):
        _, r = self._radius(a)
        out = self.value(r)
        return float(out) if np.ndim(out) == 0 else out

    __call__ = eval

    def grad(self, a) -> np.ndarray:
        a, r = self._radius(a)
        if not self.smooth_gradient and np.any(self.singular_set.distance(a) == 0.0):
            raise ValueError("gradient requested on the non-differentiable set")
        rr = np.where(r > 0, r, 1.0)
        g = (self.dvalue(rr) / rr)[..., None] * a
        return np.where(r[..., None] > 0, g, 0.0)

    def hess(self, a) -> np.ndarray:
        """Second derivative matrix; defined only off the singular set."""
        a, r = self._radius(a)
        if a.ndim != 1:
            raise ValueError("hess takes a single point; use quad_form for batches")
        if self.singular_set.distance(a) <= 0.0:
            raise ValueError("hessian requested on the singular set")
        n = self.dim
        if r == 0.0:
            # radial smooth origin: both curvatures collapse to f''(0+)
            return float(self.d2value(0.0)) * np.eye(n)
        e = a / r
        f2 = float(self.d2value(r))
        f1r = float(self.dvalue(r) / r)
        return f2 * np.outer(e, e) + f1r * (np.eye(n) - np.outer(e, e))

    def laplacian(self, a) -> float:
        """Trace of the second derivative matrix at a single point."""
        a, r = self._radius(a)
        if a.ndim != 1:
            raise ValueError("laplacian takes a single point")
        if self.singular_set.distance(a) <= 0.0:
            raise ValueError("laplacian requested on the singular set")
        if r == 0.0:
            return self.dim * float(self.d2value(0.0))
        return float(self.radial_laplacian(np.asarray(r)))

    def radial_laplacian(self, r) -> np.ndarray:
        """tr F_AA as a function of the radius (vectorized, r > 0)."""
        r = np.asarray(r, dtype=float)
        return self.d2value(r) + (self.dim - 1) * self.dvalue(r) / r

    def quad_form(self, p: np.ndarray, X: np.ndarray) -> np.ndarray:
        """Batched Frobenius pairing F_AA(p) : X for p of shape (N, dim).

        All p must lie strictly off the singular set.
        """
        p = np.asarray(p, dtype=float)
        X = np.asarray(X, dtype=float)
        r = np.linalg.norm(p, axis=-1)
        if np.any(self.singular_set.distance(p) <= 0.0):
            raise ValueError("pairing requested on the singular set")
        e = p / r[..., None]
        eXe = np.einsum("...i,...ij,...j->...", e, X, e)
        trX = np.trace(X, axis1=-2, axis2=-1)
        f2 = self.d2value(r)
        f1r = self.dvalue(r) / r
        return f2 * eXe + f1r * (trX - eXe)

    # -- annulus suprema ---------------------------------------------------

    def laplacian_growth_exponent(self) -> float:
        """Estimated power of tr F_AA at large radii."""
        r1, r2 = _GROWTH_PROBE
        g1 = float(self.radial_laplacian(np.asarray(r1)))
        g2 = float(self.radial_laplacian(np.asarray(r2)))
        if g1 <= 0 and g2 <= 0:
            return 0.0
        g1 = max(g1, 1e-300)
        g2 = max(g2, 1e-300)
        return float(np.log(g2 / g1) / np.log(r2 / r1))

    def laplacian_bounded_at_infinity(self) -> bool:
        return self.laplacian_growth_exponent() <= 1e-3

    def annulus_sup_laplacian(self, t: float, R: float, samples: int = 256) -> float:
        """sup of tr F_AA over the annulus t < |a| < R.

        Exact for monotone radial profiles because the closed endpoints are
        sampled; R may be infinite only when the profile stays bounded.
        """
        if t < 0 or R <= t:
            raise ValueError("need 0 <= t < R")
        if np.isinf(R):
            if not self.laplacian_bounded_at_infinity():
                raise ValueError("tr F_AA unbounded at infinity; pass a finite R")
            R_eff = max(1e6, 1e3 * max(t, 1.0))
        else:
            R_eff = R
        lo = max(t, 1e-300)
        radii = np.geomspace(lo, R_eff, samples)
        vals = self.radial_laplacian(radii)
        return float(np.max(vals))


@dataclass(frozen=True)
class RadialEnvelope:
    """Table of t -> sup of tr F_AA over the annulus t < |a| < R.

    Values are non-increasing in t and dominate the pointwise radial
    Laplacian profile on the sampled range.
    """

    radii: np.ndarray
    sups: np.ndarray
    upper_radius: float

    @classmethod
    def build(cls, H: Hamiltonian, R: float, resolution: int = 256,
              t_min: float = 1e-10) -> "RadialEnvelope":
        if np.isinf(R):
            if not H.laplacian_bounded_at_infinity():
                raise ValueError("tr F_AA unbounded at infinity; pass a finite R")
            R_eff = 1e6
        else:
            R_eff = R
        radii = np.geomspace(t_min, R_eff, resolution)
        point = H.radial_laplacian(radii)
        sups = np.maximum.accumulate(point[::-1])[::-1]
        return cls(radii=radii, sups=sups, upper_radius=R)

    def sup(self, t) -> np.ndarray:
        """Envelope evaluated at inner radius t (vectorized)."""
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.radii, t, side="left")
        idx = np.clip(idx, 0, len(self.radii) - 1)
        out = self.sups[idx]
        return float(out) if out.ndim == 0 else out
