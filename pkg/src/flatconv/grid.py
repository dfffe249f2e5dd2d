"""Sampled functions on rectangular 1D/2D domains and the P1 energy.

Nodal data lives on a uniform tensor grid over an axis-aligned box.  For
the variational side the box is split into simplices (intervals in 1D,
two triangles per cell in 2D) carrying a constant gradient, so the
discrete energy sum of F(Du) times volume is exactly convex in the nodal
values whenever F is convex.  Pointwise second derivatives use centered
nodal differences instead, which are exact on quadratics.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .hamiltonian import Hamiltonian

__all__ = ["SampledFunction", "SimplexMesh", "gradient", "hessian",
           "hessian_field", "energy"]


@dataclass(frozen=True)
class SampledFunction:
    """Nodal values on a uniform grid over the box [lo, hi].

    values has shape (n,) in 1D or (nx, ny) in 2D with "ij" indexing:
    axis 0 is x, axis 1 is y.
    """

    lo: tuple
    hi: tuple
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        lo = tuple(float(a) for a in np.atleast_1d(self.lo))
        hi = tuple(float(b) for b in np.atleast_1d(self.hi))
        if v.ndim not in (1, 2):
            raise NotImplementedError("only 1D and 2D grids are supported")
        if len(lo) != v.ndim or len(hi) != v.ndim:
            raise ValueError("box endpoints must match the value array rank")
        if any(b <= a for a, b in zip(lo, hi)):
            raise ValueError("box must have positive extent on every axis")
        if any(n < 3 for n in v.shape):
            raise ValueError("need at least 3 nodes per axis")
        if not np.all(np.isfinite(v)):
            raise ValueError("nodal values must be finite")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "values", v)

    # -- geometry -----------------------------------------------------------

    @property
    def dim(self) -> int:
        return self.values.ndim

    @property
    def shape(self) -> tuple:
        return self.values.shape

    @property
    def spacing(self) -> tuple:
        return tuple((b - a) / (n - 1)
                     for a, b, n in zip(self.lo, self.hi, self.shape))

    @property
    def diameter(self) -> float:
        return float(np.hypot.reduce([b - a for a, b in zip(self.lo, self.hi)]))

    @property
    def axes(self) -> list:
        return [np.linspace(a, b, n)
                for a, b, n in zip(self.lo, self.hi, self.shape)]

    def points(self) -> np.ndarray:
        """Node coordinates, shape (*shape, dim)."""
        grids = np.meshgrid(*self.axes, indexing="ij")
        return np.stack(grids, axis=-1)

    def node_x(self, idx) -> np.ndarray:
        idx = np.atleast_1d(np.asarray(idx, dtype=int))
        return np.array([a + i * h for a, i, h in zip(self.lo, idx, self.spacing)])

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def boundary_mask(self) -> np.ndarray:
        m = np.zeros(self.shape, dtype=bool)
        for ax in range(self.dim):
            sl = [slice(None)] * self.dim
            sl[ax] = 0
            m[tuple(sl)] = True
            sl[ax] = -1
            m[tuple(sl)] = True
        return m

    def interior_mask(self, margin: int = 1) -> np.ndarray:
        m = np.zeros(self.shape, dtype=bool)
        core = tuple(slice(margin, n - margin) for n in self.shape)
        m[core] = True
        return m

    def with_values(self, values, **meta) -> "SampledFunction":
        new_meta = dict(self.meta)
        new_meta.update(meta)
        return SampledFunction(self.lo, self.hi, values, new_meta)

    @classmethod
    def from_callable(cls, f: Callable, lo, hi, shape, **meta) -> "SampledFunction":
        lo = tuple(np.atleast_1d(np.asarray(lo, dtype=float)))
        hi = tuple(np.atleast_1d(np.asarray(hi, dtype=float)))
        shape = tuple(np.atleast_1d(np.asarray(shape, dtype=int)))
        axes = [np.linspace(a, b, n) for a, b, n in zip(lo, hi, shape)]
        if len(shape) == 1:
            vals = np.asarray(f(axes[0]), dtype=float)
        else:
            X, Y = np.meshgrid(*axes, indexing="ij")
            vals = np.asarray(f(X, Y), dtype=float)
        return cls(lo, hi, vals, dict(meta))

    # -- serialization --------------------------------------------------------

    def to_csv(self, path) -> None:
        dim = self.dim
        shape = ",".join(str(n) for n in self.shape)
        lo = ",".join(repr(a) for a in self.lo)
        hi = ",".join(repr(b) for b in self.hi)
        header = f"# grid dim={dim} shape={shape} lo={lo} hi={hi}\n"
        cols = ("i,x,value" if dim == 1 else "i,j,x,y,value") + "\n"
        ax = self.axes
        lines = [header, cols]
        if dim == 1:
            for i in range(self.shape[0]):
                lines.append(f"{i},{ax[0][i]!r},{float(self.values[i])!r}\n")
        else:
            for i in range(self.shape[0]):
                xi = ax[0][i]
                for j in range(self.shape[1]):
                    lines.append(
                        f"{i},{j},{xi!r},{ax[1][j]!r},{float(self.values[i, j])!r}\n")
        with open(path, "w") as fh:
            fh.writelines(lines)

    @classmethod
    def from_csv(cls, path) -> "SampledFunction":
        with open(path) as fh:
            header = fh.readline().strip()
            fh.readline()  # column names
            body = fh.read().split()
        if not header.startswith("# grid"):
            raise ValueError("not a grid CSV file")
        fields = dict(part.split("=", 1) for part in header[7:].split(" "))
        dim = int(fields["dim"])
        shape = tuple(int(s) for s in fields["shape"].split(","))
        lo = tuple(float(s) for s in fields["lo"].split(","))
        hi = tuple(float(s) for s in fields["hi"].split(","))
        vals = np.empty(shape, dtype=float)
        for line in body:
            parts = line.split(",")
            if dim == 1:
                vals[int(parts[0])] = float(parts[2])
            else:
                vals[int(parts[0]), int(parts[1])] = float(parts[4])
        return cls(lo, hi, vals)


@dataclass(frozen=True)
class SimplexMesh:
    """Uniform simplex mesh over a grid: intervals in 1D, triangle pairs in 2D.

    Every 2D cell is cut along the same diagonal: "anti" connects the
    (i+1, j) and (i, j+1) corners, "main" connects (i, j) and (i+1, j+1).
    """

    lo: tuple
    hi: tuple
    shape: tuple
    diagonal: str = "anti"

    def __post_init__(self):
        if len(self.shape) not in (1, 2):
            raise NotImplementedError("only 1D and 2D meshes are supported")
        if self.diagonal not in ("anti", "main"):
            raise ValueError(f"unknown diagonal {self.diagonal!r}")
        object.__setattr__(self, "lo", tuple(float(a) for a in self.lo))
        object.__setattr__(self, "hi", tuple(float(b) for b in self.hi))
        object.__setattr__(self, "shape", tuple(int(n) for n in self.shape))

    @classmethod
    def for_function(cls, u: SampledFunction, diagonal: str = "anti") -> "SimplexMesh":
        return cls(u.lo, u.hi, u.shape, diagonal)

    @property
    def dim(self) -> int:
        return len(self.shape)

    @property
    def spacing(self) -> tuple:
        return tuple((b - a) / (n - 1)
                     for a, b, n in zip(self.lo, self.hi, self.shape))

    @property
    def simplex_volume(self) -> float:
        h = self.spacing
        return h[0] if self.dim == 1 else 0.5 * h[0] * h[1]

    @property
    def n_simplices(self) -> int:
        if self.dim == 1:
            return self.shape[0] - 1
        return 2 * (self.shape[0] - 1) * (self.shape[1] - 1)

    @property
    def total_volume(self) -> float:
        return self.n_simplices * self.simplex_volume

    def gradients(self, values: np.ndarray) -> tuple:
        """Constant gradient per simplex, exact for affine nodal data.

        Returns a 1-tuple of an (n-1, 1) array in 1D, or a 2-tuple of
        (nx-1, ny-1, 2) arrays in 2D (one per triangle family).
        """
        v = np.asarray(values, dtype=float)
        h = self.spacing
        if self.dim == 1:
            return ((v[1:] - v[:-1])[:, None] / h[0],)
        A = v[:-1, :-1]
        B = v[1:, :-1]
        C = v[:-1, 1:]
        D = v[1:, 1:]
        if self.diagonal == "anti":
            g1 = np.stack([(B - A) / h[0], (C - A) / h[1]], axis=-1)
            g2 = np.stack([(D - C) / h[0], (D - B) / h[1]], axis=-1)
        else:
            g1 = np.stack([(B - A) / h[0], (D - B) / h[1]], axis=-1)
            g2 = np.stack([(D - C) / h[0], (C - A) / h[1]], axis=-1)
        return (g1, g2)

    def grad_adjoint(self, fluxes: tuple) -> np.ndarray:
        """Adjoint of ``gradients``: sum_s q_s . grad_s(u) = sum_n adj(q)_n u_n."""
        h = self.spacing
        if self.dim == 1:
            q = np.asarray(fluxes[0], dtype=float)[:, 0] / h[0]
            out = np.zeros(self.shape)
            out[:-1] -= q
            out[1:] += q
            return out
        q1, q2 = (np.asarray(f, dtype=float) for f in fluxes)
        ax1, ay1 = q1[..., 0] / h[0], q1[..., 1] / h[1]
        ax2, ay2 = q2[..., 0] / h[0], q2[..., 1] / h[1]
        out = np.zeros(self.shape)
        if self.diagonal == "anti":
            out[:-1, :-1] -= ax1 + ay1
            out[1:, :-1] += ax1
            out[:-1, 1:] += ay1
            out[1:, 1:] += ax2 + ay2
            out[:-1, 1:] -= ax2
            out[1:, :-1] -= ay2
        else:
            out[:-1, :-1] -= ax1
            out[1:, :-1] += ax1 - ay1
            out[1:, 1:] += ay1 + ax2
            out[:-1, 1:] -= ax2 - ay2
            out[:-1, :-1] -= ay2
        return out

    def energy(self, H: Hamiltonian, values: np.ndarray) -> float:
        vol = self.simplex_volume
        return float(sum(np.sum(H.eval(g)) for g in self.gradients(values)) * vol)

    def energy_gradient(self, H: Hamiltonian, values: np.ndarray) -> np.ndarray:
        vol = self.simplex_volume
        fluxes = tuple(vol * H.grad(g) for g in self.gradients(values))
        return self.grad_adjoint(fluxes)


# -- module-level operations -------------------------------------------------


def gradient(u: SampledFunction, diagonal: str = "anti") -> tuple:
    """Per-simplex gradients of the P1 interpolant of u."""
    return SimplexMesh.for_function(u, diagonal).gradients(u.values)


def hessian(u: SampledFunction, node) -> np.ndarray:
    """Centered-difference Hessian at one interior node (exact on quadratics)."""
    idx = tuple(np.atleast_1d(np.asarray(node, dtype=int)))
    if len(idx) != u.dim:
        raise ValueError("node index rank must match the grid")
    for i, n in zip(idx, u.shape):
        if i < 1 or i > n - 2:
            raise ValueError("hessian needs an interior node")
    v = u.values
    h = u.spacing
    if u.dim == 1:
        i = idx[0]
        return np.array([[(v[i + 1] - 2 * v[i] + v[i - 1]) / h[0] ** 2]])
    i, j = idx
    xx = (v[i + 1, j] - 2 * v[i, j] + v[i - 1, j]) / h[0] ** 2
    yy = (v[i, j + 1] - 2 * v[i, j] + v[i, j - 1]) / h[1] ** 2
    xy = (v[i + 1, j + 1] + v[i - 1, j - 1]
          - v[i + 1, j - 1] - v[i - 1, j + 1]) / (4 * h[0] * h[1])
    return np.array([[xx, xy], [xy, yy]])


def hessian_field(u: SampledFunction) -> np.ndarray:
    """Centered-difference Hessians at all interior nodes.

    Shape (n-2, 1, 1) in 1D and (nx-2, ny-2, 2, 2) in 2D, indexed so that
    entry [k] (or [k, l]) belongs to node k+1 (or (k+1, l+1)).
    """
    v = u.values
    h = u.spacing
    if u.dim == 1:
        xx = (v[2:] - 2 * v[1:-1] + v[:-2]) / h[0] ** 2
        return xx[:, None, None]
    c = v[1:-1, 1:-1]
    xx = (v[2:, 1:-1] - 2 * c + v[:-2, 1:-1]) / h[0] ** 2
    yy = (v[1:-1, 2:] - 2 * c + v[1:-1, :-2]) / h[1] ** 2
    xy = (v[2:, 2:] + v[:-2, :-2] - v[2:, :-2] - v[:-2, 2:]) / (4 * h[0] * h[1])
    out = np.empty(xx.shape + (2, 2))
    out[..., 0, 0] = xx
    out[..., 0, 1] = xy
    out[..., 1, 0] = xy
    out[..., 1, 1] = yy
    return out


def energy(u: SampledFunction, H: Hamiltonian, diagonal: str = "anti") -> float:
    """Discrete Dirichlet-type energy: sum of F(Du) times simplex volume."""
    return SimplexMesh.for_function(u, diagonal).energy(H, u.values)
