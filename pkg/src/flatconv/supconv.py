"""Flat sup/inf convolutions of sampled functions and structure checks.

The sup-convolution replaces u(x) by the best penalized competitor
max_y u(y) - theta(|x-y|^2)/(2 eps) over grid nodes y within the
localization radius rho(eps) = sqrt(theta^{-1}(4 sup|u| eps)).  The
maximization is exact brute force over the offset schedule (sorted by
distance, then lexicographic index, strict improvement), so results are
deterministic including tie handling.

The check_* functions verify, at desk scale, the structural estimates
that make these convolutions useful: monotone convergence, one-sided
curvature bounds (plain and gradient-dependent), the maximizer formula,
the gradient lower bound, Lipschitz non-expansion, and exact duality.
Each check returns a CheckReport with the worst node and margin; all
tolerances default to explicit multiples of the grid spacing.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ._brute import brute_max_1d, brute_max_2d
from .flatness import FlatKernel
from .grid import SampledFunction, SimplexMesh, hessian_field

__all__ = [
    "ConvolutionResult", "CheckReport",
    "localization_radius", "sup_convolve", "inf_convolve",
    "modulus_of_continuity",
    "check_duality", "check_convergence", "check_semiconvexity",
    "check_flatness", "check_magic", "check_gradient_bound",
    "check_lipschitz", "run_all_checks",
]


def localization_radius(kernel: FlatKernel, sup_norm: float, eps: float) -> float:
    """rho(eps) = sqrt(theta^{-1}(4 sup|u| eps)); the search need not go further."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    y = 4.0 * float(sup_norm) * float(eps)
    if y == 0.0:
        return 0.0
    lo, hi = kernel.theta.value_range
    if y > hi:
        raise ValueError(
            f"4*sup|u|*eps = {y:.3g} exceeds the penalty table range {hi:.3g}; "
            "rebuild the kernel with a larger span")
    return float(np.sqrt(kernel.theta.invert(y, extrapolate=True)))


def _offset_schedule(spacing, radius: float, shape):
    """Integer offsets with physical length <= radius, sorted by
    (distance^2, lexicographic), starting at the zero offset.

    Offsets are clamped to the grid extent: anything larger lands in the
    -inf padding at every node, so dropping it changes nothing.
    """
    K = [min(int(np.floor(radius / h * (1 + 1e-12))), n - 1)
         for h, n in zip(spacing, shape)]
    axes = [np.arange(-k, k + 1, dtype=np.int64) for k in K]
    grids = np.meshgrid(*axes, indexing="ij")
    dz = np.stack([g.ravel() for g in grids], axis=-1)
    d2 = np.zeros(len(dz))
    for ax, h in enumerate(spacing):
        d2 += (dz[:, ax] * h) ** 2
    keep = d2 <= radius * radius * (1 + 1e-12)
    dz, d2 = dz[keep], d2[keep]
    order = np.lexsort(tuple(dz[:, ax] for ax in reversed(range(dz.shape[1]))) + (d2,))
    return dz[order], d2[order]


def _brute(values: np.ndarray, pens: np.ndarray, dz: np.ndarray):
    """Dispatch the padded brute-force scan for a given offset schedule."""
    pad = [int(np.max(np.abs(dz[:, ax]))) for ax in range(values.ndim)]
    if values.ndim == 1:
        padded = np.full((values.shape[0] + 2 * pad[0],), -np.inf)
        padded[pad[0]: pad[0] + values.shape[0]] = values
        return brute_max_1d(padded, pens, dz[:, 0], pad[0], values.shape[0])
    padded = np.full((values.shape[0] + 2 * pad[0],
                      values.shape[1] + 2 * pad[1]), -np.inf)
    padded[pad[0]: pad[0] + values.shape[0],
           pad[1]: pad[1] + values.shape[1]] = values
    return brute_max_2d(padded, pens, dz[:, 0], dz[:, 1], pad[0], pad[1],
                        values.shape[0], values.shape[1])


@dataclass(frozen=True)
class ConvolutionResult:
    """Sup- or inf-convolution with its per-node maximizer bookkeeping."""

    u_eps: SampledFunction
    argmax_idx: np.ndarray
    eps: float
    kernel: FlatKernel
    loc_radius: float
    search_radius: float
    source: SampledFunction
    ties: np.ndarray
    kind: str = "sup"

    @property
    def values(self) -> np.ndarray:
        return self.u_eps.values

    @property
    def argmax(self) -> np.ndarray:
        """Physical coordinates of the maximizer, shape (*shape, dim)."""
        lo = np.array(self.u_eps.lo)
        h = np.array(self.u_eps.spacing)
        return lo + self.argmax_idx * h

    @property
    def displacement(self) -> np.ndarray:
        """argmax(x) - x per node."""
        return self.argmax - self.u_eps.points()

    def tie_summary(self) -> dict:
        extra = int(np.sum(self.ties > 0))
        return {
            "nodes_with_ties": extra,
            "tie_fraction": extra / self.ties.size,
            "max_extra_maximizers": int(self.ties.max()),
        }


def sup_convolve(u: SampledFunction, kernel: FlatKernel, eps: float) -> ConvolutionResult:
    """Flat sup-convolution of u, exact over the grid within rho(eps)."""
    rho = localization_radius(kernel, u.sup_norm, eps)
    hmax = max(u.spacing)
    radius = rho
    if rho < hmax:
        warnings.warn(
            f"localization radius {rho:.3g} is below one grid cell {hmax:.3g}; "
            "flooring the search radius at one cell", stacklevel=2)
        radius = hmax
    dz, d2 = _offset_schedule(u.spacing, radius, u.shape)
    pens = kernel.theta(d2) / (2.0 * eps)
    best, bestk, ties = _brute(u.values, pens, dz)
    idx_grids = np.meshgrid(*[np.arange(n, dtype=np.int64) for n in u.shape],
                            indexing="ij")
    node_idx = np.stack(idx_grids, axis=-1)
    argmax_idx = node_idx + dz[bestk]
    out = u.with_values(best, transform="sup_convolution", eps=eps)
    return ConvolutionResult(u_eps=out, argmax_idx=argmax_idx, eps=float(eps),
                             kernel=kernel, loc_radius=rho, search_radius=radius,
                             source=u, ties=ties, kind="sup")


def inf_convolve(u: SampledFunction, kernel: FlatKernel, eps: float) -> ConvolutionResult:
    """Flat inf-convolution, defined as the negated sup-convolution of -u."""
    res = sup_convolve(u.with_values(-u.values), kernel, eps)
    out = u.with_values(-res.values, transform="inf_convolution", eps=eps)
    return ConvolutionResult(u_eps=out, argmax_idx=res.argmax_idx, eps=res.eps,
                             kernel=kernel, loc_radius=res.loc_radius,
                             search_radius=res.search_radius, source=u,
                             ties=res.ties, kind="inf")


def modulus_of_continuity(u: SampledFunction, r: float) -> float:
    """Discrete modulus: max |u(x) - u(y)| over node pairs with |x-y| <= r.

    Computed as max over x of (ball max at radius r) - u(x), the ball max
    being a sup-convolution with zero penalty; at r >= diam it collapses
    to the total oscillation.
    """
    if r >= u.diameter:
        return float(np.max(u.values) - np.min(u.values))
    dz, _ = _offset_schedule(u.spacing, r, u.shape)
    pens = np.zeros(len(dz))
    ball_max, _, _ = _brute(u.values, pens, dz)
    return float(np.max(ball_max - u.values))


# ---------------------------------------------------------------------------
# shared check plumbing


@dataclass(frozen=True)
class CheckReport:
    """Outcome of one structural check: worst margin and where it occurred.

    ``worst_margin`` is oriented so that negative-beyond-tolerance means
    failure; ``n_excluded`` counts interior nodes dropped by the
    differentiability or gradient-size filters.
    """

    name: str
    passed: bool
    worst_margin: float
    worst_node: Optional[tuple]
    n_checked: int
    n_excluded: int = 0
    details: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "worst_margin": float(self.worst_margin),
            "worst_node": list(self.worst_node) if self.worst_node is not None else None,
            "n_checked": int(self.n_checked),
            "n_excluded": int(self.n_excluded),
            "details": self.details,
        }


def _centered_gradient(values: np.ndarray, spacing) -> np.ndarray:
    """Centered nodal gradient on the interior, shape (*core, dim)."""
    if values.ndim == 1:
        g = (values[2:] - values[:-2]) / (2 * spacing[0])
        return g[:, None]
    gx = (values[2:, 1:-1] - values[:-2, 1:-1]) / (2 * spacing[0])
    gy = (values[1:-1, 2:] - values[1:-1, :-2]) / (2 * spacing[1])
    return np.stack([gx, gy], axis=-1)


def _directional_second_min(values: np.ndarray, spacing) -> np.ndarray:
    """Smallest second difference along lattice lines through each
    interior node (axes, plus both diagonals in 2d), normalized by the
    squared step length.

    Line restrictions of a semiconvex function are semiconvex with the
    same constant, so these quotients obey the one-sided curvature bounds
    exactly; the mixed entry of the assembled centered Hessian does not
    (it is a difference of two diagonal quotients and loses one-sidedness
    at the gradient kinks along maximizer-switch lines).
    """
    v = values
    if v.ndim == 1:
        return (v[2:] - 2.0 * v[1:-1] + v[:-2]) / spacing[0] ** 2
    hx2, hy2 = spacing[0] ** 2, spacing[1] ** 2
    c = 2.0 * v[1:-1, 1:-1]
    dxx = (v[2:, 1:-1] - c + v[:-2, 1:-1]) / hx2
    dyy = (v[1:-1, 2:] - c + v[1:-1, :-2]) / hy2
    dpp = (v[2:, 2:] - c + v[:-2, :-2]) / (hx2 + hy2)
    dmm = (v[2:, :-2] - c + v[:-2, 2:]) / (hx2 + hy2)
    return np.minimum(np.minimum(dxx, dyy), np.minimum(dpp, dmm))


def _argmax_regular(argmax_idx: np.ndarray, max_jump: int) -> np.ndarray:
    """Interior nodes whose maximizer moves by at most max_jump cells to
    each axis neighbor.

    Where the maximizer teleports, the field has a gradient kink (the
    maximizer is single-valued only a.e.) and the centered gradient
    stencil mixes two competitor branches, so pointwise identities are
    not claimed there.
    """
    a = argmax_idx
    if a.ndim == 2:
        d_lo = np.abs(a[1:-1] - a[:-2]).max(axis=-1)
        d_hi = np.abs(a[2:] - a[1:-1]).max(axis=-1)
        return np.maximum(d_lo, d_hi) <= max_jump
    c = a[1:-1, 1:-1]
    ax0 = np.maximum(np.abs(c - a[:-2, 1:-1]).max(axis=-1),
                     np.abs(a[2:, 1:-1] - c).max(axis=-1))
    ax1 = np.maximum(np.abs(c - a[1:-1, :-2]).max(axis=-1),
                     np.abs(a[1:-1, 2:] - c).max(axis=-1))
    return np.maximum(ax0, ax1) <= max_jump


def _smooth_mask(hf: np.ndarray, hmax: float) -> np.ndarray:
    """Discrete twice-differentiability filter: second differences below 1/h.

    Kink nodes of a semiconvex function show O(1/h) second differences;
    they form a thin set and are excluded from the a.e. estimates.
    """
    flat_entries = np.abs(hf).reshape(hf.shape[:-2] + (-1,))
    return np.max(flat_entries, axis=-1) <= 1.0 / hmax


def _pointwise_mask(res: ConvolutionResult, vals: np.ndarray, hmax: float,
                    max_jump: int):
    """Nodes where the pointwise maximizer identities are claimed:
    differentiability filter, untied maximizer, no maximizer teleport.
    Returns the mask and per-filter exclusion counts."""
    hf = hessian_field(res.u_eps.with_values(vals))
    core = tuple(slice(1, n - 1) for n in res.u_eps.shape)
    smooth = _smooth_mask(hf, hmax)
    untied = res.ties[core] == 0
    regular = _argmax_regular(res.argmax_idx, max_jump)
    counts = {
        "hessian_filter": int(np.sum(~smooth)),
        "tied_maximizer": int(np.sum(smooth & ~untied)),
        "maximizer_jump": int(np.sum(smooth & untied & ~regular)),
    }
    return smooth & untied & regular, counts


def _interior_node(core_idx: tuple) -> tuple:
    return tuple(int(i) + 1 for i in core_idx)


def _worst(margins: np.ndarray, mask: np.ndarray):
    """Smallest margin over masked entries and its full-grid node index."""
    vals = np.where(mask, margins, np.inf)
    flat = int(np.argmin(vals))
    idx = np.unravel_index(flat, margins.shape)
    return float(vals[idx]), _interior_node(idx)


# ---------------------------------------------------------------------------
# the seven checks


def check_duality(u: SampledFunction, kernel: FlatKernel, eps: float) -> CheckReport:
    """inf_convolve(u) must equal -sup_convolve(-u) exactly, node by node."""
    a = inf_convolve(u, kernel, eps).values
    b = -sup_convolve(u.with_values(-u.values), kernel, eps).values
    diff = float(np.max(np.abs(a - b)))
    return CheckReport(name="duality", passed=diff == 0.0, worst_margin=-diff,
                       worst_node=None, n_checked=a.size,
                       details={"max_abs_difference": diff})


def check_convergence(u: SampledFunction, kernel: FlatKernel,
                      eps_sequence: Sequence[float],
                      tol: Optional[float] = None) -> CheckReport:
    """Monotone decrease of u^eps onto u, gap bounded by the modulus of u.

    Verifies u <= u^{eps'} <= u^{eps} nodewise for eps' < eps and
    sup(u^eps - u) <= modulus_of_continuity(u, search radius) + tol.
    The default tolerance is round-off only: both bounds hold exactly on
    the grid.
    """
    if tol is None:
        tol = 1e-12 * (1.0 + u.sup_norm)
    eps_sorted = sorted(float(e) for e in eps_sequence)[::-1]
    results = [sup_convolve(u, kernel, e) for e in eps_sorted]
    worst = np.inf
    entries = []
    prev = None
    ok = True
    for e, res in zip(eps_sorted, results):
        above = float(np.min(res.values - u.values))
        ordered = float(np.min(prev - res.values)) if prev is not None else 0.0
        gap = float(np.max(res.values - u.values))
        bound = modulus_of_continuity(u, res.search_radius) + tol
        ok = ok and (above >= 0.0) and (ordered >= 0.0) and (gap <= bound)
        worst = min(worst, above, ordered, bound - gap)
        entries.append({"eps": e, "loc_radius": res.loc_radius, "gap": gap,
                        "modulus_bound": bound})
        prev = res.values
    return CheckReport(name="convergence", passed=bool(ok), worst_margin=float(worst),
                       worst_node=None, n_checked=len(eps_sorted) * u.values.size,
                       details={"sequence": entries})


def check_semiconvexity(res: ConvolutionResult, tol: Optional[float] = None) -> CheckReport:
    """One-sided curvature: second differences of u^eps along lattice
    lines stay above -T'(diam)/eps at every interior node.

    The estimate is distributional, so it is rendered on line
    restrictions (axes and both diagonals), where it holds exactly for a
    maximum of smooth competitors; no differentiability filter is needed.
    Inf-convolutions are checked for the mirrored upper bound.  Default
    tolerance 10 h.
    """
    u_eps = res.u_eps
    hmax = max(u_eps.spacing)
    if tol is None:
        tol = 10.0 * hmax
    sign = 1.0 if res.kind == "sup" else -1.0
    curv = _directional_second_min(sign * u_eps.values, u_eps.spacing)
    bound = -float(res.kernel.T_prime(res.source.diameter)) / res.eps
    margins = curv - bound
    worst, node = _worst(margins, np.ones(margins.shape, dtype=bool))
    return CheckReport(name="semiconvexity", passed=bool(worst >= -tol),
                       worst_margin=worst, worst_node=node,
                       n_checked=margins.size, n_excluded=0,
                       details={"curvature_bound": bound, "tolerance": tol})


def check_flatness(res: ConvolutionResult, tol: Optional[float] = None) -> CheckReport:
    """Gradient-dependent curvature bound, the payoff of a flat kernel:
    second differences along lattice lines >= -phi(|Du^eps|)/eps wherever
    the nodal gradient exceeds h.

    Only flat kernels admit this estimate; the classical kernel is
    rejected because its profile does not vanish at zero gradient.
    The bound is an a.e. statement, so the report passes when at least
    99% of eligible nodes satisfy it (the remainder sits on the
    maximizer-switch set, where the nodal gradient mixes competitor
    branches); failing nodes are listed with margins.  Default tolerance
    10 h.
    """
    if not res.kernel.flat:
        raise ValueError("flatness estimate needs a flat kernel "
                         "(profile vanishing at 0); got a classical one")
    u_eps = res.u_eps
    hmax = max(u_eps.spacing)
    if tol is None:
        tol = 10.0 * hmax
    sign = 1.0 if res.kind == "sup" else -1.0
    vals = sign * u_eps.values
    curv = _directional_second_min(vals, u_eps.spacing)
    hf = hessian_field(u_eps.with_values(vals))
    grad = _centered_gradient(vals, u_eps.spacing)
    gnorm = np.linalg.norm(grad, axis=-1)
    mask = _smooth_mask(hf, hmax) & (gnorm > hmax)
    bound = np.full_like(gnorm, -np.inf)
    if np.any(mask):
        bound[mask] = -res.kernel.phi(gnorm[mask]) / res.eps
    margins = curv - bound
    worst, node = _worst(margins, mask)
    n = int(mask.sum())
    ok = margins >= -tol
    n_failed = n - int(np.sum(ok & mask))
    fraction = 1.0 if n == 0 else (n - n_failed) / n
    failures = []
    if n_failed:
        bad = np.argwhere(mask & ~ok)
        order = np.argsort(margins[mask & ~ok])
        for row in bad[order][:50]:
            idx = tuple(int(i) for i in row)
            failures.append({"node": list(_interior_node(idx)),
                             "margin": float(margins[idx])})
    return CheckReport(name="flatness", passed=bool(fraction >= 0.99),
                       worst_margin=worst, worst_node=node, n_checked=n,
                       n_excluded=int(mask.size - n),
                       details={"tolerance": tol, "gradient_floor": hmax,
                                "pass_fraction": fraction,
                                "n_failed": n_failed, "failures": failures})


def check_magic(res: ConvolutionResult, tol: Optional[float] = None,
                max_jump: int = 2) -> CheckReport:
    """Maximizer formula: argmax(x) = x + T^{-1}(eps |Du^eps|) * direction.

    Checked at interior nodes that pass the differentiability filter,
    have an untied maximizer, a maximizer moving by at most max_jump
    cells per neighbor step, and a resolved nodal gradient (|Du^eps| > h:
    below one-cell slope the direction carries no information, and the
    inverse of T turns sub-resolution noise into spurious magnitudes for
    very flat kernels).  Tolerance defaults to 2 h (the maximizer is only
    located up to one cell, the gradient to another).
    """
    u_eps = res.u_eps
    hmax = max(u_eps.spacing)
    if tol is None:
        tol = 2.0 * hmax
    sign = 1.0 if res.kind == "sup" else -1.0
    vals = sign * u_eps.values
    mask, filter_counts = _pointwise_mask(res, vals, hmax, max_jump)
    grad = _centered_gradient(vals, u_eps.spacing)
    gnorm = np.linalg.norm(grad, axis=-1)
    resolved = gnorm > hmax
    filter_counts["unresolved_gradient"] = int(np.sum(mask & ~resolved))
    mask = mask & resolved
    mag = np.zeros_like(gnorm)
    nz = gnorm > 0
    if np.any(nz):
        mag[nz] = res.kernel.T.invert(res.eps * gnorm[nz], extrapolate=True)
    direction = grad / np.where(gnorm > 0, gnorm, 1.0)[..., None]
    core = tuple(slice(1, n - 1) for n in u_eps.shape)
    x = u_eps.points()[core]
    # vals is already the sup-convolved field (of -u when kind == "inf"),
    # and argmax_idx always belongs to that maximization, so no sign here
    target = x + mag[..., None] * direction
    err = np.linalg.norm(res.argmax[core] - target, axis=-1)
    margins = tol - err
    worst, node = _worst(margins, mask)
    n = int(mask.sum())
    if n == 0:
        node = None
    return CheckReport(name="magic_displacement", passed=bool(worst >= 0.0),
                       worst_margin=worst, worst_node=node, n_checked=n,
                       n_excluded=int(mask.size - n),
                       details={"tolerance": tol,
                                "max_displacement_error": float(tol - worst),
                                "excluded_by": filter_counts})


def check_gradient_bound(res: ConvolutionResult, tol: Optional[float] = None,
                         max_jump: int = 2) -> CheckReport:
    """Gradient lower bound from the displacement: |Du^eps| >= T(|x - argmax|)/eps.

    Scoped to the same differentiability nodes as the maximizer formula
    (untied, no maximizer teleport).  The maximizer is located only up to
    one grid cell, so T is evaluated at the nearest displacement
    consistent with that localization (one cell diagonal subtracted);
    a tolerance on the output alone cannot absorb the T'(d)/eps
    amplification of the snap for steep profiles.  Default tolerance
    10 h.
    """
    u_eps = res.u_eps
    hmax = max(u_eps.spacing)
    if tol is None:
        tol = 10.0 * hmax
    sign = 1.0 if res.kind == "sup" else -1.0
    vals = sign * u_eps.values
    mask, filter_counts = _pointwise_mask(res, vals, hmax, max_jump)
    grad = _centered_gradient(vals, u_eps.spacing)
    gnorm = np.linalg.norm(grad, axis=-1)
    core = tuple(slice(1, n - 1) for n in u_eps.shape)
    disp = np.linalg.norm(res.displacement[core], axis=-1)
    snap = np.sqrt(u_eps.dim) * hmax
    rhs = res.kernel.T(np.maximum(disp - snap, 0.0)) / res.eps
    margins = gnorm - rhs
    worst, node = _worst(margins, mask)
    n = int(mask.sum())
    if n == 0:
        node = None
    return CheckReport(name="gradient_bound", passed=bool(worst >= -tol),
                       worst_margin=worst, worst_node=node, n_checked=n,
                       n_excluded=int(mask.size - n),
                       details={"tolerance": tol, "argmax_snap": snap,
                                "excluded_by": filter_counts})


def check_lipschitz(res: ConvolutionResult, u: Optional[SampledFunction] = None,
                    inner_margin: int = 0, tol: Optional[float] = None) -> CheckReport:
    """Lipschitz non-expansion: sup |Du^eps| over the rho-shrunk domain
    is at most sup |Du| over the full domain (simplex gradients).

    Default tolerance 10 h.
    """
    if u is None:
        u = res.source
    u_eps = res.u_eps
    hmax = max(u_eps.spacing)
    if tol is None:
        tol = 10.0 * hmax
    mesh = SimplexMesh.for_function(u)
    outer = max(float(np.max(np.linalg.norm(g, axis=-1)))
                for g in mesh.gradients(u.values))
    margins_idx = [int(np.floor(res.loc_radius / h)) + 1 + inner_margin
                   for h in u.spacing]
    cells = tuple(slice(m, n - 1 - m) for m, n in zip(margins_idx, u.shape))
    sizes = [max(0, (n - 1 - m) - m) for m, n in zip(margins_idx, u.shape)]
    if any(s <= 0 for s in sizes):
        return CheckReport(name="lipschitz", passed=True, worst_margin=np.inf,
                           worst_node=None, n_checked=0,
                           details={"note": "shrunk domain empty at this eps",
                                    "outer_sup": outer})
    inner = max(float(np.max(np.linalg.norm(g[cells], axis=-1)))
                for g in mesh.gradients(u_eps.values))
    margin = outer + tol - inner
    return CheckReport(name="lipschitz", passed=bool(margin >= 0.0),
                       worst_margin=float(outer - inner), worst_node=None,
                       n_checked=int(np.prod(sizes)),
                       details={"inner_sup": inner, "outer_sup": outer,
                                "tolerance": tol})


def run_all_checks(u: SampledFunction, kernel: FlatKernel, eps: float,
                   eps_sequence: Optional[Sequence[float]] = None) -> list:
    """Run every applicable check at one eps; returns a list of CheckReport."""
    if eps_sequence is None:
        eps_sequence = [4.0 * eps, 2.0 * eps, eps]
    res = sup_convolve(u, kernel, eps)
    reports = [
        check_duality(u, kernel, eps),
        check_convergence(u, kernel, eps_sequence),
        check_semiconvexity(res),
        check_magic(res),
        check_gradient_bound(res),
        check_lipschitz(res),
    ]
    if kernel.flat:
        reports.append(check_flatness(res))
    return reports
