"""Direct-method minimization of convex gradient energies with Dirichlet data.

The discrete problem is: minimize sum of F(Du) times simplex volume over
nodal functions matching prescribed boundary values.  Convexity of F makes
the problem convex in the nodal values, so a first-order method with a
certificate (small interior energy gradient, random-perturbation optimality
gaps) is enough; no Newton machinery.

The module also carries the surrounding diagnostics: a smooth cutoff of the
integrand near its singular point (used for continuation), weak residuals
against compactly supported test functions, coercivity and interior-norm
ratio checks, and the structure inequalities of the radial models.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .grid import SampledFunction, SimplexMesh
from .hamiltonian import Hamiltonian, SingularSet

__all__ = [
    "DirichletProblem",
    "MinimizeOptions",
    "TestFunction",
    "DELTA_SCHEDULE",
    "mollify",
    "mollification_error",
    "gradient_modulus",
    "mollification_report",
    "transfinite_interpolation",
    "minimize",
    "continuation_minimize",
    "make_bump",
    "weak_residual",
    "basis_residuals",
    "coercivity_check",
    "caccioppoli_diagnostic",
    "minimality_certificate",
    "convexity_gap",
    "monotonicity_constant",
    "monotonicity_gap",
]

# Cutoff radii for the continuation run, largest first, ending at the
# unmodified integrand.
DELTA_SCHEDULE = (0.1, 0.03, 0.01, 0.003, 0.0)


# -- problem data --------------------------------------------------------------


@dataclass(frozen=True)
class DirichletProblem:
    """Energy model plus grid geometry plus boundary values.

    boundary_values has the full grid shape but only its boundary ring is
    ever read.  coercivity, when present, is a pair (s, c) asserting the
    lower bound F(a) >= c|a|^s - 1/c with s strictly above the dimension;
    it gates nothing by itself, callers check it with coercivity_check.
    """

    H: Hamiltonian
    grid: SampledFunction
    boundary_values: np.ndarray
    coercivity: tuple | None = None

    def __post_init__(self):
        b = np.asarray(self.boundary_values, dtype=float)
        if b.shape != self.grid.shape:
            raise ValueError("boundary value array must match the grid shape")
        if self.H.dim != self.grid.dim:
            raise ValueError("integrand dimension must match the grid")
        if not np.all(np.isfinite(b[self.grid.boundary_mask()])):
            raise ValueError("boundary values must be finite on the boundary ring")
        if self.coercivity is not None:
            s, c = (float(v) for v in self.coercivity)
            if s <= self.grid.dim:
                raise ValueError("coercivity exponent must exceed the dimension")
            if c <= 0:
                raise ValueError("coercivity constant must be positive")
            object.__setattr__(self, "coercivity", (s, c))
        object.__setattr__(self, "boundary_values", b)

    @classmethod
    def from_boundary(cls, H: Hamiltonian, lo, hi, shape, data,
                      coercivity=None) -> "DirichletProblem":
        """Build a problem by sampling a callable on the boundary ring."""
        full = SampledFunction.from_callable(data, lo, hi, shape)
        ring = full.boundary_mask()
        b = np.where(ring, full.values, 0.0)
        template = full.with_values(np.zeros_like(b))
        return cls(H, template, b, coercivity)


@dataclass(frozen=True)
class MinimizeOptions:
    """Tuning knobs for the descent loop.

    grad_tol None means 1e-8 * max(1, initial energy) / min spacing, tying
    the optimality residual to the quadrature resolution.  initial, when
    given, replaces the transfinite-interpolation starting guess (its
    boundary ring is overwritten with the problem data either way).
    """

    grad_tol: float | None = None
    max_iters: int = 50_000
    step0: float = 1.0
    shrink: float = 0.5
    grow: float = 1.2
    monotone: bool = True
    record_history: bool = False
    stall_limit: int = 100
    initial: np.ndarray | None = None


@dataclass(frozen=True)
class TestFunction:
    """Compactly supported bump sampled on the grid of the function it tests.

    values vanish outside the open ball of the given radius around the
    center node; the profile (1 - rho^2)^2 has a continuous first
    derivative across the support sphere.
    """

    center: tuple
    radius: float
    values: np.ndarray
    profile: str = "quartic_bump"

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(int(i) for i in np.atleast_1d(self.center)))
        object.__setattr__(self, "radius", float(self.radius))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))

    @property
    def l1_norm(self) -> float:
        return float(np.sum(np.abs(self.values)))


# -- integrand cutoff ----------------------------------------------------------


def _smoothstep(t):
    t = np.clip(t, 0.0, 1.0)
    return ((6.0 * t - 15.0) * t + 10.0) * t ** 3


def _d_smoothstep(t):
    t = np.asarray(t, dtype=float)
    tc = np.clip(t, 0.0, 1.0)
    return np.where((t > 0.0) & (t < 1.0), 30.0 * tc ** 2 * (tc - 1.0) ** 2, 0.0)


def _d2_smoothstep(t):
    t = np.asarray(t, dtype=float)
    tc = np.clip(t, 0.0, 1.0)
    return np.where((t > 0.0) & (t < 1.0),
                    60.0 * tc * (2.0 * tc - 1.0) * (tc - 1.0), 0.0)


def mollify(H: Hamiltonian, delta: float) -> Hamiltonian:
    """Cut the integrand off near its singular point at the origin.

    Returns the product of F with a radial quintic-smoothstep cutoff that
    vanishes (with two derivatives) below radius delta/2 and equals one
    (with two derivatives) from radius delta on.  The result is twice
    differentiable everywhere, identically zero on the inner ball, and
    identical to F outside the delta-ball, so it has an empty singular set.
    """
    delta = float(delta)
    if not 0.0 < delta < 1.0:
        raise ValueError("cutoff radius must lie in (0, 1)")
    if H.singular_set.kind != "origin":
        raise ValueError("cutoff requires the singular set {0}")
    half = 0.5 * delta
    f, df, d2f = H.value, H.dvalue, H.d2value

    def tau(r):
        return (r - half) / half

    def f_cut(r):
        r = np.asarray(r, dtype=float)
        mask = r > half
        rr = np.where(mask, r, 1.0)
        out = np.where(mask, _smoothstep(tau(rr)) * f(rr), 0.0)
        return out

    def df_cut(r):
        r = np.asarray(r, dtype=float)
        mask = r > half
        rr = np.where(mask, r, 1.0)
        t = tau(rr)
        out = (_d_smoothstep(t) / half) * f(rr) + _smoothstep(t) * df(rr)
        return np.where(mask, out, 0.0)

    def d2f_cut(r):
        r = np.asarray(r, dtype=float)
        mask = r > half
        rr = np.where(mask, r, 1.0)
        t = tau(rr)
        out = ((_d2_smoothstep(t) / half ** 2) * f(rr)
               + 2.0 * (_d_smoothstep(t) / half) * df(rr)
               + _smoothstep(t) * d2f(rr))
        return np.where(mask, out, 0.0)

    params = dict(H.params)
    params["delta"] = delta
    return Hamiltonian(
        dim=H.dim,
        value=f_cut,
        dvalue=df_cut,
        d2value=d2f_cut,
        singular_set=SingularSet("empty"),
        name=H.name + "_cutoff",
        params=params,
    )


def gradient_modulus(H: Hamiltonian, t: float, samples: int = 1025) -> float:
    """sup of |F_A| over the ball of radius t (radial profile maximum)."""
    radii = np.linspace(0.0, float(t), samples)
    return float(np.max(np.abs(H.dvalue(radii))))


def mollification_error(H: Hamiltonian, delta: float, samples: int = 4097) -> float:
    """sup over sample radii of |F_A - F_A after the delta-cutoff|.

    The difference is radial and supported on the delta-ball, so sampling
    [0, 2 delta] densely captures the supremum.
    """
    Hd = mollify(H, delta)
    radii = np.linspace(0.0, 2.0 * float(delta), samples)
    return float(np.max(np.abs(H.dvalue(radii) - Hd.dvalue(radii))))


def mollification_report(H: Hamiltonian, deltas=(0.1, 0.05, 0.025)) -> dict:
    """Cutoff gradient errors across halving radii and their decay ratios.

    The errors should shrink like the gradient modulus: each measured
    ratio error(d)/error(d/2) is compared against modulus(d)/modulus(d/2).
    """
    deltas = [float(d) for d in deltas]
    errors = [mollification_error(H, d) for d in deltas]
    moduli = [gradient_modulus(H, d) for d in deltas]
    err_ratios = [errors[i] / errors[i + 1] for i in range(len(deltas) - 1)]
    mod_ratios = [moduli[i] / moduli[i + 1] for i in range(len(deltas) - 1)]
    return {
        "deltas": deltas,
        "errors": errors,
        "moduli": moduli,
        "error_ratios": err_ratios,
        "modulus_ratios": mod_ratios,
    }


# -- starting guess ------------------------------------------------------------


def transfinite_interpolation(grid: SampledFunction, boundary_values) -> np.ndarray:
    """Blend boundary data into the interior.

    1D: the chord between the endpoint values.  2D: edge interpolation in
    both directions minus the bilinear corner correction, which matches
    the given data on the whole ring exactly.
    """
    b = np.asarray(boundary_values, dtype=float)
    if b.shape != grid.shape:
        raise ValueError("boundary value array must match the grid shape")
    if grid.dim == 1:
        return np.linspace(b[0], b[-1], grid.shape[0])
    nx, ny = grid.shape
    xi = np.linspace(0.0, 1.0, nx)[:, None]
    eta = np.linspace(0.0, 1.0, ny)[None, :]
    west, east = b[0, :][None, :], b[-1, :][None, :]
    south, north = b[:, 0][:, None], b[:, -1][:, None]
    corners = ((1 - xi) * (1 - eta) * b[0, 0] + xi * (1 - eta) * b[-1, 0]
               + (1 - xi) * eta * b[0, -1] + xi * eta * b[-1, -1])
    return (1 - xi) * west + xi * east + (1 - eta) * south + eta * north - corners


# -- the descent loop ----------------------------------------------------------


def _energy_noise(e: float) -> float:
    """Absolute float resolution of energy comparisons near the value e."""
    return 64.0 * np.finfo(float).eps * (1.0 + abs(e))


def _backtrack(E, base, e_base, g, g2, step, shrink, step_floor):
    """Shrink the step until the quadratic upper bound accepts the move.

    When the predicted decrease falls below the float resolution of the
    energy the sufficient-decrease test is unverifiable; the step is then
    accepted as long as the energy does not measurably increase, so the
    gradient can keep shrinking past the point where energy comparisons
    saturate.
    """
    noise = _energy_noise(e_base)
    s = step
    while True:
        z = base - s * g
        e_z = E(z)
        predicted = 0.5 * s * g2
        target = e_base + noise - (predicted if predicted > noise else 0.0)
        if e_z <= target or s <= step_floor:
            return s, z, e_z
        s *= shrink


def minimize(prob: DirichletProblem, opts: MinimizeOptions | None = None) -> SampledFunction:
    """Minimize the discrete energy over functions with the given boundary.

    Accelerated descent with backtracking and a monotone restart: the
    extrapolated step is kept only when it does not raise the energy,
    otherwise the iteration falls back to plain descent from the current
    best point and the momentum restarts.  Returns the final iterate with
    convergence metadata; on a blown iteration budget the best iterate
    comes back flagged converged=False rather than raising.
    """
    opts = opts or MinimizeOptions()
    grid = prob.grid
    mesh = SimplexMesh.for_function(grid)
    bmask = grid.boundary_mask()
    b = prob.boundary_values
    H = prob.H

    if opts.initial is not None:
        u = np.array(opts.initial, dtype=float)
        if u.shape != grid.shape:
            raise ValueError("initial guess must match the grid shape")
    else:
        u = transfinite_interpolation(grid, b)
    u[bmask] = b[bmask]

    def energy(v):
        return mesh.energy(H, v)

    def grad(v):
        g = mesh.energy_gradient(H, v)
        g[bmask] = 0.0
        return g

    e0 = energy(u)
    hmin = min(grid.spacing)
    gtol = opts.grad_tol if opts.grad_tol is not None else 1e-8 * max(1.0, abs(e0)) / hmin

    if not H.smooth_gradient:
        return _subgradient_minimize(prob, opts, mesh, u, bmask, e0, gtol)

    history = [] if opts.record_history else None
    step_floor = 1e-14 * opts.step0
    e_u = e0
    g_u = grad(u)
    gmax = float(np.max(np.abs(g_u)))
    u_best, e_best = u.copy(), e_u
    y = u.copy()
    t = 1.0
    step = opts.step0
    it = 0
    stall = 0
    converged = gmax <= gtol
    while not converged and it < opts.max_iters:
        it += 1
        g_y = grad(y)
        e_y = energy(y)
        gy2 = float(np.vdot(g_y, g_y))
        s, z, e_z = _backtrack(energy, y, e_y, g_y, gy2, step, opts.shrink, step_floor)
        if opts.monotone and e_z > e_u + _energy_noise(e_u):
            g_u = grad(u)
            gu2 = float(np.vdot(g_u, g_u))
            s, z, e_z = _backtrack(energy, u, e_u, g_u, gu2, step, opts.shrink, step_floor)
            t = 1.0
        if opts.monotone and e_z > e_u + _energy_noise(e_u):
            # neither direction improved at any admissible step: no move
            z, e_z = u, e_u
            stall += 1
        else:
            stall = 0
        step = s * opts.grow
        u_prev, u = u, z
        e_u = e_z
        if e_u < e_best:
            u_best, e_best = u, e_u
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        y = u + ((t - 1.0) / t_next) * (u - u_prev)
        t = t_next
        g_u = grad(u)
        gmax = float(np.max(np.abs(g_u)))
        if history is not None:
            history.append([it, e_u, gmax, s])
        if gmax <= gtol:
            converged = True
        elif stall >= opts.stall_limit:
            break

    if not converged and e_best < e_u:
        u, e_u = u_best, e_best
        gmax = float(np.max(np.abs(grad(u))))

    meta = {
        "method": "accelerated_descent",
        "converged": bool(converged),
        "iterations": int(it),
        "energy": float(e_u),
        "energy_initial": float(e0),
        "grad_max": float(gmax),
        "grad_tol": float(gtol),
    }
    if history is not None:
        meta["history"] = history
    return grid.with_values(u, **meta)


def _subgradient_minimize(prob, opts, mesh, u, bmask, e0, gtol) -> SampledFunction:
    """Diminishing-step fallback for integrands without a continuous gradient.

    Simplex gradients that land exactly on the non-differentiable set get a
    tiny radial nudge, which picks one element of the subdifferential; the
    iteration keeps the best energy seen.
    """
    H = prob.H
    vol = mesh.simplex_volume

    def subgrad(v):
        fluxes = []
        for g in mesh.gradients(v):
            d = H.singular_set.distance(g)
            if np.any(d == 0.0):
                g = g.copy()
                bad = d == 0.0
                g[bad] *= 1.0 + 1e-12
                g[bad, ..., 0] += 1e-12
            fluxes.append(vol * H.grad(g))
        out = mesh.grad_adjoint(tuple(fluxes))
        out[bmask] = 0.0
        return out

    history = [] if opts.record_history else None
    best = u.copy()
    e_best = e0
    g = subgrad(u)
    gmax = float(np.max(np.abs(g)))
    s0 = opts.step0 * max(1.0, float(np.max(np.abs(u)))) / max(gmax, 1e-30)
    converged = gmax <= gtol
    it = 0
    while not converged and it < opts.max_iters:
        it += 1
        u = u - (s0 / np.sqrt(it)) * g
        e = mesh.energy(H, u)
        if e < e_best:
            e_best = e
            best = u.copy()
        g = subgrad(u)
        gmax = float(np.max(np.abs(g)))
        if history is not None:
            history.append([it, e_best, gmax, s0 / np.sqrt(it)])
        converged = gmax <= gtol

    meta = {
        "method": "subgradient",
        "converged": bool(converged),
        "iterations": int(it),
        "energy": float(e_best),
        "energy_initial": float(e0),
        "grad_max": float(gmax),
        "grad_tol": float(gtol),
    }
    if history is not None:
        meta["history"] = history
    return prob.grid.with_values(best, **meta)


def continuation_minimize(prob: DirichletProblem, delta_schedule=DELTA_SCHEDULE,
                          opts: MinimizeOptions | None = None) -> SampledFunction:
    """Minimize through a schedule of integrand cutoffs, warm-starting each.

    Stages with a positive cutoff radius run on the smoothed integrand
    (when the singular set is the origin; otherwise the integrand is used
    as-is), the final radius 0 runs on the true integrand.  Each stage can
    only decrease its own objective from the warm start; both the stage
    objective and the true energy are logged per stage.
    """
    opts = opts or MinimizeOptions()
    mesh = SimplexMesh.for_function(prob.grid)
    warm = opts.initial
    stages = []
    result = None
    for delta in delta_schedule:
        delta = float(delta)
        if delta > 0.0 and prob.H.singular_set.kind == "origin":
            H_stage = mollify(prob.H, delta)
        else:
            H_stage = prob.H
        stage_prob = dataclasses.replace(prob, H=H_stage)
        stage_opts = dataclasses.replace(opts, initial=warm)
        result = minimize(stage_prob, stage_opts)
        warm = result.values
        entry = {
            "delta": delta,
            "energy_initial": result.meta["energy_initial"],
            "energy": result.meta["energy"],
            "true_energy": float(mesh.energy(prob.H, result.values)),
            "iterations": result.meta["iterations"],
            "converged": result.meta["converged"],
        }
        if opts.record_history:
            entry["history"] = result.meta.get("history", [])
        stages.append(entry)
    meta = dict(result.meta)
    meta["stages"] = stages
    return prob.grid.with_values(result.values, **meta)


# -- weak residuals ------------------------------------------------------------


def _check_support_inside(grid: SampledFunction, center, radius: float) -> None:
    x_c = grid.node_x(center)
    for ax in range(grid.dim):
        if not (x_c[ax] - radius > grid.lo[ax] and x_c[ax] + radius < grid.hi[ax]):
            raise ValueError("test function support touches the boundary")


def make_bump(template: SampledFunction, center, radius: float) -> TestFunction:
    """Quartic bump (1 - |x - x_c|^2 / r^2)^2 supported strictly inside."""
    radius = float(radius)
    if radius <= 0:
        raise ValueError("support radius must be positive")
    center = tuple(int(i) for i in np.atleast_1d(center))
    _check_support_inside(template, center, radius)
    x_c = template.node_x(center)
    pts = template.points()
    rho2 = np.sum(((pts - x_c) / radius) ** 2, axis=-1)
    vals = np.maximum(0.0, 1.0 - rho2) ** 2
    return TestFunction(center=center, radius=radius, values=vals)


def weak_residual(u: SampledFunction, H: Hamiltonian, phi: TestFunction) -> float:
    """Sum over simplices of F_A(Du) . D(phi) times volume.

    Computed through the nodal pairing of the assembled energy gradient
    with the bump samples, which equals the simplex sum exactly because
    the gradient assembly is the adjoint of the per-simplex gradient and
    the bump vanishes on the boundary ring.
    """
    if phi.values.shape != u.shape:
        raise ValueError("test function must be sampled on the same grid")
    _check_support_inside(u, phi.center, phi.radius)
    mesh = SimplexMesh.for_function(u)
    return float(np.vdot(mesh.energy_gradient(H, u.values), phi.values))


def basis_residuals(u: SampledFunction, H: Hamiltonian,
                    radii_cells=(4, 8, 16), grad_tol: float | None = None) -> dict:
    """Weak residuals of bumps at every eligible interior node, per radius.

    Each residual is compared against the first-order bound
    grad_tol * (l1 norm of the bump); grad_tol defaults to the value the
    minimizer stored in its metadata.
    """
    if grad_tol is None:
        grad_tol = u.meta.get("grad_tol")
        if grad_tol is None:
            raise ValueError("grad_tol not given and missing from the metadata")
    grad_tol = float(grad_tol)
    mesh = SimplexMesh.for_function(u)
    g = mesh.energy_gradient(H, u.values)
    g[u.boundary_mask()] = 0.0
    spacing = u.spacing
    hmax = max(spacing)
    out = {"radii": [], "n_centers": [], "max_residual": [], "bound": [],
           "grad_tol": grad_tol}
    for cells in radii_cells:
        K = int(cells)
        radius = K * hmax
        if any(n < 2 * K + 3 for n in u.shape):
            raise ValueError("grid too small for the requested support radius")
        # stencil of bump weights over the index ball
        offs = np.meshgrid(*[np.arange(-K, K + 1)] * u.dim, indexing="ij")
        rho2 = sum((o * h) ** 2 for o, h in zip(offs, spacing)) / radius ** 2
        w = np.maximum(0.0, 1.0 - rho2) ** 2
        centers_shape = tuple(n - 2 * K - 2 for n in u.shape)
        res = np.zeros(centers_shape)
        for idx in np.ndindex(w.shape):
            wk = w[idx]
            if wk == 0.0:
                continue
            # center node j reads g[j + (i - K)]; centers start at node K + 1
            sl = tuple(slice(i + 1, i + 1 + m) for i, m in zip(idx, centers_shape))
            res += wk * g[sl]
        out["radii"].append(radius)
        out["n_centers"].append(int(np.prod(centers_shape)))
        out["max_residual"].append(float(np.max(np.abs(res))) if res.size else 0.0)
        out["bound"].append(grad_tol * float(np.sum(w)))
    out["passed"] = bool(all(r <= b for r, b in zip(out["max_residual"], out["bound"])))
    return out


# -- diagnostics ---------------------------------------------------------------


def coercivity_check(H: Hamiltonian, s: float, c: float,
                     sample_radius_max: float = 1e3, samples: int = 2048) -> bool:
    """Verify F(a) >= c |a|^s - 1/c on log-spaced radii up to the maximum."""
    s = float(s)
    c = float(c)
    if c <= 0:
        raise ValueError("coercivity constant must be positive")
    radii = np.concatenate([[0.0], np.geomspace(1e-6, float(sample_radius_max), samples)])
    return bool(np.all(H.value(radii) >= c * radii ** s - 1.0 / c))


def _simplex_barycenters(mesh: SimplexMesh):
    """Barycenter coordinates per gradient family, matching mesh.gradients."""
    h = mesh.spacing
    if mesh.dim == 1:
        x = mesh.lo[0] + (np.arange(mesh.shape[0] - 1) + 0.5) * h[0]
        return (x[:, None],)
    x = mesh.lo[0] + np.arange(mesh.shape[0] - 1) * h[0]
    y = mesh.lo[1] + np.arange(mesh.shape[1] - 1) * h[1]
    X, Y = np.meshgrid(x, y, indexing="ij")
    if mesh.diagonal == "anti":
        b1 = np.stack([X + h[0] / 3.0, Y + h[1] / 3.0], axis=-1)
        b2 = np.stack([X + 2.0 * h[0] / 3.0, Y + 2.0 * h[1] / 3.0], axis=-1)
    else:
        b1 = np.stack([X + 2.0 * h[0] / 3.0, Y + h[1] / 3.0], axis=-1)
        b2 = np.stack([X + h[0] / 3.0, Y + 2.0 * h[1] / 3.0], axis=-1)
    return (b1, b2)


def caccioppoli_diagnostic(u: SampledFunction, H: Hamiltonian,
                           r_exp: float, inner_R: float) -> float:
    """Interior gradient norm over solution size on concentric balls.

    Returns ||Du||_{L^r(B_R)} / sup_{B_2R} |u| for balls centered at the
    box midpoint, with Du the per-simplex gradient (a simplex counts when
    its barycenter falls in the inner ball).  Diagnostic only: no constant
    is asserted, the interesting signal is stability under refinement.
    """
    r_exp = float(r_exp)
    if r_exp <= 1:
        raise ValueError("norm exponent must exceed 1")
    R = float(inner_R)
    if R <= 0:
        raise ValueError("ball radius must be positive")
    center = np.array([(a + b) / 2.0 for a, b in zip(u.lo, u.hi)])
    for ax in range(u.dim):
        if center[ax] - 2.0 * R < u.lo[ax] or center[ax] + 2.0 * R > u.hi[ax]:
            raise ValueError("outer ball leaves the domain")
    mesh = SimplexMesh.for_function(u)
    vol = mesh.simplex_volume
    total = 0.0
    for g, bary in zip(mesh.gradients(u.values), _simplex_barycenters(mesh)):
        dist = np.linalg.norm(bary - center, axis=-1)
        mags = np.linalg.norm(g, axis=-1)
        total += float(np.sum(mags[dist < R] ** r_exp)) * vol
    num = total ** (1.0 / r_exp)
    dist_nodes = np.linalg.norm(u.points() - center, axis=-1)
    denom = float(np.max(np.abs(u.values[dist_nodes <= 2.0 * R])))
    if denom == 0.0:
        return 0.0
    return num / denom


def minimality_certificate(u: SampledFunction, prob: DirichletProblem,
                           n_perturb: int = 100, amplitude: float = 1e-3,
                           seed: int = 0) -> dict:
    """Energy gaps against random admissible perturbations of the minimizer.

    Each perturbation vanishes on the boundary ring and is scaled to the
    given amplitude relative to the solution size; for a true discrete
    minimizer every gap is nonnegative up to the optimality residual.
    """
    mesh = SimplexMesh.for_function(prob.grid)
    bmask = prob.grid.boundary_mask()
    e0 = mesh.energy(prob.H, u.values)
    rng = np.random.default_rng(seed)
    scale = amplitude * max(1.0, u.sup_norm)
    min_gap = np.inf
    worst = -1
    for k in range(n_perturb):
        w = rng.standard_normal(u.shape)
        w[bmask] = 0.0
        w *= scale / np.max(np.abs(w))
        gap = mesh.energy(prob.H, u.values + w) - e0
        if gap < min_gap:
            min_gap = gap
            worst = k
    return {
        "n_perturb": int(n_perturb),
        "amplitude": float(scale),
        "seed": int(seed),
        "energy": float(e0),
        "min_gap": float(min_gap),
        "worst_index": int(worst),
    }


# -- structure inequalities of the radial models --------------------------------


def convexity_gap(H: Hamiltonian, n_pairs: int = 1000, radius: float = 2.0,
                  seed: int = 0) -> float:
    """Worst violation of F_A(a).(b-a) <= F(b) - F(a) over random pairs.

    Nonpositive up to rounding for any convex integrand; the returned
    value is the maximum of the left side minus the right side.
    """
    rng = np.random.default_rng(seed)
    a = rng.uniform(-radius, radius, size=(n_pairs, H.dim))
    b = rng.uniform(-radius, radius, size=(n_pairs, H.dim))
    lhs = np.sum(H.grad(a) * (b - a), axis=-1)
    rhs = H.eval(b) - H.eval(a)
    return float(np.max(lhs - rhs))


def monotonicity_constant(p: float) -> float:
    """Sharp constant c with (F_A(b)-F_A(a)).(b-a) >= c|b-a|^p for F=|a|^p, p>=2.

    Equals p * 2^(2-p); antipodal pairs b = -a attain it exactly, and a
    brute-force sweep over pair directions finds no smaller ratio.
    """
    if p < 2:
        raise ValueError("the power inequality needs p >= 2")
    return float(p * 2.0 ** (2.0 - p))


def monotonicity_gap(H: Hamiltonian, n_pairs: int = 1000, radius: float = 2.0,
                     seed: int = 0) -> dict:
    """Worst slack in the p-power monotonicity bound over random pairs.

    Random pairs are augmented with antipodal ones, where the bound is
    tight; min_gap is the smallest value of the left side minus the bound.
    """
    p = H.params.get("p", 2.0 if H.name == "quadratic" else None)
    if p is None or p < 2:
        raise ValueError("needs a power-law integrand with p >= 2")
    c = monotonicity_constant(p)
    rng = np.random.default_rng(seed)
    a = rng.uniform(-radius, radius, size=(n_pairs, H.dim))
    b = rng.uniform(-radius, radius, size=(n_pairs, H.dim))
    # antipodal block: the equality cases
    k = max(1, n_pairs // 10)
    a = np.concatenate([a, a[:k]])
    b = np.concatenate([b, -a[-k:]])
    diff = b - a
    lhs = np.sum((H.grad(b) - H.grad(a)) * diff, axis=-1)
    bound = c * np.linalg.norm(diff, axis=-1) ** p
    return {"constant": c, "min_gap": float(np.min(lhs - bound))}
