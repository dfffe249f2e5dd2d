"""Discrete second-order jets and feeble viscosity verification.

A jet (p, X) belongs to the discrete upper jet of u at a node when the
quadratic u(x) + p.z + z.Xz/2 + slack|z|^2 dominates u on the grid ball
of each test radius; the slack term stands in for the o(|z|^2) of the
continuum definition, and shrinking radii stand in for the limit.  The
feeble variant discards jets whose gradient part sits within a band
around the singular set of the integrand before testing the sign of
F_AA(p):X, so verification never evaluates second derivatives where the
integrand has none.

Probes are least-squares quadratic fits on the test neighborhoods plus
eigenvalue and gradient perturbations.  Quadratic probes cannot exhaust
the continuum jet space, so region reports carry coverage counts rather
than a completeness claim.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .grid import SampledFunction
from .hamiltonian import Hamiltonian, SingularSet

__all__ = [
    "Jet", "ProbeSet", "FeebleVerdict", "RegionReport",
    "touch_test_upper", "touch_test_lower", "generate_probes",
    "feeble_check", "verify_region",
]


@dataclass(frozen=True)
class Jet:
    """Second-order jet candidate: gradient part p, Hessian part X."""

    p: np.ndarray
    X: np.ndarray

    def __post_init__(self):
        p = np.atleast_1d(np.asarray(self.p, dtype=float))
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        if X.shape != (p.size, p.size):
            raise ValueError(f"X must be {p.size}x{p.size}, got {X.shape}")
        if not np.array_equal(X, X.T):
            raise ValueError("X must be exactly symmetric")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "X", X)

    def shifted(self, dp=None, dX=None) -> "Jet":
        p = self.p + (0.0 if dp is None else np.asarray(dp, dtype=float))
        X = self.X + (0.0 if dX is None else np.asarray(dX, dtype=float))
        X = 0.5 * (X + X.T)
        return Jet(p, X)

    def to_json_dict(self) -> dict:
        return {"p": [float(v) for v in self.p],
                "X": [[float(v) for v in row] for row in self.X]}


@dataclass(frozen=True)
class ProbeSet:
    """Jet candidates at one node with their touch radii and slack.

    ``k_excluded[i]`` is true when jets[i] has gradient part within
    kappa of the singular set; such jets are never used as feeble
    witnesses.
    """

    jets: tuple
    fit_radii: tuple
    slack: float
    k_excluded: tuple = ()
    kappa: float = 0.0

    def __post_init__(self):
        if self.slack <= 0:
            raise ValueError("slack must be strictly positive")
        if self.k_excluded and len(self.k_excluded) != len(self.jets):
            raise ValueError("one exclusion flag per jet required")

    def admissible(self):
        """Jets whose gradient part stays clear of the singular set."""
        if not self.k_excluded:
            return list(self.jets)
        return [j for j, ex in zip(self.jets, self.k_excluded) if not ex]


def _ball_offsets(spacing, radius: float):
    """Grid offsets z (physical) with |z| <= radius, zero included."""
    K = [int(np.floor(radius / h * (1 + 1e-12))) for h in spacing]
    axes = [np.arange(-k, k + 1, dtype=np.int64) for k in K]
    grids = np.meshgrid(*axes, indexing="ij")
    dz = np.stack([g.ravel() for g in grids], axis=-1)
    z = dz * np.asarray(spacing)
    keep = np.einsum("ij,ij->i", z, z) <= radius * radius * (1 + 1e-12)
    return dz[keep], z[keep]


def _node_window(u: SampledFunction, node, dz: np.ndarray) -> np.ndarray:
    node = np.atleast_1d(np.asarray(node, dtype=np.int64))
    idx = node + dz
    for ax, n in enumerate(u.shape):
        if idx[:, ax].min() < 0 or idx[:, ax].max() >= n:
            raise ValueError(
                f"test ball leaves the grid at node {tuple(int(i) for i in node)}")
    return u.values[tuple(idx[:, ax] for ax in range(u.dim))]


def _touch(u, node, jet, radius, slack, upper: bool) -> bool:
    hmax = max(u.spacing)
    if radius < hmax:
        raise ValueError(f"test radius {radius:.3g} is below one cell {hmax:.3g}")
    dz, z = _ball_offsets(u.spacing, radius)
    w = _node_window(u, node, dz)
    u0 = u.values[tuple(np.atleast_1d(node))]
    quad = u0 + z @ jet.p + 0.5 * np.einsum("ij,jk,ik->i", z, jet.X, z)
    r2 = np.einsum("ij,ij->i", z, z)
    if upper:
        return bool(np.all(w <= quad + slack * r2))
    return bool(np.all(w >= quad - slack * r2))


def touch_test_upper(u: SampledFunction, node, jet: Jet, radius: float,
                     slack: float) -> bool:
    """Discrete upper-jet membership: the jet quadratic plus slack|z|^2
    dominates u over every grid offset with |z| <= radius."""
    return _touch(u, node, jet, radius, slack, upper=True)


def touch_test_lower(u: SampledFunction, node, jet: Jet, radius: float,
                     slack: float) -> bool:
    """Discrete lower-jet membership: mirror of touch_test_upper."""
    return _touch(u, node, jet, radius, slack, upper=False)


def _quadratic_basis(z: np.ndarray) -> np.ndarray:
    """Design matrix for a full quadratic in the offsets z."""
    dim = z.shape[1]
    cols = [np.ones(len(z))]
    cols += [z[:, a] for a in range(dim)]
    cols += [0.5 * z[:, a] ** 2 for a in range(dim)]
    if dim == 2:
        cols.append(z[:, 0] * z[:, 1])
    return np.stack(cols, axis=-1)


def _fit_jet(u: SampledFunction, node, radius: float, fitter=None) -> Jet:
    """Least-squares quadratic fit of u around the node; returns its jet."""
    if fitter is None:
        dz, z = _ball_offsets(u.spacing, radius)
        B = _quadratic_basis(z)
        if len(z) < B.shape[1] or np.linalg.matrix_rank(B) < B.shape[1]:
            raise ValueError(f"degenerate quadratic fit at radius {radius:.3g}")
        pinv = np.linalg.pinv(B)
    else:
        dz, pinv = fitter
    w = _node_window(u, node, dz)
    c = pinv @ w
    dim = u.dim
    p = c[1:1 + dim]
    if dim == 1:
        X = np.array([[c[2]]])
    else:
        X = np.array([[c[3], c[5]], [c[5], c[4]]])
    return Jet(p, X)


def make_fitter(u: SampledFunction, radius: float):
    """Precomputed (offsets, pseudoinverse) pair shared by every node."""
    dz, z = _ball_offsets(u.spacing, radius)
    B = _quadratic_basis(z)
    if len(z) < B.shape[1] or np.linalg.matrix_rank(B) < B.shape[1]:
        raise ValueError(f"degenerate quadratic fit at radius {radius:.3g}")
    return dz, np.linalg.pinv(B)


def generate_probes(u: SampledFunction, node, K: SingularSet,
                    fit_radii: Optional[Sequence[float]] = None,
                    n_perturb: int = 2, slack: Optional[float] = None,
                    kappa: Optional[float] = None, _fitters=None) -> ProbeSet:
    """Quadratic-fit jets at a node, with eigenvalue and gradient
    perturbations, flagged against the singular set K.

    One base jet per fit radius; perturbations add s*slack to X's
    eigenvalues (|s| <= n_perturb) and +-2*kappa along each axis to p,
    so at least some probes escape the exclusion band when the base
    gradient sits on K.  kappa defaults to max(2h, 1e-3 |p_base|).
    """
    hmax = max(u.spacing)
    if fit_radii is None:
        fit_radii = (4.0 * hmax, 2.0 * hmax)
    if slack is None:
        slack = 10.0 * hmax
    dim = u.dim
    bases = []
    for r in fit_radii:
        fitter = None if _fitters is None else _fitters[r]
        bases.append(_fit_jet(u, node, r, fitter))
    if kappa is None:
        kappa = max(2.0 * hmax, 1e-3 * float(np.linalg.norm(bases[0].p)))
    eye = np.eye(dim)
    jets = []
    for base in bases:
        for s in range(-n_perturb, n_perturb + 1):
            jets.append(base.shifted(dX=s * slack * eye))
        for a in range(dim):
            jets.append(base.shifted(dp=2.0 * kappa * eye[a]))
            jets.append(base.shifted(dp=-2.0 * kappa * eye[a]))
    excluded = tuple(K.distance(j.p) <= kappa for j in jets)
    return ProbeSet(jets=tuple(jets), fit_radii=tuple(fit_radii),
                    slack=float(slack), k_excluded=excluded,
                    kappa=float(kappa))


@dataclass(frozen=True)
class FeebleVerdict:
    """Outcome of a feeble viscosity check at one node.

    status is ``fail`` if either tested side has an admissible touching
    jet with the wrong sign of F_AA(p):X, ``vacuous`` if no admissible
    jet touches on any tested side, ``pass`` otherwise.  Each side dict
    carries the touching count, worst margin, and the witness jet on
    failure.
    """

    status: str
    node: tuple
    sub: Optional[dict] = None
    sup: Optional[dict] = None

    def to_json_dict(self) -> dict:
        def side(d):
            if d is None:
                return None
            out = dict(d)
            if out.get("witness") is not None:
                out["witness"] = out["witness"].to_json_dict()
            return out
        return {"status": self.status, "node": list(self.node),
                "sub": side(self.sub), "sup": side(self.sup)}


def _touch_windows(u: SampledFunction, node, radii):
    """Per-radius (offsets, window, gap-to-center, |z|^2) tuples reused
    by every probe jet at the node."""
    out = []
    u0 = float(u.values[tuple(np.atleast_1d(node))])
    for r in radii:
        dz, z = _ball_offsets(u.spacing, r)
        w = _node_window(u, node, dz)
        out.append((z, w - u0, np.einsum("ij,ij->i", z, z)))
    return out


def _side_verdict(u, H, node, probes, tol, upper: bool, windows=None) -> dict:
    """One inequality side: scan admissible probes that touch at every
    radius and test the sign of F_AA(p):X with the slack-derived margin.

    A jet touching with slack eta is a genuine jet once its Hessian part
    is widened by 2*eta*I, and F_AA(p):X is linear in X, so the margin
    grows by 2*eta*trace(F_AA(p)).
    """
    if windows is None:
        windows = _touch_windows(u, node, probes.fit_radii)
    worst = np.inf
    witness = None
    n_touching = 0
    for jet, ex in zip(probes.jets, probes.k_excluded or (False,) * len(probes.jets)):
        if ex:
            continue
        touched = True
        for z, gap, r2 in windows:
            quad = z @ jet.p + 0.5 * np.einsum("ij,jk,ik->i", z, jet.X, z)
            if upper:
                ok = np.all(gap <= quad + probes.slack * r2)
            else:
                ok = np.all(gap >= quad - probes.slack * r2)
            if not ok:
                touched = False
                break
        if not touched:
            continue
        n_touching += 1
        F = H.hess(jet.p)
        g = float(np.sum(F * jet.X))
        margin_budget = tol + 2.0 * probes.slack * abs(float(np.trace(F)))
        margin = (g + margin_budget) if upper else (margin_budget - g)
        if margin < worst:
            worst = margin
            if margin < 0.0:
                witness = jet
    if n_touching == 0:
        return {"status": "vacuous", "n_touching": 0, "worst_margin": None,
                "witness": None}
    status = "fail" if worst < 0.0 else "pass"
    return {"status": status, "n_touching": n_touching,
            "worst_margin": float(worst), "witness": witness}


def feeble_check(u: SampledFunction, H: Hamiltonian, node,
                 probes: Optional[ProbeSet] = None, tol: float = 0.0,
                 side: str = "both") -> FeebleVerdict:
    """Feeble viscosity verdict at one node.

    Subsolution side: every admissible upper-touching probe must have
    F_AA(p):X >= -tol - slack margin.  Supersolution side mirrors it
    with lower touching and <= +tol.  ``vacuous`` means no admissible
    probe touched on any tested side, which is the expected state inside
    the region where the gradient sits on the singular set.
    """
    if side not in ("both", "sub", "super"):
        raise ValueError(f"unknown side {side!r}")
    if probes is None:
        probes = generate_probes(u, node, H.singular_set)
    node_t = tuple(int(i) for i in np.atleast_1d(node))
    windows = _touch_windows(u, node_t, probes.fit_radii)
    sub = sup = None
    if side in ("both", "sub"):
        sub = _side_verdict(u, H, node_t, probes, tol, upper=True,
                            windows=windows)
    if side in ("both", "super"):
        sup = _side_verdict(u, H, node_t, probes, tol, upper=False,
                            windows=windows)
    statuses = [d["status"] for d in (sub, sup) if d is not None]
    if "fail" in statuses:
        status = "fail"
    elif all(s == "vacuous" for s in statuses):
        status = "vacuous"
    else:
        status = "pass"
    return FeebleVerdict(status=status, node=node_t, sub=sub, sup=sup)


@dataclass(frozen=True)
class RegionReport:
    """Aggregated feeble verdicts over the interior of a region."""

    n_pass: int
    n_fail: int
    n_vacuous: int
    worst_sub_margin: Optional[float]
    worst_sup_margin: Optional[float]
    witnesses: tuple
    probe_coverage: dict
    tol: float

    @property
    def n_nodes(self) -> int:
        return self.n_pass + self.n_fail + self.n_vacuous

    @property
    def clean(self) -> bool:
        return self.n_fail == 0

    def to_json_dict(self) -> dict:
        return {
            "n_pass": self.n_pass, "n_fail": self.n_fail,
            "n_vacuous": self.n_vacuous,
            "worst_sub_margin": self.worst_sub_margin,
            "worst_sup_margin": self.worst_sup_margin,
            "witnesses": [{"node": list(n), "side": s, "jet": j.to_json_dict(),
                           "value": g}
                          for n, s, j, g in self.witnesses],
            "probe_coverage": self.probe_coverage,
            "tol": self.tol,
        }


def verify_region(u: SampledFunction, H: Hamiltonian, margin: int = 0,
                  tol: float = 0.0, fit_radii: Optional[Sequence[float]] = None,
                  n_perturb: int = 2, slack: Optional[float] = None,
                  side: str = "both", max_witnesses: int = 20) -> RegionReport:
    """Run feeble_check at every node where the largest test ball fits
    (plus ``margin`` extra cells) and aggregate the verdicts."""
    hmax = max(u.spacing)
    if fit_radii is None:
        fit_radii = (4.0 * hmax, 2.0 * hmax)
    if slack is None:
        slack = 10.0 * hmax
    fitters = {r: make_fitter(u, r) for r in fit_radii}
    skip = [int(np.floor(max(fit_radii) / h * (1 + 1e-12))) + margin
            for h in u.spacing]
    ranges = [range(s, n - s) for s, n in zip(skip, u.shape)]
    if any(len(r) == 0 for r in ranges):
        raise ValueError("no interior nodes left after the test-ball margin")
    counts = {"pass": 0, "fail": 0, "vacuous": 0}
    worst_sub = None
    worst_sup = None
    witnesses = []
    touching_sub = 0
    touching_sup = 0
    n_nodes = 0
    nodes = np.stack(np.meshgrid(*ranges, indexing="ij"),
                     axis=-1).reshape(-1, u.dim)
    for node in nodes:
        probes = generate_probes(u, node, H.singular_set, fit_radii=fit_radii,
                                 n_perturb=n_perturb, slack=slack,
                                 _fitters=fitters)
        v = feeble_check(u, H, node, probes=probes, tol=tol, side=side)
        counts[v.status] += 1
        n_nodes += 1
        for label, d in (("sub", v.sub), ("super", v.sup)):
            if d is None or d["status"] == "vacuous":
                continue
            if label == "sub":
                touching_sub += d["n_touching"]
                if worst_sub is None or d["worst_margin"] < worst_sub:
                    worst_sub = d["worst_margin"]
            else:
                touching_sup += d["n_touching"]
                if worst_sup is None or d["worst_margin"] < worst_sup:
                    worst_sup = d["worst_margin"]
            if d["witness"] is not None and len(witnesses) < max_witnesses:
                jet = d["witness"]
                witnesses.append((v.node, label, jet,
                                  float(np.sum(H.hess(jet.p) * jet.X))))
    coverage = {
        "nodes": n_nodes,
        "mean_touching_sub": touching_sub / n_nodes,
        "mean_touching_sup": touching_sup / n_nodes,
        "fit_radii": [float(r) for r in fit_radii],
        "slack": float(slack),
    }
    return RegionReport(n_pass=counts["pass"], n_fail=counts["fail"],
                        n_vacuous=counts["vacuous"],
                        worst_sub_margin=worst_sub, worst_sup_margin=worst_sup,
                        witnesses=tuple(witnesses), probe_coverage=coverage,
                        tol=float(tol))
