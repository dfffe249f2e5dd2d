"""Construction of flat penalty kernels from degenerate integrands.

The pipeline turns the second-derivative blow-up profile of a convex
integrand into a penalty kernel that is flat at contact:

1. ``build_omega``   continuity modulus: sqrt(t) plus the integrated
   annulus supremum of tr F_AA near the singular set.
2. ``build_rho``     gradient-correction envelope C * omega(t)/t, matched
   to a decaying tail for t >= 1.
3. ``build_phi``     flatness profile: reciprocal of the running supremum
   of (correction + tr F_AA) over outer annuli.  The uncorrected variant
   drops the correction term and is kept for comparison runs.
4. ``osgood_integral``  summability gate for 1/phi near zero; profiles
   that fail it cannot drive the construction.
5. ``build_T``       inverse of the accumulated integral of 1/phi, the
   slope profile of the penalty.
6. ``build_theta``   the penalty itself, theta(x) = 2 * int_0^sqrt(x) T.

All maps are positive monotone tables interpolated as piecewise power
laws, so every integral above has a closed form segment by segment and
pure-power profiles are reproduced to round-off.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .hamiltonian import Hamiltonian
from .monotone import MonotoneMap, strictly_increasing

__all__ = [
    "OsgoodError", "RhoMap", "FlatKernel",
    "osgood_integral", "build_omega", "build_rho", "build_phi",
    "build_T", "build_theta", "build_kernel", "classical_kernel",
]


class OsgoodError(RuntimeError):
    """The reciprocal flatness profile is not integrable near zero."""


# ---------------------------------------------------------------------------
# closed-form integration of piecewise power-law data


def _segment_integrals(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Integrals of the loglog-linear interpolant over each knot interval.

    On [x0, x1] the interpolant is y0 * (x/x0)**beta; the antiderivative is
    explicit for every beta, with the beta = -1 logarithm handled apart.
    Zero ordinates fall back to the trapezoid rule (only exact-zero data,
    e.g. a vanishing Laplacian profile, ever reaches that branch).
    """
    x0, x1 = x[:-1], x[1:]
    y0, y1 = y[:-1], y[1:]
    out = np.empty_like(x0)
    pos = (y0 > 0) & (y1 > 0)
    if np.any(pos):
        r = x1[pos] / x0[pos]
        beta = np.log(y1[pos] / y0[pos]) / np.log(r)
        b1 = beta + 1.0
        core = np.where(np.abs(b1) > 1e-9,
                        (np.power(r, np.where(np.abs(b1) > 1e-9, b1, 1.0)) - 1.0)
                        / np.where(np.abs(b1) > 1e-9, b1, 1.0),
                        np.log(r))
        out[pos] = y0[pos] * x0[pos] * core
    if np.any(~pos):
        out[~pos] = 0.5 * (y0[~pos] + y1[~pos]) * (x1[~pos] - x0[~pos])
    return out


def _power_tail(x0: float, y0: float, beta: float) -> float:
    """int_0^x0 of y0 * (x/x0)**beta, finite only for beta > -1."""
    if y0 == 0.0:
        return 0.0
    if beta <= -1.0:
        raise OsgoodError(f"tail exponent {beta:.4f} <= -1: integral diverges at 0")
    return y0 * x0 / (beta + 1.0)


def _first_slope(knots: np.ndarray, values: np.ndarray) -> float:
    if values[0] <= 0 or values[1] <= 0:
        return 0.0
    return float(np.log(values[1] / values[0]) / np.log(knots[1] / knots[0]))


# ---------------------------------------------------------------------------
# summability gate


def osgood_integral(phi, upper: float = 1.0, rel_tol: float = 1e-6,
                    max_depth: int = 200, points: int = 9) -> float:
    """int_0^upper dt / phi(t), or raise OsgoodError.

    The integral is accumulated over dyadic intervals [upper/2^(k+1),
    upper/2^k], each resolved by ``points`` log-spaced samples integrated
    in closed form.  Convergence is declared once the increment stays
    below rel_tol times the running total on two consecutive levels; a
    profile that cannot make that cut within ``max_depth`` halvings (the
    marginal cases: linear profiles give constant increments, an extra
    logarithm gives harmonically decaying ones) is rejected.
    """
    total = 0.0
    calm = 0
    for k in range(max_depth):
        xs = np.geomspace(upper * 0.5 ** (k + 1), upper * 0.5 ** k, points)
        ys = np.asarray(phi(xs), dtype=float)
        if np.any(ys <= 0) or not np.all(np.isfinite(ys)):
            raise OsgoodError("flatness profile must be positive and finite")
        inc = float(np.sum(_segment_integrals(xs, 1.0 / ys)))
        total += inc
        if total > 0 and inc <= rel_tol * total:
            calm += 1
            if calm >= 2:
                return total
        else:
            calm = 0
    raise OsgoodError(
        f"int dt/phi shows no summable decay after {max_depth} dyadic levels")


# ---------------------------------------------------------------------------
# modulus and correction term


def build_omega(H: Hamiltonian, resolution: int = 2048,
                t_min: float = 1e-10) -> MonotoneMap:
    """Continuity modulus sqrt(t) + int_0^t sup_{s<|a|<1} tr F_AA(a) ds."""
    s = np.geomspace(t_min, 1.0, resolution)
    point = np.asarray(H.radial_laplacian(s), dtype=float)
    if np.any(~np.isfinite(point)):
        raise ValueError("tr F_AA not finite on (0, 1); cannot build a modulus")
    g = np.maximum.accumulate(point[::-1])[::-1]
    tail = 0.0
    if g[0] > 0:
        tail = _power_tail(float(s[0]), float(g[0]), _first_slope(s, g))
    integral = tail + np.concatenate([[0.0], np.cumsum(_segment_integrals(s, g))])
    return MonotoneMap(s, np.sqrt(s) + integral)


@dataclass(frozen=True)
class RhoMap:
    """Gradient-correction envelope built from a continuity modulus.

    rho(t) = C * omega(t) / t on (0, 1); past 1 it relaxes exponentially
    onto the floor C * omega(1) / 2, matching value at t = 1.
    """

    omega: MonotoneMap
    constant: float

    def __call__(self, t):
        a = np.asarray(t, dtype=float)
        scalar = a.ndim == 0
        a = np.atleast_1d(a)
        if np.any(a <= 0):
            raise ValueError("correction envelope defined for t > 0 only")
        out = np.empty_like(a)
        small = a < 1.0
        if np.any(small):
            out[small] = self.constant * self.omega(a[small]) / a[small]
        if np.any(~small):
            w1 = self.omega(np.asarray(1.0))
            out[~small] = 0.5 * self.constant * w1 * (np.exp(1.0 - a[~small]) + 1.0)
        return float(out[0]) if scalar else out


def build_rho(omega: MonotoneMap, constant: float) -> RhoMap:
    if constant <= 0:
        raise ValueError("correction constant must be positive")
    return RhoMap(omega=omega, constant=float(constant))


# ---------------------------------------------------------------------------
# flatness profile


def build_phi(H: Hamiltonian, rho: Optional[RhoMap] = None, R: Optional[float] = None,
              corrected: bool = True, resolution: int = 16384,
              t_min: float = 1e-10) -> MonotoneMap:
    """Flatness profile phi(t) = 1 / sup_{t<r<R} (rho(r) + tr F_AA(r)).

    With ``corrected=False`` the correction term is dropped, which leaves
    the bare curvature envelope (useful to compare growth exponents).
    R = inf is allowed only when tr F_AA stays bounded at infinity and is
    then truncated at 1e6; a finite R must exceed 1 and gets a linear
    extension beyond R so the profile remains defined on all of (0, inf).
    """
    if R is None:
        R = np.inf if H.laplacian_bounded_at_infinity() else 2.0
    if np.isinf(R):
        if not H.laplacian_bounded_at_infinity():
            raise ValueError("tr F_AA grows at infinity; pass a finite R")
        R_eff, finite_R = 1e6, False
    else:
        if R <= 1.0:
            raise ValueError("need R > 1 so the annulus reaches past the unit sphere")
        R_eff, finite_R = float(R), True
    radii = np.geomspace(t_min, R_eff, resolution)
    h = np.asarray(H.radial_laplacian(radii), dtype=float)
    if corrected:
        if rho is None:
            rho = build_rho(build_omega(H), float(H.dim))
        h = h + rho(radii)
    sup = np.maximum.accumulate(h[::-1])[::-1]
    if sup[-1] <= 0:
        raise ValueError("tr F_AA vanishes near the outer radius; "
                         "reduce R or keep the correction term")
    values = strictly_increasing(1.0 / sup)
    knots = radii
    if finite_R:
        # beyond R the profile is extended linearly, phi(R) * t / R; keep
        # the extension knots dense so no single segment spans decades
        # (wide segments break the consistency of the derived tables)
        ext = np.geomspace(R_eff, 1e4 * R_eff, 1025)[1:]
        knots = np.concatenate([knots, ext])
        values = np.concatenate([values, values[-1] * ext / R_eff])
    return MonotoneMap(knots, values)


# ---------------------------------------------------------------------------
# slope profile and penalty


def build_T(phi: MonotoneMap, d: float, span_factor: float = 64.0,
            extension_per_decade: int = 256) -> tuple[MonotoneMap, MonotoneMap]:
    """Invert G(tau) = int_0^tau dt/phi into the slope profile T = G^{-1}.

    G is accumulated in closed form over phi's own knots (the tail below
    the first knot uses the extrapolated leading power), then extended on
    a coarser geometric grid until G reaches span_factor times the domain
    diameter d, which leaves the penalty invertible far past any
    localization radius.  Returns (T, T'), both tabulated on the G values
    themselves: T' is phi evaluated at the preimages, so the pair stays
    consistent by construction.
    """
    if d <= 0:
        raise ValueError("domain diameter must be positive")
    span = span_factor * max(1.0, float(d))
    osgood_integral(phi)  # gate: raises OsgoodError on non-summable profiles
    tau = phi.knots.copy()
    vals = phi.values.copy()
    beta0 = _first_slope(tau, vals)
    if beta0 >= 1.0:
        raise OsgoodError(f"leading exponent {beta0:.4f} >= 1: 1/phi not integrable")
    tail = float(tau[0]) / (float(vals[0]) * (1.0 - beta0))
    G = tail + np.concatenate([[0.0], np.cumsum(_segment_integrals(tau, 1.0 / vals))])
    if G[-1] < span:
        ratio = 10.0 ** (1.0 / extension_per_decade)
        ext_tau, ext_G = [], []
        t_prev, g_prev = float(tau[-1]), float(G[-1])
        while g_prev < span:
            t_next = t_prev * ratio
            if t_next > 1e300:
                raise RuntimeError("penalty span unreachable before float overflow")
            seg = np.array([t_prev, t_next])
            inc = float(np.sum(_segment_integrals(seg, 1.0 / phi(seg))))
            g_prev, t_prev = g_prev + inc, t_next
            ext_tau.append(t_prev)
            ext_G.append(g_prev)
        tau = np.concatenate([tau, ext_tau])
        vals = np.concatenate([vals, phi(np.asarray(ext_tau))])
        G = np.concatenate([G, ext_G])
    cut = int(np.searchsorted(G, span, side="left")) + 1
    tau, vals, G = tau[: cut + 1], vals[: cut + 1], G[: cut + 1]
    if np.any(np.diff(G) <= 0):
        G = strictly_increasing(G)
    T = MonotoneMap(G, tau)
    Tprime = MonotoneMap(G, vals if vals[0] < vals[-1] else vals.copy())
    return T, Tprime


def build_theta(T: MonotoneMap) -> tuple[MonotoneMap, MonotoneMap]:
    """Penalty theta(x) = 2 * int_0^sqrt(x) T(s) ds and its derivative.

    Both tables share the knots x_j = t_j^2 over T's knots t_j, and the
    derivative values are exactly T(t_j)/t_j, which makes the chain-rule
    identity theta'(t^2) * t = T(t) hold to round-off at every argument.
    """
    t = T.knots
    tau = T.values
    gamma0 = _first_slope(t, tau)
    tail = _power_tail(float(t[0]), float(tau[0]), gamma0)
    integral = tail + np.concatenate([[0.0], np.cumsum(_segment_integrals(t, tau))])
    theta = MonotoneMap(t ** 2, 2.0 * integral)
    dvals = tau / t
    if np.all(np.diff(dvals) == 0):
        theta_prime = MonotoneMap(t ** 2, dvals)
    else:
        theta_prime = MonotoneMap(t ** 2, strictly_increasing(np.maximum.accumulate(dvals)))
    return theta, theta_prime


# ---------------------------------------------------------------------------
# assembled kernel


@dataclass(frozen=True)
class FlatKernel:
    """Penalty kernel bundle: theta, its derivative, slope profile T, T',
    the flatness profile phi, and the generating modulus/correction.
    diam is the domain diameter the kernel was sized for; the derivative
    identities are contracted on (0, diam]."""

    theta: MonotoneMap
    theta_prime: MonotoneMap
    T: MonotoneMap
    T_prime: MonotoneMap
    phi: MonotoneMap
    diam: float = 1.0
    omega: Optional[MonotoneMap] = None
    rho: Optional[RhoMap] = None
    flat: bool = True
    meta: dict = field(default_factory=dict)

    def theta_second(self, x, rel_step: Optional[float] = None):
        """Second derivative of theta via symmetric differencing of theta'.

        The log-symmetric step defaults to twice the median knot spacing
        of the theta' table: wide enough to straddle segment boundaries
        (a one-sided segment slope is biased at curvature crossovers),
        narrow enough to resolve the contracted range.
        """
        if rel_step is None:
            rel_step = 2.0 * float(np.median(np.diff(np.log(self.theta_prime.knots))))
            rel_step = max(rel_step, 1e-4)
        a = np.asarray(x, dtype=float)
        up, dn = np.exp(rel_step), np.exp(-rel_step)
        out = (self.theta_prime(a * up) - self.theta_prime(a * dn)) / (a * (up - dn))
        return float(out) if np.ndim(x) == 0 else out

    def identity_report(self, samples: int = 100) -> dict:
        """Internal-consistency errors of the tabulated derivatives.

        Checks, at log-spaced arguments spanning (0, diam],
          theta'(t^2) * t = T(t)                   (chain rule, order 1)
          2 theta''(t^2) t^2 + theta'(t^2) = T'(t) (chain rule, order 2)
        plus the vanishing behaviour at zero: the value ratio of theta
        across [1e-8, 1e-2] and the decay exponents of theta' and of
        s * theta''(s), both of which must be positive for a flat kernel.
        Identity errors are relative, maxima over the sample set.
        """
        t = np.geomspace(1e-6 * self.diam, self.diam, samples)
        lhs1 = self.theta_prime(t ** 2) * t
        rhs1 = self.T(t)
        err1 = float(np.max(np.abs(lhs1 - rhs1) / np.abs(rhs1)))
        lhs2 = 2.0 * self.theta_second(t ** 2) * t ** 2 + self.theta_prime(t ** 2)
        rhs2 = self.T_prime(t)
        err2 = float(np.max(np.abs(lhs2 - rhs2) / np.abs(rhs2)))
        s_lo, s_hi = 1e-8, 1e-2
        span = np.log(s_hi / s_lo)
        theta_ratio = float(self.theta(s_lo) / self.theta(s_hi))
        dtheta_exp = float(np.log(self.theta_prime(s_hi) / self.theta_prime(s_lo)) / span)
        curv_lo = s_lo * self.theta_second(s_lo)
        curv_hi = s_hi * self.theta_second(s_hi)
        if curv_lo > 0 and curv_hi > 0:
            curv_exp = float(np.log(curv_hi / curv_lo) / span)
        else:
            curv_exp = np.inf  # identically zero curvature (classical kernel)
        return {
            "chain_rule_order1_max_rel_err": err1,
            "chain_rule_order2_max_rel_err": err2,
            "theta_ratio_8_to_2": theta_ratio,
            "theta_prime_decay_exponent": dtheta_exp,
            "scaled_curvature_decay_exponent": curv_exp,
            "flat": self.flat,
        }

    # -- serialization ------------------------------------------------------

    def to_json_dict(self) -> dict:
        d = {
            "flat": self.flat,
            "diam": self.diam,
            "meta": self.meta,
            "theta": self.theta.to_pairs(),
            "theta_prime": self.theta_prime.to_pairs(),
            "T": self.T.to_pairs(),
            "T_prime": self.T_prime.to_pairs(),
            "phi": self.phi.to_pairs(),
            "omega": self.omega.to_pairs() if self.omega is not None else None,
            "rho_constant": self.rho.constant if self.rho is not None else None,
        }
        return d

    @classmethod
    def from_json_dict(cls, d: dict) -> "FlatKernel":
        omega = MonotoneMap.from_pairs(d["omega"]) if d.get("omega") else None
        rho = None
        if omega is not None and d.get("rho_constant"):
            rho = RhoMap(omega=omega, constant=float(d["rho_constant"]))
        return cls(
            theta=MonotoneMap.from_pairs(d["theta"]),
            theta_prime=MonotoneMap.from_pairs(d["theta_prime"]),
            T=MonotoneMap.from_pairs(d["T"]),
            T_prime=MonotoneMap.from_pairs(d["T_prime"]),
            phi=MonotoneMap.from_pairs(d["phi"]),
            diam=float(d.get("diam", 1.0)),
            omega=omega, rho=rho,
            flat=bool(d["flat"]), meta=dict(d.get("meta", {})),
        )

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, sort_keys=True)

    @classmethod
    def load(cls, path) -> "FlatKernel":
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))


def build_kernel(H: Hamiltonian, diam: float = 1.0, R: Optional[float] = None,
                 correction_constant: Optional[float] = None,
                 corrected: bool = True, resolution: int = 16384,
                 span_factor: float = 64.0) -> FlatKernel:
    """Run the full pipeline for an integrand and package the result.

    diam should be (an upper bound on) the diameter of the domain the
    kernel will be used on; the derivative identities are guaranteed on
    (0, diam] and the slope table extends to span_factor * diam so that
    localization radii stay invertible with large headroom.
    """
    omega = rho = None
    if corrected:
        C = float(H.dim) if correction_constant is None else float(correction_constant)
        omega = build_omega(H)
        rho = build_rho(omega, C)
    phi = build_phi(H, rho=rho, R=R, corrected=corrected, resolution=resolution)
    T, Tprime = build_T(phi, diam, span_factor=span_factor)
    theta, theta_prime = build_theta(T)
    flat = _first_slope(phi.knots, phi.values) > 1e-6
    meta = {
        "model": H.to_config(),
        "corrected": corrected,
        "R": None if R is None else (None if np.isinf(R) else float(R)),
        "correction_constant": rho.constant if rho is not None else None,
        "resolution": resolution,
        "span_factor": span_factor,
    }
    return FlatKernel(theta=theta, theta_prime=theta_prime, T=T, T_prime=Tprime,
                      phi=phi, diam=float(diam), omega=omega, rho=rho,
                      flat=flat, meta=meta)


def classical_kernel(d: float = 1.0) -> FlatKernel:
    """Quadratic-penalty kernel theta(x) = x, the non-flat reference.

    Two knots suffice: power-law interpolation reproduces the identity
    exactly on any range, including extrapolation.
    """
    if d <= 0:
        raise ValueError("domain diameter must be positive")
    span = np.array([1e-8, 1e8])
    ident = MonotoneMap(span, span)
    const = MonotoneMap(span, np.array([1.0, 1.0]))
    return FlatKernel(theta=ident, theta_prime=const, T=ident, T_prime=const,
                      phi=const, diam=float(d), omega=None, rho=None, flat=False,
                      meta={"model": "classical"})
