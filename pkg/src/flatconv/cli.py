"""Batch experiment driver: build kernels, run checks, minimize, verify.

Subcommands
-----------
flatness   build a kernel for an integrand and report its derivative identities
supconv    run the regularization checks on a sampled function
minimize   solve a Dirichlet problem from a config file
verify     run the pointwise generalized-derivative verification on a grid file
pipeline   the full loop: kernel -> minimize -> verify -> checks -> residuals
report     pretty-print a pipeline summary

All file output is deterministic for a fixed config and seed: JSON is written
with sorted keys, floats use their shortest round-trip form, and no wall-clock
data ever enters a report.  Exit codes: 0 all checks passed, 1 at least one
check failed, 2 configuration or runtime error.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .flatness import build_kernel, classical_kernel, FlatKernel
from .grid import SampledFunction, SimplexMesh
from .hamiltonian import Hamiltonian
from .jets import verify_region
from . import solver as sv
from . import supconv as sc

__all__ = ["main", "ExperimentConfig", "DATA_FUNCTIONS", "run_pipeline"]

SCHEMA_VERSION = 1

# identity thresholds a built kernel must meet (relative errors)
_IDENTITY_TOL_ORDER1 = 1e-6
_IDENTITY_TOL_ORDER2 = 1e-5

# named boundary/exact data; every config references these by id
DATA_FUNCTIONS = {
    "ramp": lambda *xs: xs[0],
    "zero": lambda *xs: np.zeros_like(xs[0]),
    "saddle": lambda x, y: x ** 2 - y ** 2,
    "harmonic_exp": lambda x, y: np.exp(x) * np.cos(y),
}


def _json_safe(obj):
    """Replace non-finite floats with None so output stays strict JSON."""
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    return obj


def _write_json(obj, path) -> None:
    with open(path, "w") as fh:
        fh.write(json.dumps(_json_safe(obj), sort_keys=True, indent=2) + "\n")


def _load_json_or_inline(spec: str) -> dict:
    text = spec.strip()
    if text.startswith("{"):
        return json.loads(text)
    with open(spec) as fh:
        return json.load(fh)


def _load_hamiltonian(spec: str) -> Hamiltonian:
    return Hamiltonian.from_config(_load_json_or_inline(spec))


# -- experiment configuration ----------------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: model, domain, data ids, schedules, tolerances, seed.

    shapes holds one grid shape per resolution to run; two shapes plus an
    exact-solution id turn the run into a refinement study.
    """

    name: str
    seed: int
    hamiltonian: dict
    lo: tuple
    hi: tuple
    shapes: tuple
    boundary: str
    kernel: dict
    eps: tuple
    delta_schedule: tuple | None
    options: dict
    tolerances: dict
    exact: str | None
    min_order: float | None
    coercivity: tuple | None
    caccioppoli: tuple | None
    outdir: str

    @classmethod
    def from_json_dict(cls, d: dict) -> "ExperimentConfig":
        box = d["box"]
        if "shapes" in d:
            shapes = tuple(tuple(int(n) for n in s) for s in d["shapes"])
        else:
            shapes = (tuple(int(n) for n in d["shape"]),)
        boundary = d["boundary"]
        exact = d.get("exact")
        for ident in (boundary,) + ((exact,) if exact else ()):
            if ident not in DATA_FUNCTIONS:
                raise ValueError(f"unknown data id {ident!r}; "
                                 f"known: {sorted(DATA_FUNCTIONS)}")
        cfg = cls(
            name=str(d.get("name", "experiment")),
            seed=int(d["seed"]),
            hamiltonian=dict(d["hamiltonian"]),
            lo=tuple(float(v) for v in box["lo"]),
            hi=tuple(float(v) for v in box["hi"]),
            shapes=shapes,
            boundary=boundary,
            kernel=dict(d.get("kernel", {})),
            eps=tuple(float(e) for e in d.get("eps", ())),
            delta_schedule=(tuple(float(x) for x in d["delta_schedule"])
                            if d.get("delta_schedule") else None),
            options=dict(d.get("options", {})),
            tolerances=dict(d.get("tolerances", {})),
            exact=exact,
            min_order=(float(d["min_order"]) if d.get("min_order") is not None else None),
            coercivity=(tuple(float(v) for v in d["coercivity"])
                        if d.get("coercivity") else None),
            caccioppoli=(tuple(float(v) for v in d["caccioppoli"])
                         if d.get("caccioppoli") else None),
            outdir=str(d.get("outdir", "out")),
        )
        return cfg

    @classmethod
    def load(cls, spec: str) -> "ExperimentConfig":
        """Load from a file path or a bundled config name like p15_1d."""
        p = Path(spec)
        if p.exists():
            return cls.from_json_dict(json.loads(p.read_text()))
        name = spec if spec.endswith(".json") else spec + ".json"
        ref = resources.files("flatconv").joinpath("configs").joinpath(name)
        if ref.is_file():
            return cls.from_json_dict(json.loads(ref.read_text()))
        raise FileNotFoundError(f"config {spec!r} is neither a file nor a bundled name")

    @property
    def diameter(self) -> float:
        return float(np.hypot.reduce([b - a for a, b in zip(self.lo, self.hi)]))


def _make_options(options: dict, prob: sv.DirichletProblem,
                  record_history: bool = False) -> sv.MinimizeOptions:
    """Build options; grad_tol_scale means scale * max(1, E(start)) / h."""
    opts = dict(options)
    scale = opts.pop("grad_tol_scale", None)
    if scale is not None and opts.get("grad_tol") is None:
        u0 = sv.transfinite_interpolation(prob.grid, prob.boundary_values)
        e0 = SimplexMesh.for_function(prob.grid).energy(prob.H, u0)
        opts["grad_tol"] = float(scale) * max(1.0, abs(e0)) / min(prob.grid.spacing)
    return sv.MinimizeOptions(record_history=record_history, **opts)


# -- subcommands ------------------------------------------------------------------


def _kernel_identity_check(kernel: FlatKernel) -> tuple[dict, bool]:
    ident = kernel.identity_report()
    ok = (ident["chain_rule_order1_max_rel_err"] <= _IDENTITY_TOL_ORDER1
          and ident["chain_rule_order2_max_rel_err"] <= _IDENTITY_TOL_ORDER2)
    return ident, bool(ok)


def cmd_flatness(args) -> int:
    H = _load_hamiltonian(args.hamiltonian)
    kwargs = {}
    if args.constant is not None:
        kwargs["correction_constant"] = args.constant
    kernel = build_kernel(H, diam=args.diam, corrected=not args.uncorrected,
                          resolution=args.resolution, **kwargs)
    kernel.save(args.out)
    ident, ok = _kernel_identity_check(kernel)
    if args.report:
        _write_json({"schema_version": SCHEMA_VERSION, "identities": ident,
                     "passed": ok}, args.report)
    print(f"[{'PASS' if ok else 'FAIL'}] kernel identities "
          f"(order1 {ident['chain_rule_order1_max_rel_err']:.3e}, "
          f"order2 {ident['chain_rule_order2_max_rel_err']:.3e})")
    print(f"kernel -> {args.out}")
    return 0 if ok else 1


_SINGLE_CHECKS = ("duality", "convergence", "semiconvexity", "magic",
                  "gradient_bound", "lipschitz", "flatness")


def cmd_supconv(args) -> int:
    u = SampledFunction.from_csv(args.input)
    if args.kernel == "classical":
        kernel = classical_kernel(u.diameter)
    else:
        kernel = FlatKernel.load(args.kernel)
    eps = args.eps
    if args.check == "all":
        reports = sc.run_all_checks(u, kernel, eps)
    elif args.check == "duality":
        reports = [sc.check_duality(u, kernel, eps)]
    elif args.check == "convergence":
        reports = [sc.check_convergence(u, kernel, [4 * eps, 2 * eps, eps])]
    else:
        res = sc.sup_convolve(u, kernel, eps)
        fn = {"semiconvexity": sc.check_semiconvexity,
              "magic": sc.check_magic,
              "gradient_bound": sc.check_gradient_bound,
              "lipschitz": sc.check_lipschitz,
              "flatness": sc.check_flatness}[args.check]
        reports = [fn(res)]
    payload = {
        "schema_version": SCHEMA_VERSION,
        "eps": eps,
        "kernel_flat": bool(kernel.flat),
        "checks": [r.to_json_dict() for r in reports],
    }
    if args.out:
        _write_json(payload, args.out)
    ok = all(r.passed for r in reports)
    for r in reports:
        print(f"[{'PASS' if r.passed else 'FAIL'}] {r.name} "
              f"(worst margin {r.worst_margin:.3e}, checked {r.n_checked})")
    return 0 if ok else 1


def _write_iteration_log(u: SampledFunction, path) -> None:
    lines = ["stage_delta,iteration,energy,grad_max,step\n"]
    meta = u.meta
    if "stages" in meta:
        for st in meta["stages"]:
            for it, e, g, s in st.get("history", []):
                lines.append(f"{st['delta']!r},{int(it)},{e!r},{g!r},{s!r}\n")
    else:
        for it, e, g, s in meta.get("history", []):
            lines.append(f",{int(it)},{e!r},{g!r},{s!r}\n")
    with open(path, "w") as fh:
        fh.writelines(lines)


def _stage_summaries(meta: dict) -> list:
    return [{k: st[k] for k in ("delta", "energy_initial", "energy",
                                "true_energy", "iterations", "converged")}
            for st in meta.get("stages", [])]


def cmd_minimize(args) -> int:
    cfg = ExperimentConfig.load(args.problem)
    H = Hamiltonian.from_config(cfg.hamiltonian)
    shape = cfg.shapes[0]
    prob = sv.DirichletProblem.from_boundary(
        H, cfg.lo, cfg.hi, shape, DATA_FUNCTIONS[cfg.boundary],
        coercivity=cfg.coercivity)
    opts = _make_options(cfg.options, prob, record_history=bool(args.log))
    if cfg.delta_schedule:
        u = sv.continuation_minimize(prob, cfg.delta_schedule, opts)
    else:
        u = sv.minimize(prob, opts)
    u.to_csv(args.out)
    if args.log:
        _write_iteration_log(u, args.log)
    meta = u.meta
    if args.report:
        payload = {
            "schema_version": SCHEMA_VERSION,
            "config_name": cfg.name,
            "shape": list(shape),
            "converged": meta["converged"],
            "iterations": meta["iterations"],
            "energy": meta["energy"],
            "grad_max": meta["grad_max"],
            "grad_tol": meta["grad_tol"],
        }
        if "stages" in meta:
            payload["stages"] = _stage_summaries(meta)
        _write_json(payload, args.report)
    print(f"[{'PASS' if meta['converged'] else 'FAIL'}] minimize converged "
          f"(iterations {meta['iterations']}, energy {meta['energy']:.6g}, "
          f"grad_max {meta['grad_max']:.3e})")
    print(f"solution -> {args.out}")
    return 0 if meta["converged"] else 1


def cmd_verify(args) -> int:
    u = SampledFunction.from_csv(args.input)
    H = _load_hamiltonian(args.hamiltonian)
    rep = verify_region(u, H, tol=args.tol)
    payload = {"schema_version": SCHEMA_VERSION, "clean": bool(rep.clean)}
    payload.update(rep.to_json_dict())
    if args.out:
        _write_json(payload, args.out)
    print(f"[{'PASS' if rep.clean else 'FAIL'}] verification "
          f"(pass {rep.n_pass}, fail {rep.n_fail}, vacuous {rep.n_vacuous})")
    return 0 if rep.clean else 1


# -- the full pipeline --------------------------------------------------------------


def run_pipeline(cfg: ExperimentConfig, outdir: Path) -> tuple[dict, bool]:
    """Kernel build, minimization, verification, checks; returns (summary, ok)."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    H = Hamiltonian.from_config(cfg.hamiltonian)
    data_fn = DATA_FUNCTIONS[cfg.boundary]
    cert_slack = float(cfg.tolerances.get("certificate_slack", 1e-9))
    conv_slack = float(cfg.tolerances.get("convexity_slack", 1e-9))
    verify_tol = float(cfg.tolerances.get("verify_tol", 0.0))
    sup_error_tol = cfg.tolerances.get("sup_error")

    kcfg = dict(cfg.kernel)
    diam = kcfg.pop("diam", None) or cfg.diameter
    if kcfg.pop("classical", False):
        kernel = classical_kernel(diam)
    else:
        kernel = build_kernel(H, diam=diam, **kcfg)
    kernel.save(outdir / "kernel.json")
    ident, kernel_ok = _kernel_identity_check(kernel)

    checks = {"kernel_identities": kernel_ok}
    runs = []
    errors = []
    for shape in cfg.shapes:
        tag = "x".join(str(n) for n in shape)
        run = {"shape": list(shape)}
        prob = sv.DirichletProblem.from_boundary(H, cfg.lo, cfg.hi, shape,
                                                 data_fn, coercivity=cfg.coercivity)
        if cfg.coercivity is not None:
            run["coercivity_ok"] = sv.coercivity_check(H, *cfg.coercivity)
        opts = _make_options(cfg.options, prob, record_history=True)
        if cfg.delta_schedule:
            u = sv.continuation_minimize(prob, cfg.delta_schedule, opts)
        else:
            u = sv.minimize(prob, opts)
        u.to_csv(outdir / f"solution_{tag}.csv")
        _write_iteration_log(u, outdir / f"iters_{tag}.csv")
        meta = u.meta
        run.update(converged=meta["converged"], iterations=meta["iterations"],
                   energy=meta["energy"], grad_max=meta["grad_max"],
                   grad_tol=meta["grad_tol"])
        if "stages" in meta:
            run["stages"] = _stage_summaries(meta)

        if cfg.exact is not None:
            exact = SampledFunction.from_callable(
                DATA_FUNCTIONS[cfg.exact], cfg.lo, cfg.hi, shape)
            err = float(np.max(np.abs(u.values - exact.values)))
            run["sup_error"] = err
            errors.append(err)

        bare = SampledFunction(u.lo, u.hi, u.values)
        jets_rep = verify_region(bare, H, tol=verify_tol)
        _write_json({"schema_version": SCHEMA_VERSION, **jets_rep.to_json_dict()},
                    outdir / f"jets_{tag}.json")
        run["jets"] = {"clean": bool(jets_rep.clean), "n_pass": jets_rep.n_pass,
                       "n_fail": jets_rep.n_fail, "n_vacuous": jets_rep.n_vacuous}

        sup_reports = []
        for eps in cfg.eps:
            for rep in sc.run_all_checks(bare, kernel, eps):
                sup_reports.append({"eps": eps, **rep.to_json_dict()})
        run["supconv"] = sup_reports

        run["residuals"] = sv.basis_residuals(u, H, grad_tol=meta["grad_tol"])
        run["certificate"] = sv.minimality_certificate(u, prob, seed=cfg.seed)
        run["convexity_gap"] = sv.convexity_gap(H, seed=cfg.seed)
        if cfg.caccioppoli is not None:
            run["caccioppoli"] = sv.caccioppoli_diagnostic(u, H, *cfg.caccioppoli)
        runs.append(run)

    checks["minimize_converged"] = all(r["converged"] for r in runs)
    checks["jets_clean"] = all(r["jets"]["clean"] for r in runs)
    checks["supconv_checks"] = all(rep["passed"] for r in runs for rep in r["supconv"])
    checks["weak_residuals"] = all(r["residuals"]["passed"] for r in runs)
    checks["minimality_certificate"] = all(
        r["certificate"]["min_gap"] >= -cert_slack for r in runs)
    checks["convexity_inequality"] = all(
        r["convexity_gap"] <= conv_slack for r in runs)
    if cfg.coercivity is not None:
        checks["coercivity"] = all(r.get("coercivity_ok", False) for r in runs)
    if sup_error_tol is not None and errors:
        checks["solution_error"] = all(e <= float(sup_error_tol) for e in errors)

    summary = {
        "schema_version": SCHEMA_VERSION,
        "config_name": cfg.name,
        "seed": cfg.seed,
        "kernel": {"flat": bool(kernel.flat), "diam": kernel.diam,
                   "identities": ident},
        "runs": runs,
    }
    if cfg.min_order is not None and len(errors) >= 2:
        order = float(np.log2(errors[-2] / errors[-1]))
        checks["refinement_order"] = order >= cfg.min_order
        summary["refinement"] = {"sup_errors": errors, "order": order,
                                 "min_order": cfg.min_order}
    checks = {k: bool(v) for k, v in checks.items()}
    summary["checks"] = checks
    summary["passed"] = all(checks.values())
    return summary, summary["passed"]


def cmd_pipeline(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    outdir = Path(args.outdir) if args.outdir else Path(cfg.outdir)
    summary, ok = run_pipeline(cfg, outdir)
    _write_json(summary, outdir / "summary.json")
    for name, passed in summary["checks"].items():
        print(f"[{'PASS' if passed else 'FAIL'}] {name}")
    print(f"summary -> {outdir / 'summary.json'}")
    return 0 if ok else 1


def cmd_report(args) -> int:
    with open(args.summary) as fh:
        summary = json.load(fh)
    print(f"config: {summary.get('config_name')}  seed: {summary.get('seed')}")
    for name, passed in summary.get("checks", {}).items():
        print(f"  [{'PASS' if passed else 'FAIL'}] {name}")
    for run in summary.get("runs", []):
        line = (f"  shape {'x'.join(str(n) for n in run['shape'])}: "
                f"iterations {run['iterations']}, energy {run['energy']:.6g}")
        if "sup_error" in run:
            line += f", sup error {run['sup_error']:.3e}"
        print(line)
    ref = summary.get("refinement")
    if ref:
        print(f"  refinement order {ref['order']:.3f} (required {ref['min_order']})")
    return 0 if summary.get("passed") else 1


# -- entry point --------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flatconv",
        description="Regularization kernels, convolution checks, direct-method "
                    "minimization, and solution verification on grids.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("flatness", help="build a kernel and check its identities")
    p.add_argument("--hamiltonian", required=True,
                   help="model config: a JSON file path or an inline JSON object")
    p.add_argument("--diam", type=float, default=1.0)
    p.add_argument("--uncorrected", action="store_true")
    p.add_argument("--constant", type=float, default=None,
                   help="correction constant (default: the dimension)")
    p.add_argument("--resolution", type=int, default=16384)
    p.add_argument("--out", required=True, help="kernel JSON output path")
    p.add_argument("--report", default=None, help="identity report JSON path")
    p.set_defaults(func=cmd_flatness)

    p = sub.add_parser("supconv", help="run convolution checks on a grid CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--kernel", required=True,
                   help="kernel JSON path, or 'classical'")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--check", default="all", choices=("all",) + _SINGLE_CHECKS)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_supconv)

    p = sub.add_parser("minimize", help="solve a Dirichlet problem from a config")
    p.add_argument("--problem", required=True,
                   help="config file path or bundled config name")
    p.add_argument("--out", required=True, help="solution CSV path")
    p.add_argument("--log", default=None, help="iteration log CSV path")
    p.add_argument("--report", default=None, help="summary JSON path")
    p.set_defaults(func=cmd_minimize)

    p = sub.add_parser("verify", help="pointwise verification of a grid CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--hamiltonian", required=True,
                   help="model config: a JSON file path or an inline JSON object")
    p.add_argument("--tol", type=float, default=0.0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("pipeline", help="full experiment from a config")
    p.add_argument("--config", required=True,
                   help="config file path or bundled name (p15_1d, harmonic_2d)")
    p.add_argument("--outdir", default=None)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("report", help="pretty-print a pipeline summary")
    p.add_argument("--summary", required=True)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BrokenPipeError:
        return 0
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
