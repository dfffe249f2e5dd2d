"""Numerics for singular convex variational problems on grids.

The library builds flat regularization kernels from the Osgood profile
of a radial integrand, applies the resulting sup/inf convolutions to
sampled functions, verifies the structural estimates behind them, checks
feeble viscosity inequalities through jet probes, and minimizes the
associated energies by an accelerated direct method.
"""
from .monotone import MonotoneMap
from .hamiltonian import Hamiltonian, RadialEnvelope, SingularSet
from .flatness import (
    FlatKernel,
    OsgoodError,
    build_kernel,
    build_omega,
    build_phi,
    build_rho,
    build_T,
    build_theta,
    classical_kernel,
    osgood_integral,
)
from .grid import SampledFunction, SimplexMesh, energy, gradient, hessian, hessian_field
from .supconv import (
    CheckReport,
    ConvolutionResult,
    check_convergence,
    check_duality,
    check_flatness,
    check_gradient_bound,
    check_lipschitz,
    check_magic,
    check_semiconvexity,
    inf_convolve,
    localization_radius,
    modulus_of_continuity,
    run_all_checks,
    sup_convolve,
)
from .jets import (
    FeebleVerdict,
    Jet,
    ProbeSet,
    RegionReport,
    feeble_check,
    generate_probes,
    touch_test_lower,
    touch_test_upper,
    verify_region,
)
from .solver import (
    DELTA_SCHEDULE,
    DirichletProblem,
    MinimizeOptions,
    TestFunction,
    basis_residuals,
    caccioppoli_diagnostic,
    coercivity_check,
    continuation_minimize,
    convexity_gap,
    gradient_modulus,
    make_bump,
    minimality_certificate,
    minimize,
    mollification_error,
    mollification_report,
    mollify,
    monotonicity_constant,
    monotonicity_gap,
    transfinite_interpolation,
    weak_residual,
)

__version__ = "0.1.0"

__all__ = [
    "MonotoneMap",
    "Hamiltonian", "RadialEnvelope", "SingularSet",
    "FlatKernel", "OsgoodError", "build_kernel", "build_omega", "build_phi",
    "build_rho", "build_T", "build_theta", "classical_kernel", "osgood_integral",
    "SampledFunction", "SimplexMesh", "energy", "gradient", "hessian",
    "hessian_field",
    "CheckReport", "ConvolutionResult", "check_convergence", "check_duality",
    "check_flatness", "check_gradient_bound", "check_lipschitz", "check_magic",
    "check_semiconvexity", "inf_convolve", "localization_radius",
    "modulus_of_continuity", "run_all_checks", "sup_convolve",
    "Jet", "ProbeSet", "FeebleVerdict", "RegionReport", "feeble_check",
    "generate_probes", "touch_test_lower", "touch_test_upper", "verify_region",
    "DELTA_SCHEDULE", "DirichletProblem", "MinimizeOptions", "TestFunction",
    "basis_residuals", "caccioppoli_diagnostic", "coercivity_check",
    "continuation_minimize", "convexity_gap", "gradient_modulus", "make_bump",
    "minimality_certificate", "minimize", "mollification_error",
    "mollification_report", "mollify", "monotonicity_constant",
    "monotonicity_gap", "transfinite_interpolation", "weak_residual",
    "__version__",
]
