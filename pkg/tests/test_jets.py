"""Discrete jet touch tests and the feeble region verifier."""
import json

import numpy as np
import pytest

from flatconv import (
    Hamiltonian,
    Jet,
    ProbeSet,
    SampledFunction,
    feeble_check,
    generate_probes,
    touch_test_lower,
    touch_test_upper,
    verify_region,
)


@pytest.fixture(scope="module")
def H_quad():
    return Hamiltonian.quadratic(dim=1)


@pytest.fixture(scope="module")
def H_p15():
    return Hamiltonian.p_dirichlet(p=1.5, dim=1)


def parabola(n=101):
    return SampledFunction.from_callable(lambda x: x ** 2, (-1.0,), (1.0,), (n,))


def test_jet_validation():
    with pytest.raises(ValueError):
        Jet(p=[1.0, 0.0], X=[[1.0]])
    with pytest.raises(ValueError):
        Jet(p=[0.0, 0.0], X=[[0.0, 1.0], [0.5, 0.0]])
    j = Jet(p=[1.0], X=[[2.0]]).shifted(dp=[0.5], dX=[[1.0]])
    assert j.p[0] == 1.5 and j.X[0, 0] == 3.0


def test_probe_set_validation():
    j = Jet(p=[0.0], X=[[0.0]])
    with pytest.raises(ValueError):
        ProbeSet(jets=(j,), fit_radii=(0.1,), slack=0.0)
    with pytest.raises(ValueError):
        ProbeSet(jets=(j, j), fit_radii=(0.1,), slack=1.0, k_excluded=(True,))
    ps = ProbeSet(jets=(j, j), fit_radii=(0.1,), slack=1.0,
                  k_excluded=(True, False))
    assert len(ps.admissible()) == 1


def test_touch_tests_on_parabola():
    u = parabola()
    node = 50  # x = 0
    exact = Jet(p=[0.0], X=[[2.0]])
    flat = Jet(p=[0.0], X=[[0.0]])
    r, s = 0.2, 0.1
    assert touch_test_upper(u, node, exact, r, s)
    assert touch_test_lower(u, node, exact, r, s)
    assert touch_test_lower(u, node, flat, r, s)
    assert not touch_test_upper(u, node, flat, r, s)  # x^2 > 0.1 x^2


def test_touch_test_guards():
    u = parabola()
    j = Jet(p=[0.0], X=[[0.0]])
    with pytest.raises(ValueError, match="below one cell"):
        touch_test_upper(u, 50, j, 0.5 * u.spacing[0], 0.1)
    with pytest.raises(ValueError, match="leaves the grid"):
        touch_test_upper(u, 1, j, 0.2, 0.1)


def test_generate_probes_counts_and_exclusion(H_p15):
    u = SampledFunction.from_callable(lambda x: 0.5 * x, (0.0,), (1.0,), (101,))
    ps = generate_probes(u, 50, H_p15.singular_set)
    # two fit radii; per base: (2*2+1) eigenvalue shifts + 2 gradient shifts
    assert len(ps.jets) == 2 * (5 + 2)
    assert not any(ps.k_excluded)  # slope 0.5 stays clear of the origin
    flat_u = SampledFunction((0.0,), (1.0,), np.zeros(101))
    ps0 = generate_probes(flat_u, 50, H_p15.singular_set)
    assert any(ps0.k_excluded)  # base gradient sits on the singular set
    assert len(ps0.admissible()) > 0  # gradient perturbations escape the band


def test_feeble_check_flags_strict_subharmonicity(H_quad):
    # u = x^2 has Laplacian 2, an upper jet with trace 4 on the F=|a|^2
    # model, so it cannot be a supersolution once the slack budget is small
    u = parabola(401)
    v = feeble_check(u, H_quad, 200)
    assert v.status == "fail"
    assert v.sub["status"] == "pass"
    assert v.sup["status"] == "fail"
    assert v.sup["worst_margin"] < 0
    assert v.sup["witness"] is not None
    json.dumps(v.to_json_dict())  # serializable including the witness


def test_feeble_check_side_selection_and_validation(H_quad):
    u = parabola(401)
    v = feeble_check(u, H_quad, 200, side="sub")
    assert v.status == "pass" and v.sup is None
    with pytest.raises(ValueError):
        feeble_check(u, H_quad, 200, side="upper")


def test_verify_region_clean_on_affine(H_p15):
    u = SampledFunction.from_callable(lambda x: 0.2 + 0.5 * x, (0.0,), (1.0,),
                                      (101,))
    rep = verify_region(u, H_p15)
    assert rep.clean
    assert rep.n_fail == 0 and rep.n_vacuous == 0
    assert rep.n_nodes == rep.n_pass
    assert rep.witnesses == ()
    assert rep.worst_sub_margin is not None and rep.worst_sub_margin >= 0
    assert rep.probe_coverage["mean_touching_sub"] > 0
    d = rep.to_json_dict()
    json.dumps(d)
    assert d["n_pass"] == rep.n_pass


def test_verify_region_rejects_cone_against_laplacian(H_quad):
    # |x| is not a critical point of the quadratic energy; the kink shows
    # up as supersolution failures near the tip
    u = SampledFunction.from_callable(lambda x: np.abs(x), (-1.0,), (1.0,),
                                      (1601,))
    rep = verify_region(u, H_quad)
    assert not rep.clean
    assert rep.n_fail > 0
    assert len(rep.witnesses) > 0
    node, side, jet, value = rep.witnesses[0]
    assert side in ("sub", "super")
    assert isinstance(node[0], int)


def test_verify_region_all_vacuous_on_flat_data(H_p15):
    # constant data: every base gradient lies on the singular set, the
    # perturbed probes never touch, so the verifier abstains everywhere
    u = SampledFunction((0.0,), (1.0,), np.full(101, 0.3))
    rep = verify_region(u, H_p15)
    assert rep.clean
    assert rep.n_vacuous == rep.n_nodes
    assert rep.worst_sub_margin is None and rep.worst_sup_margin is None


def test_verify_region_side_sub_only(H_quad):
    u = parabola(201)
    rep = verify_region(u, H_quad, side="sub")
    assert rep.clean
    assert rep.worst_sup_margin is None


def test_verify_region_needs_interior(H_quad):
    u = SampledFunction((0.0,), (1.0,), np.zeros(7))
    with pytest.raises(ValueError, match="no interior nodes"):
        verify_region(u, H_quad)


def test_verify_region_scale_equivariance(H_quad):
    # scaling x -> 2x and u -> 4u keeps every Hessian probe, touch
    # inequality, and margin budget identical when the fit radii scale
    # with the grid and the slack is pinned; verdict counts must agree
    n = 101
    u1 = SampledFunction.from_callable(lambda x: np.sin(np.pi * x),
                                       (0.0,), (1.0,), (n,))
    u2 = SampledFunction((0.0,), (2.0,), 4.0 * u1.values)
    h1 = u1.spacing[0]
    slack = 0.5
    rep1 = verify_region(u1, H_quad, fit_radii=(4 * h1, 2 * h1), slack=slack)
    rep2 = verify_region(u2, H_quad, fit_radii=(8 * h1, 4 * h1), slack=slack)
    assert (rep1.n_pass, rep1.n_fail, rep1.n_vacuous) == \
        (rep2.n_pass, rep2.n_fail, rep2.n_vacuous)
    assert rep1.worst_sub_margin == pytest.approx(rep2.worst_sub_margin,
                                                  rel=1e-9)
    assert rep1.worst_sup_margin == pytest.approx(rep2.worst_sup_margin,
                                                  rel=1e-9)
