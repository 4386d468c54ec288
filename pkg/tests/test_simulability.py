import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from povmsim import sdp
from povmsim.oracle import verify_certificate
from povmsim.povm import (
    JointMeasurement,
    Povm,
    PostProcessingMap,
    antipodal_povm,
    depolarize,
    direction,
    xyz_sigma_set,
    random_povm,
    tetra,
    trine,
    trivial,
)
from povmsim.simulability import (
    AssignmentSpec,
    FixedAssignmentCertificate,
    JointCertificate,
    KOutcomeCertificate,
    SimulatorBlock,
    certificate_from_json,
    certificate_to_joint_table,
    collapse_shared_preprocessing,
    extract_projective_decomposition,
    fixed_assignment_program,
    fixed_assignment_robustness,
    heuristic_j_povm_robustness,
    is_feasible,
    jm_program,
    jm_robustness,
    joint_table_to_certificate,
    k_outcome_program,
    k_outcome_robustness,
    antipodal_joint_table,
    process_set,
    projective_robustness_qubit,
    subset_compat_profile,
)

from strategies import seeds, unit_vectors


def sharp_pair_robustness(a, b):
    """Closed form for two sharp qubit measurements with unit Bloch vectors a, b."""
    return 2 / (np.linalg.norm(a + b) + np.linalg.norm(a - b))


@given(unit_vectors(), unit_vectors())
@settings(max_examples=25)
def test_jm_sharp_pairs_closed_form(a, b):
    res = jm_robustness([direction(a), direction(b)])
    assert abs(res.t_star - sharp_pair_robustness(a, b)) < 1e-6
    assert verify_certificate([direction(a), direction(b)], res.certificate).passed


def test_jm_known_values():
    x, y, z, _ = xyz_sigma_set()
    assert abs(jm_robustness([x, y, z]).t_star - 1 / np.sqrt(3)) < 1e-6
    assert abs(jm_robustness([x, z]).t_star - 1 / np.sqrt(2)) < 1e-6
    assert jm_robustness([z, z]).t_star == 1.0
    assert jm_robustness([x, trivial([0.3, 0.7])]).t_star == 1.0


@pytest.mark.parametrize("run", [
    lambda m: jm_robustness(xyz_sigma_set(), method=m),
    lambda m: jm_robustness([xyz_sigma_set()[3], xyz_sigma_set()[0]], method=m),
    lambda m: k_outcome_robustness(tetra(), 3, method=m),
    lambda m: k_outcome_robustness(trine(), 2, method=m),
    lambda m: projective_robustness_qubit(tetra(), method=m),
])
def test_bisection_agrees_with_direct(run):
    assert abs(run("direct").t_star - run("bisection").t_star) < 2e-6


def test_jm_input_checks():
    with pytest.raises(ValueError):
        jm_robustness([tetra()])
    with pytest.raises(ValueError):
        jm_robustness([tetra(), trivial([0.5, 0.5], 3)])


def test_profile_structure():
    prof = subset_compat_profile(xyz_sigma_set(), 2)
    assert len(prof["values"]) == 6
    assert prof["values"][prof["argmin"]] == prof["min"] <= prof["max"]
    with pytest.raises(ValueError):
        subset_compat_profile(xyz_sigma_set(), 5)


def test_k_outcome_trivial_cases(rng):
    a = random_povm(rng, 3)
    assert k_outcome_robustness(a, 3).t_star == 1.0
    assert k_outcome_robustness(a, 1).t_star < 1e-6
    assert k_outcome_robustness(trivial([0.2, 0.3, 0.5]), 1).t_star == 1.0
    with pytest.raises(ValueError):
        k_outcome_robustness(a, 0)


def test_k_outcome_known_values():
    t3 = k_outcome_robustness(tetra(), 3)
    t2 = k_outcome_robustness(tetra(), 2)
    tr2 = k_outcome_robustness(trine(), 2)
    assert abs(t3.t_star - 2 * np.sqrt(2) / 3) < 1e-6
    assert abs(t2.t_star - np.sqrt(2 / 3)) < 1e-6
    assert abs(tr2.t_star - np.sqrt(3) / 2) < 1e-6
    assert abs(t3.t_star * tr2.t_star - t2.t_star) < 1e-6
    for r, target in ((t3, tetra()), (t2, tetra()), (tr2, trine())):
        assert verify_certificate(target, r.certificate).passed
    # the optimal 3-outcome simulators of tetra are regular trines
    for comp in t3.certificate.components:
        vs = np.array([[e[0, 1].real, -e[0, 1].imag, (e[0, 0] - e[1, 1]).real / 2] for e in comp.effects])
        assert np.allclose(np.linalg.norm(vs, axis=1), 1 / 3, atol=1e-4)
        assert np.allclose(vs.sum(axis=0), 0, atol=1e-4)


def test_k_outcome_qutrit(rng):
    a = random_povm(rng, 3, d=3)
    res = k_outcome_robustness(a, 2)
    assert 0 < res.t_star < 1
    assert verify_certificate(a, res.certificate).passed


@pytest.mark.parametrize("build,t", [
    (lambda t: jm_program(xyz_sigma_set(), t), 0.5730239),
    (lambda t: k_outcome_program(tetra(), 3, t), 2 * np.sqrt(2) / 3),
    (lambda t: k_outcome_program(trine(), 2, t), np.sqrt(3) / 2),
])
def test_feasibility_brackets_optimum(build, t):
    assert is_feasible(build(t - 1e-3)).optimal
    assert is_feasible(build(t + 1e-3)).status is sdp.Status.INFEASIBLE


@given(seeds, st.integers(2, 4))
@settings(max_examples=10)
def test_projective_equals_two_outcome(seed, n):
    a = random_povm(np.random.default_rng(seed), n)
    proj = projective_robustness_qubit(a)
    k2 = k_outcome_robustness(a, 2)
    assert abs(proj.t_star - k2.t_star) < 1e-5
    assert verify_certificate(a, proj.certificate).passed


def test_unbiased_two_outcome_program_matches():
    for target in (tetra(), trine()):
        free = k_outcome_robustness(target, 2).t_star
        unbiased = k_outcome_robustness(target, 2, unbiased=True).t_star
        assert abs(free - unbiased) < 1e-6


def test_projective_requires_qubit(rng):
    with pytest.raises(ValueError):
        projective_robustness_qubit(random_povm(rng, 3, d=3))


def test_fixed_assignment_values():
    a = xyz_sigma_set()
    part = fixed_assignment_robustness(a, AssignmentSpec.deterministic([0, 0, 1, 1]))
    assert abs(part.t_star - 1 / np.sqrt(2)) < 1e-6
    w = np.array([[1, 0, 0], [0, 1, 0], [0, 0, 1], [1 / 3, 1 / 3, 1 / 3]])
    three = fixed_assignment_robustness(a, AssignmentSpec(w))
    assert abs(three.t_star - 0.7746) < 1e-3
    for r in (part, three):
        assert verify_certificate(a, r.certificate).passed
    one = fixed_assignment_robustness(a, AssignmentSpec.deterministic([0, 0, 0, 0]))
    assert abs(one.t_star - jm_robustness(a).t_star) < 1e-6


def test_assignment_validation():
    with pytest.raises(ValueError):
        AssignmentSpec(np.array([[0.5, 0.6]]))
    with pytest.raises(ValueError):
        AssignmentSpec(np.array([1.0, 0.0]))
    spec = AssignmentSpec.deterministic([0, 1, 1])
    assert spec.n_simulators == 2 and spec.assigned(1) == (1, 2)
    with pytest.raises(ValueError):
        fixed_assignment_program(xyz_sigma_set(), spec)


def test_heuristic_is_a_lower_bound_dominating_single_joint():
    a = xyz_sigma_set()
    best = heuristic_j_povm_robustness(a, 2, divisions=2)
    assert best["heuristic"] is True
    assert best["t_star"] >= jm_robustness(a).t_star - 1e-7
    assert best["t_star"] >= 1 / np.sqrt(2) - 1e-6
    assert verify_certificate(a, best["result"].certificate).passed


# -- transforms --------------------------------------------------------------

def test_joint_table_round_trip():
    res = k_outcome_robustness(tetra(), 2)
    table = certificate_to_joint_table(res.certificate, tetra())
    arr = table.array
    assert arr.shape == (4, 6, 2, 2)
    target = depolarize(tetra(), res.t_star).array
    assert np.allclose(arr.sum(axis=1), target, atol=1e-7)
    cols = arr.sum(axis=0)
    for c in cols:
        assert np.allclose(c, np.trace(c).real / 2 * np.eye(2), atol=1e-7)
    back = joint_table_to_certificate(table, 2, res.t_star)
    assert verify_certificate(tetra(), back).passed


def test_joint_table_rejects_bad_certificate():
    res = k_outcome_robustness(trine(), 2)
    bad = KOutcomeCertificate(res.t_star + 0.05, 3, 2, res.certificate.components)
    with pytest.raises(ValueError):
        certificate_to_joint_table(bad, trine())


def test_antipodal_joint_table_for_unbiased_decomposition():
    res = k_outcome_robustness(tetra(), 2, unbiased=True)
    target = depolarize(tetra(), res.t_star)
    tilde, joint = antipodal_joint_table(target, res.certificate)
    assert tilde.allclose(antipodal_povm(target), atol=1e-7)
    assert np.allclose(joint.array.sum(axis=1), target.array, atol=1e-7)
    assert np.allclose(np.diagonal(joint.array, axis1=0, axis2=1), 0)


def test_extract_projective_decomposition_checks_marginals():
    target = depolarize(tetra(), 0.5)
    bogus = JointMeasurement(np.repeat(target.array[:, None] / 4, 4, axis=1))
    with pytest.raises(ValueError):
        extract_projective_decomposition(target, bogus)


def test_extract_from_product_joint():
    # at zero visibility both marginals are trivial, so the product joint is valid
    target = depolarize(tetra(), 0.0)
    joint = JointMeasurement(np.einsum("a,b,ij->abij", np.full(4, 0.25), np.full(4, 0.25), np.eye(2)))
    cert = extract_projective_decomposition(target, joint, visibility=0.0)
    assert verify_certificate(tetra(), cert).passed


def test_process_set_and_collapse():
    a = xyz_sigma_set()
    pre = np.array([[0.5, 0.5, 0, 0], [0, 0, 1, 0]])
    posts = [[PostProcessingMap.identity(2), PostProcessingMap.deterministic([1, 0], 2), None, None],
             [None, None, PostProcessingMap.identity(2), None]]
    out = process_set(a, pre, posts)
    assert np.allclose(out[0].array, 0.5 * a[0].array + 0.5 * a[1].array[::-1])
    with pytest.raises(ValueError):
        process_set(a, np.array([[0.5, 0.5, 0, 0.1]]), posts)

    res = jm_robustness(a[:3])
    sims = [SimulatorBlock((0, 1, 2), res.certificate.joint.array)] * 2
    shared = FixedAssignmentCertificate(res.t_star, np.full((3, 2), 0.5), sims)
    merged = collapse_shared_preprocessing(shared)
    assert isinstance(merged, JointCertificate)
    assert verify_certificate(a[:3], merged).max_error <= 1e-7
    with pytest.raises(ValueError):
        collapse_shared_preprocessing(FixedAssignmentCertificate(0.5, np.eye(2), sims))


def test_certificate_json_round_trip():
    a = xyz_sigma_set()
    results = [
        (a, jm_robustness(a).certificate),
        ([tetra()], k_outcome_robustness(tetra(), 3).certificate),
        ([tetra()], projective_robustness_qubit(tetra()).certificate),
        (a, fixed_assignment_robustness(a, AssignmentSpec.deterministic([0, 0, 1, 1])).certificate),
    ]
    for targets, cert in results:
        back = certificate_from_json(json.loads(json.dumps(cert.to_json())))
        assert type(back) is type(cert)
        assert verify_certificate(targets, back, 1e-7).passed


def test_jm_feasibility_of_xyz_sigma_set():
    s = xyz_sigma_set()
    assert is_feasible(jm_program(s, 0.55)).optimal
    assert is_feasible(jm_program(s, 0.60)).status is sdp.Status.INFEASIBLE


def test_commuting_diagonal_pair_at_full_visibility():
    a = Povm([np.diag([0.7, 0.2]), np.diag([0.3, 0.8])])
    b = Povm([np.diag([0.1, 0.5]), np.diag([0.4, 0.4]), np.diag([0.5, 0.1])])
    sol = is_feasible(jm_program([a, b], 1.0))
    assert sol.optimal
    res = jm_robustness([a, b])
    assert res.t_star == 1.0
    assert verify_certificate([a, b], res.certificate).passed
