import json

import numpy as np
import pytest
from hypothesis import given, settings

from povmsim.oracle import (
    monotonicity_check,
    protocol_statistics,
    qubit_pair_jm_grid,
    random_states,
    statistics_check,
    verify_certificate,
)
from povmsim.povm import (
    JointMeasurement,
    PostProcessingMap,
    depolarize,
    direction,
    joint_from_single,
    xyz_sigma_set,
    random_povm,
    tetra,
)
from povmsim.simulability import (
    FixedAssignmentCertificate,
    JointCertificate,
    KOutcomeCertificate,
    KOutcomeComponent,
    ProjectiveCertificate,
    SimulatorBlock,
    jm_robustness,
    k_outcome_robustness,
)

from strategies import unit_vectors


def _exact_joint_certificate():
    # x and z at visibility 1/2: M_ab = I/4 + (A_a - I/2)/2 + (B_b - I/2)/2 is a valid parent
    x, z = direction([1, 0, 0]), direction([0, 0, 1])
    t = 0.5
    dx, dz = depolarize(x, t).array, depolarize(z, t).array
    half = np.eye(2) / 2
    parent = np.array([[half / 2 + (dx[a] - half) / 2 + (dz[b] - half) / 2 for b in range(2)] for a in range(2)])
    return [x, z], JointCertificate(t, JointMeasurement(parent))


def test_exact_joint_certificate_passes():
    targets, cert = _exact_joint_certificate()
    rep = verify_certificate(targets, cert)
    assert rep.passed and rep.max_error < 1e-12
    assert len(rep.per_effect_errors) == 2


def test_perturbed_certificate_fails():
    targets, cert = _exact_joint_certificate()
    arr = cert.joint.array.copy()
    arr[0, 0] += 1e-3 * np.diag([1, -1])
    bad = JointCertificate(cert.visibility, JointMeasurement(arr, validate=False))
    rep = verify_certificate(targets, bad)
    assert not rep.passed and rep.max_error >= 1e-3 - 1e-12
    assert rep.notes


def test_negative_effect_detected():
    # a "decomposition" of z at t=1 into z and its negative part is not PSD
    z = direction([0, 0, 1])
    comp = KOutcomeComponent((0, 1), 1.0, np.array([np.diag([1.2, -0.2]), np.diag([-0.2, 1.2])]))
    cert = KOutcomeCertificate(1.0, 2, 2, [comp])
    rep = verify_certificate(z, cert)
    assert not rep.passed
    assert any("negative eigenvalue" in n for n in rep.notes)


def test_weight_normalization_detected():
    z = direction([0, 0, 1])
    comp = KOutcomeComponent((0, 1), 0.9, z.array)
    rep = verify_certificate(z, KOutcomeCertificate(1.0, 2, 2, [comp]))
    assert not rep.passed


def test_shape_mismatch_raises():
    targets, cert = _exact_joint_certificate()
    with pytest.raises(ValueError):
        verify_certificate(targets[:1], cert)
    with pytest.raises(ValueError):
        verify_certificate(tetra(), KOutcomeCertificate(1.0, 3, 2, []))


def test_fixed_assignment_and_projective_hand_built():
    x, z = direction([1, 0, 0]), direction([0, 0, 1])
    sims = [SimulatorBlock((0,), x.array), SimulatorBlock((1,), z.array)]
    cert = FixedAssignmentCertificate(1.0, np.eye(2), sims)
    assert verify_certificate([x, z], cert).max_error < 1e-14
    # a simulator that does not produce a target it is assigned to
    broken = FixedAssignmentCertificate(1.0, np.array([[0.0, 1.0], [0.0, 1.0]]), [None, sims[1]])
    assert not verify_certificate([x, z], broken).passed

    proj = ProjectiveCertificate(0.5, np.array([0.5]), z.array[None], 0.5, np.array([np.eye(2) / 2] * 2))
    assert verify_certificate(z, proj).max_error < 1e-14
    not_proj = ProjectiveCertificate(0.5, np.array([1.0]), depolarize(z, 0.5).array[None], 0.0,
                                     np.array([np.eye(2) / 2] * 2))
    assert not verify_certificate(z, not_proj).passed


def test_statistics_exact_certificate():
    targets, cert = _exact_joint_certificate()
    rep = statistics_check(targets, cert, 100, tol=1e-10, seed=3)
    assert rep.passed and rep.max_error < 1e-10


def test_trivial_certificate_statistics_state_independent():
    a = tetra()
    # Phi_0 of tetra is I/4 each; mix the four deterministic POVMs uniformly
    comps = [KOutcomeComponent((i,), 0.25, np.eye(2)[None]) for i in range(4)]
    cert = KOutcomeCertificate(0.0, 4, 1, comps)
    rhos = random_states(np.random.default_rng(0), 2, 50)
    (p,) = protocol_statistics(cert, 1, rhos)
    assert np.allclose(p, 0.25)
    assert statistics_check(a, cert, 50, 1e-12, seed=1).passed


def test_statistics_flags_wrong_visibility():
    res = k_outcome_robustness(tetra(), 3)
    res.certificate.visibility = 0.5
    assert not statistics_check(tetra(), res.certificate, 50, 1e-6, seed=0).passed


def test_solver_certificates_statistics():
    res = k_outcome_robustness(tetra(), 3)
    rep = statistics_check(tetra(), res.certificate, 1000, 1e-7, seed=11)
    assert rep.passed


def test_random_states_are_states():
    rhos = random_states(np.random.default_rng(5), 3, 10)
    assert np.allclose(np.trace(rhos, axis1=1, axis2=2), 1)
    assert min(np.linalg.eigvalsh(r)[0] for r in rhos) > -1e-12
    purities = np.einsum("sij,sji->s", rhos, rhos).real
    assert np.allclose(purities[:5], 1) and np.all(purities[5:] < 1)


# -- grid oracle ---------------------------------------------------------------

def test_grid_commuting_pair_is_one():
    z = direction([0, 0, 1])
    g = qubit_pair_jm_grid(z, z, 10)
    assert g.t == 1.0 and g.report.passed


def test_grid_known_pairs():
    x, _, z, s = xyz_sigma_set()
    assert qubit_pair_jm_grid(x, z, 50).t >= 0.705
    assert qubit_pair_jm_grid(s, x, 50).t >= 0.74


def test_grid_errors():
    z = direction([0, 0, 1])
    with pytest.raises(ValueError):
        qubit_pair_jm_grid(z, z, 1)
    with pytest.raises(ValueError):
        qubit_pair_jm_grid(tetra(), z, 10)


@given(unit_vectors(), unit_vectors())
@settings(max_examples=10)
def test_grid_brackets_solver(a, b):
    pa, pb = direction(a), direction(b)
    t_star = jm_robustness([pa, pb]).t_star
    g = qubit_pair_jm_grid(pa, pb, 100)
    assert t_star - 0.01 <= g.t <= t_star + 1e-6


def test_grid_biased_pair_brackets_solver():
    rng = np.random.default_rng(8)
    a, b = random_povm(rng, 2), random_povm(rng, 2)
    t_star = jm_robustness([a, b]).t_star
    g = qubit_pair_jm_grid(a, b, 100)
    assert t_star - 0.01 <= g.t <= t_star + 1e-6


# -- monotonicity ---------------------------------------------------------------

def test_identity_processing_keeps_robustness():
    a = xyz_sigma_set()[:3]
    from povmsim.simulability import process_set
    same = process_set(a, np.eye(3), [[PostProcessingMap.identity(2) if k == l else None for l in range(3)]
                                      for k in range(3)])
    assert abs(jm_robustness(same).t_star - jm_robustness(a).t_star) < 1e-7


def test_coarse_graining_to_trivial_gives_one():
    a = xyz_sigma_set()
    from povmsim.simulability import process_set
    const = PostProcessingMap.constant([0.4, 0.6], 2)
    out = process_set(a, np.full((2, 4), 0.25), [[const] * 4] * 2)
    assert jm_robustness(out).t_star == 1.0


def test_monotonicity_report():
    rep = monotonicity_check(xyz_sigma_set(), trials=4, seed=2)
    assert rep.passed and rep.max_error <= 1e-6
    assert len(rep.per_effect_errors[0]) == 4
    json.dumps(rep.to_json())


def test_joint_from_single_certificate_passes(rng):
    b = random_povm(rng, 3)
    qs = [PostProcessingMap(rng.dirichlet(np.ones(2), size=3).T) for _ in range(2)]
    joint = joint_from_single(b, qs)
    targets = [joint.marginal(0), joint.marginal(1)]
    assert verify_certificate(targets, JointCertificate(1.0, joint)).max_error < 1e-12
