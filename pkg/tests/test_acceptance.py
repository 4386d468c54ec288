"""Acceptance criteria, each at its stated tolerance.

Every test records one PASS/FAIL line; the lines are printed as they happen
(visible with ``-s``) and again in the terminal summary.
"""
import time

import numpy as np
import pytest

from povmsim.oracle import monotonicity_check, qubit_pair_jm_grid, statistics_check, verify_certificate
from povmsim.povm import direction, xyz_sigma_set, random_povm, tetra, trine
from povmsim.sdp import Status
from povmsim.simulability import (
    AssignmentSpec,
    collapse_shared_preprocessing,
    fixed_assignment_program,
    fixed_assignment_robustness,
    is_feasible,
    jm_program,
    jm_robustness,
    k_outcome_program,
    k_outcome_robustness,
    projective_program,
    projective_robustness_qubit,
    subset_compat_profile,
)

LINES: list[str] = []


def report(n: int, ok: bool, detail: str) -> None:
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    LINES.append(line)
    print(line)
    assert ok, line


A = xyz_sigma_set()
THREE_SIM = np.array([[1, 0, 0], [0, 1, 0], [0, 0, 1], [1 / 3, 1 / 3, 1 / 3]])
PARTITION = AssignmentSpec.deterministic([0, 0, 1, 1])


@pytest.fixture(scope="module")
def ladder():
    start = time.perf_counter()
    one = jm_robustness(A)
    triples = subset_compat_profile(A, 3)
    pairs = subset_compat_profile(A, 2)
    elapsed = time.perf_counter() - start
    return {"one": one, "triples": triples, "pairs": pairs, "elapsed": elapsed}


@pytest.fixture(scope="module")
def protocols():
    return {
        "three": fixed_assignment_robustness(A, AssignmentSpec(THREE_SIM)),
        "partition": fixed_assignment_robustness(A, PARTITION),
    }


@pytest.fixture(scope="module")
def hierarchy():
    return {
        "tetra3": k_outcome_robustness(tetra(), 3),
        "trine2": k_outcome_robustness(trine(), 2),
        "tetra2": k_outcome_robustness(tetra(), 2),
        "tetra_proj": projective_robustness_qubit(tetra()),
    }


@pytest.fixture(scope="module")
def random_family():
    rng = np.random.default_rng(1234)
    out = []
    for _ in range(50):
        target = random_povm(rng, int(rng.integers(2, 6)))
        out.append((target, projective_robustness_qubit(target), k_outcome_robustness(target, 2)))
    return out


def test_criterion_1_ladder(ladder):
    t1 = ladder["one"].t_star
    tc, ti = ladder["triples"]["min"], ladder["triples"]["max"]
    pc, pi = ladder["pairs"]["min"], ladder["pairs"]["max"]
    checks = [
        abs(t1 - 0.5730) <= 1e-3,
        abs(tc - 1 / np.sqrt(3)) <= 1e-4,
        abs(ti - 0.6236) <= 1e-3,
        abs(pc - 1 / np.sqrt(2)) <= 1e-4,
        abs(pi - 0.7420) <= 1e-3,
        ladder["elapsed"] < 30,
    ]
    report(1, all(checks), f"t1={t1:.6f} tTC={tc:.6f} tTI={ti:.6f} tPC={pc:.6f} tPI={pi:.6f} "
                           f"time={ladder['elapsed']:.2f}s")


def test_criterion_2_protocols(protocols):
    t3, t2 = protocols["three"].t_star, protocols["partition"].t_star
    ok = abs(t3 - 0.7746) <= 1e-3 and abs(t2 - 0.7071) <= 1e-4
    report(2, ok, f"three simulators={t3:.6f} partition={t2:.6f}")


def test_criterion_3_k_outcome(hierarchy):
    t3, tr2, t2 = (hierarchy[k].t_star for k in ("tetra3", "trine2", "tetra2"))
    product = abs(t3 * tr2 - t2)
    ok = (abs(t3 - 2 * np.sqrt(2) / 3) <= 1e-4 and abs(tr2 - np.sqrt(3) / 2) <= 1e-4
          and abs(t2 - np.sqrt(2 / 3)) <= 1e-4 and product <= 1e-6)
    report(3, ok, f"tetra k=3 {t3:.8f} trine k=2 {tr2:.8f} tetra k=2 {t2:.8f} product gap {product:.2e}")


def test_criterion_4_projective_equals_two_outcome(random_family, hierarchy):
    worst = max(abs(p.t_star - k.t_star) for _, p, k in random_family)
    tp, t2 = hierarchy["tetra_proj"].t_star, hierarchy["tetra2"].t_star
    ok = worst <= 1e-5 and abs(tp - np.sqrt(2 / 3)) <= 1e-4 and abs(t2 - np.sqrt(2 / 3)) <= 1e-4
    report(4, ok, f"max |projective - k=2| over 50 POVMs {worst:.2e}; tetra {tp:.8f} / {t2:.8f}")


def test_criterion_5_certificates(ladder, protocols, hierarchy, random_family):
    certs = [(A, ladder["one"].certificate)]
    certs += [(A, r.certificate) for r in protocols.values()]
    certs += [(tetra() if "tetra" in k else trine(), r.certificate) for k, r in hierarchy.items()]
    for target, p, k in random_family:
        certs += [(target, p.certificate), (target, k.certificate)]
    recon = [verify_certificate(t, c, 1e-7) for t, c in certs]
    stats = [statistics_check(t, c, 1000, 1e-6, seed=i) for i, (t, c) in enumerate(certs)]
    ok = all(r.passed for r in recon) and all(s.passed for s in stats)
    report(5, ok, f"{len(certs)} certificates; max reconstruction {max(r.max_error for r in recon):.2e}, "
                  f"max TVD {max(s.max_error for s in stats):.2e} over 1000 states each")


def test_criterion_6_maximality(ladder, protocols, hierarchy):
    tri, pai = ladder["triples"], ladder["pairs"]
    cases = {
        "t1": jm_program(A, ladder["one"].t_star + 1e-3),
        "tTC": jm_program([A[i] for i in tri["argmin"]], tri["min"] + 1e-3),
        "tTI": jm_program([A[i] for i in tri["argmax"]], tri["max"] + 1e-3),
        "tPC": jm_program([A[i] for i in pai["argmin"]], pai["min"] + 1e-3),
        "tPI": jm_program([A[i] for i in pai["argmax"]], pai["max"] + 1e-3),
        "t3": fixed_assignment_program(A, AssignmentSpec(THREE_SIM), protocols["three"].t_star + 1e-3),
        "t2": fixed_assignment_program(A, PARTITION, protocols["partition"].t_star + 1e-3),
        "tetra3": k_outcome_program(tetra(), 3, hierarchy["tetra3"].t_star + 1e-3),
        "trine2": k_outcome_program(trine(), 2, hierarchy["trine2"].t_star + 1e-3),
        "tetra2": k_outcome_program(tetra(), 2, hierarchy["tetra2"].t_star + 1e-3),
        "tetra_proj": projective_program(tetra(), hierarchy["tetra_proj"].t_star + 1e-3),
    }
    status = {k: is_feasible(p).status for k, p in cases.items()}
    bad = [k for k, s in status.items() if s is not Status.INFEASIBLE]
    report(6, not bad, f"{len(cases) - len(bad)}/{len(cases)} programs infeasible at t*+1e-3"
                       + (f"; not infeasible: {bad}" if bad else ""))


def test_criterion_7_resource_theory():
    mono = monotonicity_check(A, trials=20, seed=7, tol=1e-6)
    errors = []
    for rows in ([1.0, 0.0], [0.5, 0.5], [0.2, 0.3, 0.5]):
        w = np.tile(rows, (len(A), 1))
        res = fixed_assignment_robustness(A, AssignmentSpec(w))
        merged = collapse_shared_preprocessing(res.certificate)
        errors.append(verify_certificate(A, merged, 1e-7).max_error)
    ok = mono.passed and max(errors) <= 1e-7
    report(7, ok, f"monotonicity violations {len(mono.notes)} (largest drop {mono.max_error:.2e}); "
                  f"collapse reconstruction {max(errors):.2e}")


def test_criterion_8_grid_oracle():
    x, z = direction([1, 0, 0]), direction([0, 0, 1])
    t_star = jm_robustness([x, z]).t_star
    g = qubit_pair_jm_grid(x, z, 100)
    ok = t_star - 0.01 <= g.t <= t_star and g.report.passed
    report(8, ok, f"grid {g.t:.6f} within [{t_star - 0.01:.6f}, {t_star:.6f}]")
