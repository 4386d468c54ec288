"""Command-line front end.

Exit codes: 0 success, 1 malformed input, 2 solver failure, 3 verification failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import oracle
from .povm import Povm, parse_spec
from .sdp import MalformedProblem, Settings
from .simulability import (
    AssignmentSpec,
    SolverFailure,
    certificate_from_json,
    fixed_assignment_robustness,
    jm_robustness,
    k_outcome_robustness,
    projective_robustness_qubit,
    subset_compat_profile,
)

EXIT_MALFORMED, EXIT_SOLVER, EXIT_VERIFY = 1, 2, 3


class InputError(Exception):
    pass


class VerificationFailed(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise InputError(message)


def _num(x: float) -> float:
    return float(f"{float(x):.12g}")


def dumps(obj) -> str:
    """Deterministic JSON: sorted keys, floats at 12 significant digits."""
    def clean(o):
        if isinstance(o, dict):
            return {str(k): clean(v) for k, v in o.items()}
        if isinstance(o, (list, tuple)):
            return [clean(v) for v in o]
        if isinstance(o, (float, np.floating)):
            return _num(o) if math.isfinite(o) else str(o)
        if isinstance(o, np.integer):
            return int(o)
        if isinstance(o, np.bool_):
            return bool(o)
        return o
    return json.dumps(clean(obj), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def load_targets(spec: str) -> list[Povm]:
    """Named spec (``tetra``, ``xyz-sigma``, ``pauli-x+pauli-z``...) or a JSON file of POVMs."""
    path = Path(spec)
    try:
        if path.suffix == ".json" or path.exists():
            obj = json.loads(path.read_text(encoding="utf-8"))
            items = obj if isinstance(obj, list) else obj.get("povms", [obj])
            return [Povm.from_json(o) for o in items]
        out = parse_spec(spec)
    except FileNotFoundError:
        raise InputError(f"no such file: {spec}")
    except (KeyError, ValueError, TypeError) as exc:
        raise InputError(f"cannot read measurement {spec!r}: {exc}")
    return out if isinstance(out, list) else [out]


def load_single(spec: str) -> Povm:
    targets = load_targets(spec)
    if len(targets) != 1:
        raise InputError(f"{spec!r} names {len(targets)} measurements, expected one")
    return targets[0]


def load_assignment(path: str, m: int) -> AssignmentSpec:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
        w = np.array(obj["weights"], dtype=float)
        j = int(obj.get("simulators", w.shape[1] if w.ndim == 2 else 0))
    except FileNotFoundError:
        raise InputError(f"no such file: {path}")
    except (KeyError, ValueError, TypeError, json.JSONDecodeError) as exc:
        raise InputError(f"malformed assignment file {path}: {exc}")
    if w.shape != (m, j):
        raise InputError(f"assignment weights have shape {w.shape}, expected ({m}, {j})")
    try:
        return AssignmentSpec(w)
    except ValueError as exc:
        raise InputError(str(exc))


def references() -> list[dict]:
    text = resources.files("povmsim").joinpath("data/references.json").read_text(encoding="utf-8")
    return json.loads(text)["entries"]


def _settings(args) -> Settings:
    return Settings(verbose=getattr(args, "verbose", False))


def _checked(targets, result, tol: float) -> dict:
    report = oracle.verify_certificate(targets, result.certificate, tol)
    if not report.passed:
        raise VerificationFailed(f"emitted certificate failed verification: {report.notes}")
    return {"t_star": result.t_star, "certificate": result.certificate.to_json(), "verification": report.to_json()}


def _emit(args, payload: dict, human: str, files: dict[str, str] | None = None) -> None:
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{payload['analysis']}.json").write_text(dumps(payload), encoding="utf-8")
        for name, text in (files or {}).items():
            (out / name).write_text(text, encoding="utf-8")
    sys.stdout.write(dumps(payload) if args.json else human + "\n")


# -- subcommands ---------------------------------------------------------------

def cmd_jm(args) -> int:
    targets = load_targets(args.set)
    res = jm_robustness(targets, _settings(args))
    payload = {"analysis": "jm", "targets": args.set, **_checked(targets, res, args.tol)}
    _emit(args, payload, f"t* = {res.t_star:.10f}")
    return 0


def cmd_profile(args) -> int:
    targets = load_targets(args.set)
    prof = subset_compat_profile(targets, args.size, _settings(args))
    rows = [{"subset": list(s), "t_star": v} for s, v in prof["values"].items()]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["subset", "t_star"])
    for r in rows:
        w.writerow([" ".join(map(str, r["subset"])), f"{r['t_star']:.12g}"])
    payload = {"analysis": "profile", "targets": args.set, "size": args.size, "subsets": rows,
               "min": prof["min"], "argmin": list(prof["argmin"]), "max": prof["max"], "argmax": list(prof["argmax"])}
    human = buf.getvalue() + f"min = {prof['min']:.10f} at {prof['argmin']}\nmax = {prof['max']:.10f} at {prof['argmax']}"
    _emit(args, payload, human, {"profile.csv": buf.getvalue()})
    return 0


def cmd_k_outcome(args) -> int:
    target = load_single(args.povm)
    if not 1 <= args.k <= target.n:
        raise InputError(f"k must lie in [1, {target.n}]")
    res = k_outcome_robustness(target, args.k, _settings(args))
    payload = {"analysis": "k-outcome", "povm": args.povm, "k": args.k, **_checked([target], res, args.tol)}
    _emit(args, payload, f"t* = {res.t_star:.10f} with {len(res.certificate.components)} components")
    return 0


def cmd_projective(args) -> int:
    target = load_single(args.povm)
    if target.dim != 2:
        raise InputError("projective simulability is only available for qubits")
    res = projective_robustness_qubit(target, _settings(args))
    payload = {"analysis": "projective", "povm": args.povm, **_checked([target], res, args.tol)}
    _emit(args, payload, f"t* = {res.t_star:.10f} with {len(res.certificate.weights)} projective components")
    return 0


def cmd_fixed_assignment(args) -> int:
    targets = load_targets(args.set)
    spec = load_assignment(args.assign, len(targets))
    res = fixed_assignment_robustness(targets, spec, _settings(args))
    payload = {"analysis": "fixed-assignment", "targets": args.set, "weights": spec.weights.tolist(),
               **_checked(targets, res, args.tol)}
    _emit(args, payload, f"t* = {res.t_star:.10f}")
    return 0


def cmd_verify(args) -> int:
    targets = load_targets(args.target)
    try:
        obj = json.loads(Path(args.cert).read_text(encoding="utf-8"))
        # whole output files of the other subcommands are accepted too
        cert = certificate_from_json(obj.get("certificate", obj))
    except FileNotFoundError:
        raise InputError(f"no such file: {args.cert}")
    except (KeyError, ValueError, TypeError) as exc:
        raise InputError(f"malformed certificate {args.cert}: {exc}")
    try:
        recon = oracle.verify_certificate(targets, cert, args.tol)
        stats = oracle.statistics_check(targets, cert, args.states, 10 * args.tol, args.seed)
    except (ValueError, TypeError) as exc:
        raise InputError(str(exc))
    payload = {"analysis": "verify", "reconstruction": recon.to_json(), "statistics": stats.to_json(),
               "passed": recon.passed and stats.passed}
    human = (f"reconstruction: {'pass' if recon.passed else 'FAIL'} (max error {recon.max_error:.3g})\n"
             f"statistics:     {'pass' if stats.passed else 'FAIL'} (max TVD {stats.max_error:.3g} over {args.states} states)")
    _emit(args, payload, human)
    return 0 if payload["passed"] else EXIT_VERIFY


def compute_reference(entry_id: str, settings: Settings | None = None) -> float:
    from .povm import named, tetra, trine

    a = named("xyz-sigma")
    if entry_id == "t_1-POVM":
        return jm_robustness(a, settings).t_star
    if entry_id in ("t_TC", "t_TI"):
        prof = subset_compat_profile(a, 3, settings)
        return prof["min"] if entry_id == "t_TC" else prof["max"]
    if entry_id == "t_PI":
        return subset_compat_profile(a, 2, settings)["max"]
    if entry_id == "t_2-POVM":
        return fixed_assignment_robustness(a, AssignmentSpec.deterministic([0, 0, 1, 1]), settings).t_star
    if entry_id == "t_3-POVM":
        w = np.array([[1, 0, 0], [0, 1, 0], [0, 0, 1], [1 / 3, 1 / 3, 1 / 3]])
        return fixed_assignment_robustness(a, AssignmentSpec(w), settings).t_star
    if entry_id == "tetra_k3":
        return k_outcome_robustness(tetra(), 3, settings).t_star
    if entry_id == "trine_k2":
        return k_outcome_robustness(trine(), 2, settings).t_star
    if entry_id == "tetra_k2":
        k2 = k_outcome_robustness(tetra(), 2, settings).t_star
        proj = projective_robustness_qubit(tetra(), settings).t_star
        if abs(k2 - proj) > 1e-5:
            raise SolverFailure(f"2-outcome ({k2}) and projective ({proj}) robustness of tetra disagree")
        return k2
    raise KeyError(entry_id)


def reproduce(only: str | None = None, settings: Settings | None = None) -> list[dict]:
    rows = []
    for e in references():
        if only and e["group"] != only:
            continue
        val = compute_reference(e["id"], settings)
        delta = val - e["reference"]
        rows.append({"id": e["id"], "quantity": e["quantity"], "computed": val, "reference": e["reference"],
                     "delta": delta, "tolerance": e["tolerance"], "provenance": e["provenance"],
                     "ok": abs(delta) <= e["tolerance"]})
    return rows


def cmd_reproduce(args) -> int:
    rows = reproduce(args.only, _settings(args))
    lines = [f"{'id':<10} {'computed':>13} {'reference':>13} {'delta':>10}  status"]
    for r in rows:
        lines.append(f"{r['id']:<10} {r['computed']:>13.10f} {r['reference']:>13.10f} {r['delta']:>10.2e}  "
                     + ("ok" if r["ok"] else "MISS"))
    payload = {"analysis": "reproduce", "entries": rows, "passed": all(r["ok"] for r in rows)}
    _emit(args, payload, "\n".join(lines))
    return 0 if payload["passed"] else EXIT_VERIFY


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--tol", type=float, default=1e-7, help="verification tolerance")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--json", action="store_true", help="print machine-readable JSON")
    common.add_argument("--out", help="directory for JSON/CSV artifacts")
    common.add_argument("--verbose", action="store_true")

    p = _Parser(prog="povmsim", description="White-noise robustness of quantum measurements under simulation.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("jm", parents=[common], help="joint-measurability robustness of a set")
    s.add_argument("--set", required=True)
    s.set_defaults(func=cmd_jm)

    s = sub.add_parser("profile", parents=[common], help="robustness of every subset of a given size")
    s.add_argument("--set", required=True)
    s.add_argument("--size", type=int, required=True)
    s.set_defaults(func=cmd_profile)

    s = sub.add_parser("k-outcome", parents=[common], help="k-outcome simulability robustness")
    s.add_argument("--povm", required=True)
    s.add_argument("--k", type=int, required=True)
    s.set_defaults(func=cmd_k_outcome)

    s = sub.add_parser("projective", parents=[common], help="projective simulability robustness (qubits)")
    s.add_argument("--povm", required=True)
    s.set_defaults(func=cmd_projective)

    s = sub.add_parser("fixed-assignment", parents=[common], help="robustness for a fixed pre-processing")
    s.add_argument("--set", required=True)
    s.add_argument("--assign", required=True, help='JSON file {"simulators": J, "weights": [[...], ...]}')
    s.set_defaults(func=cmd_fixed_assignment)

    s = sub.add_parser("verify", parents=[common], help="check a certificate without the solver")
    s.add_argument("--target", required=True)
    s.add_argument("--cert", required=True)
    s.add_argument("--states", type=int, default=1000)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("reproduce", aliases=["reproduce-paper"], parents=[common],
                       help="recompute the reference visibility table")
    s.add_argument("--only", choices=["ladder", "tetra"])
    s.set_defaults(func=cmd_reproduce)
    return p


def run(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except (InputError, MalformedProblem) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MALFORMED
    except SolverFailure as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except VerificationFailed as exc:
        print(f"verification failure: {exc}", file=sys.stderr)
        return EXIT_VERIFY


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
