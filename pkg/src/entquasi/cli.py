"""Command-line interface.

Subcommands operate on JSON documents: a state/operator file holds
``{"dims": [d_a, d_b], "matrix": [[[re, im], ...], ...]}`` and a
decomposition file holds ``{"dims": ..., "terms": [{"weight": w,
"a": [[re, im], ...], "b": ...}, ...]}``.

Exit codes: 0 success (including a definite verdict), 1 failed
verification, 2 malformed or invalid input, 3 inconclusive analysis,
4 solver failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .errors import (
    DimensionMismatch,
    EigensolverFailure,
    EmptySolutionSet,
    MalformedInput,
    NonConvergence,
    NotHermitian,
    NotPSD,
    NotUnitTrace,
)
from .qp_optimize import analyze
from .reconstruct import reconstruct_quasi
from .sep_eigen import SolutionSet, SolverConfig, sep_norm, solve_sep_eigen
from .state_model import (
    assemble,
    decomposition_to_jsonable,
    ket_to_jsonable,
    load_decomposition,
    load_operator,
    load_state,
)
from .verify_oracle import ppt_check, verify_decomposition

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_BAD_INPUT = 2
EXIT_INCONCLUSIVE = 3
EXIT_SOLVER_FAILURE = 4

DEFAULT_SEED = 1729
SEED_ENV_VAR = "ENTQUASI_SEED"


def _resolve_seed(value: int | None) -> int:
    if value is not None:
        return value
    env = os.environ.get(SEED_ENV_VAR)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise MalformedInput(
                f"{SEED_ENV_VAR} must be an integer, got {env!r}"
            ) from None
    return DEFAULT_SEED


def _build_config(args: argparse.Namespace) -> SolverConfig:
    kwargs = {"rng_seed": _resolve_seed(args.seed)}
    if args.restarts is not None:
        kwargs["restarts"] = args.restarts
    if args.family_samples is not None:
        kwargs["family_samples"] = args.family_samples
    if args.include_trivial:
        kwargs["include_trivial"] = True
    try:
        return SolverConfig(**kwargs)
    except ValueError as exc:
        raise MalformedInput(str(exc)) from exc


def _emit(args: argparse.Namespace, payload: dict, text_lines: list[str]) -> None:
    if args.format == "json":
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        for line in text_lines:
            print(line)


def _solution_set_jsonable(sols: SolutionSet) -> dict:
    return {
        "dims": list(sols.dims.as_tuple()),
        "coverage": sols.coverage_flag,
        "restarts_used": sols.restarts_used,
        "solutions": [
            {
                "g": s.g,
                "residual": s.residual,
                "trivial": s.trivial,
                "origin": s.origin,
                "a": ket_to_jsonable(s.state.a),
                "b": ket_to_jsonable(s.state.b),
            }
            for s in sols.solutions
        ],
        "families": [
            {
                "g": f.g,
                "members": list(f.members),
                "representatives": list(f.representatives),
            }
            for f in sols.families
        ],
        "retained": list(sols.retained_indices),
    }


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _cmd_analyze(args: argparse.Namespace) -> int:
    rho = load_state(args.state)
    cfg = _build_config(args)
    report = analyze(rho, cfg, tol_neg=args.tol_neg)
    payload = {
        "dims": list(report.dims.as_tuple()),
        "verdict": report.verdict,
        "path": report.path,
        "min_weight": report.min_weight,
        "reassembly_residual": report.reassembly_residual,
        "gram_residual": report.gram_residual,
        "tol_neg": report.tol_neg,
        "distribution": (
            decomposition_to_jsonable(report.quasi_dist)
            if report.quasi_dist is not None
            else None
        ),
        "n_solutions": len(report.solutions.solutions),
        "n_retained": len(report.solutions.retained_indices),
        "n_families": len(report.solutions.families),
        "notes": list(report.notes),
        "seed": cfg.rng_seed,
        "restarts": cfg.restarts,
    }
    lines = [
        f"verdict: {report.verdict}",
        f"path: {report.path}",
    ]
    if report.quasi_dist is not None:
        lines.append(f"min weight: {report.min_weight:.12g}")
        lines.append(f"reassembly residual: {report.reassembly_residual:.3e}")
        lines.append(f"terms: {len(report.quasi_dist)}")
        for w, s in report.quasi_dist:
            a = np.array2string(s.a.amplitudes, precision=6, suppress_small=True)
            b = np.array2string(s.b.amplitudes, precision=6, suppress_small=True)
            lines.append(f"  {w:+.9f}  a={a}  b={b}")
    for note in report.notes:
        lines.append(f"note: {note}")
    _emit(args, payload, lines)
    if report.verdict == "Inconclusive":
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def _cmd_reconstruct(args: argparse.Namespace) -> int:
    rho = load_state(args.state)
    dist = reconstruct_quasi(rho)
    residual = float(np.max(np.abs(assemble(dist).matrix - rho.matrix)))
    payload = {
        "decomposition": decomposition_to_jsonable(dist),
        "reassembly_residual": residual,
        "total_weight": dist.total_weight,
        "min_weight": dist.min_weight,
    }
    lines = [
        f"terms: {len(dist)}",
        f"total weight: {dist.total_weight:.12g}",
        f"min weight: {dist.min_weight:.12g}",
        f"reassembly residual: {residual:.3e}",
    ]
    for w, s in dist:
        a = np.array2string(s.a.amplitudes, precision=6, suppress_small=True)
        b = np.array2string(s.b.amplitudes, precision=6, suppress_small=True)
        lines.append(f"  {w:+.9f}  a={a}  b={b}")
    _emit(args, payload, lines)
    return EXIT_OK


def _cmd_sep_eigen(args: argparse.Namespace) -> int:
    op = load_operator(args.operator)
    cfg = _build_config(args)
    sols = solve_sep_eigen(op, cfg)
    payload = _solution_set_jsonable(sols)
    lines = [
        f"solutions: {len(sols.solutions)}",
        f"coverage: {sols.coverage_flag}",
        f"restarts used: {sols.restarts_used}",
    ]
    for i, s in enumerate(sols.solutions):
        tag = " trivial" if s.trivial else ""
        a = np.array2string(s.state.a.amplitudes, precision=6, suppress_small=True)
        b = np.array2string(s.state.b.amplitudes, precision=6, suppress_small=True)
        lines.append(f"  [{i}] g={s.g:+.9f} residual={s.residual:.2e}{tag}  a={a}  b={b}")
    for f in sols.families:
        lines.append(
            f"family: g={f.g:+.9f} members={len(f.members)} "
            f"representatives={list(f.representatives)}"
        )
    lines.append(f"retained: {list(sols.retained_indices)}")
    _emit(args, payload, lines)
    return EXIT_OK


def _cmd_norm(args: argparse.Namespace) -> int:
    op = load_operator(args.operator)
    cfg = _build_config(args)
    value = sep_norm(op, cfg)
    _emit(
        args,
        {"dims": list(op.dims.as_tuple()), "sep_norm": value},
        [f"separable operator norm: {value:.12g}"],
    )
    return EXIT_OK


def _cmd_ppt(args: argparse.Namespace) -> int:
    op = load_operator(args.operator)
    report = ppt_check(op)
    payload = {
        "dims": list(report.dims.as_tuple()),
        "min_pt_eigenvalue": report.min_pt_eigenvalue,
        "is_npt": report.is_npt,
        "decisive": report.decisive,
    }
    lines = [
        f"partial transpose minimum eigenvalue: {report.min_pt_eigenvalue:.12g}",
        f"negative partial transpose: {'yes' if report.is_npt else 'no'}",
        f"decisive at these dimensions: {'yes' if report.decisive else 'no'}",
    ]
    _emit(args, payload, lines)
    return EXIT_OK


def _cmd_verify(args: argparse.Namespace) -> int:
    rho = load_state(args.state)
    dist = load_decomposition(args.decomposition)
    if dist.dims != rho.dims:
        raise DimensionMismatch(
            f"decomposition dims {dist.dims.as_tuple()} do not match state "
            f"dims {rho.dims.as_tuple()}"
        )
    residual = verify_decomposition(rho, dist)
    passed = residual <= args.tol
    payload = {
        "dims": list(rho.dims.as_tuple()),
        "residual": residual,
        "passed": passed,
        "total_weight": dist.total_weight,
    }
    lines = [
        f"reassembly residual: {residual:.3e}",
        f"total weight: {dist.total_weight:.12g}",
        f"verification: {'passed' if passed else 'FAILED'}",
    ]
    _emit(args, payload, lines)
    return EXIT_OK if passed else EXIT_VERIFY_FAILED


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="entquasi",
        description=(
            "Quasi-probability decompositions of bipartite states over "
            "product states; negative weights certify entanglement."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--format", choices=("text", "json"), default="text", help="output format"
    )

    solver = argparse.ArgumentParser(add_help=False)
    solver.add_argument("--restarts", type=int, default=None, help="random restarts")
    solver.add_argument(
        "--seed",
        type=int,
        default=None,
        help=f"RNG seed (default: ${SEED_ENV_VAR} or {DEFAULT_SEED})",
    )
    solver.add_argument(
        "--family-samples",
        type=int,
        default=None,
        help="representatives kept per solution family",
    )
    solver.add_argument(
        "--include-trivial",
        action="store_true",
        help="keep solutions with negligible expectation value",
    )

    p = sub.add_parser(
        "analyze",
        parents=[common, solver],
        help="decompose a state and classify it as separable or entangled",
    )
    p.add_argument("state", help="state JSON file")
    p.add_argument(
        "--tol-neg",
        type=float,
        default=1e-7,
        help="negativity below this magnitude counts as zero",
    )
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser(
        "reconstruct",
        parents=[common],
        help="expand a state over its eigensystem's product interferences",
    )
    p.add_argument("state", help="state JSON file")
    p.set_defaults(func=_cmd_reconstruct)

    p = sub.add_parser(
        "sep-eigen",
        parents=[common, solver],
        help="enumerate separability eigenvalue solutions of an operator",
    )
    p.add_argument("operator", help="Hermitian operator JSON file")
    p.set_defaults(func=_cmd_sep_eigen)

    p = sub.add_parser(
        "norm",
        parents=[common, solver],
        help="largest product-state expectation magnitude of an operator",
    )
    p.add_argument("operator", help="Hermitian operator JSON file")
    p.set_defaults(func=_cmd_norm)

    p = sub.add_parser(
        "ppt",
        parents=[common],
        help="partial transpose spectrum check",
    )
    p.add_argument("operator", help="Hermitian operator JSON file")
    p.set_defaults(func=_cmd_ppt)

    p = sub.add_parser(
        "verify",
        parents=[common],
        help="reassemble a decomposition and compare against a state",
    )
    p.add_argument("state", help="state JSON file")
    p.add_argument("decomposition", help="decomposition JSON file")
    p.add_argument("--tol", type=float, default=1e-8, help="entrywise tolerance")
    p.set_defaults(func=_cmd_verify)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (MalformedInput, DimensionMismatch, NotHermitian, NotUnitTrace, NotPSD) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except (EigensolverFailure, NonConvergence, EmptySolutionSet) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER_FAILURE


if __name__ == "__main__":
    sys.exit(main())
