"""Command-line interface: ``histentropy {validate,entropy,minimize,split} FILE``.

Exit codes: 0 ok, 1 parse/usage error, 2 validation failure, 3 inconsistent
window, 4 strategy incompatible with the problem, 5 bad input matrix.
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .decoherence import (
    DecoherenceOperator,
    ExplicitDecoherence,
    InconsistentWindowError,
    axiom_residuals,
    diagonal_values,
    impurity_operator,
    impurity_split,
    validate,
)
from .entropy import entropy_report, nats_to_bits
from .histories import (
    Window,
    coarse_grainings,
    homogeneous_window,
    standard_basis_window,
    trivial_window,
)
from .linalg import random_projector
from .problem import (
    ParseError,
    ProblemSpec,
    build_decoherence,
    build_window,
    decode_matrix,
    encode_matrix,
    load_problem,
)
from .search import (
    StrategyError,
    minimize_exhaustive,
    minimize_greedy_refinement,
    minimize_parametrized_1d,
    minimize_spectral,
)

EXIT_OK, EXIT_PARSE, EXIT_VALIDATION, EXIT_INCONSISTENT, EXIT_STRATEGY, EXIT_MATRIX = range(6)


class CliError(Exception):
    def __init__(self, code: int, message: str, report: dict | None = None):
        super().__init__(message)
        self.code = code
        self.report = report


def _base_report(command: str, args, spec: ProblemSpec) -> dict:
    return {
        "command": command,
        "args": _echo_args(args),
        "problem": {"kind": spec.kind, "dim_h": spec.dim_h, "n_times": spec.n_times,
                    "dim_v": spec.dim_v, "digest": spec.digest()},
        "version": __version__,
        "generated_at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }


def _echo_args(args) -> dict:
    skip = {"func"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _emit(report: dict, out: str | None) -> None:
    text = json.dumps(report, indent=2) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _load(args) -> ProblemSpec:
    spec = load_problem(args.file)
    if args.tol is not None:
        spec.tolerance = args.tol
    if args.seed is not None:
        spec.seed = args.seed
    return spec


def _build(spec: ProblemSpec):
    try:
        return build_decoherence(spec)
    except ValueError as exc:
        raise CliError(EXIT_MATRIX, str(exc)) from None


def _windows(spec: ProblemSpec) -> dict:
    out = {}
    for name in spec.windows:
        try:
            out[name] = build_window(spec, name)
        except ValueError as exc:
            raise CliError(EXIT_MATRIX, f"window {name!r}: {exc}") from None
    return out


# -- validate ------------------------------------------------------------------


def cmd_validate(args) -> int:
    spec = _load(args)
    d = _build(spec)
    report = _base_report("validate", args, spec)
    windows = _windows(spec)
    if isinstance(d, ExplicitDecoherence):
        v = validate(d.operator, args.sample_count, spec.tolerance, spec.seed, list(windows.values()))
        report["validation"] = v.as_dict()
        passed = v.passed
        if spec.kind == "single_time":
            report["bridge_residual"] = _single_time_bridge(d, spec, args.sample_count)
    else:
        res = axiom_residuals(d, args.sample_count, spec.seed)
        passed = (
            res["normalization"] <= spec.tolerance
            and res["hermiticity"] <= spec.tolerance
            and res["additivity"] <= spec.tolerance
            and res["min_diagonal"] >= -spec.tolerance
        )
        report["validation"] = {"passed": passed, "sampled_axioms": res, "tol": spec.tolerance}
        if not passed:
            report["validation"]["failures"] = [
                k for k in ("normalization", "hermiticity", "additivity")
                if res[k] > spec.tolerance
            ] + (["diagonal_positivity"] if res["min_diagonal"] < -spec.tolerance else [])
    _emit(report, args.out)
    return EXIT_OK if passed else EXIT_VALIDATION


def _single_time_bridge(d, spec: ProblemSpec, samples: int) -> float:
    """Worst ``|tr((P (x) Q) X) - tr(P rho Q)|`` over random projector pairs."""
    rng = np.random.default_rng(spec.seed)
    n = spec.dim_h
    worst = 0.0
    for _ in range(samples):
        p = random_projector(n, int(rng.integers(0, n + 1)), rng)
        q = random_projector(n, int(rng.integers(0, n + 1)), rng)
        worst = max(worst, abs(d(p, q) - np.trace(p @ spec.rho @ q)))
    return float(worst)


# -- entropy -------------------------------------------------------------------


def cmd_entropy(args) -> int:
    spec = _load(args)
    d = _build(spec)
    report = _base_report("entropy", args, spec)
    if args.window in spec.windows:
        w = _windows(spec)[args.window]
    elif args.window == "trivial":
        w = trivial_window(spec.dim_v) if isinstance(d, ExplicitDecoherence) else _chain_trivial(d)
    else:
        raise CliError(EXIT_PARSE, f"no window named {args.window!r} (have {sorted(spec.windows)})")
    report["window"] = args.window
    try:
        er = entropy_report(d, w, xs=args.x or (), tol=spec.tolerance)
    except InconsistentWindowError as exc:
        report["entropy"] = {"consistent": False, "consistency_residual": exc.residual}
        raise CliError(EXIT_INCONSISTENT, str(exc), report) from None
    report["entropy"] = er.as_dict(bits=args.bits)
    _emit(report, args.out)
    return EXIT_OK


def _chain_trivial(d):
    return Window((d.identity(),))


# -- minimize ------------------------------------------------------------------


def cmd_minimize(args) -> int:
    spec = _load(args)
    d = _build(spec)
    report = _base_report("minimize", args, spec)
    tol = spec.tolerance
    try:
        if args.strategy == "spectral":
            result = minimize_spectral(d, tol)
        elif args.strategy == "param1d":
            budget = args.budget or 64
            result = minimize_parametrized_1d(d, samples=budget, seed=spec.seed, tol=tol)
        elif args.strategy == "greedy":
            result = minimize_greedy_refinement(
                d, max_rounds=args.budget or 64, seed=spec.seed, tol=tol
            )
        else:
            result = minimize_exhaustive(d, _exhaustive_family(d, spec), tol)
    except StrategyError as exc:
        raise CliError(EXIT_STRATEGY, str(exc)) from None
    report["search"] = result.as_dict()
    report["search"]["best_window"] = [encode_matrix(b.matrix) for b in result.best_window]
    if args.bits:
        report["search"]["best_value_bits"] = nats_to_bits(result.best_value)
    _emit(report, args.out)
    return EXIT_OK


def _exhaustive_family(d, spec: ProblemSpec) -> list:
    windows = list(_windows(spec).values())
    if not windows:
        if isinstance(d, ExplicitDecoherence):
            windows = [standard_basis_window(spec.dim_v)]
        else:
            basis = [np.diag(np.eye(spec.dim_h)[k]).astype(complex) for k in range(spec.dim_h)]
            windows = [homogeneous_window([basis] * spec.n_times)]
    family = []
    for w in windows:
        if len(w) > 8:
            raise StrategyError(f"exhaustive family: window with {len(w)} blocks is too large")
        family.extend(coarse_grainings(w))
    return family


# -- split ---------------------------------------------------------------------


def _load_matrix(path: str) -> np.ndarray:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read matrix file {path}: {exc}") from None
    if isinstance(doc, dict):
        doc = doc.get("matrix")
    return decode_matrix(doc, path)


def cmd_split(args) -> int:
    spec = _load(args)
    if spec.kind != "explicit_x":
        raise CliError(EXIT_PARSE, "split needs an explicit_x problem")
    s1, s2 = _load_matrix(args.s1), _load_matrix(args.s2)
    x = DecoherenceOperator(spec.x)
    try:
        plus, minus = impurity_split(x, s1, s2, spec.tolerance)
        y = impurity_operator(s1, s2, spec.tolerance)
    except ValueError as exc:
        raise CliError(EXIT_MATRIX, str(exc)) from None

    rng = np.random.default_rng(spec.seed)
    n = x.dim_v
    probes = np.array([
        random_projector(n, r, rng) for r in range(1, n + 1) for _ in range(args.sample_count)
    ])
    y_max = float(np.max(np.abs(diagonal_values(y, probes))))
    recon = 0.5 * plus.x + 0.5 * minus.x
    report = _base_report("split", args, spec)

    stem = Path(args.file).with_suffix("")
    outputs = {}
    for label, op, target in (("plus", plus, args.plus), ("minus", minus, args.minus)):
        path = Path(target) if target else stem.with_name(f"{stem.name}.{label}.json")
        half = ProblemSpec(kind="explicit_x", dim_h=spec.dim_h, n_times=spec.n_times, x=np.array(op.x),
                           windows=spec.windows, tolerance=spec.tolerance, seed=spec.seed)
        path.write_text(half.dumps())
        v = validate(op, args.sample_count, spec.tolerance, spec.seed)
        outputs[label] = {"path": str(path), "validation": v.as_dict()}
    report["split"] = {
        "reconstruction_residual": float(np.max(np.abs(recon - x.x))),
        "y_diagonal_max": y_max,
        "outputs": outputs,
    }
    _emit(report, args.out)
    return EXIT_OK


# -- entry point ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("file", help="problem file (JSON)")
    common.add_argument("--tol", type=float, default=None, help="override the file's tolerance")
    common.add_argument("--seed", type=int, default=None, help="override the file's seed")
    common.add_argument("--sample-count", type=int, default=200, help="random projectors per rank")
    common.add_argument("--bits", action="store_true", help="also report entropies in bits")
    common.add_argument("--out", default=None, help="write the report here instead of stdout")

    parser = argparse.ArgumentParser(prog="histentropy", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", parents=[common], help="check decoherence-operator conditions")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("entropy", parents=[common], help="entropy of a named window")
    p.add_argument("--window", default="trivial")
    p.add_argument("--x", type=float, action="append", help="extra exponent for i_x (repeatable)")
    p.set_defaults(func=cmd_entropy)

    p = sub.add_parser("minimize", parents=[common], help="search for I_d")
    p.add_argument("--strategy", choices=["spectral", "param1d", "greedy", "exhaustive"], default="spectral")
    p.add_argument("--budget", type=int, default=None, help="samples (param1d) or rounds (greedy)")
    p.set_defaults(func=cmd_minimize)

    p = sub.add_parser("split", parents=[common], help="split X into X+Y and X-Y")
    p.add_argument("--s1", required=True, help="matrix file for s1")
    p.add_argument("--s2", required=True, help="matrix file for s2")
    p.add_argument("--plus", default=None, help="output path for X+Y")
    p.add_argument("--minus", default=None, help="output path for X-Y")
    p.set_defaults(func=cmd_split)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except CliError as exc:
        if exc.report is not None:
            _emit(exc.report, args.out)
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
