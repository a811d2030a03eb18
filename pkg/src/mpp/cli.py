"""Command-line entry point ``mpp``.

Subcommands: ``solve``, ``partial``, ``robust``, ``check-equality`` and
``simulate``.  Exit codes: 0 success, 2 invalid input, 3 solver failure,
4 slice cap exceeded, 5 violated precondition.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from pathlib import Path

import numpy as np

from mpp import __version__
from mpp.errors import (
    CapExceeded,
    EpsilonTooLarge,
    InvalidInstance,
    InvalidMechanism,
    MppError,
    PreconditionError,
    SolverError,
)
from mpp.io import BUNDLED_INSTANCES, bundled_instance_path, load_instance, load_mechanism, to_jsonable, write_json

EXIT_INPUT = 2
EXIT_SOLVER = 3
EXIT_CAP = 4
EXIT_PRECONDITION = 5


def exit_code(exc: BaseException) -> int:
    if isinstance(exc, (InvalidInstance, InvalidMechanism, ValueError)):
        return EXIT_INPUT
    if isinstance(exc, CapExceeded):
        return EXIT_CAP
    if isinstance(exc, PreconditionError):
        return EXIT_PRECONDITION
    if isinstance(exc, (SolverError, MppError)):
        return EXIT_SOLVER
    raise exc


def parse_memory(text: str) -> list[int]:
    """``"3"`` -> ``[3]`` and ``"0..4"`` -> ``[0, 1, 2, 3, 4]``."""
    try:
        if ".." in text:
            lo, hi = (int(p) for p in text.split("..", 1))
            values = list(range(lo, hi + 1))
        else:
            values = [int(text)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid memory {text!r}; use K or A..B") from None
    if not values or min(values) < 0:
        raise argparse.ArgumentTypeError(f"invalid memory range {text!r}")
    return values


def resolve_instance(path: str):
    """Load ``path``; a missing file named after a bundled instance uses the bundled copy."""
    p = Path(path)
    if not p.exists() and p.stem in BUNDLED_INSTANCES:
        print(f"note: {path} not found, using the bundled {p.stem} instance", file=sys.stderr)
        p = bundled_instance_path(p.stem)
    return load_instance(p)


def _out_dir(args) -> Path | None:
    if args.out is None:
        return None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _format_table(table: np.ndarray) -> str:
    return "\n".join("  " + " ".join(f"{v:.6f}" for v in row) for row in table)


# -----------------------------------------------------------------------------
# commands
# -----------------------------------------------------------------------------


def cmd_solve(args) -> int:
    from mpp.benchmark import solve_benchmark
    from mpp.core import check_persuasive

    inst = resolve_instance(args.instance)
    sol = solve_benchmark(inst, args.model)
    check = check_persuasive(inst, sol.mechanism, args.model, tol=args.tol)
    if not check.ok:
        raise SolverError(f"extracted mechanism violates obedience by {check.max_violation:.3g}")
    print(f"OPT = {sol.value:.6f}")
    print(f"model: {sol.model}   memory: {sol.mechanism.memory}")
    if sol.mechanism.memory == 0:
        print("mechanism (rows: state, columns: recommended action):")
        print(_format_table(sol.mechanism.table[0]))
    else:
        print("mechanism (rows: previous pair x state, columns: recommended action):")
        print(_format_table(sol.mechanism.table.reshape(-1, inst.n_actions)))
    out = _out_dir(args)
    if out is not None:
        path = out / f"{sol.model}.json"
        write_json(
            path,
            {
                "model": sol.model,
                "value": sol.value,
                "mechanism": sol.mechanism,
                "invariant_pairs": sol.invariant.pairs(),
                "posteriors": {str(k): v for k, v in sol.posteriors.items()},
            },
        )
        print(f"wrote {path}", file=sys.stderr)
    return 0


PARTIAL_COLUMNS = ("lag", "memory", "value", "starts", "best_start", "best_label")


def cmd_partial(args) -> int:
    from mpp.partial import solve_memory_sweep

    if args.lag < 1:
        raise ValueError("--lag must be at least 1")
    inst = resolve_instance(args.instance)
    solutions = solve_memory_sweep(inst, args.lag, args.memory, n_starts=args.starts, seed=args.seed)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(PARTIAL_COLUMNS)
    for sol in solutions:
        writer.writerow([sol.lag, sol.memory, f"{sol.value:.6f}", sol.n_starts, sol.best_start, sol.best_label])
        print(f"lag {sol.lag} memory {sol.memory}: {sol.wall_time:.1f}s", file=sys.stderr)
    text = buf.getvalue()
    sys.stdout.write(text)
    out = _out_dir(args)
    if out is not None:
        (out / "partial.csv").write_text(text)
        for sol in solutions:
            write_json(
                out / f"partial-lag{sol.lag}-memory{sol.memory}.json",
                {
                    "lag": sol.lag,
                    "memory": sol.memory,
                    "value": sol.value,
                    "best_start": sol.best_start,
                    "best_label": sol.best_label,
                    "max_violation": sol.max_violation,
                    "wall_time": sol.wall_time,
                    "mechanism": sol.mechanism,
                },
            )
    return 0


def cmd_robust(args) -> int:
    from mpp.robust import build_robust_mechanism, persuasive_lag, verify_robust

    inst = resolve_instance(args.instance)
    try:
        cert = build_robust_mechanism(inst, args.epsilon)
    except EpsilonTooLarge as exc:
        print(f"error: {exc}", file=sys.stderr)
        print(f"admissible threshold: {exc.threshold:.6g}")
        return EXIT_PRECONDITION
    verdict = verify_robust(inst, cert, n_samples=args.verify_samples, seed=args.seed, tol=args.tol)
    report = {"certificate": cert.to_dict(), "mechanism": cert.mechanism}
    report["verification"] = {
        "analytic_ok": verdict.analytic_ok,
        "sampled_ok": verdict.sampled_ok,
        "worst_margin": verdict.worst_margin,
        "violations": verdict.violations,
        "samples": verdict.n_samples,
        "max_posterior_shift": verdict.max_shift,
    }
    if cert.epsilon > 0:
        lags = persuasive_lag(inst, cert)
        report["lag"] = {"exact": lags.exact, "spectral": lags.spectral, "lagged_check": lags.checked}
    else:
        report["lag"] = None
    text = json.dumps(to_jsonable(report), indent=2)
    print(text)
    print(
        f"payoff = {cert.payoff:.6f}  lower bound = {cert.payoff_lower_bound:.6f}  "
        f"sharper bound = {cert.sharper_lower_bound:.6f}  analytic_ok = {verdict.analytic_ok}  "
        f"sampled_ok = {verdict.sampled_ok}",
        file=sys.stderr,
    )
    out = _out_dir(args)
    if out is not None:
        (out / "robust.json").write_text(text + "\n")
    return 0


def cmd_check_equality(args) -> int:
    from mpp.benchmark import check_equality_condition, solve_benchmark

    inst = resolve_instance(args.instance)
    result = check_equality_condition(inst)
    line = result.describe()
    if result.holds:
        full = solve_benchmark(inst, "full")
        line = f"holds; OPT(no)={result.value_no:.6f} OPT(full)={full.value:.6f}"
    elif result.failing_clause:
        line += f" (failing clause: {result.failing_clause})"
    print(line)
    out = _out_dir(args)
    if out is not None:
        write_json(
            out / "equality.json",
            {
                "holds": result.holds,
                "failing_clause": result.failing_clause,
                "failing_pairs": list(result.failing_pairs),
                "beliefs": {str(k): v for k, v in result.beliefs.items()},
                "singular_values": result.singular_values,
                "value_no": result.value_no,
                "witness": result.witness,
            },
        )
    return 0


def cmd_simulate(args) -> int:
    from mpp.core.instance import check_compatible
    from mpp.sim import simulate, summaries_to_csv

    inst = resolve_instance(args.instance)
    sigma = load_mechanism(args.mechanism)
    try:
        check_compatible(inst, sigma)
    except ValueError as exc:
        raise InvalidMechanism(str(exc)) from exc
    behavior = "follow" if args.model is None else ("best_respond", args.model)
    traj = simulate(inst, sigma, args.T, seed=args.seed, behavior=behavior)
    text = summaries_to_csv([traj])
    sys.stdout.write(text)
    out = _out_dir(args)
    if out is not None:
        (out / "simulation.csv").write_text(text)
    return 0


# -----------------------------------------------------------------------------
# parser
# -----------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mpp", description="Markov persuasion solvers and checkers.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, tol=1e-9):
        p.add_argument("instance", help="instance JSON file")
        p.add_argument("--out", help="directory for result files")
        if tol is not None:
            p.add_argument("--tol", type=float, default=tol, help="obedience tolerance (default %(default)g)")

    p = sub.add_parser("solve", help="solve the no-history or full-history benchmark")
    p.add_argument("--model", choices=("no", "full"), default="no")
    common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("partial", help="lagged-information problem with bounded memory")
    p.add_argument("--lag", type=int, default=1)
    p.add_argument("--memory", type=parse_memory, default=[0], help="K or a range A..B")
    p.add_argument("--starts", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    common(p, tol=None)
    p.set_defaults(func=cmd_partial)

    p = sub.add_parser("robust", help="robustly persuasive history-independent mechanism")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--verify-samples", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    common(p)
    p.set_defaults(func=cmd_robust)

    p = sub.add_parser("check-equality", help="test the condition for equal no/full optima")
    common(p, tol=None)
    p.set_defaults(func=cmd_check_equality)

    p = sub.add_parser("simulate", help="simulate a mechanism")
    p.add_argument("--mechanism", required=True, help="mechanism JSON (as written by solve --out)")
    p.add_argument("-T", type=int, default=100_000, help="number of periods")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--model", default=None, help="best-respond under this model (no, full, lag(L)); default follow")
    common(p, tol=None)
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    t0 = time.perf_counter()
    try:
        code = args.func(args)
    except (MppError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exit_code(exc)
    if args.command != "partial":
        print(f"done in {time.perf_counter() - t0:.2f}s", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
