"""Command-line entry point: ``tsfrac verify | solve | bounds``.

Exit codes: 0 success, 1 configuration error, 2 numerical failure,
3 verification failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import io
from .config import RunSpec, load_config, node_values
from .errors import DomainError, ResolutionError, ScaleError, SchemaError, SingularKernelError, SolverError, TsfracError
from .fractional import rl_derivative
from .sobolev import SobolevParams, embedding_bounds, holder_modulus, verify_embeddings
from .solver import (
    BvpProblem,
    Power,
    SolverConfig,
    SolverResult,
    WeightedPower,
    assemble,
    default_direction,
    minimize,
    mountain_pass,
    multistart,
)
from .timescale import build_mesh
from .verification import run_properties

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_VERIFY = 0, 1, 2, 3
NUMERIC_ERRORS = (SolverError, DomainError, SingularKernelError, ResolutionError, ArithmeticError)

log = logging.getLogger("tsfrac")


def build_problem(spec: RunSpec, base: Path | None = None) -> BvpProblem:
    mesh = build_mesh(spec.time_scale(base), spec.h_max)
    lam = node_values(spec.lam, mesh.nodes)
    nl = spec.nonlinearity
    if nl.type == "power":
        g = Power(nl.c, nl.mu)
    else:
        g = WeightedPower(node_values(nl.d, mesh.nodes), nl.r)
    return BvpProblem(mesh, spec.alpha, spec.p, spec.beta, spec.rho, lam, g)


def solver_config(spec: RunSpec) -> SolverConfig:
    s = spec.solver
    return SolverConfig(tol_grad=s.tol_grad, max_iter=s.max_iter, path_points=s.path_points)


def run_solve(spec: RunSpec, out: str | None = None, svg: str | None = None, base: Path | None = None) -> tuple[list[SolverResult], list[Path]]:
    problem = build_problem(spec, base)
    model = assemble(problem)
    cfg = solver_config(spec)
    method = spec.solver.method
    if method == "auto":
        method = "mountain_pass" if isinstance(problem.nonlinearity, Power) else "minimize"
    if method == "mountain_pass":
        results = [mountain_pass(model, cfg)]
    elif method == "minimize":
        results = [minimize(model, 0.1 * default_direction(model), cfg)]
    else:
        results = multistart(model, spec.solver.starts, spec.solver.seed, cfg)
        if not results:
            raise SolverError("multistart found no nontrivial converged solution")

    out = out or spec.out or "u.csv"
    svg = svg or spec.svg
    files: list[Path] = []
    mesh = problem.mesh

    def dump(res: SolverResult, path: Path) -> None:
        du = rl_derivative(res.u, problem.alpha).values
        io.write_csv(path, mesh, res.u.values, du)
        files.append(path)

    if method == "multistart":
        stem = Path(out)
        rows = []
        for i, res in enumerate(results):
            path = stem.with_name(f"{stem.stem}_{i:02d}{stem.suffix or '.csv'}")
            dump(res, path)
            rows.append(
                {
                    "solution": str(i),
                    "pair": str(res.pair),
                    "sign": str(res.sign),
                    "energy": res.energy,
                    "grad_norm": res.grad_norm,
                    "classification": res.classification,
                    "file": path.name,
                }
            )
        index = stem.with_name(f"{stem.stem}_index.csv")
        io.write_index(index, rows)
        files.append(index)
    else:
        dump(results[0], Path(out))
    if svg:
        io.write_svg(svg, mesh, results[0].u.values)
        files.append(Path(svg))
    return results, files


def _summary(res: SolverResult, params: SobolevParams) -> str:
    lines = [
        f"method          {res.method}",
        f"status          {res.status}",
        f"iterations      {res.iterations}",
        f"energy          {res.energy!r}",
        f"grad_norm       {res.grad_norm:.3e}",
        f"sup_norm        {float(np.max(np.abs(res.u.values))):.6g}",
        f"classification  {res.classification}",
    ]
    if res.pair is not None:
        lines.append(f"pair            {res.pair} (sign {res.sign:+d})")
    rep = verify_embeddings(res.u, params, check_sup=params.embeds_in_continuous)
    for c in rep.checks:
        lines.append(f"embedding {c.name:<6} {c.lhs:.6g} <= {c.rhs:.6g}  {'ok' if c.passed else 'VIOLATED'}")
    return "\n".join(lines)


def run_bounds(alpha: float, p: float, b: float, a: float = 0.0) -> str:
    params = SobolevParams(alpha, p)
    c = embedding_bounds(params, a, b)
    lines = [f"alpha={alpha:g} p={p:g} a={a:g} b={b:g}"]
    lines.append(f"c_lp   {c.c_lp_shifted!r}")
    if c.c_sup_shifted is None:
        lines.append(f"c_sup  absent: requires alpha > 1/p (alpha={alpha:g}, 1/p={1 / p:g})")
        lines.append("holder absent: requires alpha > 1/p")
    else:
        lines.append(f"c_sup  {c.c_sup_shifted!r}")
        lines.append(f"holder {holder_modulus(params, 1.0)!r}  (unit seminorm, exponent {alpha - 1 / p:g})")
    if a != 0:
        lines.append(f"note: constants use b - a = {b - a:g}; the b-based forms are c_lp={c.c_lp!r} c_sup={c.c_sup!r}")
    return "\n".join(lines)


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tsfrac", description="Fractional calculus on time scales and a Kirchhoff p-Laplacian solver.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    v = sub.add_parser("verify", help="run the invariant suites")
    v.add_argument("--config")
    v.add_argument("--only", action="append", metavar="NAME", help="run only this property (repeatable)")
    s = sub.add_parser("solve", help="solve the boundary value problem")
    s.add_argument("--config", required=True)
    s.add_argument("--out")
    s.add_argument("--svg")
    b = sub.add_parser("bounds", help="print embedding constants")
    b.add_argument("--alpha", type=float, required=True)
    b.add_argument("--p", type=float, required=True)
    b.add_argument("--b", type=float, required=True)
    b.add_argument("--a", type=float, default=0.0)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "verify":
            if args.config:
                load_config(args.config, "verify")
            try:
                outcomes = run_properties(args.only)
            except KeyError as exc:
                raise SchemaError(exc.args[0]) from None
            for o in outcomes:
                print(o.line())
            return EXIT_OK if all(o.passed for o in outcomes) else EXIT_VERIFY
        if args.command == "bounds":
            try:
                print(run_bounds(args.alpha, args.p, args.b, args.a))
            except DomainError as exc:
                raise SchemaError(str(exc)) from None
            return EXIT_OK
        spec = load_config(args.config, "solve")
        results, files = run_solve(spec, args.out, args.svg, Path(args.config).parent)
        params = SobolevParams(spec.alpha, spec.p)
        for res in results:
            print(_summary(res, params))
            print()
        for f in files:
            print(f"wrote {f}")
        return EXIT_OK if all(r.converged for r in results) else EXIT_NUMERIC
    except (SchemaError, ScaleError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NUMERIC_ERRORS as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except TsfracError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
