"""Command-line entry point: ``conslaw-kit <subcommand> ...``.

Exit codes: 0 on success, 1 when a verification fails, 2 for usage and
parse errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .conslaw import conserved_vector, simplify_density, verify_divergence
from .corpus import load_generator, load_system, load_vector, parse_substitution, run_all
from .diffalg import DiffAlgError, DiffPoly
from .numeric import NumericError
from .parser import ParseError, parse_expression, render, render_latex, render_plain, system_context
from .selfadjoint import adjoint_system, check_selfadjointness, formal_lagrangian
from .symmetry import check_symmetry

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

DENSITIES = {"mass": "u", "l2": "(1/2)*u^2"}


class UsageError(Exception):
    pass


def _fmt(p: DiffPoly, fmt: str, indep) -> str:
    return render_latex(p, indep) if fmt == "latex" else render_plain(p, indep)


def _emit(rows, fmt: str, indep, out):
    """Print ``(label, poly)`` rows as ``label = expr`` lines or one JSON object."""
    if fmt == "json":
        out.write(json.dumps({label: render_plain(p, indep) for label, p in rows}, indent=2) + "\n")
    else:
        for label, p in rows:
            out.write(f"{label} = {_fmt(p, fmt, indep)}\n")


# --------------------------------------------------------------------------
# subcommands


def cmd_adjoint(args, out) -> int:
    system = load_system(args.system)
    lag = formal_lagrangian(system)
    adj = adjoint_system(lag)
    indep = system.convention.independent
    rows = [("L", lag.lagrangian)] + [(f"E{i + 1}", eq) for i, eq in enumerate(adj.oriented)]
    _emit(rows, args.format, indep, out)
    return EXIT_OK


def cmd_selfcheck(args, out) -> int:
    system = load_system(args.system)
    lag = formal_lagrangian(system)
    rule = parse_substitution(args.subst, system_context(system, lag.adjoint_names))
    rep = check_selfadjointness(system, rule, lag)
    indep = system.convention.independent
    if args.format == "json":
        out.write(json.dumps({
            "self_adjoint": rep.verdict,
            "identical_to_system": rep.identical_to_system(),
            "substituted": [render_plain(p, indep) for p in rep.substituted],
            "residuals": [render_plain(p, indep) for p in rep.residuals],
        }, indent=2) + "\n")
    else:
        for i, (s, r) in enumerate(zip(rep.substituted, rep.residuals)):
            out.write(f"E{i + 1}[{args.subst}] = {_fmt(s, args.format, indep)}\n")
            out.write(f"  reduced = {_fmt(r, args.format, indep)}\n")
        verdict = "yes" if rep.verdict else "no"
        same = " (identical to the system)" if rep.identical_to_system() else ""
        out.write(f"nonlinearly self-adjoint: {verdict}{same}\n")
    return EXIT_OK if rep.verdict else EXIT_FAIL


def cmd_symcheck(args, out) -> int:
    system = load_system(args.system)
    gen = load_generator(args.gen, system)
    rep = check_symmetry(gen, system)
    indep = system.convention.independent
    rows = [(f"{gen.name}(E{i + 1}) mod system", r) for i, r in enumerate(rep.residuals)]
    _emit(rows, args.format, indep, out)
    if args.format != "json":
        out.write(f"symmetry {gen.name}: {'PASS' if rep.passed else 'FAIL'}\n")
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_conserve(args, out) -> int:
    system = load_system(args.system)
    lag = formal_lagrangian(system)
    gen = load_generator(args.gen, system)
    subst = args.subst or ",".join(f"{a}={o}" for a, o in zip(lag.adjoint_names, system.convention.dependent))
    rule = parse_substitution(subst, system_context(system, lag.adjoint_names))
    cv = conserved_vector(lag, gen, rule, keep_xiL=args.keep_xiL)
    indep = system.convention.independent
    gauge = sign = None
    if args.simplify:
        cv, gauge, sign = simplify_density(cv, system)
    if args.format == "json":
        out.write(json.dumps(cv.to_json(indep), indent=2) + "\n")
        return EXIT_OK
    for note in cv.provenance:
        out.write(f"# {note}\n")
    if gauge is not None:
        for label, p in zip("PQR", (gauge.P, gauge.Q, gauge.R)):
            out.write(f"# gauge {label} = {render_plain(p, indep)}\n")
    out.write(render(cv, args.format, indep) + "\n")
    return EXIT_OK


def cmd_verify(args, out) -> int:
    system = load_system(args.system)
    lag = formal_lagrangian(system)
    ctx = system_context(system, lag.adjoint_names)
    cv = load_vector(args.vector, ctx)
    rep = verify_divergence(cv, system)
    indep = system.convention.independent
    mult = {f"L{a + 1}": m for a, m in sorted(rep.plain_multipliers().items())}
    diff = {
        f"D{''.join(indep[i] * k for i, k in enumerate(multi))}(E{a + 1})": m
        for (a, multi), m in sorted(rep.differential_multipliers().items())
    }
    if args.format == "json":
        out.write(json.dumps({
            "passed": rep.passed,
            "residual": render_plain(rep.residual, indep),
            "multipliers": {k: render_plain(v, indep) for k, v in {**mult, **diff}.items()},
        }, indent=2) + "\n")
    else:
        out.write(f"residual = {_fmt(rep.residual, args.format, indep)}\n")
        for label, m in list(mult.items()) + list(diff.items()):
            out.write(f"multiplier of {label} = {_fmt(m, args.format, indep)}\n")
        out.write(f"divergence vanishes on solutions: {'PASS' if rep.passed else 'FAIL'}\n")
    return EXIT_OK if rep.passed else EXIT_FAIL


def _load_toml(path: Path) -> dict:
    if sys.version_info >= (3, 11):
        import tomllib
    else:
        import tomli as tomllib
    return tomllib.loads(path.read_text())


def cmd_simulate(args, out) -> int:
    from . import numeric

    conf = _load_toml(Path(args.config)) if args.config else {}
    grid_keys = {"nx", "ny", "lx", "ly"}
    init_keys = {"seed", "amplitude", "modes"}
    solver_keys = set(numeric.SolverConfig.__dataclass_fields__)
    unknown = set(conf) - grid_keys - init_keys - solver_keys
    if unknown:
        raise UsageError(f"{args.config}: unknown keys {sorted(unknown)}")
    grid = numeric.Grid(**{k: conf[k] for k in grid_keys & set(conf)})
    config = numeric.SolverConfig(**{k: conf[k] for k in solver_keys & set(conf)})
    init = numeric.random_initial_field(grid, **{k: conf[k] for k in init_keys & set(conf)})

    system = load_system(args.system) if args.system else None
    ctx = system_context(system) if system else None
    names = [n.strip() for n in args.densities.split(",") if n.strip()]
    densities = {}
    for name in names:
        text = DENSITIES.get(name, name)
        densities[name] = parse_expression(text, ctx) if ctx else parse_expression(text)

    traj = numeric.solve_kp(config, init)
    series = {name: numeric.conservation_drift(traj, d) for name, d in densities.items()}
    if args.out:
        with open(args.out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["time"] + names)
            for i, t in enumerate(traj.times):
                writer.writerow([repr(float(t))] + [repr(series[n].values[i]) for n in names])
    for name in names:
        out.write(f"{name}: relative drift {series[name].drift:.3e}\n")
    if args.tol is not None and any(s.drift > args.tol for s in series.values()):
        return EXIT_FAIL
    return EXIT_OK


def cmd_golden(args, out) -> int:
    results = run_all(args.root)
    for r in results:
        out.write(r.line() + "\n")
        for line in r.detail:
            out.write(f"    {line}\n")
    failed = sum(not r.passed for r in results)
    out.write(f"{len(results) - failed}/{len(results)} golden cases passed\n")
    return EXIT_FAIL if failed else EXIT_OK


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="conslaw-kit", description="Conservation laws via nonlinear self-adjointness.")
    sub = ap.add_subparsers(dest="command", required=True)

    def fmt(p):
        p.add_argument("--format", choices=("plain", "latex", "json"), default="plain")

    p = sub.add_parser("adjoint", help="formal Lagrangian and adjoint system")
    p.add_argument("system")
    fmt(p)
    p.set_defaults(func=cmd_adjoint)

    p = sub.add_parser("selfcheck", help="test nonlinear self-adjointness for a substitution")
    p.add_argument("system")
    p.add_argument("--subst", required=True, help='e.g. "v=u,z=w"')
    fmt(p)
    p.set_defaults(func=cmd_selfcheck)

    p = sub.add_parser("symcheck", help="verify a point-symmetry generator")
    p.add_argument("system")
    p.add_argument("--gen", required=True, help="a .gen file or builtin:f|g|h")
    fmt(p)
    p.set_defaults(func=cmd_symcheck)

    p = sub.add_parser("conserve", help="construct the conserved vector of a generator")
    p.add_argument("system")
    p.add_argument("--gen", required=True)
    p.add_argument("--subst", help="adjoint substitution (default: adjoint names map to the dependent variables)")
    p.add_argument("--simplify", action="store_true", help="reduce and integrate the density by parts")
    p.add_argument("--keep-xiL", dest="keep_xiL", action="store_true", help="keep the xi*L term")
    fmt(p)
    p.set_defaults(func=cmd_conserve)

    p = sub.add_parser("verify", help="check that a vector's divergence vanishes on solutions")
    p.add_argument("system")
    p.add_argument("--vector", required=True, help="JSON vector file or C1 = ...; text file")
    fmt(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("simulate", help="integrate KP numerically and report density drift")
    p.add_argument("--config", help="TOML file with grid, initial-data and solver keys")
    p.add_argument("--densities", default="mass,l2", help="comma list: mass, l2 or coordinate-free expressions")
    p.add_argument("--out", help="CSV output path")
    p.add_argument("--system", help="system file supplying names for custom densities")
    p.add_argument("--tol", type=float, help="exit 1 if any drift exceeds this value")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("golden", help="run the golden corpus")
    p.add_argument("--root", help="corpus directory (default: the shipped corpus)")
    p.set_defaults(func=cmd_golden)
    return ap


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, out)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
    except (UsageError, DiffAlgError, NumericError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    except OSError as exc:
        print(f"error: {exc.filename or ''}: {exc.strerror or exc}", file=sys.stderr)
    return EXIT_USAGE


def main_entry():
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
