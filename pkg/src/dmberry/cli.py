"""Command-line front end.

Subcommands ``spectrum``, ``eigenstate``, ``berry``, ``critical`` and
``scan`` each emit one document: CSV (``#`` meta lines, header, rows) or
JSON (``{"meta": ..., "rows": [...]}``).  Exit status is 0 on success,
1 on a numerical failure and 2 on a usage error.
"""
import argparse
import csv
import io
import json
import math
import sys

from . import __version__
from .berry import berry_adiabatic, berry_closed, berry_wilson
from .eigenstates import closed_form_state, nullspace_state
from .errors import DegenerateFormula, NumericalError
from .model import BASIS_LABELS, ModelParams, build_hamiltonian
from .spectrum import critical_dm, eigenvalues
from .sweep import FIGURES, GridSpec, figure_table, sweep_berry, sweep_eigenvalues


class UsageError(Exception):
    pass


def _grid_range(text):
    try:
        start, stop, count = text.split(":")
        return float(start), float(stop), int(count)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected start:stop:count, got {text!r}")


def _add_params(sp, full=True):
    sp.add_argument("--j", type=float, default=1.0)
    sp.add_argument("--jz", type=float, default=1.0)
    if full:
        sp.add_argument("--d", type=float, default=0.0)
        sp.add_argument("--b", type=float, default=0.0)
        ang = sp.add_mutually_exclusive_group()
        ang.add_argument("--theta", type=float, help="field elevation in radians")
        ang.add_argument("--theta-pi", type=float, help="field elevation in units of pi")


def _add_output(sp, default_format="csv"):
    sp.add_argument("--format", choices=("csv", "json"), default=default_format)
    sp.add_argument("--out", help="output path (default: standard output)")


def build_parser():
    parser = argparse.ArgumentParser(prog="dmberry", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("spectrum", help="four eigenvalues")
    _add_params(sp)
    _add_output(sp)

    sp = sub.add_parser("eigenstate", help="instantaneous eigenstate of one level")
    _add_params(sp)
    sp.add_argument("--phi", type=float, default=0.0)
    sp.add_argument("--level", type=int, choices=range(4), default=0)
    _add_output(sp)

    sp = sub.add_parser("berry", help="Berry phase per level")
    _add_params(sp)
    sp.add_argument("--level", type=int, choices=range(4))
    sp.add_argument("--method", choices=("closed", "wilson", "adiabatic"), default="closed")
    sp.add_argument("--grid", type=int, default=1024, help="wilson loop points")
    sp.add_argument("--period", type=float, default=2000.0, help="adiabatic period T")
    sp.add_argument("--steps", type=int, help="RK4 steps (default 200 per unit time)")
    _add_output(sp)

    sp = sub.add_parser("critical", help="critical DM strength sqrt(jz^2 - j^2)")
    _add_params(sp, full=False)
    _add_output(sp, default_format="json")

    sp = sub.add_parser("scan", help="parameter sweep / figure data")
    _add_params(sp)
    sp.add_argument("--figure", type=int, choices=sorted(FIGURES))
    sp.add_argument("--axis", action="append", choices=("b", "d", "theta"), default=[])
    sp.add_argument("--range", action="append", type=_grid_range, default=[], dest="ranges",
                    metavar="START:STOP:COUNT")
    sp.add_argument("--method", choices=("closed", "wilson"))
    sp.add_argument("--level", type=int, choices=range(4))
    sp.add_argument("--grid", type=int, default=1024, help="wilson loop points")
    sp.add_argument("--threads", type=int, default=1, help="worker cap, 0 = auto")
    _add_output(sp)
    return parser


def _params(args):
    theta = args.theta if args.theta is not None else 0.0
    if args.theta_pi is not None:
        theta = args.theta_pi * math.pi
    if args.b < 0:
        raise UsageError("--b must be >= 0")
    if not 0.0 <= theta <= math.pi:
        raise UsageError("theta must lie in [0, pi]")
    try:
        return ModelParams(args.j, args.jz, args.d, args.b, theta)
    except ValueError as exc:
        raise UsageError(str(exc))


def _canonical(args, p):
    words = [args.command]
    if args.command == "scan" and args.figure is not None:
        return " ".join(words + ["--figure", str(args.figure), "--format", args.format])
    if args.command == "critical":
        words += ["--j", repr(args.j), "--jz", repr(args.jz)]
    else:
        for k, v in p.as_dict().items():
            words += [f"--{k}", repr(v)]
    for name in _extra_flags(args):
        words += [f"--{name}", str(getattr(args, name))]
    if args.command == "scan":
        for axis, (a, b, n) in zip(args.axis, args.ranges):
            words += ["--axis", axis, "--range", f"{a!r}:{b!r}:{n}"]
    return " ".join(words + ["--format", args.format])


def _extra_flags(args):
    """Optional flags that influence the result, in canonical order."""
    names = ["phi", "level", "method"]
    method = getattr(args, "method", None)
    if method == "wilson":
        names.append("grid")
    elif method == "adiabatic":
        names += ["period", "steps"]
    return [n for n in names if getattr(args, n, None) is not None]


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render(meta, columns, rows, fmt):
    if fmt == "json":
        doc = {"meta": meta, "rows": [{c: r.get(c) for c in columns} for r in rows]}
        return json.dumps(doc, indent=1, allow_nan=False) + "\n"
    buf = io.StringIO()
    for k, v in meta.items():
        buf.write(f"# {k}: {json.dumps(v, allow_nan=False)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in columns])
    return buf.getvalue()


def parse_document(text):
    """Inverse of :func:`render` for CSV documents: (meta, columns, rows)."""
    meta, lines = {}, []
    for line in text.splitlines():
        if line.startswith("# "):
            key, _, value = line[2:].partition(": ")
            meta[key] = json.loads(value)
        else:
            lines.append(line)
    reader = csv.reader(lines)
    columns = next(reader)
    return meta, columns, [dict(zip(columns, r)) for r in reader]


def _spectrum(args, p):
    spec = eigenvalues(p)
    row = {f"e{k}": e for k, e in enumerate(spec.energies)}
    row.update(min_gap=spec.min_gap, source=spec.source)
    return ["e0", "e1", "e2", "e3", "min_gap", "source"], [row], None


def _eigenstate(args, p):
    spec = eigenvalues(p)
    energy = spec.energies[args.level]
    try:
        st = closed_form_state(p, args.phi, energy, spec)
    except DegenerateFormula:
        st = nullspace_state(build_hamiltonian(p, args.phi), energy)
    rows = [{"level": args.level, "energy": st.energy, "gauge": st.gauge, "basis": lab,
             "re": float(z.real), "im": float(z.imag)} for lab, z in zip(BASIS_LABELS, st.amp)]
    return ["level", "energy", "gauge", "basis", "re", "im"], rows, None


_BERRY_DETAIL = {
    "closed": [],
    "wilson": ["n", "min_step_overlap"],
    "adiabatic": ["period", "steps", "total_phase", "dynamical_phase", "fidelity", "adiabatic_warning"],
}


def _berry(args, p):
    levels = range(4) if args.level is None else [args.level]
    rows, error = [], None
    for lv in levels:
        try:
            if args.method == "closed":
                res = berry_closed(p, lv)
            elif args.method == "wilson":
                res = berry_wilson(p, lv, args.grid)
            else:
                res = berry_adiabatic(p, lv, args.period, args.steps)
        except NumericalError as exc:
            error = error or exc
            rows.append({"level": lv, "method": args.method, "flag": exc.name})
            continue
        row = {"level": lv, "phase": res.phase, "method": res.method,
               "loop_min_gap": res.loop_min_gap, "flag": ""}
        row.update({k: res.detail[k] for k in _BERRY_DETAIL[args.method]})
        rows.append(row)
    columns = ["level", "phase", "method", "loop_min_gap"] + _BERRY_DETAIL[args.method] + ["flag"]
    return columns, rows, error


def _critical(args, p):
    return ["critical_d"], [{"critical_d": critical_dm(args.j, args.jz)}], None


def _scan(args, p):
    if args.figure is not None:
        if args.axis or args.ranges:
            raise UsageError("--figure cannot be combined with --axis/--range")
        table = figure_table(args.figure, threads=args.threads)
        return table.columns, table.rows, None, table.meta
    if not args.ranges or len(args.ranges) != len(args.axis) or len(args.ranges) > 2:
        raise UsageError("scan needs one or two --axis/--range pairs, or --figure")
    try:
        grids = [GridSpec(ax, *rng) for ax, rng in zip(args.axis, args.ranges)]
    except ValueError as exc:
        raise UsageError(str(exc))
    if len(grids) == 1 and args.method is None:
        table = sweep_eigenvalues(p, grids[0], threads=args.threads)
    else:
        outer, inner = (None, grids[0]) if len(grids) == 1 else grids
        table = sweep_berry(p, outer, inner, level=args.level, method=args.method or "closed",
                            n=args.grid, threads=args.threads)
    return table.columns, table.rows, None, table.meta


_HANDLERS = {"spectrum": _spectrum, "eigenstate": _eigenstate, "berry": _berry,
             "critical": _critical, "scan": _scan}


def run(argv):
    """Execute one command; returns ``(exit_status, document_text)``."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0), ""
    return _execute(parser, args)


def _execute(parser, args):
    figure = args.command == "scan" and args.figure is not None
    meta = {"subcommand": args.command, "version": __version__}
    try:
        p = _params(args) if args.command != "critical" else None
        if args.command == "berry" and args.method == "adiabatic" and args.steps is None:
            args.steps = int(math.ceil(200 * args.period))
        meta["command"] = _canonical(args, p)
        if args.command == "critical":
            meta["params"] = {"j": args.j, "jz": args.jz}
        elif not figure:
            meta["params"] = p.as_dict()
            for name in _extra_flags(args):
                meta[name] = getattr(args, name)
        out = _HANDLERS[args.command](args, p)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"dmberry: error: {exc}", file=sys.stderr)
        return 2, ""
    except NumericalError as exc:
        meta["error"] = exc.name
        print(f"dmberry: {exc.name}: {exc}", file=sys.stderr)
        return 1, render(meta, ["flag"], [], args.format)
    columns, rows, error = out[:3]
    if len(out) == 4:
        meta["table"] = out[3]
    status = 0
    if error is not None:
        meta["error"] = error.name
        print(f"dmberry: {error.name}: {error}", file=sys.stderr)
        status = 1
    return status, render(meta, columns, rows, args.format)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    status, text = _execute(parser, args)
    if text:
        if args.out:
            with open(args.out, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
