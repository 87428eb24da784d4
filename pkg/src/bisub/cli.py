"""Command-line interface: ``bisub list | check | at | audit | crosscheck | export``.

Exit codes: 0 for a definitive result, 2 for usage or input errors,
3 for an inconclusive verdict.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import harness, modelfile, models
from . import submersion as sub
from .expr import DomainError
from .geometry import OutOfDomain, curvature_component
from .submersion import CURVATURE_KEYS, DATA_NAMES, FramedModel

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INCONCLUSIVE = 3

CSV_COLUMNS = ("model", "verdict", "check", "value", "tolerance", "passed", "witness_x", "witness_y", "witness_z")


class InputError(Exception):
    pass


def _num(v) -> str:
    return f"{float(v):.17g}"


def _kv(items, what):
    out = {}
    for item in items or ():
        k, sep, v = item.partition("=")
        if not sep or not k:
            raise InputError(f"{what} must look like name=value, got {item!r}")
        try:
            out[k.strip()] = float(v)
        except ValueError:
            raise InputError(f"{what} {k!r}: {v!r} is not a number") from None
    return out


def _triple(text, what, cast):
    parts = text.split(",")
    if len(parts) != 3:
        raise InputError(f"{what} needs three comma-separated values, got {text!r}")
    try:
        return tuple(cast(p) for p in parts)
    except ValueError:
        raise InputError(f"{what}: cannot parse {text!r}") from None


def resolve(ref: str, params: dict) -> models.ModelCatalogEntry:
    if ref in models.NAMES:
        entry = models.builtin(ref)
    elif Path(ref).exists() or ref.endswith(".toml"):
        try:
            entry = modelfile.load(ref)
        except OSError as exc:
            raise InputError(f"cannot read model file: {exc}") from None
    else:
        raise InputError(f"unknown model {ref!r}; valid names: {', '.join(models.NAMES)} or a .toml file")
    if params:
        try:
            model = entry.model.with_params(**params)
        except KeyError as exc:
            raise InputError(str(exc.args[0])) from None
        entry = models.ModelCatalogEntry(entry.name, entry.kind, model, entry.provenance)
    return entry


def _grid(entry, args):
    grid = entry.model.grid
    if grid is None:
        raise InputError(f"model {entry.name!r} declares no grid")
    if args.grid:
        counts = _triple(args.grid, "--grid", int)
        if min(counts) < 1:
            raise InputError("--grid counts must be positive")
        grid = grid.with_counts(counts)
    return grid


def _tols(args):
    try:
        return harness.Tolerances().updated(**_kv(args.tol, "--tol"))
    except KeyError as exc:
        raise InputError(str(exc.args[0])) from None


# --- commands ---------------------------------------------------------------


def cmd_list(args, out) -> int:
    rows = [{"name": e.name, "kind": e.kind, "provenance": e.provenance} for e in models.catalog()]
    if args.format == "json":
        json.dump(rows, out, indent=2)
        out.write("\n")
    else:
        for r in rows:
            out.write(f"{r['name']:<22} {r['kind']:<15} {r['provenance']}\n")
    return EXIT_OK


def _report_csv(rep: harness.VerificationReport, out):
    w = csv.writer(out, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for c in rep.checks:
        w.writerow([rep.model, rep.verdict, c.name, _num(c.value),
                    "" if c.tolerance is None else _num(c.tolerance),
                    "" if c.passed is None else str(c.passed).lower(),
                    *(_num(v) for v in c.witness)])


def _report_text(rep: harness.VerificationReport, out):
    out.write(f"model    {rep.model} ({rep.kind})\n")
    if rep.params:
        out.write("params   " + ", ".join(f"{k}={v:.6g}" for k, v in rep.params.items()) + "\n")
    out.write(f"grid     {rep.grid['points']} points\n")
    for c in rep.checks:
        flag = "" if c.passed is None else ("ok" if c.passed else "FAIL")
        w = ", ".join(f"{v:.6g}" for v in c.witness)
        out.write(f"  {c.name:<15} {c.value:<13.6g} at ({w}) {flag}\n")
    out.write(f"verdict  {rep.verdict}: {rep.reason}\n")
    out.write(f"time     {rep.wall_time:.3f}s\n")


def cmd_check(args, out) -> int:
    entry = resolve(args.model, _kv(args.param, "--param"))
    rep = harness.classify(entry.model, _grid(entry, args), _tols(args))
    if args.format == "json":
        json.dump(rep.asdict(), out, indent=2)
        out.write("\n")
    elif args.format == "csv":
        _report_csv(rep, out)
    else:
        _report_text(rep, out)
    return EXIT_INCONCLUSIVE if rep.verdict == "inconclusive" else EXIT_OK


SHOW = ("data", "tension", "bitension", "curvature", "jacobi")


def _at_values(entry, point, show) -> dict:
    m = entry.model
    if show == "tension":
        if isinstance(m, FramedModel):
            t = sub.tension(m, point)
            return {"tau1": t[0], "tau2": t[1], "norm": float(np.hypot(*t))}
        v = sub.fiber_mean_curvature(m, point)
        return {"hx": v[0], "hy": v[1], "hz": v[2], "norm": float(np.linalg.norm(v))}
    if not isinstance(m, FramedModel):
        raise InputError(f"--show {show} needs an adapted frame; {m.name!r} is a vertical-field model")
    if show == "data":
        return dict(zip(DATA_NAMES, sub.integrability_data(m, point).astuple()))
    if show == "bitension":
        r = sub.bitension(m, point)
        return {"r1": r.r1, "r2": r.r2}
    if show == "jacobi":
        return {"jacobi": sub.jacobi_residual(m, point)}
    data = sub.curvature_from_data(m, point)
    vals = {f"R{k}_data": v for k, v in data.items()}
    for k in CURVATURE_KEYS:
        vals[f"R{k}_frame"] = curvature_component(m, *(int(c) for c in k), point)
    vals["gauss_base"] = sub.gauss_curvature_base(m, point)
    return vals


def cmd_at(args, out) -> int:
    entry = resolve(args.model, _kv(args.param, "--param"))
    point = _triple(args.point, "--point", float)
    try:
        entry.model.domain.check(np.array(point))
    except OutOfDomain as exc:
        raise InputError(str(exc)) from None
    vals = {k: float(v) for k, v in _at_values(entry, point, args.show).items()}
    if args.format == "json":
        json.dump({"model": entry.name, "point": list(point), "show": args.show, "values": vals}, out, indent=2)
        out.write("\n")
    elif args.format == "csv":
        w = csv.writer(out, lineterminator="\n")
        w.writerow(("model", "x", "y", "z", "quantity", "value"))
        for k, v in vals.items():
            w.writerow((entry.name, *(_num(c) for c in point), k, _num(v)))
    else:
        for k, v in vals.items():
            out.write(f"{k} = {v!r}\n")
    return EXIT_OK


def cmd_audit(args, out) -> int:
    entry = resolve(args.model, _kv(args.param, "--param"))
    m = entry.model
    if not isinstance(m, FramedModel):
        raise InputError("audit needs a framed model")
    c = args.c if args.c is not None else m.curvature
    if c is None:
        raise InputError(f"model {m.name!r} declares no curvature; pass --c")
    rep = harness.spaceform_audit(m, c, _grid(entry, args), _tols(args))
    if args.format == "json":
        json.dump(rep.asdict(), out, indent=2)
        out.write("\n")
    elif args.format == "csv":
        w = csv.writer(out, lineterminator="\n")
        w.writerow(("model", "curvature", "check", "value", "tolerance", "passed", "witness_x", "witness_y", "witness_z"))
        for e in rep.entries:
            w.writerow((rep.model, _num(rep.curvature), e.name, _num(e.value), _num(e.tolerance),
                        str(e.passed).lower(), *(_num(v) for v in e.witness)))
    else:
        out.write(f"space-form audit of {rep.model} with c = {rep.curvature:g}\n")
        for e in rep.entries:
            out.write(f"  {e.name:<12} {e.value:<13.6g} {'ok' if e.passed else 'FAIL'}\n")
        out.write(f"result   {'pass' if rep.passed else 'fail'}\n")
    return EXIT_OK


def cmd_crosscheck(args, out) -> int:
    entry = resolve(args.model, _kv(args.param, "--param"))
    dev = harness.fd_crosscheck(entry.model, _grid(entry, args))
    if args.format == "json":
        json.dump({"model": entry.name, "max_relative_deviation": dev}, out, indent=2)
        out.write("\n")
    elif args.format == "csv":
        out.write("model,max_relative_deviation\n")
        out.write(f"{entry.name},{_num(dev)}\n")
    else:
        out.write(f"{entry.name}: max relative deviation {dev:.6g}\n")
    return EXIT_OK


def cmd_export(args, out) -> int:
    entry = resolve(args.model, _kv(args.param, "--param"))
    text = modelfile.dumps(entry)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        out.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bisub", description="Harmonicity and biharmonicity checks for Riemannian submersions from 3-manifolds.")
    sp = p.add_subparsers(dest="command", required=True)

    def common(q, grid=True, tol=True, formats=("text", "json", "csv")):
        q.add_argument("model", help="built-in model name or path to a .toml model file")
        q.add_argument("--param", action="append", metavar="NAME=VALUE", help="override a model parameter")
        q.add_argument("--format", choices=formats, default="text")
        if grid:
            q.add_argument("--grid", metavar="NX,NY,NZ", help="grid point counts")
        if tol:
            q.add_argument("--tol", action="append", metavar="NAME=VALUE", help="override a tolerance")

    q = sp.add_parser("list", help="list built-in models")
    q.add_argument("--format", choices=("text", "json"), default="text")
    q.set_defaults(func=cmd_list)

    q = sp.add_parser("check", help="classify a model on its grid")
    common(q)
    q.set_defaults(func=cmd_check)

    q = sp.add_parser("at", help="pointwise quantities")
    common(q, grid=False, tol=False)
    q.add_argument("--point", required=True, metavar="X,Y,Z")
    q.add_argument("--show", choices=SHOW, default="data")
    q.set_defaults(func=cmd_at)

    q = sp.add_parser("audit", help="space-form curvature and fiber-invariance audit")
    common(q)
    q.add_argument("--c", type=float, help="constant curvature to audit against (default: declared)")
    q.set_defaults(func=cmd_audit)

    q = sp.add_parser("crosscheck", help="jet derivatives against finite differences")
    common(q, tol=False)
    q.set_defaults(func=cmd_crosscheck)

    q = sp.add_parser("export", help="write a model as a .toml model file")
    q.add_argument("model", help="built-in model name")
    q.add_argument("--param", action="append", metavar="NAME=VALUE", help="override a model parameter")
    q.add_argument("-o", "--output", help="destination file (default: stdout)")
    q.set_defaults(func=cmd_export)
    return p


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, out)
    except (InputError, modelfile.ModelFileError, OutOfDomain, DomainError, sub.PreconditionError,
            sub.AdaptedFrameError) as exc:
        print(f"bisub: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
