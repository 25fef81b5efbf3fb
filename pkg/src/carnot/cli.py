"""``carnot`` command line: checks, closed-form certificates, searches and numerics.

Exit codes: 0 verdict true / study passed, 2 input error, 3 verdict false,
4 nothing found.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from fractions import Fraction

from . import __version__
from .annihilator import (
    CertificateError,
    annihilator_space,
    closed_form_annihilator,
    example_operator,
    find_annihilator,
    korn_reduction_check,
    parse_example,
)
from .lie import AlgebraInvariantError, algebra_from_json, parse_group
from .linalg import format_rational
from .numerics import default_bump, default_grid, hardy_report, refine_study, sobolev_report
from .operators import (
    OperatorMatrix,
    check_canceling_euclidean,
    check_cocanceling,
    compose,
    symmetrize,
    to_uea_matrix,
)

EXIT_OK, EXIT_INPUT, EXIT_FALSE, EXIT_NOT_FOUND = 0, 2, 3, 4


class SpecError(ValueError):
    pass


def _vec(v):
    return [format_rational(c) for c in v]


def load_spec(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise SpecError(f"{path}: {exc.strerror}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise SpecError(f"{path}: top level must be an object")
    return doc


def _block(doc: dict, key: str) -> dict:
    if key not in doc:
        raise SpecError(f"missing field '{key}'")
    if not isinstance(doc[key], dict):
        raise SpecError(f"field '{key}' must be an object")
    return doc[key]


def _parse(what: str, fn, *args):
    try:
        return fn(*args)
    except (ValueError, KeyError, TypeError, IndexError, AlgebraInvariantError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        raise SpecError(f"{what}: {msg}") from exc


def _group_from(args, doc=None):
    if doc is not None and "group" in doc:
        return _parse("group", algebra_from_json, _block(doc, "group"))
    if args.group:
        return _parse("--group", parse_group, args.group)
    raise SpecError("no group given (use --group or a spec with a 'group' block)")


def _envelope(task: str, alg, seed=None) -> dict:
    out = {"task": task, "tool_version": __version__, "group": alg.describe(),
           "basis_convention": alg.basis_convention}
    if seed is not None:
        out["seed"] = seed
    return out


# -- subcommands -----------------------------------------------------------------

def cmd_check(args):
    doc = load_spec(args.spec)
    alg = _group_from(args, doc)
    A = _parse("operator", OperatorMatrix.from_json, alg, _block(doc, "operator"))
    report = _envelope(f"check:{args.task}", alg, args.seed)
    if args.task == "cocanceling":
        verdict = check_cocanceling(symmetrize(A))
        report.update(verdict=verdict.cocanceling, symbol_rank=verdict.rank,
                      common_kernel=[_vec(v) for v in verdict.common_kernel_basis])
        ok = verdict.cocanceling
    elif args.task == "canceling":
        if not alg.is_abelian:
            raise SpecError("the canceling task needs an abelian group")
        verdict = check_canceling_euclidean(A, sample_budget=args.budget, seed=args.seed)
        report.update(verdict=verdict.certified, status=verdict.status,
                      candidate_subspace=[_vec(v) for v in verdict.candidate_basis],
                      points_sampled=len(verdict.points))
        ok = verdict.certified
    else:
        L = _parse("annihilator", OperatorMatrix.from_json, alg, _block(doc, "annihilator"))
        if L.dim_in != A.dim_out:
            raise SpecError(f"annihilator: dimV {L.dim_in} does not match operator dimE {A.dim_out}")
        residual = to_uea_matrix(compose(L, A))
        nonzero = [{"row": i, "col": j, "element": repr(e)}
                   for i, row in enumerate(residual) for j, e in enumerate(row) if e]
        report.update(verdict=not nonzero, nonzero_residuals=nonzero)
        ok = not nonzero
    return report, EXIT_OK if ok else EXIT_FALSE


def cmd_verify_example(args):
    alg = _group_from(args)
    _parse("--example", parse_example, args.example)
    report = _envelope("verify-example", alg)
    code = EXIT_OK
    try:
        cf = closed_form_annihilator(args.example, alg)
        report.update(verdict=cf.ok, closed_form=cf.summary(), certificate=cf.certificate.to_json())
        if not cf.ok:
            code = EXIT_FALSE
    except CertificateError as exc:
        report.update(verdict=False, error=str(exc))
        code = EXIT_FALSE
    if args.korn_reduction:
        kr = korn_reduction_check(alg)
        report["korn_reduction"] = kr.to_json()
        if not kr.all_zero:
            report["verdict"] = False
            code = EXIT_FALSE
    return report, code


def cmd_find_annihilator(args):
    if args.degree < 1:
        raise SpecError("--degree must be >= 1")
    if args.spec:
        doc = load_spec(args.spec)
        alg = _group_from(args, doc)
        A = _parse("operator", OperatorMatrix.from_json, alg, _block(doc, "operator"))
    else:
        alg = _group_from(args)
        A = _parse("--example", example_operator, args.example, alg)
    basis = annihilator_space(A, args.degree)
    cert = find_annihilator(A, args.degree, dim_f=args.dim_f, seed=args.seed, basis=basis)
    report = _envelope("find-annihilator", alg, args.seed)
    report.update(degree=args.degree, space_dim=len(basis), found=cert is not None,
                  certificate=cert.to_json() if cert else None)
    return report, EXIT_OK if cert else EXIT_NOT_FOUND


def _levels(text: str):
    try:
        levels = [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise SpecError(f"--grid: {exc}") from exc
    if len(levels) < 2 or any(n < 1 for n in levels):
        raise SpecError("--grid needs at least two positive levels")
    return levels


def _numeric(args, kind):
    alg = _group_from(args)
    _parse("--example", parse_example, args.example)
    levels = _levels(args.grid)
    try:
        dilation = Fraction(args.dilation)
    except ValueError as exc:
        raise SpecError(f"--dilation: {exc}") from exc
    bumps = _parse("--bump", default_bump, alg, args.example, args.bump, dilation)
    if kind == "sobolev":
        producer = lambda n: sobolev_report(alg, args.example, bumps, default_grid(alg, n, bumps))  # noqa: E731
    else:
        producer = lambda n: hardy_report(alg, args.example, bumps, args.ell, args.p,  # noqa: E731
                                          default_grid(alg, n, bumps))
    table = _parse(kind, refine_study, producer, levels, args.tolerance)
    report = _envelope(kind, alg)
    report.update(verdict=table.passed, study=table.to_json())
    report["_csv"] = table.to_csv()
    return report, EXIT_OK if table.passed else EXIT_FALSE


def cmd_sobolev(args):
    return _numeric(args, "sobolev")


def cmd_hardy(args):
    return _numeric(args, "hardy")


def cmd_group_info(args):
    alg = _group_from(args, load_spec(args.spec) if args.spec else None)
    report = _envelope("group-info", alg)
    report["brackets"] = [
        {"pair": [alg.names[a], alg.names[b]], "value": {alg.names[c]: format_rational(v) for c, v in vec.items()}}
        for a, b, vec in alg.nonzero_brackets()
    ]
    report["verdict"] = True
    return report, EXIT_OK


# -- output ----------------------------------------------------------------------

def _json_default(obj):
    if isinstance(obj, Fraction):
        return format_rational(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def render(report: dict, fmt: str) -> str:
    csv_text = report.pop("_csv", None)
    if fmt == "json":
        return json.dumps(report, sort_keys=True, indent=2, default=_json_default) + "\n"
    if fmt == "csv":
        if csv_text is None:
            raise SpecError("csv output is only available for sobolev and hardy")
        return csv_text
    return _text(report, csv_text)


def _text(report: dict, csv_text) -> str:
    lines = [f"task: {report['task']}", f"group: {report['group']['label']} "
             f"(dims {report['group']['layer_dims']}, Q={report['group']['Q']})"]
    skip = {"task", "group", "tool_version", "basis_convention", "certificate", "study", "closed_form",
            "korn_reduction", "brackets"}
    for key in sorted(k for k in report if k not in skip):
        lines.append(f"{key}: {report[key]}")
    if "closed_form" in report:
        cf = report["closed_form"]
        lines.append("orders: " + ", ".join(f"{k}={v}" for k, v in cf["orders"].items()))
        for key in ("residual_zero", "sym_N_zero", "M_rank_at_xi0", "L0_cocanceling", "L_cocanceling"):
            lines.append(f"{key}: {cf[key]}")
    if report.get("korn_reduction"):
        kr = report["korn_reduction"]
        lines.append(f"korn reductions (k={kr['k']}): {len(kr['entries'])} identities, all zero: {kr['all_zero']}")
    if report.get("certificate"):
        cert = report["certificate"]
        lines.append(f"certificate: order {cert['order']}, rows {cert['dimF']}, "
                     f"residual zero {cert['residual_zero']}, cocanceling {cert['cocanceling']}")
        for term in cert["L"]["terms"]:
            lines.append(f"  {term['word']}: {term['matrix']}")
    if "brackets" in report:
        for b in report["brackets"]:
            lines.append(f"[{b['pair'][0]}, {b['pair'][1]}] = {b['value']}")
    if "study" in report:
        lines.append(f"status: {report['study']['status']} "
                     f"(max relative change {report['study']['max_relative_change']:.4g}, "
                     f"tolerance {report['study']['tolerance']})")
        lines.append(csv_text.rstrip("\n"))
    return "\n".join(lines) + "\n"


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="carnot", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"carnot {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=False):
        sp.add_argument("--format", choices=("text", "json", "csv"), default="text")
        sp.add_argument("--out", help="write the report here instead of stdout")
        sp.add_argument("--timings", action="store_true", help="include wall-clock seconds in the report")
        if seed:
            sp.add_argument("--seed", type=int, default=0)

    sp = sub.add_parser("check", help="cocanceling, canceling or compose-zero check of a spec file")
    sp.add_argument("--spec", required=True)
    sp.add_argument("--task", choices=("cocanceling", "canceling", "compose-zero"), required=True)
    sp.add_argument("--group")
    sp.add_argument("--budget", type=int, default=8, help="stable draws before giving up (canceling)")
    common(sp, seed=True)
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("verify-example", help="closed-form annihilator certificate")
    sp.add_argument("--group", default="heisenberg:1")
    sp.add_argument("--example", default="gradient")
    sp.add_argument("--korn-reduction", action="store_true")
    common(sp)
    sp.set_defaults(func=cmd_verify_example)

    sp = sub.add_parser("find-annihilator", help="degree-bounded annihilator search")
    sp.add_argument("--spec")
    sp.add_argument("--group", default="heisenberg:1")
    sp.add_argument("--example", default="gradient")
    sp.add_argument("--degree", type=int, required=True)
    sp.add_argument("--dim-f", type=int, default=1)
    common(sp, seed=True)
    sp.set_defaults(func=cmd_find_annihilator)

    for name, fn in (("sobolev", cmd_sobolev), ("hardy", cmd_hardy)):
        sp = sub.add_parser(name, help=f"{name} inequality refinement study")
        sp.add_argument("--group", default="heisenberg:1")
        sp.add_argument("--example", default="gradient")
        sp.add_argument("--bump", type=int, default=4, help="bump power p")
        sp.add_argument("--dilation", default="1")
        sp.add_argument("--grid", default="16,32,64" if name == "sobolev" else "32,64,128")
        sp.add_argument("--tolerance", type=float, default=0.03)
        if name == "hardy":
            sp.add_argument("--ell", type=int, default=1)
            sp.add_argument("--p", type=float, default=1.0)
        common(sp)
        sp.set_defaults(func=fn)

    sp = sub.add_parser("group-info", help="describe a group")
    sp.add_argument("--group", default="heisenberg:1")
    sp.add_argument("--spec")
    common(sp)
    sp.set_defaults(func=cmd_group_info)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    start = time.perf_counter()
    try:
        report, code = args.func(args)
        if args.timings:
            report["seconds"] = round(time.perf_counter() - start, 3)
        text = render(report, args.format)
    except (SpecError, ValueError, AlgebraInvariantError) as exc:
        print(f"carnot: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
