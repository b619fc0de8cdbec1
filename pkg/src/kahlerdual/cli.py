"""Command-line front end: ``kahlerdual {residual,verify,dual,curvature}``.

Exit codes: 0 when everything passes, 2 when some identity fails its
threshold, 1 on usage or domain errors (when nothing failed outright).
Output goes to ``--out`` or stdout; human verdicts go to stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from typing import Optional

import numpy as np

from . import duality, forms, verify
from .numkit import DomainError
from .potentials import (
    CatalogError,
    PolarizedPotential,
    RadialPotential,
    catalog,
)

EXIT_OK, EXIT_ERROR, EXIT_FAIL = 0, 1, 2
RESIDUAL_THRESHOLD = verify.JETS_THRESHOLD
CONSTANT_SPREAD = 1e-6


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--potential", required=True, help="catalog name, e.g. hyperbolic")
    common.add_argument("--mu", type=float, help="scaled_hyperbolic factor")
    common.add_argument("--m", type=float, help="taubnut parameter")
    common.add_argument("--c", type=float, help="flat factor")
    common.add_argument("--F", help='hartogs profile, e.g. "1-x"')
    common.add_argument("--dim", type=int, help="complex dimension (default 1, or the potential's)")
    common.add_argument("--lambda", dest="lam", default="auto", help="positive value or auto")
    common.add_argument("--radius", type=float, help="ball radius (default 0.8 x catalog radius)")
    common.add_argument("--count", type=int, help="sample count")
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("--scheme", choices=("jets", "fd"), default="jets")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--out", help="output file (default stdout)")

    parser = _Parser(prog="kahlerdual", description="Dual Kähler potentials and duality checks.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("residual", parents=[common], help="tabulate the duality residual equations")
    sub.add_parser("verify", parents=[common], help="run the full verification suite")
    sub.add_parser("dual", parents=[common], help="inspect the dual potential")
    sub.add_parser("curvature", parents=[common], help="Gaussian curvature of a radial metric")
    return parser


# configuration


def _potential(args):
    params = {}
    if args.potential == "scaled_hyperbolic" and args.mu is not None:
        params["mu"] = args.mu
    if args.potential == "taubnut" and args.m is not None:
        params["m"] = args.m
    if args.potential == "flat" and args.c is not None:
        params["c"] = args.c
    if args.potential == "hartogs":
        if args.F is not None:
            params["F"] = args.F
        if args.dim is not None:
            params["n"] = args.dim
    if args.potential == "parabola_rotation":
        params["lam"] = 1.0 if args.lam == "auto" else _explicit_lambda(args.lam)
    return catalog(args.potential, **params)


def _explicit_lambda(text: str) -> float:
    try:
        lam = float(text)
    except ValueError:
        raise UsageError(f"--lambda must be a positive number or auto, got {text!r}") from None
    if not lam > 0:
        raise UsageError(f"--lambda must be positive, got {text!r}")
    return lam


def _lambda(args, p) -> tuple[float, str]:
    if args.lam != "auto":
        return _explicit_lambda(args.lam), "explicit"
    lam = duality.candidate_lambda(p)
    if lam is None:
        grad = p.jet(np.zeros(p.n)).grad
        raise UsageError(f"no admissible lambda: gradient at 0 is {_num_list(grad)}")
    if isinstance(p, RadialPotential):
        return lam, f"auto: 1/f'(0), f'(0)={p.jet(0.0).d1!r}"
    return lam, f"auto: 1/dphi(0), dphi(0)={_num_list(p.jet(np.zeros(p.n)).grad)}"


def _dim(args, p) -> int:
    if isinstance(p, RadialPotential):
        return 1 if args.dim is None else args.dim
    if args.dim is not None and args.dim != p.n:
        raise UsageError(f"{p.name} has dimension {p.n}; --dim {args.dim} does not match")
    return p.n


def _radius(args, p) -> float:
    r = 0.8 * p.radius if args.radius is None else args.radius
    if not r > 0:
        raise UsageError("--radius must be positive")
    return r


def _num_list(v) -> list:
    return [float(a) for a in np.atleast_1d(v)]


def _complex_text(z) -> str:
    def one(c):
        re, im = float(c.real), float(c.imag)
        if re == 0:
            return f"{im:g}i"
        if im == 0:
            return f"{re:g}"
        return f"{re:g}{im:+g}i"

    z = np.atleast_1d(z)
    return one(z[0]) if z.size == 1 else "(" + ", ".join(one(c) for c in z) + ")"


# output


def _tidy(obj):
    # drop negative zeros so equal runs print identical text
    if isinstance(obj, float):
        return obj + 0.0
    if isinstance(obj, dict):
        return {k: _tidy(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_tidy(v) for v in obj]
    return obj


def _emit(args, header: dict, columns: Optional[list], rows: list, payload: dict) -> None:
    header, rows, payload = _tidy(header), _tidy(rows), _tidy(payload)
    if args.format == "json":
        text = json.dumps({**header, **payload}, indent=2) + "\n"
    else:
        buf = io.StringIO()
        for key, value in header.items():
            buf.write(f"# {key}={value}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        writer.writerows(rows)
        text = buf.getvalue()
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _header(args, p, lam=None, source=None) -> dict:
    h = {"command": args.command, "potential": p.name}
    if lam is not None:
        h["lambda"] = lam
        h["lambda_source"] = source
    return h


# commands


def cmd_residual(args) -> int:
    p = _potential(args)
    if isinstance(p, PolarizedPotential):
        raise UsageError("residual needs a radial or rotation-invariant potential")
    lam, source = _lambda(args, p)
    radius = _radius(args, p)
    count = 21 if args.count is None else args.count
    if isinstance(p, RadialPotential):
        xs = [np.array([radius**2 * i / max(count - 1, 1)]) for i in range(count)]
        residual = lambda x: [duality.residual_radial(p, lam, float(x[0]))]  # noqa: E731
        n = 1
    else:
        n = p.n
        zs = verify.GridSpec(n, radius, max(count - 1, 1), "random", args.seed).points()
        xs = [np.zeros(n)] + [(z * z.conj()).real for z in zs]
        residual = lambda x: duality.residual_rotation_invariant(p, lam, x)  # noqa: E731

    rows, records, failed, errored = [], [], False, False
    for x in xs:
        try:
            r = _num_list(residual(x))
            status = "ok" if max(abs(v) for v in r) < RESIDUAL_THRESHOLD else "fail"
            failed |= status == "fail"
        except DomainError as exc:
            r, status, errored = [math.nan] * n, f"domain_error: {exc}", True
        rows.append(_num_list(x) + r + [status])
        records.append({"x": _num_list(x), "residual": [_finite(v) for v in r], "status": status})
    columns = (["x"] if n == 1 else [f"x{k + 1}" for k in range(n)])
    columns += ["residual"] if n == 1 else [f"residual{k + 1}" for k in range(n)]
    header = _header(args, p, lam, source)
    header["threshold"] = RESIDUAL_THRESHOLD
    _emit(args, header, columns + ["status"], rows, {"rows": records})
    return EXIT_FAIL if failed else EXIT_ERROR if errored else EXIT_OK


def _finite(v: float):
    return v if math.isfinite(v) else None


REPORT_COLUMNS = [
    "identity", "potential", "lambda", "radius", "count", "seed", "scheme", "jacobian",
    "max_residual", "mean_residual", "worst_point", "threshold", "status",
]


def cmd_verify(args) -> int:
    p = _potential(args)
    if isinstance(p, PolarizedPotential):
        raise UsageError("verify needs a radial or rotation-invariant potential")
    lam, source = _lambda(args, p)
    n = _dim(args, p)
    problem = duality.make_problem(p, lam, n=n)
    grid = verify.GridSpec(n, _radius(args, p), 200 if args.count is None else args.count,
                           "random", args.seed)
    reports = verify.run_suite(problem, grid, args.scheme)

    rows = []
    for rep in reports:
        d = rep.to_dict()
        status = "pass" if rep.passed else ("domain_error" if rep.errors else "fail")
        rows.append([
            d["identity"], d["potential"], d["lambda"], grid.radius, grid.count, grid.seed,
            grid.scheme, d["jacobian"], d["max_residual"], d["mean_residual"],
            _complex_text(rep.worst_point) if rep.worst_point is not None else "",
            d["threshold"], status,
        ])
    _emit(args, _header(args, p, lam, source), REPORT_COLUMNS, rows,
          {"reports": [rep.to_dict() for rep in reports]})
    for rep in reports:
        if not rep.passed:
            print(f"FAIL {rep.identity}: max residual {rep.max_residual:.3g} "
                  f"(threshold {rep.threshold:g})", file=sys.stderr)
    if any(not r.passed and not r.errors for r in reports):
        return EXIT_FAIL
    return EXIT_ERROR if any(r.errors for r in reports) else EXIT_OK


def cmd_dual(args) -> int:
    p = _potential(args)
    if isinstance(p, PolarizedPotential):
        return _dual_polarized(args, p)
    star = duality.dual(p)
    radius = _radius(args, p)
    count = 11 if args.count is None else args.count
    if isinstance(p, RadialPotential):
        xs = [np.array([radius**2 * i / max(count - 1, 1)]) for i in range(count)]
        columns = ["x", "f_star", "f", "f_star_prime", "f_prime_reflected", "status"]
    else:
        zs = verify.GridSpec(p.n, radius, max(count - 1, 1), "random", args.seed).points()
        xs = [np.zeros(p.n)] + [(z * z.conj()).real for z in zs]
        columns = [f"x{k + 1}" for k in range(p.n)] + ["phi_star", "phi", "reflection_defect",
                                                       "status"]
    rows, records, self_dual, worst, errored = [], [], True, 0.0, False
    for x in xs:
        try:
            if isinstance(p, RadialPotential):
                t = float(x[0])
                ds, dr = star.jet(t).d1, p.jet(-t).d1
                value, original = float(star(t)), float(p(t))
                defect = abs(ds - dr)
                extra = [ds, dr]
            else:
                value, original = float(star(*x)), float(p(*x))
                defect = float(np.max(np.abs(star.jet(x).grad - p.jet(-x).grad)))
                extra = [defect]
            self_dual &= abs(value - original) < 1e-12
            worst = max(worst, defect)
            status = "ok" if defect < 1e-12 else "fail"
            row = _num_list(x) + [value, original] + extra
        except DomainError as exc:
            errored, self_dual = True, False
            status = f"domain_error: {exc}"
            row = _num_list(x) + [math.nan] * (len(columns) - 1 - len(x))
        rows.append(row + [status])
        records.append(dict(zip(columns, [_finite(v) if isinstance(v, float) else v
                                          for v in row + [status]])))
    verdict = "self-dual" if self_dual else f"dual is {star.name}"
    print(verdict, file=sys.stderr)
    header = _header(args, p)
    header["dual"] = star.name
    header["verdict"] = verdict
    header["max_reflection_defect"] = worst
    _emit(args, header, columns, rows, {"rows": records})
    return EXIT_FAIL if worst >= 1e-12 else EXIT_ERROR if errored else EXIT_OK


def _dual_polarized(args, p: PolarizedPotential) -> int:
    radius = p.radius if args.radius is None else args.radius
    star, report = duality.dual_polarized(p, radius)
    where = _complex_text(report.worst_point)
    if report.is_real:
        verdict = f"REAL, max |Im| = {report.max_abs_imag:.3g}"
    else:
        verdict = f"NOT REAL, max |Im| = {report.max_abs_imag:.3g} at z={where}"
    print(verdict, file=sys.stderr)
    header = _header(args, p)
    header.update({"dual": star.name, "verdict": verdict})
    worst = [[float(c.real), float(c.imag)] for c in report.worst_point]
    row = [where, report.max_abs_imag, report.threshold, "real" if report.is_real else "not_real"]
    _emit(args, header, ["worst_point", "max_abs_imag", "threshold", "status"], [row],
          {"real": report.is_real, "max_abs_imag": report.max_abs_imag,
           "worst_point": worst, "threshold": report.threshold})
    return EXIT_OK if report.is_real else EXIT_FAIL


def cmd_curvature(args) -> int:
    p = _potential(args)
    if not isinstance(p, RadialPotential):
        raise UsageError("curvature is defined here for radial potentials only")
    radius = _radius(args, p)
    count = 31 if args.count is None else args.count
    rows, records, values, errored = [], [], [], False
    for i in range(count):
        x = radius**2 * i / max(count - 1, 1)
        try:
            k = forms.gaussian_curvature_radial(p, x)
            values.append(k)
            status = "ok"
        except DomainError as exc:
            k, status, errored = math.nan, f"domain_error: {exc}", True
        rows.append([x, k, status])
        records.append({"x": x, "K": _finite(k), "status": status})
    spread = max(values) - min(values) if values else math.nan
    verdict = "constant" if spread < CONSTANT_SPREAD else "non-constant"
    print(f"{verdict} curvature, spread {spread:.3g}", file=sys.stderr)
    header = _header(args, p)
    header.update({"verdict": verdict, "K_min": min(values, default=math.nan),
                   "K_max": max(values, default=math.nan), "spread": spread})
    _emit(args, header, ["x", "K", "status"], rows, {"rows": records})
    return EXIT_ERROR if errored else EXIT_OK


COMMANDS = {
    "residual": cmd_residual,
    "verify": cmd_verify,
    "dual": cmd_dual,
    "curvature": cmd_curvature,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, CatalogError, DomainError, ValueError, TypeError) as exc:
        print(f"kahlerdual {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
