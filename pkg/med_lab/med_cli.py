"""Command-line front end for med_lab.

Commands::

    med-lab solve <file> [--method closed|oracle|both] [--tol R] [--json] [--seed INT] [--timings]
    med-lab certify <ensemble> <povm> [--tol R] [--json]
    med-lab sweep <template> --grid "a=0,0.2;theta=0.5" --out <csv>
    med-lab gen <trine|pair|latitude|spin> [--a --theta --n --two_j --phi] --out <file>

Exit codes: 0 certified, 2 best-found (certificate failed), 1 error.
"""
from __future__ import annotations

import argparse
import contextlib
import itertools
import json
import logging
import math
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from .config import CERTIFY_TOL, DEFAULT_SEED, LOG_LEVEL_ENV, ORACLE_MAX_ITER, SWEEP_FIELDS
from .ensemble_builder import SpinLatitudeParams, cyclic_spin_ensemble
from .ensemble_io import ensemble_digest, ensemble_from_document, load_ensemble, parse_povm_file, parse_spin_params
from .errors import ExtractionError, MedError, PreconditionError, UsageError
from .med_certify import certify_optimal, extract_helstrom_family, success_probability, verify_helstrom_family
from .med_closed_form import closed_form_family, solve_closed_form, solve_spin_latitude
from .med_oracle import fixed_point_solve, srm

logger = logging.getLogger(__name__)

METHODS = ("closed", "oracle", "both")
GEN_KINDS = ("trine", "pair", "latitude", "spin")
GEN_DEFAULTS = {
    "trine": {"a": 1.0, "theta": math.pi / 2, "n": 3},
    "pair": {"a": 0.6, "theta": math.pi / 2, "n": 2},
    "latitude": {"a": 0.6, "theta": math.pi / 4, "n": 3},
    "spin": {"two_j": 2, "a": 0.3, "theta": 1.0472, "n": 4, "phi": 0.0},
}


# ---------------------------
# LOGGING
# ---------------------------
def configure_logging(verbose=0, quiet=False):
    """Logs go to stderr; level from -v/-q, else MED_LAB_LOG_LEVEL, else WARNING."""
    if quiet:
        level = logging.ERROR
    elif verbose >= 2:
        level = logging.DEBUG
    elif verbose == 1:
        level = logging.INFO
    else:
        level = logging.getLevelName(os.environ.get(LOG_LEVEL_ENV, "WARNING").upper())
        if not isinstance(level, int):
            level = logging.WARNING
    logging.basicConfig(
        stream=sys.stderr,
        level=level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        force=True,
    )


@contextlib.contextmanager
def _timed(timings, stage):
    start = time.perf_counter()
    try:
        yield
    finally:
        timings[stage] = round(1000.0 * (time.perf_counter() - start), 3)


# ---------------------------
# SOLVE
# ---------------------------
@dataclass
class SolveReport:
    ensemble_digest: str
    method_used: str
    p_opt: float | None
    applicability: str
    certificate: object | None
    helstrom_family_summary: dict | None
    p_closed: float | None = None
    p_oracle: float | None = None
    oracle: dict | None = None
    srm_p: float | None = None
    srm_gap: float | None = None
    upper_bound: float | None = None
    timings: dict = field(default_factory=dict)

    @property
    def certified(self):
        return self.certificate is not None and self.certificate.passed

    @property
    def label(self):
        if self.certificate is None:
            return "inapplicable"
        return "optimal" if self.certified else "best-found"

    @property
    def exit_code(self):
        return 0 if self.certified else 2

    def to_dict(self, include_timings=False):
        document = {
            "ensemble_digest": self.ensemble_digest,
            "method_used": self.method_used,
            "label": self.label,
            "p_opt": self.p_opt,
            "applicability": self.applicability,
            "certificate": None if self.certificate is None else self.certificate.to_dict(),
            "helstrom_family_summary": self.helstrom_family_summary,
            "p_closed": self.p_closed,
            "p_oracle": self.p_oracle,
            "oracle": self.oracle,
            "srm": {"p": self.srm_p, "gap": self.srm_gap},
            "upper_bound": self.upper_bound,
        }
        if include_timings:
            document["timings_ms"] = dict(self.timings)
        return document


def _family_upper_bound(ensemble, closed):
    """The closed-form ratio when its implied Helstrom family verifies, else None."""
    if closed is None or closed.is_solved or closed.tau_1 is None:
        return None
    try:
        family = closed_form_family(closed, ensemble)
    except PreconditionError as e:
        logger.debug("no closed-form family: %s", e)
        return None
    ok, defect = verify_helstrom_family(ensemble, family)
    logger.debug("closed-form family defect %.3e", defect)
    return float(closed.p_opt) if ok else None


def solve_ensemble(ensemble, method="both", tol=CERTIFY_TOL, seed=DEFAULT_SEED, max_iter=ORACLE_MAX_ITER):
    """Closed form and/or oracle, then certification and Helstrom family extraction."""
    if method not in METHODS:
        raise UsageError(f"unsupported method {method!r}; choose from {', '.join(METHODS)}")
    timings = {}
    closed = oracle = None
    if method in ("closed", "both"):
        with _timed(timings, "closed_form"):
            closed = solve_closed_form(ensemble)
        logger.info("closed form: %s (%s)", closed.applicability.value, closed.note or "ok")
    if method in ("oracle", "both"):
        with _timed(timings, "oracle"):
            oracle = fixed_point_solve(ensemble, max_iter=max_iter, seed=seed)

    applicability = closed.applicability.value if closed is not None else "n/a"
    if closed is not None and closed.is_solved:
        povm, p_opt = closed.povm, float(closed.p_opt)
        method_used = "both" if oracle is not None else "closed_form"
    elif oracle is not None:
        povm, p_opt, method_used = oracle.povm, oracle.p, "oracle"
    else:
        povm, p_opt, method_used = None, None, "closed_form"

    certificate = family_summary = None
    if povm is not None:
        with _timed(timings, "certify"):
            certificate = certify_optimal(ensemble, povm, tol)
            if certificate.passed:
                try:
                    family = extract_helstrom_family(ensemble, povm, tol)
                    certificate = certify_optimal(ensemble, povm, tol, family)
                    family_summary = family.summary()
                except ExtractionError as e:
                    logger.warning("Helstrom family extraction failed: %s", e)

    with _timed(timings, "srm"):
        srm_p = success_probability(ensemble, srm(ensemble))

    return SolveReport(
        ensemble_digest=ensemble_digest(ensemble),
        method_used=method_used,
        p_opt=p_opt,
        applicability=applicability,
        certificate=certificate,
        helstrom_family_summary=family_summary,
        p_closed=float(closed.p_opt) if closed is not None and closed.is_solved else None,
        p_oracle=None if oracle is None else oracle.p,
        oracle=None if oracle is None else oracle.to_dict(),
        srm_p=srm_p,
        srm_gap=None if p_opt is None else p_opt - srm_p,
        upper_bound=_family_upper_bound(ensemble, closed),
        timings=timings,
    )


def _print_solve(report):
    if report.certificate is None:
        print(f"⚠️ no closed form applies ({report.applicability}); rerun with --method both or oracle")
    else:
        marker = "✅" if report.certified else "⚠️"
        print(f"{marker} {report.label}: p_opt = {report.p_opt:.12g} via {report.method_used} ({report.applicability})")
        _print_certificate(report.certificate, indent="   ")
    if report.helstrom_family_summary is not None:
        summary = report.helstrom_family_summary
        taus = ", ".join("degenerate" if v is None else f"{v:.3e}" for v in summary["tau_min_eigenvalues"])
        print(f"   Helstrom ratio {summary['ratio']:.12g}; tau min eigenvalues: {taus}")
    if report.p_closed is not None and report.p_oracle is not None:
        print(f"   oracle cross-check: p_oracle = {report.p_oracle:.12g} (diff {abs(report.p_closed - report.p_oracle):.3e})")
    if report.srm_gap is not None:
        print(f"   SRM: p = {report.srm_p:.12g}, gap {report.srm_gap:.3e}")
    if report.upper_bound is not None:
        print(f"   closed-form Helstrom ratio {report.upper_bound:.12g} is an upper bound")
    for stage, ms in report.timings.items():
        print(f"   {stage}: {ms:.1f} ms")


def _print_certificate(certificate, indent=""):
    print(f"{indent}certificate: {certificate.verdict} at tol {certificate.tol:g}; Tr(M) = {certificate.trace_m:.12g}")
    print(f"{indent}hermiticity defect {certificate.hermiticity_defect:.3e}; "
          f"completeness defect {certificate.completeness_defect:.3e}; "
          f"POVM min eigenvalue {certificate.povm_min_eigenvalue:.3e}")
    margins = ", ".join(f"{m:.3e}" for m in certificate.psd_margins)
    print(f"{indent}PSD margins: {margins}")
    if certificate.complementarity is not None:
        traces = ", ".join(f"{t:.3e}" for t in certificate.complementarity)
        print(f"{indent}Tr(tau_j Pi_j): {traces}")


def _emit_json(document):
    print(json.dumps(document, sort_keys=True, indent=2))


def cmd_solve(args):
    ensemble = load_ensemble(args.path)
    report = solve_ensemble(ensemble, args.method, args.tol, args.seed, args.max_iter)
    if args.json:
        _emit_json(report.to_dict(include_timings=args.timings))
    else:
        if not args.timings:
            report.timings = {}
        _print_solve(report)
    return report.exit_code


# ---------------------------
# CERTIFY
# ---------------------------
def cmd_certify(args):
    ensemble = load_ensemble(args.ensemble)
    povm = parse_povm_file(Path(args.povm).read_text(encoding="utf-8"), dim=ensemble.dim)
    certificate = certify_optimal(ensemble, povm, args.tol)
    if args.json:
        _emit_json(certificate.to_dict())
    else:
        marker = "✅" if certificate.passed else "⚠️"
        print(f"{marker} {certificate.verdict}: p = {certificate.success_probability:.12g}")
        _print_certificate(certificate, indent="   ")
    return 0 if certificate.passed else 2


# ---------------------------
# SWEEP
# ---------------------------
def parse_grid(text):
    """``"a=0,0.1;theta=0.5"`` -> {"a": [0.0, 0.1], "theta": [0.5]} with sorted values."""
    grid = {}
    for chunk in filter(None, (part.strip() for part in text.split(";"))):
        name, _, values = chunk.partition("=")
        name = name.strip()
        if name not in SWEEP_FIELDS:
            raise UsageError(f"unknown swept field {name!r}; choose from {', '.join(SWEEP_FIELDS)}")
        if name in grid:
            raise UsageError(f"field {name!r} is swept twice")
        try:
            numbers = [float(v) for v in values.split(",") if v.strip()]
        except ValueError as e:
            raise UsageError(f"grid values for {name!r}: {e}") from e
        if not numbers:
            raise UsageError(f"no values given for {name!r}")
        if name in ("n", "two_j"):
            if any(not v.is_integer() for v in numbers):
                raise UsageError(f"{name!r} takes integer values")
            numbers = [int(v) for v in numbers]
        grid[name] = sorted(set(numbers))
    if not grid:
        raise UsageError("empty grid")
    return grid


def load_sweep_template(path):
    """Spin-orbit constructor body of a template file; it must name every swept field."""
    document = json.loads(Path(path).read_text(encoding="utf-8"))
    ensemble_from_document(document)
    states = document["states"]
    if len(states) != 1 or "spin_orbit" not in states[0]:
        raise UsageError("a sweep template holds exactly one spin_orbit state entry")
    body = dict(states[0]["spin_orbit"])
    parse_spin_params(body, "states[0].spin_orbit")
    return body


def sweep_point(body, point, seed=DEFAULT_SEED, tol=CERTIFY_TOL):
    """One CSV row: swept params, formula, closed form, oracle and certification."""
    values = {**body, **point}
    params = SpinLatitudeParams(
        two_j=int(values["two_j"]), a=float(values["a"]), theta=float(values["theta"]),
        phi=float(values["phi"]), n=int(values["n"]),
    )
    closed = solve_spin_latitude(params)
    ensemble = cyclic_spin_ensemble(params)
    oracle = fixed_point_solve(ensemble, seed=seed)
    # inapplicable rows have no closed-form POVM, so their margin is the oracle's
    source = "closed_form" if closed.is_solved else "oracle"
    margin = certify_optimal(ensemble, closed.povm if closed.is_solved else oracle.povm, tol).margin_min
    return {
        **point,
        "p_formula": params.formula_p_opt(),
        "p_closed": float(closed.p_opt) if closed.is_solved else np.nan,
        "p_oracle": oracle.p,
        "certified": int(closed.is_solved),
        "margin_min": margin,
        "margin_source": source,
        "applicability": closed.applicability.value,
    }


def run_sweep(body, grid, seed=DEFAULT_SEED, tol=CERTIFY_TOL):
    """Rows in lexicographic grid order (fields by name, values ascending)."""
    fields = sorted(grid)
    missing = [name for name in fields if name not in body]
    if missing:
        raise UsageError(f"template does not name swept fields {missing}")
    rows = []
    for values in itertools.product(*(grid[name] for name in fields)):
        point = dict(zip(fields, values))
        logger.info("sweep point %s", point)
        rows.append(sweep_point(body, point, seed, tol))
    return pd.DataFrame(rows, columns=fields + ["p_formula", "p_closed", "p_oracle", "certified", "margin_min",
                                               "margin_source", "applicability"])


def cmd_sweep(args):
    body = load_sweep_template(args.template)
    table = run_sweep(body, parse_grid(args.grid), args.seed, args.tol)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    table.to_csv(args.out, index=False)
    print(f"✅ Saved {len(table)} rows to {args.out} ({int(table['certified'].sum())} certified)")
    return 0


# ---------------------------
# GEN
# ---------------------------
def gen_document(kind, **params):
    """Ensemble document for one of the example kinds; unset params take GEN_DEFAULTS."""
    if kind not in GEN_KINDS:
        raise UsageError(f"unknown kind {kind!r}; choose from {', '.join(GEN_KINDS)}")
    values = {**GEN_DEFAULTS[kind], **{k: v for k, v in params.items() if v is not None}}
    if kind == "spin":
        body = {name: values[name] for name in ("two_j", "a", "theta", "phi", "n")}
        document = {"dim": int(values["two_j"]) + 1, "priors": "equal", "states": [{"spin_orbit": body}]}
    else:
        n = int(values["n"])
        phis = [2.0 * math.pi * k / n for k in range(n)]
        body = {"a": float(values["a"]), "theta": float(values["theta"]), "phis": phis}
        document = {"dim": 2, "priors": "equal", "states": [{"bloch_latitude": body}]}
    ensemble_from_document(document)
    return document


def cmd_gen(args):
    document = gen_document(args.kind, a=args.a, theta=args.theta, n=args.n, two_j=args.two_j, phi=args.phi)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(document, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    print(f"✅ Saved {args.kind} ensemble to {out}")
    return 0


# ---------------------------
# ENTRY POINT
# ---------------------------
class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("-v", "--verbose", action="count", default=0, help="-v for INFO, -vv for DEBUG logs")
    common.add_argument("-q", "--quiet", action="store_true", help="only log errors")

    parser = _Parser(prog="med-lab", description="Minimum-error discrimination: solve, certify, sweep, generate.")
    commands = parser.add_subparsers(dest="command", required=True)

    solve = commands.add_parser("solve", parents=[common], help="solve and certify an ensemble file")
    solve.add_argument("path")
    solve.add_argument("--method", choices=METHODS, default="both")
    solve.add_argument("--tol", type=float, default=CERTIFY_TOL)
    solve.add_argument("--json", action="store_true", help="emit one JSON report on stdout")
    solve.add_argument("--seed", type=int, default=DEFAULT_SEED)
    solve.add_argument("--max-iter", dest="max_iter", type=int, default=ORACLE_MAX_ITER)
    solve.add_argument("--timings", action="store_true", help="report per-stage wall time")
    solve.set_defaults(handler=cmd_solve)

    certify = commands.add_parser("certify", parents=[common], help="certify a POVM file against an ensemble")
    certify.add_argument("ensemble")
    certify.add_argument("povm")
    certify.add_argument("--tol", type=float, default=CERTIFY_TOL)
    certify.add_argument("--json", action="store_true")
    certify.set_defaults(handler=cmd_certify)

    sweep = commands.add_parser("sweep", parents=[common], help="closed form vs oracle over a parameter grid")
    sweep.add_argument("template")
    sweep.add_argument("--grid", required=True, help='e.g. "a=0,0.25,0.5;theta=0.5236,1.0472"')
    sweep.add_argument("--out", required=True)
    sweep.add_argument("--seed", type=int, default=DEFAULT_SEED)
    sweep.add_argument("--tol", type=float, default=CERTIFY_TOL)
    sweep.set_defaults(handler=cmd_sweep)

    gen = commands.add_parser("gen", parents=[common], help="write an example ensemble file")
    gen.add_argument("kind", choices=GEN_KINDS)
    gen.add_argument("--a", type=float)
    gen.add_argument("--theta", type=float, help="radians")
    gen.add_argument("--phi", type=float, help="radians")
    gen.add_argument("--n", type=int)
    gen.add_argument("--two_j", "--two-j", dest="two_j", type=int)
    gen.add_argument("--out", required=True)
    gen.set_defaults(handler=cmd_gen)
    return parser


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        print(f"❌ {e}", file=sys.stderr)
        return 1
    configure_logging(args.verbose, args.quiet)
    try:
        return args.handler(args)
    except (MedError, OSError, json.JSONDecodeError) as e:
        logger.error("%s failed: %s", args.command, e)
        if getattr(args, "json", False):
            _emit_json({"error": str(e), "field_path": getattr(e, "field_path", None)})
        else:
            print(f"❌ {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
