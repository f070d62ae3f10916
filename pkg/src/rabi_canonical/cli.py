"""Command-line front end: ``rabi-canonical <command> [options]``.

Exit codes: 0 success, 1 invalid input, 2 numerical non-convergence.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np

from . import juddian, kummer, oracle
from .birkhoff import recurrence_solve, verify_canonicalization
from .errors import ConvergenceError, NotEntireError, SpuriousRootError
from .model import (
    RabiParams,
    canonical_system,
    initial_system,
    initial_system_residual,
    parity_image,
    a12_for,
)

log = logging.getLogger("rabi_canonical")

SCHEMA_VERSION = 1
EXIT_OK, EXIT_INPUT, EXIT_CONVERGENCE = 0, 1, 2
LOG_LEVELS = {"quiet": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def parse_range(text: str) -> list[float]:
    """``"x"`` or inclusive ``"start:stop:step"`` with positive step."""
    parts = text.split(":")
    try:
        nums = [float(p) for p in parts]
    except ValueError:
        raise UsageError(f"not a number or range: {text!r}") from None
    if len(nums) == 1:
        return nums
    if len(nums) != 3:
        raise UsageError(f"range must be start:stop:step, got {text!r}")
    start, stop, step = nums
    if not step > 0:
        raise UsageError("range step must be positive")
    if stop < start:
        raise UsageError("range stop lies below start")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 12) for i in range(count)]


def _positive(name, value):
    if value is not None and not value > 0:
        raise UsageError(f"{name} must be positive")


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.12g" % value
    return str(value)


def _json_value(value):
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return v if math.isfinite(v) else None
    return value


def render(columns, rows, kind: str, extra=None) -> str:
    if kind == "json":
        doc = {"schema_version": SCHEMA_VERSION, "columns": list(columns),
               "records": [{c: _json_value(v) for c, v in zip(columns, r)} for r in rows]}
        if extra:
            doc.update(extra)
        return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


def _emit(args, text):
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _map(func, items, jobs):
    if jobs <= 1 or len(items) <= 1:
        return [func(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(func, items))


# ---- spectrum -------------------------------------------------------------

SPECTRUM_COLUMNS = ("lambda", "mu", "level_index", "energy", "parity", "cutoff_used", "converged")


def _spectrum_point(job):
    lam, mu, levels, tol, cutoff_max, gap_tol = job
    params = RabiParams(lam, mu)
    try:
        sres = oracle.converged_spectrum(params, levels, tol=tol, cutoff_max=cutoff_max, gap_tol=gap_tol)
    except ConvergenceError as exc:
        log.warning("lambda=%g mu=%g: %s", lam, mu, exc)
        return [(lam, mu, i, float("nan"), 0, cutoff_max, False) for i in range(levels)], False
    rows = [(lam, mu, i, float(e), int(p), sres.cutoff_used, True)
            for i, (e, p) in enumerate(zip(sres.eigenvalues, sres.parity))]
    return rows, True


def cmd_spectrum(args) -> int:
    lams, mus = parse_range(args.lam), parse_range(args.mu)
    levels = args.levels or 6
    _positive("--levels", levels)
    for lam in lams:
        for mu in mus:
            RabiParams(lam, mu)  # reject lam = mu = 0 up front
    jobs = [(lam, mu, levels, args.tol or 1e-10, args.cutoff_max or oracle.CUTOFF_MAX,
             args.gap_tol or 1e-6) for lam in lams for mu in mus]
    results = _map(_spectrum_point, jobs, args.jobs)
    rows = [r for rs, _ in results for r in rs]
    _emit(args, render(SPECTRUM_COLUMNS, rows, args.format or "csv"))
    return EXIT_OK if all(ok for _, ok in results) else EXIT_CONVERGENCE


# ---- juddian --------------------------------------------------------------

JUDDIAN_COLUMNS = ("n", "mu", "lambda", "E", "oracle_gap", "validated")


def _juddian_seeds(n, mu):
    if n == 1:
        return [juddian.baseline_curve_n1(mu).lam]
    if n == 2:
        return [pt.lam for pt in juddian.baseline_curve_n2(mu)]
    return juddian.oracle_seeds(n, mu)


def _juddian_point(job):
    n, mu, gap_tol = job
    rows, ok = [], True
    for seed in _juddian_seeds(n, mu):
        try:
            pt = juddian.solve_terminating(n, mu, seed=seed, validate=False)
        except ConvergenceError as exc:
            log.warning("n=%d mu=%g seed %.6f: %s", n, mu, seed, exc)
            ok = False
            continue
        try:
            pt = juddian.validate_point(pt, gap_tol)
        except SpuriousRootError as exc:
            log.warning("%s", exc)
            gap, _, _ = oracle.pair_gap_at(pt.params, pt.E)
            pt = replace(pt, oracle_gap=gap)
        if any(abs(r[2] - pt.lam) < 1e-8 for r in rows):
            continue
        rows.append((n, mu, pt.lam, pt.E, pt.oracle_gap, pt.validated))
    return rows, ok


def cmd_juddian(args) -> int:
    n = args.n if args.n is not None else 1
    if n < 1:
        raise UsageError("--n must be at least 1")
    mus = parse_range(args.mu)
    for mu in mus:
        if n == 1:
            juddian.baseline_curve_n1(mu)
        elif not 0 < mu <= n:
            raise UsageError(f"μ out of constraint range: need 0 < μ <= {n}")
    results = _map(_juddian_point, [(n, mu, args.gap_tol or juddian.ORACLE_GAP_TOL) for mu in mus],
                   args.jobs)
    rows = [r for rs, _ in results for r in rs]
    _emit(args, render(JUDDIAN_COLUMNS, rows, args.format or "csv"))
    return EXIT_OK if all(ok for _, ok in results) else EXIT_CONVERGENCE


# ---- canonicalize ---------------------------------------------------------

CANON_COLUMNS = ("lambda", "mu", "E", "A", "order", "row", "col", "re", "im")


def _canonicalize_point(job):
    lam, mu, E, A, depth = job
    params = RabiParams(lam, mu, E)
    desc = initial_system(params, depth + 1)
    canon = canonical_system(params, a12_for(params, A), depth + 1)
    t = recurrence_solve(desc, canon, depth)
    res = verify_canonicalization(desc, t, canon)
    rows = [(lam, mu, E, A, k, i + 1, j + 1, float(c.real), float(c.imag))
            for k, mat in enumerate(t.a_coeffs) for i in range(2) for j in range(2)
            for c in [mat[i, j]]]
    return rows, {"lambda": lam, "mu": mu, "E": E, "terminated": t.terminated,
                  "order": t.order, "residual": res, "resonant_orders": list(t.resonant_orders)}


def cmd_canonicalize(args) -> int:
    lams, mus = parse_range(args.lam), parse_range(args.mu)
    depth = args.depth
    _positive("--depth", depth)
    jobs = [(lam, mu, args.energy, args.A, depth) for lam in lams for mu in mus]
    for lam, mu, *_ in jobs:
        RabiParams(lam, mu)
        if lam == 0.0 and args.A != mu:
            raise UsageError("for λ = 0 the canonical coupling is A = μ")
    results = _map(_canonicalize_point, jobs, args.jobs)
    rows = [r for rs, _ in results for r in rs]
    summary = [s for _, s in results]
    for s in summary:
        log.info("lambda=%g mu=%g: order %d, terminated=%s, residual %.2e",
                 s["lambda"], s["mu"], s["order"], s["terminated"], s["residual"])
    _emit(args, render(CANON_COLUMNS, rows, args.format or "csv",
                       extra={"transforms": [{k: _json_value(v) if not isinstance(v, list) else v
                                              for k, v in s.items()} for s in summary]}))
    return EXIT_OK


# ---- kummer ---------------------------------------------------------------

KUMMER_COLUMNS = ("a", "c", "z_re", "z_im", "value_re", "value_im", "terms", "achieved_tol")


def _complex(text):
    try:
        return complex(text.replace(" ", ""))
    except ValueError:
        raise UsageError(f"not a number: {text!r}") from None


def cmd_kummer(args) -> int:
    a, c = float(args.a), float(args.c)
    rows = []
    for ztext in args.z:
        z = _complex(ztext)
        val, info = kummer.kummer_1f1(a, c, z, tol=args.tol or 1e-16, full_output=True)
        rows.append((a, c, z.real, z.imag, val.real, val.imag, info["terms"], info["achieved_tol"]))
    _emit(args, render(KUMMER_COLUMNS, rows, args.format or "csv"))
    return EXIT_OK


# ---- verify ---------------------------------------------------------------

VERIFY_COLUMNS = ("check", "passed", "value", "threshold")


def _check(name, value, threshold, below=True):
    passed = bool(value < threshold) if below else bool(value > threshold)
    return (name, passed, float(value), float(threshold))


def _suite_default(fault):
    checks = []
    rng = np.random.default_rng(20260101)
    worst = 0.0
    for _ in range(3):
        lam, mu, E = rng.uniform(0.1, 1.0), rng.uniform(0.1, 1.0), rng.uniform(-1.0, 2.0)
        params = RabiParams(lam, mu, E)
        desc = initial_system(params, 41)
        canon = canonical_system(params, a12_for(params, 0.0), 41)
        t = recurrence_solve(desc, canon, 40)
        if fault:
            a = t.a_coeffs.copy()
            a[1] += 1e-3
            t = type(t)(a, t.terminated, t.window_residual, t.resonant_orders)
        worst = max(worst, verify_canonicalization(desc, t, canon))
    checks.append(_check("canonicalization_closure", worst, 1e-10))

    zs = [3 * np.exp(1j * k) for k in range(5)]
    kerr = max(abs(kummer.kummer_1f1(1, 1, z) - np.exp(z)) / abs(np.exp(z)) for z in zs)
    checks.append(_check("kummer_exponential_identity", kerr, 1e-12))

    params = RabiParams(0.4, 0.6, 0.3)
    F1, F2 = kummer.solution_functions(params, 0.7, "+")
    ode = max(kummer.canonical_residual(params, 0.7, F1, F2, np.exp(1j * (0.3 + k))) for k in range(6))
    checks.append(_check("canonical_ode_residual", ode, 1e-9))

    sres = oracle.converged_spectrum(RabiParams(0.5, 0.0), 8)
    expect = np.repeat(np.arange(4) - 0.25, 2)
    checks.append(_check("uncoupled_spectrum", float(np.abs(sres.eigenvalues - expect).max()), 1e-8))

    H = oracle.build_hamiltonian_matrix(RabiParams(0.7, 0.3), 40).matrix
    Pi = oracle.parity_operator(40)
    checks.append(_check("parity_commutator", float(np.abs(Pi @ H - H @ Pi).max()), 1e-13))

    pt = juddian.baseline_curve_n1(0.6)
    gap, _, _ = oracle.pair_gap_at(pt.params, pt.E)
    checks.append(_check("kus_n1_oracle_gap", gap, 1e-6))
    return checks


def _suite_point(lam, mu, n, fault):
    checks = []
    eqs = juddian.terminating_equations(n)
    params = RabiParams(lam, mu, n - lam * lam)
    desc = initial_system(params, n + 6)
    canon = canonical_system(params, -mu / (2 * lam), n + 6)
    t = recurrence_solve(desc, canon, n)
    x = eqs.pack(lam, t)
    if fault:
        x[1] += 1e-3
    checks.append(_check("terminating_equations", float(np.abs(eqs.residuals(x, mu)).max()), 1e-10))
    extra = eqs.order_residuals(x, mu, range(n + 1, n + 5))
    checks.append(_check("higher_order_identities", float(np.abs(extra).max()), 1e-9))
    gap, offset, sres = oracle.pair_gap_at(params, params.E)
    checks.append(_check("oracle_gap", gap, 1e-6))
    checks.append(_check("oracle_energy_offset", offset, 1e-6))
    pt = juddian.JuddianPoint(n, lam, mu, params.E, eqs.transform(x, mu))
    try:
        ef = juddian.reconstruct_eigenfunction(pt, sres.cutoff_used)
    except NotEntireError:
        checks.append(("eigenfunction_entire", False, float("nan"), 1e-12))
        return checks
    idx = np.argsort(np.abs(sres.eigenvalues - params.E))[:2]
    overlap = juddian.subspace_overlap(ef.fock.T, sres.vectors[:, idx])
    checks.append(_check("eigenfunction_overlap", overlap, 1 - 1e-6, below=False))
    if overlap > 0.5:
        g1, g2 = parity_image(*_solution_callables(ef.taylor[0]))
        r = max(initial_system_residual(params, g1, g2, z) for z in (0.3 + 0.2j, -0.5 + 0.4j, 0.9j))
        checks.append(_check("parity_image_residual", r, 1e-9))
    return checks


def _solution_callables(taylor):
    c1, c2 = taylor

    def f1(z):
        return np.polynomial.polynomial.polyval(z, c1)

    def f2(z):
        return np.polynomial.polynomial.polyval(z, c2)

    return f1, f2


def cmd_verify(args) -> int:
    if args.point:
        try:
            lam, mu, n = (float(v) for v in args.point.split(","))
        except ValueError:
            raise UsageError("--point expects lambda,mu,n") from None
        if n != int(n) or n < 1 or not lam > 0 or not 0 < mu <= n:
            raise UsageError("--point needs λ > 0, integer n >= 1 and 0 < μ <= n")
        checks = _suite_point(lam, mu, int(n), args.inject_fault)
    else:
        checks = _suite_default(args.inject_fault)
    failed = [c[0] for c in checks if not c[1]]
    for name in failed:
        log.error("invariant violated: %s", name)
    _emit(args, render(VERIFY_COLUMNS, checks, args.format or "json",
                       extra={"passed": not failed, "failed": failed}))
    return EXIT_OK if not failed else EXIT_CONVERGENCE


# ---- entry point ----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--lambda", dest="lam", default="0.4", help="value or start:stop:step")
    common.add_argument("--mu", default="0.6", help="value or start:stop:step")
    common.add_argument("--levels", type=int)
    common.add_argument("--n", type=int)
    common.add_argument("--tol", type=float)
    common.add_argument("--gap-tol", type=float)
    common.add_argument("--cutoff-max", type=int)
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--output", metavar="PATH")
    common.add_argument("--jobs", type=int, default=1)

    p = _Parser(prog="rabi-canonical", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("spectrum", parents=[common], help="converged oracle spectrum on a grid")
    sub.add_parser("juddian", parents=[common], help="exact degenerate points of order n")
    c = sub.add_parser("canonicalize", parents=[common], help="transformation coefficients")
    c.add_argument("--energy", type=float, default=0.0)
    c.add_argument("--A", type=float, default=0.0, help="canonical coupling")
    c.add_argument("--depth", type=int, default=12)
    k = sub.add_parser("kummer", parents=[common], help="evaluate 1F1(a; c; z)")
    k.add_argument("--a", type=float, required=True)
    k.add_argument("--c", type=float, required=True)
    k.add_argument("--z", action="append", required=True, help="complex argument, repeatable")
    v = sub.add_parser("verify", parents=[common], help="run invariant checks")
    v.add_argument("--point", metavar="LAMBDA,MU,N")
    v.add_argument("--inject-fault", action="store_true", help="perturb the transform (negative control)")
    return p


def _configure_logging():
    level = os.environ.get("RABI_CANONICAL_LOG", "quiet").strip().lower()
    logging.basicConfig(level=LOG_LEVELS.get(level, logging.ERROR), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    _configure_logging()
    args = build_parser().parse_args(argv)
    try:
        for name in ("tol", "gap_tol", "cutoff_max", "levels"):
            _positive("--" + name.replace("_", "-"), getattr(args, name))
        if args.jobs < 1:
            raise UsageError("--jobs must be at least 1")
        handler = {"spectrum": cmd_spectrum, "juddian": cmd_juddian, "canonicalize": cmd_canonicalize,
                   "kummer": cmd_kummer, "verify": cmd_verify}[args.command]
        return handler(args)
    except (UsageError, ValueError) as exc:
        print(f"rabi-canonical: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ConvergenceError as exc:
        print(f"rabi-canonical: not converged: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
