"""Command-line interface.

Results go to stdout (JSON, or CSV for ``bench``) or to ``--out``; logs go to
stderr.  Exit codes: 0 success, 1 no SONC bound or invalid certificate,
2 usage error, 3 numerical failure.
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
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from sonc.circuits import SupportTooLargeForEnumeration, enumerate_circuits
from sonc.instances import (
    ORACLE_MAX_SUPPORT,
    GeneratorSpec,
    NotEnoughInteriorMonomials,
    generate,
    local_upper_bound,
    oracle_bound,
)
from sonc.polyrep import PolynomialError, dump_polynomial, load_polynomial
from sonc.soncbound import (
    NoSoncBound,
    SoncCertificate,
    SoncConfig,
    SolverFailure,
    sonc_bound,
    verify_certificate,
)

EXIT_OK, EXIT_NO_BOUND, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3
LOG_LEVELS = {"quiet": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}

log = logging.getLogger("sonc")


class UsageError(Exception):
    pass


def write_atomic(path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit(args, text: str) -> None:
    if getattr(args, "out", None):
        write_atomic(args.out, text)
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def to_json(obj) -> str:
    return json.dumps(obj, indent=1, allow_nan=True)


def _positive(kind):
    def parse(s):
        v = kind(s)
        if v <= 0:
            raise argparse.ArgumentTypeError(f"{s} is not positive")
        return v

    return parse


def _input_file(s):
    if not Path(s).is_file():
        raise argparse.ArgumentTypeError(f"no such file: {s}")
    return s


def _output_file(s):
    parent = Path(s).resolve().parent
    if not parent.is_dir():
        raise argparse.ArgumentTypeError(f"directory does not exist: {parent}")
    return s


def _exponent(s):
    try:
        return tuple(int(x) for x in s.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {s}") from None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sonc", description="SONC lower bounds for sparse polynomials.")
    ap.add_argument("-v", "--verbose", action="count", default=0, help="more logging on stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    def solver_opts(p):
        p.add_argument("--gap-tol", type=_positive(float), default=1e-8)
        p.add_argument("--viol-tol", type=_positive(float), default=1e-8)
        p.add_argument("--max-rounds", type=_positive(int), default=60)
        p.add_argument("--phase1-shift", type=_positive(float), default=None)
        p.add_argument("--skip-phase1", action="store_true")

    p = sub.add_parser("bound", help="certified SONC lower bound")
    p.add_argument("--input", required=True, type=_input_file)
    p.add_argument("--cert", type=_output_file, help="write the certificate here")
    p.add_argument("--report", type=_output_file, help="per-round CSV report")
    p.add_argument("--out", type=_output_file)
    solver_opts(p)

    p = sub.add_parser("verify", help="check a certificate")
    p.add_argument("--input", required=True, type=_input_file)
    p.add_argument("--cert", required=True, type=_input_file)
    p.add_argument("--tol", type=_positive(float), default=1e-8)
    p.add_argument("--out", type=_output_file)

    p = sub.add_parser("gen", help="random instance(s) with simplex Newton polytope")
    p.add_argument("--n", required=True, type=_positive(int))
    p.add_argument("--d", required=True, type=_positive(int))
    p.add_argument("--terms", required=True, type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=_positive(int), default=None, help="batch size; needs --out-dir")
    p.add_argument("--out-dir", type=str, default=None)
    p.add_argument("--out", type=_output_file)

    p = sub.add_parser("enumerate", help="all circuits on the support")
    p.add_argument("--input", required=True, type=_input_file)
    p.add_argument("--inner", type=_exponent, default=None)
    p.add_argument("--out", type=_output_file)

    p = sub.add_parser("oracle-bound", help="bound with every circuit (small supports)")
    p.add_argument("--input", required=True, type=_input_file)
    p.add_argument("--out", type=_output_file)
    solver_opts(p)

    p = sub.add_parser("localmin", help="multi-start local minimization")
    p.add_argument("--input", required=True, type=_input_file)
    p.add_argument("--starts", type=_positive(int), default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=_output_file)

    p = sub.add_parser("bench", help="bound statistics over generated instances (CSV)")
    p.add_argument("--n", required=True, type=_positive(int))
    p.add_argument("--d", required=True, type=_positive(int))
    p.add_argument("--terms", required=True, type=int)
    p.add_argument("--replicates", type=_positive(int), default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=_positive(int), default=None)
    p.add_argument("--out", type=_output_file)
    solver_opts(p)
    return ap


def config_from(args) -> SoncConfig:
    return SoncConfig(
        gap_tol=args.gap_tol,
        viol_tol=args.viol_tol,
        max_rounds=args.max_rounds,
        phase1_shift=args.phase1_shift,
        skip_phase1=args.skip_phase1,
    )


def no_bound_payload(exc: NoSoncBound) -> dict:
    ev = exc.evidence
    return {
        "status": "no_bound",
        "reason": ev.reason,
        "exponent": list(ev.exponent) if ev.exponent is not None else None,
        "value": ev.value,
    }


# ---------------------------------------------------------------- commands


def cmd_bound(args) -> int:
    p = load_polynomial(args.input)
    res = sonc_bound(p, config_from(args))
    if args.cert:
        write_atomic(args.cert, to_json(res.certificate.to_json()))
    if args.report:
        write_atomic(args.report, res.report.to_csv())
    rep = res.report
    payload = {
        "status": "ok" if res.certified else "invalid",
        "bound": res.bound,
        "gamma": res.certificate.gamma,
        "certified": res.certified,
        "phase1Iterations": rep.phase1_iterations,
        "phase2Iterations": rep.phase2_iterations,
        "circuits": len(res.circuits),
        "termination": rep.termination_reason,
        "residual": res.verification.residual,
    }
    if not res.certified:
        payload["reason"] = res.verification.reason
    emit(args, to_json(payload))
    return EXIT_OK if res.certified else EXIT_NO_BOUND


def cmd_verify(args) -> int:
    p = load_polynomial(args.input)
    try:
        with open(args.cert, encoding="utf-8") as fh:
            cert = SoncCertificate.from_json(json.load(fh))
    except (KeyError, TypeError, ValueError) as exc:
        emit(args, to_json({"status": "invalid", "reason": "malformed", "details": [str(exc)]}))
        return EXIT_NO_BOUND
    rep = verify_certificate(p, cert, args.tol)
    emit(args, to_json({
        "status": "valid" if rep.valid else "invalid",
        "reason": rep.reason,
        "bound": cert.bound,
        "residual": rep.residual,
        "minMargin": rep.min_margin if math.isfinite(rep.min_margin) else None,
        "details": rep.details,
    }))
    return EXIT_OK if rep.valid else EXIT_NO_BOUND


def cmd_gen(args) -> int:
    if args.count is None:
        emit(args, dump_polynomial(generate(GeneratorSpec(args.n, args.d, args.terms, args.seed))))
        return EXIT_OK
    if not args.out_dir:
        raise UsageError("--count needs --out-dir")
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["file", "seed", "n", "d", "terms"])
    for k in range(args.count):
        seed = args.seed + k
        name = f"instance_{seed}.json"
        write_atomic(out / name, dump_polynomial(generate(GeneratorSpec(args.n, args.d, args.terms, seed))))
        w.writerow([name, seed, args.n, args.d, args.terms])
    write_atomic(out / "manifest.csv", buf.getvalue())
    return EXIT_OK


def cmd_enumerate(args) -> int:
    p = load_polynomial(args.input)
    circuits = enumerate_circuits(p, inner_only=args.inner)
    emit(args, to_json({"count": len(circuits), "circuits": [c.to_json() for c in circuits]}))
    return EXIT_OK


def cmd_oracle(args) -> int:
    p = load_polynomial(args.input)
    emit(args, to_json({"status": "ok", "bound": oracle_bound(p, config_from(args))}))
    return EXIT_OK


def cmd_localmin(args) -> int:
    p = load_polynomial(args.input)
    res = local_upper_bound(p, args.starts, args.seed)
    emit(args, to_json({
        "value": res.value if math.isfinite(res.value) else None,
        "argmin": [float(x) for x in res.argmin] if not res.all_diverged else None,
        "allDiverged": res.all_diverged,
    }))
    return EXIT_OK


BENCH_FIELDS = ["replicate", "seed", "status", "bound", "oracleBound", "oracleGap", "rounds", "circuits", "initialCircuits", "millis"]


def bench_row(job) -> dict:
    k, spec, cfg = job
    row = {f: "" for f in BENCH_FIELDS}
    row.update(replicate=k, seed=spec.seed)
    p = generate(spec)
    t0 = time.perf_counter()
    try:
        res = sonc_bound(p, cfg)
    except NoSoncBound:
        row["status"] = "no_bound"
        return row
    except SolverFailure:
        row["status"] = "numerical_failure"
        return row
    row["millis"] = round((time.perf_counter() - t0) * 1000)
    row.update(
        status="ok" if res.certified else "invalid",
        bound=repr(res.bound),
        rounds=res.report.phase2_iterations,
        circuits=len(res.circuits),
        initialCircuits=res.report.initial_circuits,
    )
    if len(p) <= ORACLE_MAX_SUPPORT:
        try:
            ob = oracle_bound(p, cfg)
            row["oracleBound"] = repr(ob)
            row["oracleGap"] = repr(ob - res.bound)
        except (NoSoncBound, SolverFailure):
            pass
    return row


def cmd_bench(args) -> int:
    cfg = config_from(args)
    jobs = [(k, GeneratorSpec(args.n, args.d, args.terms, args.seed + k), cfg) for k in range(args.replicates)]
    generate(jobs[0][1])  # surface generator errors before spawning workers
    workers = min(args.workers or os.cpu_count() or 1, len(jobs))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(bench_row, jobs))
    else:
        rows = [bench_row(j) for j in jobs]
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=BENCH_FIELDS, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    emit(args, buf.getvalue())
    return EXIT_OK


COMMANDS = {
    "bound": cmd_bound,
    "verify": cmd_verify,
    "gen": cmd_gen,
    "enumerate": cmd_enumerate,
    "oracle-bound": cmd_oracle,
    "localmin": cmd_localmin,
    "bench": cmd_bench,
}


def configure_logging(verbose: int) -> None:
    level = {0: logging.WARNING, 1: logging.INFO}.get(verbose, logging.DEBUG)
    env = os.environ.get("SONC_LOG", "").strip().lower()
    if env in LOG_LEVELS:
        level = LOG_LEVELS[env]
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    root = logging.getLogger("sonc")
    root.handlers[:] = [handler]
    root.setLevel(level)
    root.propagate = False


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    configure_logging(args.verbose)
    try:
        return COMMANDS[args.command](args)
    except NoSoncBound as exc:
        log.error("no SONC bound: %s", exc)
        emit(args, to_json(no_bound_payload(exc)))
        return EXIT_NO_BOUND
    except SolverFailure as exc:
        log.error("numerical failure: %s", exc)
        emit(args, to_json({"status": "numerical_failure", "reason": str(exc)}))
        return EXIT_NUMERIC
    except (UsageError, PolynomialError, NotEnoughInteriorMonomials, SupportTooLargeForEnumeration, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
