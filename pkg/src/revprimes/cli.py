"""Command-line entry point: tables, verify, census, bv, expsum, sweep.

Exit codes: 0 success, 1 verification or certification failure, 2 usage error,
3 resource budget exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
import warnings
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from . import constants, digits, expsums, fourier, kernel, sieve
from .expsums import CapExceeded
from .fourier import RangeTooLarge, RationalAngle
from .numerics import CertificationError, MarginWarning, QuadratureError, SearchCapError
from .sieve import BudgetExceeded

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3


class UsageError(ValueError):
    pass


@dataclass
class RunReport:
    command: str
    parameters: dict
    results: list[dict] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    wall_time: float = 0.0
    ok: bool = True


# --- output -----------------------------------------------------------------------


def _fmt_csv(v, full: bool):
    if isinstance(v, bool) or v is None:
        return v
    if isinstance(v, float):
        return repr(v) if full else f"{v:.10g}"
    return v


def _json_val(v):
    if isinstance(v, dict):
        return {k: _json_val(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_val(x) for x in v]
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        v = float(v)
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return v


def render(report: RunReport, fmt: str, full: bool) -> str:
    out = io.StringIO()
    if fmt == "json":
        for row in report.results:
            out.write(json.dumps({k: _json_val(v) for k, v in row.items()}) + "\n")
        meta = dict(command=report.command, parameters=report.parameters, ok=report.ok,
                    warnings=report.warnings)
        out.write(json.dumps({"report": {k: _json_val(v) for k, v in meta.items()}}) + "\n")
        return out.getvalue()
    keys: list[str] = []
    for row in report.results:
        for k in row:
            if k not in keys:
                keys.append(k)
    w = csv.writer(out, lineterminator="\n")
    if keys:
        w.writerow(keys)
        for row in report.results:
            w.writerow([_fmt_csv(row.get(k, ""), full) for k in keys])
    return out.getvalue()


# --- parsing helpers ----------------------------------------------------------------


def int_range(text: str) -> list[int]:
    """'5..8' or '5-8' or '5,6,8' or '7'."""
    out: list[int] = []
    for part in text.split(","):
        part = part.strip()
        for sep in ("..", "-"):
            if sep in part[1:]:
                a, b = part.split(sep, 1)
                lo, hi = int(a), int(b)
                if hi < lo:
                    raise argparse.ArgumentTypeError(f"empty range {part!r}")
                out.extend(range(lo, hi + 1))
                break
        else:
            out.append(int(part))
    return out


def omega_arg(text: str) -> float:
    if text.lower() in ("inf", "infinity", "none"):
        return math.inf
    return float(int(text))


# --- commands ----------------------------------------------------------------------


def cmd_tables(b_min: int = 2, b_max: int = 10) -> RunReport:
    if not 2 <= b_min <= b_max <= 16:
        raise UsageError("need 2 <= b_min <= b_max <= 16")
    rep = RunReport("tables", dict(b_min=b_min, b_max=b_max))
    for b in range(b_min, b_max + 1):
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            try:
                rec = constants.constants_record(b)
            except CertificationError as exc:
                rep.ok = False
                rep.warnings.append(f"b={b}: {exc}")
                continue
        for w in caught:
            rep.warnings.append(f"b={b}: {w.message}")
            if issubclass(w.category, MarginWarning):
                rep.ok = False
        row = asdict(rec)
        row["xi0_truncated"] = rec.xi0_truncated
        rep.results.append(row)
    return rep


def cmd_census(b: int, lam: int, omega_max: float = math.inf, z: float = 2, jobs: int = 1,
               cache_dir=None) -> RunReport:
    rep = RunReport("census", dict(b=b, lam=lam, omega_max=omega_max, z=z))
    rows = sieve.census(b, lam, omega_max, z, jobs=jobs, cache_dir=cache_dir)
    for c in rows:
        rep.results.append(c.as_dict())
    tot = dict(b=b, lam=lam, i="total")
    for k in ("size", "reversible", "omega_ok", "pminus_ok", "both"):
        tot[k] = sum(getattr(c, k) for c in rows)
    tot["c_lambda"] = tot["reversible"] * lam * lam / b**lam
    rep.results.append(tot)
    return rep


def cmd_bv(b: int, lams: list[int], D: int, jobs: int = 1, cache_dir=None) -> RunReport:
    rep = RunReport("bv", dict(b=b, lams=lams, D=D))
    for lam in lams:
        total, per_d = sieve.bv_statistic(b, lam, D, jobs=jobs, cache_dir=cache_dir)
        n = sieve.pi_lambda(b, lam, b**lam, cache_dir=cache_dir)
        for r in per_d:
            rep.results.append(dict(kind="deviation", lam=lam, d=r.d, value=r.sup_t_sup_a,
                                    admissible=r.admissible))
        rep.results.append(dict(kind="total", lam=lam, d=D, value=total, admissible=True))
        rep.results.append(dict(kind="normalized", lam=lam, d=D, value=total / n if n else 0.0,
                                admissible=True))
    return rep


def cmd_expsum(b: int, lam: int, h: int, d: int, weight: str = "vonmangoldt", t: int | None = None) -> RunReport:
    t = b**lam if t is None else t
    rep = RunReport("expsum", dict(b=b, lam=lam, h=h, d=d, weight=weight, t=t))
    s = expsums.lambda_exp_sum(expsums.ExpSumSpec(b, lam, RationalAngle(h, d), t, weight))
    rep.results.append(dict(b=b, lam=lam, h=h, d=d, t=t, real=s.real, imag=s.imag, abs=abs(s),
                            normalized=abs(s) / b**lam))
    return rep


def _sweep_rows(rows) -> list[dict]:
    return [dict(**r.params, lhs=r.lhs, rhs=r.rhs, ratio=r.ratio) for r in rows]


def cmd_sweep(kind: str, args) -> RunReport:
    rep = RunReport("sweep", dict(kind=kind))
    if kind == "lambda-sum":
        rep.parameters.update(b=args.b, lams=args.lams, h=args.h, d=args.d)
        rows = expsums.lambda_sum_sweep(args.b, args.lams, args.h, args.d, args.weight)
    elif kind == "type-i":
        rep.parameters.update(bs=args.bs, lams=args.lams, mus=args.mus, ds=args.ds)
        rows = expsums.type_I_sweep(args.bs, args.lams, args.mus, args.ds, args.h)
    elif kind == "carry":
        rep.parameters.update(b=args.b, mu=args.mu, nu=args.nu)
        rows = expsums.carry_sweep(args.b, args.mu, args.nu)
    else:
        raise UsageError(f"unknown sweep kind {kind!r}")
    rep.results.extend(_sweep_rows(rows))
    return rep


# --- verification suites ----------------------------------------------------------------

SIZES = {"small": 20, "medium": 200, "large": 1000}


def _suite_digits(rng, n):
    for _ in range(n):
        b = int(rng.integers(2, 11))
        lam = int(rng.integers(1, 9))
        x = int(rng.integers(0, b**lam))
        r = digits.reverse(x, b, lam)
        yield "involution", (b, lam, x), digits.reverse(r, b, lam) == x
        lp = int(rng.integers(0, lam + 1))
        n1, n2 = x % b**lp, x // b**lp
        yield "split law", (b, lam, lp, x), r == b ** (lam - lp) * digits.reverse(n1, b, lp) + digits.reverse(n2, b, lam - lp)
        yield "mod b-1", (b, lam, x), (r - x) % (b - 1) == 0
        yield "mod b+1", (b, lam, x), (r - (-1) ** (lam - 1) * x) % (b + 1) == 0
        y = float(rng.normal() * 100)
        yield "torus norm", (y,), abs(digits.torus_norm(y) - digits.torus_norm(-y)) < 1e-15


def _suite_kernel(rng, n):
    for _ in range(n):
        b = int(rng.integers(2, 13))
        k = int(rng.integers(-50, 50))
        yield "integer values", (b, k), abs(kernel.dirichlet_kernel(b, k) - (-1) ** (k * (b - 1))) < 1e-15
        x = float(rng.random())
        yield "fejer square", (b, x), abs(kernel.dirichlet_kernel(b, x) ** 2 - kernel.fejer(b, x)) < 1e-12
        a = rng.random(64)
        yield "T max at (b+1)/2", (b,), bool(np.all(kernel.T(b, 1, a) <= kernel.max_T(b, 1).upper + 1e-15))


def _suite_fourier(rng, n):
    for _ in range(n):
        b = int(rng.integers(2, 6))
        lam = int(rng.integers(0, 7 if b <= 3 else 5))
        a, t = float(rng.random()), float(rng.random())
        p = fourier.FourierPoint(b, lam, a, t)
        d = abs(abs(fourier.F_direct(p)) - float(fourier.F_abs_product(b, lam, a, t)))
        yield "product formula", (b, lam, a, t), d < 1e-12 * max(lam, 1)
        yield "L2 residue sum", (b, lam, a, t), abs(fourier.l2_residue_sum(b, lam, a, t) - 1) < 1e-10
        if lam >= 1:
            yield "F <= G^(1/2)", (b, lam, a, t), bool(
                np.all(fourier.F_abs_product(b, lam, a, t) <= fourier.pointwise_bound(b, lam, a, t) + 1e-12))


def _naive_reversible(b, lam):
    return sum(1 for p in range(b ** (lam - 1), b**lam)
               if sieve.is_prime(p) and sieve.is_prime(digits.reverse(p, b, lam)))


def _suite_sieve(rng, n):
    for _ in range(max(2, n // 10)):
        b = int(rng.integers(2, 11))
        lam = int(rng.integers(2, max(3, int(math.log(3 * 10**4) / math.log(b)))))
        got = sum(c.reversible for c in sieve.census(b, lam))
        yield "census vs naive", (b, lam), got == _naive_reversible(b, lam)
        d = int(rng.integers(1, 30))
        parts = sum(sieve.pimirror(b, lam, b**lam, a, d) for a in range(d))
        yield "residue partition", (b, lam, d), parts == sieve.pi_lambda(b, lam, b**lam)
    for _ in range(n):
        v = int(rng.integers(2, 10**6))
        naive = all(v % q for q in range(2, math.isqrt(v) + 1))
        yield "Miller-Rabin", (v,), sieve.is_prime(v) == naive


def _suite_expsums(rng, n):
    for _ in range(max(2, n // 5)):
        x = int(rng.integers(200, 5000))
        y = int(rng.integers(30, x))
        u = float(rng.uniform(1.5, y ** (1 / 3)))
        lhs, rhs = expsums.vaughan_identity_check(10, 3, u, None, y, x)
        yield "Vaughan identity", (u, y, x), abs(lhs - rhs) <= 1e-9 * (x - y)
    for _ in range(n):
        b = int(rng.integers(2, 4))
        mu2 = int(rng.integers(1, 5 if b == 2 else 4))
        lam = mu2 + int(rng.integers(0, 4))
        d = int(rng.integers(2, 50))
        m, k, r = (int(v) for v in rng.integers(1, 200, size=3))
        lhs, rhs = expsums.fourier_expansion_check(b, lam, mu2, RationalAngle(1, d), m, k, r)
        yield "Fourier expansion", (b, lam, mu2, d, m, k, r), abs(lhs - rhs) < 1e-9
        z = rng.normal(size=int(rng.integers(1, 40))) + 1j * rng.normal(size=1)
        yield "van der Corput", (len(z),), bool(expsums.van_der_corput(z, int(rng.integers(1, 4)), int(rng.integers(1, 6))))
        yield "gcd sum", (), bool(expsums.gcd_sum(int(rng.integers(1, 500)), float(rng.uniform(1, 300))))
    yield "carry run", (2, 2, 5, 1, 2), expsums.carry_run_holds(2, 2, 5, 1, 2)


SUITES: dict[str, Callable] = {
    "digits": _suite_digits,
    "kernel": _suite_kernel,
    "fourier": _suite_fourier,
    "sieve": _suite_sieve,
    "expsums": _suite_expsums,
}


def cmd_verify(suite: str, seed: int = 0, size: str = "small") -> RunReport:
    if suite not in SUITES and suite != "all":
        raise UsageError(f"unknown suite {suite!r}; choose from {sorted(SUITES)} or 'all'")
    if size not in SIZES:
        raise UsageError(f"unknown size {size!r}")
    rep = RunReport("verify", dict(suite=suite, seed=seed, size=size))
    names = sorted(SUITES) if suite == "all" else [suite]
    for name in names:
        rng = np.random.default_rng([seed, sorted(SUITES).index(name)])
        passed = failed = 0
        first = None
        gen = SUITES[name](rng, SIZES[size])
        while True:
            try:
                prop, inst, ok = next(gen)
            except StopIteration:
                break
            except Exception as exc:  # a crash inside a property is a failure, not a usage error
                prop, inst, ok = "exception", repr(exc), False
            if ok:
                passed += 1
            else:
                failed += 1
                if first is None:
                    first = f"{prop} {inst}"
                rep.warnings.append(f"{name}: {prop} failed at {inst}")
                if prop == "exception":
                    break
        rep.results.append(dict(suite=name, passed=passed, failed=failed, counterexample=first or ""))
        rep.ok &= failed == 0
    return rep


# --- entry point ----------------------------------------------------------------------


def _common_flags(p: argparse.ArgumentParser, top: bool) -> None:
    # on subcommands the defaults are suppressed so the top-level values survive
    d = (lambda v: v) if top else (lambda v: argparse.SUPPRESS)
    p.add_argument("--format", choices=("csv", "json"), default=d("csv"))
    p.add_argument("--full-precision", action="store_true", default=d(False),
                   help="print floats with round-trip precision in CSV")
    p.add_argument("--jobs", type=int, default=d(os.cpu_count() or 1))
    p.add_argument("--seed", type=int, default=d(0))
    p.add_argument("--out", default=d("-"), help="output file (default stdout)")
    p.add_argument("--cache-dir", default=d(None), help="directory for cached prime blocks")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="revprimes", description="Digit-reversal prime computations.")
    _common_flags(p, True)
    common = argparse.ArgumentParser(add_help=False)
    _common_flags(common, False)
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, **kw):
        return sub.add_parser(name, parents=[common], **kw)

    t = add("tables", help="constants for a range of bases")
    t.add_argument("b_min", type=int, nargs="?", default=2)
    t.add_argument("b_max", type=int, nargs="?", default=10)

    v = add("verify", help="randomised property suites")
    v.add_argument("suite")
    v.add_argument("--size", default="small", choices=sorted(SIZES))

    c = add("census", help="per-class counts of reversed-prime properties")
    c.add_argument("b", type=int)
    c.add_argument("lam", type=int)
    c.add_argument("--omega-max", type=omega_arg, default=math.inf)
    c.add_argument("--z", type=float, default=2)

    bv = add("bv", help="summed congruence deviations of reversed primes")
    bv.add_argument("b", type=int)
    bv.add_argument("lams", type=int_range)
    bv.add_argument("--D", type=int, default=50)

    e = add("expsum", help="weighted exponential sum over one block")
    e.add_argument("b", type=int)
    e.add_argument("lam", type=int)
    e.add_argument("h", type=int)
    e.add_argument("d", type=int)
    e.add_argument("--weight", choices=("vonmangoldt", "unit"), default="vonmangoldt")
    e.add_argument("--t", type=int, default=None)

    s = add("sweep", help="parameter sweeps emitting (params, lhs, rhs, ratio) rows")
    s.add_argument("kind", choices=("lambda-sum", "type-i", "carry"))
    s.add_argument("--b", type=int, default=2)
    s.add_argument("--bs", type=int_range, default=[2])
    s.add_argument("--lams", type=int_range, default=[8])
    s.add_argument("--mus", type=int_range, default=[2])
    s.add_argument("--ds", type=int_range, default=[5])
    s.add_argument("--h", type=int, default=1)
    s.add_argument("--d", type=int, default=3)
    s.add_argument("--mu", type=int, default=2)
    s.add_argument("--nu", type=int, default=6)
    s.add_argument("--weight", choices=("vonmangoldt", "unit"), default="vonmangoldt")
    return p


def run(args) -> RunReport:
    jobs = max(1, args.jobs)
    if args.command == "tables":
        return cmd_tables(args.b_min, args.b_max)
    if args.command == "verify":
        return cmd_verify(args.suite, args.seed, args.size)
    if args.command == "census":
        return cmd_census(args.b, args.lam, args.omega_max, args.z, jobs, args.cache_dir)
    if args.command == "bv":
        return cmd_bv(args.b, args.lams, args.D, jobs, args.cache_dir)
    if args.command == "expsum":
        return cmd_expsum(args.b, args.lam, args.h, args.d, args.weight, args.t)
    if args.command == "sweep":
        return cmd_sweep(args.kind, args)
    raise UsageError(f"unknown command {args.command!r}")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    t0 = time.perf_counter()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            rep = run(args)
        except (BudgetExceeded, CapExceeded, RangeTooLarge, SearchCapError, MemoryError) as exc:
            print(f"revprimes: budget exceeded: {exc}", file=sys.stderr)
            return EXIT_BUDGET
        except (CertificationError, QuadratureError) as exc:
            print(f"revprimes: certification failed: {exc}", file=sys.stderr)
            return EXIT_FAIL
        except (UsageError, ValueError, TypeError) as exc:
            print(f"revprimes: {exc}", file=sys.stderr)
            return EXIT_USAGE
    rep.warnings.extend(str(w.message) for w in caught)
    rep.wall_time = time.perf_counter() - t0
    text = render(rep, args.format, args.full_precision)
    if args.out == "-":
        sys.stdout.write(text)
    else:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    for w in rep.warnings:
        print(f"warning: {w}", file=sys.stderr)
    print(f"{rep.command}: {'ok' if rep.ok else 'FAILED'} in {rep.wall_time:.2f} s", file=sys.stderr)
    return EXIT_OK if rep.ok else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
