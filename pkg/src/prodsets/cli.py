"""Command-line front end.  Every command prints CSV rows to stdout.

Row schema (header first)::

    command,N,seed,params,measured,comparator,wall_time_ms,error

``params``, ``measured`` and ``comparator`` are ``key=value`` lists joined
by ``;``.  Exit codes: 0 success, 2 usage or domain error, 3 capacity error.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import re
import secrets
import sys
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from prodsets import constants, constructions, products, tilted
from prodsets.errors import CapacityError
from prodsets.sieve import FactorSieve, default_mem_budget, parse_bytes

FIELDS = ["command", "N", "seed", "params", "measured", "comparator", "wall_time_ms", "error"]

EXIT_USAGE = 2
EXIT_CAPACITY = 3


# ---------------------------------------------------------------------------
# rows


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    text = str(value)
    if any(c in text for c in ",;=\n"):
        raise ValueError(f"value {text!r} contains a reserved character")
    return text


def fmt_pairs(pairs: dict) -> str:
    return ";".join(f"{k}={fmt(v)}" for k, v in pairs.items())


def parse_pairs(text: str) -> dict[str, str]:
    if not text:
        return {}
    return dict(item.split("=", 1) for item in text.split(";"))


@dataclass
class Row:
    command: str
    N: int | None = None
    seed: int | None = None
    params: dict | None = None
    measured: dict | None = None
    comparator: dict | None = None
    wall_time_ms: int | None = None
    error: str | None = None

    def cells(self) -> list[str]:
        return [
            self.command, fmt(self.N), fmt(self.seed),
            fmt_pairs(self.params or {}), fmt_pairs(self.measured or {}),
            fmt_pairs(self.comparator or {}), fmt(self.wall_time_ms),
            _clean(self.error) if self.error else "",
        ]


def _clean(text: str) -> str:
    return re.sub(r"[,;\n]", " ", text)


def read_rows(text: str) -> list[dict]:
    """Parse CSV produced by this module back into dictionaries."""
    reader = csv.DictReader(io.StringIO(text))
    rows = []
    for raw in reader:
        row = dict(raw)
        for key in ("params", "measured", "comparator"):
            row[key] = parse_pairs(row[key])
        rows.append(row)
    return rows


class Emitter:
    """Writes the header lazily so that failed invocations print no CSV."""

    def __init__(self, stream, timing: bool = True) -> None:
        self.writer = csv.writer(stream, lineterminator="\n")
        self.timing = timing
        self._started = False

    def header(self) -> None:
        if not self._started:
            self.writer.writerow(FIELDS)
            self._started = True

    def emit(self, row: Row) -> None:
        self.header()
        if not self.timing:
            row.wall_time_ms = None
        self.writer.writerow(row.cells())


# ---------------------------------------------------------------------------
# shared state


class Context:
    """Per-invocation settings plus a sieve that grows on demand."""

    def __init__(self, mem_budget: int, workers: int) -> None:
        self.mem_budget = mem_budget
        self.workers = workers
        self._sieve: FactorSieve | None = None

    def sieve(self, limit: int) -> FactorSieve:
        if self._sieve is None or self._sieve.limit < limit:
            self._sieve = FactorSieve(max(limit, 2), self.mem_budget)
        return self._sieve


def _set_out(args, values) -> None:
    if getattr(args, "out_set", None):
        products.write_set_file(args.out_set, values)


# ---------------------------------------------------------------------------
# commands.  Each returns a Row without timing.


def cmd_theta(args, ctx: Context) -> Row:
    first, second = constants.theta_forms()
    return Row("theta", measured={"theta": constants.theta(), "form1": first, "form2": second,
                                  "form_diff": abs(first - second)})


def cmd_params(args, ctx: Context) -> Row:
    p = constants.derive_params(args.n, strict=not args.no_floor)
    return Row("params", N=args.n, params={k: v for k, v in p.as_dict().items() if k != "N"},
               measured={"log_N": math.log(args.n), "log2_N": constants.iterated_log(args.n, 2)})


def cmd_mtable(args, ctx: Context) -> Row:
    M = products.multiplication_table_size(args.n, ctx.mem_budget, ctx.workers)
    comp = {}
    if args.n > math.exp(math.e):
        pred = constants.mn_prediction(args.n)
        comp = {"mn_prediction": pred, "ratio": M / pred}
    return Row("mtable", N=args.n, measured={"M_N": M}, comparator=comp)


def cmd_prodset(args, ctx: Context) -> Row:
    A = products.read_set_file(args.a)
    B = products.read_set_file(args.b) if args.b else A
    s = products.product_set(A, B, ctx.mem_budget, ctx.workers)
    return Row("prodset", measured={"size_A": A.size, "size_B": B.size, "size": s.size,
                                    "pair_count": s.pair_count, "max_tau": s.max_tau})


def cmd_build_b(args, ctx: Context) -> Row:
    B = constructions.build_B(args.n, ctx.sieve(args.n), args.slack)
    _set_out(args, B.elements)
    return Row("build-b", N=args.n, params={"k": B.k, "slack": args.slack},
               measured={"size_B": len(B)},
               comparator={"lemma3_comparator": B.comparator, "ratio": len(B) / B.comparator})


def cmd_build_b_pp(args, ctx: Context) -> Row:
    sieve = ctx.sieve(args.n)
    pp = constructions.build_B_prime_position(args.n, sieve)
    B = constructions.build_B(args.n, sieve)
    _set_out(args, pp)
    return Row("build-b-pp", N=args.n, params={"k": B.k},
               measured={"size_pp": pp.size, "size_B": len(B),
                         "subset": bool(np.isin(pp, B.elements).all())})


def cmd_energy(args, ctx: Context) -> Row:
    if args.set:
        elements = products.read_set_file(args.set)
        params = {"source": "file"}
    else:
        B = constructions.build_B(args.n, ctx.sieve(args.n))
        elements = B.elements
        params = {"source": "build-b", "k": B.k}
    rep = products.energy_diagnostics(elements, args.n, ctx.mem_budget, ctx.workers)
    return Row("energy", N=args.n, params=params,
               measured={"size_B": rep.size, "energy": rep.energy, "energy_over_B2": rep.normalized,
                         "trivial_floor": 2 * rep.size**2 - rep.size},
               comparator={"loglog4": rep.loglog_fourth, "ratio": rep.ratio})


def cmd_thin(args, ctx: Context) -> Row:
    g = args.g if args.g is not None else constructions.default_g(args.n)
    B = constructions.build_B(args.n, ctx.sieve(args.n)).elements
    hist = products.tau_histogram(B, ctx.mem_budget, ctx.workers)
    out = constructions.thin_and_measure(B, args.n, g, args.seed, hist, ctx.mem_budget, ctx.workers)
    _set_out(args, out.A)
    return Row("thin", N=args.n, seed=args.seed, params={"g": g, "rho": out.rho},
               measured={"size_B": out.sizeB, "size_A": out.sizeA, "size_AA": out.sizeAA,
                         "ratio_pairs": out.ratio_pairs, "ratio_size": out.ratio_size},
               comparator={"predictor": out.predictor, **out.surrogates})


def cmd_build_a(args, ctx: Context) -> Row:
    A = constructions.build_A_thm2(args.n, ctx.sieve(args.n))
    _set_out(args, A.elements)
    return Row("build-a", N=args.n, params={"k": A.k, "r": A.r},
               measured={"size_A": len(A)},
               comparator={"thm2_comparator": A.comparator, "ratio": len(A) / A.comparator})


def cmd_deficit(args, ctx: Context) -> Row:
    rep = constructions.coverage_deficit(args.n, ctx.sieve(args.n), with_d1=None if not args.no_d1 else False,
                                         mem_budget=ctx.mem_budget, workers=ctx.workers)
    p = rep.params
    return Row("deficit", N=args.n, params={"k": p.k, "r": p.r, "h": p.h, "x": p.x},
               measured={"size_A": rep.sizeA, "M_N": rep.M_N, "size_AA": rep.sizeAA,
                         "deficit": rep.deficit, "ratio": rep.ratio, "D1": rep.D1, "D2": rep.D2},
               comparator={"mn_prediction": constants.mn_prediction(args.n),
                           "d2_final_bound": constructions.d2_final_bound(args.n)})


def cmd_tilted(args, ctx: Context) -> Row:
    tp = tilted.TiltParams(args.x, args.t, args.lam)
    value = tilted.tilted_sum(tp, ctx.sieve(args.x))
    return Row("tilted", params={"x": args.x, "t": args.t, "lambda": args.lam},
               measured={"tilted_sum": value})


def cmd_hr_ratio(args, ctx: Context) -> Row:
    sieve = ctx.sieve(args.x)
    if args.general:
        value = tilted.hr_general_ratio(args.x, args.lam, sieve)
        return Row("hr-ratio", params={"x": args.x, "lambda": args.lam, "form": "general"},
                   measured={"ratio": value})
    value = tilted.hr_ratio(tilted.TiltParams(args.x, args.t, args.lam), sieve)
    return Row("hr-ratio", params={"x": args.x, "t": args.t, "lambda": args.lam, "form": "cutoff"},
               measured={"ratio": value})


def cmd_d1(args, ctx: Context) -> Row:
    rep = tilted.d1_exact_vs_bound(args.n)
    return Row("d1", N=args.n, params={"threshold": rep.threshold},
               measured={"D1": rep.exact, "majorant": rep.majorant, "holds": rep.holds},
               comparator={"closed_form": rep.closed_form})


@dataclass
class Command:
    run: Callable
    help: str
    measured: dict[str, str]
    args: Callable[[argparse.ArgumentParser], None]


def _n(p):
    p.add_argument("--n", type=parse_int, required=True, help="upper end N of [1, N]")


def _n_out(p):
    _n(p)
    p.add_argument("--out-set", help="also write the set as a newline-delimited file")


def _tilt(p, need_t=True):
    p.add_argument("--x", type=parse_int, required=True, help="summation limit")
    p.add_argument("--t", type=parse_int, required=need_t, help="prime cutoff")
    p.add_argument("--lambda", dest="lam", type=float, required=True, help="tilt parameter")


def _params_args(p):
    _n(p)
    p.add_argument("--no-floor", action="store_true", help="allow N below 100 (r, h clamped at 0)")


def _prodset_args(p):
    p.add_argument("--a", required=True, help="set file for A")
    p.add_argument("--b", help="set file for B (default: A)")


def _build_b_args(p):
    _n_out(p)
    p.add_argument("--slack", type=float, default=2.0, help="additive constant in the growth bound")


def _energy_args(p):
    _n(p)
    p.add_argument("--set", help="set file (default: build-b at N)")


def _thin_args(p):
    _n_out(p)
    p.add_argument("--g", type=float, default=None, help="growth factor g (default log log log N)")
    p.add_argument("--seed", type=parse_int, default=None, help="64-bit seed (default: random, printed)")


def _deficit_args(p):
    _n(p)
    p.add_argument("--no-d1", action="store_true", help="skip the D1 count up to N^2")


def _hr_args(p):
    _tilt(p, need_t=False)
    p.add_argument("--general", action="store_true", help="use the no-cutoff general form")


COMMANDS: dict[str, Command] = {
    "theta": Command(cmd_theta, "the exponent theta, both closed forms",
                     {"theta": "the constant", "form1": "1/2 - (1 + log log 2)/log 4",
                      "form2": "1 - (1 + log log 4)/log 4", "form_diff": "|form1 - form2|"},
                     lambda p: None),
    "params": Command(cmd_params, "derived construction parameters k r h x lambda1 lambda2",
                      {"log_N": "log N", "log2_N": "log log N"}, _params_args),
    "mtable": Command(cmd_mtable, "exact multiplication table size M_N",
                      {"M_N": "distinct products ab with a and b in [1, N]"}, _n),
    "prodset": Command(cmd_prodset, "exact product set size of two set files",
                       {"size_A": "|A|", "size_B": "|B|", "size": "|AB|", "pair_count": "|A||B|",
                        "max_tau": "largest ordered-pair multiplicity"}, _prodset_args),
    "build-b": Command(cmd_build_b, "the squarefree set B with bounded small-prime growth",
                       {"size_B": "|B|"}, _build_b_args),
    "build-b-pp": Command(cmd_build_b_pp, "B with the prime-position condition",
                          {"size_pp": "size of the prime-position set", "size_B": "|B|",
                           "subset": "whether it is contained in B"}, _n_out),
    "energy": Command(cmd_energy, "multiplicative energy of B or of a set file",
                      {"size_B": "|B|", "energy": "E(B)", "energy_over_B2": "E(B)/|B|^2",
                       "trivial_floor": "2|B|^2 - |B|"}, _energy_args),
    "thin": Command(cmd_thin, "random thinning of B and its product set",
                    {"size_B": "|B|", "size_A": "|A|", "size_AA": "|AA|",
                     "ratio_pairs": "|AA| / (|A|(|A|-1)/2)", "ratio_size": "|A| / (rho |B|)"},
                    _thin_args),
    "build-a": Command(cmd_build_a, "the set of m <= N with Omega(m) <= k + r",
                       {"size_A": "|A|"}, _n_out),
    "deficit": Command(cmd_deficit, "coverage of the multiplication table by AA",
                       {"size_A": "|A|", "M_N": "multiplication table size", "size_AA": "|AA|",
                        "deficit": "table entries missing from AA", "ratio": "|AA| / M_N",
                        "D1": "c <= N^2 with Omega(c) > 2k + h (blank if skipped)",
                        "D2": "pairs with Omega(ab) <= 2k + h and Omega(b) >= k + r"},
                       _deficit_args),
    "tilted": Command(cmd_tilted, "weighted sum of lambda^Omega(n, t) over n <= x",
                      {"tilted_sum": "the sum"}, _tilt),
    "hr-ratio": Command(cmd_hr_ratio, "weighted sum over its upper-bound shape",
                        {"ratio": "sum / bound shape"}, _hr_args),
    "d1": Command(cmd_d1, "exact D1 against its tilted majorant",
                  {"D1": "exact count", "majorant": "tilted majorant", "holds": "D1 <= majorant"},
                  _n),
}


# ---------------------------------------------------------------------------
# parsing


def parse_int(text: str) -> int:
    """Integers with ``2^10``, ``10**6`` or ``1e6`` notation."""
    s = text.strip().replace("**", "^")
    if "^" in s:
        base, exp = s.split("^", 1)
        return int(base) ** int(exp)
    if re.fullmatch(r"\d+[eE]\d+", s):
        mant, exp = re.split("[eE]", s)
        return int(mant) * 10 ** int(exp)
    return int(s)


def parse_grid(spec: str) -> tuple[str, list[str]]:
    """``n=2^4..2^9 step x2``, ``seed=1..20`` (step +1), or ``g=5,20,80``."""
    key, eq, rest = spec.partition("=")
    key, rest = key.strip(), rest.strip()
    if not eq or not key:
        raise ValueError(f"grid {spec!r}: expected key=values")
    if not rest:
        return key, []
    m = re.fullmatch(r"(\S+)\.\.(\S+?)(?:\s+step\s+([x+*])?(\S+))?", rest)
    if not m:
        return key, [v.strip() for v in rest.split(",") if v.strip()]
    lo, hi = parse_int(m.group(1)), parse_int(m.group(2))
    mode, step = m.group(3) or "+", parse_int(m.group(4) or "1")
    values = []
    v = lo
    if mode in "x*":
        if step < 2 or lo < 1:
            raise ValueError(f"grid {spec!r}: multiplicative step needs factor >= 2 and start >= 1")
        while v <= hi:
            values.append(str(v))
            v *= step
    else:
        if step < 1:
            raise ValueError(f"grid {spec!r}: step must be >= 1")
        while v <= hi:
            values.append(str(v))
            v += step
    return key, values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="prodsets", description=__doc__.splitlines()[0],
                                     allow_abbrev=False)
    common = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    common.add_argument("--mem-budget", default=None,
                        help="memory budget, e.g. 4GiB (default: $PRODSETS_MEM_BUDGET or 4GiB)")
    common.add_argument("--workers", type=int, default=None, help="worker threads (default: CPU count)")
    common.add_argument("--out", help="write CSV to this file instead of stdout")
    common.add_argument("--no-timing", action="store_true", help="leave wall_time_ms blank")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, cmd in COMMANDS.items():
        epilog = "measured keys:\n" + "\n".join(f"  {k}: {v}" for k, v in cmd.measured.items())
        p = sub.add_parser(name, parents=[common], allow_abbrev=False, help=cmd.help, description=cmd.help,
                           epilog=epilog, formatter_class=argparse.RawDescriptionHelpFormatter)
        cmd.args(p)
    sw = sub.add_parser("sweep", parents=[common], allow_abbrev=False, help="run a command over a parameter grid",
                        description="run a command once per grid point; failed points become error rows")
    sw.add_argument("target", choices=sorted(COMMANDS), help="command to sweep")
    sw.add_argument("--grid", required=True, help="e.g. 'n=2^10..2^14 step x2' or 'seed=1..20'")
    sw.epilog = "flags not listed here are passed unchanged to the swept command"
    return parser


def _timed(cmd: Command, args, ctx: Context) -> Row:
    start = time.perf_counter()
    row = cmd.run(args, ctx)
    row.wall_time_ms = int(round((time.perf_counter() - start) * 1000))
    return row


def _run_sweep(args, ctx: Context, emitter: Emitter, parser: argparse.ArgumentParser) -> None:
    try:
        key, values = parse_grid(args.grid)
    except ValueError as exc:
        parser.error(f"--grid: {exc}")
    target = COMMANDS[args.target]
    sub = argparse.ArgumentParser(prog=f"prodsets sweep {args.target}", allow_abbrev=False)
    target.args(sub)
    dest = key.replace("-", "_")
    for value in values:
        argv = [*args.rest, f"--{key}", value]
        try:
            point = sub.parse_args(argv)
        except SystemExit:
            parser.error(f"--grid: {key}={value} rejected by {args.target}")
        if args.target == "thin" and getattr(point, "seed", None) is None:
            point.seed = secrets.randbits(64)
        try:
            emitter.emit(_timed(target, point, ctx))
        except (CapacityError, ValueError, ArithmeticError) as exc:
            n = getattr(point, "n", None)
            emitter.emit(Row(args.target, N=n, seed=getattr(point, "seed", None),
                             params={dest: value}, error=f"{type(exc).__name__}: {exc}"))


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args, rest = parser.parse_known_args(argv)
    if args.command != "sweep" and rest:
        parser.error(f"unrecognized arguments: {' '.join(rest)}")
    args.rest = rest
    try:
        budget = parse_bytes(args.mem_budget) if args.mem_budget else default_mem_budget()
    except ValueError:
        parser.error(f"--mem-budget: cannot parse {args.mem_budget!r}")
    workers = args.workers if args.workers is not None else (os.cpu_count() or 1)
    if workers < 1:
        parser.error("--workers: must be >= 1")
    ctx = Context(budget, workers)
    stream = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        emitter = Emitter(stream, timing=not args.no_timing)
        if args.command == "sweep":
            _run_sweep(args, ctx, emitter, parser)
            emitter.header()
            return 0
        if args.command == "thin" and args.seed is None:
            args.seed = secrets.randbits(64)
        try:
            emitter.emit(_timed(COMMANDS[args.command], args, ctx))
        except CapacityError as exc:
            print(f"prodsets {args.command}: capacity error: {exc} (--mem-budget)", file=sys.stderr)
            return EXIT_CAPACITY
        except ValueError as exc:
            print(f"prodsets {args.command}: error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        return 0
    finally:
        if args.out:
            stream.close()


if __name__ == "__main__":
    sys.exit(main())
