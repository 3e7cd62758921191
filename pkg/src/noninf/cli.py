"""Command-line front end.

Exit codes: 0 success, 1 validation error (also used when sweep rows were
skipped), 2 numerical failure, 3 reproduction differences (``tables`` only).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

from . import __version__
from .analysis import DEFAULT_METHODS, analyze
from .foundation import TwoArmData
from .operating import (
    METHODS,
    OC_METHODS,
    OcScenario,
    SampleSizeSpec,
    exact_power,
    fm_sample_size,
    summarize_type1,
    table_sweep,
)

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_DIFF = 0, 1, 2, 3
SCHEMA_VERSION = 1
SWEEP_FIELDS = ("delta0", "ratio_t", "ratio_c", "p_control", "power", "alpha")
SUMMARY_KEYS = ("pct_above", "mean_distance", "range", "min", "max", "mean_at_or_below", "mean_above")


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 is reserved for numerical failures here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# formatting

def _half_up(x: float, places: int) -> str:
    q = Decimal(1).scaleb(-places)
    return str(Decimal(repr(x)).quantize(q, rounding=ROUND_HALF_UP))


def _fmt_pct(x, full: bool) -> str:
    if x is None:
        return ""
    return f"{x:.12g}" if full else _half_up(100.0 * x, 2)


def _fmt_p(x, full: bool) -> str:
    if x is None:
        return ""
    return f"{x:.12g}" if full else _half_up(x, 4)


def _parse_methods(text: str | None, default) -> tuple[str, ...]:
    if text is None:
        return tuple(default)
    if text.strip().lower() == "all":
        return tuple(m for m in METHODS if m != "als_mn")
    keys = tuple(m.strip().lower() for m in text.split(",") if m.strip())
    if not keys:
        raise UsageError("--methods: empty method set")
    unknown = [m for m in keys if m not in METHODS]
    if unknown:
        raise UsageError(f"--methods: unknown method(s) {', '.join(unknown)}")
    return keys


def _parse_ratio(text: str) -> tuple[int, int]:
    try:
        t, c = (int(v) for v in text.split(":"))
    except ValueError:
        raise UsageError(f"--ratio: expected T:C such as 2:1, got {text!r}") from None
    if t <= 0 or c <= 0:
        raise UsageError("--ratio: entries must be positive")
    return t, c


def _emit(text: str, path: str | None):
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# analyze

def _check_counts(args):
    for x, n, arm in ((args.xt, args.nt, "test"), (args.xc, args.nc, "control")):
        xname, nname = ("--xt", "--nt") if arm == "test" else ("--xc", "--nc")
        if n < 1:
            raise UsageError(f"{nname}: trials must be >= 1, got {n}")
        if not 0 <= x <= n:
            raise UsageError(f"{xname}: successes must lie in [0, {n}], got {x}")


def cmd_analyze(args) -> int:
    _check_counts(args)
    methods = _parse_methods(args.methods, DEFAULT_METHODS)
    data = TwoArmData.from_counts(args.xt, args.nt, args.xc, args.nc)
    results = analyze(data, args.margin, args.level, methods, allow_large_es=args.allow_large_es)
    full = args.precision == "full"
    if args.json:
        doc = {
            "schema": "noninf.analyze",
            "version": SCHEMA_VERSION,
            "data": {"xt": args.xt, "nt": args.nt, "xc": args.xc, "nc": args.nc},
            "margin": args.margin,
            "level": args.level,
            "results": [
                {
                    "method": r.method,
                    "lower": None if r.interval is None else r.interval.lower,
                    "upper": None if r.interval is None else r.interval.upper,
                    "p_value": r.p_value,
                    "decision": r.decision,
                    "seconds": r.elapsed,
                }
                for r in results
            ],
        }
        _emit(json.dumps(doc, indent=2) + "\n", args.output)
        return EXIT_OK
    unit = "proportion" if full else "%"
    lines = [f"margin {args.margin}, two-sided level {args.level}; CI in {unit}",
             f"{'method':<7} {'lower':>14} {'upper':>14} {'p':>14}  decision            time"]
    for r in results:
        lo, hi = (("", "") if r.interval is None
                  else (_fmt_pct(r.interval.lower, full), _fmt_pct(r.interval.upper, full)))
        t = f"{r.elapsed:.2f}s" if r.method in ("els", "es") else ""
        lines.append(f"{METHODS[r.method]:<7} {lo:>14} {hi:>14} {_fmt_p(r.p_value, full):>14}"
                     f"  {r.decision:<18}  {t}")
    _emit("\n".join(lines) + "\n", args.output)
    return EXIT_OK


# ---------------------------------------------------------------------------
# type1

def _read_config(path: str) -> list[dict]:
    text = Path(path).read_text()
    if path.endswith(".json"):
        doc = json.loads(text)
        rows = doc["rows"] if isinstance(doc, dict) else doc
        return [{k: str(v) for k, v in row.items()} for row in rows]
    reader = csv.DictReader(io.StringIO(text))
    missing = [f for f in SWEEP_FIELDS if f not in (reader.fieldnames or ())]
    if missing:
        raise UsageError(f"{path}: missing column(s) {', '.join(missing)}")
    return list(reader)


def _resolve_row(raw: dict, lineno: int):
    """Turn one config row into ``(scenario, ratio)``; ``None`` for an infeasible row."""
    try:
        margin = float(raw["delta0"])
        ratio = (int(raw["ratio_t"]), int(raw["ratio_c"]))
        p_control = float(raw["p_control"])
        alpha = float(raw.get("alpha") or 0.05)
        n_test = raw.get("n_test")
    except (KeyError, ValueError) as exc:
        raise UsageError(f"config row {lineno}: {exc}") from None
    if p_control < margin:
        return None
    if n_test:
        nt = int(n_test)
        nc = math.ceil(nt * ratio[1] / ratio[0])
    else:
        spec = SampleSizeSpec(margin, p_control, power=float(raw["power"]), allocation=ratio,
                              alpha=alpha)
        nt, nc = fm_sample_size(spec)
    return OcScenario(nt, nc, margin, p_control, alpha), ratio


def cmd_type1(args) -> int:
    methods = _parse_methods(args.methods, OC_METHODS)
    rows, skipped = [], []
    for k, raw in enumerate(_read_config(args.config), start=2):
        resolved = _resolve_row(raw, k)
        if resolved is None:
            skipped.append(k)
            print(f"warning: config row {k}: p_control < delta0, row skipped", file=sys.stderr)
        else:
            rows.append(resolved)
    values = table_sweep([s for s, _ in rows], methods, jobs=args.jobs, strategy=args.strategy)
    full = args.precision == "full"
    if args.json:
        summary = {m: summarize_type1([v[m] for v in values]) for m in methods} if values else {}
        doc = {
            "schema": "noninf.type1",
            "version": SCHEMA_VERSION,
            "methods": list(methods),
            "rows": [
                {"delta0": s.margin, "ratio": f"{r[0]}:{r[1]}", "p_control": s.p_control,
                 "n_test": s.n_test, "n_control": s.n_control, "type1": v}
                for (s, r), v in zip(rows, values)
            ],
            "summary": summary,
            "skipped_rows": skipped,
        }
        _emit(json.dumps(doc, indent=2) + "\n", args.output)
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["delta0", "ratio", "p_control", "n_test", "n_control", *methods])
        for (s, r), v in zip(rows, values):
            w.writerow([f"{s.margin:g}", f"{r[0]}:{r[1]}", f"{s.p_control:g}", s.n_test, s.n_control,
                        *(_fmt_pct(v[m], full) for m in methods)])
        if values:
            w.writerow([])
            w.writerow(["summary", *methods])
            stats = {m: summarize_type1([v[m] for v in values]) for m in methods}
            for key in SUMMARY_KEYS:
                cells = []
                for m in methods:
                    x = stats[m][key]
                    if x is None:
                        cells.append("--")
                    elif key == "pct_above":
                        cells.append(f"{x:.12g}" if full else _half_up(x, 0))
                    else:
                        cells.append(_fmt_pct(x, full))
                w.writerow([key, *cells])
        _emit(buf.getvalue(), args.output)
    return EXIT_VALIDATION if skipped else EXIT_OK


# ---------------------------------------------------------------------------
# power and sample size

def cmd_power(args) -> int:
    methods = _parse_methods(args.methods, ("als", "els"))
    if "es" in methods:
        raise UsageError("--methods: ES regions are not available for power at these sizes")
    out = {m: exact_power(m, (args.nt, args.nc), args.margin, args.alpha, args.pt, args.pc)
           for m in methods}
    if args.json:
        doc = {"schema": "noninf.power", "version": SCHEMA_VERSION, "nt": args.nt, "nc": args.nc,
               "margin": args.margin, "alpha": args.alpha, "pt": args.pt, "pc": args.pc,
               "power": out}
        _emit(json.dumps(doc, indent=2) + "\n", args.output)
    else:
        lines = [f"{METHODS[m]:<6} {out[m]:.12g}" if args.precision == "full"
                 else f"{METHODS[m]:<6} {_half_up(100 * out[m], 2)}%" for m in methods]
        _emit("\n".join(lines) + "\n", args.output)
    return EXIT_OK


def cmd_samplesize(args) -> int:
    spec = SampleSizeSpec(args.margin, args.pc, args.pt, args.power, _parse_ratio(args.ratio),
                          args.alpha)
    nt, nc = fm_sample_size(spec, rounding=args.rounding)
    power = {m: exact_power(m, (nt, nc), spec.margin, spec.alpha, spec.alt, spec.p_control)
             for m in ("als", "els")}
    if args.json:
        doc = {"schema": "noninf.samplesize", "version": SCHEMA_VERSION, "n_test": nt,
               "n_control": nc, "exact_power": power}
        _emit(json.dumps(doc, indent=2) + "\n", args.output)
    else:
        lines = [f"N_T {nt}", f"N_C {nc}"]
        lines += [f"exact {METHODS[m]} power {_half_up(100 * p, 2)}%" for m, p in power.items()]
        _emit("\n".join(lines) + "\n", args.output)
    return EXIT_OK


# ---------------------------------------------------------------------------
# tables

def cmd_tables(args) -> int:
    from .reference import UNATTRIBUTED, attributed_rows, consistent_rows, inconsistent_rows
    from .reproduce import check_table3, check_table4, check_type1_rows

    which = {t.strip() for t in args.which.split(",")}
    checks = []
    if "4" in which:
        checks += check_table4()
    if which & {"1", "2"}:
        if args.full:
            # misaligned rows are checked against the design their values belong to
            rows = []
            for r in attributed_rows():
                if str(r.table) in which and r not in rows:
                    rows.append(r)
            skipped = [r for r in inconsistent_rows()
                       if (r.table, r.margin, r.allocation, r.p_control) in UNATTRIBUTED]
        else:
            rows = [r for r in consistent_rows(args.max_n) if str(r.table) in which]
            skipped = inconsistent_rows()
        checks += check_type1_rows(rows, jobs=args.jobs, als_bias_correction=args.als_bias_correction)
        for r in skipped:
            if str(r.table) in which:
                print(f"skip {r.label}: printed values belong to another design")
    if "3" in which or args.full:
        checks += check_table3(args.jobs, args.als_bias_correction)[0]
    bad = [c for c in checks if not c.ok]
    for c in checks:
        if args.verbose or not c.ok:
            print(c.line())
    print(f"{len(checks) - len(bad)}/{len(checks)} values reproduced")
    return EXIT_DIFF if bad else EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="noninf", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, json_ok=True):
        if json_ok:
            sp.add_argument("--json", action="store_true", help="machine-readable output")
        sp.add_argument("--precision", choices=("display", "full"), default="display",
                        help="'full' prints raw proportions with 12 significant digits")
        sp.add_argument("-o", "--output", help="write to this file instead of stdout")

    a = sub.add_parser("analyze", help="CIs, p-values and decisions for one trial")
    for name in ("xt", "nt", "xc", "nc"):
        a.add_argument(f"--{name}", type=int, required=True)
    a.add_argument("--margin", type=float, required=True)
    a.add_argument("--level", type=float, default=0.95, help="two-sided confidence level")
    a.add_argument("--methods", help=f"comma list from {','.join(METHODS)} or 'all'")
    a.add_argument("--allow-large-es", action="store_true",
                   help="permit ES when min(N_T, N_C) > 150")
    common(a)
    a.set_defaults(func=cmd_analyze)

    t = sub.add_parser("type1", help="exact type I errors for a sweep config")
    t.add_argument("--config", required=True, help="CSV (or JSON) sweep config")
    t.add_argument("--methods", help="comma list; default the seven table methods")
    t.add_argument("--jobs", type=int, default=1)
    t.add_argument("--strategy", choices=("auto", "full", "boundary"), default="auto")
    common(t)
    t.set_defaults(func=cmd_type1)

    w = sub.add_parser("power", help="exact power at given sizes and proportions")
    w.add_argument("--nt", type=int, required=True)
    w.add_argument("--nc", type=int, required=True)
    w.add_argument("--margin", type=float, required=True)
    w.add_argument("--pt", type=float, required=True)
    w.add_argument("--pc", type=float, required=True)
    w.add_argument("--alpha", type=float, default=0.05, help="two-sided alpha")
    w.add_argument("--methods", help="comma list; default als,els")
    common(w)
    w.set_defaults(func=cmd_power)

    s = sub.add_parser("samplesize", help="Farrington-Manning sample size")
    s.add_argument("--margin", type=float, required=True)
    s.add_argument("--pc", type=float, required=True)
    s.add_argument("--pt", type=float, help="alternative P_T (default P_C)")
    s.add_argument("--power", type=float, default=0.80)
    s.add_argument("--ratio", default="1:1", help="allocation T:C")
    s.add_argument("--alpha", type=float, default=0.05, help="two-sided alpha")
    s.add_argument("--rounding", choices=("ceil", "nearest"), default="ceil")
    common(s)
    s.set_defaults(func=cmd_samplesize)

    r = sub.add_parser("tables", help="reproduce the bundled reference tables and diff")
    r.add_argument("--which", default="1,2,4", help="tables to check, from 1,2,3,4")
    r.add_argument("--max-n", type=int, default=350, help="largest N_T checked unless --full")
    r.add_argument("--full", action="store_true", help="all rows plus the summary statistics")
    r.add_argument("--jobs", type=int, default=1)
    r.add_argument("--als-bias-correction", action="store_true",
                   help="evaluate the ALS column with the N/(N-1) variance factor")
    r.add_argument("-v", "--verbose", action="store_true", help="print matching values too")
    r.set_defaults(func=cmd_tables)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "jobs", 1) < 1:
        parser.error("--jobs must be >= 1")
    try:
        return args.func(args)
    except (UsageError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (RuntimeError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
