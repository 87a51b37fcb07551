"""Command-line interface.

Subcommands: metrics, frontier, query, compare, corpus-entropy, oracle
selfcheck, report.  Options may also be supplied via a key=value config file
(--config); explicit flags always win.  Exit codes: 0 success, 1 usage error,
2 data error, 3 out-of-range query in strict mode.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import corpus as corpus_mod
from . import formats, frontier as frontier_mod, metrics as metrics_mod, oracle, report
from .errors import DataError, RangeQueryError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_RANGE = 3

# options a config file may set; flags override
CONFIG_DEFAULTS = {
    "format": "csv",
    "mode": "raw",
    "window_len": corpus_mod.DEFAULT_WINDOW_LEN,
    "grid_size": 101,
    "ppl_target": 17.0,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # usage errors exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def load_config(path: str | Path) -> dict[str, str]:
    """Parse a key=value config file; blank lines and # comments ignored."""
    values: dict[str, str] = {}
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise DataError(f"{path} line {line_no}: expected key=value")
        key, _, value = stripped.partition("=")
        values[key.strip()] = value.strip()
    return values


def _resolve(args: argparse.Namespace, config: dict[str, str]) -> None:
    """Fill options the user left unset from config, then built-in defaults."""
    casts = {
        "format": str,
        "mode": str,
        "window_len": int,
        "grid_size": int,
        "ppl_target": float,
    }
    for key, default in CONFIG_DEFAULTS.items():
        if not hasattr(args, key):
            continue
        if getattr(args, key) is None:
            if key in config:
                setattr(args, key, casts[key](config[key]))
            else:
                setattr(args, key, default)


def build_parser() -> _Parser:
    parser = _Parser(prog="genfrontier", description=__doc__)
    parser.add_argument("--config", help="key=value config file; flags win")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("metrics", help="aggregate scored samples into operating points")
    p.add_argument("--samples", nargs="+", required=True, help="sample JSONL file(s)")
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=["csv", "json"], default=None)
    p.add_argument("--lenient", action="store_true", help="skip malformed lines (counted)")
    p.add_argument("--vocab-size", type=int, default=None)
    p.add_argument("--token-weighted", action="store_true")
    p.add_argument("--pooled-unigram", action="store_true")
    p.add_argument("--manifest", help="validate samples against this manifest")

    p = sub.add_parser("frontier", help="build a frontier from operating points")
    p.add_argument("--points", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--method", default=None, help="filter to one method")
    p.add_argument("--nfe", type=int, default=None, help="filter to one NFE")
    p.add_argument("--mode", choices=["raw", "pareto"], default=None)

    p = sub.add_parser("query", help="matched-entropy / matched-perplexity lookup")
    p.add_argument("--frontier", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--at-entropy", type=float, default=None)
    group.add_argument("--at-ppl", type=float, default=None)
    p.add_argument(
        "--lenient",
        action="store_true",
        help="report out-of-range queries instead of exiting 3",
    )

    p = sub.add_parser("compare", help="dominance verdict for two frontiers")
    p.add_argument("--frontier-a", required=True)
    p.add_argument("--frontier-b", required=True)
    p.add_argument("--grid-size", type=int, default=None)

    p = sub.add_parser("corpus-entropy", help="per-window entropy stats of a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--window-len", dest="window_len", type=int, default=None)
    p.add_argument("--lenient", action="store_true")

    p = sub.add_parser("oracle", help="exact-model verification")
    oracle_sub = p.add_subparsers(dest="oracle_command", required=True)
    p = oracle_sub.add_parser("selfcheck", help="run the full identity suite")
    p.add_argument("--models", type=int, default=1000)
    p.add_argument("--seed", type=int, default=20240810)

    p = sub.add_parser("report", help="full comparison report")
    p.add_argument("--frontier", nargs="+", required=True, help="frontier JSON file(s)")
    p.add_argument("--stats", required=True, help="corpus entropy stats JSON")
    p.add_argument("--ppl-target", dest="ppl_target", type=float, default=None)
    p.add_argument("--grid-size", dest="grid_size", type=int, default=None)
    p.add_argument("--out", default=None, help="write here instead of stdout")

    return parser


def _cmd_metrics(args) -> int:
    all_samples: list[metrics_mod.ScoredSample] = []
    skipped: list[str] = []
    for path in args.samples:
        all_samples.extend(
            formats.read_samples(path, strict=not args.lenient, error_sink=skipped)
        )
    if skipped:
        print(f"skipped {len(skipped)} malformed line(s)", file=sys.stderr)
        for msg in skipped:
            print(f"  {msg}", file=sys.stderr)
    if args.manifest:
        manifest = formats.read_manifest(args.manifest)
        formats.validate_against_manifest(all_samples, manifest)
    cells = metrics_mod.group_cells(all_samples)
    points = [
        metrics_mod.aggregate_cell(
            cell_samples,
            vocab_size=args.vocab_size,
            token_weighted=args.token_weighted,
            pooled_unigram=args.pooled_unigram,
        )
        for cell_samples in cells.values()
    ]
    formats.emit_points(points, args.out, format=args.format)
    print(f"wrote {len(points)} operating point(s) to {args.out}")
    return EXIT_OK


def _cmd_frontier(args) -> int:
    points = formats.read_points(args.points)
    if args.method is not None:
        points = [p for p in points if p.method_id == args.method]
    if args.nfe is not None:
        points = [p for p in points if p.nfe == args.nfe]
    if not points:
        raise DataError("no operating points left after filtering")
    keys = sorted({(p.method_id, p.nfe) for p in points})
    if len(keys) > 1:
        raise DataError(
            "points span multiple (method, nfe) groups: "
            + ", ".join(f"{m}/nfe={n}" for m, n in keys)
            + "; filter with --method/--nfe"
        )
    f = frontier_mod.build_frontier(points, mode=args.mode)
    formats.write_frontier(f, args.out)
    print(
        f"wrote frontier {f.method_id} nfe={f.nfe} mode={f.mode} "
        f"({len(f.points)} point(s)) to {args.out}"
    )
    return EXIT_OK


def _cmd_query(args) -> int:
    f = formats.read_frontier(args.frontier)
    try:
        if args.at_entropy is not None:
            value = frontier_mod.ppl_at_entropy(f, args.at_entropy)
            print(f"ppl@H={formats.format_float(args.at_entropy)}: {formats.format_float(value)}")
        else:
            crossings = frontier_mod.entropy_at_ppl(f, args.at_ppl)
            if not crossings:
                message = f"no crossing: frontier never reaches ppl {args.at_ppl:g}"
                if not args.lenient:
                    print(message, file=sys.stderr)
                    return EXIT_RANGE
                print(message)
                return EXIT_OK
            rendered = ", ".join(formats.format_float(c) for c in crossings)
            print(
                f"entropy@ppl={formats.format_float(args.at_ppl)}: {rendered} "
                f"(max-entropy crossing: {formats.format_float(max(crossings))})"
            )
    except RangeQueryError as e:
        if not args.lenient:
            print(f"out of range: {e}", file=sys.stderr)
            return EXIT_RANGE
        print(f"out of range: {e}")
    return EXIT_OK


def _cmd_compare(args) -> int:
    fa = formats.read_frontier(args.frontier_a)
    fb = formats.read_frontier(args.frontier_b)
    verdict = frontier_mod.compare(fa, fb, grid_size=args.grid_size)
    lo, hi = verdict.interval
    print(f"A: {fa.method_id} nfe={fa.nfe}; B: {fb.method_id} nfe={fb.nfe}")
    print(f"interval: [{formats.format_float(lo)}, {formats.format_float(hi)}] nats")
    print(f"verdict: {verdict.verdict}")
    print(f"min |delta lnPPL|: {formats.format_float(verdict.min_margin)} nats")
    if verdict.crossings:
        print("crossings: " + ", ".join(formats.format_float(c) for c in verdict.crossings))
    return EXIT_OK


def _cmd_corpus_entropy(args) -> int:
    skipped: list[str] = []
    docs = (
        tokens
        for _, tokens in formats.read_corpus(
            args.corpus, strict=not args.lenient, error_sink=skipped
        )
    )
    stats = corpus_mod.corpus_entropy_stats(docs, window_len=args.window_len)
    if skipped:
        print(f"skipped {len(skipped)} malformed line(s)", file=sys.stderr)
    formats.write_entropy_stats(stats, args.out)
    print(
        f"{stats.n_windows} window(s) of {stats.window_len} tokens: "
        f"mean {formats.format_float(stats.mean)}, median {formats.format_float(stats.median)}, "
        f"IQR [{formats.format_float(stats.q1)}, {formats.format_float(stats.q3)}], "
        f"sigma {formats.format_float(stats.sigma)} "
        f"({stats.n_skipped_docs} short doc(s) skipped)"
    )
    return EXIT_OK


def _cmd_oracle_selfcheck(args) -> int:
    results = oracle.run_selfcheck(n_models=args.models, seed=args.seed)
    all_ok = True
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"[{status}] {r.name}: {r.detail}")
        all_ok &= r.passed
    if not all_ok:
        print("oracle selfcheck FAILED", file=sys.stderr)
        return EXIT_DATA
    print("oracle selfcheck passed")
    return EXIT_OK


def _cmd_report(args) -> int:
    frontiers = [formats.read_frontier(p) for p in args.frontier]
    stats = formats.read_entropy_stats(args.stats)
    targets = report.default_targets(stats, ppl_target=args.ppl_target)
    text = report.report_compare(frontiers, stats, targets, grid_size=args.grid_size)
    if args.out:
        formats.atomic_write_text(args.out, text)
        print(f"wrote report to {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config) if args.config else {}
        _resolve(args, config)
        if args.command == "metrics":
            return _cmd_metrics(args)
        if args.command == "frontier":
            return _cmd_frontier(args)
        if args.command == "query":
            return _cmd_query(args)
        if args.command == "compare":
            return _cmd_compare(args)
        if args.command == "corpus-entropy":
            return _cmd_corpus_entropy(args)
        if args.command == "oracle":
            return _cmd_oracle_selfcheck(args)
        if args.command == "report":
            return _cmd_report(args)
        parser.error(f"unknown command {args.command!r}")
    except RangeQueryError as e:
        print(f"out of range: {e}", file=sys.stderr)
        return EXIT_RANGE
    except DataError as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except FileNotFoundError as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
