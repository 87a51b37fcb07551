"""Plain-text comparison reports.

Renders dominance verdicts, matched-entropy and matched-perplexity tables,
and per-point corpus-band annotations.  Output is deterministic byte for
byte given identical inputs: no timestamps, fixed ordering, fixed float
formatting.
"""

from __future__ import annotations

import math
from itertools import combinations
from typing import Sequence

from .corpus import EntropyStats, band_check
from .errors import DataError
from .formats import format_float
from .frontier import (
    Frontier,
    SliceTarget,
    compare,
    nfe_slice,
)


def default_targets(stats: EntropyStats, ppl_target: float = 17.0) -> list[SliceTarget]:
    """The two standard slice targets: corpus median entropy and the
    autoregressive eval perplexity."""
    return [
        SliceTarget(kind="entropy", value=stats.median, label="median entropy"),
        SliceTarget(kind="perplexity", value=ppl_target, label="AR eval ppl"),
    ]


def report_compare(
    frontiers: Sequence[Frontier],
    stats: EntropyStats,
    targets: Sequence[SliceTarget] | None = None,
    *,
    grid_size: int = 101,
) -> str:
    """Full comparison report over a set of frontiers.

    Sections: per-frontier operating points with band annotations, pairwise
    dominance per NFE, and one slice table per target.  Cells a query cannot
    reach are marked, never fabricated.
    """
    if not frontiers:
        raise DataError("report needs at least one frontier")
    if targets is None:
        targets = default_targets(stats)

    by_key: dict[tuple[str, int], Frontier] = {}
    for f in frontiers:
        key = (f.method_id, f.nfe)
        if key in by_key:
            raise DataError(f"duplicate frontier for method={key[0]!r} nfe={key[1]}")
        by_key[key] = f
    nested: dict[str, dict[int, Frontier]] = {}
    for (method, nfe), f in sorted(by_key.items()):
        nested.setdefault(method, {})[nfe] = f

    lines: list[str] = []
    out = lines.append
    out("generative frontier comparison")
    out("==============================")
    out("")
    out(
        f"corpus bands (nats): IQR [{format_float(stats.q1)}, {format_float(stats.q3)}], "
        f"+/-1 sigma [{format_float(stats.sigma_band[0])}, {format_float(stats.sigma_band[1])}], "
        f"median {format_float(stats.median)}, mean {format_float(stats.mean)}"
    )
    out("")

    out("frontiers")
    out("---------")
    for (method, nfe), f in sorted(by_key.items()):
        lo, hi = f.entropy_range
        out(
            f"{method} nfe={nfe} mode={f.mode} points={len(f.points)} "
            f"entropy range [{format_float(lo)}, {format_float(hi)}]"
        )
        for p in f.points:
            flags = band_check(p.entropy, stats)
            # kl_hat < 0 means the unigram proxy overshot the cross entropy
            kl_note = " kl_hat<0" if p.log_ppl - p.entropy < 0 else ""
            out(
                f"  T={format_float(p.temperature)} H={format_float(p.entropy)} "
                f"lnPPL={format_float(p.log_ppl)} ppl={format_float(math.exp(p.log_ppl))} "
                f"band={flags}{kl_note}"
            )
    out("")

    out("dominance")
    out("---------")
    nfes = sorted({nfe for _, nfe in by_key})
    any_pair = False
    for nfe in nfes:
        methods = sorted(m for (m, n) in by_key if n == nfe)
        for ma, mb in combinations(methods, 2):
            any_pair = True
            fa, fb = by_key[(ma, nfe)], by_key[(mb, nfe)]
            try:
                verdict = compare(fa, fb, grid_size=grid_size)
            except DataError as e:
                out(f"nfe={nfe} {ma} vs {mb}: not comparable ({e})")
                continue
            lo, hi = verdict.interval
            desc = {
                "A_dominates": f"{ma} dominates",
                "B_dominates": f"{mb} dominates",
                "crossing": "crossing",
            }[verdict.verdict]
            msg = (
                f"nfe={nfe} {ma} vs {mb} over [{format_float(lo)}, {format_float(hi)}]: "
                f"{desc}; min |delta lnPPL| = {format_float(verdict.min_margin)} nats"
            )
            if verdict.crossings:
                msg += (
                    "; crossings at "
                    + ", ".join(format_float(c) for c in verdict.crossings)
                )
            out(msg)
    if not any_pair:
        out("fewer than two methods share an NFE; nothing to compare")
    out("")

    for target in targets:
        if target.kind == "entropy":
            title = f"matched entropy @ {format_float(target.value)} nats"
            value_head = "ppl"
        else:
            title = f"matched perplexity @ {format_float(target.value)}"
            value_head = "entropy_nats (max-entropy crossing)"
        if target.label:
            title += f" ({target.label})"
        out(title)
        out("-" * len(title))
        table = nfe_slice(nested, target)
        out(f"{'method':<16} {'nfe':>5}  {value_head}")
        for (method, nfe), cell in sorted(table.items()):
            if cell.status == "ok":
                extra = ""
                if target.kind == "perplexity":
                    extra = f"  band={band_check(cell.value, stats)}"
                    if len(cell.crossings) > 1:
                        extra += (
                            "  (all crossings: "
                            + ", ".join(format_float(c) for c in cell.crossings)
                            + ")"
                        )
                out(f"{method:<16} {nfe:>5}  {format_float(cell.value)}{extra}")
            else:
                out(f"{method:<16} {nfe:>5}  [{cell.status}] {cell.message}")
        out("")

    return "\n".join(lines) + "\n"
