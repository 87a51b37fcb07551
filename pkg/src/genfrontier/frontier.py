"""Frontier construction and matched-entropy / matched-perplexity queries.

A frontier is a method's temperature sweep plotted as a polyline in
(unigram entropy, log generative perplexity) space at fixed NFE.  All
interpolation is linear in log-perplexity: at fixed KL, log-perplexity is
affine in entropy, and linearity makes crossing detection exact on
polylines.  Queries never extrapolate beyond the swept range.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .errors import DataError, RangeQueryError
from .metrics import OperatingPoint

TIE_TOL = 1e-6  # nats; entropies closer than this are one operating point

RAW = "raw"
PARETO = "pareto"


@dataclass(frozen=True)
class FrontierPoint:
    entropy: float
    log_ppl: float
    temperature: float
    n_samples: int


@dataclass(frozen=True)
class Frontier:
    """Sorted polyline of operating points for one (method, nfe)."""

    method_id: str
    nfe: int
    points: tuple[FrontierPoint, ...]
    mode: str = RAW

    def __post_init__(self):
        if not self.points:
            raise DataError("frontier requires at least one point")
        if self.mode not in (RAW, PARETO):
            raise DataError(f"unknown frontier mode {self.mode!r}")
        ents = [p.entropy for p in self.points]
        if any(b <= a for a, b in zip(ents, ents[1:])):
            raise DataError("frontier entropies must be strictly increasing")

    @property
    def entropies(self) -> tuple[float, ...]:
        return tuple(p.entropy for p in self.points)

    @property
    def log_ppls(self) -> tuple[float, ...]:
        return tuple(p.log_ppl for p in self.points)

    @property
    def entropy_range(self) -> tuple[float, float]:
        return (self.points[0].entropy, self.points[-1].entropy)


@dataclass(frozen=True)
class DominanceVerdict:
    """Outcome of comparing two frontiers over their shared entropy interval."""

    interval: tuple[float, float]
    verdict: str  # "A_dominates" | "B_dominates" | "crossing"
    crossings: tuple[float, ...]
    min_margin: float


@dataclass(frozen=True)
class SliceTarget:
    """A fixed entropy or perplexity at which to slice frontiers across NFE."""

    kind: str  # "entropy" | "perplexity"
    value: float
    label: str = ""

    def __post_init__(self):
        if self.kind not in ("entropy", "perplexity"):
            raise DataError(f"unknown slice target kind {self.kind!r}")
        if self.kind == "perplexity" and not (self.value > 0):
            raise DataError("perplexity target must be > 0")


@dataclass(frozen=True)
class SliceCell:
    """One (method, nfe) entry of an NFE slice table."""

    status: str  # "ok" | "out_of_range" | "error"
    value: float | None = None
    crossings: tuple[float, ...] = ()
    message: str = ""


def build_frontier(
    points: Sequence[OperatingPoint],
    mode: str = RAW,
    *,
    tie_tol: float = TIE_TOL,
) -> Frontier:
    """Sort a sweep's operating points into a frontier polyline.

    Entropy ties within tie_tol nats collapse to a single point keeping the
    lower log-perplexity.  In pareto mode, points dominated by another point
    (entropy >= and log_ppl <=, at least one strict) are additionally pruned.
    """
    if not points:
        raise DataError("cannot build a frontier from zero points")
    key = (points[0].method_id, points[0].nfe)
    for p in points[1:]:
        if (p.method_id, p.nfe) != key:
            raise DataError(
                f"mixed frontier keys: {key} vs {(p.method_id, p.nfe)}"
            )

    ordered = sorted(points, key=lambda p: (p.unigram_entropy, p.cross_entropy))
    merged: list[FrontierPoint] = []
    i = 0
    while i < len(ordered):
        j = i
        # group everything within tie_tol of the group's first entropy
        while j + 1 < len(ordered) and (
            ordered[j + 1].unigram_entropy - ordered[i].unigram_entropy
        ) <= tie_tol:
            j += 1
        best = min(ordered[i : j + 1], key=lambda p: p.cross_entropy)
        merged.append(
            FrontierPoint(
                entropy=ordered[i].unigram_entropy,
                log_ppl=best.cross_entropy,
                temperature=best.temperature,
                n_samples=best.n_samples,
            )
        )
        i = j + 1

    if mode == PARETO:
        kept_rev: list[FrontierPoint] = []
        best_log_ppl = math.inf
        for p in reversed(merged):
            if p.log_ppl < best_log_ppl:
                kept_rev.append(p)
                best_log_ppl = p.log_ppl
        merged = list(reversed(kept_rev))

    return Frontier(method_id=key[0], nfe=key[1], points=tuple(merged), mode=mode)


def _require_queryable(f: Frontier) -> None:
    if len(f.points) < 2:
        raise DataError(
            f"frontier for {f.method_id!r} nfe={f.nfe} has {len(f.points)} point(s); "
            "interpolation queries need at least 2"
        )


def ppl_at_entropy(f: Frontier, h: float) -> float:
    """Perplexity of the frontier at entropy h (matched-entropy query).

    Linear interpolation of log-perplexity between the bracketing sweep
    points, exponentiated.  Querying outside the swept entropy range raises
    RangeQueryError carrying the nearest endpoint.
    """
    _require_queryable(f)
    lo, hi = f.entropy_range
    if h < lo or h > hi:
        nearest = f.points[0] if h < lo else f.points[-1]
        raise RangeQueryError(
            f"entropy {h} outside swept range [{lo}, {hi}]; "
            f"nearest endpoint ({nearest.entropy}, ppl={math.exp(nearest.log_ppl)})",
            nearest_entropy=nearest.entropy,
            nearest_ppl=math.exp(nearest.log_ppl),
        )
    ents = f.entropies
    idx = bisect.bisect_left(ents, h)
    if idx < len(ents) and ents[idx] == h:
        return math.exp(f.points[idx].log_ppl)
    p0, p1 = f.points[idx - 1], f.points[idx]
    t = (h - p0.entropy) / (p1.entropy - p0.entropy)
    return math.exp(p0.log_ppl + t * (p1.log_ppl - p0.log_ppl))


def entropy_at_ppl(f: Frontier, ppl: float) -> list[float]:
    """All entropies where the frontier polyline attains perplexity ppl, ascending.

    Raw frontiers may be non-monotone, so multiple crossings are possible;
    reports conventionally select the maximum (best diversity at matched
    quality).  No crossing returns an empty list.  A segment lying exactly at
    the query level contributes both of its endpoints.
    """
    _require_queryable(f)
    if not (ppl > 0):
        raise DataError(f"perplexity must be > 0, got {ppl}")
    y = math.log(ppl)

    def at_level(v: float) -> bool:
        return abs(v - y) <= 1e-12 * max(1.0, abs(y))

    crossings: list[float] = []
    for i, p in enumerate(f.points):
        if at_level(p.log_ppl):
            crossings.append(p.entropy)
        if i + 1 == len(f.points):
            break
        q = f.points[i + 1]
        y0, y1 = p.log_ppl, q.log_ppl
        if not at_level(y0) and not at_level(y1) and (y0 - y) * (y1 - y) < 0:
            t = (y - y0) / (y1 - y0)
            crossings.append(p.entropy + t * (q.entropy - p.entropy))
    crossings.sort()
    deduped: list[float] = []
    for h in crossings:
        if not deduped or h != deduped[-1]:
            deduped.append(h)
    return deduped


def _interp_log_ppl(f: Frontier, h: float) -> float:
    ents = f.entropies
    idx = bisect.bisect_left(ents, h)
    if idx < len(ents) and ents[idx] == h:
        return f.points[idx].log_ppl
    p0, p1 = f.points[idx - 1], f.points[idx]
    t = (h - p0.entropy) / (p1.entropy - p0.entropy)
    return p0.log_ppl + t * (p1.log_ppl - p0.log_ppl)


def compare(fa: Frontier, fb: Frontier, grid_size: int = 101) -> DominanceVerdict:
    """Dominance verdict for two frontiers over their shared entropy interval.

    Both polylines are evaluated on a uniform grid over the overlap plus every
    knot inside it.  A dominates iff its log-perplexity is strictly lower at
    every evaluation point; crossings are localized by sign change of the
    difference between consecutive knots and solved exactly (the difference is
    linear there).
    """
    _require_queryable(fa)
    _require_queryable(fb)
    if grid_size < 2:
        raise DataError(f"grid_size must be >= 2, got {grid_size}")
    lo = max(fa.entropy_range[0], fb.entropy_range[0])
    hi = min(fa.entropy_range[1], fb.entropy_range[1])
    if not (hi > lo):
        raise DataError(
            "no comparable operating region: entropy ranges "
            f"[{fa.entropy_range[0]}, {fa.entropy_range[1]}] and "
            f"[{fb.entropy_range[0]}, {fb.entropy_range[1]}] do not overlap"
        )

    knots = sorted(
        {h for h in fa.entropies + fb.entropies if lo <= h <= hi} | {lo, hi}
    )
    grid = sorted(
        set(lo + (hi - lo) * k / (grid_size - 1) for k in range(grid_size)) | set(knots)
    )
    diffs = [_interp_log_ppl(fa, h) - _interp_log_ppl(fb, h) for h in grid]
    min_margin = min(abs(d) for d in diffs)

    zero_tol = 1e-12
    crossings: list[float] = []
    knot_diffs = [_interp_log_ppl(fa, h) - _interp_log_ppl(fb, h) for h in knots]
    for h, d in zip(knots, knot_diffs):
        if abs(d) <= zero_tol:
            crossings.append(h)
    for (h0, d0), (h1, d1) in zip(zip(knots, knot_diffs), zip(knots[1:], knot_diffs[1:])):
        if abs(d0) > zero_tol and abs(d1) > zero_tol and (d0 < 0) != (d1 < 0):
            t = d0 / (d0 - d1)
            crossings.append(h0 + t * (h1 - h0))
    crossings.sort()

    if all(d < 0 for d in diffs):
        verdict = "A_dominates"
    elif all(d > 0 for d in diffs):
        verdict = "B_dominates"
    else:
        verdict = "crossing"
    return DominanceVerdict(
        interval=(lo, hi),
        verdict=verdict,
        crossings=tuple(crossings),
        min_margin=min_margin,
    )


def matched_ranking(
    points: Sequence[OperatingPoint],
    *,
    rel_tol: float = 1e-9,
    tie_tol: float = 1e-9,
) -> list[list[OperatingPoint]]:
    """Rank operating points with equal generative perplexity by kl_hat.

    Returns tie groups, closest to the reference distribution first (lowest
    kl_hat, equivalently highest unigram entropy; the two orders must agree
    because cross-entropy is matched).  Points whose perplexities are not
    matched within rel_tol are rejected.
    """
    if not points:
        raise DataError("matched_ranking needs at least one operating point")
    ppls = [p.gen_ppl for p in points]
    lo, hi = min(ppls), max(ppls)
    if (hi - lo) > rel_tol * hi:
        raise DataError(
            f"generative perplexities not matched (spread {hi - lo:g} over {hi:g}); "
            "interpolate each frontier to a common perplexity first"
        )
    ordered = sorted(points, key=lambda p: p.kl_hat)
    groups: list[list[OperatingPoint]] = []
    for p in ordered:
        if groups and abs(p.kl_hat - groups[-1][0].kl_hat) <= tie_tol:
            groups[-1].append(p)
        else:
            groups.append([p])
    for g0, g1 in zip(groups, groups[1:]):
        if not g0[0].unigram_entropy > g1[0].unigram_entropy:
            raise DataError(
                "kl_hat and entropy orderings disagree; perplexities are not "
                "matched tightly enough for a meaningful ranking"
            )
    return groups


def nfe_slice(
    frontiers: Mapping[str, Mapping[int, Frontier]],
    target: SliceTarget,
) -> dict[tuple[str, int], SliceCell]:
    """Evaluate every (method, nfe) frontier at a fixed entropy or perplexity.

    Entropy targets yield interpolated perplexity; perplexity targets yield
    the max-entropy crossing.  Cells the target cannot reach are marked, never
    fabricated.
    """
    table: dict[tuple[str, int], SliceCell] = {}
    for method_id in sorted(frontiers):
        for nfe in sorted(frontiers[method_id]):
            f = frontiers[method_id][nfe]
            try:
                if target.kind == "entropy":
                    value = ppl_at_entropy(f, target.value)
                    cell = SliceCell(status="ok", value=value)
                else:
                    crossings = entropy_at_ppl(f, target.value)
                    if not crossings:
                        cell = SliceCell(
                            status="out_of_range",
                            message=f"frontier never reaches ppl {target.value:g}",
                        )
                    else:
                        cell = SliceCell(
                            status="ok",
                            value=max(crossings),
                            crossings=tuple(crossings),
                        )
            except RangeQueryError as e:
                cell = SliceCell(status="out_of_range", message=str(e))
            except DataError as e:
                cell = SliceCell(status="error", message=str(e))
            table[(method_id, nfe)] = cell
    return table


def frontier_from_sweep(
    points: Iterable[OperatingPoint], mode: str = RAW
) -> dict[tuple[str, int], Frontier]:
    """Group operating points by (method, nfe) and build one frontier per group."""
    grouped: dict[tuple[str, int], list[OperatingPoint]] = {}
    for p in points:
        grouped.setdefault((p.method_id, p.nfe), []).append(p)
    return {k: build_frontier(v, mode) for k, v in sorted(grouped.items())}
