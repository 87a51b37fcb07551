"""Generative-frontier evaluation toolkit.

Turns reference-scored generation sweeps into operating points, frontiers,
dominance verdicts, and matched-entropy / matched-perplexity comparisons,
with an exact enumeration oracle verifying the identities the method rests
on (log gen-ppl = KL + entropy and its corollaries).
"""

from .corpus import EntropyStats, band_check, corpus_entropy_stats
from .errors import DataError, RangeQueryError
from .frontier import (
    DominanceVerdict,
    Frontier,
    FrontierPoint,
    SliceCell,
    SliceTarget,
    build_frontier,
    compare,
    entropy_at_ppl,
    frontier_from_sweep,
    matched_ranking,
    nfe_slice,
    ppl_at_entropy,
)
from .metrics import (
    OperatingPoint,
    ScoredSample,
    aggregate_cell,
    group_cells,
    sample_cross_entropy,
    unigram_entropy,
)
from .oracle import (
    ExactMetrics,
    ExactModel,
    exact_metrics,
    matched_kl_pair,
    operating_points_from_sweep,
    run_selfcheck,
    sample,
    sweep,
)

__version__ = "0.1.0"

__all__ = [
    "DataError",
    "DominanceVerdict",
    "EntropyStats",
    "ExactMetrics",
    "ExactModel",
    "Frontier",
    "FrontierPoint",
    "OperatingPoint",
    "RangeQueryError",
    "ScoredSample",
    "SliceCell",
    "SliceTarget",
    "aggregate_cell",
    "band_check",
    "build_frontier",
    "compare",
    "corpus_entropy_stats",
    "entropy_at_ppl",
    "exact_metrics",
    "frontier_from_sweep",
    "group_cells",
    "matched_kl_pair",
    "matched_ranking",
    "nfe_slice",
    "operating_points_from_sweep",
    "ppl_at_entropy",
    "run_selfcheck",
    "sample",
    "sample_cross_entropy",
    "sweep",
    "unigram_entropy",
]
