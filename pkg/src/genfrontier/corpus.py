"""Empirical unigram-entropy distribution of a tokenized reference corpus.

Per-window entropies over a validation corpus anchor frontier comparisons:
the interquartile range is the conservative band for "entropy a model should
be operating at", the +/-1 sigma band the broader one.  Window entropies are
sorted before any reduction, so the statistics are invariant under document
reordering and bit-for-bit reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError
from .metrics import unigram_entropy

DEFAULT_WINDOW_LEN = 1024
HISTOGRAM_BINS = 20


@dataclass(frozen=True)
class EntropyStats:
    """Summary of a corpus's per-window unigram-entropy distribution (nats)."""

    n_windows: int
    window_len: int
    mean: float
    median: float
    q1: float
    q3: float
    sigma: float
    histogram: tuple[tuple[float, float, int], ...]
    n_skipped_docs: int = 0

    def __post_init__(self):
        if self.n_windows < 1:
            raise DataError("EntropyStats requires at least one window")
        if not (self.q1 <= self.median <= self.q3):
            raise DataError(
                f"quartiles out of order: q1={self.q1}, median={self.median}, q3={self.q3}"
            )
        if self.sigma < 0:
            raise DataError(f"sigma must be >= 0, got {self.sigma}")
        total = sum(c for _, _, c in self.histogram)
        if total != self.n_windows:
            raise DataError(
                f"histogram counts sum to {total}, expected n_windows={self.n_windows}"
            )

    @property
    def iqr_band(self) -> tuple[float, float]:
        return (self.q1, self.q3)

    @property
    def sigma_band(self) -> tuple[float, float]:
        return (self.mean - self.sigma, self.mean + self.sigma)


def corpus_entropy_stats(
    corpus: Iterable[Sequence[int]],
    window_len: int = DEFAULT_WINDOW_LEN,
    *,
    histogram_bins: int = HISTOGRAM_BINS,
) -> EntropyStats:
    """Per-window unigram-entropy statistics over a stream of token sequences.

    Each document is cut into non-overlapping windows of window_len tokens;
    trailing partial windows are dropped and documents shorter than one window
    are skipped (the skip count is reported on the result).  Quartiles use
    linear interpolation between order statistics; sigma is the population
    standard deviation.
    """
    if window_len < 1:
        raise DataError(f"window_len must be >= 1, got {window_len}")
    entropies: list[float] = []
    skipped = 0
    for doc in corpus:
        n = len(doc)
        if n < window_len:
            skipped += 1
            continue
        for start in range(0, n - window_len + 1, window_len):
            entropies.append(unigram_entropy(doc[start : start + window_len]))
    if not entropies:
        raise DataError(
            f"no usable windows (window_len={window_len}, {skipped} document(s) too short)"
        )

    entropies.sort()
    arr = np.asarray(entropies, dtype=np.float64)
    mean = math.fsum(entropies) / len(entropies)
    q1, median, q3 = (
        float(np.quantile(arr, q, method="linear")) for q in (0.25, 0.5, 0.75)
    )
    sigma = float(np.std(arr))

    if arr[0] == arr[-1]:
        histogram = ((float(arr[0]), float(arr[-1]), len(entropies)),)
    else:
        counts, edges = np.histogram(arr, bins=histogram_bins)
        histogram = tuple(
            (float(edges[i]), float(edges[i + 1]), int(counts[i]))
            for i in range(len(counts))
        )

    return EntropyStats(
        n_windows=len(entropies),
        window_len=window_len,
        mean=mean,
        median=median,
        q1=q1,
        q3=q3,
        sigma=sigma,
        histogram=histogram,
        n_skipped_docs=skipped,
    )


def band_check(h: float, stats: EntropyStats) -> str:
    """Classify an entropy value against the corpus bands.

    "in_iqr" inside [q1, q3], else "in_sigma" inside mean +/- sigma, else
    "outside".
    """
    q1, q3 = stats.iqr_band
    if q1 <= h <= q3:
        return "in_iqr"
    lo, hi = stats.sigma_band
    if lo <= h <= hi:
        return "in_sigma"
    return "outside"
