"""Per-sample metrics and per-cell aggregation.

A "cell" is one (method, temperature, nfe) setting of a generation sweep.
Scored samples carry per-token reference NLLs in nats; aggregation turns a
cell's samples into a single operating point holding unigram entropy, cross
entropy, generative perplexity, and the KL-gap estimate
kl_hat = cross_entropy - unigram_entropy.

All sums use math.fsum, so results are exactly rounded and independent of
sample order.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import DataError


@dataclass(frozen=True)
class ScoredSample:
    """One generated token sequence plus its reference scores.

    ref_nll[i] is -ln p_ref(tokens[i] | tokens[:i]) in nats, with the first
    token conditioned on BOS (scorer contract).
    """

    method_id: str
    temperature: float
    nfe: int
    seed: int
    tokens: tuple[int, ...]
    ref_nll: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(int(t) for t in self.tokens))
        object.__setattr__(self, "ref_nll", tuple(float(v) for v in self.ref_nll))
        if len(self.tokens) == 0:
            raise DataError("empty sequence")
        if len(self.ref_nll) != len(self.tokens):
            raise DataError(
                f"ref_nll length {len(self.ref_nll)} != tokens length {len(self.tokens)}"
            )
        if not (self.temperature > 0):
            raise DataError(f"temperature must be > 0, got {self.temperature}")
        if self.nfe < 1:
            raise DataError(f"nfe must be >= 1, got {self.nfe}")
        for i, t in enumerate(self.tokens):
            if t < 0:
                raise DataError(f"token id at index {i} is negative: {t}")
        for i, v in enumerate(self.ref_nll):
            if not math.isfinite(v) or v < 0:
                raise DataError(f"ref_nll entry at index {i} is invalid: {v}")

    @property
    def cell_key(self) -> tuple[str, float, int]:
        return (self.method_id, self.temperature, self.nfe)


@dataclass(frozen=True)
class OperatingPoint:
    """Aggregated metrics for one (method, temperature, nfe) cell.

    gen_ppl and kl_hat are derived, never stored: gen_ppl = exp(cross_entropy)
    and kl_hat = cross_entropy - unigram_entropy hold exactly by construction.
    kl_hat may legitimately be negative (unigram entropy only approximates the
    generative entropy); it is never clamped.
    """

    method_id: str
    temperature: float
    nfe: int
    n_samples: int
    unigram_entropy: float
    cross_entropy: float

    def __post_init__(self):
        if self.n_samples < 1:
            raise DataError(f"n_samples must be >= 1, got {self.n_samples}")
        if not (self.temperature > 0):
            raise DataError(f"temperature must be > 0, got {self.temperature}")
        if self.nfe < 1:
            raise DataError(f"nfe must be >= 1, got {self.nfe}")
        if not math.isfinite(self.unigram_entropy) or self.unigram_entropy < 0:
            raise DataError(f"unigram_entropy must be finite and >= 0, got {self.unigram_entropy}")
        if not math.isfinite(self.cross_entropy):
            raise DataError(f"cross_entropy must be finite, got {self.cross_entropy}")

    @property
    def gen_ppl(self) -> float:
        return math.exp(self.cross_entropy)

    @property
    def kl_hat(self) -> float:
        return self.cross_entropy - self.unigram_entropy

    @property
    def kl_hat_negative(self) -> bool:
        """Warning flag: the plug-in KL estimate came out negative."""
        return self.kl_hat < 0

    @property
    def cell_key(self) -> tuple[str, float, int]:
        return (self.method_id, self.temperature, self.nfe)


def unigram_entropy(tokens: Sequence[int]) -> float:
    """Entropy (nats) of the empirical token-frequency distribution of one sequence.

    Returns -sum_w p(w) ln p(w) with p the within-sequence frequencies; the
    result lies in [0, ln(#distinct tokens)].
    """
    n = len(tokens)
    if n == 0:
        raise DataError("empty sequence")
    counts = Counter(tokens)
    return math.fsum(
        -(c / n) * math.log(c / n) for c in counts.values()
    )


def sample_cross_entropy(ref_nll: Sequence[float]) -> float:
    """Mean per-token reference NLL (nats/token) of one sequence."""
    n = len(ref_nll)
    if n == 0:
        raise DataError("empty sequence")
    for i, v in enumerate(ref_nll):
        if not math.isfinite(v) or v < 0:
            raise DataError(f"ref_nll entry at index {i} is invalid: {v}")
    return math.fsum(ref_nll) / n


def aggregate_cell(
    samples: Iterable[ScoredSample],
    *,
    vocab_size: int | None = None,
    token_weighted: bool = False,
    pooled_unigram: bool = False,
) -> OperatingPoint:
    """Fold one cell's samples into an OperatingPoint.

    Default aggregation is the macro average: every sequence contributes its
    per-sequence mean NLL and per-sequence unigram entropy with equal weight.
    token_weighted=True switches the cross-entropy to a per-token average over
    the whole cell; pooled_unigram=True computes a single unigram entropy over
    the cell's pooled tokens instead of averaging per-sequence entropies
    (sensitivity-analysis modes, not the defaults).
    """
    samples = list(samples)
    if not samples:
        raise DataError("empty cell: no samples to aggregate")
    key = samples[0].cell_key
    for s in samples[1:]:
        if s.cell_key != key:
            raise DataError(f"mixed cell keys: {key} vs {s.cell_key}")
    if vocab_size is not None:
        for s in samples:
            bad = max(s.tokens)
            if bad >= vocab_size:
                raise DataError(
                    f"token id {bad} out of vocab bounds (vocab_size={vocab_size})"
                )

    if token_weighted:
        total = math.fsum(math.fsum(s.ref_nll) for s in samples)
        n_tokens = sum(len(s.tokens) for s in samples)
        cross = total / n_tokens
    else:
        cross = math.fsum(sample_cross_entropy(s.ref_nll) for s in samples) / len(samples)

    if pooled_unigram:
        pooled: Counter = Counter()
        for s in samples:
            pooled.update(s.tokens)
        n = sum(pooled.values())
        uni = math.fsum(-(c / n) * math.log(c / n) for c in pooled.values())
    else:
        uni = math.fsum(unigram_entropy(s.tokens) for s in samples) / len(samples)

    method_id, temperature, nfe = key
    return OperatingPoint(
        method_id=method_id,
        temperature=temperature,
        nfe=nfe,
        n_samples=len(samples),
        unigram_entropy=uni,
        cross_entropy=cross,
    )


def group_cells(samples: Iterable[ScoredSample]) -> dict[tuple[str, float, int], list[ScoredSample]]:
    """Bucket samples by (method, temperature, nfe), preserving input order."""
    cells: dict[tuple[str, float, int], list[ScoredSample]] = {}
    for s in samples:
        cells.setdefault(s.cell_key, []).append(s)
    return cells
