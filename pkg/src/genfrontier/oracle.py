"""Exact, enumerable toy sequence distributions.

Small product-of-categoricals and first-order Markov models whose joint
entropy, cross entropy, and KL divergence can be computed by full enumeration.
They verify the identities the evaluation method rests on (log gen-ppl =
KL + entropy, the e^delta sensitivity law, the chain-rule bound, the
matched-perplexity ranking law) to machine precision, and generate ground
truth for the estimator suite: `sample` draws scored sequences that flow
through the same aggregation as real sweeps.

Enumeration order is lexicographic with position 0 most significant; all
reductions are plain numpy sums in that fixed order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import DataError
from .metrics import OperatingPoint, ScoredSample

PRODUCT = "product_categorical"
MARKOV1 = "markov1"

MAX_VOCAB = 12
MAX_SEQ_LEN = 6
MAX_ENUMERATION = 3_000_000
_ROW_SUM_TOL = 1e-12
_CHUNK = 200_000


@dataclass(frozen=True, eq=False)
class ExactModel:
    """An enumerable sequence distribution with a softmax temperature knob.

    product_categorical holds per-position logits of shape (seq_len, vocab);
    markov1 holds initial logits (vocab,) and transition logits (vocab, vocab).
    Probabilities are softmax(logits / temperature) row-wise.
    """

    kind: str
    vocab_size: int
    seq_len: int
    temperature: float
    logits: np.ndarray  # product: (seq_len, vocab); markov1: unused
    init_logits: np.ndarray | None = None  # markov1: (vocab,)
    trans_logits: np.ndarray | None = None  # markov1: (vocab, vocab)

    def __post_init__(self):
        if self.kind not in (PRODUCT, MARKOV1):
            raise DataError(f"unknown model kind {self.kind!r}")
        if not (1 <= self.vocab_size <= MAX_VOCAB):
            raise DataError(f"vocab_size must be in [1, {MAX_VOCAB}], got {self.vocab_size}")
        if not (1 <= self.seq_len <= MAX_SEQ_LEN):
            raise DataError(f"seq_len must be in [1, {MAX_SEQ_LEN}], got {self.seq_len}")
        if self.vocab_size ** self.seq_len > MAX_ENUMERATION:
            raise DataError(
                f"enumeration budget exceeded: {self.vocab_size}^{self.seq_len} "
                f"> {MAX_ENUMERATION}"
            )
        if not (self.temperature > 0):
            raise DataError(f"temperature must be > 0, got {self.temperature}")
        for name, arr, shape in (
            ("logits", self.logits, (self.seq_len, self.vocab_size)),
            ("init_logits", self.init_logits, (self.vocab_size,)),
            ("trans_logits", self.trans_logits, (self.vocab_size, self.vocab_size)),
        ):
            if arr is not None and arr.shape != shape:
                raise DataError(f"{name} must have shape {shape}, got {arr.shape}")
        if self.kind == MARKOV1 and (self.init_logits is None or self.trans_logits is None):
            raise DataError("markov1 model requires init_logits and trans_logits")

    @classmethod
    def product(
        cls, logits: Sequence[Sequence[float]] | Sequence[float], temperature: float = 1.0,
        seq_len: int | None = None,
    ) -> "ExactModel":
        """Product of per-position categoricals.  1-D logits with seq_len
        replicate one categorical across i.i.d. positions."""
        arr = np.array(logits, dtype=np.float64)
        if arr.ndim == 1:
            if seq_len is None:
                raise DataError("1-D logits require an explicit seq_len")
            arr = np.tile(arr, (seq_len, 1))
        arr.flags.writeable = False
        return cls(
            kind=PRODUCT,
            vocab_size=arr.shape[1],
            seq_len=arr.shape[0],
            temperature=temperature,
            logits=arr,
        )

    @classmethod
    def markov(
        cls,
        init_logits: Sequence[float],
        trans_logits: Sequence[Sequence[float]],
        seq_len: int,
        temperature: float = 1.0,
    ) -> "ExactModel":
        init = np.array(init_logits, dtype=np.float64)
        trans = np.array(trans_logits, dtype=np.float64)
        init.flags.writeable = False
        trans.flags.writeable = False
        return cls(
            kind=MARKOV1,
            vocab_size=init.shape[0],
            seq_len=seq_len,
            temperature=temperature,
            logits=np.zeros((seq_len, init.shape[0])),
            init_logits=init,
            trans_logits=trans,
        )

    def with_temperature(self, temperature: float) -> "ExactModel":
        return replace(self, temperature=temperature)

    def position_dists(self) -> np.ndarray:
        """Row-stochastic (seq_len, vocab) table for product models."""
        if self.kind != PRODUCT:
            raise DataError("position_dists is only defined for product models")
        return _softmax_rows(self.logits, self.temperature)

    def chain_dists(self) -> tuple[np.ndarray, np.ndarray]:
        """(initial, transition) probability tables for markov1 models."""
        if self.kind != MARKOV1:
            raise DataError("chain_dists is only defined for markov1 models")
        init = _softmax_rows(self.init_logits[None, :], self.temperature)[0]
        trans = _softmax_rows(self.trans_logits, self.temperature)
        return init, trans


@dataclass(frozen=True)
class ExactMetrics:
    """Exactly enumerated metrics; entropies in nats, per-token where noted."""

    joint_entropy: float  # nats/sequence
    per_token_entropy: float  # nats/token
    cross_entropy: float  # nats/token
    kl: float  # nats/token
    gen_ppl: float
    sum_marginal_entropy: float  # nats/sequence
    unigram_entropy_expectation: float  # nats/token


def _softmax_rows(logits: np.ndarray, temperature: float) -> np.ndarray:
    z = logits / temperature
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    rows = e / e.sum(axis=-1, keepdims=True)
    if not np.all(np.abs(rows.sum(axis=-1) - 1.0) <= _ROW_SUM_TOL):
        raise DataError("softmax rows failed to normalize within 1e-12")
    return rows


@lru_cache(maxsize=8)
def _all_sequences(vocab_size: int, seq_len: int) -> np.ndarray:
    """(vocab^seq_len, seq_len) array of every sequence, lexicographic order."""
    grids = np.meshgrid(*[np.arange(vocab_size, dtype=np.int16)] * seq_len, indexing="ij")
    seqs = np.stack(grids, axis=-1).reshape(-1, seq_len)
    seqs.flags.writeable = False
    return seqs


def sequence_log_probs(model: ExactModel) -> np.ndarray:
    """Log probability of every sequence, in enumeration order."""
    seqs = _all_sequences(model.vocab_size, model.seq_len)
    with np.errstate(divide="ignore"):
        if model.kind == PRODUCT:
            logp = np.log(model.position_dists())
            out = logp[0][seqs[:, 0]].astype(np.float64)
            for i in range(1, model.seq_len):
                out += logp[i][seqs[:, i]]
        else:
            init, trans = model.chain_dists()
            log_init, log_trans = np.log(init), np.log(trans)
            out = log_init[seqs[:, 0]].astype(np.float64)
            for i in range(1, model.seq_len):
                out += log_trans[seqs[:, i - 1], seqs[:, i]]
    return out


def _empirical_entropies(seqs: np.ndarray, vocab_size: int) -> np.ndarray:
    """Per-sequence unigram entropy (nats) for a block of sequences."""
    n, seq_len = seqs.shape
    counts = np.zeros((n, vocab_size), dtype=np.float64)
    rows = np.arange(n)
    for i in range(seq_len):
        np.add.at(counts, (rows, seqs[:, i].astype(np.intp)), 1.0)
    freq = counts / seq_len
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(freq > 0, -freq * np.log(freq), 0.0)
    return terms.sum(axis=1)


def exact_metrics(q: ExactModel, p_ref: ExactModel) -> ExactMetrics:
    """Enumerate all sequences and compute the full metric set exactly.

    Raises if q places mass on a sequence where p_ref has none (the KL and
    cross entropy would be infinite); the error names an offending sequence.
    """
    if (q.vocab_size, q.seq_len) != (p_ref.vocab_size, p_ref.seq_len):
        raise DataError(
            f"model shapes differ: q is ({q.vocab_size}, {q.seq_len}), "
            f"p_ref is ({p_ref.vocab_size}, {p_ref.seq_len})"
        )
    seqs = _all_sequences(q.vocab_size, q.seq_len)
    lq = sequence_log_probs(q)
    lp = sequence_log_probs(p_ref)
    prob = np.exp(lq)
    support = prob > 0.0

    bad = support & np.isneginf(lp)
    if np.any(bad):
        offender = tuple(int(t) for t in seqs[int(np.argmax(bad))])
        raise DataError(
            f"support violation: q assigns probability to sequence {offender} "
            "where p_ref assigns none"
        )

    p_s, lq_s, lp_s = prob[support], lq[support], lp[support]
    joint_entropy = float(-(p_s * lq_s).sum())
    cross_seq = float(-(p_s * lp_s).sum())
    kl_seq = float((p_s * (lq_s - lp_s)).sum())

    seq_len = q.seq_len
    per_token_entropy = joint_entropy / seq_len
    cross_entropy = cross_seq / seq_len
    kl = kl_seq / seq_len

    sum_marginal = 0.0
    for i in range(seq_len):
        marg = np.bincount(
            seqs[:, i].astype(np.intp), weights=prob, minlength=q.vocab_size
        )
        mm = marg[marg > 0]
        sum_marginal += float(-(mm * np.log(mm)).sum())

    expectation = 0.0
    for start in range(0, len(seqs), _CHUNK):
        block = slice(start, start + _CHUNK)
        expectation += float(
            (prob[block] * _empirical_entropies(seqs[block], q.vocab_size)).sum()
        )

    return ExactMetrics(
        joint_entropy=joint_entropy,
        per_token_entropy=per_token_entropy,
        cross_entropy=cross_entropy,
        kl=kl,
        gen_ppl=math.exp(cross_entropy),
        sum_marginal_entropy=sum_marginal,
        unigram_entropy_expectation=expectation,
    )


def sweep(
    q_base: ExactModel,
    p_ref: ExactModel,
    temperatures: Sequence[float],
) -> list[tuple[float, ExactMetrics]]:
    """Exact (temperature, metrics) frontier for a tempered model family."""
    if not temperatures:
        raise DataError("temperature sweep must be non-empty")
    for t in temperatures:
        if not (t > 0):
            raise DataError(f"temperatures must be > 0, got {t}")
    return [(float(t), exact_metrics(q_base.with_temperature(t), p_ref)) for t in temperatures]


def operating_points_from_sweep(
    swept: Iterable[tuple[float, ExactMetrics]],
    method_id: str,
    nfe: int = 1,
) -> list[OperatingPoint]:
    """Exact sweep results as operating points (true per-token entropy as the
    entropy coordinate), ready for frontier construction."""
    return [
        OperatingPoint(
            method_id=method_id,
            temperature=t,
            nfe=nfe,
            n_samples=1,
            unigram_entropy=m.per_token_entropy,
            cross_entropy=m.cross_entropy,
        )
        for t, m in swept
    ]


def sample(
    q: ExactModel,
    p_ref: ExactModel,
    n: int,
    seed: int,
    *,
    method_id: str = "oracle",
    nfe: int = 1,
) -> list[ScoredSample]:
    """Draw n sequences from q, scored with exact per-token NLLs under p_ref.

    Deterministic given the seed.  The returned samples carry q's temperature
    and the seed, so they aggregate into a single cell.
    """
    if n < 1:
        raise DataError(f"n must be >= 1, got {n}")
    if (q.vocab_size, q.seq_len) != (p_ref.vocab_size, p_ref.seq_len):
        raise DataError("q and p_ref must share vocab_size and seq_len")
    rng = np.random.default_rng(seed)
    seq_len, vocab = q.seq_len, q.vocab_size

    if q.kind == PRODUCT:
        dists = q.position_dists()
        draws = np.empty((n, seq_len), dtype=np.intp)
        for i in range(seq_len):
            draws[:, i] = rng.choice(vocab, size=n, p=dists[i])
    else:
        init, trans = q.chain_dists()
        draws = np.empty((n, seq_len), dtype=np.intp)
        draws[:, 0] = rng.choice(vocab, size=n, p=init)
        for i in range(1, seq_len):
            cum = np.cumsum(trans[draws[:, i - 1]], axis=1)
            u = rng.random(n)
            draws[:, i] = np.minimum((u[:, None] > cum).sum(axis=1), vocab - 1)

    with np.errstate(divide="ignore"):
        if p_ref.kind == PRODUCT:
            ref_logp = np.log(p_ref.position_dists())
            nll = np.empty((n, seq_len), dtype=np.float64)
            for i in range(seq_len):
                nll[:, i] = -ref_logp[i][draws[:, i]]
        else:
            init, trans = p_ref.chain_dists()
            nll = np.empty((n, seq_len), dtype=np.float64)
            nll[:, 0] = -np.log(init)[draws[:, 0]]
            log_trans = np.log(trans)
            for i in range(1, seq_len):
                nll[:, i] = -log_trans[draws[:, i - 1], draws[:, i]]
    if not np.all(np.isfinite(nll)):
        raise DataError("sampled a sequence outside p_ref's support")

    return [
        ScoredSample(
            method_id=method_id,
            temperature=q.temperature,
            nfe=nfe,
            seed=seed,
            tokens=tuple(int(t) for t in draws[k]),
            ref_nll=tuple(float(v) for v in nll[k]),
        )
        for k in range(n)
    ]


def scored_sample_moments(q: ExactModel, p_ref: ExactModel) -> tuple[float, float]:
    """Exact standard deviations (sigma_nll, sigma_unigram) of the per-sequence
    mean NLL and per-sequence unigram entropy under q, by enumeration.

    These are the sigma-hats that bound Monte Carlo error: the mean of n
    samples has standard error sigma / sqrt(n).
    """
    seqs = _all_sequences(q.vocab_size, q.seq_len)
    lq = sequence_log_probs(q)
    lp = sequence_log_probs(p_ref)
    prob = np.exp(lq)
    support = prob > 0.0
    if np.any(support & np.isneginf(lp)):
        raise DataError("support violation between q and p_ref")

    mean_nll = -lp / q.seq_len
    m1 = float((prob[support] * mean_nll[support]).sum())
    m2 = float((prob[support] * mean_nll[support] ** 2).sum())
    var_nll = max(m2 - m1 * m1, 0.0)

    h = np.concatenate(
        [
            _empirical_entropies(seqs[s : s + _CHUNK], q.vocab_size)
            for s in range(0, len(seqs), _CHUNK)
        ]
    )
    h1 = float((prob * h).sum())
    h2 = float((prob * h**2).sum())
    var_h = max(h2 - h1 * h1, 0.0)
    return math.sqrt(var_nll), math.sqrt(var_h)


# ---------------------------------------------------------------------------
# Constructions: random models and analytically targeted distributions
# ---------------------------------------------------------------------------


def random_product(
    rng: np.random.Generator, vocab_size: int, seq_len: int, scale: float = 1.5
) -> ExactModel:
    return ExactModel.product(rng.normal(0.0, scale, (seq_len, vocab_size)))


def random_markov(
    rng: np.random.Generator, vocab_size: int, seq_len: int, scale: float = 1.5
) -> ExactModel:
    return ExactModel.markov(
        rng.normal(0.0, scale, vocab_size),
        rng.normal(0.0, scale, (vocab_size, vocab_size)),
        seq_len=seq_len,
    )


def stationary_distribution(trans: np.ndarray) -> np.ndarray:
    """Stationary distribution of a row-stochastic matrix (unit eigenvector)."""
    w, v = np.linalg.eig(trans.T)
    k = int(np.argmin(np.abs(w - 1.0)))
    pi = np.real(v[:, k])
    pi = np.abs(pi)
    return pi / pi.sum()


def spike_logits(vocab_size: int, top_mass: float) -> np.ndarray:
    """Logits of the one-parameter family (p, uniform tail over the rest)."""
    if not (0 < top_mass < 1):
        raise DataError(f"top_mass must be in (0, 1), got {top_mass}")
    tail = (1.0 - top_mass) / (vocab_size - 1)
    return np.log(np.array([top_mass] + [tail] * (vocab_size - 1)))


def spike_entropy(vocab_size: int, top_mass: float) -> float:
    tail = (1.0 - top_mass) / (vocab_size - 1)
    return -top_mass * math.log(top_mass) - (1.0 - top_mass) * math.log(tail)


def solve_spike_entropy(vocab_size: int, entropy: float) -> float:
    """top_mass of the spike family with the given entropy (nats).

    Entropy decreases monotonically from ln(vocab) to 0 as top_mass goes from
    1/vocab to 1, so the root is unique.
    """
    hi = math.log(vocab_size)
    if not (0 < entropy < hi):
        raise DataError(f"target entropy must be in (0, ln {vocab_size}={hi:.6f})")
    return brentq(
        lambda p: spike_entropy(vocab_size, p) - entropy,
        1.0 / vocab_size + 1e-15,
        1.0 - 1e-12,
        xtol=1e-16,
        rtol=8.9e-16,
    )


def solve_spike_ref_kl(vocab_size: int, top_mass: float, kl: float) -> float:
    """Reference top-mass r such that KL(spike(p) || spike(r)) equals kl.

    Within the spike family the KL collapses to its binary form in the shape
    parameter; the sharper-reference branch (r >= p) is returned.
    """
    if kl < 0:
        raise DataError(f"kl must be >= 0, got {kl}")
    if kl == 0:
        return top_mass

    def f(r: float) -> float:
        return (
            top_mass * math.log(top_mass / r)
            + (1.0 - top_mass) * math.log((1.0 - top_mass) / (1.0 - r))
            - kl
        )

    return brentq(f, top_mass, 1.0 - 1e-12, xtol=1e-16, rtol=8.9e-16)


def matched_kl_pair(
    delta: float,
    kl: float = 0.0,
    *,
    vocab_size: int = 8,
    seq_len: int = 2,
    high_entropy: float | None = None,
) -> tuple[tuple[ExactModel, ExactModel], tuple[ExactModel, ExactModel]]:
    """Two (q, p_ref) pairs with equal per-token KL and entropies delta apart.

    Both pairs are i.i.d. spike-family product models, so per-token quantities
    equal the single-position ones; entropy targets are solved to root-finder
    precision.  The exp relation then forces gen_ppl ratios of e^delta.
    """
    h1 = high_entropy if high_entropy is not None else math.log(vocab_size) - 0.15
    h2 = h1 - delta
    if h2 <= 0:
        raise DataError(f"entropy gap {delta} too large for high entropy {h1}")
    pairs = []
    for h in (h1, h2):
        p = solve_spike_entropy(vocab_size, h)
        r = solve_spike_ref_kl(vocab_size, p, kl)
        q_model = ExactModel.product(spike_logits(vocab_size, p), seq_len=seq_len)
        ref_model = ExactModel.product(spike_logits(vocab_size, r), seq_len=seq_len)
        pairs.append((q_model, ref_model))
    return pairs[0], pairs[1]


def matched_ppl_pair(
    rng: np.random.Generator, vocab_size: int = 8, seq_len: int = 2
) -> tuple[ExactModel, ExactModel, ExactModel] | None:
    """Two models with identical cross entropy against one shared reference.

    q1 is a spike family member, q2 a split-top-two family member; both
    families have cross entropy linear in their shape parameter, so the
    matching parameter is an exact linear solve.  Returns (q1, q2, ref), or
    None when the random reference admits no interior solution.
    """
    ref_logits = rng.normal(0.0, 1.0, vocab_size)
    ref = ExactModel.product(ref_logits, seq_len=seq_len)
    log_r = np.log(ref.position_dists()[0])

    # family A: (p, uniform tail over vocab-1)
    a_top = -log_r[0]
    a_tail = -float(np.mean(log_r[1:]))
    # family B: (p/2, p/2, uniform tail over vocab-2)
    b_top = -float((log_r[0] + log_r[1]) / 2.0)
    b_tail = -float(np.mean(log_r[2:]))

    # cross entropy of each family: ce(p) = p * top + (1 - p) * tail
    def c_range(top: float, tail: float) -> tuple[float, float]:
        lo_p, hi_p = 0.05, 0.95
        vals = (lo_p * top + (1 - lo_p) * tail, hi_p * top + (1 - hi_p) * tail)
        return min(vals), max(vals)

    lo = max(c_range(a_top, a_tail)[0], c_range(b_top, b_tail)[0])
    hi = min(c_range(a_top, a_tail)[1], c_range(b_top, b_tail)[1])
    if not (hi > lo):
        return None
    target = rng.uniform(lo, hi)

    def solve(top: float, tail: float) -> float:
        return (target - tail) / (top - tail)

    if abs(a_top - a_tail) < 1e-9 or abs(b_top - b_tail) < 1e-9:
        return None
    pa, pb = solve(a_top, a_tail), solve(b_top, b_tail)
    if not (0.05 <= pa <= 0.95 and 0.05 <= pb <= 0.95):
        return None

    qa = ExactModel.product(spike_logits(vocab_size, pa), seq_len=seq_len)
    tail_b = (1.0 - pb) / (vocab_size - 2)
    qb_probs = [pb / 2, pb / 2] + [tail_b] * (vocab_size - 2)
    qb = ExactModel.product(np.log(qb_probs), seq_len=seq_len)
    return qa, qb, ref


# ---------------------------------------------------------------------------
# Self-check: the identity suite behind `genfrontier oracle selfcheck`
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def run_selfcheck(n_models: int = 1000, seed: int = 20240810) -> list[CheckResult]:
    """Run every oracle identity and law; all must pass for a healthy install."""
    rng = np.random.default_rng(seed)
    results: list[CheckResult] = []

    def record(name: str, passed: bool, detail: str) -> None:
        results.append(CheckResult(name=name, passed=bool(passed), detail=detail))

    # Identity suite: ln(gen_ppl) = kl + per-token entropy; kl >= 0; kl = 0 at q = ref.
    worst_identity = 0.0
    min_kl = math.inf
    for _ in range(n_models):
        vocab = int(rng.integers(2, 9))
        seq_len = int(rng.integers(1, 6))
        make = random_product if rng.random() < 0.5 else random_markov
        q = make(rng, vocab, seq_len)
        ref = make(rng, vocab, seq_len)
        m = exact_metrics(q, ref)
        worst_identity = max(
            worst_identity, abs(math.log(m.gen_ppl) - (m.kl + m.per_token_entropy))
        )
        min_kl = min(min_kl, m.kl)
    record(
        "log-genppl decomposition",
        worst_identity <= 1e-12,
        f"max |ln(gen_ppl) - (kl + entropy)| = {worst_identity:.3e}",
    )
    record("kl nonnegative", min_kl >= -1e-15, f"min kl = {min_kl:.3e}")
    q0 = random_product(rng, 6, 3)
    self_kl = exact_metrics(q0, q0).kl
    record("kl zero at q = ref", abs(self_kl) <= 1e-15, f"kl(q, q) = {self_kl:.3e}")

    # e^delta sensitivity at matched KL.
    worst_ratio = 0.0
    for delta in (0.1, 0.3, 1.0):
        for kl in (0.0, 0.2):
            (q1, r1), (q2, r2) = matched_kl_pair(delta, kl)
            m1, m2 = exact_metrics(q1, r1), exact_metrics(q2, r2)
            ratio = m1.gen_ppl / m2.gen_ppl
            worst_ratio = max(worst_ratio, abs(ratio / math.exp(delta) - 1.0))
    record(
        "e^delta sensitivity",
        worst_ratio <= 1e-9,
        f"max relative ratio error = {worst_ratio:.3e}",
    )

    # Chain-rule bound on random Markov models.
    violations = 0
    strict_failures = 0
    for _ in range(n_models):
        vocab = int(rng.integers(2, 9))
        seq_len = int(rng.integers(2, 6))
        q = random_markov(rng, vocab, seq_len)
        ref = random_markov(rng, vocab, seq_len)
        m = exact_metrics(q, ref)
        if m.joint_entropy > m.sum_marginal_entropy + 1e-12:
            violations += 1
        _, trans = q.chain_dists()
        pi = stationary_distribution(trans)
        tv = 0.5 * float(np.abs(trans - pi[None, :]).sum(axis=1).max())
        if tv > 0.05 and not (m.sum_marginal_entropy - m.joint_entropy > 1e-12):
            strict_failures += 1
    record(
        "chain-rule bound",
        violations == 0 and strict_failures == 0,
        f"{violations} bound violations, {strict_failures} strictness failures",
    )

    # Matched-perplexity ranking law.
    checked = 0
    sign_failures = 0
    while checked < 200:
        built = matched_ppl_pair(rng)
        if built is None:
            continue
        qa, qb, ref = built
        ma, mb = exact_metrics(qa, ref), exact_metrics(qb, ref)
        if abs(ma.per_token_entropy - mb.per_token_entropy) < 1e-6:
            continue
        checked += 1
        if np.sign(ma.kl - mb.kl) != -np.sign(
            ma.per_token_entropy - mb.per_token_entropy
        ):
            sign_failures += 1
    record(
        "matched-perplexity ranking",
        sign_failures == 0,
        f"{sign_failures} sign disagreements over {checked} matched pairs",
    )

    # Unigram entropy approaches the average marginal entropy as length grows.
    ok_trend = True
    for _ in range(20):
        base = rng.normal(0.0, 1.5, 6)
        gaps = []
        for seq_len in (2, 4, 6):
            q = ExactModel.product(base, seq_len=seq_len)
            m = exact_metrics(q, q)
            avg_marginal = m.sum_marginal_entropy / seq_len
            gaps.append(abs(m.unigram_entropy_expectation - avg_marginal))
        if not (gaps[0] > gaps[1] > gaps[2]):
            ok_trend = False
    record(
        "unigram-to-marginal convergence",
        ok_trend,
        "per-sequence unigram entropy gap shrinks over seq_len 2, 4, 6",
    )

    return results
