"""Per-token reference NLL scoring.

ref_nll[i] = -ln p_ref(token_i | BOS, tokens_<i), natural log, full precision
of the model's forward pass.  Position 0 is conditioned on BOS so every
sequence is scored under the same convention.  Inference only, no sampling:
output is deterministic given the inputs, and record order matches input
order regardless of batching.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import torch

DEFAULT_MODEL_ID = "gpt2-large"


class ScoreError(ValueError):
    """Unusable request or input (bad metadata, context overflow, vocab
    mismatch, malformed record)."""


@dataclass(frozen=True)
class ScoreRequest:
    """One scoring job: where the sequences come from, which reference model
    scores them, and the sweep metadata to stamp on every record."""

    input_path: str
    output_path: str
    method_id: str
    temperature: float
    nfe: int
    seed: int
    model_id: str = DEFAULT_MODEL_ID
    input_format: str = "tokens"  # "tokens" (JSONL) | "text" (one doc per line)
    batch_size: int = 8
    device: str = "cpu"
    vocab_size: int | None = None  # cross-check against the model's vocab

    def __post_init__(self):
        if self.batch_size < 1:
            raise ScoreError(f"batch_size must be >= 1, got {self.batch_size}")
        if not self.method_id:
            raise ScoreError("method_id metadata is required")
        if not (self.temperature > 0):
            raise ScoreError(f"temperature must be > 0, got {self.temperature}")
        if self.nfe < 1:
            raise ScoreError(f"nfe must be >= 1, got {self.nfe}")
        if self.input_format not in ("tokens", "text"):
            raise ScoreError(f"unknown input_format {self.input_format!r}")


def load_reference(model_id: str, device: str = "cpu"):
    """Load the reference model for inference (local path or hub id)."""
    from transformers import AutoModelForCausalLM

    model = AutoModelForCausalLM.from_pretrained(model_id)
    model.to(device)
    model.eval()
    return model


def _bos_id(model) -> int:
    bos = getattr(model.config, "bos_token_id", None)
    if bos is None:
        bos = getattr(model.config, "eos_token_id", None)
    if bos is None:
        raise ScoreError(
            "reference model declares neither bos_token_id nor eos_token_id; "
            "cannot fix the position-0 conditioning convention"
        )
    return int(bos)


def _context_limit(model) -> int:
    for attr in ("n_positions", "max_position_embeddings"):
        limit = getattr(model.config, attr, None)
        if limit is not None:
            return int(limit)
    return 1 << 30


def score_token_sequences(
    model,
    sequences: Sequence[Sequence[int]],
    *,
    batch_size: int = 8,
    device: str = "cpu",
) -> list[list[float]]:
    """Per-token NLLs (nats) for each sequence, in input order.

    Sequences are right-padded within a batch; padding sits after the real
    tokens, so causal attention keeps every real position's score identical
    to the unbatched value.  Sequences that would exceed the model context
    (including the BOS slot) are rejected outright, never truncated.
    """
    vocab = int(model.config.vocab_size)
    limit = _context_limit(model)
    bos = _bos_id(model)
    for idx, seq in enumerate(sequences):
        if len(seq) == 0:
            raise ScoreError(f"sequence {idx} is empty")
        worst = max(seq)
        if worst >= vocab or min(seq) < 0:
            raise ScoreError(
                f"sequence {idx}: token id {worst} outside model vocab "
                f"(vocab_size={vocab})"
            )
        if 1 + len(seq) > limit:
            raise ScoreError(
                f"sequence {idx}: length {len(seq)} plus BOS exceeds model "
                f"context {limit}; refusing to truncate"
            )

    results: list[list[float]] = []
    with torch.no_grad():
        for start in range(0, len(sequences), batch_size):
            batch = sequences[start : start + batch_size]
            lens = [len(s) for s in batch]
            width = 1 + max(lens)
            input_ids = torch.full((len(batch), width), bos, dtype=torch.long)
            mask = torch.zeros((len(batch), width), dtype=torch.long)
            for row, seq in enumerate(batch):
                input_ids[row, 1 : 1 + len(seq)] = torch.tensor(seq, dtype=torch.long)
                mask[row, : 1 + len(seq)] = 1
            input_ids = input_ids.to(device)
            mask = mask.to(device)
            logits = model(input_ids=input_ids, attention_mask=mask).logits
            logprobs = torch.log_softmax(logits.float(), dim=-1)
            for row, seq in enumerate(batch):
                gathered = logprobs[row, : len(seq), :].gather(
                    1, input_ids[row, 1 : 1 + len(seq)].unsqueeze(1)
                )
                results.append([-float(v) for v in gathered.squeeze(1)])
    return results


def read_token_sequences(path: str | Path) -> list[list[int]]:
    """JSONL records carrying a "tokens" list (sample or corpus records both
    qualify)."""
    sequences: list[list[int]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                tokens = [int(t) for t in obj["tokens"]]
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
                raise ScoreError(f"{path} line {line_no}: {e}") from e
            sequences.append(tokens)
    if not sequences:
        raise ScoreError(f"no sequences in {path}")
    return sequences


def read_text_sequences(path: str | Path, tokenizer) -> list[list[int]]:
    """One document per non-empty line, tokenized without special tokens."""
    sequences: list[list[int]] = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        ids = tokenizer.encode(line, add_special_tokens=False)
        if ids:
            sequences.append([int(t) for t in ids])
    if not sequences:
        raise ScoreError(f"no non-empty documents in {path}")
    return sequences


def _atomic_write_lines(path: str | Path, lines: Iterable[str]) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            for line in lines:
                fh.write(line)
                fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def score_samples(req: ScoreRequest, model=None, tokenizer=None) -> int:
    """Score every input sequence and write a sample JSONL file.

    Returns the number of records written.  Records appear in input order and
    carry the request's method/temperature/nfe/seed stamps.
    """
    if model is None:
        model = load_reference(req.model_id, req.device)
    if req.vocab_size is not None and int(model.config.vocab_size) != req.vocab_size:
        raise ScoreError(
            f"model vocab {int(model.config.vocab_size)} != declared vocab_size "
            f"{req.vocab_size}"
        )
    if req.input_format == "tokens":
        sequences = read_token_sequences(req.input_path)
    else:
        if tokenizer is None:
            from transformers import AutoTokenizer

            tokenizer = AutoTokenizer.from_pretrained(req.model_id)
        sequences = read_text_sequences(req.input_path, tokenizer)

    nlls = score_token_sequences(
        model, sequences, batch_size=req.batch_size, device=req.device
    )
    lines = (
        json.dumps(
            {
                "method": req.method_id,
                "temperature": req.temperature,
                "nfe": req.nfe,
                "seed": req.seed,
                "tokens": seq,
                "ref_nll": nll,
            }
        )
        for seq, nll in zip(sequences, nlls)
    )
    _atomic_write_lines(req.output_path, lines)
    return len(sequences)
