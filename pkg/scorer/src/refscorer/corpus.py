"""Corpus tokenization: raw text to the {doc_id, tokens} JSONL format."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .scoring import ScoreError, _atomic_write_lines


@dataclass(frozen=True)
class TokenizeResult:
    n_documents: int
    n_skipped_empty: int
    errors: tuple[str, ...]  # per-document failures, reported not fatal


def tokenize_corpus(
    text_path: str | Path,
    tokenizer_id_or_tokenizer,
    output_path: str | Path,
) -> TokenizeResult:
    """Tokenize one document per line into a corpus JSONL file.

    Empty or whitespace-only lines are skipped and counted; a document whose
    encoding fails is reported in the result and skipped.  Token ids are
    emitted without special tokens, so they stay within the tokenizer vocab.
    """
    if isinstance(tokenizer_id_or_tokenizer, (str, Path)):
        from transformers import AutoTokenizer

        tokenizer = AutoTokenizer.from_pretrained(str(tokenizer_id_or_tokenizer))
    else:
        tokenizer = tokenizer_id_or_tokenizer

    lines_out: list[str] = []
    skipped = 0
    errors: list[str] = []
    for line_no, line in enumerate(
        Path(text_path).read_text(encoding="utf-8").splitlines(), start=1
    ):
        if not line.strip():
            skipped += 1
            continue
        try:
            ids = tokenizer.encode(line, add_special_tokens=False)
        except Exception as e:  # tokenizer backends raise various types
            errors.append(f"line {line_no}: {e}")
            continue
        if not ids:
            skipped += 1
            continue
        lines_out.append(
            json.dumps({"doc_id": f"doc{line_no:06d}", "tokens": [int(t) for t in ids]})
        )
    if not lines_out:
        raise ScoreError(
            f"no tokenizable documents in {text_path} "
            f"({skipped} empty, {len(errors)} failed)"
        )
    _atomic_write_lines(output_path, lines_out)
    return TokenizeResult(
        n_documents=len(lines_out), n_skipped_empty=skipped, errors=tuple(errors)
    )
