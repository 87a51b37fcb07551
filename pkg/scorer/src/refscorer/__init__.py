"""Reference-model scoring adapter.

Tokenizes text and runs a pretrained autoregressive reference model to
produce the per-token NLL sample files and tokenized corpus files the
genfrontier toolkit consumes.
"""

from .scoring import ScoreRequest, score_samples, score_token_sequences
from .corpus import tokenize_corpus

__version__ = "0.1.0"

__all__ = [
    "ScoreRequest",
    "score_samples",
    "score_token_sequences",
    "tokenize_corpus",
]
