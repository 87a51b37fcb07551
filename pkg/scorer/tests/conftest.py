"""Builds a tiny local reference model + byte-level tokenizer once per session.

Pretrained checkpoints are not downloadable here, so tests exercise the same
loading/scoring paths with a randomly initialized GPT-2-architecture model
and a byte-level tokenizer (token id == byte value, <|endoftext|> == 256)
saved to disk and loaded via the standard from_pretrained entry points.
"""

import os

os.environ.setdefault("HF_HUB_OFFLINE", "1")
os.environ.setdefault("TRANSFORMERS_OFFLINE", "1")
os.environ.setdefault("TRANSFORMERS_VERBOSITY", "error")
os.environ.setdefault("HF_HUB_DISABLE_PROGRESS_BARS", "1")

import pytest
import torch

VOCAB_SIZE = 257
CONTEXT = 64


def byte_unicode_map():
    """GPT-2's byte-to-printable-unicode table."""
    bs = (
        list(range(ord("!"), ord("~") + 1))
        + list(range(ord("\xa1"), ord("\xac") + 1))
        + list(range(ord("\xae"), ord("\xff") + 1))
    )
    cs = bs[:]
    n = 0
    for b in range(256):
        if b not in bs:
            bs.append(b)
            cs.append(256 + n)
            n += 1
    return dict(zip(bs, [chr(c) for c in cs]))


@pytest.fixture(scope="session")
def tiny_model_dir(tmp_path_factory):
    from transformers import GPT2Config, GPT2LMHeadModel
    from transformers.models.gpt2.tokenization_gpt2 import GPT2Tokenizer

    d = tmp_path_factory.mktemp("tiny-ref-model")
    vocab = {ch: b for b, ch in byte_unicode_map().items()}
    vocab["<|endoftext|>"] = 256
    GPT2Tokenizer(vocab=vocab, merges=[]).save_pretrained(d)

    torch.manual_seed(0)
    config = GPT2Config(
        vocab_size=VOCAB_SIZE,
        n_positions=CONTEXT,
        n_embd=32,
        n_layer=2,
        n_head=2,
        bos_token_id=256,
        eos_token_id=256,
    )
    GPT2LMHeadModel(config).save_pretrained(d)
    return str(d)


@pytest.fixture(scope="session")
def tiny_model(tiny_model_dir):
    from refscorer.scoring import load_reference

    return load_reference(tiny_model_dir)


@pytest.fixture(scope="session")
def tiny_tokenizer(tiny_model_dir):
    from transformers import AutoTokenizer

    return AutoTokenizer.from_pretrained(tiny_model_dir)
