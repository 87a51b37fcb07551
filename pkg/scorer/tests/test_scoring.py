"""Scoring correctness: dual-path NLL agreement, conventions, batching."""

import json
import math

import pytest
import torch

from refscorer.scoring import (
    ScoreError,
    ScoreRequest,
    read_token_sequences,
    score_samples,
    score_token_sequences,
)

from conftest import CONTEXT, VOCAB_SIZE


def fixture_sequences(n=10, max_len=24, seed=7):
    torch.manual_seed(seed)
    out = []
    for _ in range(n):
        length = int(torch.randint(1, max_len, (1,)))
        out.append(torch.randint(0, 256, (length,)).tolist())
    return out


def labeled_loss(model, tokens):
    """Independent path: the model's own labeled-loss output."""
    ids = torch.tensor([[256] + tokens])
    labels = ids.clone()
    labels[0, 0] = -100
    with torch.no_grad():
        return float(model(input_ids=ids, labels=labels).loss)


class TestDualPathAgreement:
    def test_ten_sequence_fixture_within_1e4(self, tiny_model):
        sequences = fixture_sequences(10)
        nlls = score_token_sequences(tiny_model, sequences, batch_size=4)
        for seq, nll in zip(sequences, nlls):
            assert len(nll) == len(seq)
            own = math.exp(sum(nll) / len(nll))
            independent = math.exp(labeled_loss(tiny_model, seq))
            assert own == pytest.approx(independent, rel=1e-4)


class TestConventions:
    def test_single_token_conditioned_on_bos_only(self, tiny_model):
        token = 42
        nll = score_token_sequences(tiny_model, [[token]])[0]
        assert len(nll) == 1
        with torch.no_grad():
            logits = tiny_model(input_ids=torch.tensor([[256]])).logits
            expected = -float(torch.log_softmax(logits.float(), dim=-1)[0, 0, token])
        assert nll[0] == pytest.approx(expected, abs=1e-7)

    def test_identical_inputs_identical_records(self, tiny_model):
        seq = [10, 20, 30]
        nlls = score_token_sequences(tiny_model, [seq, seq], batch_size=2)
        assert nlls[0] == nlls[1]

    def test_order_matches_input_order(self, tiny_model):
        sequences = fixture_sequences(6)
        nlls = score_token_sequences(tiny_model, sequences, batch_size=4)
        for seq, nll in zip(sequences, nlls):
            assert len(nll) == len(seq)
        # re-scoring one sequence alone reproduces its batched row
        solo = score_token_sequences(tiny_model, [sequences[3]])[0]
        assert solo == pytest.approx(nlls[3], abs=1e-5)

    def test_batch_size_does_not_change_scores(self, tiny_model):
        sequences = fixture_sequences(9)
        one = score_token_sequences(tiny_model, sequences, batch_size=1)
        four = score_token_sequences(tiny_model, sequences, batch_size=4)
        for a, b in zip(one, four):
            assert a == pytest.approx(b, abs=1e-5)

    def test_all_nlls_nonnegative_finite(self, tiny_model):
        for nll in score_token_sequences(tiny_model, fixture_sequences(5)):
            assert all(v >= 0 and math.isfinite(v) for v in nll)


class TestErrors:
    def test_context_overflow_refused(self, tiny_model):
        too_long = [1] * CONTEXT  # + BOS exceeds the context
        with pytest.raises(ScoreError, match="refusing to truncate"):
            score_token_sequences(tiny_model, [too_long])

    def test_token_beyond_model_vocab(self, tiny_model):
        with pytest.raises(ScoreError, match="vocab"):
            score_token_sequences(tiny_model, [[VOCAB_SIZE + 5]])

    def test_declared_vocab_mismatch(self, tiny_model_dir, tiny_model, tmp_path):
        inp = tmp_path / "in.jsonl"
        inp.write_text(json.dumps({"tokens": [1, 2]}) + "\n")
        req = ScoreRequest(
            input_path=str(inp),
            output_path=str(tmp_path / "out.jsonl"),
            method_id="m",
            temperature=1.0,
            nfe=8,
            seed=0,
            model_id=tiny_model_dir,
            vocab_size=50257,
        )
        with pytest.raises(ScoreError, match="vocab"):
            score_samples(req, model=tiny_model)

    def test_incomplete_metadata_rejected(self, tmp_path):
        with pytest.raises(ScoreError, match="method_id"):
            ScoreRequest(
                input_path="x",
                output_path="y",
                method_id="",
                temperature=1.0,
                nfe=8,
                seed=0,
            )

    def test_empty_input_rejected(self, tmp_path):
        empty = tmp_path / "empty.jsonl"
        empty.write_text("")
        with pytest.raises(ScoreError, match="no sequences"):
            read_token_sequences(empty)


class TestScoreSamplesFile:
    def test_emitted_file_passes_strict_parsing(self, tiny_model_dir, tiny_model, tmp_path):
        from genfrontier.formats import read_samples
        from genfrontier.metrics import aggregate_cell

        sequences = fixture_sequences(10)
        inp = tmp_path / "in.jsonl"
        inp.write_text(
            "".join(json.dumps({"tokens": seq}) + "\n" for seq in sequences)
        )
        out = tmp_path / "samples.jsonl"
        req = ScoreRequest(
            input_path=str(inp),
            output_path=str(out),
            method_id="mdlm",
            temperature=0.9,
            nfe=8,
            seed=3,
            model_id=tiny_model_dir,
            batch_size=4,
        )
        n = score_samples(req, model=tiny_model)
        assert n == 10

        parsed = list(read_samples(out, strict=True))
        assert len(parsed) == 10
        assert [list(s.tokens) for s in parsed] == sequences
        assert all(s.cell_key == ("mdlm", 0.9, 8) for s in parsed)
        point = aggregate_cell(parsed, vocab_size=VOCAB_SIZE)
        assert point.n_samples == 10

    def test_text_input_mode(self, tiny_model_dir, tiny_model, tiny_tokenizer, tmp_path):
        from genfrontier.formats import read_samples

        inp = tmp_path / "docs.txt"
        inp.write_text("hello world\n\nsecond doc\n")
        out = tmp_path / "samples.jsonl"
        req = ScoreRequest(
            input_path=str(inp),
            output_path=str(out),
            method_id="human",
            temperature=1.0,
            nfe=1,
            seed=0,
            model_id=tiny_model_dir,
            input_format="text",
        )
        n = score_samples(req, model=tiny_model, tokenizer=tiny_tokenizer)
        assert n == 2  # blank line skipped
        parsed = list(read_samples(out, strict=True))
        assert parsed[0].tokens == tuple(
            tiny_tokenizer.encode("hello world", add_special_tokens=False)
        )
