"""refscore CLI end to end against the tiny local model."""

import json

import pytest

from refscorer.cli import EXIT_DATA, EXIT_OK, EXIT_USAGE, main


def write_token_input(tmp_path, sequences):
    inp = tmp_path / "in.jsonl"
    inp.write_text("".join(json.dumps({"tokens": s}) + "\n" for s in sequences))
    return inp


class TestScoreCommand:
    def test_score_to_parse_to_aggregate(self, tiny_model_dir, tmp_path):
        from genfrontier.formats import read_samples
        from genfrontier.metrics import aggregate_cell

        inp = write_token_input(tmp_path, [[1, 2, 3], [4, 5], [6]])
        out = tmp_path / "samples.jsonl"
        code = main([
            "score", "--input", str(inp), "--out", str(out),
            "--model", tiny_model_dir, "--method", "mdlm",
            "--temperature", "0.9", "--nfe", "8", "--seed", "1",
            "--batch-size", "2",
        ])
        assert code == EXIT_OK
        samples = list(read_samples(out, strict=True))
        assert len(samples) == 3
        point = aggregate_cell(samples)
        assert point.gen_ppl > 0

    def test_usage_error_exit_one(self):
        with pytest.raises(SystemExit) as exc_info:
            main(["score", "--input", "x"])  # missing required flags
        assert exc_info.value.code == EXIT_USAGE

    def test_missing_input_exit_two(self, tiny_model_dir, tmp_path):
        code = main([
            "score", "--input", str(tmp_path / "missing.jsonl"),
            "--out", str(tmp_path / "o.jsonl"), "--model", tiny_model_dir,
            "--method", "m", "--temperature", "1.0", "--nfe", "8", "--seed", "0",
        ])
        assert code == EXIT_DATA

    def test_context_overflow_exit_two(self, tiny_model_dir, tmp_path):
        inp = write_token_input(tmp_path, [[1] * 64])
        code = main([
            "score", "--input", str(inp), "--out", str(tmp_path / "o.jsonl"),
            "--model", tiny_model_dir, "--method", "m",
            "--temperature", "1.0", "--nfe", "8", "--seed", "0",
        ])
        assert code == EXIT_DATA


class TestTokenizeCommand:
    def test_tokenize_end_to_end(self, tiny_model_dir, tmp_path, capsys):
        from genfrontier.formats import read_corpus

        inp = tmp_path / "docs.txt"
        inp.write_text("a short document\nanother one\n")
        out = tmp_path / "corpus.jsonl"
        code = main(["tokenize", "--input", str(inp), "--tokenizer", tiny_model_dir,
                     "--out", str(out)])
        assert code == EXIT_OK
        assert "tokenized 2 document(s)" in capsys.readouterr().out
        assert len(list(read_corpus(out, strict=True))) == 2
