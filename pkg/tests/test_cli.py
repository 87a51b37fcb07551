"""End-to-end CLI: subcommands, exit codes, config precedence."""

import json

import numpy as np
import pytest

from genfrontier.cli import EXIT_DATA, EXIT_OK, EXIT_RANGE, EXIT_USAGE, main
from genfrontier.formats import read_frontier, read_points, write_corpus, write_samples
from genfrontier.oracle import ExactModel, random_product, sample


@pytest.fixture
def workspace(tmp_path):
    """Samples for two methods at two temperatures, plus a small corpus."""
    rng = np.random.default_rng(42)
    base_a = random_product(rng, 6, 5)
    base_b = random_product(rng, 6, 5)
    ref = random_product(rng, 6, 5)
    samples = []
    for method, base in (("a", base_a), ("b", base_b)):
        for temp in (0.7, 1.0, 1.4):
            samples.extend(
                sample(base.with_temperature(temp), ref, n=40, seed=7, method_id=method)
            )
    samples_path = tmp_path / "samples.jsonl"
    write_samples(samples, samples_path)

    corpus_path = tmp_path / "corpus.jsonl"
    docs = [(f"d{i}", rng.integers(0, 40, size=64).tolist()) for i in range(12)]
    write_corpus(docs, corpus_path)
    return tmp_path, samples_path, corpus_path


def run_pipeline(tmp_path, samples_path):
    points_path = tmp_path / "points.csv"
    assert main(["metrics", "--samples", str(samples_path), "--out", str(points_path)]) == EXIT_OK
    fa_path = tmp_path / "fa.json"
    fb_path = tmp_path / "fb.json"
    assert main([
        "frontier", "--points", str(points_path), "--method", "a", "--out", str(fa_path),
    ]) == EXIT_OK
    assert main([
        "frontier", "--points", str(points_path), "--method", "b", "--out", str(fb_path),
    ]) == EXIT_OK
    return points_path, fa_path, fb_path


class TestPipeline:
    def test_metrics_to_report(self, workspace, capsys):
        tmp_path, samples_path, corpus_path = workspace
        points_path, fa_path, fb_path = run_pipeline(tmp_path, samples_path)

        points = read_points(points_path)
        assert len(points) == 6  # 2 methods x 3 temperatures

        fa = read_frontier(fa_path)
        assert fa.method_id == "a"
        assert len(fa.points) == 3

        h_mid = sum(fa.entropy_range) / 2
        assert main(["query", "--frontier", str(fa_path), "--at-entropy", str(h_mid)]) == EXIT_OK
        out = capsys.readouterr().out
        assert "ppl@H=" in out

        assert main([
            "compare", "--frontier-a", str(fa_path), "--frontier-b", str(fb_path),
        ]) == EXIT_OK
        out = capsys.readouterr().out
        assert "verdict:" in out

        stats_path = tmp_path / "stats.json"
        assert main([
            "corpus-entropy", "--corpus", str(corpus_path), "--out", str(stats_path),
            "--window-len", "32",
        ]) == EXIT_OK

        report_path = tmp_path / "report.txt"
        assert main([
            "report", "--frontier", str(fa_path), str(fb_path),
            "--stats", str(stats_path), "--out", str(report_path),
        ]) == EXIT_OK
        text = report_path.read_text()
        assert "dominance" in text
        assert "matched perplexity @ 17" in text

    def test_report_deterministic_on_disk(self, workspace):
        tmp_path, samples_path, corpus_path = workspace
        _, fa_path, fb_path = run_pipeline(tmp_path, samples_path)
        stats_path = tmp_path / "stats.json"
        main(["corpus-entropy", "--corpus", str(corpus_path), "--out", str(stats_path),
              "--window-len", "32"])
        r1, r2 = tmp_path / "r1.txt", tmp_path / "r2.txt"
        main(["report", "--frontier", str(fa_path), str(fb_path), "--stats", str(stats_path),
              "--out", str(r1)])
        main(["report", "--frontier", str(fa_path), str(fb_path), "--stats", str(stats_path),
              "--out", str(r2)])
        assert r1.read_bytes() == r2.read_bytes()


class TestExitCodes:
    def test_usage_error_is_one(self):
        with pytest.raises(SystemExit) as exc_info:
            main(["metrics", "--out", "x.csv"])  # missing --samples
        assert exc_info.value.code == EXIT_USAGE

    def test_data_error_is_two(self, tmp_path):
        missing = tmp_path / "missing.jsonl"
        assert main(["metrics", "--samples", str(missing), "--out", str(tmp_path / "o.csv")]) == EXIT_DATA

    def test_malformed_line_is_two(self, tmp_path):
        bad = tmp_path / "bad.jsonl"
        bad.write_text("not json\n")
        assert main(["metrics", "--samples", str(bad), "--out", str(tmp_path / "o.csv")]) == EXIT_DATA

    def test_out_of_range_query_is_three(self, workspace):
        tmp_path, samples_path, _ = workspace
        _, fa_path, _ = run_pipeline(tmp_path, samples_path)
        assert main(["query", "--frontier", str(fa_path), "--at-entropy", "99.0"]) == EXIT_RANGE

    def test_lenient_query_out_of_range_is_zero(self, workspace, capsys):
        tmp_path, samples_path, _ = workspace
        _, fa_path, _ = run_pipeline(tmp_path, samples_path)
        code = main(["query", "--frontier", str(fa_path), "--at-entropy", "99.0", "--lenient"])
        assert code == EXIT_OK
        assert "out of range" in capsys.readouterr().out

    def test_no_crossing_strict_is_three(self, workspace):
        tmp_path, samples_path, _ = workspace
        _, fa_path, _ = run_pipeline(tmp_path, samples_path)
        assert main(["query", "--frontier", str(fa_path), "--at-ppl", "1.0000001"]) == EXIT_RANGE

    def test_oracle_selfcheck_ok(self, capsys):
        assert main(["oracle", "selfcheck", "--models", "25", "--seed", "3"]) == EXIT_OK
        out = capsys.readouterr().out
        assert out.count("[PASS]") >= 6


class TestLenientMetrics:
    def test_skips_bad_lines_and_reports(self, workspace, capsys, tmp_path):
        _, samples_path, _ = workspace
        mixed = tmp_path / "mixed.jsonl"
        good_lines = samples_path.read_text().splitlines()[:5]
        mixed.write_text("\n".join(good_lines[:3]) + "\nnot json\n" + "\n".join(good_lines[3:]) + "\n")
        out_path = tmp_path / "points.csv"
        assert main(["metrics", "--samples", str(mixed), "--out", str(out_path), "--lenient"]) == EXIT_OK
        captured = capsys.readouterr()
        assert "skipped 1 malformed line(s)" in captured.err


class TestConfigFile:
    def test_config_supplies_default_flag_wins(self, workspace, tmp_path, capsys):
        _, _, corpus_path = workspace
        config = tmp_path / "genfrontier.conf"
        config.write_text("# config\nwindow_len = 16\n")
        stats_path = tmp_path / "stats.json"

        # config value used when the flag is absent
        assert main(["--config", str(config), "corpus-entropy", "--corpus", str(corpus_path),
                     "--out", str(stats_path)]) == EXIT_OK
        stats = json.loads(stats_path.read_text())
        assert stats["window_len"] == 16

        # explicit flag beats the config
        assert main(["--config", str(config), "corpus-entropy", "--corpus", str(corpus_path),
                     "--out", str(stats_path), "--window-len", "32"]) == EXIT_OK
        stats = json.loads(stats_path.read_text())
        assert stats["window_len"] == 32

    def test_malformed_config_is_data_error(self, workspace, tmp_path):
        _, _, corpus_path = workspace
        config = tmp_path / "bad.conf"
        config.write_text("window_len 16\n")
        assert main(["--config", str(config), "corpus-entropy", "--corpus", str(corpus_path),
                     "--out", str(tmp_path / "s.json")]) == EXIT_DATA


class TestFrontierCommand:
    def test_multiple_groups_require_filter(self, workspace, tmp_path):
        _, samples_path, _ = workspace
        points_path = tmp_path / "points.csv"
        main(["metrics", "--samples", str(samples_path), "--out", str(points_path)])
        assert main(["frontier", "--points", str(points_path), "--out", str(tmp_path / "f.json")]) == EXIT_DATA

    def test_pareto_mode(self, workspace, tmp_path):
        _, samples_path, _ = workspace
        points_path = tmp_path / "points.csv"
        main(["metrics", "--samples", str(samples_path), "--out", str(points_path)])
        out = tmp_path / "fp.json"
        assert main(["frontier", "--points", str(points_path), "--method", "a",
                     "--mode", "pareto", "--out", str(out)]) == EXIT_OK
        assert read_frontier(out).mode == "pareto"
