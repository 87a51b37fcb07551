"""Comparison report rendering."""

import pytest

from genfrontier.corpus import EntropyStats
from genfrontier.errors import DataError
from genfrontier.frontier import Frontier, FrontierPoint, SliceTarget
from genfrontier.report import default_targets, report_compare


def polyline(pairs, method="m", nfe=8):
    points = tuple(
        FrontierPoint(entropy=h, log_ppl=y, temperature=1.0, n_samples=16)
        for h, y in pairs
    )
    return Frontier(method_id=method, nfe=nfe, points=points)


def band_stats():
    return EntropyStats(
        n_windows=100,
        window_len=1024,
        mean=5.432,
        median=5.471,
        q1=5.37,
        q3=5.55,
        sigma=0.225,
        histogram=((5.0, 6.0, 100),),
    )


def two_frontiers():
    fa = polyline([(5.2, 2.6), (5.471, 2.75), (5.8, 3.0)], method="duo")
    fb = polyline([(5.25, 2.7), (5.5, 2.9), (5.75, 3.2)], method="mdlm")
    return [fa, fb]


class TestReportCompare:
    def test_deterministic_output(self):
        stats = band_stats()
        first = report_compare(two_frontiers(), stats)
        second = report_compare(two_frontiers(), stats)
        assert first == second

    def test_dominance_section(self):
        text = report_compare(two_frontiers(), band_stats())
        assert "duo dominates" in text
        assert "min |delta lnPPL|" in text

    def test_target_sections_labeled(self):
        text = report_compare(two_frontiers(), band_stats())
        assert "matched entropy @ 5.471 nats (median entropy)" in text
        assert "matched perplexity @ 17 (AR eval ppl)" in text

    def test_out_of_range_cells_marked(self):
        # ppl 17 -> ln 17 = 2.833; mdlm spans [2.7, 3.2] so it crosses, but a
        # low frontier never reaches it
        low = polyline([(5.0, 1.0), (5.5, 1.2)], method="low")
        text = report_compare([low], band_stats())
        assert "[out_of_range]" in text

    def test_band_annotations_present(self):
        text = report_compare(two_frontiers(), band_stats())
        assert "band=in_iqr" in text
        assert "band=outside" in text

    def test_median_target_uses_stats_median(self):
        stats = band_stats()
        targets = default_targets(stats)
        assert targets[0].value == stats.median
        assert targets[0].label == "median entropy"
        assert targets[1].value == 17.0
        assert targets[1].label == "AR eval ppl"

    def test_duplicate_frontier_rejected(self):
        fa = polyline([(5.2, 2.6), (5.8, 3.0)], method="duo")
        with pytest.raises(DataError, match="duplicate"):
            report_compare([fa, fa], band_stats())

    def test_crossing_reported_with_location(self):
        fa = polyline([(5.3, 3.0), (5.6, 3.3)], method="a")
        fb = polyline([(5.3, 3.1), (5.6, 3.2)], method="b")
        text = report_compare([fa, fb], band_stats())
        assert "crossing" in text
        assert "crossings at 5.45" in text

    def test_negative_kl_flagged(self):
        f = polyline([(5.2, 2.6), (5.8, 3.0)], method="duo")  # lnPPL < H
        text = report_compare([f], band_stats())
        assert "kl_hat<0" in text
