"""Shared fixtures and the acceptance-suite summary hook.

Every test in test_acceptance.py corresponds to one acceptance criterion;
after the run a PASS/FAIL line is printed per criterion.
"""

import numpy as np
import pytest

from genfrontier.metrics import ScoredSample

_acceptance_results: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call":
        _acceptance_results[report.nodeid] = report.outcome
    elif report.when == "setup" and report.outcome in ("skipped", "failed"):
        _acceptance_results[report.nodeid] = report.outcome


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _acceptance_results:
        return
    tw = terminalreporter
    tw.section("acceptance criteria")
    for nodeid, outcome in sorted(_acceptance_results.items()):
        label = nodeid.split("::")[-1]
        status = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}.get(
            outcome, outcome.upper()
        )
        tw.write_line(f"[{status}] {label}")


# --- fixtures shared between unit and acceptance tests ---------------------

# Token count profile whose unigram entropy is 5.49 within 1e-6:
# 482 tokens = 27 ids x3 + 175 ids x2 + 51 ids x1 (253 distinct ids).
PINNED_CELL_TRIPLES = 27
PINNED_CELL_DOUBLES = 175
PINNED_CELL_SINGLES = 51
PINNED_CELL_ENTROPY = 5.49


def pinned_cell_tokens(id_offset: int = 0) -> list[int]:
    """A token sequence with unigram entropy 5.49 +/- 1e-6 (by count profile)."""
    tokens: list[int] = []
    next_id = id_offset
    for count, n_ids in (
        (3, PINNED_CELL_TRIPLES),
        (2, PINNED_CELL_DOUBLES),
        (1, PINNED_CELL_SINGLES),
    ):
        for _ in range(n_ids):
            tokens.extend([next_id] * count)
            next_id += 1
    return tokens


def pinned_cell_samples() -> list[ScoredSample]:
    """Two samples with identical count profiles for one sweep cell
    (method mdlm, temperature 0.925, NFE 8)."""
    return [
        ScoredSample(
            method_id="mdlm",
            temperature=0.925,
            nfe=8,
            seed=seed,
            tokens=pinned_cell_tokens(id_offset=seed * 1000),
            ref_nll=[3.0] * len(pinned_cell_tokens()),
        )
        for seed in (0, 1)
    ]


# Product models over vocab 4 whose exact frontiers cross exactly once in the
# shared entropy range, with >= 0.02 nats of margin on both sides of the
# crossing (verified by dense enumeration when these were constructed).
CROSSING_REF_LOGITS = [0.05955537, 1.29167767, 2.40102837, 0.85196438]
CROSSING_A_LOGITS = [-0.22755886, 0.90236135, -0.87271979, -0.99100463]
CROSSING_B_LOGITS = [-1.04549352, 0.35083135, 1.48620694, 2.66896291]
CROSSING_TEMPERATURES = tuple(float(t) for t in np.geomspace(0.5, 3.0, 21))
