"""File formats: scored-sample and corpus JSONL, operating-point CSV/JSON,
frontier and corpus-stats JSON, and the run manifest.

One record per line for streaming inputs.  Units are encoded in column names
(everything entropy-like is nats).  All writes go through a temp file and an
atomic rename.  Strict-mode readers abort on the first malformed line with
its line number; lenient readers skip and count.
"""

from __future__ import annotations

import csv
import json
import os
import tempfile
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from .corpus import EntropyStats
from .errors import DataError
from .frontier import Frontier, FrontierPoint
from .metrics import OperatingPoint, ScoredSample

POINTS_CSV_HEADER = (
    "method,temperature,nfe,n_samples,entropy_nats,cross_entropy_nats,gen_ppl,kl_hat_nats"
)
_SAMPLE_FIELDS = ("method", "temperature", "nfe", "seed", "tokens", "ref_nll")
# consistency of derived columns vs exp/subtraction of the stored ones; wide
# enough for the CSV's 9-significant-digit quantization of cross entropy
_CONSISTENCY_TOL = 2e-8


def atomic_write_text(path: str | Path, text: str) -> None:
    """Write text to path via temp-file-then-rename so readers never see a
    partial file."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _parse_sample(obj: dict, line_no: int) -> ScoredSample:
    missing = [k for k in _SAMPLE_FIELDS if k not in obj]
    if missing:
        raise DataError(f"line {line_no}: missing field(s) {', '.join(missing)}")
    try:
        return ScoredSample(
            method_id=str(obj["method"]),
            temperature=float(obj["temperature"]),
            nfe=int(obj["nfe"]),
            seed=int(obj["seed"]),
            tokens=tuple(obj["tokens"]),
            ref_nll=tuple(obj["ref_nll"]),
        )
    except (DataError, TypeError, ValueError) as e:
        raise DataError(f"line {line_no}: {e}") from e


def read_samples(
    path: str | Path,
    *,
    strict: bool = True,
    error_sink: list[str] | None = None,
) -> Iterator[ScoredSample]:
    """Stream scored samples from a JSONL file.

    strict=True raises DataError naming the first bad line; strict=False skips
    bad lines, appending their messages to error_sink when given.
    """
    count = 0
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                if not isinstance(obj, dict):
                    raise DataError(f"line {line_no}: record is not an object")
                sample = _parse_sample(obj, line_no)
            except (json.JSONDecodeError, DataError) as e:
                msg = str(e) if isinstance(e, DataError) else f"line {line_no}: invalid JSON: {e}"
                if strict:
                    raise DataError(msg) from e
                if error_sink is not None:
                    error_sink.append(msg)
                continue
            count += 1
            yield sample
    if count == 0:
        raise DataError(f"no samples in {path}")


def write_samples(samples: Iterable[ScoredSample], path: str | Path) -> None:
    lines = []
    for s in samples:
        lines.append(
            json.dumps(
                {
                    "method": s.method_id,
                    "temperature": s.temperature,
                    "nfe": s.nfe,
                    "seed": s.seed,
                    "tokens": list(s.tokens),
                    "ref_nll": list(s.ref_nll),
                }
            )
        )
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_corpus(
    path: str | Path,
    *,
    strict: bool = True,
    error_sink: list[str] | None = None,
) -> Iterator[tuple[str, list[int]]]:
    """Stream (doc_id, tokens) records from a corpus JSONL file."""
    count = 0
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                if not isinstance(obj, dict) or "doc_id" not in obj or "tokens" not in obj:
                    raise DataError(f"line {line_no}: corpus record needs doc_id and tokens")
                tokens = [int(t) for t in obj["tokens"]]
                if any(t < 0 for t in tokens):
                    raise DataError(f"line {line_no}: negative token id")
            except (json.JSONDecodeError, DataError, TypeError, ValueError) as e:
                msg = str(e) if isinstance(e, DataError) else f"line {line_no}: {e}"
                if strict:
                    raise DataError(msg) from e
                if error_sink is not None:
                    error_sink.append(msg)
                continue
            count += 1
            yield str(obj["doc_id"]), tokens
    if count == 0:
        raise DataError(f"no documents in {path}")


def write_corpus(docs: Iterable[tuple[str, Sequence[int]]], path: str | Path) -> None:
    lines = [
        json.dumps({"doc_id": doc_id, "tokens": list(tokens)}) for doc_id, tokens in docs
    ]
    atomic_write_text(path, "\n".join(lines) + "\n")


def _sorted_points(points: Iterable[OperatingPoint]) -> list[OperatingPoint]:
    return sorted(points, key=lambda p: (p.method_id, p.nfe, p.temperature))


def _point_record(p: OperatingPoint) -> dict:
    return {
        "method": p.method_id,
        "temperature": p.temperature,
        "nfe": p.nfe,
        "n_samples": p.n_samples,
        "entropy_nats": p.unigram_entropy,
        "cross_entropy_nats": p.cross_entropy,
        "gen_ppl": p.gen_ppl,
        "kl_hat_nats": p.kl_hat,
    }


def emit_points(
    points: Iterable[OperatingPoint], path: str | Path, format: str = "csv"
) -> None:
    """Write operating points sorted by (method, nfe, temperature).

    CSV uses the fixed header and 9-significant-digit floats; JSON keeps full
    double precision.
    """
    ordered = _sorted_points(points)
    if format == "csv":
        rows = [POINTS_CSV_HEADER]
        for p in ordered:
            rows.append(
                ",".join(
                    [
                        p.method_id,
                        format_float(p.temperature),
                        str(p.nfe),
                        str(p.n_samples),
                        format_float(p.unigram_entropy),
                        format_float(p.cross_entropy),
                        format_float(p.gen_ppl),
                        format_float(p.kl_hat),
                    ]
                )
            )
        atomic_write_text(path, "\n".join(rows) + "\n")
    elif format == "json":
        payload = {"points": [_point_record(p) for p in ordered]}
        atomic_write_text(path, json.dumps(payload, indent=2) + "\n")
    else:
        raise DataError(f"unknown points format {format!r} (expected csv or json)")


def format_float(v: float) -> str:
    """9 significant digits, no exponent surprises for typical magnitudes."""
    return f"{v:.9g}"


def _point_from_fields(
    method: str,
    temperature: float,
    nfe: int,
    n_samples: int,
    entropy: float,
    cross_entropy: float,
    gen_ppl: float,
    kl_hat: float,
    where: str,
    strict: bool,
) -> OperatingPoint:
    point = OperatingPoint(
        method_id=method,
        temperature=temperature,
        nfe=nfe,
        n_samples=n_samples,
        unigram_entropy=entropy,
        cross_entropy=cross_entropy,
    )
    if strict:
        if abs(point.gen_ppl - gen_ppl) > _CONSISTENCY_TOL * max(1.0, abs(gen_ppl)):
            raise DataError(
                f"{where}: gen_ppl {gen_ppl} inconsistent with exp(cross_entropy) "
                f"{point.gen_ppl}"
            )
        if abs(point.kl_hat - kl_hat) > _CONSISTENCY_TOL * max(1.0, abs(kl_hat)):
            raise DataError(
                f"{where}: kl_hat {kl_hat} inconsistent with cross_entropy - entropy "
                f"{point.kl_hat}"
            )
    return point


def read_points(
    path: str | Path, format: str | None = None, *, strict: bool = True
) -> list[OperatingPoint]:
    """Read operating points from an emitted CSV or JSON file.

    gen_ppl and kl_hat are recomputed from the stored entropy and cross
    entropy; in strict mode the stored values must agree within 1e-9.
    """
    path = Path(path)
    if format is None:
        format = "json" if path.suffix.lower() == ".json" else "csv"
    points: list[OperatingPoint] = []
    if format == "json":
        payload = json.loads(path.read_text(encoding="utf-8"))
        records = payload.get("points") if isinstance(payload, dict) else None
        if records is None:
            raise DataError(f"{path}: expected an object with a 'points' list")
        for i, obj in enumerate(records, start=1):
            try:
                points.append(
                    _point_from_fields(
                        str(obj["method"]),
                        float(obj["temperature"]),
                        int(obj["nfe"]),
                        int(obj["n_samples"]),
                        float(obj["entropy_nats"]),
                        float(obj["cross_entropy_nats"]),
                        float(obj["gen_ppl"]),
                        float(obj["kl_hat_nats"]),
                        where=f"{path} point {i}",
                        strict=strict,
                    )
                )
            except (KeyError, TypeError, ValueError) as e:
                raise DataError(f"{path} point {i}: {e}") from e
    elif format == "csv":
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise DataError(f"{path}: empty points file") from None
            if ",".join(header) != POINTS_CSV_HEADER:
                raise DataError(
                    f"{path}: unexpected CSV header {','.join(header)!r}"
                )
            for line_no, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != 8:
                    raise DataError(f"{path} line {line_no}: expected 8 columns, got {len(row)}")
                try:
                    points.append(
                        _point_from_fields(
                            row[0],
                            float(row[1]),
                            int(row[2]),
                            int(row[3]),
                            float(row[4]),
                            float(row[5]),
                            float(row[6]),
                            float(row[7]),
                            where=f"{path} line {line_no}",
                            strict=strict,
                        )
                    )
                except (TypeError, ValueError) as e:
                    raise DataError(f"{path} line {line_no}: {e}") from e
    else:
        raise DataError(f"unknown points format {format!r} (expected csv or json)")
    if not points:
        raise DataError(f"no points in {path}")
    return points


def write_frontier(frontier: Frontier, path: str | Path) -> None:
    payload = {
        "method": frontier.method_id,
        "nfe": frontier.nfe,
        "mode": frontier.mode,
        "points": [
            {
                "entropy_nats": p.entropy,
                "log_ppl_nats": p.log_ppl,
                "temperature": p.temperature,
                "n_samples": p.n_samples,
            }
            for p in frontier.points
        ],
    }
    atomic_write_text(path, json.dumps(payload, indent=2) + "\n")


def read_frontier(path: str | Path) -> Frontier:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    try:
        points = tuple(
            FrontierPoint(
                entropy=float(p["entropy_nats"]),
                log_ppl=float(p["log_ppl_nats"]),
                temperature=float(p["temperature"]),
                n_samples=int(p["n_samples"]),
            )
            for p in obj["points"]
        )
        return Frontier(
            method_id=str(obj["method"]),
            nfe=int(obj["nfe"]),
            points=points,
            mode=str(obj.get("mode", "raw")),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise DataError(f"{path}: malformed frontier file: {e}") from e


def write_entropy_stats(stats: EntropyStats, path: str | Path) -> None:
    payload = {
        "n_windows": stats.n_windows,
        "window_len": stats.window_len,
        "mean_nats": stats.mean,
        "median_nats": stats.median,
        "q1_nats": stats.q1,
        "q3_nats": stats.q3,
        "sigma_nats": stats.sigma,
        "n_skipped_docs": stats.n_skipped_docs,
        "histogram": [
            {"lo_nats": lo, "hi_nats": hi, "count": count}
            for lo, hi, count in stats.histogram
        ],
    }
    atomic_write_text(path, json.dumps(payload, indent=2) + "\n")


def read_entropy_stats(path: str | Path) -> EntropyStats:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    try:
        return EntropyStats(
            n_windows=int(obj["n_windows"]),
            window_len=int(obj["window_len"]),
            mean=float(obj["mean_nats"]),
            median=float(obj["median_nats"]),
            q1=float(obj["q1_nats"]),
            q3=float(obj["q3_nats"]),
            sigma=float(obj["sigma_nats"]),
            histogram=tuple(
                (float(b["lo_nats"]), float(b["hi_nats"]), int(b["count"]))
                for b in obj["histogram"]
            ),
            n_skipped_docs=int(obj.get("n_skipped_docs", 0)),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise DataError(f"{path}: malformed stats file: {e}") from e


@dataclass(frozen=True)
class RunManifest:
    """Declares what a sweep was supposed to produce, for validation."""

    methods: tuple[str, ...]
    sweep: tuple[tuple[float, int], ...]  # (temperature, nfe) cells
    vocab_size: int
    sample_files: tuple[str, ...]
    reference_model: str
    created_at: str

    @classmethod
    def create(
        cls,
        methods: Sequence[str],
        sweep: Sequence[tuple[float, int]],
        vocab_size: int,
        sample_files: Sequence[str],
        reference_model: str,
    ) -> "RunManifest":
        return cls(
            methods=tuple(methods),
            sweep=tuple((float(t), int(n)) for t, n in sweep),
            vocab_size=int(vocab_size),
            sample_files=tuple(sample_files),
            reference_model=reference_model,
            created_at=datetime.now(timezone.utc).isoformat(),
        )


def write_manifest(manifest: RunManifest, path: str | Path) -> None:
    payload = {
        "methods": list(manifest.methods),
        "sweep": [{"temperature": t, "nfe": n} for t, n in manifest.sweep],
        "vocab_size": manifest.vocab_size,
        "sample_files": list(manifest.sample_files),
        "reference_model": manifest.reference_model,
        "created_at": manifest.created_at,
    }
    atomic_write_text(path, json.dumps(payload, indent=2) + "\n")


def read_manifest(path: str | Path) -> RunManifest:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    try:
        return RunManifest(
            methods=tuple(str(m) for m in obj["methods"]),
            sweep=tuple((float(c["temperature"]), int(c["nfe"])) for c in obj["sweep"]),
            vocab_size=int(obj["vocab_size"]),
            sample_files=tuple(str(p) for p in obj["sample_files"]),
            reference_model=str(obj["reference_model"]),
            created_at=str(obj["created_at"]),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise DataError(f"{path}: malformed manifest: {e}") from e


def validate_against_manifest(
    samples: Iterable[ScoredSample], manifest: RunManifest
) -> None:
    """Check every sample's cell key and token ids against the manifest."""
    declared = {(t, n) for t, n in manifest.sweep}
    methods = set(manifest.methods)
    for i, s in enumerate(samples, start=1):
        if s.method_id not in methods:
            raise DataError(f"sample {i}: method {s.method_id!r} not in manifest")
        if (s.temperature, s.nfe) not in declared:
            raise DataError(
                f"sample {i}: cell (temperature={s.temperature}, nfe={s.nfe}) "
                "not declared in manifest sweep"
            )
        worst = max(s.tokens)
        if worst >= manifest.vocab_size:
            raise DataError(
                f"sample {i}: token id {worst} out of vocab bounds "
                f"(vocab_size={manifest.vocab_size})"
            )
