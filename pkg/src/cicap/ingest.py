"""Loading and conditioning of empirical car-following records.

A record file is a CSV with header

    case_id,t,gap,v_lead,v_follow,a_follow

holding one sample per row, grouped into cases (one case = one continuous
following episode). The pipeline is: load -> filter to near-constant-speed
leader episodes -> per-case gap standardization, after which the pooled
samples are comparable to simulated gap distributions.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "CarFollowRecord",
    "FilterSpec",
    "IngestError",
    "SchemaError",
    "RECORD_HEADER",
    "load_records",
    "write_records_csv",
    "filter_stable",
    "filter_report",
    "normalize_gaps",
]

log = logging.getLogger(__name__)

RECORD_HEADER = ["case_id", "t", "gap", "v_lead", "v_follow", "a_follow"]

# a case needs this many samples to contribute standardized gaps
MIN_CASE_SAMPLES = 10


class IngestError(ValueError):
    """A record file violates the schema or a row-level invariant."""


class SchemaError(IngestError):
    """The file's header row does not match the record schema."""


@dataclass(frozen=True)
class CarFollowRecord:
    """One observed sample of a follower behind a leader."""

    case_id: str
    t: float
    gap: float
    v_lead: float
    v_follow: float
    a_follow: float


@dataclass(frozen=True)
class FilterSpec:
    """Stability filter: keep cases whose leader holds v_lead_target within
    v_lead_tol throughout, and drop samples (or cases, in strict mode) where
    |v_follow - v_lead| exceeds dv_max."""

    v_lead_target: float
    v_lead_tol: float = 0.2
    dv_max: float = 1.0

    def __post_init__(self):
        if self.v_lead_tol < 0 or self.dv_max < 0:
            raise ValueError("tolerances must be non-negative")


def _group_cases(records: Iterable[CarFollowRecord]) -> dict[str, list[CarFollowRecord]]:
    cases: dict[str, list[CarFollowRecord]] = {}
    for rec in records:
        cases.setdefault(rec.case_id, []).append(rec)
    return cases


def load_records(path, rejections: list[str] | None = None) -> list[CarFollowRecord]:
    """Load records from CSV.

    Raises IngestError naming the line for a malformed row or a non-positive
    gap, and naming the column if the header is wrong. Cases whose timestamps
    are not strictly increasing are dropped whole; the reasons are appended
    to `rejections` when a list is supplied (and always logged).
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        if header != RECORD_HEADER:
            missing = [c for c in RECORD_HEADER if c not in header]
            if missing:
                raise SchemaError(f"{path}: missing column {missing[0]!r}")
            raise SchemaError(f"{path}: bad header order {header}")
        records: list[CarFollowRecord] = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(RECORD_HEADER):
                raise IngestError(f"{path} line {lineno}: expected 6 fields, got {len(row)}")
            try:
                rec = CarFollowRecord(
                    case_id=row[0],
                    t=float(row[1]),
                    gap=float(row[2]),
                    v_lead=float(row[3]),
                    v_follow=float(row[4]),
                    a_follow=float(row[5]),
                )
            except ValueError as exc:
                raise IngestError(f"{path} line {lineno}: {exc}") from None
            if rec.gap <= 0:
                raise IngestError(
                    f"{path} line {lineno}: gap must be positive (got {rec.gap:g})"
                )
            records.append(rec)

    kept: list[CarFollowRecord] = []
    for case_id, rows in _group_cases(records).items():
        ts = [r.t for r in rows]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            reason = f"case {case_id!r}: timestamps not strictly increasing; dropped"
            log.warning("%s", reason)
            if rejections is not None:
                rejections.append(reason)
            continue
        kept.extend(rows)
    return kept


def write_records_csv(records: Sequence[CarFollowRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(RECORD_HEADER)
        for r in records:
            w.writerow(
                [r.case_id, f"{r.t:.9g}", f"{r.gap:.9g}", f"{r.v_lead:.9g}",
                 f"{r.v_follow:.9g}", f"{r.a_follow:.9g}"]
            )


def filter_report(
    records: Sequence[CarFollowRecord], spec: FilterSpec, strict: bool = False
) -> tuple[list[CarFollowRecord], dict[str, int]]:
    """filter_stable plus a summary of what each rule retained and dropped."""
    cases = _group_cases(records)
    summary = {
        "cases_in": len(cases),
        "samples_in": len(records),
        "cases_dropped_unstable_leader": 0,
        "cases_dropped_dv": 0,
        "samples_dropped_dv": 0,
        "cases_kept": 0,
        "samples_kept": 0,
    }
    kept: list[CarFollowRecord] = []
    for case_id, rows in cases.items():
        if any(abs(r.v_lead - spec.v_lead_target) > spec.v_lead_tol for r in rows):
            summary["cases_dropped_unstable_leader"] += 1
            continue
        violators = [r for r in rows if abs(r.v_follow - r.v_lead) > spec.dv_max]
        if violators and strict:
            summary["cases_dropped_dv"] += 1
            continue
        summary["samples_dropped_dv"] += len(violators)
        retained = [r for r in rows if abs(r.v_follow - r.v_lead) <= spec.dv_max]
        if retained:
            summary["cases_kept"] += 1
            summary["samples_kept"] += len(retained)
            kept.extend(retained)
    return kept, summary


def filter_stable(
    records: Sequence[CarFollowRecord], spec: FilterSpec, strict: bool = False
) -> list[CarFollowRecord]:
    """Keep cases with a stable leader; enforce the speed-difference rule.

    A case survives only if every sample's leader speed is within
    spec.v_lead_tol of spec.v_lead_target. Samples with
    |v_follow - v_lead| > spec.dv_max are then dropped individually, or
    take the whole case down when strict=True. Idempotent.
    """
    kept, _ = filter_report(records, spec, strict)
    return kept


def normalize_gaps(
    records: Sequence[CarFollowRecord],
    min_samples: int = MIN_CASE_SAMPLES,
    dropped: list[str] | None = None,
) -> np.ndarray:
    """Standardize gaps case by case and pool them.

    Each case is centered on its own mean and scaled by its population
    standard deviation (so a 3-sample case {1,2,3} maps to +-sqrt(3/2) and 0).
    Cases with fewer than min_samples samples or zero spread are dropped with
    a diagnostic. Returns the pooled array in input case order.
    """
    out: list[np.ndarray] = []
    for case_id, rows in _group_cases(records).items():
        g = np.array([r.gap for r in rows], dtype=float)
        if len(g) < min_samples:
            reason = f"case {case_id!r}: {len(g)} samples < {min_samples}; dropped"
        elif g.std() == 0.0:
            reason = f"case {case_id!r}: zero gap variance; dropped"
        else:
            out.append((g - g.mean()) / g.std())
            continue
        log.warning("%s", reason)
        if dropped is not None:
            dropped.append(reason)
    if not out:
        return np.empty(0)
    return np.concatenate(out)
