"""Unified-schema dataset records: identity, JSONL codec, validation, cleaning, balancing.

Each corpus lives beside its images as ``<root>/<DatasetName>.jsonl`` plus
``<root>/<DatasetName>/<image files>``. Every JSONL line is one sample with
exactly the fields ``id, dataset, image, question, AUs, labels, description,
meta_info``.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import random
import statistics
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from .vocab import AuVocabulary, EmotionVocabulary

logger = logging.getLogger(__name__)

SCHEMA_FIELDS = ("id", "dataset", "image", "question", "AUs", "labels", "description", "meta_info")

# validation issue codes
BAD_ID = "BAD_ID"
UNKNOWN_AU = "UNKNOWN_AU"
UNKNOWN_EMOTION = "UNKNOWN_EMOTION"
MISSING_FIELD = "MISSING_FIELD"
MISSING_IMAGE = "MISSING_IMAGE"


def compute_sample_id(dataset: str, image: str, question: str) -> str:
    """Deterministic sample id: MD5 hex digest of ``dataset_image_question``."""
    if not dataset or not image or not question:
        raise ValueError("dataset, image and question must be non-empty")
    raw = f"{dataset}_{image}_{question}".encode("utf-8")
    return hashlib.md5(raw).hexdigest()


@dataclass
class SampleRecord:
    """One unified-schema dataset row."""

    id: str
    dataset: str
    image: str
    question: str
    aus: list[str] = field(default_factory=list)
    labels: list[str] = field(default_factory=list)
    description: str = ""
    meta_info: dict[str, str] = field(default_factory=dict)

    @classmethod
    def create(
        cls,
        dataset: str,
        image: str,
        question: str,
        aus: Iterable[str] = (),
        labels: Iterable[str] = (),
        description: str = "",
        meta_info: dict[str, str] | None = None,
    ) -> "SampleRecord":
        """Build a record with its id computed from the identity triple."""
        return cls(
            id=compute_sample_id(dataset, image, question),
            dataset=dataset,
            image=image,
            question=question,
            aus=list(aus),
            labels=list(labels),
            description=description,
            meta_info=dict(meta_info or {}),
        )

    @classmethod
    def from_json_obj(cls, obj: dict) -> "SampleRecord":
        if not isinstance(obj, dict):
            raise ValueError(f"expected a JSON object, got {type(obj).__name__}")
        meta_raw = obj.get("meta_info") or {}
        if not isinstance(meta_raw, dict):
            raise ValueError("meta_info must be an object")
        meta: dict[str, str] = {}
        for k, v in meta_raw.items():
            if not isinstance(v, str):
                logger.warning("coercing non-string meta_info value %r=%r to string", k, v)
                v = json.dumps(v, ensure_ascii=False) if isinstance(v, (dict, list)) else str(v)
            meta[str(k)] = v
        return cls(
            id=str(obj.get("id", "")),
            dataset=str(obj.get("dataset", "")),
            image=str(obj.get("image", "")),
            question=str(obj.get("question", "")),
            aus=[str(a) for a in obj.get("AUs") or []],
            labels=[str(l) for l in obj.get("labels") or []],
            description=str(obj.get("description", "") or ""),
            meta_info=meta,
        )

    def to_json_obj(self) -> dict:
        return {
            "id": self.id,
            "dataset": self.dataset,
            "image": self.image,
            "question": self.question,
            "AUs": list(self.aus),
            "labels": list(self.labels),
            "description": self.description,
            "meta_info": dict(self.meta_info),
        }

    def primary_label(self) -> str | None:
        """First emotion label, the canonical one for single-label operations."""
        return self.labels[0] if self.labels else None


@dataclass
class ValidationReport:
    record_id: str
    ok: bool
    issues: list[tuple[str, str]] = field(default_factory=list)


@dataclass
class SkippedLine:
    """A JSONL line that could not be decoded into a record."""

    path: str
    line_no: int
    error: str


def iter_jsonl(path: str | Path, skipped: list[SkippedLine] | None = None) -> Iterator[SampleRecord]:
    """Yield records in file order; malformed lines are appended to ``skipped``."""
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                record = SampleRecord.from_json_obj(obj)
            except (json.JSONDecodeError, ValueError) as exc:
                if skipped is not None:
                    skipped.append(SkippedLine(str(path), line_no, str(exc)))
                logger.debug("skipping malformed line %s:%d: %s", path, line_no, exc)
                continue
            yield record


def read_jsonl(path: str | Path) -> tuple[list[SampleRecord], list[SkippedLine]]:
    """Eager variant of :func:`iter_jsonl` returning (records, skipped)."""
    skipped: list[SkippedLine] = []
    records = list(iter_jsonl(path, skipped))
    return records, skipped


def write_jsonl(records: Iterable[SampleRecord], path: str | Path) -> int:
    """Write one JSON object per line with the eight schema fields; returns the count."""
    path = Path(path)
    count = 0
    with path.open("w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record.to_json_obj(), ensure_ascii=False) + "\n")
            count += 1
    return count


def validate_record(
    record: SampleRecord,
    au_vocab: AuVocabulary | None = None,
    emo_vocab: EmotionVocabulary | None = None,
    image_root: str | Path | None = None,
) -> ValidationReport:
    """Check every record invariant and report each violation with a coded issue."""
    au_vocab = au_vocab or AuVocabulary.default()
    emo_vocab = emo_vocab or EmotionVocabulary.seven_class()
    issues: list[tuple[str, str]] = []

    for name in ("dataset", "image", "question"):
        if not getattr(record, name):
            issues.append((MISSING_FIELD, f"{name} is empty"))
    if not record.aus and not record.labels:
        issues.append((MISSING_FIELD, "record has neither AUs nor emotion labels"))

    if record.dataset and record.image and record.question:
        expected = compute_sample_id(record.dataset, record.image, record.question)
        if record.id != expected:
            issues.append((BAD_ID, f"id {record.id!r} != computed {expected}"))

    for token in record.aus:
        if token not in au_vocab:
            issues.append((UNKNOWN_AU, f"{token} not in vocabulary"))
    for label in record.labels:
        if label not in emo_vocab:
            issues.append((UNKNOWN_EMOTION, f"{label} not in vocabulary"))

    if image_root is not None and record.dataset and record.image:
        image_path = Path(image_root) / record.dataset / record.image
        if not image_path.is_file():
            issues.append((MISSING_IMAGE, f"image file not found: {image_path}"))

    return ValidationReport(record_id=record.id, ok=not issues, issues=issues)


def clean_dataset(
    records: Iterable[SampleRecord],
    au_vocab: AuVocabulary | None = None,
    emo_vocab: EmotionVocabulary | None = None,
    image_root: str | Path | None = None,
) -> tuple[list[SampleRecord], list[ValidationReport]]:
    """Split records into (kept, dropped-with-report); kept records all validate clean."""
    kept: list[SampleRecord] = []
    dropped: list[ValidationReport] = []
    for record in records:
        report = validate_record(record, au_vocab, emo_vocab, image_root)
        if report.ok:
            kept.append(record)
        else:
            dropped.append(report)
    return kept, dropped


def _median_target(counts: Iterable[int]) -> int:
    median = statistics.median(counts)
    return int(math.floor(median + 0.5))


def balance_by_frequency(records: list[SampleRecord], key: str = "emotion", seed: int = 0) -> list[SampleRecord]:
    """Rebalance a long-tailed corpus toward the median class count.

    key="emotion": classes are the first emotion label; classes above the
    median count are uniformly down-sampled to it and classes below are
    up-sampled with replacement (verbatim duplicates).

    key="au": records are multi-label, so no record is dropped on behalf of a
    single class. A record is duplicated ceil(target/count(c)) times for its
    rarest AU c when that AU is under-represented, and kept with probability
    target/count(c) of its most common AU when every AU it carries is
    over-represented.
    """
    if not records:
        raise ValueError("no records to balance")
    if key not in ("emotion", "au"):
        raise ValueError(f"unknown balance key: {key!r}")
    rng = random.Random(seed)

    if key == "emotion":
        by_class: dict[str, list[SampleRecord]] = {}
        for record in records:
            label = record.primary_label()
            if label is None:
                raise ValueError(f"record {record.id} has no emotion label")
            by_class.setdefault(label, []).append(record)
        target = _median_target(len(v) for v in by_class.values())
        out: list[SampleRecord] = []
        for label in sorted(by_class):
            members = by_class[label]
            if len(members) > target:
                out.extend(rng.sample(members, target))
            elif len(members) < target:
                out.extend(members)
                out.extend(rng.choices(members, k=target - len(members)))
            else:
                out.extend(members)
        rng.shuffle(out)
        return out

    counts: dict[str, int] = {}
    for record in records:
        if not record.aus:
            raise ValueError(f"record {record.id} has no AU labels")
        for token in record.aus:
            counts[token] = counts.get(token, 0) + 1
    target = _median_target(counts.values())
    out = []
    for record in records:
        rarest = min(counts[t] for t in record.aus)
        if rarest <= target:
            out.extend([record] * math.ceil(target / rarest))
        else:
            commonest = max(counts[t] for t in record.aus)
            if rng.random() < target / commonest:
                out.append(record)
    rng.shuffle(out)
    return out
