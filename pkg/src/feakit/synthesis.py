"""Ground-truth-anchored reasoning-data synthesis with automatic filtering and retries.

One task = one labeled face image plus a question. The instruction anchors the
model on the gold AUs and emotion; each candidate output is checked by a
three-way filter (AU match, emotion match, format validity). Failures feed a
reflective error section into the next attempt while the sampling temperature
escalates, until a candidate passes or the retry budget runs out.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from .client import GenerationParams, ImagePart, TransportError, VlmClient
from .dataset import SampleRecord, compute_sample_id
from .parsing import ParsedResponse, lint_negative_expressions, parse_response
from .prompts import render_error_section, render_gt_section, render_sft_prompt
from .vocab import AuVocabulary, EmotionVocabulary

logger = logging.getLogger(__name__)

FILTER_MODES = ("strict", "superset")


@dataclass(frozen=True)
class SynthesisTask:
    """One image/question pair with its gold AU set and gold emotion."""

    dataset: str
    image: str
    question: str
    gold_aus: tuple[str, ...]
    gold_emotion: str

    def __post_init__(self):
        object.__setattr__(self, "gold_aus", tuple(self.gold_aus))
        if not (self.dataset and self.image and self.question):
            raise ValueError("dataset, image and question must be non-empty")
        if not self.gold_aus:
            raise ValueError("gold_aus must be non-empty")
        if not self.gold_emotion:
            raise ValueError("gold_emotion must be non-empty")

    @property
    def image_ref(self) -> tuple[str, str]:
        return (self.dataset, self.image)

    @classmethod
    def from_record(cls, record: SampleRecord) -> "SynthesisTask":
        label = record.primary_label()
        if label is None:
            raise ValueError(f"record {record.id} has no emotion label")
        return cls(
            dataset=record.dataset,
            image=record.image,
            question=record.question,
            gold_aus=tuple(record.aus),
            gold_emotion=label,
        )


@dataclass(frozen=True)
class RetryPolicy:
    """Escalating temperature schedule for the generate-filter loop."""

    max_attempts: int = 5
    base_temperature: float = 0.7
    temperature_step: float = 0.1
    temperature_cap: float = 1.2

    def __post_init__(self):
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")
        if self.temperature_step < 0:
            raise ValueError("temperature_step must be >= 0")
        if self.temperature_cap < self.base_temperature:
            raise ValueError("temperature_cap must be >= base_temperature")

    def temperature_for(self, attempt: int) -> float:
        """Temperature for the 1-based attempt number, capped."""
        return min(self.base_temperature + (attempt - 1) * self.temperature_step, self.temperature_cap)


@dataclass(frozen=True)
class FilterResult:
    verdict: bool
    m_au: bool
    m_emotion: bool
    m_format: bool


@dataclass
class Attempt:
    prompt: str
    raw: str
    verdict: bool
    errors: list[str]
    temperature: float
    codes: list[str] = field(default_factory=list)


@dataclass
class SynthesisOutcome:
    task: SynthesisTask
    status: str  # "accepted" | "exhausted"
    attempts: list[Attempt]
    accepted_record: SampleRecord | None = None

    @property
    def task_id(self) -> str:
        return compute_sample_id(self.task.dataset, self.task.image, self.task.question)


class SynthesisAborted(RuntimeError):
    """Transport failure mid-loop; carries the attempt log gathered so far."""

    def __init__(self, task: SynthesisTask, attempts: list[Attempt], cause: Exception):
        super().__init__(f"synthesis aborted after {len(attempts)} attempt(s): {cause}")
        self.task = task
        self.attempts = attempts


def build_instruction(
    task: SynthesisTask,
    prev: tuple[str, list[str]] | None = None,
    emo_vocab: EmotionVocabulary | None = None,
) -> str:
    """Assemble the synthesis instruction: base prompt + ground truth [+ error feedback].

    Sections are concatenated directly, each template already stripped.
    """
    emo_vocab = emo_vocab or EmotionVocabulary.seven_class()
    text = render_sft_prompt(task.question, emo_vocab) + render_gt_section(task.gold_aus, task.gold_emotion)
    if prev is not None:
        prev_response, errors = prev
        text += render_error_section(prev_response, errors)
    return text


def auto_filter(parsed: ParsedResponse, task: SynthesisTask, mode: str = "strict") -> FilterResult:
    """Three-predicate quality gate; the verdict is their conjunction.

    strict mode requires the detected AU set to equal the gold set; superset
    mode only requires every gold AU to be mentioned.
    """
    if mode not in FILTER_MODES:
        raise ValueError(f"unknown filter mode: {mode!r}")
    detected = set(parsed.aus_detected)
    gold = set(task.gold_aus)
    m_au = detected == gold if mode == "strict" else gold <= detected
    m_emotion = parsed.normalized_emotion == task.gold_emotion
    m_format = parsed.format_valid
    return FilterResult(verdict=m_au and m_emotion and m_format, m_au=m_au, m_emotion=m_emotion, m_format=m_format)


def _sorted_aus(tokens: Iterable[str]) -> str:
    return ", ".join(sorted(tokens, key=lambda t: int(t[2:]) if t[2:].isdigit() else 99))


def diagnose_errors(parsed: ParsedResponse, task: SynthesisTask, mode: str = "strict") -> list[str]:
    """Human-readable issue list for the reflective error section.

    Fixed order: AU mismatches, wrong emotion, format violation, then
    negative-expression lint findings. Empty iff the filter verdict is true
    and the lint is clean.
    """
    result = auto_filter(parsed, task, mode)
    errors: list[str] = []
    if not result.m_au:
        detected = set(parsed.aus_detected)
        gold = set(task.gold_aus)
        missing = gold - detected
        extra = detected - gold
        if missing:
            errors.append(f"Missing required Action Units: {_sorted_aus(missing)}")
        if extra and mode == "strict":
            errors.append(f"Action Units outside the ground truth: {_sorted_aus(extra)}")
    if not result.m_emotion:
        errors.append(f"Wrong emotion: the answer must be exactly {task.gold_emotion}")
    if not result.m_format:
        errors.append("Invalid format: output one <think>...</think> block followed by one <answer>...</answer> block")
    negatives = lint_negative_expressions(parsed.think_text or "")
    if negatives:
        errors.append(f"Negative or uncertain expressions used: {', '.join(negatives)}")
    return errors


def _failure_codes(result: FilterResult) -> list[str]:
    codes = []
    if not result.m_au:
        codes.append("au_mismatch")
    if not result.m_emotion:
        codes.append("emotion_mismatch")
    if not result.m_format:
        codes.append("format_invalid")
    return codes


def synthesize_sample(
    task: SynthesisTask,
    client: VlmClient,
    policy: RetryPolicy | None = None,
    mode: str = "strict",
    params: GenerationParams | None = None,
    au_vocab: AuVocabulary | None = None,
    emo_vocab: EmotionVocabulary | None = None,
    image: ImagePart | None = None,
) -> SynthesisOutcome:
    """Generate-filter-retry loop for one task.

    Attempt k samples at temperature min(base + (k-1)*step, cap); attempts
    after the first embed the immediately-previous response and its diagnosed
    errors. Stops at the first accepted candidate or after max_attempts.
    """
    policy = policy or RetryPolicy()
    params = params or GenerationParams()
    emo_vocab = emo_vocab or EmotionVocabulary.seven_class()
    attempts: list[Attempt] = []
    prev: tuple[str, list[str]] | None = None

    for attempt_no in range(1, policy.max_attempts + 1):
        temperature = policy.temperature_for(attempt_no)
        prompt = build_instruction(task, prev, emo_vocab)
        request = params.request(prompt, image=image, temperature=temperature)
        try:
            raw = client.complete(request)
        except TransportError as exc:
            raise SynthesisAborted(task, attempts, exc) from exc
        parsed = parse_response(raw, au_vocab, emo_vocab)
        result = auto_filter(parsed, task, mode)
        errors = diagnose_errors(parsed, task, mode)
        attempts.append(
            Attempt(
                prompt=prompt,
                raw=raw,
                verdict=result.verdict,
                errors=errors,
                temperature=temperature,
                codes=_failure_codes(result),
            )
        )
        if result.verdict:
            record = SampleRecord.create(
                dataset=task.dataset,
                image=task.image,
                question=task.question,
                aus=task.gold_aus,
                labels=[task.gold_emotion],
                description=parsed.think_text or "",
            )
            return SynthesisOutcome(task=task, status="accepted", attempts=attempts, accepted_record=record)
        prev = (raw, errors)

    return SynthesisOutcome(task=task, status="exhausted", attempts=attempts)


def bootstrap_sft_set(
    tasks: Iterable[SynthesisTask],
    client: VlmClient,
    policy: RetryPolicy | None = None,
    n: int = 300,
    mode: str = "strict",
    params: GenerationParams | None = None,
    au_vocab: AuVocabulary | None = None,
    emo_vocab: EmotionVocabulary | None = None,
) -> list[SampleRecord]:
    """Collect n accepted records for the instruction-tuning bootstrap set.

    Consumes tasks until n acceptances or exhaustion; a shortfall is logged,
    not raised.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    accepted: list[SampleRecord] = []
    consumed = 0
    for task in tasks:
        consumed += 1
        outcome = synthesize_sample(task, client, policy, mode, params, au_vocab, emo_vocab)
        if outcome.status == "accepted" and outcome.accepted_record is not None:
            accepted.append(outcome.accepted_record)
            if len(accepted) >= n:
                break
    if len(accepted) < n:
        logger.warning("bootstrap shortfall: %d of %d accepted after %d tasks", len(accepted), n, consumed)
    return accepted


def iter_tasks(records: Iterable[SampleRecord]) -> Iterator[SynthesisTask]:
    """Turn gold records into synthesis tasks, skipping rows without labels or AUs."""
    for record in records:
        try:
            yield SynthesisTask.from_record(record)
        except ValueError as exc:
            logger.warning("skipping task %s/%s: %s", record.dataset, record.image, exc)


def write_outcome_log(outcomes: Iterable[SynthesisOutcome], path: str | Path) -> int:
    """One JSONL summary per task: status, attempt count, final temperature, error codes."""
    path = Path(path)
    count = 0
    with path.open("w", encoding="utf-8") as fh:
        for outcome in outcomes:
            last = outcome.attempts[-1] if outcome.attempts else None
            row = {
                "id": outcome.task_id,
                "dataset": outcome.task.dataset,
                "image": outcome.task.image,
                "status": outcome.status,
                "attempts": len(outcome.attempts),
                "final_temperature": last.temperature if last else None,
                "error_codes": last.codes if last else [],
            }
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")
            count += 1
    return count
