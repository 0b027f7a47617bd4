"""Run metrics: per-AU F1, per-class emotion accuracy, ROUGE-L, aggregate and judge scores.

``evaluate_run`` joins a predictions file against a gold file on sample id and
assembles everything into one report, optionally written as JSON for diffable
golden-file comparisons (tables in vocabulary order).
"""

from __future__ import annotations

import json
import logging
import re
import string
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

from .client import GenerationParams, VlmClient
from .dataset import read_jsonl
from .parsing import normalize_emotion
from .prompts import render_judge_prompt
from .vocab import AuVocabulary, EmotionVocabulary

logger = logging.getLogger(__name__)

_FIRST_INT_RE = re.compile(r"-?\d+")


class JudgeScoreError(ValueError):
    """The judge reply contained no parseable integer score."""


def lcs_length(a: Sequence, b: Sequence) -> int:
    """Longest-common-subsequence length via dynamic programming (two rows)."""
    if not a or not b:
        return 0
    previous = [0] * (len(b) + 1)
    for x in a:
        current = [0]
        for j, y in enumerate(b, start=1):
            if x == y:
                current.append(previous[j - 1] + 1)
            else:
                current.append(max(previous[j], current[j - 1]))
        previous = current
    return previous[len(b)]


def tokenize(text: str) -> list[str]:
    """Whitespace tokens, lowercased, with punctuation-only tokens dropped."""
    return [t.lower() for t in text.split() if not all(ch in string.punctuation for ch in t)]


def rouge_l(candidate: str, reference: str) -> float:
    """LCS-based F1 (beta=1) between candidate and reference token sequences."""
    cand = tokenize(candidate)
    ref = tokenize(reference)
    if not cand and not ref:
        return 1.0
    if not cand or not ref:
        return 0.0
    lcs = lcs_length(cand, ref)
    precision = lcs / len(cand)
    recall = lcs / len(ref)
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def per_au_f1(
    predictions: Sequence[Sequence[str]],
    golds: Sequence[Sequence[str]],
    au_vocab: AuVocabulary | None = None,
) -> tuple[dict[str, float], float]:
    """Per-AU F1 from binary confusion counts across samples, plus the unweighted mean.

    The mean covers every AU that occurs in at least one gold or prediction;
    AUs absent from the whole corpus are excluded.
    """
    au_vocab = au_vocab or AuVocabulary.default()
    if len(predictions) != len(golds):
        raise ValueError(f"length mismatch: {len(predictions)} predictions vs {len(golds)} golds")
    if not golds:
        raise ValueError("empty corpus")
    tp: dict[str, int] = {}
    fp: dict[str, int] = {}
    fn: dict[str, int] = {}
    for pred, gold in zip(predictions, golds):
        pred_set, gold_set = set(pred), set(gold)
        for token in pred_set | gold_set:
            if token not in au_vocab:
                raise ValueError(f"{token} not in AU vocabulary")
        for token in pred_set & gold_set:
            tp[token] = tp.get(token, 0) + 1
        for token in pred_set - gold_set:
            fp[token] = fp.get(token, 0) + 1
        for token in gold_set - pred_set:
            fn[token] = fn.get(token, 0) + 1

    scores: dict[str, float] = {}
    for token in au_vocab:
        t, p, n = tp.get(token, 0), fp.get(token, 0), fn.get(token, 0)
        if t + p + n == 0:
            continue
        scores[token] = 2 * t / (2 * t + p + n)
    average = sum(scores.values()) / len(scores) if scores else 0.0
    return scores, average


def emotion_accuracy(
    predictions: Sequence[str | None],
    golds: Sequence[str],
) -> tuple[dict[str, float], float, float]:
    """(per-class recall, macro mean over gold classes, micro overall accuracy)."""
    if len(predictions) != len(golds):
        raise ValueError(f"length mismatch: {len(predictions)} predictions vs {len(golds)} golds")
    if not golds:
        raise ValueError("empty corpus")
    gold_counts: dict[str, int] = {}
    correct_counts: dict[str, int] = {}
    correct_total = 0
    for pred, gold in zip(predictions, golds):
        gold_counts[gold] = gold_counts.get(gold, 0) + 1
        if pred is not None and pred == gold:
            correct_counts[gold] = correct_counts.get(gold, 0) + 1
            correct_total += 1
    per_class = {label: correct_counts.get(label, 0) / count for label, count in gold_counts.items()}
    macro = sum(per_class.values()) / len(per_class)
    micro = correct_total / len(golds)
    return per_class, macro, micro


def rege_score(
    au_f1_avg: float,
    rouge_l_mean: float,
    aggregator: Callable[[float, float], float] | None = None,
) -> float:
    """Aggregate reasoning score; the default sums the two inputs on a 0-100 scale each."""
    if not 0.0 <= au_f1_avg <= 1.0:
        raise ValueError(f"au_f1_avg out of range: {au_f1_avg}")
    if not 0.0 <= rouge_l_mean <= 1.0:
        raise ValueError(f"rouge_l_mean out of range: {rouge_l_mean}")
    if aggregator is None:
        aggregator = lambda a, r: 100.0 * a + 100.0 * r
    return aggregator(au_f1_avg, rouge_l_mean)


def judge_score(
    candidate: str,
    reference: str,
    client: VlmClient,
    params: GenerationParams | None = None,
) -> int:
    """Ask the judge model for a 0-10 similarity score; first integer in the reply, clamped."""
    params = params or GenerationParams(temperature=0.0, max_tokens=16)
    prompt = render_judge_prompt(candidate, reference)
    reply = client.complete(params.request(prompt))
    match = _FIRST_INT_RE.search(reply)
    if match is None:
        raise JudgeScoreError(f"no integer score in judge reply: {reply[:100]!r}")
    return max(0, min(10, int(match.group())))


@dataclass
class PredictionRow:
    """What a model run produces per sample: {id, answer, aus, description}."""

    id: str
    answer: str = ""
    aus: list[str] = field(default_factory=list)
    description: str = ""


def read_predictions(path: str | Path) -> list[PredictionRow]:
    rows: list[PredictionRow] = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                rows.append(
                    PredictionRow(
                        id=str(obj["id"]),
                        answer=str(obj.get("answer", "") or ""),
                        aus=[str(a) for a in obj.get("aus") or []],
                        description=str(obj.get("description", "") or ""),
                    )
                )
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                logger.warning("skipping prediction line %s:%d: %s", path, line_no, exc)
    return rows


@dataclass
class EvalReport:
    per_au_f1: dict[str, float]
    per_au_f1_avg: float
    per_class_accuracy: dict[str, float]
    macro_accuracy: float
    micro_accuracy: float
    rouge_l_mean: float
    rege: float | None
    judge_mean: float | None
    counts: dict[str, int]

    def to_dict(self) -> dict:
        return {
            "per_au_f1": self.per_au_f1,
            "per_au_f1_avg": self.per_au_f1_avg,
            "per_class_accuracy": self.per_class_accuracy,
            "macro_accuracy": self.macro_accuracy,
            "micro_accuracy": self.micro_accuracy,
            "rouge_l_mean": self.rouge_l_mean,
            "rege": self.rege,
            "judge_mean": self.judge_mean,
            "counts": self.counts,
        }


def evaluate_run(
    predictions_path: str | Path,
    gold_path: str | Path,
    au_vocab: AuVocabulary | None = None,
    emo_vocab: EmotionVocabulary | None = None,
    report_path: str | Path | None = None,
    judge_client: VlmClient | None = None,
    judge_params: GenerationParams | None = None,
) -> EvalReport:
    """Join predictions to golds on id and compute every enabled metric.

    Emotion accuracy covers joined rows whose gold record carries a label;
    the judge score is computed only when a judge client is supplied.
    """
    au_vocab = au_vocab or AuVocabulary.default()
    emo_vocab = emo_vocab or EmotionVocabulary.seven_class()
    golds, gold_skips = read_jsonl(gold_path)
    predictions = read_predictions(predictions_path)
    gold_by_id = {record.id: record for record in golds}

    joined = [(row, gold_by_id[row.id]) for row in predictions if row.id in gold_by_id]
    orphan = len(predictions) - len(joined)
    matched_ids = {row.id for row, _ in joined}
    unmatched_gold = len([g for g in golds if g.id not in matched_ids])
    if not joined:
        raise ValueError("no prediction ids matched the gold file")

    unknown_tokens = 0
    pred_au_sets: list[list[str]] = []
    gold_au_sets: list[list[str]] = []
    for row, gold in joined:
        in_vocab = [t for t in row.aus if t in au_vocab]
        unknown_tokens += len(row.aus) - len(in_vocab)
        pred_au_sets.append(in_vocab)
        gold_au_sets.append(gold.aus)
    au_scores, au_avg = per_au_f1(pred_au_sets, gold_au_sets, au_vocab)
    au_scores = {t: au_scores[t] for t in au_vocab if t in au_scores}

    labeled = [(row, gold) for row, gold in joined if gold.primary_label() is not None]
    if labeled:
        preds = [normalize_emotion(row.answer, emo_vocab) for row, _ in labeled]
        gold_labels = [gold.primary_label() for _, gold in labeled]
        per_class, macro, micro = emotion_accuracy(preds, gold_labels)
        ordered = {l: per_class[l] for l in emo_vocab if l in per_class}
        ordered.update({l: v for l, v in per_class.items() if l not in ordered})
        per_class = ordered
    else:
        per_class, macro, micro = {}, 0.0, 0.0

    rouge_mean = sum(rouge_l(row.description, gold.description) for row, gold in joined) / len(joined)
    rege = rege_score(au_avg, rouge_mean) if au_scores else None

    judge_mean = None
    if judge_client is not None:
        scores = [judge_score(row.description, gold.description, judge_client, judge_params) for row, gold in joined]
        judge_mean = sum(scores) / len(scores)

    report = EvalReport(
        per_au_f1=au_scores,
        per_au_f1_avg=au_avg,
        per_class_accuracy=per_class,
        macro_accuracy=macro,
        micro_accuracy=micro,
        rouge_l_mean=rouge_mean,
        rege=rege,
        judge_mean=judge_mean,
        counts={
            "gold_rows": len(golds),
            "prediction_rows": len(predictions),
            "joined": len(joined),
            "orphan_predictions": orphan,
            "unmatched_gold": unmatched_gold,
            "accuracy_rows": len(labeled),
            "skipped_gold_lines": len(gold_skips),
            "unknown_prediction_au_tokens": unknown_tokens,
        },
    )
    if report_path is not None:
        Path(report_path).write_text(
            json.dumps(report.to_dict(), ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
        )
    return report
