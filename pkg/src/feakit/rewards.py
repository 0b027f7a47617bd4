"""Verifiable reward components for a response against gold labels.

Three independent checks: AU-set F1 against gold AUs, exact emotion match and
structural format validity. The composite is their plain sum, with ablation
toggles forcing disabled components to zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .dataset import SampleRecord
from .parsing import check_format, parse_response
from .vocab import AuVocabulary, EmotionVocabulary


@dataclass(frozen=True)
class RewardConfig:
    """Ablation toggles; at least one component must stay enabled."""

    enable_au: bool = True
    enable_acc: bool = True
    enable_format: bool = True

    def __post_init__(self):
        if not (self.enable_au or self.enable_acc or self.enable_format):
            raise ValueError("at least one reward component must be enabled")

    @property
    def enabled_count(self) -> int:
        return int(self.enable_au) + int(self.enable_acc) + int(self.enable_format)


@dataclass(frozen=True)
class RewardBreakdown:
    r_au: float
    r_acc: float
    r_format: float

    @property
    def total(self) -> float:
        return self.r_au + self.r_acc + self.r_format


def au_f1(predicted: Iterable[str], gold: Iterable[str], au_vocab: AuVocabulary | None = None) -> float:
    """F1 between predicted and gold AU sets.

    Both sets empty counts as vacuous agreement (1.0); exactly one empty is 0.0.
    """
    au_vocab = au_vocab or AuVocabulary.default()
    pred_set = set(predicted)
    gold_set = set(gold)
    for token in pred_set | gold_set:
        if token not in au_vocab:
            raise ValueError(f"{token} not in AU vocabulary")
    if not pred_set and not gold_set:
        return 1.0
    if not pred_set or not gold_set:
        return 0.0
    overlap = len(pred_set & gold_set)
    precision = overlap / len(pred_set)
    recall = overlap / len(gold_set)
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def accuracy_reward(pred_label: str | None, gold_label: str, emo_vocab: EmotionVocabulary | None = None) -> float:
    """1.0 iff the predicted label is present and equals the gold label."""
    emo_vocab = emo_vocab or EmotionVocabulary.seven_class()
    if gold_label not in emo_vocab:
        raise ValueError(f"gold label {gold_label!r} not in emotion vocabulary")
    return 1.0 if pred_label == gold_label else 0.0


def format_reward(raw: str) -> float:
    """1.0 iff the output is structurally valid."""
    return 1.0 if check_format(raw) else 0.0


def composite_reward(
    raw: str,
    gold: SampleRecord,
    config: RewardConfig | None = None,
    au_vocab: AuVocabulary | None = None,
    emo_vocab: EmotionVocabulary | None = None,
) -> RewardBreakdown:
    """Score one raw response against a gold record; disabled components are 0.

    Parses once: AUs come from the think block, the emotion from the answer
    block (best-effort even when format is invalid, so the components stay
    independent of the format check).
    """
    config = config or RewardConfig()
    au_vocab = au_vocab or AuVocabulary.default()
    emo_vocab = emo_vocab or EmotionVocabulary.seven_class()
    if not gold.aus:
        raise ValueError(f"gold record {gold.id} has no AUs")
    gold_label = gold.primary_label()
    if gold_label is None:
        raise ValueError(f"gold record {gold.id} has no emotion label")

    parsed = parse_response(raw, au_vocab, emo_vocab)
    r_au = au_f1(parsed.aus_detected, gold.aus, au_vocab) if config.enable_au else 0.0
    r_acc = accuracy_reward(parsed.normalized_emotion, gold_label, emo_vocab) if config.enable_acc else 0.0
    r_format = (1.0 if parsed.format_valid else 0.0) if config.enable_format else 0.0
    return RewardBreakdown(r_au=r_au, r_acc=r_acc, r_format=r_format)
