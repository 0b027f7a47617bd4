"""Decompose raw model output into think/answer segments and judge structural validity.

The output protocol is one ``<think>...</think>`` block followed by one
``<answer>...</answer>`` block, nothing but whitespace outside them. All
functions here are total: any string in, a result out, never an exception.
"""

from __future__ import annotations

import re
import string
from dataclasses import dataclass, field

from .vocab import AuVocabulary, EmotionVocabulary

_THINK_RE = re.compile(r"<think>(.*?)</think>", re.DOTALL)
_ANSWER_RE = re.compile(r"<answer>(.*?)</answer>", re.DOTALL)
_STRICT_RE = re.compile(r"\s*<think>(.+?)</think>\s*<answer>(.+?)</answer>\s*\Z", re.DOTALL)
_AU_TOKEN_RE = re.compile(r"\bAU(\d{1,2})\b", re.IGNORECASE)
_NEGATIVE_RE = re.compile(r"\b(no|not|without|maybe)\b", re.IGNORECASE)


@dataclass
class ParsedResponse:
    """Structured view of one raw model output."""

    raw: str
    think_text: str | None = None
    answer_text: str | None = None
    aus_detected: list[str] = field(default_factory=list)
    normalized_emotion: str | None = None
    warnings: list[str] = field(default_factory=list)
    format_valid: bool = False


def check_format(raw: str) -> bool:
    """True iff raw is exactly one non-empty think block then one non-empty answer block.

    Tag names are case-sensitive; only whitespace may surround the two blocks.
    """
    if raw.count("<think>") != 1 or raw.count("</think>") != 1:
        return False
    if raw.count("<answer>") != 1 or raw.count("</answer>") != 1:
        return False
    return _STRICT_RE.match(raw) is not None


def extract_aus(text: str, au_vocab: AuVocabulary | None = None) -> tuple[list[str], list[str]]:
    """Scan text for word-boundary AU tokens (case-insensitive, 1-2 digits).

    Returns (tokens, warnings): tokens are uppercased, vocabulary-filtered and
    deduplicated preserving first occurrence; out-of-vocabulary mentions such
    as AU3 go to warnings.
    """
    au_vocab = au_vocab or AuVocabulary.default()
    tokens: list[str] = []
    warnings: list[str] = []
    for match in _AU_TOKEN_RE.finditer(text):
        token = "AU" + match.group(1)
        if token in au_vocab:
            if token not in tokens:
                tokens.append(token)
        else:
            warning = f"{token} not in vocabulary"
            if warning not in warnings:
                warnings.append(warning)
    return tokens, warnings


def normalize_emotion(answer: str, emo_vocab: EmotionVocabulary | None = None) -> str | None:
    """Map a raw answer word to its canonical label, or None if it is not one."""
    emo_vocab = emo_vocab or EmotionVocabulary.seven_class()
    cleaned = answer.strip().rstrip(string.punctuation).strip()
    if not cleaned or len(cleaned.split()) != 1:
        return None
    return emo_vocab.match(cleaned)


def lint_negative_expressions(think_text: str) -> list[str]:
    """Whole-word occurrences of the forbidden terms no/not/without/maybe, deduplicated."""
    found: list[str] = []
    for match in _NEGATIVE_RE.finditer(think_text):
        term = match.group(1).lower()
        if term not in found:
            found.append(term)
    return found


def parse_response(
    raw: str,
    au_vocab: AuVocabulary | None = None,
    emo_vocab: EmotionVocabulary | None = None,
) -> ParsedResponse:
    """Best-effort decomposition of raw output; never raises.

    Think/answer interiors are taken verbatim from the first matching block
    even when the overall format is invalid. AU tokens are extracted from the
    think block only.
    """
    result = ParsedResponse(raw=raw)
    think = _THINK_RE.search(raw)
    answer = _ANSWER_RE.search(raw)
    if think is not None:
        result.think_text = think.group(1)
    if answer is not None:
        result.answer_text = answer.group(1)

    if result.think_text is not None:
        result.aus_detected, result.warnings = extract_aus(result.think_text, au_vocab)
    if result.answer_text is not None:
        result.normalized_emotion = normalize_emotion(result.answer_text, emo_vocab)

    result.format_valid = check_format(raw)
    return result
