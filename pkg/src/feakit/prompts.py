"""Versioned prompt-template assets and their substitution helpers.

Templates live under ``assets/`` as plain text with ``{Placeholder}`` slots.
Substitution is literal string replacement, never ``str.format``, so braces in
user content pass through untouched.
"""

from __future__ import annotations

from functools import lru_cache
from importlib import resources
from typing import Iterable

from .vocab import EmotionVocabulary


@lru_cache(maxsize=None)
def load_asset(name: str) -> str:
    return (resources.files("feakit") / "assets" / name).read_text(encoding="utf-8").strip()


def render_sft_prompt(question: str, emo_vocab: EmotionVocabulary) -> str:
    """Base instruction: the question, output protocol, AU definitions and example."""
    template = load_asset("sft_prompt.txt")
    return template.replace("{Question}", question).replace("{Emotions}", ", ".join(emo_vocab))


def render_gt_section(gold_aus: Iterable[str], gold_emotion: str) -> str:
    """Ground-truth anchor appended for data synthesis."""
    template = load_asset("gt_section.txt")
    return template.replace("{true_aus}", ", ".join(gold_aus)).replace("{true_emotion}", gold_emotion)


def render_error_section(prev_response: str, errors: Iterable[str]) -> str:
    """Reflective feedback carrying the previous response and its diagnosed issues."""
    template = load_asset("error_section.txt")
    return template.replace("{prev_response}", prev_response).replace("{errors}", ", ".join(errors))


def render_judge_prompt(candidate: str, reference: str) -> str:
    """0-10 semantic-similarity grading prompt for reasoning texts."""
    template = load_asset("judge_prompt.txt")
    return template.replace("{candidate}", candidate).replace("{reference}", reference)
