"""Group-relative advantages: sample G responses per prompt, score, normalize, export.

The weight update itself is an external trainer's job; this module produces
the advantage-annotated batches it consumes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .client import GenerationParams, ImagePart, VlmClient
from .dataset import SampleRecord
from .rewards import RewardBreakdown, RewardConfig, composite_reward
from .vocab import AuVocabulary, EmotionVocabulary

DEGENERATE_STD = 1e-8

BATCH_FIELDS = ("prompt_id", "response_index", "raw", "r_au", "r_acc", "r_format", "total", "advantage")


@dataclass
class ResponseGroup:
    """G responses to one prompt, each scored against the same gold record."""

    prompt_id: str
    responses: list[tuple[str, RewardBreakdown]]
    generation_params: GenerationParams

    @property
    def totals(self) -> list[float]:
        return [breakdown.total for _, breakdown in self.responses]


def group_advantages(rewards: Sequence[float]) -> list[float]:
    """Normalize rewards within the group: (r - mean) / population std.

    Groups with no spread (population std below 1e-8, including G=1) carry no
    learning signal and map to all-zero advantages.
    """
    if len(rewards) == 0:
        raise ValueError("reward group must be non-empty")
    g = len(rewards)
    mean = sum(rewards) / g
    std = math.sqrt(sum((r - mean) ** 2 for r in rewards) / g)
    if std < DEGENERATE_STD:
        return [0.0] * g
    return [(r - mean) / std for r in rewards]


def rollout_group(
    prompt: str,
    gold: SampleRecord,
    group_size: int,
    params: GenerationParams,
    client: VlmClient,
    config: RewardConfig | None = None,
    au_vocab: AuVocabulary | None = None,
    emo_vocab: EmotionVocabulary | None = None,
    image: ImagePart | None = None,
) -> ResponseGroup:
    """Issue exactly group_size generation calls with identical parameters and score each.

    Transport failures abort the whole group; no partial group is returned.
    """
    if group_size < 1:
        raise ValueError("group_size must be >= 1")
    request = params.request(prompt, image=image)
    responses: list[tuple[str, RewardBreakdown]] = []
    for _ in range(group_size):
        raw = client.complete(request)
        breakdown = composite_reward(raw, gold, config, au_vocab, emo_vocab)
        responses.append((raw, breakdown))
    return ResponseGroup(prompt_id=gold.id, responses=responses, generation_params=params)


def export_training_batch(groups: Sequence[ResponseGroup], path: str | Path) -> int:
    """Write one JSONL row per response with its reward components and advantage."""
    path = Path(path)
    count = 0
    with path.open("w", encoding="utf-8") as fh:
        for group in groups:
            advantages = group_advantages(group.totals)
            for index, (raw, breakdown) in enumerate(group.responses):
                row = {
                    "prompt_id": group.prompt_id,
                    "response_index": index,
                    "raw": raw,
                    "r_au": breakdown.r_au,
                    "r_acc": breakdown.r_acc,
                    "r_format": breakdown.r_format,
                    "total": breakdown.total,
                    "advantage": advantages[index],
                }
                fh.write(json.dumps(row, ensure_ascii=False) + "\n")
                count += 1
    return count
