"""Verifiable-reward toolkit for facial emotion analysis.

Library surface: dataset records and cleaning, think/answer response parsing,
reward scoring, group-relative advantages, reasoning-data synthesis with
automatic filtering, evaluation metrics, a VLM transport client, and the
manual-review service.
"""

from .client import (
    ChatRequest,
    ClientConfig,
    GenerationParams,
    HttpVlmClient,
    ProtocolError,
    RequestError,
    ScriptedVlmClient,
    TransportError,
    scripted_mock,
)
from .dataset import (
    SampleRecord,
    ValidationReport,
    balance_by_frequency,
    clean_dataset,
    compute_sample_id,
    iter_jsonl,
    read_jsonl,
    validate_record,
    write_jsonl,
)
from .evaluation import (
    EvalReport,
    emotion_accuracy,
    evaluate_run,
    judge_score,
    lcs_length,
    per_au_f1,
    rege_score,
    rouge_l,
)
from .grpo import ResponseGroup, export_training_batch, group_advantages, rollout_group
from .parsing import ParsedResponse, check_format, extract_aus, lint_negative_expressions, normalize_emotion, parse_response
from .rewards import RewardBreakdown, RewardConfig, accuracy_reward, au_f1, composite_reward, format_reward
from .synthesis import (
    RetryPolicy,
    SynthesisOutcome,
    SynthesisTask,
    auto_filter,
    bootstrap_sft_set,
    build_instruction,
    diagnose_errors,
    synthesize_sample,
)
from .vocab import AuVocabulary, EmotionVocabulary

__version__ = "0.1.0"
