import itertools
import random

import pytest

from feakit.client import GenerationParams, TransportError, scripted_mock
from feakit.dataset import validate_record
from feakit.parsing import parse_response
from feakit.rewards import composite_reward
from feakit.synthesis import (
    RetryPolicy,
    SynthesisAborted,
    SynthesisTask,
    auto_filter,
    bootstrap_sft_set,
    build_instruction,
    diagnose_errors,
    iter_tasks,
    synthesize_sample,
    write_outcome_log,
)

from conftest import make_record, think_answer

TASK = SynthesisTask(dataset="FABA", image="0001.jpg", question="What emotion is shown?",
                     gold_aus=("AU4", "AU7"), gold_emotion="Anger")

GOOD = think_answer("lowered brows (AU4) with tightened lids (AU7)", "anger")
BAD_AUS = think_answer("raised cheeks (AU6)", "anger")
BAD_EMOTION = think_answer("lowered brows (AU4) with tightened lids (AU7)", "fear")
BAD_FORMAT = "oops " + GOOD


class TestBuildInstruction:
    def test_first_attempt_sections(self):
        prompt = build_instruction(TASK)
        assert "### Question\nWhat emotion is shown?" in prompt
        assert "### Ground Truth" in prompt
        assert "### Previous Response Issues" not in prompt

    def test_gt_substitutions(self):
        prompt = build_instruction(TASK)
        assert "these specific Action Units: AU4, AU7" in prompt
        assert prompt.endswith("this exact emotion: Anger")

    def test_retry_embeds_previous_response(self):
        prompt = build_instruction(TASK, prev=("my old reply", ["Missing required Action Units: AU7"]))
        assert "### Previous Response Issues" in prompt
        assert "my old reply" in prompt
        assert "Missing required Action Units: AU7" in prompt

    def test_emotion_choices_substituted(self):
        prompt = build_instruction(TASK)
        assert "Use a single word from Happiness, Sadness, Neutral, Anger, Surprise, Disgust, Fear." in prompt

    def test_deterministic(self):
        prev = ("reply", ["issue a", "issue b"])
        assert build_instruction(TASK, prev) == build_instruction(TASK, prev)


class TestAutoFilter:
    def _response(self, au_ok: bool, emotion_ok: bool, format_ok: bool) -> str:
        think = "lowered brows (AU4) with tightened lids (AU7)" if au_ok else "raised cheeks (AU6)"
        answer = "anger" if emotion_ok else "fear"
        raw = think_answer(think, answer)
        return raw if format_ok else "oops " + raw

    def test_truth_table_exhaustive(self):
        for au_ok, emotion_ok, format_ok in itertools.product([True, False], repeat=3):
            parsed = parse_response(self._response(au_ok, emotion_ok, format_ok))
            result = auto_filter(parsed, TASK, "strict")
            assert result.m_au is au_ok
            assert result.m_emotion is emotion_ok
            assert result.m_format is format_ok
            assert result.verdict is (au_ok and emotion_ok and format_ok)

    def test_superset_mode_allows_extra_aus(self):
        raw = think_answer("brows (AU4), lids (AU7), plus cheeks (AU6)", "anger")
        parsed = parse_response(raw)
        assert auto_filter(parsed, TASK, "superset").m_au is True
        assert auto_filter(parsed, TASK, "strict").m_au is False

    def test_superset_still_requires_all_gold(self):
        parsed = parse_response(think_answer("only brows (AU4)", "anger"))
        assert auto_filter(parsed, TASK, "superset").m_au is False

    def test_unknown_mode_rejected(self):
        with pytest.raises(ValueError):
            auto_filter(parse_response(GOOD), TASK, "lenient")


class TestDiagnoseErrors:
    def test_clean_response(self):
        assert diagnose_errors(parse_response(GOOD), TASK) == []

    def test_missing_au_named(self):
        errors = diagnose_errors(parse_response(think_answer("brows (AU4)", "anger")), TASK)
        assert any("AU7" in e and "Missing" in e for e in errors)

    def test_extra_au_reported_in_strict_only(self):
        raw = think_answer("brows (AU4), lids (AU7), cheeks (AU6)", "anger")
        strict = diagnose_errors(parse_response(raw), TASK, "strict")
        assert any("AU6" in e for e in strict)
        assert diagnose_errors(parse_response(raw), TASK, "superset") == []

    def test_wrong_emotion_names_gold(self):
        errors = diagnose_errors(parse_response(BAD_EMOTION), TASK)
        assert any("Anger" in e for e in errors)

    def test_format_violation_reported(self):
        errors = diagnose_errors(parse_response(BAD_FORMAT), TASK)
        assert any("format" in e.lower() for e in errors)

    def test_negative_expression_reported(self):
        raw = think_answer("maybe brows lowered (AU4), lids (AU7)", "anger")
        errors = diagnose_errors(parse_response(raw), TASK)
        assert any("maybe" in e for e in errors)

    def test_fixed_order(self):
        raw = "oops " + think_answer("not much, cheeks (AU6)", "fear")
        errors = diagnose_errors(parse_response(raw), TASK)
        joined = "\n".join(errors)
        assert joined.index("Missing") < joined.index("Wrong emotion") < joined.index("Invalid format")
        assert joined.index("Invalid format") < joined.index("Negative")


class TestSynthesizeSample:
    def test_accepts_on_third_attempt(self):
        client = scripted_mock([BAD_AUS, BAD_EMOTION, GOOD, GOOD, GOOD])
        outcome = synthesize_sample(TASK, client)
        assert outcome.status == "accepted"
        assert len(client.calls) == 3
        assert [c.temperature for c in client.calls] == pytest.approx([0.7, 0.8, 0.9])
        assert "### Previous Response Issues" not in client.calls[0].prompt
        assert "### Previous Response Issues" in client.calls[1].prompt
        assert "### Previous Response Issues" in client.calls[2].prompt
        assert BAD_EMOTION in client.calls[2].prompt  # only the immediately-previous reply

    def test_never_valid_exhausts(self):
        client = scripted_mock([BAD_AUS] * 5)
        outcome = synthesize_sample(TASK, client)
        assert outcome.status == "exhausted"
        assert outcome.accepted_record is None
        assert len(client.calls) == 5
        assert len(outcome.attempts) == 5

    def test_accepts_first_try_without_error_section(self):
        client = scripted_mock([GOOD])
        outcome = synthesize_sample(TASK, client)
        assert outcome.status == "accepted"
        assert len(client.calls) == 1
        assert "### Previous Response Issues" not in client.calls[0].prompt

    def test_accepted_record_contents(self):
        outcome = synthesize_sample(TASK, scripted_mock([GOOD]))
        record = outcome.accepted_record
        assert validate_record(record).ok
        assert record.labels == ["Anger"]
        assert record.aus == ["AU4", "AU7"]
        assert record.description == "lowered brows (AU4) with tightened lids (AU7)"
        breakdown = composite_reward(outcome.attempts[-1].raw, record)
        assert breakdown.r_acc == 1.0 and breakdown.r_format == 1.0 and breakdown.r_au == 1.0

    def test_temperature_capped(self):
        policy = RetryPolicy(max_attempts=8, base_temperature=0.7, temperature_step=0.1, temperature_cap=1.2)
        client = scripted_mock([BAD_AUS] * 8)
        outcome = synthesize_sample(TASK, client, policy)
        temps = [a.temperature for a in outcome.attempts]
        assert temps == pytest.approx([0.7, 0.8, 0.9, 1.0, 1.1, 1.2, 1.2, 1.2])

    def test_transport_failure_preserves_attempt_log(self):
        client = scripted_mock([BAD_AUS, TransportError("endpoint down")])
        with pytest.raises(SynthesisAborted) as exc_info:
            synthesize_sample(TASK, client)
        assert len(exc_info.value.attempts) == 1
        assert exc_info.value.attempts[0].raw == BAD_AUS

    def test_schedule_properties_over_random_policies(self):
        rng = random.Random(31)
        for _ in range(200):
            base = rng.uniform(0.1, 1.0)
            policy = RetryPolicy(
                max_attempts=rng.randint(1, 10),
                base_temperature=base,
                temperature_step=rng.uniform(0.0, 0.5),
                temperature_cap=base + rng.uniform(0.0, 1.0),
            )
            client = scripted_mock([BAD_AUS] * policy.max_attempts)
            outcome = synthesize_sample(TASK, client, policy)
            temps = [a.temperature for a in outcome.attempts]
            assert len(outcome.attempts) <= policy.max_attempts
            assert all(t <= policy.temperature_cap + 1e-12 for t in temps)
            assert all(t2 >= t1 for t1, t2 in zip(temps, temps[1:]))


class TestBootstrap:
    def _tasks(self, n):
        return [
            SynthesisTask(dataset="FABA", image=f"{i}.jpg", question="What emotion is shown?",
                          gold_aus=("AU4", "AU7"), gold_emotion="Anger")
            for i in range(n)
        ]

    def test_always_valid(self):
        client = scripted_mock([GOOD] * 20, loop=True)
        records = bootstrap_sft_set(self._tasks(10), client, n=3)
        assert len(records) == 3
        assert len(client.calls) == 3

    def test_every_second_accepted(self):
        policy = RetryPolicy(max_attempts=1)
        script = [BAD_AUS, GOOD] * 10
        client = scripted_mock(script)
        records = bootstrap_sft_set(self._tasks(20), client, policy=policy, n=3)
        assert len(records) == 3
        assert len(client.calls) == 6

    def test_shortfall_on_exhausted_stream(self):
        policy = RetryPolicy(max_attempts=1)
        client = scripted_mock([GOOD, BAD_AUS, GOOD, BAD_AUS], loop=True)
        records = bootstrap_sft_set(self._tasks(4), client, policy=policy, n=5)
        assert len(records) == 2


class TestTaskPlumbing:
    def test_iter_tasks_skips_unlabeled(self):
        records = [make_record(image="ok.jpg"), make_record(image="bad.jpg", labels=())]
        tasks = list(iter_tasks(records))
        assert len(tasks) == 1
        assert tasks[0].image == "ok.jpg"

    def test_outcome_log(self, tmp_path):
        outcomes = [
            synthesize_sample(TASK, scripted_mock([GOOD])),
            synthesize_sample(TASK, scripted_mock([BAD_EMOTION] * 5)),
        ]
        path = tmp_path / "log.jsonl"
        assert write_outcome_log(outcomes, path) == 2
        import json

        rows = [json.loads(line) for line in path.read_text().splitlines()]
        assert rows[0]["status"] == "accepted" and rows[0]["attempts"] == 1
        assert rows[1]["status"] == "exhausted" and rows[1]["attempts"] == 5
        assert rows[1]["error_codes"] == ["emotion_mismatch"]
        assert rows[1]["final_temperature"] == pytest.approx(1.1)
