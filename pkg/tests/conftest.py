import pytest

from feakit.dataset import SampleRecord
from feakit.vocab import AuVocabulary, EmotionVocabulary


@pytest.fixture
def au_vocab():
    return AuVocabulary.default()


@pytest.fixture
def emo_vocab():
    return EmotionVocabulary.seven_class()


def make_record(
    dataset="FABA",
    image="0001.jpg",
    question="What emotion is shown?",
    aus=("AU4", "AU7"),
    labels=("Anger",),
    description="brows lowered (AU4) and lids tightened (AU7) indicate anger",
    meta_info=None,
) -> SampleRecord:
    return SampleRecord.create(dataset, image, question, aus, labels, description, meta_info)


def think_answer(think: str, answer: str) -> str:
    return f"<think>{think}</think><answer>{answer}</answer>"


def response_for(record: SampleRecord) -> str:
    """A response that scores perfectly against the given gold record."""
    mentions = ", ".join(f"feature ({token})" for token in record.aus)
    return think_answer(f"the face shows {mentions}", record.labels[0].lower())
