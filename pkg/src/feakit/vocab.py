"""Action-unit and emotion vocabularies shared across the toolkit."""

from __future__ import annotations

from dataclasses import dataclass, field

# FACS action units annotated in the supported corpora. AU3, AU8, AU21 and
# AU33-AU42 are not part of any source annotation scheme and are invalid.
AU_DESCRIPTIONS: dict[str, str] = {
    "AU1": "Inner brow raiser",
    "AU2": "Outer brow raiser",
    "AU4": "Brow lowerer",
    "AU5": "Upper lid raiser",
    "AU6": "Cheek raiser",
    "AU7": "Lid tightener",
    "AU9": "Nose wrinkler",
    "AU10": "Upper lip raiser",
    "AU11": "Nasolabial Furrow Deepener",
    "AU12": "Lip corner puller",
    "AU13": "Cheek puffer",
    "AU14": "Dimpler",
    "AU15": "Lip corner depressor",
    "AU16": "Lower lip depressor",
    "AU17": "Chin raiser",
    "AU18": "Lip pucker",
    "AU19": "Tongue show",
    "AU20": "Lip stretcher",
    "AU22": "Lip funneler",
    "AU23": "Lip tightener",
    "AU24": "Lip pressor",
    "AU25": "Lips parted",
    "AU26": "Jaw drop",
    "AU27": "Mouth stretch",
    "AU28": "Lip suck",
    "AU29": "Jaw thrust",
    "AU30": "Jaw sideways",
    "AU31": "Jaw clencher",
    "AU32": "Lip bite",
    "AU43": "Eyes closed",
}

BASIC_EMOTIONS_7 = ("Happiness", "Sadness", "Neutral", "Anger", "Surprise", "Disgust", "Fear")
BASIC_EMOTIONS_8 = BASIC_EMOTIONS_7 + ("Contempt",)


@dataclass(frozen=True)
class AuVocabulary:
    """The set of valid AU tokens with their plain-language names."""

    descriptions: dict[str, str] = field(default_factory=lambda: dict(AU_DESCRIPTIONS))

    @property
    def valid_tokens(self) -> tuple[str, ...]:
        return tuple(self.descriptions)

    def __contains__(self, token: str) -> bool:
        return token in self.descriptions

    def __iter__(self):
        return iter(self.descriptions)

    def __len__(self) -> int:
        return len(self.descriptions)

    def sort_key(self, token: str) -> int:
        """Numeric ordering key so AU4 sorts before AU10."""
        return int(token[2:])

    @classmethod
    def default(cls) -> "AuVocabulary":
        return cls()


def _canonical_label(label: str) -> str:
    return label[:1].upper() + label[1:]


@dataclass(frozen=True)
class EmotionVocabulary:
    """Ordered set of canonical emotion labels (first letter capitalized)."""

    labels: tuple[str, ...] = BASIC_EMOTIONS_7

    def __post_init__(self):
        canonical = tuple(_canonical_label(l.strip()) for l in self.labels)
        if not canonical or any(not l for l in canonical):
            raise ValueError("emotion labels must be non-empty")
        if len(set(canonical)) != len(canonical):
            raise ValueError(f"duplicate emotion labels: {canonical}")
        object.__setattr__(self, "labels", canonical)

    def __contains__(self, label: str) -> bool:
        return label in self.labels

    def __iter__(self):
        return iter(self.labels)

    def __len__(self) -> int:
        return len(self.labels)

    def match(self, text: str) -> str | None:
        """Case-insensitive lookup returning the canonical label, if any."""
        lowered = text.lower()
        for label in self.labels:
            if label.lower() == lowered:
                return label
        return None

    @classmethod
    def seven_class(cls) -> "EmotionVocabulary":
        return cls(BASIC_EMOTIONS_7)

    @classmethod
    def eight_class(cls) -> "EmotionVocabulary":
        return cls(BASIC_EMOTIONS_8)
