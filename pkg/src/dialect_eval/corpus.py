"""Data model and ingestion for sentence-pair corpora and question sets.

Text normalization here is deliberately minimal: NFC composition, whitespace
collapse, and a digit-folded matching key. Word segmentation beyond
whitespace splitting is unreliable for dialectal Bengali, so anything
smarter belongs to the metric layers, not the corpus.
"""

from __future__ import annotations

import csv
import json
import re
import unicodedata
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable


class CorpusError(Exception):
    """Base class for corpus ingestion and validation errors."""


class ParseError(CorpusError):
    """A record could not be parsed; carries the 1-based line number."""

    def __init__(self, message: str, line: int) -> None:
        super().__init__(f"line {line}: {message}")
        self.line = line


class DuplicateId(CorpusError):
    """Two records share the same id."""


class InvalidDialect(CorpusError):
    """A district/dialect label outside the closed label set."""


class EmptyQuery(CorpusError):
    """Query text is empty after normalization."""


class Dialect(Enum):
    """Closed set of dialect labels plus the Standard register.

    Ingest is case-insensitive; output uses the canonical casing below.
    """

    BARISHAL = "Barishal"
    CHITTAGONG = "Chittagong"
    KISHOREGANJ = "Kishoreganj"
    MYMENSINGH = "Mymensingh"
    NARAIL = "Narail"
    NOAKHALI = "Noakhali"
    RANGPUR = "Rangpur"
    SYLHET = "Sylhet"
    TANGAIL = "Tangail"
    STANDARD = "Standard"

    @property
    def label(self) -> str:
        return self.value

    @classmethod
    def parse(cls, raw: str) -> "Dialect":
        try:
            return _DIALECT_BY_KEY[raw.strip().lower()]
        except KeyError:
            raise InvalidDialect(f"unknown dialect label {raw!r}") from None

    def __str__(self) -> str:  # pragma: no cover - repr convenience
        return self.value


_DIALECT_BY_KEY = {d.value.lower(): d for d in Dialect}

DISTRICTS: tuple[Dialect, ...] = tuple(d for d in Dialect if d is not Dialect.STANDARD)


class QuestionType(Enum):
    DEFINITIONAL = "Definitional"
    CONTRASTING = "Contrasting"
    FACTUAL_IDENTIFICATION = "FactualIdentification"
    FUNCTIONAL = "Functional"

    @classmethod
    def parse(cls, raw: str) -> "QuestionType":
        key = raw.strip().lower()
        for member in cls:
            if member.value.lower() == key:
                return member
        raise CorpusError(f"unknown question type {raw!r}")


class Domain(Enum):
    TECHNOLOGY = "Technology"
    SOCIAL_SCIENCES = "SocialSciences"
    HEALTH_SPORTS = "HealthSports"
    PHYS_NAT_SCIENCES = "PhysNatSciences"
    ARTS_HUMANITIES = "ArtsHumanities"
    BUSINESS_ECONOMICS = "BusinessEconomics"

    @classmethod
    def parse(cls, raw: str) -> "Domain":
        key = raw.strip().lower()
        for member in cls:
            if member.value.lower() == key:
                return member
        raise CorpusError(f"unknown domain {raw!r}")


_WHITESPACE_RE = re.compile(r"\s+")

# Bengali digits U+09E6..U+09EF folded to ASCII in the matching key only;
# stored display text keeps the original glyphs.
_BENGALI_DIGITS = "০১২৩৪৫৬৭৮৯"
_DIGIT_FOLD = str.maketrans(_BENGALI_DIGITS, "0123456789")


def normalize_text(raw: str) -> str:
    """Canonicalize text for storage and display.

    NFC composition, runs of whitespace collapsed to a single space,
    leading/trailing whitespace stripped. Idempotent; never folds digits.
    """
    text = unicodedata.normalize("NFC", raw)
    return _WHITESPACE_RE.sub(" ", text).strip()


def match_key(text: str) -> str:
    """Derive the lexical matching key: normalized text with Bengali digits
    mapped to ASCII. Display text is never mutated; all retrieval-side
    lexical comparisons go through this key. Idempotent."""
    return normalize_text(text).translate(_DIGIT_FOLD)


def tokenize(normalized: str) -> list[str]:
    """Whitespace tokenization. Interior punctuation stays attached."""
    return normalized.split()


@dataclass(frozen=True)
class TaggedQuery:
    """A normalized query with its short-query flag.

    ``is_short`` is true exactly when the query has fewer than four tokens;
    short queries get a wider, lexically weighted retrieval profile.
    """

    original: str
    normalized: str
    tokens: tuple[str, ...]
    is_short: bool

    @property
    def key(self) -> str:
        return match_key(self.normalized)

    @property
    def key_tokens(self) -> list[str]:
        return tokenize(self.key)


SHORT_QUERY_TOKEN_LIMIT = 4


def tag_query(raw: str) -> TaggedQuery:
    """Normalize a query and flag it as short when it has < 4 tokens."""
    normalized = normalize_text(raw)
    if not normalized:
        raise EmptyQuery("query is empty after normalization")
    tokens = tuple(tokenize(normalized))
    return TaggedQuery(
        original=raw,
        normalized=normalized,
        tokens=tokens,
        is_short=len(tokens) < SHORT_QUERY_TOKEN_LIMIT,
    )


@dataclass(frozen=True)
class SentencePair:
    """An aligned standard/dialect sentence with its district tag."""

    id: str
    standard: str
    dialect: str
    district: Dialect
    source_tag: str = ""

    def __post_init__(self) -> None:
        if not self.id:
            raise CorpusError("sentence pair id must be non-empty")
        if not self.standard or not self.dialect:
            raise CorpusError(f"pair {self.id!r}: empty text after normalization")
        if self.district is Dialect.STANDARD:
            raise InvalidDialect(f"pair {self.id!r}: district may not be Standard")

    @classmethod
    def from_record(cls, record: dict) -> "SentencePair":
        return cls(
            id=str(record["id"]),
            standard=normalize_text(str(record["standard"])),
            dialect=normalize_text(str(record["dialect"])),
            district=Dialect.parse(str(record["district"])),
            source_tag=str(record.get("source_tag", "")),
        )

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "standard": self.standard,
            "dialect": self.dialect,
            "district": self.district.label,
            "source_tag": self.source_tag,
        }


@dataclass(frozen=True)
class QuestionSet:
    """A standard question plus its dialectal variants."""

    id: str
    qtype: QuestionType
    domain: Domain
    standard_q: str
    variants: dict[Dialect, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.id:
            raise CorpusError("question id must be non-empty")
        if not self.standard_q:
            raise CorpusError(f"question {self.id!r}: empty standard question")
        for dialect, text in self.variants.items():
            if dialect is Dialect.STANDARD:
                raise InvalidDialect(
                    f"question {self.id!r}: variants may not use the Standard label"
                )
            if not text:
                raise CorpusError(
                    f"question {self.id!r}: empty variant for {dialect.label}"
                )

    @classmethod
    def from_record(cls, record: dict) -> "QuestionSet":
        variants = {
            Dialect.parse(name): normalize_text(str(text))
            for name, text in dict(record.get("variants", {})).items()
        }
        return cls(
            id=str(record["id"]),
            qtype=QuestionType.parse(str(record["qtype"])),
            domain=Domain.parse(str(record["domain"])),
            standard_q=normalize_text(str(record["standard_q"])),
            variants=variants,
        )

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "qtype": self.qtype.value,
            "domain": self.domain.value,
            "standard_q": self.standard_q,
            "variants": {d.label: t for d, t in sorted(self.variants.items(), key=lambda kv: kv[0].label)},
        }

    def text_for(self, dialect: Dialect) -> str:
        """Question text for a dialect; Standard resolves to standard_q."""
        if dialect is Dialect.STANDARD:
            return self.standard_q
        return self.variants[dialect]


class PairFormat(Enum):
    JSONL = "jsonl"
    CSV = "csv"


_PAIR_FIELDS = ("id", "standard", "dialect", "district")


def _iter_records(path: Path, fmt: PairFormat) -> Iterable[tuple[int, dict]]:
    if fmt is PairFormat.JSONL:
        with path.open(encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    record = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ParseError(f"invalid JSON ({exc.msg})", lineno) from exc
                if not isinstance(record, dict):
                    raise ParseError("record is not a JSON object", lineno)
                yield lineno, record
    else:
        with path.open(encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            for lineno, record in enumerate(reader, start=2):
                yield lineno, {k: (v if v is not None else "") for k, v in record.items()}


def load_pairs(path: str | Path, fmt: PairFormat = PairFormat.JSONL) -> list[SentencePair]:
    """Load, normalize, and validate a sentence-pair corpus file.

    Raises ParseError (with line number) on malformed records, DuplicateId
    on repeated ids, InvalidDialect on labels outside the closed set.
    """
    path = Path(path)
    pairs: list[SentencePair] = []
    seen: set[str] = set()
    for lineno, record in _iter_records(path, fmt):
        missing = [f for f in _PAIR_FIELDS if not record.get(f)]
        if missing:
            raise ParseError(f"missing field(s) {', '.join(missing)}", lineno)
        try:
            pair = SentencePair.from_record(record)
        except (InvalidDialect, DuplicateId):
            raise
        except CorpusError as exc:
            raise ParseError(str(exc), lineno) from exc
        if pair.id in seen:
            raise DuplicateId(f"duplicate pair id {pair.id!r} at line {lineno}")
        seen.add(pair.id)
        pairs.append(pair)
    return pairs


def dump_pairs(pairs: Iterable[SentencePair], path: str | Path) -> None:
    """Serialize pairs as newline-delimited JSON (UTF-8, no BOM)."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for pair in pairs:
            fh.write(json.dumps(pair.to_record(), ensure_ascii=False) + "\n")


def load_questions(path: str | Path) -> list[QuestionSet]:
    """Load a question-set file (newline-delimited JSON)."""
    path = Path(path)
    questions: list[QuestionSet] = []
    seen: set[str] = set()
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON ({exc.msg})", lineno) from exc
            try:
                question = QuestionSet.from_record(record)
            except KeyError as exc:
                raise ParseError(f"missing field {exc.args[0]!r}", lineno) from exc
            except InvalidDialect:
                raise
            except CorpusError as exc:
                raise ParseError(str(exc), lineno) from exc
            if question.id in seen:
                raise DuplicateId(f"duplicate question id {question.id!r} at line {lineno}")
            seen.add(question.id)
            questions.append(question)
    return questions


def dump_questions(questions: Iterable[QuestionSet], path: str | Path) -> None:
    """Serialize question sets as newline-delimited JSON."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for question in questions:
            fh.write(json.dumps(question.to_record(), ensure_ascii=False) + "\n")


_BENGALI_BLOCK = (0x0980, 0x09FF)


def bengali_script_ratio(text: str) -> float:
    """Fraction of letter characters that fall in the Bengali Unicode block.

    Diagnostic only (logging/flagging); the authoritative script check is
    the judge's, per the bias rubric.
    """
    letters = [ch for ch in text if ch.isalpha()]
    if not letters:
        return 0.0
    bengali = sum(1 for ch in letters if _BENGALI_BLOCK[0] <= ord(ch) <= _BENGALI_BLOCK[1])
    return bengali / len(letters)
