"""Judge prompt assembly, verdict parsing, rubric math, and the model gateway.

The two judges are prompt-level contracts: reasoning is requested as the
first schema field so scores are grounded in the generated analysis, and
the deterministic rules here (score ceilings, script gate, weighted Likert
scoring, confidence gating) are applied to whatever the model returns.
Ceiling checks flag inconsistencies; they never rewrite judge output.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from dataclasses import dataclass, replace
from enum import Enum
from importlib import resources
from string import Template

import httpx

from .corpus import Dialect

logger = logging.getLogger(__name__)

LIKERT_MAX = 5


class JudgingError(Exception):
    """Base class for judging errors."""


class EmptyInput(JudgingError):
    """A prompt input that must be non-empty is empty."""


class MalformedJson(JudgingError):
    """No parseable JSON object in the judge response."""


class MissingField(JudgingError):
    """A required verdict field is absent."""

    def __init__(self, name: str) -> None:
        super().__init__(f"verdict is missing field {name!r}")
        self.name = name


class ScoreOutOfRange(JudgingError):
    """Integer score outside its allowed range."""


class LikertOutOfRange(JudgingError):
    """A Likert value outside 0..5."""


class ConfidenceOutOfRange(JudgingError):
    """A confidence value outside 1..5."""


class GatewayError(JudgingError):
    """Gateway returned a non-success status."""

    def __init__(self, status: int, detail: str = "") -> None:
        super().__init__(f"gateway returned status {status}: {detail}".strip())
        self.status = status


class Timeout(JudgingError):
    """The gateway did not answer in time."""


class ExhaustedRetries(JudgingError):
    """All gateway attempts failed."""


def _load_template(name: str) -> Template:
    text = (
        resources.files("dialect_eval")
        .joinpath("data")
        .joinpath("templates")
        .joinpath(name)
        .read_text("utf-8")
    )
    return Template(text)


# ---------------------------------------------------------------------------
# Weighted Likert rubric


@dataclass(frozen=True)
class RubricWeights:
    """Per-category weights; the scale maximum is their sum (10.0 default)."""

    comprehension: float = 3.0
    factual: float = 2.5
    completeness: float = 2.0
    clarity: float = 1.5
    length: float = 1.0

    def __post_init__(self) -> None:
        for name, value in self.as_dict().items():
            if value <= 0:
                raise JudgingError(f"weight {name} must be > 0, got {value}")

    def as_dict(self) -> dict[str, float]:
        return {
            "comprehension": self.comprehension,
            "factual": self.factual,
            "completeness": self.completeness,
            "clarity": self.clarity,
            "length": self.length,
        }

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.comprehension, self.factual, self.completeness, self.clarity, self.length)

    @property
    def scale_max(self) -> float:
        return sum(self.as_tuple())


DEFAULT_WEIGHTS = RubricWeights()

# The five agreement statements the judge rates, keyed in weight order.
DEFAULT_STATEMENTS: dict[str, str] = {
    "comprehension": (
        "The LLM correctly understood and comprehended the dialectal question, "
        "and the response directly addresses what was asked."
    ),
    "factual": (
        "The dialectal response is factually correct AND equally accurate "
        "compared to the standard response."
    ),
    "completeness": (
        "The dialectal response covers all the key information and points that "
        "the standard response covers, relative to what was asked."
    ),
    "clarity": (
        "The dialectal response is well-written, clear, coherent, and of equal "
        "readability to the standard response."
    ),
    "length": (
        "The dialectal response length is appropriate for the question asked, "
        "and any difference from standard response length is justified."
    ),
}

_STATEMENT_TITLES = {
    "comprehension": "Dialect Comprehension",
    "factual": "Factual Correctness",
    "completeness": "Content Completeness",
    "clarity": "Response Clarity",
    "length": "Appropriate Length",
}


def compute_final_score(
    likert: tuple[int, int, int, int, int] | list[int],
    weights: RubricWeights = DEFAULT_WEIGHTS,
) -> float:
    """Weighted Likert score: sum of weight_i * likert_i / 5.

    Full float precision; rounding happens only at presentation. The
    maximum equals the weight sum (10.0 with default weights).
    """
    values = tuple(likert)
    if len(values) != 5:
        raise LikertOutOfRange(f"expected 5 Likert values, got {len(values)}")
    for value in values:
        if not isinstance(value, int) or isinstance(value, bool) or not (0 <= value <= LIKERT_MAX):
            raise LikertOutOfRange(f"Likert value {value!r} outside 0..{LIKERT_MAX}")
    return sum(w * v / LIKERT_MAX for w, v in zip(weights.as_tuple(), values))


# ---------------------------------------------------------------------------
# Verdict JSON extraction


def extract_json_object(text: str, strict: bool = False) -> dict:
    """Parse the first balanced JSON object out of a model response.

    Judges leak prose around their JSON in practice, so by default any
    surrounding text is tolerated. In strict mode the entire body must be
    exactly one JSON object.
    """
    if strict:
        try:
            obj = json.loads(text.strip())
        except json.JSONDecodeError as exc:
            raise MalformedJson(f"strict parse failed: {exc.msg}") from exc
        if not isinstance(obj, dict):
            raise MalformedJson("response is not a JSON object")
        return obj

    depth = 0
    start = -1
    in_string = False
    escaped = False
    for pos, ch in enumerate(text):
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
        elif ch == "{":
            if depth == 0:
                start = pos
            depth += 1
        elif ch == "}":
            if depth > 0:
                depth -= 1
                if depth == 0:
                    try:
                        obj = json.loads(text[start : pos + 1])
                    except json.JSONDecodeError as exc:
                        raise MalformedJson(
                            f"balanced braces but invalid JSON: {exc.msg}"
                        ) from exc
                    if not isinstance(obj, dict):
                        raise MalformedJson("extracted JSON is not an object")
                    return obj
    raise MalformedJson("no JSON object found in response")


def _require(obj: dict, name: str):
    if name not in obj:
        raise MissingField(name)
    return obj[name]


def _coerce_int(value, what: str, low: int, high: int, error: type[JudgingError]):
    if isinstance(value, bool):
        raise error(f"{what} must be an integer, got boolean")
    if isinstance(value, float):
        if not value.is_integer():
            raise error(f"{what} must be an integer, got {value}")
        value = int(value)
    if isinstance(value, str):
        stripped = value.strip()
        if not stripped.lstrip("-").isdigit():
            raise error(f"{what} must be an integer, got {value!r}")
        value = int(stripped)
    if not isinstance(value, int):
        raise error(f"{what} must be an integer, got {type(value).__name__}")
    if not (low <= value <= high):
        raise error(f"{what} {value} outside {low}..{high}")
    return value


# ---------------------------------------------------------------------------
# Translation fidelity judge


class MeaningPreserved(Enum):
    YES = "yes"
    PARTIAL = "partial"
    NO = "no"


@dataclass(frozen=True)
class TranslationVerdict:
    """Parsed output of the translation fidelity judge."""

    reasoning: str
    exemptions: tuple[str, ...]
    inaccuracies: tuple[tuple[str, str], ...]
    meaning_preserved: MeaningPreserved
    score: int
    rationale: str


def build_translation_judge_prompt(
    source: str,
    gloss: str,
    reference: str,
    machine: str,
    target: Dialect,
) -> str:
    """Render the three-step translation fidelity prompt."""
    inputs = {"source": source, "gloss": gloss, "reference": reference, "machine": machine}
    for name, value in inputs.items():
        if not value or not value.strip():
            raise EmptyInput(f"{name} text must be non-empty")
    return _load_template("translation_judge.txt").substitute(
        district=target.label, **inputs
    )


def _split_listish(value) -> list[str]:
    """Accept either a JSON list or a comma-separated string."""
    if value is None:
        return []
    if isinstance(value, list):
        items = [str(item).strip() for item in value]
    else:
        items = [part.strip() for part in str(value).split(",")]
    return [item for item in items if item and item.lower() != "none"]


def _parse_inaccuracy(entry: str) -> tuple[str, str]:
    """Split 'word (reason)' or 'word: reason' into (word, reason)."""
    if "(" in entry and entry.rstrip().endswith(")"):
        word, _, rest = entry.partition("(")
        return word.strip(), rest.rstrip()[:-1].strip()
    if ":" in entry:
        word, _, reason = entry.partition(":")
        return word.strip(), reason.strip()
    return entry.strip(), ""


def parse_translation_verdict(raw: str, strict: bool = False) -> TranslationVerdict:
    """Extract and validate a translation verdict from gateway output."""
    obj = extract_json_object(raw, strict=strict)
    reasoning = str(_require(obj, "chain_of_thought_reasoning")).strip()
    if not reasoning:
        raise MissingField("chain_of_thought_reasoning")
    meaning_raw = str(_require(obj, "meaning_preserved")).strip().lower()
    try:
        meaning = MeaningPreserved(meaning_raw)
    except ValueError:
        raise JudgingError(f"meaning_preserved must be yes/partial/no, got {meaning_raw!r}") from None
    score = _coerce_int(_require(obj, "score_integer"), "score_integer", 0, 10, ScoreOutOfRange)
    inaccuracies = tuple(
        _parse_inaccuracy(entry) for entry in _split_listish(_require(obj, "inaccurate_words"))
    )
    return TranslationVerdict(
        reasoning=reasoning,
        exemptions=tuple(_split_listish(_require(obj, "exempt_differences_found"))),
        inaccuracies=inaccuracies,
        meaning_preserved=meaning,
        score=score,
        rationale=str(obj.get("score_rationale", "")).strip(),
    )


def serialize_translation_verdict(v: TranslationVerdict) -> str:
    """Canonical JSON for a verdict; parseable back to an equal verdict."""
    record = {
        "chain_of_thought_reasoning": v.reasoning,
        "exempt_differences_found": list(v.exemptions),
        "inaccurate_words": [
            f"{word} ({reason})" if reason else word for word, reason in v.inaccuracies
        ],
        "meaning_preserved": v.meaning_preserved.value,
        "score_integer": v.score,
        "score_rationale": v.rationale,
    }
    return json.dumps(record, ensure_ascii=False)


@dataclass(frozen=True)
class CeilingViolation:
    """A verdict score above the hard ceiling its own fields imply."""

    ceiling: int
    reason: str

    def __str__(self) -> str:
        return f"ceiling {self.ceiling}: {self.reason}"


def check_rubric_ceilings(v: TranslationVerdict) -> list[CeilingViolation]:
    """Flag scores inconsistent with the rubric's hard ceilings.

    Advisory only; scores are never rewritten, since silently correcting
    judge output would contaminate agreement statistics downstream.
    """
    violations: list[CeilingViolation] = []
    count = len(v.inaccuracies)
    if count == 1 and v.score > 7:
        violations.append(CeilingViolation(7, f"one inaccuracy but score {v.score}"))
    if count == 2 and v.score > 6:
        violations.append(CeilingViolation(6, f"two inaccuracies but score {v.score}"))
    if count >= 4 and v.score > 2:
        violations.append(CeilingViolation(2, f"{count} inaccuracies but score {v.score}"))
    if v.meaning_preserved is MeaningPreserved.NO and v.score > 2:
        violations.append(CeilingViolation(2, f"meaning not preserved but score {v.score}"))
    return violations


# ---------------------------------------------------------------------------
# Dialectal bias judge


@dataclass(frozen=True)
class BiasVerdict:
    """One rubric judgment, post script gate, with its weighted score."""

    reasoning: str
    likert: tuple[int, int, int, int, int]
    script_valid: bool
    confidence: int
    final_score: float


def _render_rubric(statements: dict[str, str], weights: RubricWeights) -> str:
    lines = []
    weight_map = weights.as_dict()
    for idx, key in enumerate(("comprehension", "factual", "completeness", "clarity", "length"), 1):
        lines.append(
            f'{idx}. {_STATEMENT_TITLES[key]} (weight {weight_map[key]:g}): "{statements[key]}"'
        )
    return "\n".join(lines)


def build_bias_judge_prompt(
    std_q: str,
    dia_q: str,
    std_resp: str,
    dia_resp: str,
    dialect: Dialect,
    statements: dict[str, str] | None = None,
    weights: RubricWeights = DEFAULT_WEIGHTS,
) -> str:
    """Render the weighted-Likert bias rubric prompt for one response pair."""
    inputs = {
        "standard_question": std_q,
        "dialect_question": dia_q,
        "standard_response": std_resp,
        "dialect_response": dia_resp,
    }
    for name, value in inputs.items():
        if not value or not value.strip():
            raise EmptyInput(f"{name} text must be non-empty")
    rubric = _render_rubric(statements or DEFAULT_STATEMENTS, weights)
    return _load_template("bias_judge.txt").substitute(
        dialect=dialect.label, rubric=rubric, **inputs
    )


_LIKERT_FIELDS = (
    "likert_comprehension",
    "likert_factual",
    "likert_completeness",
    "likert_clarity",
    "likert_length",
)


def parse_bias_verdict(
    raw: str,
    weights: RubricWeights = DEFAULT_WEIGHTS,
    strict: bool = False,
) -> BiasVerdict:
    """Extract a bias verdict, apply the script gate, and score it."""
    obj = extract_json_object(raw, strict=strict)
    reasoning = str(_require(obj, "chain_of_thought_reasoning")).strip()
    if not reasoning:
        raise MissingField("chain_of_thought_reasoning")
    script_raw = _require(obj, "script_valid")
    if isinstance(script_raw, str):
        script_valid = script_raw.strip().lower() in ("true", "yes", "1")
    else:
        script_valid = bool(script_raw)
    likert = tuple(
        _coerce_int(_require(obj, name), name, 0, LIKERT_MAX, LikertOutOfRange)
        for name in _LIKERT_FIELDS
    )
    confidence = _coerce_int(_require(obj, "confidence"), "confidence", 1, 5, ConfidenceOutOfRange)
    ungated = BiasVerdict(
        reasoning=reasoning,
        likert=likert,  # type: ignore[arg-type]
        script_valid=script_valid,
        confidence=confidence,
        final_score=0.0,
    )
    return apply_script_gate(ungated, weights)


def apply_script_gate(v: BiasVerdict, weights: RubricWeights = DEFAULT_WEIGHTS) -> BiasVerdict:
    """Enforce the script rule and recompute the weighted score.

    An invalid script zeroes every Likert value and the final score and
    forces confidence to 1 (which routes the item to human fallback).
    Idempotent: gating a gated verdict changes nothing.
    """
    if not v.script_valid:
        return replace(v, likert=(0, 0, 0, 0, 0), confidence=1, final_score=0.0)
    return replace(v, final_score=compute_final_score(v.likert, weights))


def serialize_bias_verdict(v: BiasVerdict) -> str:
    """Canonical JSON using the gateway schema field names."""
    record = {
        "chain_of_thought_reasoning": v.reasoning,
        "script_valid": v.script_valid,
        **{name: value for name, value in zip(_LIKERT_FIELDS, v.likert)},
        "confidence": v.confidence,
    }
    return json.dumps(record, ensure_ascii=False)


FALLBACK_CONFIDENCE_CEILING = 3


def needs_human_fallback(v: BiasVerdict) -> bool:
    """Low-confidence verdicts (<= 3) go to human re-examination."""
    return v.confidence <= FALLBACK_CONFIDENCE_CEILING


_REFUSAL_MARKERS = (
    "i cannot",
    "i can't",
    "i am unable",
    "i'm unable",
    "cannot assist",
    "as an ai",
    "দুঃখিত",
    "আমি পারব না",
    "উত্তর দিতে পারছি না",
)


def looks_like_refusal(response: str) -> bool:
    """Cheap refusal heuristic for review flags; never zeroes scores itself."""
    text = response.strip()
    if len(text.split()) < 2:
        return True
    lowered = text.casefold()
    return any(marker in lowered for marker in _REFUSAL_MARKERS)


# ---------------------------------------------------------------------------
# Model gateway


@dataclass(frozen=True)
class GatewayRequest:
    """One model call: prompt, format hint, retry and timeout budget."""

    model_name: str
    prompt: str
    response_format_hint: str = "json"
    max_attempts: int = 3
    timeout: float = 30.0

    def __post_init__(self) -> None:
        if self.max_attempts < 1:
            raise JudgingError("max_attempts must be >= 1")
        if self.response_format_hint not in ("json", "text"):
            raise JudgingError(f"unknown format hint {self.response_format_hint!r}")

    @property
    def request_hash(self) -> str:
        digest = hashlib.sha256(
            f"{self.model_name}\x1f{self.prompt}".encode("utf-8")
        ).hexdigest()
        return digest[:12]


@dataclass(frozen=True)
class GatewayAttempt:
    request_hash: str
    attempt: int
    outcome: str  # "ok", "status:<code>", "timeout", "transport"


ENV_GATEWAY_URL = "DE_GATEWAY_URL"
ENV_GATEWAY_KEY = "DE_GATEWAY_KEY"

_RETRYABLE_STATUSES = frozenset({429, 500, 502, 503, 504})


class GatewayClient:
    """HTTP chat-completion-style transport with retry and attempt logging.

    Request body: {"model", "messages", "temperature"}; response body:
    {"text": ...}. Every attempt is logged with the request hash; the
    in-memory attempt log backs both tests and run reports.
    """

    def __init__(
        self,
        url: str | None = None,
        api_key: str | None = None,
        temperature: float = 0.0,
        backoff_base: float = 0.25,
        sleep=time.sleep,
    ) -> None:
        self.url = url or os.environ.get(ENV_GATEWAY_URL, "")
        if not self.url:
            raise JudgingError(f"no gateway endpoint; set {ENV_GATEWAY_URL} or pass url")
        self.api_key = api_key if api_key is not None else os.environ.get(ENV_GATEWAY_KEY)
        self.temperature = temperature
        self.backoff_base = backoff_base
        self._sleep = sleep
        self._http = httpx.Client()
        self._log_lock = threading.Lock()
        self.attempt_log: list[GatewayAttempt] = []

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        return headers

    def _record(self, req: GatewayRequest, attempt: int, outcome: str) -> None:
        with self._log_lock:
            self.attempt_log.append(GatewayAttempt(req.request_hash, attempt, outcome))
        logger.info("gateway %s attempt %d: %s", req.request_hash, attempt, outcome)

    def call(self, req: GatewayRequest) -> str:
        """POST the request, retrying transient failures with backoff."""
        body = {
            "model": req.model_name,
            "messages": [{"role": "user", "content": req.prompt}],
            "temperature": self.temperature,
        }
        last_error: JudgingError | None = None
        for attempt in range(1, req.max_attempts + 1):
            try:
                response = self._http.post(
                    self.url, json=body, headers=self._headers(), timeout=req.timeout
                )
            except httpx.TimeoutException:
                self._record(req, attempt, "timeout")
                last_error = Timeout(f"gateway timed out after {req.timeout}s")
            except httpx.TransportError as exc:
                self._record(req, attempt, "transport")
                last_error = GatewayError(0, f"transport failure: {exc}")
            else:
                if response.status_code == 200:
                    self._record(req, attempt, "ok")
                    payload = response.json()
                    if "text" not in payload:
                        raise GatewayError(200, "response body missing 'text'")
                    return str(payload["text"])
                self._record(req, attempt, f"status:{response.status_code}")
                error = GatewayError(response.status_code, response.text[:200])
                if response.status_code not in _RETRYABLE_STATUSES:
                    raise error
                last_error = error
            if attempt < req.max_attempts:
                self._sleep(self.backoff_base * (2 ** (attempt - 1)))
        assert last_error is not None
        if req.max_attempts == 1:
            raise last_error
        raise ExhaustedRetries(
            f"{req.max_attempts} attempts failed for {req.request_hash}: {last_error}"
        ) from last_error


def call_gateway(req: GatewayRequest, client: GatewayClient | None = None) -> str:
    """Module-level convenience wrapper; builds a client from env if needed."""
    return (client or GatewayClient()).call(req)
