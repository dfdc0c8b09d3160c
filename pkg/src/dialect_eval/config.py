"""Run configuration: one structured YAML/JSON file, env-overridable creds.

The config hash stamped onto every log row covers the evaluation-relevant
sections only, so cosmetic changes (paths, parallelism) do not invalidate
resume state.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .judging import ENV_GATEWAY_KEY, ENV_GATEWAY_URL, DEFAULT_STATEMENTS, RubricWeights
from .retrieval import SHORT_PROFILE, STANDARD_PROFILE, WeightProfile


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class RetrievalConfig:
    k1: float = 1.2
    b: float = 0.75
    standard_profile: WeightProfile = STANDARD_PROFILE
    short_profile: WeightProfile = SHORT_PROFILE
    fewshot_k: int = 5


@dataclass(frozen=True)
class EmbeddingConfig:
    provider: str = "synthetic"  # synthetic | gateway
    model: str = "mock-embed"
    dim: int = 32
    batch_size: int = 32


@dataclass(frozen=True)
class JudgeConfig:
    primary: str = "mock-judge-a"
    secondary: tuple[str, ...] = ("mock-judge-b",)
    temperature: float = 0.0
    max_attempts: int = 3
    timeout: float = 30.0

    @property
    def all_judges(self) -> tuple[str, ...]:
        return (self.primary, *self.secondary)


@dataclass(frozen=True)
class Config:
    retrieval: RetrievalConfig = field(default_factory=RetrievalConfig)
    embeddings: EmbeddingConfig = field(default_factory=EmbeddingConfig)
    judges: JudgeConfig = field(default_factory=JudgeConfig)
    weights: RubricWeights = field(default_factory=RubricWeights)
    statements: dict[str, str] = field(default_factory=lambda: dict(DEFAULT_STATEMENTS))
    translator_model: str = "mock-translator"
    gateway_url: str = ""
    gateway_key: str = ""
    review_token: str = ""
    cbs_threshold: float = 4.0
    parallelism: int = 8

    @property
    def config_hash(self) -> str:
        """Hash of the evaluation-relevant configuration."""
        payload = {
            "retrieval": {
                "k1": self.retrieval.k1,
                "b": self.retrieval.b,
                "standard": _profile_dict(self.retrieval.standard_profile),
                "short": _profile_dict(self.retrieval.short_profile),
                "fewshot_k": self.retrieval.fewshot_k,
            },
            "embeddings": {
                "provider": self.embeddings.provider,
                "model": self.embeddings.model,
                "dim": self.embeddings.dim,
            },
            "judges": {
                "primary": self.judges.primary,
                "secondary": list(self.judges.secondary),
                "temperature": self.judges.temperature,
            },
            "weights": self.weights.as_dict(),
            "statements": self.statements,
            "translator_model": self.translator_model,
            "cbs_threshold": self.cbs_threshold,
        }
        blob = json.dumps(payload, sort_keys=True, ensure_ascii=False).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()[:16]


def _profile_dict(p: WeightProfile) -> dict:
    return {
        "dense_w": p.dense_w,
        "sparse_w": p.sparse_w,
        "pool_k": p.pool_k,
        "district_bonus": p.district_bonus,
        "char_bonus_w": p.char_bonus_w,
    }


def _profile_from(data: dict, base: WeightProfile, name: str) -> WeightProfile:
    return WeightProfile(
        dense_w=float(data.get("dense_w", base.dense_w)),
        sparse_w=float(data.get("sparse_w", base.sparse_w)),
        pool_k=int(data.get("pool_k", base.pool_k)),
        district_bonus=float(data.get("district_bonus", base.district_bonus)),
        char_bonus_w=float(data.get("char_bonus_w", base.char_bonus_w)),
        name=name,
    )


def load_config(path: str | Path | None = None) -> Config:
    """Load a config file (YAML or JSON); environment overrides credentials."""
    data: dict = {}
    if path is not None:
        raw = Path(path).read_text("utf-8")
        loaded = yaml.safe_load(raw)
        if loaded is None:
            loaded = {}
        if not isinstance(loaded, dict):
            raise ConfigError(f"config root must be a mapping, got {type(loaded).__name__}")
        data = loaded

    retrieval_data = data.get("retrieval", {})
    bonus = retrieval_data.get("bonus", {})
    profiles = retrieval_data.get("profiles", {})
    std_data = dict(profiles.get("standard", {}))
    short_data = dict(profiles.get("short", {}))
    for profile_data in (std_data, short_data):
        for key in ("district", "char"):
            if key in bonus:
                profile_data.setdefault(
                    {"district": "district_bonus", "char": "char_bonus_w"}[key],
                    float(bonus[key]),
                )
    retrieval = RetrievalConfig(
        k1=float(retrieval_data.get("k1", 1.2)),
        b=float(retrieval_data.get("b", 0.75)),
        standard_profile=_profile_from(std_data, STANDARD_PROFILE, "standard"),
        short_profile=_profile_from(short_data, SHORT_PROFILE, "short"),
        fewshot_k=int(retrieval_data.get("fewshot_k", 5)),
    )

    embeddings_data = data.get("embeddings", {})
    embeddings = EmbeddingConfig(
        provider=str(embeddings_data.get("provider", "synthetic")),
        model=str(embeddings_data.get("model", "mock-embed")),
        dim=int(embeddings_data.get("dim", 32)),
        batch_size=int(embeddings_data.get("batch_size", 32)),
    )
    if embeddings.provider not in ("synthetic", "gateway"):
        raise ConfigError(f"unknown embedding provider {embeddings.provider!r}")

    judges_data = data.get("judges", {})
    judges = JudgeConfig(
        primary=str(judges_data.get("primary", "mock-judge-a")),
        secondary=tuple(judges_data.get("secondary", ["mock-judge-b"])),
        temperature=float(judges_data.get("temperature", 0.0)),
        max_attempts=int(judges_data.get("max_attempts", 3)),
        timeout=float(judges_data.get("timeout", 30.0)),
    )

    weights_data = data.get("weights", {})
    weights = RubricWeights(
        comprehension=float(weights_data.get("comprehension", 3.0)),
        factual=float(weights_data.get("factual", 2.5)),
        completeness=float(weights_data.get("completeness", 2.0)),
        clarity=float(weights_data.get("clarity", 1.5)),
        length=float(weights_data.get("length", 1.0)),
    )

    statements = dict(DEFAULT_STATEMENTS)
    statements.update({str(k): str(v) for k, v in data.get("statements", {}).items()})

    return Config(
        retrieval=retrieval,
        embeddings=embeddings,
        judges=judges,
        weights=weights,
        statements=statements,
        translator_model=str(data.get("translator_model", "mock-translator")),
        gateway_url=os.environ.get(ENV_GATEWAY_URL, str(data.get("gateway_url", ""))),
        gateway_key=os.environ.get(ENV_GATEWAY_KEY, str(data.get("gateway_key", ""))),
        review_token=os.environ.get("DE_REVIEW_TOKEN", str(data.get("review_token", ""))),
        cbs_threshold=float(data.get("cbs_threshold", 4.0)),
        parallelism=int(data.get("parallelism", 8)),
    )
