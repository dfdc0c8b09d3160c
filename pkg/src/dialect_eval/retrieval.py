"""Hybrid dense+sparse retrieval over sentence pairs.

Dense search is an exact flat cosine index (corpora here are small enough
that approximate structures would only hurt testability). Sparse search is
Okapi BM25. Query length picks the weight profile; a token-overlap deep
search kicks in when the hybrid pool lacks diversity. All ties break on
ascending pair id so rankings are reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from .corpus import Dialect, SentencePair, TaggedQuery, match_key, tokenize
from .textmetrics import DimensionMismatch, ZeroVector, levenshtein_similarity

UNIT_NORM_TOLERANCE = 1e-6


class RetrievalError(Exception):
    """Base class for retrieval errors."""


class MissingEmbedding(RetrievalError):
    """A sentence pair has no embedding vector."""


class NoCandidates(RetrievalError):
    """Prompt assembly requires at least one candidate."""


@dataclass(frozen=True)
class WeightProfile:
    """Blend weights and pool size for one query regime."""

    dense_w: float
    sparse_w: float
    pool_k: int
    district_bonus: float = 0.1
    char_bonus_w: float = 0.1
    name: str = ""

    def __post_init__(self) -> None:
        if not math.isclose(self.dense_w + self.sparse_w, 1.0, abs_tol=1e-9):
            raise RetrievalError(
                f"dense_w + sparse_w must equal 1, got {self.dense_w + self.sparse_w}"
            )
        if not (0.0 <= self.dense_w <= 1.0 and 0.0 <= self.sparse_w <= 1.0):
            raise RetrievalError("weights must lie in [0, 1]")
        if self.pool_k < 1:
            raise RetrievalError("pool_k must be positive")
        if self.district_bonus < 0 or self.char_bonus_w < 0:
            raise RetrievalError("bonuses must be non-negative")


# Standard queries lean dense; short queries lean sparse and widen the pool.
STANDARD_PROFILE = WeightProfile(dense_w=0.7, sparse_w=0.3, pool_k=10, name="standard")
SHORT_PROFILE = WeightProfile(dense_w=0.4, sparse_w=0.6, pool_k=25, name="short")


@dataclass(frozen=True)
class Candidate:
    """One scored retrieval candidate."""

    pair_id: str
    dense_sim: float = 0.0
    sparse_score: float = 0.0
    sparse_scaled: float = 0.0
    district_match: bool = False
    char_sim: float = 0.0
    blended: float = 0.0


class DenseIndex:
    """Flat cosine index over unit-normalized embedding vectors."""

    def __init__(self, ids: Sequence[str], vectors: np.ndarray) -> None:
        vectors = np.asarray(vectors, dtype=float)
        if vectors.ndim != 2 or vectors.shape[0] != len(ids):
            raise DimensionMismatch("one vector row per id required")
        norms = np.linalg.norm(vectors, axis=1)
        if np.any(np.abs(norms - 1.0) > UNIT_NORM_TOLERANCE):
            raise RetrievalError("stored vectors must be unit-normalized")
        self.ids = list(ids)
        self.vectors = vectors
        self._row_by_id = {pair_id: row for row, pair_id in enumerate(self.ids)}

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return len(self.ids)

    def search(self, query_vec: Sequence[float], k: int) -> list[tuple[str, float]]:
        """Top-k by cosine, descending; ties break on ascending pair id."""
        if k < 1:
            raise RetrievalError("k must be >= 1")
        q = np.asarray(query_vec, dtype=float)
        if q.shape != (self.dim,):
            raise DimensionMismatch(f"query dim {q.shape} != index dim ({self.dim},)")
        norm = float(np.linalg.norm(q))
        if norm == 0.0:
            raise ZeroVector("query vector has zero norm")
        sims = self.vectors @ (q / norm)
        order = sorted(range(len(self.ids)), key=lambda i: (-sims[i], self.ids[i]))
        return [(self.ids[i], float(sims[i])) for i in order[:k]]

    def similarity(self, query_vec: Sequence[float], pair_id: str) -> float:
        q = np.asarray(query_vec, dtype=float)
        q = q / np.linalg.norm(q)
        return float(self.vectors[self._row_by_id[pair_id]] @ q)


class SparseIndex:
    """Okapi BM25 index over whitespace tokens of the matching keys."""

    def __init__(self, k1: float = 1.2, b: float = 0.75) -> None:
        self.k1 = k1
        self.b = b
        self.postings: dict[str, dict[str, int]] = {}
        self.doc_lengths: dict[str, int] = {}
        self.avgdl = 0.0

    @classmethod
    def build(cls, docs: Mapping[str, Sequence[str]], k1: float = 1.2, b: float = 0.75) -> "SparseIndex":
        index = cls(k1=k1, b=b)
        for doc_id, tokens in docs.items():
            index.doc_lengths[doc_id] = len(tokens)
            for token in tokens:
                index.postings.setdefault(token, {})
                index.postings[token][doc_id] = index.postings[token].get(doc_id, 0) + 1
        if index.doc_lengths:
            index.avgdl = sum(index.doc_lengths.values()) / len(index.doc_lengths)
        return index

    def __len__(self) -> int:
        return len(self.doc_lengths)

    def idf(self, term: str) -> float:
        df = len(self.postings.get(term, {}))
        n = len(self.doc_lengths)
        return math.log(1.0 + (n - df + 0.5) / (df + 0.5))

    def score(self, doc_id: str, query_tokens: Sequence[str]) -> float:
        dl = self.doc_lengths.get(doc_id, 0)
        if dl == 0 or self.avgdl == 0:
            return 0.0
        length_norm = self.k1 * (1.0 - self.b + self.b * dl / self.avgdl)
        total = 0.0
        for token in query_tokens:
            tf = self.postings.get(token, {}).get(doc_id, 0)
            if tf == 0:
                continue
            total += self.idf(token) * tf * (self.k1 + 1.0) / (tf + length_norm)
        return total

    def search(self, query_tokens: Sequence[str], k: int) -> list[tuple[str, float]]:
        """Top-k matching docs by BM25, descending; no matches -> empty."""
        if k < 1:
            raise RetrievalError("k must be >= 1")
        matched: set[str] = set()
        for token in query_tokens:
            matched.update(self.postings.get(token, {}))
        scored = [(doc_id, self.score(doc_id, query_tokens)) for doc_id in matched]
        scored.sort(key=lambda item: (-item[1], item[0]))
        return scored[:k]


def build_indexes(
    pairs: Sequence[SentencePair],
    embeddings: Mapping[str, Sequence[float]],
    k1: float = 1.2,
    b: float = 0.75,
) -> tuple[DenseIndex, SparseIndex]:
    """Build the dense and sparse indexes for a corpus.

    Every pair id must map to an embedding of uniform dimension; vectors
    are unit-normalized on ingest (zero vectors are rejected).
    """
    ids = [pair.id for pair in pairs]
    dim: int | None = None
    rows = []
    for pair in pairs:
        if pair.id not in embeddings:
            raise MissingEmbedding(f"no embedding for pair {pair.id!r}")
        vec = np.asarray(embeddings[pair.id], dtype=float)
        if vec.ndim != 1:
            raise DimensionMismatch(f"embedding for {pair.id!r} is not a vector")
        if dim is None:
            dim = vec.shape[0]
        elif vec.shape[0] != dim:
            raise DimensionMismatch(
                f"embedding for {pair.id!r} has dim {vec.shape[0]}, expected {dim}"
            )
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:
            raise ZeroVector(f"embedding for {pair.id!r} has zero norm")
        rows.append(vec / norm)
    dense = DenseIndex(ids, np.vstack(rows) if rows else np.zeros((0, dim or 0)))
    sparse = SparseIndex.build(
        {pair.id: tokenize(match_key(pair.standard)) for pair in pairs}, k1=k1, b=b
    )
    return dense, sparse


def search_dense(index: DenseIndex, query_vec: Sequence[float], k: int) -> list[tuple[str, float]]:
    return index.search(query_vec, k)


def search_sparse(index: SparseIndex, query_tokens: Sequence[str], k: int) -> list[tuple[str, float]]:
    return index.search(query_tokens, k)


def blended_score(c: Candidate, profile: WeightProfile) -> float:
    """Deterministic blend of the hybrid signals plus the two bonuses.

    The candidate's sparse component must already be min-max scaled onto
    [0,1] within its pool (BM25 is unbounded, cosine is not).
    """
    score = profile.dense_w * c.dense_sim + profile.sparse_w * c.sparse_scaled
    if c.district_match:
        score += profile.district_bonus
    score += profile.char_bonus_w * c.char_sim
    return score


def scale_sparse(candidates: list[Candidate]) -> list[Candidate]:
    """Min-max scale raw BM25 scores onto [0,1] within the pool."""
    if not candidates:
        return []
    scores = [c.sparse_score for c in candidates]
    low, high = min(scores), max(scores)
    span = high - low
    return [
        replace(c, sparse_scaled=0.0 if span == 0.0 else (c.sparse_score - low) / span)
        for c in candidates
    ]


def deep_search(
    q: TaggedQuery,
    pairs: Sequence[SentencePair],
    needed: int,
) -> list[Candidate]:
    """Token-overlap fallback used when hybrid retrieval lacks diversity.

    Each pair is scored by |query tokens ∩ standard tokens| / |query tokens|
    over matching keys, with character similarity breaking ties (and
    carrying the ranking outright when nothing overlaps).
    """
    if needed < 1:
        raise RetrievalError("needed must be >= 1")
    query_tokens = set(q.key_tokens)
    query_key = q.key
    scored: list[tuple[float, float, str, Candidate]] = []
    for pair in pairs:
        pair_key = match_key(pair.standard)
        pair_tokens = set(tokenize(pair_key))
        overlap = len(query_tokens & pair_tokens) / len(query_tokens) if query_tokens else 0.0
        char_sim = levenshtein_similarity(query_key, pair_key)
        candidate = Candidate(pair_id=pair.id, char_sim=char_sim, blended=overlap)
        scored.append((overlap, char_sim, pair.id, candidate))
    scored.sort(key=lambda item: (-item[0], -item[1], item[2]))
    return [candidate for _, _, _, candidate in scored[:needed]]


@dataclass
class RetrievalTrace:
    """Diagnostics for one hybrid retrieval call."""

    profile: str = ""
    pool_k: int = 0
    dense_pool: list[str] = field(default_factory=list)
    sparse_pool: list[str] = field(default_factory=list)
    union_size: int = 0
    deep_search_used: bool = False


class HybridRetriever:
    """Adaptive hybrid retrieval with deep-search fallback and blending."""

    def __init__(
        self,
        pairs: Sequence[SentencePair],
        dense: DenseIndex,
        sparse: SparseIndex,
        standard_profile: WeightProfile = STANDARD_PROFILE,
        short_profile: WeightProfile = SHORT_PROFILE,
    ) -> None:
        self.pairs = list(pairs)
        self.pairs_by_id = {pair.id: pair for pair in self.pairs}
        self.dense = dense
        self.sparse = sparse
        self.standard_profile = standard_profile
        self.short_profile = short_profile

    def profile_for(self, q: TaggedQuery) -> WeightProfile:
        return self.short_profile if q.is_short else self.standard_profile

    def retrieve(
        self,
        q: TaggedQuery,
        query_vec: Sequence[float],
        district: Dialect,
        k: int,
        trace: RetrievalTrace | None = None,
    ) -> list[Candidate]:
        """Top-k candidates ranked by blended score, ties on ascending id."""
        if k < 1:
            raise RetrievalError("k must be >= 1")
        profile = self.profile_for(q)
        dense_hits = self.dense.search(query_vec, profile.pool_k)
        sparse_hits = self.sparse.search(q.key_tokens, profile.pool_k)
        dense_sims = dict(dense_hits)
        sparse_scores = dict(sparse_hits)
        pool_ids = set(dense_sims) | set(sparse_scores)

        deep_used = False
        if len(pool_ids) < 2:
            deep_used = True
            needed = max(profile.pool_k, k)
            pool_ids.update(c.pair_id for c in deep_search(q, self.pairs, needed))

        if trace is not None:
            trace.profile = profile.name
            trace.pool_k = profile.pool_k
            trace.dense_pool = [pid for pid, _ in dense_hits]
            trace.sparse_pool = [pid for pid, _ in sparse_hits]
            trace.union_size = len(set(dense_sims) | set(sparse_scores))
            trace.deep_search_used = deep_used

        query_key = q.key
        candidates = []
        for pair_id in pool_ids:
            pair = self.pairs_by_id[pair_id]
            candidates.append(
                Candidate(
                    pair_id=pair_id,
                    dense_sim=dense_sims.get(pair_id, self.dense.similarity(query_vec, pair_id)),
                    sparse_score=sparse_scores.get(pair_id, self.sparse.score(pair_id, q.key_tokens)),
                    district_match=pair.district is district,
                    char_sim=levenshtein_similarity(query_key, match_key(pair.standard)),
                )
            )
        candidates = scale_sparse(candidates)
        candidates = [replace(c, blended=blended_score(c, profile)) for c in candidates]
        candidates.sort(key=lambda c: (-c.blended, c.pair_id))
        return candidates[:k]


DEFAULT_FEWSHOT_TEMPLATE = """You translate standard Bengali sentences into the {district} dialect.
Match the vocabulary, morphology, and tone shown in the examples.
Reply with the translated sentence only.

{examples}

Standard: {query}
{district}:"""


def build_fewshot_prompt(
    cands: Sequence[Candidate],
    q: TaggedQuery,
    district: Dialect,
    pairs_by_id: Mapping[str, SentencePair],
    template: str = DEFAULT_FEWSHOT_TEMPLATE,
) -> str:
    """Assemble the few-shot translation prompt, examples in rank order.

    Byte-deterministic for fixed inputs; raises NoCandidates on an empty
    candidate list.
    """
    if not cands:
        raise NoCandidates("at least one retrieval candidate is required")
    blocks = []
    for candidate in cands:
        pair = pairs_by_id[candidate.pair_id]
        blocks.append(f"Standard: {pair.standard}\n{district.label}: {pair.dialect}")
    return template.format(
        district=district.label,
        examples="\n\n".join(blocks),
        query=q.normalized,
    )
