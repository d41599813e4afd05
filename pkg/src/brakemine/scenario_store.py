"""Scenario database with dual-path retrieval.

Records are queryable either by exact category match (insertion order) or by
cosine similarity against a free-form text query (exhaustive flat scan; at
desk scale an approximate index buys nothing and exact ranking keeps results
reproducible).  Ties in similarity break on ascending (log_id, guest_id).
"""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .llm_gateway import EmbeddingProvider, embed
from .model import ScenarioCategory, ScenarioRecord, ValidationError, load_records, save_records


class DuplicateKeyError(ValueError):
    """A record with the same (log_id, guest_id) already exists."""


@dataclass(frozen=True)
class RankedResult:
    record: ScenarioRecord
    score: float


class ScenarioDb:
    """In-memory scenario database backed by the record JSONL format."""

    def __init__(self, dimension: int | None = None):
        self.dimension = dimension
        self._records: list[ScenarioRecord] = []
        self._by_key: dict[tuple[str, str], int] = {}
        self._by_category: dict[ScenarioCategory, list[int]] = {}

    def __len__(self) -> int:
        return len(self._records)

    @property
    def records(self) -> list[ScenarioRecord]:
        return list(self._records)

    def insert(self, record: ScenarioRecord) -> None:
        if record.key in self._by_key:
            raise DuplicateKeyError(f"record {record.key} already stored")
        if self.dimension is None:
            self.dimension = len(record.embedding)
        elif len(record.embedding) != self.dimension:
            raise ValidationError(
                f"embedding: dimension {len(record.embedding)} != {self.dimension}"
            )
        norm = float(np.linalg.norm(record.embedding))
        if abs(norm - 1.0) > 1e-6:
            raise ValidationError(f"embedding: norm {norm} is not unit length")
        self._by_key[record.key] = len(self._records)
        self._by_category.setdefault(record.category, []).append(len(self._records))
        self._records.append(record)

    def get(self, log_id: str, guest_id: str) -> ScenarioRecord | None:
        idx = self._by_key.get((log_id, guest_id))
        return self._records[idx] if idx is not None else None

    def retrieve_by_category(self, category: ScenarioCategory) -> list[ScenarioRecord]:
        return [self._records[i] for i in self._by_category.get(category, [])]

    def retrieve_by_similarity(
        self, query_text: str, k: int, embed_provider: EmbeddingProvider
    ) -> list[RankedResult]:
        """Top-k records by cosine similarity to the embedded query."""
        if k < 1:
            raise ValidationError("k: must be >= 1")
        if not query_text:
            raise ValidationError("query_text: must be non-empty")
        if not self._records:
            return []
        query = embed(query_text, embed_provider)
        if len(query) != self.dimension:
            raise ValidationError(f"query embedding dimension {len(query)} != {self.dimension}")
        matrix = np.stack([r.embedding for r in self._records])
        scores = matrix @ query  # embeddings are unit-norm, so this is cosine
        order = sorted(range(len(scores)), key=lambda i: (-scores[i], self._records[i].key))
        return [RankedResult(self._records[i], float(scores[i])) for i in order[:k]]

    def save(self, path: str | Path) -> None:
        """Atomic whole-file write: temp file in place, then rename."""
        path = Path(path)
        fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
        os.close(fd)
        try:
            save_records(self._records, tmp_name)
            os.replace(tmp_name, path)
        except BaseException:
            if os.path.exists(tmp_name):
                os.unlink(tmp_name)
            raise

    @classmethod
    def load(cls, path: str | Path) -> "ScenarioDb":
        db = cls()
        for record in load_records(path):
            db.insert(record)
        return db
