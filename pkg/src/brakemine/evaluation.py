"""Scoring of pipeline output against pair-level annotations.

Covers per-category and overall precision/recall/F1 for classification over
the four in-prompt categories, precision/recall for key-object candidates,
and P@k / R@k for similarity retrieval.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .koi import KeyPair
from .model import PROMPT_CATEGORIES, Annotation, ScenarioCategory, ScenarioRecord, ValidationError
from .scenario_store import RankedResult

Key = tuple[str, str]


@dataclass(frozen=True)
class MetricTriple:
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int
    precision_undefined: bool = False

    def to_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "precision_undefined": self.precision_undefined,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MetricTriple":
        return cls(d["precision"], d["recall"], d["f1"], d["tp"], d["fp"], d["fn"],
                   d.get("precision_undefined", False))


def _triple(tp: int, fp: int, fn: int) -> MetricTriple:
    undefined = (tp + fp) == 0
    precision = 0.0 if undefined else tp / (tp + fp)
    recall = 0.0 if (tp + fn) == 0 else tp / (tp + fn)
    f1 = 0.0 if (precision + recall) == 0 else 2 * precision * recall / (precision + recall)
    return MetricTriple(precision, recall, f1, tp, fp, fn, undefined)


@dataclass
class EvalReport:
    per_category: dict[str, MetricTriple] = field(default_factory=dict)
    overall: MetricTriple | None = None
    koi: dict[str, float] | None = None
    retrieval: dict[str, dict[str, float]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "per_category": {k: v.to_dict() for k, v in self.per_category.items()},
            "overall": self.overall.to_dict() if self.overall else None,
            "koi": self.koi,
            "retrieval": self.retrieval,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        return cls(
            per_category={k: MetricTriple.from_dict(v) for k, v in d.get("per_category", {}).items()},
            overall=MetricTriple.from_dict(d["overall"]) if d.get("overall") else None,
            koi=d.get("koi"),
            retrieval=d.get("retrieval", {}),
        )

    def save(self, path: str | Path) -> None:
        with Path(path).open("w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path: str | Path) -> "EvalReport":
        with Path(path).open("r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def score_classification(
    records: list[ScenarioRecord], annotations: list[Annotation]
) -> EvalReport:
    """Confusion metrics over the four in-prompt categories.

    A prediction is a TP of its category iff an annotation with the same
    (log_id, guest_id) and the same category exists; any other prediction of
    that category is an FP; annotated pairs of a category with no matching
    prediction are FNs.  Overall aggregates micro-style over the four
    categories.
    """
    predicted: dict[Key, ScenarioCategory] = {}
    for record in records:
        if record.key in predicted:
            raise ValidationError(f"records: duplicate predicted key {record.key}")
        predicted[record.key] = record.category
    truth: dict[Key, ScenarioCategory] = {a.key: a.scenario_category for a in annotations}

    report = EvalReport()
    total_tp = total_fp = total_fn = 0
    for category in PROMPT_CATEGORIES:
        tp = sum(1 for k, c in predicted.items() if c == category and truth.get(k) == category)
        fp = sum(1 for k, c in predicted.items() if c == category and truth.get(k) != category)
        fn = sum(1 for k, c in truth.items() if c == category and predicted.get(k) != category)
        report.per_category[category.value] = _triple(tp, fp, fn)
        total_tp, total_fp, total_fn = total_tp + tp, total_fp + fp, total_fn + fn
    report.overall = _triple(total_tp, total_fp, total_fn)
    return report


def score_koi(pairs: list[KeyPair], annotations: list[Annotation]) -> dict[str, float]:
    """Candidate precision/recall; relevant means annotated != not_relevant.

    No per-category precision is reported: candidates carry no category.
    """
    candidate_keys = {p.key for p in pairs}
    relevant = {
        a.key for a in annotations if a.scenario_category != ScenarioCategory.NOT_RELEVANT
    }
    hit = len(candidate_keys & relevant)
    precision = hit / len(candidate_keys) if candidate_keys else 0.0
    recall = hit / len(relevant) if relevant else 0.0
    return {"precision": precision, "recall": recall}


def score_retrieval(
    ranked: list[RankedResult], relevant_keys: set[Key], k_p: int = 10, k_r: int = 50
) -> dict[str, float]:
    """P@k_p and R@k_r of a ranked result list against a relevant key set.

    The precision denominator truncates to the list length when fewer than
    k_p results exist, so tiny databases are not penalized.
    """
    if not relevant_keys:
        raise ValidationError("no_relevant: relevant key set is empty")
    top_p = ranked[:k_p]
    top_r = ranked[:k_r]
    p_hits = sum(1 for r in top_p if r.record.key in relevant_keys)
    r_hits = sum(1 for r in top_r if r.record.key in relevant_keys)
    denom = min(k_p, len(ranked))
    return {
        f"p_at_{k_p}": p_hits / denom if denom else 0.0,
        f"r_at_{k_r}": r_hits / len(relevant_keys),
    }
