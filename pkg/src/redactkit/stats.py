"""Corpus-level redaction statistics and dataset inclusion rules."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Mapping, Sequence

from redactkit.core import AnnotatedDocument, EntityLabel, Record, RedactionPolicy, record_documents
from redactkit.recognize import DEFAULT_PRIORITY, resolve_overlaps

LANGUAGE_FOOTER = "UNKNOWN_LANGUAGE_NOT_CHECKED"
DEFAULT_DOMINANCE_THRESHOLD = 0.9

# Annotations are keyed by document id (``rec.id`` for plain records,
# ``rec.id#context`` / ``rec.id#question`` for QA). Values are span lists or
# AnnotatedDocuments; they are overlap-resolved before counting.
Annotations = Mapping[str, object]


def _round2(x: Decimal) -> float:
    return float(x.quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


def _spans_for(doc_id: str, annotations: Annotations, priority=DEFAULT_PRIORITY):
    spans = annotations.get(doc_id, ())
    if isinstance(spans, AnnotatedDocument):
        spans = spans.spans
    return resolve_overlaps(list(spans), priority)


def policy_spans(rec: Record, annotations: Annotations, policy: RedactionPolicy, priority=DEFAULT_PRIORITY):
    """Overlap-resolved spans of every text unit in ``rec`` that ``policy`` redacts."""
    out = []
    for doc in record_documents(rec):
        out += [s for s in _spans_for(doc.id, annotations, priority) if s.label in policy.labels]
    return out


@dataclass(frozen=True)
class PiiContentScore:
    count: int
    coverage: float = 0.0  # redacted-character fraction, for the coverage score mode

    def value(self, mode: str = "count") -> float:
        return self.count if mode == "count" else self.coverage


def pii_content_score(rec: Record, annotations: Annotations, policy: RedactionPolicy) -> PiiContentScore:
    spans = policy_spans(rec, annotations, policy)
    total = sum(len(d.text) for d in record_documents(rec))
    covered = sum(len(s) for s in spans)
    return PiiContentScore(len(spans), covered / total if total else 0.0)


def redaction_rate(corpus: Sequence[Record], annotations: Annotations, policy: RedactionPolicy) -> float:
    """Percentage of records with at least one policy-redactable span, 2 decimals."""
    if not corpus:
        raise ValueError("redaction_rate of an empty corpus")
    hit = sum(1 for rec in corpus if policy_spans(rec, annotations, policy))
    return _round2(Decimal(100 * hit) / Decimal(len(corpus)))


def entity_histogram(corpus: Sequence[Record], annotations: Annotations, policy: RedactionPolicy) -> dict[EntityLabel, int]:
    hist = {lab: 0 for lab in EntityLabel}
    for rec in corpus:
        for s in policy_spans(rec, annotations, policy):
            hist[s.label] += 1
    return hist


def dominant_entity_analysis(
    histogram: Mapping[EntityLabel, int], threshold: float = DEFAULT_DOMINANCE_THRESHOLD
) -> tuple[EntityLabel, float] | None:
    """The label whose share of all spans reaches ``threshold``, if there is one."""
    if not 0 < threshold <= 1:
        raise ValueError("threshold must be in (0, 1]")
    total = sum(histogram.values())
    if total == 0:
        return None
    rank = {lab: i for i, lab in enumerate(DEFAULT_PRIORITY)}
    label = min(histogram, key=lambda lab: (-histogram[lab], rank[lab]))
    top = histogram[label]
    # integer comparison avoids float noise at the threshold
    if Decimal(top) >= Decimal(str(threshold)) * total:
        return label, top / total
    return None


@dataclass(frozen=True)
class CorpusStats:
    n_records: int
    redaction_rate_pct: float
    histogram: Mapping[EntityLabel, int]
    per_record_scores: Mapping[str, PiiContentScore] = field(default_factory=dict)

    @property
    def total_spans(self) -> int:
        return sum(self.histogram.values())


def corpus_stats(corpus: Sequence[Record], annotations: Annotations, policy: RedactionPolicy) -> CorpusStats:
    scores = {rec.id: pii_content_score(rec, annotations, policy) for rec in corpus}
    return CorpusStats(
        n_records=len(corpus),
        redaction_rate_pct=redaction_rate(corpus, annotations, policy),
        histogram=entity_histogram(corpus, annotations, policy),
        per_record_scores=scores,
    )


@dataclass(frozen=True)
class Inclusion:
    decision: str  # INCLUDE | EXCLUDE
    reason: str | None = None  # ZeroPII | DominantEntity
    label: EntityLabel | None = None
    share: float | None = None

    @property
    def included(self) -> bool:
        return self.decision == "INCLUDE"

    def to_json(self) -> dict:
        out = {"decision": self.decision, "reason": self.reason, "language_check": LANGUAGE_FOOTER}
        if self.label is not None:
            out["label"] = self.label.value
            out["share"] = self.share
        return out


def dataset_inclusion(stats: CorpusStats, threshold: float = DEFAULT_DOMINANCE_THRESHOLD) -> Inclusion:
    """Apply the zero-PII and single-dominant-entity exclusion rules.

    ``stats`` is expected to come from a FULL policy. Language screening is
    not performed; reports carry ``UNKNOWN_LANGUAGE_NOT_CHECKED``.
    """
    if stats.total_spans == 0:
        return Inclusion("EXCLUDE", "ZeroPII")
    dom = dominant_entity_analysis(stats.histogram, threshold)
    if dom is not None:
        return Inclusion("EXCLUDE", "DominantEntity", dom[0], dom[1])
    return Inclusion("INCLUDE")


def stats_report(stats: CorpusStats, threshold: float = DEFAULT_DOMINANCE_THRESHOLD, score_mode: str = "count") -> dict:
    dom = dominant_entity_analysis(stats.histogram, threshold)
    return {
        "n_records": stats.n_records,
        "rate_pct": stats.redaction_rate_pct,
        "histogram": {lab.value: n for lab, n in stats.histogram.items()},
        "dominant": {"label": dom[0].value, "share": dom[1]} if dom else None,
        "inclusion": dataset_inclusion(stats, threshold).to_json(),
        "score_mode": score_mode,
        "per_record": [{"id": rid, "score": sc.value(score_mode)} for rid, sc in stats.per_record_scores.items()],
        "footer": LANGUAGE_FOOTER,
    }


def per_record_csv(stats: CorpusStats, score_mode: str = "count") -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["id", "score"])
    for rid, sc in stats.per_record_scores.items():
        w.writerow([rid, sc.value(score_mode)])
    return buf.getvalue()
