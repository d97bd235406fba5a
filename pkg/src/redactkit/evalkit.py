"""Score predictions and quantify how much redaction costs a model."""

from __future__ import annotations

import enum
import json
from collections import Counter
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Iterable, Mapping, Sequence

from redactkit.core import iter_jsonl


@dataclass(frozen=True)
class PredictionRecord:
    id: str
    prediction: str


class ScoringError(ValueError):
    pass


def normalize(text: str) -> str:
    return " ".join(text.casefold().split())


def _index_predictions(preds: Iterable, gold_ids: Iterable[str]) -> dict[str, str]:
    if isinstance(preds, Mapping):
        items = list(preds.items())
    else:
        items = [(p.id, p.prediction) if isinstance(p, PredictionRecord) else (p["id"], p["prediction"]) for p in preds]
    out: dict[str, str] = {}
    for rid, pred in items:
        if rid in out:
            raise ScoringError(f"duplicate prediction for id {rid}")
        out[rid] = pred
    gold_ids = list(gold_ids)
    known = set(gold_ids)
    extra = [rid for rid in out if rid not in known]
    if extra:
        raise ScoringError(f"prediction for unknown id {extra[0]}")
    missing = [rid for rid in gold_ids if rid not in out]
    if missing:
        raise ScoringError(f"missing prediction for id {missing[0]}")
    return out


def score_accuracy(preds, golds: Mapping[str, str], normalizer=normalize) -> float:
    """Percentage of exact matches after normalization."""
    if not golds:
        raise ScoringError("no gold records")
    p = _index_predictions(preds, golds)
    hits = sum(normalizer(p[rid]) == normalizer(g) for rid, g in golds.items())
    return 100.0 * hits / len(golds)


def token_f1(prediction: str, gold: str) -> float:
    pt = normalize(prediction).split()
    gt = normalize(gold).split()
    if not pt or not gt:
        return float(pt == gt)
    common = sum((Counter(pt) & Counter(gt)).values())
    if common == 0:
        return 0.0
    precision = common / len(pt)
    recall = common / len(gt)
    return 2 * precision * recall / (precision + recall)


def score_token_f1(preds, golds: Mapping[str, Sequence[str]]) -> float:
    """Mean best-match token F1 over records, as a percentage.

    A gold entry with no answers is unanswerable: an empty prediction scores 1.
    """
    if not golds:
        raise ScoringError("no gold records")
    p = _index_predictions(preds, golds)
    total = 0.0
    for rid, answers in golds.items():
        answers = [a for a in answers if normalize(a)]
        if not answers:
            total += float(not normalize(p[rid]))
        else:
            total += max(token_f1(p[rid], a) for a in answers)
    return 100.0 * total / len(golds)


def load_predictions(path) -> list[PredictionRecord]:
    return [PredictionRecord(o["id"], o["prediction"]) for o in iter_jsonl(path)]


# --- impact ---------------------------------------------------------------


def _dec(x) -> Decimal:
    return x if isinstance(x, Decimal) else Decimal(str(x))


def relative_impact(none_score, redact_score) -> float:
    """Relative drop ``100 * (none - redact) / none``, rounded half-up to 1 decimal."""
    none_d, red_d = _dec(none_score), _dec(redact_score)
    if none_d <= 0:
        raise ValueError("baseline (None) score must be positive")
    raw = Decimal(100) * (none_d - red_d) / none_d
    return float(raw.quantize(Decimal("0.1"), rounding=ROUND_HALF_UP))


class Severity(str, enum.Enum):
    LOW = "LOW"
    MODERATE = "MODERATE"
    HIGH = "HIGH"

    def __str__(self) -> str:
        return self.value


_ORDER = {Severity.LOW: 0, Severity.MODERATE: 1, Severity.HIGH: 2}


def severity_of(impact: float) -> Severity:
    if impact < 10:
        return Severity.LOW
    if impact <= 25:
        return Severity.MODERATE
    return Severity.HIGH


def classify_impact(impacts: Mapping[str, float] | Sequence[float]) -> Severity:
    """Majority vote of per-model severities; ties go to the more severe class."""
    values = list(impacts.values()) if isinstance(impacts, Mapping) else list(impacts)
    if not values:
        raise ValueError("classify_impact needs at least one model impact")
    votes = Counter(severity_of(v) for v in values)
    return max(votes, key=lambda s: (votes[s], _ORDER[s]))


@dataclass(frozen=True)
class ImpactRecord:
    dataset: str
    model: str
    none_score: float
    redact_score: float
    impact_pct: float
    severity: Severity

    @classmethod
    def compute(cls, dataset: str, model: str, none_score: float, redact_score: float) -> "ImpactRecord":
        imp = relative_impact(none_score, redact_score)
        return cls(dataset, model, none_score, redact_score, imp, severity_of(imp))

    def to_json(self) -> dict:
        return {
            "dataset": self.dataset,
            "model": self.model,
            "none_score": self.none_score,
            "redact_score": self.redact_score,
            "impact_pct": self.impact_pct,
            "severity": self.severity.value,
        }


# --- train/test pairings --------------------------------------------------

PAIRINGS = ("None/None", "Redact/Redact", "None/Redact")
BASELINE = "None/None"


@dataclass(frozen=True)
class PairingReport:
    rows: tuple[tuple[str, float, float | None], ...]  # pairing, score, delta vs baseline

    def to_json(self) -> dict:
        return {
            "baseline": BASELINE,
            "pairings": {p: {"score": s, "delta": d} for p, s, d in self.rows},
        }

    def render(self) -> str:
        lines = [f"{'pairing':<14} {'score':>7} {'delta':>7}"]
        for p, s, d in self.rows:
            lines.append(f"{p:<14} {s:>7.1f} {'' if d is None else format(d, '+.1f'):>7}")
        return "\n".join(lines) + "\n"


def pairing_report(scores: Mapping[str, float]) -> PairingReport:
    unknown = set(scores) - set(PAIRINGS)
    if unknown:
        raise ValueError(f"unknown pairing(s): {sorted(unknown)}")
    if BASELINE not in scores:
        raise ValueError("pairing report needs the None/None baseline")
    base = _dec(scores[BASELINE])
    rows = [(BASELINE, scores[BASELINE], None)]
    for p in PAIRINGS[1:]:
        if p in scores:
            rows.append((p, scores[p], float(_dec(scores[p]) - base)))
    return PairingReport(tuple(rows))


def impact_report(dataset: str, models: Mapping[str, Mapping[str, float]], pairings: Mapping[str, float] | None = None) -> dict:
    """``models`` maps model name to ``{"none": x, "redact": y}``."""
    records = [ImpactRecord.compute(dataset, m, v["none"], v["redact"]) for m, v in models.items()]
    impacts = {r.model: r.impact_pct for r in records}
    return {
        "dataset": dataset,
        "model": list(models),
        "pairings": pairing_report(pairings).to_json() if pairings else None,
        "impacts": [r.to_json() for r in records],
        "severity": classify_impact(impacts).value if impacts else None,
    }


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
