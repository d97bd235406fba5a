"""Placeholder substitution with an exact original-to-redacted offset map."""

from __future__ import annotations

import bisect
import enum
import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from redactkit.core import (
    AnnotatedDocument,
    Answer,
    Document,
    EntityLabel,
    EntitySpan,
    QARecord,
    RedactionPolicy,
    parse_label,
)

CANONICAL_TOKENS: Mapping[EntityLabel, str] = {
    EntityLabel.PERSON: "<NAME>",
    EntityLabel.GPE: "<LOC>",
    EntityLabel.LOC: "<LOC>",
    EntityLabel.ORG: "<ORG>",
    EntityLabel.DATE: "<DATE>",
    EntityLabel.TIME: "<TIME>",
    EntityLabel.PERCENT: "<PERCENT>",
    EntityLabel.QUANTITY: "<QUANTITY>",
    EntityLabel.WORK_OF_ART: "<WORK_OF_ART>",
    EntityLabel.EMAIL: "<EMAIL>",
    EntityLabel.SSN: "<SSN>",
    EntityLabel.CREDIT_CARD: "<CC>",
}


class PolicyMode(str, enum.Enum):
    FULL = "full"
    LIMITED = "limited"
    NONE = "none"


def build_policy(mode, labels: Iterable = (), tokens: Mapping | None = None) -> RedactionPolicy:
    """FULL redacts all twelve labels, NONE nothing, LIMITED exactly ``labels``.

    ``tokens`` overrides entries of the canonical token table.
    """
    mode = PolicyMode(mode.lower() if isinstance(mode, str) else mode)
    token_map = dict(CANONICAL_TOKENS)
    for lab, tok in (tokens or {}).items():
        token_map[parse_label(lab)] = tok
    if mode is PolicyMode.FULL:
        chosen = frozenset(EntityLabel)
    elif mode is PolicyMode.NONE:
        chosen = frozenset()
    else:
        chosen = frozenset(parse_label(x) for x in labels)
        if not chosen:
            raise ValueError("LIMITED policy needs at least one label")
    return RedactionPolicy(chosen, token_map)


def load_policy(path) -> RedactionPolicy:
    """Read ``{"mode": ..., "labels": [...], "tokens": {LABEL: token}}`` from JSON or TOML."""
    path = Path(path)
    if path.suffix == ".toml":
        from redactkit.recognize import load_toml

        obj = load_toml(path)
    else:
        obj = json.loads(path.read_text(encoding="utf-8"))
    return build_policy(obj.get("mode", "full"), obj.get("labels", ()), obj.get("tokens"))


# --- offset map -----------------------------------------------------------


@dataclass(frozen=True)
class Segment:
    orig_start: int
    orig_end: int
    new_start: int
    new_end: int
    label: EntityLabel | None = None  # None for COPY

    @property
    def kind(self) -> str:
        return "COPY" if self.label is None else "REPLACED"

    @property
    def displacement(self) -> int:
        return self.new_start - self.orig_start

    def to_json(self) -> dict:
        out = {
            "orig_start": self.orig_start,
            "orig_end": self.orig_end,
            "new_start": self.new_start,
            "new_end": self.new_end,
            "kind": self.kind,
        }
        if self.label is not None:
            out["label"] = self.label.value
        return out

    @classmethod
    def from_json(cls, obj: Mapping) -> "Segment":
        label = parse_label(obj["label"]) if obj.get("kind") == "REPLACED" else None
        return cls(obj["orig_start"], obj["orig_end"], obj["new_start"], obj["new_end"], label)


class InsideRedaction(ValueError):
    def __init__(self, label: EntityLabel, offset: int):
        super().__init__(f"offset {offset} falls inside a redacted {label} span")
        self.label = label
        self.offset = offset


@dataclass(frozen=True)
class OffsetMap:
    segments: tuple[Segment, ...]

    def __post_init__(self):
        object.__setattr__(self, "_starts", [s.orig_start for s in self.segments])

    @property
    def orig_len(self) -> int:
        return self.segments[-1].orig_end if self.segments else 0

    @property
    def new_len(self) -> int:
        return self.segments[-1].new_end if self.segments else 0

    def replaced(self) -> list[Segment]:
        return [s for s in self.segments if s.label is not None]

    def check(self) -> None:
        o = n = 0
        for s in self.segments:
            if s.orig_start != o or s.new_start != n:
                raise AssertionError(f"gap or overlap at {s}")
            if s.orig_end < s.orig_start or s.new_end < s.new_start:
                raise AssertionError(f"inverted segment {s}")
            if s.label is None and s.orig_end - s.orig_start != s.new_end - s.new_start:
                raise AssertionError(f"COPY segment changes length: {s}")
            o, n = s.orig_end, s.new_end

    def remap(self, orig: int, mode: str = "strict") -> int:
        return remap_offset(self, orig, mode)

    def to_json(self) -> list[dict]:
        return [s.to_json() for s in self.segments]

    @classmethod
    def from_json(cls, segs: Sequence[Mapping]) -> "OffsetMap":
        return cls(tuple(Segment.from_json(s) for s in segs))


def remap_offset(omap: OffsetMap, orig: int, mode: str = "strict") -> int:
    """Map an original offset to redacted coordinates.

    Segment boundaries map to the corresponding boundaries. An offset strictly
    inside a replaced span raises ``InsideRedaction`` (``strict``) or maps to
    the placeholder start (``clamp``).
    """
    if mode not in ("strict", "clamp"):
        raise ValueError(f"unknown remap mode {mode!r}")
    if not 0 <= orig <= omap.orig_len:
        raise ValueError(f"offset {orig} outside [0, {omap.orig_len}]")
    if orig == omap.orig_len:
        return omap.new_len
    i = bisect.bisect_right(omap._starts, orig) - 1
    seg = omap.segments[i]
    if seg.label is None:
        return orig + seg.displacement
    if orig == seg.orig_start:
        return seg.new_start
    if mode == "strict":
        raise InsideRedaction(seg.label, orig)
    return seg.new_start


@dataclass(frozen=True)
class AppliedSpan:
    span: EntitySpan
    token: str

    def to_json(self) -> dict:
        return {**self.span.to_json(), "surface": self.span.surface, "token": self.token}


@dataclass(frozen=True)
class RedactedDocument:
    doc_id: str
    text: str
    map: OffsetMap
    applied: tuple[AppliedSpan, ...] = ()


class OverlappingSpans(ValueError):
    pass


def redact_document(ad: AnnotatedDocument, policy: RedactionPolicy) -> RedactedDocument:
    text = ad.doc.text
    spans = sorted(ad.spans)
    for a, b in zip(spans, spans[1:]):
        if b.start < a.end:
            raise OverlappingSpans(
                f"overlapping spans {a} and {b} in {ad.doc.id}; run resolve_overlaps first"
            )
    pieces: list[str] = []
    segs: list[Segment] = []
    applied: list[AppliedSpan] = []
    o = n = 0
    for sp in spans:
        if sp.label not in policy.labels:
            continue
        if sp.end > len(text) or text[sp.start : sp.end] != sp.surface:
            raise ValueError(f"span {sp} does not match text of {ad.doc.id}")
        if sp.start > o:
            w = sp.start - o
            segs.append(Segment(o, sp.start, n, n + w))
            pieces.append(text[o : sp.start])
            n += w
        tok = policy.token(sp.label)
        segs.append(Segment(sp.start, sp.end, n, n + len(tok), sp.label))
        pieces.append(tok)
        applied.append(AppliedSpan(sp, tok))
        o, n = sp.end, n + len(tok)
    if o < len(text) or not segs:
        w = len(text) - o
        segs.append(Segment(o, len(text), n, n + w))
        pieces.append(text[o:])
    return RedactedDocument(ad.doc.id, "".join(pieces), OffsetMap(tuple(segs)), tuple(applied))


# --- extractive QA --------------------------------------------------------


@dataclass(frozen=True)
class AdjustedQA:
    record: QARecord
    context: RedactedDocument
    question: RedactedDocument


@dataclass(frozen=True)
class AnswerRedacted(AdjustedQA):
    """An answer overlapped a replaced span; ``record`` is emitted unanswerable."""

    label: EntityLabel = EntityLabel.PERSON
    answer: Answer | None = None


def _as_annotated(doc: Document, spans) -> AnnotatedDocument:
    if isinstance(spans, AnnotatedDocument):
        return spans
    return AnnotatedDocument(doc, tuple(sorted(spans or ())))


def adjust_qa_record(
    rec: QARecord,
    context_spans,
    policy: RedactionPolicy,
    question_spans=(),
) -> AdjustedQA:
    """Redact context and question independently and move answer offsets.

    Returns ``AnswerRedacted`` (a subclass of ``AdjustedQA``) when any gold
    answer touches a replaced region.
    """
    ctx = redact_document(_as_annotated(rec.context, context_spans), policy)
    q = redact_document(_as_annotated(rec.question, question_spans), policy)
    new_context = Document(rec.context.id, ctx.text, rec.context.meta)
    new_question = Document(rec.question.id, q.text, rec.question.meta)

    replaced = ctx.map.replaced()
    answers = []
    for ans in rec.answers:
        hit = next(
            (s for s in replaced if s.orig_start < ans.answer_end and ans.answer_start < s.orig_end),
            None,
        )
        if hit is None and not ans.text:
            # zero-length answers strictly inside a placeholder
            hit = next((s for s in replaced if s.orig_start < ans.answer_start < s.orig_end), None)
        if hit is not None:
            out = replace(rec, context=new_context, question=new_question, answers=(), is_answerable=False)
            return AnswerRedacted(out, ctx, q, label=hit.label, answer=ans)
        start = remap_offset(ctx.map, ans.answer_start, "strict")
        sliced = ctx.text[start : start + len(ans.text)]
        if sliced != ans.text:
            raise AssertionError(f"remapped answer mismatch in {rec.id}: {sliced!r} != {ans.text!r}")
        answers.append(Answer(sliced, start))
    out = replace(rec, context=new_context, question=new_question, answers=tuple(answers))
    return AdjustedQA(out, ctx, q)
