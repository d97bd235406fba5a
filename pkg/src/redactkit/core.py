"""Domain types shared by every stage of the redaction pipeline.

Offsets everywhere are 0-based indices into Python ``str`` objects, i.e.
Unicode scalar values, end-exclusive.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence, Union


class EntityLabel(str, enum.Enum):
    PERSON = "PERSON"
    GPE = "GPE"
    LOC = "LOC"
    ORG = "ORG"
    DATE = "DATE"
    TIME = "TIME"
    PERCENT = "PERCENT"
    QUANTITY = "QUANTITY"
    WORK_OF_ART = "WORK_OF_ART"
    EMAIL = "EMAIL"
    SSN = "SSN"
    CREDIT_CARD = "CREDIT_CARD"

    def __str__(self) -> str:
        return self.value


class UnknownLabel(ValueError):
    pass


def parse_label(name: str | EntityLabel) -> EntityLabel:
    if isinstance(name, EntityLabel):
        return name
    try:
        return EntityLabel(str(name).strip().upper())
    except ValueError:
        raise UnknownLabel(f"unknown entity label {name!r}") from None


@dataclass(frozen=True, order=True)
class EntitySpan:
    start: int
    end: int
    label: EntityLabel
    surface: str = field(compare=False)

    def __post_init__(self):
        if not (0 <= self.start < self.end):
            raise ValueError(f"bad span bounds ({self.start}, {self.end})")
        if len(self.surface) != self.end - self.start:
            raise ValueError("surface length does not match span bounds")

    @classmethod
    def over(cls, text: str, start: int, end: int, label) -> "EntitySpan":
        if not (0 <= start < end <= len(text)):
            raise ValueError(f"span out of range: ({start}, {end}) over text of length {len(text)}")
        return cls(start, end, parse_label(label), text[start:end])

    def __len__(self) -> int:
        return self.end - self.start

    def overlaps(self, other: "EntitySpan") -> bool:
        return self.start < other.end and other.start < self.end

    def to_json(self) -> dict:
        return {"start": self.start, "end": self.end, "label": self.label.value}


@dataclass(frozen=True)
class Document:
    id: str
    text: str
    meta: Mapping[str, str] | None = None

    def to_json(self) -> dict:
        out = {"id": self.id, "text": self.text}
        if self.meta is not None:
            out["meta"] = dict(self.meta)
        return out

    @classmethod
    def from_json(cls, obj: Mapping) -> "Document":
        meta = obj.get("meta")
        return cls(id=obj["id"], text=obj["text"], meta=dict(meta) if meta is not None else None)


@dataclass(frozen=True)
class AnnotatedDocument:
    doc: Document
    spans: tuple[EntitySpan, ...] = ()
    # pairs of indices into ``spans`` that overlap; populated at ingestion
    overlaps: tuple[tuple[int, int], ...] = ()

    @property
    def is_disjoint(self) -> bool:
        return all(a.end <= b.start for a, b in zip(self.spans, self.spans[1:]))


@dataclass(frozen=True)
class Answer:
    text: str
    answer_start: int

    @property
    def answer_end(self) -> int:
        return self.answer_start + len(self.text)

    def to_json(self) -> dict:
        return {"text": self.text, "answer_start": self.answer_start}


@dataclass(frozen=True)
class QARecord:
    id: str
    context: Document
    question: Document
    answers: tuple[Answer, ...] = ()
    is_answerable: bool = True

    @staticmethod
    def context_id(record_id: str) -> str:
        return f"{record_id}#context"

    @staticmethod
    def question_id(record_id: str) -> str:
        return f"{record_id}#question"

    @classmethod
    def build(cls, id: str, context: str, question: str, answers: Iterable = (), is_answerable: bool | None = None) -> "QARecord":
        ans = tuple(a if isinstance(a, Answer) else Answer(a["text"], a["answer_start"]) for a in answers)
        if is_answerable is None:
            is_answerable = bool(ans)
        return cls(
            id=id,
            context=Document(cls.context_id(id), context),
            question=Document(cls.question_id(id), question),
            answers=ans,
            is_answerable=is_answerable,
        )

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "context": self.context.text,
            "question": self.question.text,
            "answers": [a.to_json() for a in self.answers],
            "is_answerable": self.is_answerable,
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "QARecord":
        return cls.build(
            obj["id"], obj["context"], obj["question"], obj.get("answers", ()), obj.get("is_answerable")
        )


Record = Union[Document, QARecord]


@dataclass(frozen=True)
class RedactionPolicy:
    labels: frozenset[EntityLabel]
    token_map: Mapping[EntityLabel, str]

    def __post_init__(self):
        for label in self.labels:
            if label not in self.token_map:
                raise ValueError(f"no placeholder token for {label}")
        for label, tok in self.token_map.items():
            if not is_valid_token(tok):
                raise ValueError(f"invalid placeholder token {tok!r} for {label}")

    def __contains__(self, label: EntityLabel) -> bool:
        return label in self.labels

    def token(self, label: EntityLabel) -> str:
        return self.token_map[label]

    def is_subset(self, other: "RedactionPolicy") -> bool:
        return self.labels <= other.labels


def is_valid_token(tok: str) -> bool:
    return (
        isinstance(tok, str)
        and len(tok) > 2
        and tok.startswith("<")
        and tok.endswith(">")
        and not any(ch.isspace() for ch in tok)
    )


def record_documents(rec: Record) -> tuple[Document, ...]:
    """The annotatable text units of a record (context before question for QA)."""
    if isinstance(rec, QARecord):
        return (rec.context, rec.question)
    return (rec,)


# --- validation -----------------------------------------------------------


@dataclass(frozen=True)
class RecordCheck:
    index: int
    id: str | None
    violation: str | None = None

    @property
    def ok(self) -> bool:
        return self.violation is None


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[RecordCheck, ...]

    @property
    def violations(self) -> list[RecordCheck]:
        return [c for c in self.checks if not c.ok]

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {
            "n_records": len(self.checks),
            "n_violations": len(self.violations),
            "violations": [{"index": c.index, "id": c.id, "violation": c.violation} for c in self.violations],
        }


def _is_valid_unicode(text: str) -> bool:
    try:
        text.encode("utf-8")
    except UnicodeEncodeError:
        return False
    return True


def record_violation(rec: Record) -> str | None:
    if not isinstance(rec.id, str) or not rec.id:
        return "empty id"
    for doc in record_documents(rec):
        if not isinstance(doc.text, str):
            return "text is not a string"
        if not _is_valid_unicode(doc.text):
            return f"invalid unicode in {doc.id}"
    if isinstance(rec, QARecord):
        ctx = rec.context.text
        for a in rec.answers:
            if a.answer_start < 0 or a.answer_end > len(ctx):
                return "answer span out of range"
            if not _is_valid_unicode(a.text):
                return "invalid unicode in answer"
            if ctx[a.answer_start : a.answer_end] != a.text:
                return "answer text mismatch"
        if rec.answers and not rec.is_answerable:
            return "unanswerable record carries answers"
    return None


def validate_corpus(records: Sequence[Record]) -> ValidationReport:
    seen: set[str] = set()
    checks = []
    for i, rec in enumerate(records):
        violation = record_violation(rec)
        if violation is None:
            if rec.id in seen:
                violation = f"duplicate id {rec.id}"
            seen.add(rec.id)
        checks.append(RecordCheck(i, rec.id if isinstance(rec.id, str) else None, violation))
    return ValidationReport(tuple(checks))


# --- JSONL ----------------------------------------------------------------


class CorpusFormatError(ValueError):
    pass


def parse_record(obj: Mapping, fmt: str) -> Record:
    try:
        if fmt == "qa":
            return QARecord.from_json(obj)
        if fmt == "plain":
            return Document.from_json(obj)
    except (KeyError, TypeError) as e:
        raise CorpusFormatError(f"malformed {fmt} record: {e}") from None
    raise ValueError(f"unknown corpus format {fmt!r}")


def iter_jsonl(path) -> Iterator[dict]:
    with open(path, encoding="utf-8", errors="strict") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError as e:
                raise CorpusFormatError(f"{path}:{lineno}: {e}") from None


def read_corpus(path, fmt: str = "plain") -> Iterator[Record]:
    for obj in iter_jsonl(path):
        yield parse_record(obj, fmt)


def dumps_record(obj: Mapping) -> str:
    return json.dumps(obj, ensure_ascii=False, sort_keys=False)


def load_raw_annotations(path) -> dict[str, list[dict]]:
    """Map doc_id to its raw span dicts. Repeated doc_ids are concatenated."""
    out: dict[str, list[dict]] = {}
    for obj in iter_jsonl(path):
        try:
            out.setdefault(obj["doc_id"], []).extend(obj["spans"])
        except (KeyError, TypeError) as e:
            raise CorpusFormatError(f"malformed annotation line: {e}") from None
    return out
