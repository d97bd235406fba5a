"""PII redaction with exact offset remapping, redaction statistics, sampling plans and impact scoring."""

from redactkit.core import (
    AnnotatedDocument,
    Answer,
    Document,
    EntityLabel,
    EntitySpan,
    QARecord,
    RedactionPolicy,
    validate_corpus,
)
from redactkit.recognize import (
    RecognizerConfig,
    annotate,
    ingest_annotations,
    luhn_check,
    recognize_patterns,
    resolve_overlaps,
)
from redactkit.redact import (
    AdjustedQA,
    AnswerRedacted,
    InsideRedaction,
    OffsetMap,
    RedactedDocument,
    adjust_qa_record,
    build_policy,
    redact_document,
    remap_offset,
)

__version__ = "0.1.0"
