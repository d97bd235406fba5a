"""Pattern recognizers for mechanically decidable PII, and merging with external NER spans.

Pattern grammars (ASCII character classes throughout):

EMAIL        local@domain; local is ``[A-Za-z0-9._%+-]+``, domain is dot-separated
             ``[A-Za-z0-9-]+`` labels ending in an alphabetic label of length >= 2.
SSN          ``\\d{3}-\\d{2}-\\d{4}`` between word boundaries.
CREDIT_CARD  12-19 digits, optionally grouped by single spaces or hyphens, Luhn-valid.
             Runs of digit groups are searched group-aligned for the longest
             Luhn-valid window (earliest on ties).
DATE         ``YYYY-MM-DD``, ``DD/MM/YYYY`` or ``MM/DD/YYYY`` (also 2-digit years, and
             ``.`` as separator for the day-first form).
TIME         ``H:MM`` or ``HH:MM[:SS]`` with optional ``AM``/``PM`` (``a.m.`` etc.).
PERCENT      a decimal number followed by ``%`` or the word ``percent``.

No match is ever reported inside a ``<...>`` placeholder.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from redactkit.core import AnnotatedDocument, Document, EntityLabel, EntitySpan, parse_label

PATTERN_LABELS = (
    EntityLabel.EMAIL,
    EntityLabel.SSN,
    EntityLabel.CREDIT_CARD,
    EntityLabel.DATE,
    EntityLabel.TIME,
    EntityLabel.PERCENT,
)

DEFAULT_PRIORITY = (
    EntityLabel.PERSON,
    EntityLabel.ORG,
    EntityLabel.GPE,
    EntityLabel.LOC,
    EntityLabel.WORK_OF_ART,
    EntityLabel.DATE,
    EntityLabel.TIME,
    EntityLabel.EMAIL,
    EntityLabel.SSN,
    EntityLabel.CREDIT_CARD,
    EntityLabel.PERCENT,
    EntityLabel.QUANTITY,
)


@dataclass(frozen=True)
class RecognizerConfig:
    enabled_patterns: frozenset[EntityLabel] = frozenset(PATTERN_LABELS)
    label_priority: tuple[EntityLabel, ...] = DEFAULT_PRIORITY
    # reject card numbers made of a single repeated digit
    cc_plausibility: bool = True

    def __post_init__(self):
        object.__setattr__(self, "enabled_patterns", frozenset(parse_label(x) for x in self.enabled_patterns))
        object.__setattr__(self, "label_priority", tuple(parse_label(x) for x in self.label_priority))
        bad = self.enabled_patterns - set(PATTERN_LABELS)
        if bad:
            raise ValueError(f"no built-in pattern for {sorted(map(str, bad))}")
        if sorted(self.label_priority) != sorted(EntityLabel) or len(set(self.label_priority)) != len(EntityLabel):
            raise ValueError("label_priority must list every entity label exactly once")

    @classmethod
    def from_mapping(cls, obj: Mapping) -> "RecognizerConfig":
        kw = {}
        if "enabled_patterns" in obj:
            kw["enabled_patterns"] = frozenset(obj["enabled_patterns"])
        if "label_priority" in obj:
            kw["label_priority"] = tuple(obj["label_priority"])
        if "cc_plausibility" in obj:
            kw["cc_plausibility"] = bool(obj["cc_plausibility"])
        return cls(**kw)

    @classmethod
    def from_file(cls, path) -> "RecognizerConfig":
        path = Path(path)
        if path.suffix == ".toml":
            return cls.from_mapping(load_toml(path))
        return cls.from_mapping(json.loads(path.read_text(encoding="utf-8")))

    def rank(self, label: EntityLabel) -> int:
        return self.label_priority.index(label)


def load_toml(path) -> dict:
    try:
        import tomllib
    except ModuleNotFoundError:  # python < 3.11
        import tomli as tomllib
    with open(path, "rb") as fh:
        return tomllib.load(fh)


# --- Luhn -----------------------------------------------------------------


def luhn_check(digits: str) -> bool:
    """True iff the Luhn checksum of ``digits`` is 0 mod 10.

    Spaces and hyphens are stripped first; anything else that is not an ASCII
    digit raises ``ValueError``.
    """
    stripped = digits.replace(" ", "").replace("-", "")
    if not stripped or not all("0" <= c <= "9" for c in stripped):
        raise ValueError(f"not a digit string: {digits!r}")
    total = 0
    for i, c in enumerate(reversed(stripped)):
        d = ord(c) - 48
        if i % 2 == 1:
            d *= 2
            if d > 9:
                d -= 9
        total += d
    return total % 10 == 0


# --- patterns -------------------------------------------------------------

_A = re.ASCII

EMAIL_RE = re.compile(
    r"(?<![A-Za-z0-9._%+-])[A-Za-z0-9._%+-]+@(?:[A-Za-z0-9-]+\.)+[A-Za-z]{2,}(?![A-Za-z0-9-]|\.[A-Za-z0-9-])",
    _A,
)
SSN_RE = re.compile(r"\b\d{3}-\d{2}-\d{4}\b", _A)
DIGIT_RUN_RE = re.compile(r"(?<![0-9])[0-9]+(?:[ -][0-9]+)*(?![0-9])", _A)
DATE_RES = (
    re.compile(r"(?<![0-9/.-])\d{4}-(?:0[1-9]|1[0-2])-(?:0[1-9]|[12]\d|3[01])(?![0-9]|-[0-9])", _A),
    re.compile(r"(?<![0-9/.-])(?:0?[1-9]|[12]\d|3[01])/(?:0?[1-9]|[12]\d|3[01])/(?:\d{4}|\d{2})(?![0-9]|/[0-9])", _A),
    re.compile(r"(?<![0-9/.-])(?:0?[1-9]|[12]\d|3[01])\.(?:0?[1-9]|1[0-2])\.\d{4}(?![0-9]|\.[0-9])", _A),
)
TIME_RE = re.compile(
    r"(?<![0-9:])(?:[01]?\d|2[0-3]):[0-5]\d(?::[0-5]\d)?(?![0-9:])(?:\s?(?:[AaPp][Mm]\b|[AaPp]\.[Mm]\.))?",
    _A,
)
PERCENT_RE = re.compile(r"(?<![0-9.])\d+(?:\.\d+)?(?:\s?%|\s(?:percent|per cent)\b)", _A)
PLACEHOLDER_RE = re.compile(r"<[^<>\s]+>")


def _slash_date_ok(s: str) -> bool:
    a, b, _ = s.split("/")
    return int(a) <= 12 or int(b) <= 12


def _credit_card_spans(text: str, plausibility: bool) -> list[tuple[int, int]]:
    out = []
    for m in DIGIT_RUN_RE.finditer(text):
        groups = [(g.start(), g.end()) for g in re.finditer(r"[0-9]+", m.group())]
        base = m.start()
        best = None
        for i in range(len(groups)):
            n_digits = 0
            for j in range(i, len(groups)):
                n_digits += groups[j][1] - groups[j][0]
                if n_digits > 19:
                    break
                if n_digits < 12:
                    continue
                s, e = base + groups[i][0], base + groups[j][1]
                digits = re.sub(r"[ -]", "", text[s:e])
                if plausibility and len(set(digits)) == 1:
                    continue
                if not luhn_check(digits):
                    continue
                if best is None or (e - s) > (best[1] - best[0]):
                    best = (s, e)
        if best is not None:
            out.append(best)
    return out


def recognize_patterns(doc: Document, cfg: RecognizerConfig | None = None) -> list[EntitySpan]:
    """All maximal matches of the enabled pattern classes, sorted by (start, end)."""
    cfg = cfg or RecognizerConfig()
    text = doc.text
    found: list[tuple[int, int, EntityLabel]] = []
    on = cfg.enabled_patterns

    if EntityLabel.EMAIL in on:
        found += [(m.start(), m.end(), EntityLabel.EMAIL) for m in EMAIL_RE.finditer(text)]
    if EntityLabel.SSN in on:
        found += [(m.start(), m.end(), EntityLabel.SSN) for m in SSN_RE.finditer(text)]
    if EntityLabel.CREDIT_CARD in on:
        found += [(s, e, EntityLabel.CREDIT_CARD) for s, e in _credit_card_spans(text, cfg.cc_plausibility)]
    if EntityLabel.DATE in on:
        for i, rx in enumerate(DATE_RES):
            for m in rx.finditer(text):
                if i == 1 and not _slash_date_ok(m.group()):
                    continue
                found.append((m.start(), m.end(), EntityLabel.DATE))
    if EntityLabel.TIME in on:
        found += [(m.start(), m.end(), EntityLabel.TIME) for m in TIME_RE.finditer(text)]
    if EntityLabel.PERCENT in on:
        found += [(m.start(), m.end(), EntityLabel.PERCENT) for m in PERCENT_RE.finditer(text)]

    if found and "<" in text:
        holes = [(m.start(), m.end()) for m in PLACEHOLDER_RE.finditer(text)]
        found = [f for f in found if not any(f[0] < he and hs < f[1] for hs, he in holes)]
    spans = sorted({EntitySpan(s, e, lab, text[s:e]) for s, e, lab in found})
    return spans


# --- external annotations -------------------------------------------------


class AnnotationError(ValueError):
    pass


def ingest_annotations(doc: Document, raw_spans: Iterable, doc_id: str | None = None) -> AnnotatedDocument:
    """Validate externally produced spans against ``doc`` and sort them.

    ``raw_spans`` holds dicts with ``start``/``end``/``label`` (or ready
    ``EntitySpan`` objects). Overlaps are allowed here; their index pairs are
    recorded on the result.
    """
    if doc_id is not None and doc_id != doc.id:
        raise AnnotationError(f"doc_id mismatch: annotations for {doc_id!r} applied to {doc.id!r}")
    spans = []
    for raw in raw_spans:
        if isinstance(raw, EntitySpan):
            start, end, label = raw.start, raw.end, raw.label
        else:
            try:
                start, end, label = raw["start"], raw["end"], raw["label"]
            except (KeyError, TypeError):
                raise AnnotationError(f"malformed span {raw!r} in {doc.id}") from None
        if not isinstance(start, int) or not isinstance(end, int) or not (0 <= start < end <= len(doc.text)):
            raise AnnotationError(f"span out of range: ({start}, {end}) in {doc.id} (length {len(doc.text)})")
        try:
            lab = parse_label(label)
        except ValueError as e:
            raise AnnotationError(f"{e} in {doc.id}") from None
        spans.append(EntitySpan(start, end, lab, doc.text[start:end]))
    spans.sort()
    overlaps = tuple(
        (i, j)
        for i in range(len(spans))
        for j in range(i + 1, len(spans))
        if spans[j].start < spans[i].end
    )
    return AnnotatedDocument(doc, tuple(spans), overlaps)


def resolve_overlaps(spans: Sequence[EntitySpan], priority: Sequence[EntityLabel] = DEFAULT_PRIORITY) -> list[EntitySpan]:
    """Greedy disjoint selection: longest first, then earliest start, then label priority."""
    rank = {lab: i for i, lab in enumerate(priority)}
    order = sorted(set(spans), key=lambda s: (-(s.end - s.start), s.start, rank[s.label]))
    kept: list[EntitySpan] = []
    for s in order:
        if not any(s.overlaps(k) for k in kept):
            kept.append(s)
    return sorted(kept)


def annotate(
    doc: Document,
    raw_spans: Iterable = (),
    cfg: RecognizerConfig | None = None,
    patterns: bool = True,
) -> AnnotatedDocument:
    """External spans plus pattern matches, overlap-resolved."""
    cfg = cfg or RecognizerConfig()
    ad = ingest_annotations(doc, raw_spans)
    merged = list(ad.spans)
    if patterns:
        merged += recognize_patterns(doc, cfg)
    return AnnotatedDocument(doc, tuple(resolve_overlaps(merged, cfg.label_priority)))
