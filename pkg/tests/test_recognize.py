import random

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from oracles import luhn_oracle
from redactkit.core import Document, EntityLabel, EntitySpan
from redactkit.recognize import (
    DEFAULT_PRIORITY,
    AnnotationError,
    RecognizerConfig,
    ingest_annotations,
    luhn_check,
    recognize_patterns,
    resolve_overlaps,
)

L = EntityLabel


def spans_of(text, **kw):
    return [(s.start, s.end, s.label, s.surface) for s in recognize_patterns(Document("x", text), RecognizerConfig(**kw))]


# --- Luhn -----------------------------------------------------------------


@pytest.mark.parametrize(
    "digits, expected",
    [("4111111111111111", True), ("4111111111111112", False), ("000000000000", True), ("79927398713", True)],
)
def test_luhn_examples(digits, expected):
    assert luhn_oracle(digits) is expected
    assert luhn_check(digits) is expected


def test_luhn_rejects_non_digits():
    with pytest.raises(ValueError):
        luhn_check("4111x11111111111")
    with pytest.raises(ValueError):
        luhn_check("")


@given(st.text("0123456789", min_size=12, max_size=19))
def test_luhn_matches_oracle(digits):
    assert luhn_check(digits) == luhn_oracle(digits)


def test_luhn_ignores_grouping_separators():
    assert luhn_check("4111 1111-1111 1111")


# --- patterns -------------------------------------------------------------


def test_email():
    assert spans_of("Email me at a.b@corp.example") == [(12, 28, L.EMAIL, "a.b@corp.example")]


def test_email_stops_before_sentence_period():
    assert spans_of("write to x_y+z@mail.co.uk.")[0][3] == "x_y+z@mail.co.uk"


def test_email_needs_alpha_tld():
    assert spans_of("a@b.c1") == []


def test_ssn():
    assert spans_of("SSN: 078-05-1120 on file") == [(5, 16, L.SSN, "078-05-1120")]
    assert spans_of("ref 1078-05-1120") == []


def test_no_digits_no_spans():
    assert spans_of("The quick brown fox") == []


@pytest.mark.parametrize("text", ["card 4111 1111 1111 1111", "card 4111-1111-1111-1111", "card 4111111111111111"])
def test_credit_card(text):
    ((s, e, lab, surface),) = spans_of(text)
    assert (s, lab) == (5, L.CREDIT_CARD)
    assert luhn_oracle(surface.replace(" ", "").replace("-", ""))


def test_credit_card_rejects_bad_checksum_and_repeated_digits():
    assert spans_of("card 4111 1111 1111 1112") == []
    assert spans_of("card 0000 0000 0000 0000") == []
    assert spans_of("card 0000 0000 0000 0000", cc_plausibility=False)[0][2] is L.CREDIT_CARD


def test_credit_card_window_inside_longer_digit_run():
    assert spans_of("4111 1111 1111 1111 2024")[0][3] == "4111 1111 1111 1111"


def test_numeric_dates_and_times():
    got = spans_of("at 5:30 PM on 2024-05-01 or 01/05/2024, 23:59:01")
    assert [(lab, sur) for _, _, lab, sur in got] == [
        (L.TIME, "5:30 PM"),
        (L.DATE, "2024-05-01"),
        (L.DATE, "01/05/2024"),
        (L.TIME, "23:59:01"),
    ]


def test_invalid_dates_rejected():
    assert spans_of("2024-13-01 and 31/31/2020") == []


def test_percent():
    assert [s[3] for s in spans_of("up 45% or 12.5 percent")] == ["45%", "12.5 percent"]


def test_disabled_patterns_are_skipped():
    assert spans_of("a.b@corp.example 078-05-1120", enabled_patterns={L.SSN}) == [(17, 28, L.SSN, "078-05-1120")]


def test_never_matches_inside_placeholders():
    assert spans_of("id <4111111111111111> and <a.b@x.org>") == []
    assert spans_of("<NAME> wrote on 2024-05-01")[0][2] is L.DATE


def test_unicode_offsets_are_scalar_values():
    text = "Zoë 😀 mailed z@q.io"
    (s, e, _, sur) = spans_of(text)[0]
    assert text[s:e] == sur == "z@q.io"
    # 13 scalar values precede the match; UTF-16 would count 14, UTF-8 bytes 17
    assert s == 13


def test_config_requires_complete_priority():
    with pytest.raises(ValueError):
        RecognizerConfig(label_priority=(L.PERSON, L.ORG))
    with pytest.raises(ValueError):
        RecognizerConfig(enabled_patterns={L.PERSON})


def test_config_from_json(tmp_path):
    p = tmp_path / "r.json"
    p.write_text('{"enabled_patterns": ["EMAIL"], "label_priority": %s}' % [str(x) for x in reversed(DEFAULT_PRIORITY)].__repr__().replace("'", '"'))
    cfg = RecognizerConfig.from_file(p)
    assert cfg.enabled_patterns == {L.EMAIL}
    assert cfg.label_priority[0] is L.QUANTITY


def test_config_from_toml(tmp_path):
    p = tmp_path / "r.toml"
    p.write_text('enabled_patterns = ["SSN", "DATE"]\n')
    assert RecognizerConfig.from_file(p).enabled_patterns == {L.SSN, L.DATE}


PII = ["a.b@corp.example", "078-05-1120", "4111 1111 1111 1111", "2024-05-01", "5:30 PM", "45%"]
NEUTRAL = " ,;!?"


@given(st.lists(st.sampled_from(PII + ["lorem", "ipsum", "dolor sit", "amet"]), min_size=1, max_size=8), st.randoms(use_true_random=False))
def test_pattern_locality(chunks, rnd):
    """Rewriting characters far from every match leaves the matches unchanged."""
    text = " ".join(chunks)
    before = recognize_patterns(Document("x", text))
    near = set()
    for s in before:
        near.update(range(max(0, s.start - 8), s.end + 8))
    chars = list(text)
    for i in range(len(chars)):
        if i not in near and rnd.random() < 0.5:
            chars[i] = rnd.choice(NEUTRAL)
    after = recognize_patterns(Document("x", "".join(chars)))
    assert [(s.start, s.end, s.label) for s in after] == [(s.start, s.end, s.label) for s in before]


@given(st.text("0123456789 -", min_size=12, max_size=40))
def test_every_card_span_is_luhn_valid(text):
    for s in recognize_patterns(Document("x", text)):
        if s.label is L.CREDIT_CARD:
            assert luhn_oracle(s.surface.replace(" ", "").replace("-", ""))


# --- ingestion ------------------------------------------------------------


def test_ingest_slices_surface():
    ad = ingest_annotations(Document("d", "Born in Paris"), [{"start": 8, "end": 13, "label": "GPE"}])
    assert [s.surface for s in ad.spans] == ["Paris"]
    assert ad.overlaps == ()


def test_ingest_out_of_range():
    with pytest.raises(AnnotationError, match="span out of range"):
        ingest_annotations(Document("d", "x" * 20), [{"start": 10, "end": 99, "label": "ORG"}])


def test_ingest_unknown_label():
    with pytest.raises(AnnotationError, match="unknown entity label"):
        ingest_annotations(Document("d", "x" * 20), [{"start": 0, "end": 3, "label": "NORP"}])


def test_ingest_doc_id_mismatch():
    with pytest.raises(AnnotationError, match="doc_id mismatch"):
        ingest_annotations(Document("d", "abc"), [], doc_id="e")


def test_ingest_flags_overlaps():
    ad = ingest_annotations(Document("d", "abcdefgh"), [{"start": 2, "end": 7, "label": "ORG"}, {"start": 0, "end": 5, "label": "PERSON"}])
    assert [(s.start, s.label) for s in ad.spans] == [(0, L.PERSON), (2, L.ORG)]
    assert ad.overlaps == ((0, 1),)
    assert not ad.is_disjoint


# --- overlap resolution ---------------------------------------------------

T = "0123456789abcdef"


def sp(a, b, lab):
    return EntitySpan(a, b, lab, T[a:b])


def test_disjoint_unchanged():
    spans = [sp(0, 2, L.ORG), sp(4, 6, L.PERSON)]
    assert resolve_overlaps(spans) == spans


def test_longest_wins():
    assert resolve_overlaps([sp(0, 10, L.PERSON), sp(2, 5, L.ORG)]) == [sp(0, 10, L.PERSON)]


def test_priority_breaks_exact_ties():
    assert resolve_overlaps([sp(0, 5, L.TIME), sp(0, 5, L.DATE)]) == [sp(0, 5, L.DATE)]


def test_earlier_start_breaks_length_ties():
    assert resolve_overlaps([sp(3, 8, L.PERSON), sp(1, 6, L.QUANTITY)]) == [sp(1, 6, L.QUANTITY)]


span_lists = st.lists(
    st.tuples(st.integers(0, 14), st.integers(1, 6), st.sampled_from(list(L))).map(
        lambda t: sp(t[0], min(t[0] + t[1], 16), t[2])
    ),
    max_size=12,
)


@given(span_lists)
def test_resolution_properties(spans):
    out = resolve_overlaps(spans)
    assert all(a.end <= b.start for a, b in zip(out, out[1:]))
    assert set(out) <= set(spans)
    assert resolve_overlaps(out) == out
    # every dropped span collides with a kept span at least as long
    for s in set(spans) - set(out):
        assert any(s.overlaps(k) and len(k) >= len(s) for k in out)


@given(span_lists, st.randoms(use_true_random=False))
def test_resolution_is_order_independent(spans, rnd):
    shuffled = list(spans)
    rnd.shuffle(shuffled)
    assert resolve_overlaps(shuffled) == resolve_overlaps(spans)
