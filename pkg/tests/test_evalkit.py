import pytest
from hypothesis import given
from hypothesis import strategies as st

from redactkit.evalkit import (
    ImpactRecord,
    PredictionRecord,
    ScoringError,
    Severity,
    classify_impact,
    impact_report,
    pairing_report,
    relative_impact,
    score_accuracy,
    score_token_f1,
    token_f1,
)

GOLD = {"1": "positive", "2": "negative", "3": "positive", "4": "negative"}


def test_accuracy():
    assert score_accuracy(dict(GOLD), GOLD) == 100.0
    assert score_accuracy({k: "neutral" for k in GOLD}, GOLD) == 0.0
    assert score_accuracy({**GOLD, "4": "positive"}, GOLD) == 75.0


def test_accuracy_normalizes_case_and_space():
    assert score_accuracy({"1": "  POSITIVE\n"}, {"1": "positive"}) == 100.0
    assert score_accuracy({"1": "Straße  x"}, {"1": "STRASSE x"}) == 100.0


def test_missing_duplicate_and_unknown_predictions():
    with pytest.raises(ScoringError, match="missing"):
        score_accuracy({"1": "positive"}, GOLD)
    with pytest.raises(ScoringError, match="duplicate"):
        score_accuracy([PredictionRecord("1", "a"), PredictionRecord("1", "b")], {"1": "a"})
    with pytest.raises(ScoringError, match="unknown"):
        score_accuracy({"1": "a", "9": "b"}, {"1": "a"})


def test_token_f1_examples():
    assert score_token_f1({"q": "cat sat down"}, {"q": ["cat sat down"]}) == 100.0
    assert score_token_f1({"q": "dog"}, {"q": ["cat sat"]}) == 0.0
    # P = 2/3, R = 2/3
    assert score_token_f1({"q": "the cat sat"}, {"q": ["cat sat down"]}) == pytest.approx(200 / 3)
    assert round(score_token_f1({"q": "the cat sat"}, {"q": ["cat sat down"]}), 1) == 66.7


def test_token_f1_takes_best_gold_and_handles_unanswerable():
    assert score_token_f1({"q": "cat"}, {"q": ["dog", "cat"]}) == 100.0
    assert score_token_f1({"q": "", "r": "x"}, {"q": [], "r": []}) == 50.0


@given(st.dictionaries(st.text("ab", min_size=1, max_size=2), st.tuples(st.sampled_from(["x", "y", "Z", "z"]), st.sampled_from(["x", "y", "z"])), min_size=1))
def test_f1_equals_accuracy_on_single_tokens(pairs):
    preds = {k: p for k, (p, _) in pairs.items()}
    golds = {k: g for k, (_, g) in pairs.items()}
    assert score_token_f1(preds, {k: [g] for k, g in golds.items()}) == pytest.approx(score_accuracy(preds, golds))


@given(st.text(max_size=20), st.text(max_size=20))
def test_f1_bounds(p, g):
    assert 0 <= token_f1(p, g) <= 1


# --- impact ---------------------------------------------------------------


@pytest.mark.parametrize(
    "none, redact, expected",
    [
        (65.8, 57.8, 12.2),  # SQuADv2.0, Claude
        (58.8, 60.4, -2.7),  # Disambiguation QA, Mistral
        (70.0, 70.0, 0.0),
        (92.1, 54.2, 41.2),  # printed as 41.1
    ],
)
def test_relative_impact(none, redact, expected):
    assert relative_impact(none, redact) == expected


def test_relative_impact_within_half_point_of_printed_drop():
    assert abs(relative_impact(92.1, 54.2) - 41.1) <= 0.5


def test_relative_impact_needs_positive_baseline():
    with pytest.raises(ValueError):
        relative_impact(0, 5)


pos = st.floats(0.5, 100, allow_nan=False).map(lambda x: round(x, 1))


@given(pos, pos)
def test_impact_sign(a, b):
    imp = relative_impact(a, b)
    if b > a:
        assert imp <= 0
    if a == b:
        assert imp == 0


@given(st.integers(1, 1000), st.integers(0, 1000), st.integers(1, 9))
def test_impact_scale_invariant(a, b, k):
    assert relative_impact(a, b) == relative_impact(k * a, k * b)


@pytest.mark.parametrize(
    "impacts, expected",
    [
        ({"Claude": 14.8, "Mistral": 4.7, "GPT": 5.6}, Severity.LOW),
        ({"Claude": 41.1, "Mistral": 43.8, "GPT": 46.2}, Severity.HIGH),
        ({"Claude": 7.6, "Mistral": 11.2, "GPT": 9.6}, Severity.LOW),
        ({"only": 0.0}, Severity.LOW),
        ({"a": 10.0}, Severity.MODERATE),
        ({"a": 25.0}, Severity.MODERATE),
        ({"a": 25.01}, Severity.HIGH),
        ({"a": 5, "b": 30}, Severity.HIGH),  # tie goes up
        ({"a": 5, "b": 12, "c": 30}, Severity.HIGH),
    ],
)
def test_classify_impact(impacts, expected):
    assert classify_impact(impacts) is expected


def test_classify_empty():
    with pytest.raises(ValueError):
        classify_impact({})


@given(st.lists(st.floats(-50, 120), min_size=1, max_size=5), st.randoms(use_true_random=False))
def test_classify_permutation_invariant(values, rnd):
    shuffled = list(values)
    rnd.shuffle(shuffled)
    assert classify_impact(dict(enumerate(values))) is classify_impact(dict(enumerate(shuffled)))


def test_impact_record():
    r = ImpactRecord.compute("SQuADv2.0", "Claude", 65.8, 57.8)
    assert (r.impact_pct, r.severity) == (12.2, Severity.MODERATE)


# --- pairings -------------------------------------------------------------


def test_pairing_report_squad_bart():
    rep = pairing_report({"None/None": 74.9, "Redact/Redact": 57.7, "None/Redact": 60.2})
    assert [d for _, _, d in rep.rows] == [None, -17.2, -14.7]
    assert rep.to_json()["pairings"]["None/Redact"] == {"score": 60.2, "delta": -14.7}
    assert "-17.2" in rep.render()


def test_pairing_report_edge_cases():
    rep = pairing_report({"None/None": 80, "Redact/Redact": 80, "None/Redact": 80})
    assert [d for _, _, d in rep.rows[1:]] == [0.0, 0.0]
    assert len(pairing_report({"None/None": 50}).rows) == 1
    with pytest.raises(ValueError, match="baseline"):
        pairing_report({"Redact/Redact": 50})
    with pytest.raises(ValueError):
        pairing_report({"None/None": 50, "Redact/None": 1})


def test_impact_report():
    rep = impact_report("DROP", {"Claude": {"none": 92.1, "redact": 54.2}, "GPT": {"none": 91.6, "redact": 49.3}})
    assert rep["severity"] == "HIGH"
    assert [i["impact_pct"] for i in rep["impacts"]] == [41.2, 46.2]
