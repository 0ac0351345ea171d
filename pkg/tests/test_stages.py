import logging

import pytest
from hypothesis import given, strategies as st

from helpers import make_doc
from sciverify.core import Claim, EvidenceEntry, GoldEvidence, Label
from sciverify.io import LabelProbs, SentenceScores
from sciverify.stages import (
    THRESHOLD_PRESETS,
    ConstantLabeler,
    OracleLabeler,
    OracleSelector,
    ProbsLabeler,
    ScoreTable,
    StageSpecError,
    make_labeler,
    make_selector,
    oracle_label,
    oracle_select,
    predict_from_probs,
    select_first_sentence,
    select_last_sentence,
    select_threshold,
    select_topk_sentences,
)

GOLD = GoldEvidence(1, {11: EvidenceEntry(Label.SUPPORTS, (frozenset({2, 5}), frozenset({7})))})


def test_threshold_examples():
    assert select_threshold([0.9, 0.4, 0.6], 0.5) == {0, 2}
    assert select_threshold([0.1, 0.2], 0.5) == frozenset()
    assert select_threshold([0.0, 0.3, 1.0], 0.0) == {0, 1, 2}
    with pytest.raises(ValueError):
        select_threshold([0.5], 1.5)


def test_threshold_presets():
    assert THRESHOLD_PRESETS["fever"] == 0.025
    assert THRESHOLD_PRESETS["snopes"] == 0.75
    assert make_selector("threshold:fever", scores=ScoreTable([])).t == 0.025


def test_topk_examples():
    assert select_topk_sentences([0.2, 0.9, 0.9, 0.1], 2) == {1, 2}
    assert select_topk_sentences([0.3, 0.2], 5) == {0, 1}
    assert select_topk_sentences([0.9, 0.5, 0.1], 1) == {0}
    # ties resolve to the lower index
    assert select_topk_sentences([0.5, 0.5, 0.5], 2) == {0, 1}


def test_positional_baselines():
    five, one = make_doc(1, 5), make_doc(2, 1)
    assert select_first_sentence(five) == {0} and select_last_sentence(five) == {4}
    assert select_first_sentence(one) == select_last_sentence(one) == {0}
    assert select_last_sentence(five) == select_last_sentence(five)


def test_oracle_select_examples():
    assert oracle_select(GOLD, 11) == {2, 5, 7}
    assert oracle_select(GOLD, 12) == frozenset()
    single = GoldEvidence(1, {11: EvidenceEntry(Label.REFUTES, (frozenset({3}),))})
    assert oracle_select(single, 11) == {3}


def test_oracle_label_examples():
    assert oracle_label(GOLD, 11, {7, 9}) is Label.SUPPORTS
    assert oracle_label(GOLD, 11, {2}) is Label.NOT_ENOUGH_INFO
    assert oracle_label(GOLD, 11, {2, 5, 7}) is Label.SUPPORTS
    assert oracle_label(GOLD, 12, {0}) is Label.NOT_ENOUGH_INFO


def test_predict_from_probs_examples():
    assert predict_from_probs((0.7, 0.2, 0.1), {3}) is Label.SUPPORTS
    assert predict_from_probs((0.7, 0.2, 0.1), set()) is Label.NOT_ENOUGH_INFO
    assert predict_from_probs((0.4, 0.4, 0.2), {0}) is Label.SUPPORTS
    assert predict_from_probs((0.1, 0.45, 0.45), {0}) is Label.REFUTES
    assert predict_from_probs(LabelProbs(1, 2, (0.1, 0.2, 0.7)), {0}) is Label.NOT_ENOUGH_INFO


_scores = st.lists(st.floats(0, 1), min_size=1, max_size=12)


@given(_scores, st.floats(0, 1), st.floats(0, 1))
def test_threshold_monotone(scores, a, b):
    lo, hi = sorted((a, b))
    assert select_threshold(scores, hi) <= select_threshold(scores, lo)


@given(_scores, st.integers(1, 15))
def test_topk_size(scores, k):
    picked = select_topk_sentences(scores, k)
    assert len(picked) == min(k, len(scores))
    worst_kept = min(scores[i] for i in picked)
    assert all(scores[i] <= worst_kept for i in range(len(scores)) if i not in picked)


_rationales = st.lists(st.frozensets(st.integers(0, 9), min_size=1, max_size=3),
                       min_size=1, max_size=3)


@given(_rationales, st.sampled_from([Label.SUPPORTS, Label.REFUTES]))
def test_oracle_composition_recovers_gold_label(rationales, label):
    gold = GoldEvidence(1, {4: EvidenceEntry(label, tuple(rationales))})
    assert oracle_label(gold, 4, oracle_select(gold, 4)) is label


@given(_rationales, st.frozensets(st.integers(0, 9)), st.frozensets(st.integers(0, 9)))
def test_oracle_label_monotone_in_selection(rationales, a, extra):
    gold = GoldEvidence(1, {4: EvidenceEntry(Label.REFUTES, tuple(rationales))})
    if oracle_label(gold, 4, a) is Label.REFUTES:
        assert oracle_label(gold, 4, a | extra) is Label.REFUTES


@given(st.tuples(*[st.floats(0.001, 1)] * 3), st.floats(0.01, 100))
def test_argmax_scale_invariant(probs, c):
    scaled = tuple(p * c for p in probs)
    assert predict_from_probs(probs, {0}) == predict_from_probs(scaled, {0})


def test_stage_objects():
    claim, doc = Claim(1, "c", (11,)), make_doc(11, 10)
    sel = OracleSelector({1: GOLD})
    selected, scores = sel.select(claim, doc)
    assert selected == {2, 5, 7} and scores is None
    assert OracleLabeler({1: GOLD}).predict(claim, doc, selected) is Label.SUPPORTS
    assert ConstantLabeler(Label.REFUTES).predict(claim, doc, frozenset()) is Label.NOT_ENOUGH_INFO
    assert ConstantLabeler(Label.REFUTES).predict(claim, doc, frozenset({1})) is Label.REFUTES


def test_score_table_missing_pair_warns_once(caplog):
    table = ScoreTable([SentenceScores(1, 11, tuple([0.9] + [0.0] * 9))])
    doc = make_doc(12, 4)
    with caplog.at_level(logging.WARNING):
        assert table.get(1, doc) == [0.0] * 4
        table.get(1, doc)
    assert len(caplog.records) == 1
    sel = make_selector("threshold:0.5", scores=table)
    assert sel.select(Claim(1, "c"), make_doc(11, 10))[0] == {0}


def test_probs_labeler():
    lab = ProbsLabeler([LabelProbs(1, 11, (0.1, 0.8, 0.1))])
    claim, doc = Claim(1, "c"), make_doc(11, 10)
    assert lab.predict(claim, doc, frozenset({0})) is Label.REFUTES
    assert lab.predict(claim, doc, frozenset()) is Label.NOT_ENOUGH_INFO
    assert lab.predict(claim, make_doc(12, 2), frozenset({0})) is Label.NOT_ENOUGH_INFO


@pytest.mark.parametrize("spec,name", [
    ("first", "first"), ("last", "last"), ("tfidf-topk:2", "tfidf-topk:2"),
    ("tfidf-threshold:0.3", "tfidf-threshold:0.3"),
])
def test_make_selector(spec, name):
    assert make_selector(spec).name == name


@pytest.mark.parametrize("spec", [
    "oracle", "threshold:0.5", "topk:2", "tfidf-topk:0", "tfidf-threshold:2", "nope", "external:",
])
def test_make_selector_errors(spec):
    with pytest.raises(StageSpecError):
        make_selector(spec)


def test_make_labeler():
    assert make_labeler("always:CONTRADICT").label is Label.REFUTES
    assert make_labeler("oracle", gold={}).is_oracle
    for bad in ("oracle", "always:MAYBE", "external:", "bogus"):
        with pytest.raises(StageSpecError):
            make_labeler(bad)
