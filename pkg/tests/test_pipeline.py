import pytest
from hypothesis import given, settings, strategies as st

from sciverify.core import AbstractDoc, Claim, Corpus, EvidenceEntry, GoldEvidence, Label
from sciverify.pipeline import (
    ABLATION_HEADER,
    ABLATION_ROWS,
    PipelineConfig,
    PipelineError,
    ablation_grid,
    ablation_json,
    ablation_tsv,
    run_pipeline,
)
from sciverify.retrieval import build_index, retrieve

ORACLE3 = PipelineConfig(retrieval="oracle", selector="oracle", labeler="oracle")


def _doc(doc_id, *sentences):
    return AbstractDoc(doc_id, f"doc {doc_id}", tuple(sentences))


@pytest.fixture
def med_corpus():
    return Corpus.from_docs([
        _doc(1, "Statins lower cholesterol.", "Muscle pain is a side effect.",
             "Statins reduce mortality in heart disease."),
        _doc(2, "Metformin improves glucose control.", "Weight loss was observed."),
        _doc(3, "Exercise improves mood.", "Running reduced anxiety scores."),
        _doc(4, "Vitamin C does not prevent colds.", "Duration was slightly shorter."),
        _doc(5, "Sleep loss impairs memory.", "Recall fell after one night awake."),
    ])


@pytest.fixture
def med_claims():
    return [
        Claim(1, "Statins reduce mortality in heart disease.", (1,)),
        Claim(2, "Vitamin C prevents colds.", (4,)),
        Claim(3, "Exercise reduces anxiety.", (3, 5)),
        Claim(4, "Coffee causes cancer.", (2,)),
    ]


@pytest.fixture
def med_gold():
    return [
        GoldEvidence(1, {1: EvidenceEntry(Label.SUPPORTS, (frozenset({2}),))}),
        GoldEvidence(2, {4: EvidenceEntry(Label.REFUTES, (frozenset({0}), frozenset({1})))}),
        GoldEvidence(3, {3: EvidenceEntry(Label.SUPPORTS, (frozenset({0, 1}),))}),
        GoldEvidence(4, {}),
    ]


def test_triple_oracle_reproduces_gold(med_corpus, med_claims, med_gold):
    preds = run_pipeline(med_corpus, med_claims, med_gold, ORACLE3)
    assert [p.claim_id for p in preds] == [1, 2, 3, 4]
    for p, g in zip(preds, med_gold):
        assert set(p.entries) == set(g.entries)
        for doc_id, e in p.entries.items():
            assert e.label is g.entries[doc_id].label
            assert e.sentences == g.entries[doc_id].sentence_union()


def test_retrieval_miss_drops_gold_abstract():
    corpus = Corpus.from_docs(
        [_doc(i, f"alpha beta gamma {i}") for i in range(1, 5)]
        + [_doc(9, "unrelated words only")]
    )
    claims = [Claim(1, "alpha beta gamma", (9,))]
    gold = [GoldEvidence(1, {9: EvidenceEntry(Label.SUPPORTS, (frozenset({0}),))})]
    config = PipelineConfig(retrieval="tfidf:3", selector="first", labeler="always:SUPPORTS")
    (pred,) = run_pipeline(corpus, claims, gold, config)
    assert 9 not in pred.entries
    assert len(pred.entries) == 3


def test_empty_selection_gives_empty_entries(med_corpus, med_claims):
    config = PipelineConfig(selector="tfidf-threshold:1.0", labeler="always:SUPPORTS")
    claims = [Claim(9, "nothing matches here at all", ())]
    (pred,) = run_pipeline(med_corpus, claims, None, config)
    assert pred.entries == {}


def test_oracle_without_gold_is_rejected(med_corpus, med_claims):
    with pytest.raises(PipelineError):
        run_pipeline(med_corpus, med_claims, None, PipelineConfig(selector="oracle"))
    with pytest.raises(PipelineError):
        run_pipeline(med_corpus, med_claims, None, PipelineConfig(retrieval="bm25:3"))


def test_predictions_within_retrieved_candidates(med_corpus, med_claims):
    config = PipelineConfig(retrieval="tfidf:2", selector="tfidf-topk:1")
    index = build_index(med_corpus)
    for claim, pred in zip(med_claims, run_pipeline(med_corpus, med_claims, None, config)):
        candidates = {d for d, _ in retrieve(index, claim.text, 2)}
        assert set(pred.entries) <= candidates
        for entry in pred.entries.values():
            assert entry.label is not Label.NOT_ENOUGH_INFO
            assert len(entry.sentences) == 1


def test_threads_do_not_change_output(med_corpus, med_claims, med_gold):
    config = PipelineConfig(retrieval="tfidf:3", selector="tfidf-topk:2", labeler="oracle")
    one = run_pipeline(med_corpus, med_claims, med_gold, config, threads=1)
    many = run_pipeline(med_corpus, med_claims, med_gold, config, threads=8)
    assert one == many


def test_ablation_grid(med_corpus, med_claims, med_gold):
    rows = ablation_grid(med_corpus, med_claims, med_gold, PipelineConfig())
    assert [r.oracle for r in rows] == list(ABLATION_ROWS)
    top = rows[0]
    assert top.abstract.recall == 1 and top.sentence.recall == 1
    assert top.abstract.precision == 1 and top.sentence.precision == 1
    tsv = ablation_tsv(rows).splitlines()
    assert tsv[0].split("\t") == list(ABLATION_HEADER) and len(tsv) == 9
    assert tsv[1].startswith("oracle\toracle\toracle\t100.0")
    assert len(ablation_json(rows)) == 8


def test_retrieval_oracle_row_has_perfect_precision(med_corpus, med_claims, med_gold):
    rows = ablation_grid(med_corpus, med_claims, med_gold, PipelineConfig())
    row = rows[1]  # system retrieval, oracle selection and label
    assert row.oracle == (False, True, True)
    if row.abstract.precision_den:
        assert row.abstract.precision == 1


_vocab = ["aa", "bb", "cc", "dd", "ee"]


@settings(max_examples=40, deadline=None)
@given(st.lists(st.lists(st.lists(st.sampled_from(_vocab), min_size=1, max_size=4),
                         min_size=1, max_size=4), min_size=2, max_size=6),
       st.integers(1, 4), st.data())
def test_oracle_selection_and_label_never_hurt_precision(docs, k, data):
    corpus = Corpus.from_docs(_doc(i, *(" ".join(s) for s in sents))
                              for i, sents in enumerate(docs))
    doc_id = data.draw(st.sampled_from(range(len(docs))))
    n = len(docs[doc_id])
    rationale = data.draw(st.frozensets(st.integers(0, n - 1), min_size=1, max_size=3))
    claims = [Claim(1, " ".join(data.draw(st.lists(st.sampled_from(_vocab), min_size=1))),
                    (doc_id,))]
    gold = [GoldEvidence(1, {doc_id: EvidenceEntry(Label.REFUTES, (rationale,))})]
    config = PipelineConfig(retrieval=f"tfidf:{k}", selector="oracle", labeler="oracle")
    (pred,) = run_pipeline(corpus, claims, gold, config)
    assert set(pred.entries) <= {doc_id}
    for entry in pred.entries.values():
        assert entry.label is Label.REFUTES and entry.sentences == rationale
