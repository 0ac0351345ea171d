"""Builders shared by the test modules."""

from sciverify.core import (
    AbstractDoc,
    Corpus,
    EvidenceEntry,
    GoldEvidence,
    Label,
    PredictedEntry,
    Prediction,
)


def make_doc(doc_id, n, structured=False, title=None):
    return AbstractDoc(
        doc_id, title or f"Title {doc_id}",
        tuple(f"Sentence {i} of document {doc_id}." for i in range(n)), structured,
    )


def core_from_raw(lengths, gold_raw, preds_raw):
    """Convert metric_oracle dict instances into package types."""
    corpus = Corpus.from_docs(make_doc(d, n) for d, n in lengths.items())
    gold = [
        GoldEvidence(c, {
            d: EvidenceEntry(Label(lab), tuple(frozenset(r) for r in rs))
            for d, (lab, rs) in docs.items()
        })
        for c, docs in gold_raw.items()
    ]
    preds = [
        Prediction(c, {
            d: PredictedEntry(Label(lab), frozenset(sents), scores)
            for d, (lab, sents, scores) in docs.items()
        })
        for c, docs in preds_raw.items()
    ]
    return corpus, gold, preds


def random_graph(rng):
    """A random citation graph as a list of Citance, ids unique."""
    from sciverify.corpus_builder import Citance

    citances = []
    for cid in range(rng.randint(1, 12)):
        k = rng.randint(1, 4)
        citances.append(Citance(
            citance_id=cid,
            citing_doc_id=rng.randint(0, 3),
            paragraph_id=rng.randint(0, 3),
            cited_doc_ids=tuple(rng.sample(range(100, 130), k)),
        ))
    return citances


_WORDS = ("protein", "cell", "tumor", "dose", "risk", "gene", "mouse", "trial", "blood",
          "insulin", "virus", "immune", "brain", "heart", "liver", "drug", "signal",
          "growth", "stress", "receptor", "therapy", "infection", "mutation", "response")


def write_synthetic_dataset(directory, n_docs=40, n_claims=25, seed=0):
    """Write corpus, claims, citation graph and seed files; return their paths."""
    import json
    import random

    rng = random.Random(seed)
    directory.mkdir(parents=True, exist_ok=True)
    docs = []
    for d in range(n_docs):
        doc_id = 1000 + 7 * d
        sentences = [" ".join(rng.choices(_WORDS, k=rng.randint(4, 9))) + "."
                     for _ in range(rng.randint(2, 9))]
        docs.append({"doc_id": doc_id, "title": " ".join(rng.choices(_WORDS, k=3)),
                     "abstract": sentences, "structured": rng.random() < 0.3})
    claims = []
    for c in range(n_claims):
        cited = rng.sample(docs, rng.randint(1, 2))
        evidence = {}
        for doc in cited:
            if rng.random() < 0.7:
                n = len(doc["abstract"])
                idx = rng.sample(range(n), min(n, rng.randint(1, 4)))
                label = rng.choice(["SUPPORT", "CONTRADICT"])
                rats = [idx[:1]] + ([idx[1:3]] if len(idx) > 1 else [])
                evidence[str(doc["doc_id"])] = [
                    {"sentences": sorted(r), "label": label} for r in rats if r]
        text = " ".join(rng.choices(cited[0]["abstract"][0].rstrip(".").split(), k=4))
        claims.append({"id": 3 * c + 1, "claim": text, "evidence": evidence,
                       "cited_doc_ids": [doc["doc_id"] for doc in cited]})
    graph = []
    ids = [doc["doc_id"] for doc in docs]
    for cid in range(30):
        graph.append({"citance_id": cid, "citing_doc_id": rng.randint(1, 4),
                      "paragraph_id": rng.randint(0, 5),
                      "cited_doc_ids": rng.sample(ids, rng.randint(1, 3))})
    paths = {name: directory / f"{name}.jsonl" for name in ("corpus", "claims", "graph")}
    for name, rows in (("corpus", docs), ("claims", claims), ("graph", graph)):
        paths[name].write_text("".join(json.dumps(r) + "\n" for r in rows))
    paths["seeds"] = directory / "seeds.txt"
    paths["seeds"].write_text("".join(f"{d}\n" for d in ids[:6]))
    return paths


# (criterion number, title, status, detail) recorded by the acceptance suite
ACCEPTANCE_RESULTS = []


def find_scifact_dir():
    """Directory holding the released dataset files, or None.

    Looks at $SCIFACT_DATA first, then ./data next to the package root.
    """
    import os
    from pathlib import Path

    root = os.environ.get("SCIFACT_DATA")
    candidates = [Path(root)] if root else []
    candidates.append(Path(__file__).resolve().parent.parent / "data")
    for c in candidates:
        if (c / "corpus.jsonl").exists() and (c / "claims_train.jsonl").exists():
            return c
    return None
