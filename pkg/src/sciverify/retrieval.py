"""TF-IDF abstract retrieval and lexical sentence ranking.

Featurization: lowercase, split on every non-alphanumeric character, then
take contiguous n-grams (bigrams joined by a single space). Weights are raw
term counts times ``ln((1 + N) / (1 + df)) + 1``; vectors are L2-normalized,
so the dot product of two vectors is their cosine similarity.
"""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from .core import AbstractDoc, Corpus, DataError
from .io import open_text

FIELD_MODES = ("title+abstract", "abstract")
INDEX_FORMAT = "sciverify-tfidf"
INDEX_VERSION = 1

_SPLIT = re.compile(r"[^0-9a-z]+")

SparseVector = dict[int, float]


def tokenize(text: str) -> list[str]:
    # str.lower() then ASCII split; non-ASCII letters act as separators too
    return [t for t in _SPLIT.split(text.lower()) if t]


def ngrams(tokens: Sequence[str], ngram_range: tuple[int, int] = (1, 2)) -> list[str]:
    low, high = ngram_range
    out = []
    for n in range(low, high + 1):
        for i in range(len(tokens) - n + 1):
            out.append(" ".join(tokens[i:i + n]))
    return out


def smooth_idf(n_docs: int, df: int) -> float:
    return math.log((1 + n_docs) / (1 + df)) + 1.0


def _check_ngram_range(ngram_range) -> tuple[int, int]:
    low, high = (int(x) for x in ngram_range)
    if not 1 <= low <= high <= 2:
        raise ValueError(f"ngram_range must satisfy 1 <= low <= high <= 2, got {ngram_range}")
    return low, high


def document_text(doc: AbstractDoc, field_mode: str = "title+abstract") -> str:
    if field_mode == "abstract":
        return " ".join(doc.sentences)
    if field_mode == "title+abstract":
        return " ".join((doc.title, *doc.sentences))
    raise ValueError(f"unknown field mode {field_mode!r}; expected one of {FIELD_MODES}")


def _normalize(weights: Mapping[int, float]) -> SparseVector:
    norm = math.sqrt(sum(w * w for w in weights.values()))
    if norm == 0.0:
        return {}
    return {f: w / norm for f, w in weights.items()}


def cosine(u: Mapping[int, float], v: Mapping[int, float]) -> float:
    """Dot product of two normalized sparse vectors, clamped into [0, 1]."""
    if len(u) > len(v):
        u, v = v, u
    s = sum(w * v[f] for f, w in u.items() if f in v)
    return min(max(s, 0.0), 1.0)


@dataclass(frozen=True)
class TfIdfIndex:
    vocabulary: dict[str, int]
    idf: list[float]
    doc_vectors: dict[int, SparseVector]
    ngram_range: tuple[int, int] = (1, 2)
    field_mode: str = "title+abstract"
    # feature id -> [(doc_id, weight)], doc_ids ascending
    postings: dict[int, list[tuple[int, float]]] = field(default_factory=dict, repr=False)

    @property
    def n_docs(self) -> int:
        return len(self.doc_vectors)

    def vectorize(self, text: str) -> SparseVector:
        """TF-IDF vector of arbitrary text; out-of-vocabulary n-grams are dropped."""
        counts = Counter(
            self.vocabulary[g]
            for g in ngrams(tokenize(text), self.ngram_range)
            if g in self.vocabulary
        )
        return _normalize({f: c * self.idf[f] for f, c in sorted(counts.items())})

    def to_json(self) -> dict:
        features = sorted(self.vocabulary.items(), key=lambda kv: kv[1])
        return {
            "format": INDEX_FORMAT,
            "version": INDEX_VERSION,
            "ngram_range": list(self.ngram_range),
            "field_mode": self.field_mode,
            "features": [g for g, _ in features],
            "idf": self.idf,
            "docs": {
                str(d): [[f, w] for f, w in vec.items()]
                for d, vec in self.doc_vectors.items()
            },
        }

    @classmethod
    def from_json(cls, obj: dict) -> "TfIdfIndex":
        if obj.get("format") != INDEX_FORMAT:
            raise DataError("not a TF-IDF index file")
        if obj.get("version") != INDEX_VERSION:
            raise DataError(f"unsupported index version {obj.get('version')!r}")
        vocabulary = {g: i for i, g in enumerate(obj["features"])}
        doc_vectors = {
            int(d): {int(f): float(w) for f, w in pairs}
            for d, pairs in obj["docs"].items()
        }
        doc_vectors = dict(sorted(doc_vectors.items()))
        return cls(
            vocabulary=vocabulary,
            idf=[float(x) for x in obj["idf"]],
            doc_vectors=doc_vectors,
            ngram_range=tuple(obj["ngram_range"]),
            field_mode=obj["field_mode"],
            postings=_build_postings(doc_vectors),
        )


def _build_postings(doc_vectors: Mapping[int, SparseVector]) -> dict[int, list[tuple[int, float]]]:
    postings: dict[int, list[tuple[int, float]]] = {}
    for doc_id in sorted(doc_vectors):
        for f, w in doc_vectors[doc_id].items():
            postings.setdefault(f, []).append((doc_id, w))
    return postings


def build_index(corpus: Corpus, ngram_range: tuple[int, int] = (1, 2),
                field_mode: str = "title+abstract") -> TfIdfIndex:
    if len(corpus) == 0:
        raise DataError("cannot index an empty corpus")
    ngram_range = _check_ngram_range(ngram_range)
    if field_mode not in FIELD_MODES:
        raise ValueError(f"unknown field mode {field_mode!r}; expected one of {FIELD_MODES}")

    vocabulary: dict[str, int] = {}
    doc_counts: dict[int, Counter] = {}
    df: list[int] = []
    for doc in corpus:  # ascending doc_id
        grams = ngrams(tokenize(document_text(doc, field_mode)), ngram_range)
        counts: Counter = Counter()
        for g in grams:
            fid = vocabulary.get(g)
            if fid is None:
                fid = vocabulary[g] = len(vocabulary)
                df.append(0)
            counts[fid] += 1
        for fid in counts:
            df[fid] += 1
        doc_counts[doc.doc_id] = counts

    n = len(corpus)
    idf = [smooth_idf(n, d) for d in df]
    doc_vectors = {
        doc_id: _normalize({f: c * idf[f] for f, c in sorted(counts.items())})
        for doc_id, counts in doc_counts.items()
    }
    return TfIdfIndex(
        vocabulary=vocabulary,
        idf=idf,
        doc_vectors=doc_vectors,
        ngram_range=ngram_range,
        field_mode=field_mode,
        postings=_build_postings(doc_vectors),
    )


def retrieve(index: TfIdfIndex, query_text: str, k: int = 3) -> list[tuple[int, float]]:
    """Top-``k`` documents by cosine similarity; ties go to the smaller doc_id.

    Documents with zero similarity are still ranked (after all positive
    ones), so the result always has ``min(k, len(corpus))`` items.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    query = index.vectorize(query_text)
    sims: dict[int, float] = {}
    for f, qw in query.items():
        for doc_id, dw in index.postings.get(f, ()):
            sims[doc_id] = sims.get(doc_id, 0.0) + qw * dw
    scored = [(doc_id, min(max(sims.get(doc_id, 0.0), 0.0), 1.0)) for doc_id in index.doc_vectors]
    scored.sort(key=lambda t: (-t[1], t[0]))
    return scored[:k]


def retrieve_many(index: TfIdfIndex, queries: Sequence[str], k: int = 3,
                  threads: int = 1) -> list[list[tuple[int, float]]]:
    if threads <= 1:
        return [retrieve(index, q, k) for q in queries]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda q: retrieve(index, q, k), queries))


def rank_sentences(claim_text: str, abstract: AbstractDoc,
                   index: Optional[TfIdfIndex] = None,
                   ngram_range: tuple[int, int] = (1, 2)) -> list[float]:
    """Cosine similarity between the claim and each sentence of ``abstract``.

    With an ``index`` the corpus-level idf weights are used (n-grams unknown
    to the index are dropped). Without one, idf is computed locally, treating
    each sentence of the abstract as a document.
    """
    if not abstract.sentences:
        raise DataError(f"abstract {abstract.doc_id} has no sentences")
    if index is not None:
        claim_vec = index.vectorize(claim_text)
        return [cosine(claim_vec, index.vectorize(s)) for s in abstract.sentences]

    ngram_range = _check_ngram_range(ngram_range)
    sent_grams = [ngrams(tokenize(s), ngram_range) for s in abstract.sentences]
    df: Counter = Counter()
    for grams in sent_grams:
        df.update(set(grams))
    n = len(sent_grams)

    def vec(grams: Iterable[str]) -> dict[str, float]:
        counts = Counter(grams)
        weights = {g: c * smooth_idf(n, df.get(g, 0)) for g, c in sorted(counts.items())}
        norm = math.sqrt(sum(w * w for w in weights.values()))
        return {g: w / norm for g, w in weights.items()} if norm else {}

    claim_vec = vec(ngrams(tokenize(claim_text), ngram_range))
    scores = []
    for grams in sent_grams:
        sv = vec(grams)
        s = sum(w * sv[g] for g, w in claim_vec.items() if g in sv)
        scores.append(min(max(s, 0.0), 1.0))
    return scores


def save_index(index: TfIdfIndex, path) -> None:
    with open_text(path, "w") as f:
        f.write(json.dumps(index.to_json(), ensure_ascii=False))
        f.write("\n")


def load_index(path) -> TfIdfIndex:
    with open_text(path) as f:
        return TfIdfIndex.from_json(json.load(f))
