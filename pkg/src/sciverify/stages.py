"""Rationale selection and label prediction stages.

Selectors map ``(claim, abstract)`` to a set of sentence indices (plus
optional per-sentence scores). Labelers map ``(claim, abstract, selected)``
to a :class:`Label` and must answer NOT_ENOUGH_INFO for an empty selection.

Only the oracle stages are constructed with gold evidence; every other
stage has no way to reach it.
"""

from __future__ import annotations

import logging
from typing import Iterable, Mapping, Optional, Protocol, Sequence

from .core import (
    LABEL_ORDER,
    AbstractDoc,
    Claim,
    GoldEvidence,
    Label,
    parse_label,
)
from .io import LabelProbs, SentenceScores
from .retrieval import TfIdfIndex, rank_sentences

log = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 0.5
# Thresholds reported for scorers trained on other fact-checking corpora.
THRESHOLD_PRESETS = {"default": 0.5, "fever": 0.025, "snopes": 0.75}

Selection = tuple[frozenset[int], Optional[dict[int, float]]]


# -- pure selection / labeling rules -----------------------------------------

def select_threshold(scores: Sequence[float], t: float = DEFAULT_THRESHOLD) -> frozenset[int]:
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"threshold must lie in [0, 1], got {t}")
    return frozenset(i for i, s in enumerate(scores) if s >= t)


def select_topk_sentences(scores: Sequence[float], k: int) -> frozenset[int]:
    if k < 1:
        raise ValueError("k must be >= 1")
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    return frozenset(order[:k])


def select_first_sentence(abstract: AbstractDoc) -> frozenset[int]:
    return frozenset({0})


def select_last_sentence(abstract: AbstractDoc) -> frozenset[int]:
    return frozenset({len(abstract.sentences) - 1})


def oracle_select(gold: Optional[GoldEvidence], doc_id: int) -> frozenset[int]:
    """Union of all gold rationales of ``doc_id``, or the empty set."""
    if gold is None or doc_id not in gold.entries:
        return frozenset()
    return gold.entries[doc_id].sentence_union()


def oracle_label(gold: Optional[GoldEvidence], doc_id: int,
                 selected: Iterable[int]) -> Label:
    """Gold label iff ``selected`` covers at least one full gold rationale."""
    if gold is None or doc_id not in gold.entries:
        return Label.NOT_ENOUGH_INFO
    entry = gold.entries[doc_id]
    selected = frozenset(selected)
    if any(r <= selected for r in entry.rationales):
        return entry.label
    return Label.NOT_ENOUGH_INFO


def predict_from_probs(probs: Sequence[float] | LabelProbs,
                       selected: Iterable[int]) -> Label:
    if isinstance(probs, LabelProbs):
        probs = probs.probs
    if not frozenset(selected):
        return Label.NOT_ENOUGH_INFO
    best = 0
    for i in (1, 2):
        if probs[i] > probs[best]:  # strict: earlier label wins ties
            best = i
    return LABEL_ORDER[best]


# -- stage contracts ----------------------------------------------------------

class RationaleSelector(Protocol):
    name: str
    is_oracle: bool

    def select(self, claim: Claim, abstract: AbstractDoc) -> Selection: ...


class LabelPredictor(Protocol):
    name: str
    is_oracle: bool

    def predict(self, claim: Claim, abstract: AbstractDoc,
                selected: frozenset[int]) -> Label: ...


class ScoreTable:
    """Lookup of externally computed sentence scores by (claim, doc)."""

    def __init__(self, rows: Iterable[SentenceScores]):
        self._rows = {(r.claim_id, r.doc_id): r.scores for r in rows}
        self._warned: set[tuple[int, int]] = set()

    def get(self, claim_id: int, abstract: AbstractDoc) -> list[float]:
        scores = self._rows.get((claim_id, abstract.doc_id))
        if scores is None:
            key = (claim_id, abstract.doc_id)
            if key not in self._warned:
                self._warned.add(key)
                log.warning("no sentence scores for claim %d, doc %d; using zeros", *key)
            return [0.0] * len(abstract.sentences)
        if len(scores) != len(abstract.sentences):
            raise ValueError(
                f"{len(scores)} scores for doc {abstract.doc_id} "
                f"with {len(abstract.sentences)} sentences"
            )
        return list(scores)


def _with_scores(selected: frozenset[int], scores: Sequence[float]) -> Selection:
    return selected, {i: scores[i] for i in sorted(selected)}


class ThresholdSelector:
    is_oracle = False

    def __init__(self, table: ScoreTable, t: float = DEFAULT_THRESHOLD):
        if not 0.0 <= t <= 1.0:
            raise ValueError(f"threshold must lie in [0, 1], got {t}")
        self.table = table
        self.t = t
        self.name = f"threshold:{t:g}"

    def select(self, claim, abstract):
        scores = self.table.get(claim.id, abstract)
        return _with_scores(select_threshold(scores, self.t), scores)


class TopKSelector:
    is_oracle = False

    def __init__(self, table: ScoreTable, k: int):
        if k < 1:
            raise ValueError("k must be >= 1")
        self.table = table
        self.k = k
        self.name = f"topk:{k}"

    def select(self, claim, abstract):
        scores = self.table.get(claim.id, abstract)
        return _with_scores(select_topk_sentences(scores, self.k), scores)


class TfidfTopKSelector:
    """Top-k sentences by lexical similarity to the claim."""

    is_oracle = False

    def __init__(self, k: int = 3, index: Optional[TfIdfIndex] = None):
        if k < 1:
            raise ValueError("k must be >= 1")
        self.k = k
        self.index = index
        self.name = f"tfidf-topk:{k}"

    def select(self, claim, abstract):
        scores = rank_sentences(claim.text, abstract, self.index)
        return _with_scores(select_topk_sentences(scores, self.k), scores)


class TfidfThresholdSelector:
    is_oracle = False

    def __init__(self, t: float, index: Optional[TfIdfIndex] = None):
        if not 0.0 <= t <= 1.0:
            raise ValueError(f"threshold must lie in [0, 1], got {t}")
        self.t = t
        self.index = index
        self.name = f"tfidf-threshold:{t:g}"

    def select(self, claim, abstract):
        scores = rank_sentences(claim.text, abstract, self.index)
        return _with_scores(select_threshold(scores, self.t), scores)


class FirstSentenceSelector:
    is_oracle = False
    name = "first"

    def select(self, claim, abstract):
        return select_first_sentence(abstract), None


class LastSentenceSelector:
    is_oracle = False
    name = "last"

    def select(self, claim, abstract):
        return select_last_sentence(abstract), None


class OracleSelector:
    is_oracle = True
    name = "oracle"

    def __init__(self, gold: Mapping[int, GoldEvidence]):
        self.gold = gold

    def select(self, claim, abstract):
        return oracle_select(self.gold.get(claim.id), abstract.doc_id), None


class OracleLabeler:
    is_oracle = True
    name = "oracle"

    def __init__(self, gold: Mapping[int, GoldEvidence]):
        self.gold = gold

    def predict(self, claim, abstract, selected):
        return oracle_label(self.gold.get(claim.id), abstract.doc_id, selected)


class ProbsLabeler:
    """Argmax over externally computed label distributions."""

    is_oracle = False
    name = "external"

    def __init__(self, rows: Iterable[LabelProbs]):
        self._rows = {(r.claim_id, r.doc_id): r.probs for r in rows}
        self._warned: set[tuple[int, int]] = set()

    def predict(self, claim, abstract, selected):
        if not selected:
            return Label.NOT_ENOUGH_INFO
        key = (claim.id, abstract.doc_id)
        probs = self._rows.get(key)
        if probs is None:
            if key not in self._warned:
                self._warned.add(key)
                log.warning("no label probs for claim %d, doc %d; predicting NOT_ENOUGH_INFO", *key)
            return Label.NOT_ENOUGH_INFO
        return predict_from_probs(probs, selected)


class ConstantLabeler:
    is_oracle = False

    def __init__(self, label: Label):
        self.label = label
        self.name = f"always:{label.value}"

    def predict(self, claim, abstract, selected):
        if not selected:
            return Label.NOT_ENOUGH_INFO
        return self.label


# -- spec parsing ------------------------------------------------------------

class StageSpecError(ValueError):
    """A selector or labeler spec string is malformed or unsatisfiable."""


def _split_spec(spec: str) -> tuple[str, str]:
    name, _, arg = spec.partition(":")
    return name.strip().lower(), arg.strip()


def _parse_threshold(arg: str, spec: str) -> float:
    if arg.lower() in THRESHOLD_PRESETS:
        return THRESHOLD_PRESETS[arg.lower()]
    try:
        t = float(arg)
    except ValueError:
        raise StageSpecError(f"bad threshold in {spec!r}") from None
    if not 0.0 <= t <= 1.0:
        raise StageSpecError(f"threshold out of [0, 1] in {spec!r}")
    return t


def _parse_k(arg: str, spec: str) -> int:
    try:
        k = int(arg)
    except ValueError:
        raise StageSpecError(f"bad k in {spec!r}") from None
    if k < 1:
        raise StageSpecError(f"k must be >= 1 in {spec!r}")
    return k


def is_oracle_spec(spec: str) -> bool:
    return _split_spec(spec)[0] == "oracle"


def make_selector(spec: str, *, gold: Optional[Mapping[int, GoldEvidence]] = None,
                  index: Optional[TfIdfIndex] = None,
                  scores: Optional[ScoreTable] = None,
                  score_loader=None) -> RationaleSelector:
    """Build a selector from a spec such as ``threshold:0.5`` or ``tfidf-topk:3``.

    ``threshold:`` and ``topk:`` read from ``scores``; ``external:<file>``
    loads a score file through ``score_loader`` and thresholds it at 0.5.
    """
    name, arg = _split_spec(spec)
    if name == "oracle":
        if gold is None:
            raise StageSpecError("oracle selector requires gold evidence")
        return OracleSelector(gold)
    if name == "first":
        return FirstSentenceSelector()
    if name == "last":
        return LastSentenceSelector()
    if name == "tfidf-topk":
        return TfidfTopKSelector(_parse_k(arg or "3", spec), index)
    if name == "tfidf-threshold":
        return TfidfThresholdSelector(_parse_threshold(arg or "0.5", spec), index)
    if name in ("threshold", "topk"):
        if scores is None:
            raise StageSpecError(f"selector {spec!r} needs a sentence score file")
        if name == "threshold":
            return ThresholdSelector(scores, _parse_threshold(arg or "0.5", spec))
        return TopKSelector(scores, _parse_k(arg, spec))
    if name == "external":
        if not arg or score_loader is None:
            raise StageSpecError(f"selector {spec!r} needs a score file path")
        sel = ThresholdSelector(ScoreTable(score_loader(arg)), DEFAULT_THRESHOLD)
        sel.name = "external"
        return sel
    raise StageSpecError(f"unknown selector {spec!r}")


def make_labeler(spec: str, *, gold: Optional[Mapping[int, GoldEvidence]] = None,
                 probs_loader=None) -> LabelPredictor:
    name, arg = _split_spec(spec)
    if name == "oracle":
        if gold is None:
            raise StageSpecError("oracle labeler requires gold evidence")
        return OracleLabeler(gold)
    if name == "always":
        try:
            return ConstantLabeler(parse_label(arg))
        except ValueError:
            raise StageSpecError(f"bad label in {spec!r}") from None
    if name == "external":
        if not arg or probs_loader is None:
            raise StageSpecError(f"labeler {spec!r} needs a probability file path")
        return ProbsLabeler(probs_loader(arg))
    raise StageSpecError(f"unknown labeler {spec!r}")
