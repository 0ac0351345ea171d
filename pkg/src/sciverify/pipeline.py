"""Retrieval -> rationale selection -> label prediction, and the oracle
ablation grid built on top of it."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Iterable, Optional, Sequence

from .core import Claim, Corpus, GoldEvidence, Label, PredictedEntry, Prediction, gold_index
from .metrics import MetricReport, evaluate_abstract_level, evaluate_sentence_level
from .retrieval import TfIdfIndex, build_index, retrieve
from .stages import (
    ScoreTable,
    StageSpecError,
    is_oracle_spec,
    make_labeler,
    make_selector,
)


class PipelineError(ValueError):
    """The requested configuration cannot run on the given inputs."""


@dataclass(frozen=True)
class PipelineConfig:
    retrieval: str = "tfidf:3"  # "tfidf:<k>" or "oracle"
    selector: str = "tfidf-topk:3"
    labeler: str = "always:SUPPORTS"
    seed: int = 0  # reserved; every shipped stage is deterministic
    ngram_range: tuple[int, int] = (1, 2)
    field_mode: str = "title+abstract"

    @property
    def uses_oracle(self) -> bool:
        return any(is_oracle_spec(s) for s in (self.retrieval, self.selector, self.labeler))

    @property
    def retrieval_k(self) -> Optional[int]:
        name, _, arg = self.retrieval.partition(":")
        name = name.strip().lower()
        if name == "oracle":
            return None
        if name != "tfidf":
            raise PipelineError(f"unknown retrieval {self.retrieval!r}")
        try:
            k = int(arg) if arg else 3
        except ValueError:
            raise PipelineError(f"bad k in retrieval {self.retrieval!r}") from None
        if k < 1:
            raise PipelineError("retrieval k must be >= 1")
        return k


def _needs_index(config: PipelineConfig) -> bool:
    return config.retrieval_k is not None or config.selector.lower().startswith("tfidf")


def run_pipeline(corpus: Corpus, claims: Iterable[Claim],
                 gold: Optional[Iterable[GoldEvidence]], config: PipelineConfig, *,
                 index: Optional[TfIdfIndex] = None,
                 scores: Optional[ScoreTable] = None,
                 score_loader: Optional[Callable] = None,
                 probs_loader: Optional[Callable] = None,
                 threads: int = 1) -> list[Prediction]:
    """Predict evidence abstracts, labels and rationale sentences per claim.

    Candidates labeled NOT_ENOUGH_INFO are dropped. Output has one
    :class:`Prediction` per claim in ascending claim-id order.
    """
    gold_map = gold_index(gold) if gold is not None else None
    if config.uses_oracle and gold_map is None:
        raise PipelineError("oracle stages require gold evidence")
    k = config.retrieval_k
    if index is None and _needs_index(config):
        index = build_index(corpus, config.ngram_range, config.field_mode)
    try:
        selector = make_selector(config.selector, gold=gold_map, index=index,
                                 scores=scores, score_loader=score_loader)
        labeler = make_labeler(config.labeler, gold=gold_map, probs_loader=probs_loader)
    except StageSpecError as e:
        raise PipelineError(str(e)) from None

    def one(claim: Claim) -> Prediction:
        if k is None:
            g = gold_map.get(claim.id)
            candidates: Sequence[int] = list(g.entries) if g is not None else []
        else:
            candidates = [doc_id for doc_id, _ in retrieve(index, claim.text, k)]
        entries = {}
        for doc_id in candidates:
            abstract = corpus[doc_id]
            selected, sent_scores = selector.select(claim, abstract)
            label = labeler.predict(claim, abstract, selected)
            if label is Label.NOT_ENOUGH_INFO:
                continue
            entries[doc_id] = PredictedEntry(label, selected, sent_scores)
        return Prediction(claim.id, entries)

    ordered = sorted(claims, key=lambda c: c.id)
    if threads <= 1:
        return [one(c) for c in ordered]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, ordered))


# Table order: triple oracle, three double-oracle rows, three single-oracle
# rows, full system. True marks an oracle slot (retrieval, selection, label).
ABLATION_ROWS: tuple[tuple[bool, bool, bool], ...] = (
    (True, True, True),
    (False, True, True),
    (True, False, True),
    (True, True, False),
    (True, False, False),
    (False, True, False),
    (False, False, True),
    (False, False, False),
)


@dataclass(frozen=True)
class AblationRow:
    oracle: tuple[bool, bool, bool]
    config: PipelineConfig
    sentence: MetricReport
    abstract: MetricReport

    def stage_names(self) -> tuple[str, str, str]:
        return (self.config.retrieval, self.config.selector, self.config.labeler)


def ablation_grid(corpus: Corpus, claims: Sequence[Claim], gold: Sequence[GoldEvidence],
                  base_config: PipelineConfig, *, cap: int = 3, cap_mode: str = "strict",
                  index: Optional[TfIdfIndex] = None, threads: int = 1,
                  **stage_inputs) -> list[AblationRow]:
    """Run the eight (system | oracle)^3 configurations and score each."""
    if gold is None:
        raise PipelineError("ablation requires gold evidence")
    claims = list(claims)
    gold = list(gold)
    if index is None:
        index = build_index(corpus, base_config.ngram_range, base_config.field_mode)
    rows = []
    for flags in ABLATION_ROWS:
        config = replace(
            base_config,
            retrieval="oracle" if flags[0] else base_config.retrieval,
            selector="oracle" if flags[1] else base_config.selector,
            labeler="oracle" if flags[2] else base_config.labeler,
        )
        preds = run_pipeline(corpus, claims, gold, config, index=index,
                             threads=threads, **stage_inputs)
        rows.append(AblationRow(
            oracle=flags,
            config=config,
            sentence=evaluate_sentence_level(gold, preds, corpus),
            abstract=evaluate_abstract_level(gold, preds, corpus, cap=cap, cap_mode=cap_mode),
        ))
    return rows


ABLATION_HEADER = (
    "retrieval", "selection", "label",
    "sentence_P", "sentence_R", "sentence_F1",
    "abstract_P", "abstract_R", "abstract_F1",
)


def ablation_tsv(rows: Iterable[AblationRow]) -> str:
    lines = ["\t".join(ABLATION_HEADER)]
    for row in rows:
        lines.append("\t".join((*row.stage_names(), *row.sentence.percentages(),
                                *row.abstract.percentages())))
    return "\n".join(lines) + "\n"


def ablation_json(rows: Iterable[AblationRow]) -> list[dict]:
    return [
        {
            "retrieval": row.config.retrieval,
            "selection": row.config.selector,
            "label": row.config.labeler,
            "oracle": list(row.oracle),
            "sentence": row.sentence.to_json(),
            "abstract": row.abstract.to_json(),
        }
        for row in rows
    ]

