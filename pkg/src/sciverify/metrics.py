"""Abstract-level and sentence-level evaluation, stage diagnostics, and
dataset statistics.

All tallies are integers and ratios are kept as :class:`fractions.Fraction`
until rendering, so results do not depend on claim order.
"""

from __future__ import annotations

import statistics
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Optional

from .core import (
    LABEL_ORDER,
    MAX_RATIONALE_SENTENCES,
    Claim,
    Corpus,
    DataError,
    GoldEvidence,
    Label,
    PredictedEntry,
    Prediction,
    gold_index,
)

CAP_MODES = ("strict", "truncate", "off")


def f1_score(p: Fraction, r: Fraction) -> Fraction:
    if p + r == 0:
        return Fraction(0)
    return 2 * p * r / (p + r)


def _ratio(num: int, den: int) -> Fraction:
    return Fraction(num, den) if den else Fraction(0)


def pct(x) -> str:
    return f"{float(x) * 100:.1f}"


@dataclass(frozen=True)
class MetricReport:
    level: str
    precision_num: int
    precision_den: int
    recall_num: int
    recall_den: int

    @property
    def precision(self) -> Fraction:
        return _ratio(self.precision_num, self.precision_den)

    @property
    def recall(self) -> Fraction:
        return _ratio(self.recall_num, self.recall_den)

    @property
    def f1(self) -> Fraction:
        return f1_score(self.precision, self.recall)

    @property
    def precision_undefined(self) -> bool:
        return self.precision_den == 0

    @property
    def recall_undefined(self) -> bool:
        return self.recall_den == 0

    def percentages(self) -> tuple[str, str, str]:
        return pct(self.precision), pct(self.recall), pct(self.f1)

    def to_json(self) -> dict:
        return {
            "level": self.level,
            "precision": round(float(self.precision), 6),
            "recall": round(float(self.recall), 6),
            "f1": round(float(self.f1), 6),
            "precision_num": self.precision_num,
            "precision_den": self.precision_den,
            "recall_num": self.recall_num,
            "recall_den": self.recall_den,
            "precision_undefined": self.precision_undefined,
        }


def _check_against_corpus(preds: Iterable[Prediction], corpus: Optional[Corpus]) -> None:
    if corpus is None:
        return
    for pred in preds:
        for doc_id, entry in pred.entries.items():
            if doc_id not in corpus:
                raise DataError(f"claim {pred.claim_id}: predicted doc {doc_id} not in corpus")
            n = len(corpus[doc_id])
            bad = [s for s in entry.sentences if not 0 <= s < n]
            if bad:
                raise DataError(
                    f"claim {pred.claim_id}: sentence {min(bad)} out of range for doc {doc_id}"
                )


def capped_sentences(entry: PredictedEntry, cap: int, cap_mode: str) -> Optional[frozenset[int]]:
    """Sentences that count toward abstract-level credit.

    Returns ``None`` when a strict cap disqualifies the entry outright.
    """
    if cap_mode not in CAP_MODES:
        raise ValueError(f"unknown cap mode {cap_mode!r}")
    if cap_mode == "off" or len(entry.sentences) <= cap:
        return entry.sentences
    if cap_mode == "strict":
        return None
    if entry.scores is None or not entry.sentences <= set(entry.scores):
        raise DataError("truncate cap mode needs per-sentence scores for over-cap predictions")
    ranked = sorted(entry.sentences, key=lambda s: (-entry.scores[s], s))
    return frozenset(ranked[:cap])


def evaluate_abstract_level(gold: Iterable[GoldEvidence], preds: Iterable[Prediction],
                            corpus: Optional[Corpus] = None,
                            cap: int = MAX_RATIONALE_SENTENCES,
                            cap_mode: str = "strict") -> MetricReport:
    """Precision and recall of correctly identified evidence abstracts.

    A predicted abstract is correct when it is a gold evidence abstract,
    its label matches, and its (capped) sentences contain a whole gold
    rationale.
    """
    if cap_mode not in CAP_MODES:
        raise ValueError(f"unknown cap mode {cap_mode!r}")
    gold_by_claim = gold_index(gold)
    preds = list(preds)
    _check_against_corpus(preds, corpus)

    correct = predicted = 0
    for pred in preds:
        g = gold_by_claim.get(pred.claim_id)
        for doc_id, entry in pred.entries.items():
            predicted += 1
            gold_entry = g.entries.get(doc_id) if g is not None else None
            if gold_entry is None or gold_entry.label != entry.label:
                continue
            selected = capped_sentences(entry, cap, cap_mode)
            if selected is None:
                continue
            if any(r <= selected for r in gold_entry.rationales):
                correct += 1
    n_gold = sum(len(g.entries) for g in gold_by_claim.values())
    return MetricReport("abstract", correct, predicted, correct, n_gold)


def evaluate_sentence_level(gold: Iterable[GoldEvidence], preds: Iterable[Prediction],
                            corpus: Optional[Corpus] = None) -> MetricReport:
    """Precision and recall of correctly identified rationale sentences (no cap)."""
    gold_by_claim = gold_index(gold)
    preds = list(preds)
    _check_against_corpus(preds, corpus)

    correct = predicted = 0
    for pred in preds:
        g = gold_by_claim.get(pred.claim_id)
        for doc_id, entry in pred.entries.items():
            predicted += len(entry.sentences)
            gold_entry = g.entries.get(doc_id) if g is not None else None
            if gold_entry is None or gold_entry.label != entry.label:
                continue
            hit: set[int] = set()
            for r in gold_entry.rationales:
                if r <= entry.sentences:
                    hit |= r
            correct += len(hit)
    n_gold = sum(
        len(r) for g in gold_by_claim.values() for e in g.entries.values() for r in e.rationales
    )
    return MetricReport("sentence", correct, predicted, correct, n_gold)


# -- module diagnostics --------------------------------------------------------

def diagnostic_selection_prf(gold: Iterable[GoldEvidence],
                             selector_outputs: Mapping[tuple[int, int], Iterable[int]]
                             ) -> MetricReport:
    """Sentence P/R/F1 of a selector run on gold evidence abstracts.

    A selected sentence is a hit when it belongs to any gold rationale of
    its abstract; recall is over the union of gold rationale sentences of
    every gold evidence abstract.
    """
    gold_by_claim = gold_index(gold)
    hits = selected_total = 0
    for (claim_id, doc_id), selected in selector_outputs.items():
        selected = frozenset(selected)
        selected_total += len(selected)
        g = gold_by_claim.get(claim_id)
        if g is not None and doc_id in g.entries:
            hits += len(selected & g.entries[doc_id].sentence_union())
    n_gold = sum(
        len(e.sentence_union()) for g in gold_by_claim.values() for e in g.entries.values()
    )
    return MetricReport("diagnostic", hits, selected_total, hits, n_gold)


@dataclass(frozen=True)
class LabelReport:
    correct: int
    total: int
    confusion: tuple[tuple[int, int, int], ...]  # rows gold, cols predicted, LABEL_ORDER

    @property
    def accuracy(self) -> Fraction:
        return _ratio(self.correct, self.total)

    def per_label_f1(self) -> dict[Label, Fraction]:
        out = {}
        for i, lab in enumerate(LABEL_ORDER):
            tp = self.confusion[i][i]
            pred_total = sum(row[i] for row in self.confusion)
            gold_total = sum(self.confusion[i])
            out[lab] = f1_score(_ratio(tp, pred_total), _ratio(tp, gold_total))
        return out

    @property
    def macro_f1(self) -> Fraction:
        """Mean F1 over labels that occur in the gold or predicted labels."""
        f1s = self.per_label_f1()
        present = [
            lab for i, lab in enumerate(LABEL_ORDER)
            if sum(self.confusion[i]) or sum(row[i] for row in self.confusion)
        ]
        if not present:
            return Fraction(0)
        return sum((f1s[lab] for lab in present), Fraction(0)) / len(present)

    def to_json(self) -> dict:
        return {
            "accuracy": round(float(self.accuracy), 6),
            "correct": self.correct,
            "total": self.total,
            "macro_f1": round(float(self.macro_f1), 6),
            "labels": [lab.value for lab in LABEL_ORDER],
            "confusion": [list(row) for row in self.confusion],
        }


def diagnostic_label_accuracy(gold: Iterable[GoldEvidence],
                              labeler_outputs: Mapping[tuple[int, int], Label]) -> LabelReport:
    gold_by_claim = gold_index(gold)
    confusion = [[0, 0, 0] for _ in LABEL_ORDER]
    pos = {lab: i for i, lab in enumerate(LABEL_ORDER)}
    correct = 0
    for (claim_id, doc_id), predicted in labeler_outputs.items():
        g = gold_by_claim.get(claim_id)
        truth = g.label_for(doc_id) if g is not None else Label.NOT_ENOUGH_INFO
        confusion[pos[truth]][pos[predicted]] += 1
        correct += truth == predicted
    return LabelReport(correct, len(labeler_outputs), tuple(tuple(r) for r in confusion))


def run_selection_diagnostic(claims: Iterable[Claim], gold: Iterable[GoldEvidence],
                             corpus: Corpus, selector) -> dict[tuple[int, int], frozenset[int]]:
    gold_by_claim = gold_index(gold)
    out = {}
    for claim in sorted(claims, key=lambda c: c.id):
        g = gold_by_claim.get(claim.id)
        if g is None:
            continue
        for doc_id in g.entries:
            out[(claim.id, doc_id)] = selector.select(claim, corpus[doc_id])[0]
    return out


def run_label_diagnostic(claims: Iterable[Claim], gold: Iterable[GoldEvidence],
                         corpus: Corpus, labeler) -> dict[tuple[int, int], Label]:
    """Label every cited abstract given its gold rationale sentences as input."""
    gold_by_claim = gold_index(gold)
    out = {}
    for claim in sorted(claims, key=lambda c: c.id):
        g = gold_by_claim.get(claim.id)
        for doc_id in claim.cited_doc_ids:
            entry = g.entries.get(doc_id) if g is not None else None
            selected = entry.sentence_union() if entry is not None else frozenset()
            out[(claim.id, doc_id)] = labeler.predict(claim, corpus[doc_id], selected)
    return out


# -- dataset statistics ------------------------------------------------------------

@dataclass
class StatsReport:
    claim_labels: dict[str, dict[str, int]] = field(default_factory=dict)
    pair_labels: dict[str, dict[str, int]] = field(default_factory=dict)
    mixed_label_claims: dict[str, int] = field(default_factory=dict)
    abstracts: dict[str, dict[str, float]] = field(default_factory=dict)
    evidence_docs_per_claim: dict[int, int] = field(default_factory=dict)
    sentences_per_rationale: dict[int, int] = field(default_factory=dict)
    rationales_per_abstract: dict[str, dict[int, int]] = field(default_factory=dict)

    def to_json(self) -> dict:
        def keyed(h):
            return {str(k): v for k, v in sorted(h.items())}

        return {
            "claim_labels": self.claim_labels,
            "pair_labels": self.pair_labels,
            "mixed_label_claims": self.mixed_label_claims,
            "abstracts": self.abstracts,
            "evidence_docs_per_claim": keyed(self.evidence_docs_per_claim),
            "sentences_per_rationale": keyed(self.sentences_per_rationale),
            "rationales_per_abstract": {
                k: keyed(v) for k, v in self.rationales_per_abstract.items()
            },
        }

    def to_tsv(self) -> str:
        lines = ["# claim labels", "split\tSUPPORTS\tNOT_ENOUGH_INFO\tREFUTES\ttotal"]
        for split, c in self.claim_labels.items():
            lines.append(f"{split}\t{c['SUPPORTS']}\t{c['NOT_ENOUGH_INFO']}\t{c['REFUTES']}\t{c['total']}")
        lines += ["", "# claim-abstract pair labels",
                  "split\tSUPPORTS\tNOT_ENOUGH_INFO\tREFUTES\ttotal"]
        for split, c in self.pair_labels.items():
            lines.append(f"{split}\t{c['SUPPORTS']}\t{c['NOT_ENOUGH_INFO']}\t{c['REFUTES']}\t{c['total']}")
        lines += ["", "# evidence abstracts", "statistic\tunstructured\tstructured"]
        rows = [
            ("evidence_abstracts", "n_abstracts", "{:d}"),
            ("evidence_pairs", "n_pairs", "{:d}"),
            ("abstract_length_median", "length_median", "{:g}"),
            ("rationales_mean", "rationales_mean", "{:.2f}"),
            ("rationale_fraction_median", "rationale_fraction_median", "{:.2f}"),
        ]
        for label, key, fmt in rows:
            u = self.abstracts["unstructured"][key]
            s = self.abstracts["structured"][key]
            lines.append(f"{label}\t{fmt.format(u)}\t{fmt.format(s)}")
        lines += ["", "# evidence documents per claim", "n\tclaims"]
        lines += [f"{k}\t{v}" for k, v in sorted(self.evidence_docs_per_claim.items())]
        lines += ["", "# sentences per rationale", "n\trationales"]
        lines += [f"{k}\t{v}" for k, v in sorted(self.sentences_per_rationale.items())]
        lines += ["", "# rationales per evidence abstract", "n\tunstructured\tstructured"]
        keys = sorted(set(self.rationales_per_abstract["unstructured"])
                      | set(self.rationales_per_abstract["structured"]))
        for k in keys:
            u = self.rationales_per_abstract["unstructured"].get(k, 0)
            s = self.rationales_per_abstract["structured"].get(k, 0)
            lines.append(f"{k}\t{u}\t{s}")
        return "\n".join(lines) + "\n"


def _claim_label(labels: list[Label]) -> tuple[Label, bool]:
    if not labels:
        return Label.NOT_ENOUGH_INFO, False
    counts = Counter(labels)
    mixed = len(counts) > 1
    # majority label; SUPPORTS wins a tie
    best = max(LABEL_ORDER[:2], key=lambda lab: (counts[lab], lab == Label.SUPPORTS))
    return best, mixed


def _median(xs) -> float:
    return float(statistics.median(xs)) if xs else 0.0


def _mean(xs) -> float:
    return float(statistics.fmean(xs)) if xs else 0.0


def dataset_stats(corpus: Corpus,
                  splits: Mapping[str, tuple[Iterable[Claim], Iterable[GoldEvidence]]]
                  ) -> StatsReport:
    """Label counts per split plus evidence-abstract statistics over all splits.

    ``splits`` maps a split name to its ``(claims, gold)`` pair.
    """
    report = StatsReport()
    doc_lengths: dict[str, dict[int, int]] = {"unstructured": {}, "structured": {}}
    n_rationales: dict[str, list[int]] = {"unstructured": [], "structured": []}
    fractions: dict[str, list[float]] = {"unstructured": [], "structured": []}
    per_abstract: dict[str, Counter] = {"unstructured": Counter(), "structured": Counter()}
    per_claim: Counter = Counter()
    per_rationale: Counter = Counter()

    for split, (claims, gold) in splits.items():
        gold_by_claim = gold_index(gold)
        claim_counts: Counter = Counter()
        pair_counts: Counter = Counter()
        mixed = 0
        for claim in claims:
            g = gold_by_claim.get(claim.id, GoldEvidence(claim.id))
            label, is_mixed = _claim_label([e.label for e in g.entries.values()])
            claim_counts[label] += 1
            mixed += is_mixed
            for doc_id in dict.fromkeys((*claim.cited_doc_ids, *g.entries)):
                pair_counts[g.label_for(doc_id)] += 1
            per_claim[len(g.entries)] += 1
            for doc_id, entry in g.entries.items():
                doc = corpus[doc_id]
                kind = "structured" if doc.structured else "unstructured"
                doc_lengths[kind][doc_id] = len(doc)
                n_rationales[kind].append(len(entry.rationales))
                fractions[kind].append(len(entry.sentence_union()) / len(doc))
                per_abstract[kind][len(entry.rationales)] += 1
                for r in entry.rationales:
                    per_rationale[len(r)] += 1
        report.claim_labels[split] = {lab.value: claim_counts[lab] for lab in LABEL_ORDER}
        report.claim_labels[split]["total"] = sum(claim_counts.values())
        report.pair_labels[split] = {lab.value: pair_counts[lab] for lab in LABEL_ORDER}
        report.pair_labels[split]["total"] = sum(pair_counts.values())
        report.mixed_label_claims[split] = mixed

    for kind in ("unstructured", "structured"):
        report.abstracts[kind] = {
            "n_abstracts": len(doc_lengths[kind]),
            "n_pairs": len(n_rationales[kind]),
            "length_median": _median(list(doc_lengths[kind].values())),
            "rationales_mean": _mean(n_rationales[kind]),
            "rationale_fraction_median": _median(fractions[kind]),
        }
        report.rationales_per_abstract[kind] = dict(sorted(per_abstract[kind].items()))
    report.evidence_docs_per_claim = dict(sorted(per_claim.items()))
    report.sentences_per_rationale = dict(sorted(per_rationale.items()))
    return report
