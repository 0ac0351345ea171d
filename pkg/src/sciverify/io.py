"""JSONL readers and writers.

File layouts follow the released dataset:

* corpus: ``{"doc_id", "title", "abstract": [sentences], "structured"}``
* claims: ``{"id", "claim", "evidence": {doc_id: [{"sentences", "label"}]}, "cited_doc_ids"}``
* predictions: ``{"id", "evidence": {doc_id: {"sentences", "label"[, "scores"]}}}``

plus two score files for externally computed stage outputs:

* sentence scores: ``{"claim_id", "doc_id", "scores": [...]}``
* label probabilities: ``{"claim_id", "doc_id", "probs": {"SUPPORTS", "REFUTES", "NOT_ENOUGH_INFO"}}``

Any path ending in ``.gz`` is read and written through gzip.
"""

from __future__ import annotations

import gzip
import io as _stdio
import json
import logging
import os
from dataclasses import dataclass
from typing import Any, Iterable, Iterator, Optional

from .core import (
    EVIDENCE_LABELS,
    LABEL_ORDER,
    AbstractDoc,
    Claim,
    Corpus,
    DataError,
    EvidenceEntry,
    GoldEvidence,
    Label,
    PredictedEntry,
    Prediction,
    dataset_token,
    parse_label,
)

log = logging.getLogger(__name__)

SCORE_SLACK = 1e-9
PROB_SUM_TOL = 1e-6


@dataclass(frozen=True)
class SentenceScores:
    claim_id: int
    doc_id: int
    scores: tuple[float, ...]


@dataclass(frozen=True)
class LabelProbs:
    claim_id: int
    doc_id: int
    probs: tuple[float, float, float]  # SUPPORTS, REFUTES, NOT_ENOUGH_INFO

    def as_dict(self) -> dict[Label, float]:
        return dict(zip(LABEL_ORDER, self.probs))


def open_text(path, mode: str = "r"):
    path = os.fspath(path)
    if path.endswith(".gz"):
        # mtime=0 keeps gzip output byte-identical across runs
        if "w" in mode:
            raw = open(path, "wb")
            gz = gzip.GzipFile(filename="", mode="wb", fileobj=raw, mtime=0)
            return _ClosingTextWrapper(gz, raw)
        return gzip.open(path, mode + "t", encoding="utf-8")
    return open(path, mode, encoding="utf-8", newline="\n")


class _ClosingTextWrapper:
    def __init__(self, gz: gzip.GzipFile, raw):
        self._gz = gz
        self._raw = raw
        self._text = _stdio.TextIOWrapper(gz, encoding="utf-8", newline="\n")

    def write(self, s: str) -> int:
        return self._text.write(s)

    def close(self):
        self._text.close()
        self._raw.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def iter_jsonl(path) -> Iterator[tuple[int, dict]]:
    with open_text(path) as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise DataError(f"{path}:{lineno}: malformed JSON ({e.msg})") from None
            if not isinstance(obj, dict):
                raise DataError(f"{path}:{lineno}: expected a JSON object")
            yield lineno, obj


def write_jsonl(rows: Iterable[dict], path) -> None:
    with open_text(path, "w") as f:
        for row in rows:
            f.write(json.dumps(row, ensure_ascii=False))
            f.write("\n")


class FieldChecker:
    """Required-field access plus a single warning per unknown field."""

    def __init__(self, path, known: set[str]):
        self.path = path
        self.known = known
        self.warned: set[str] = set()

    def check(self, obj: dict, lineno: int) -> None:
        for key in obj:
            if key not in self.known and key not in self.warned:
                self.warned.add(key)
                log.warning("%s:%d: ignoring unknown field %r", self.path, lineno, key)

    def require(self, obj: dict, key: str, lineno: int):
        if key not in obj:
            raise DataError(f"{self.path}:{lineno}: missing field {key!r}")
        return obj[key]


def as_int(value: Any, what: str, where: str, allow_str: bool = False) -> int:
    if isinstance(value, bool):
        raise DataError(f"{where}: {what} must be an integer, got {value!r}")
    if isinstance(value, int):
        return value
    if allow_str and isinstance(value, str) and value.strip().lstrip("-").isdigit():
        return int(value)
    raise DataError(f"{where}: {what} must be an integer, got {value!r}")


def _as_index_list(value: Any, where: str) -> list[int]:
    if not isinstance(value, list):
        raise DataError(f"{where}: sentences must be a list")
    return [as_int(v, "sentence index", where) for v in value]


# -- corpus -----------------------------------------------------------------

def load_corpus(path) -> Corpus:
    fields = FieldChecker(path, {"doc_id", "title", "abstract", "structured"})
    docs: dict[int, AbstractDoc] = {}
    first_line: dict[int, int] = {}
    for lineno, obj in iter_jsonl(path):
        where = f"{path}:{lineno}"
        fields.check(obj, lineno)
        doc_id = as_int(fields.require(obj, "doc_id", lineno), "doc_id", where)
        if doc_id < 0:
            raise DataError(f"{where}: negative doc_id {doc_id}")
        title = fields.require(obj, "title", lineno)
        abstract = fields.require(obj, "abstract", lineno)
        if not isinstance(abstract, list) or not all(isinstance(s, str) for s in abstract):
            raise DataError(f"{where}: abstract must be a list of strings")
        if not abstract:
            raise DataError(f"{where}: abstract of doc {doc_id} has no sentences")
        for i, s in enumerate(abstract):
            if not s.strip():
                raise DataError(f"{where}: sentence {i} of doc {doc_id} is empty")
        if doc_id in docs:
            raise DataError(
                f"{path}: duplicate doc_id {doc_id} on lines {first_line[doc_id]} and {lineno}"
            )
        first_line[doc_id] = lineno
        docs[doc_id] = AbstractDoc(
            doc_id=doc_id,
            title=str(title),
            sentences=tuple(abstract),
            structured=bool(obj.get("structured", False)),
        )
    return Corpus(docs)


def write_corpus(corpus: Corpus, path) -> None:
    write_jsonl(
        (
            {
                "doc_id": doc.doc_id,
                "title": doc.title,
                "abstract": list(doc.sentences),
                "structured": doc.structured,
            }
            for doc in corpus
        ),
        path,
    )


# -- claims and gold evidence ----------------------------------------------

def load_claims(path, corpus: Optional[Corpus] = None,
                strict: bool = True) -> tuple[list[Claim], list[GoldEvidence]]:
    """Load claims and their gold evidence.

    With ``strict`` (the default) every evidence document must be in the
    corpus, rationale indices must be in range and rationales of one
    abstract must be disjoint. ``strict=False`` only parses, leaving
    structural problems to :func:`sciverify.core.validate`.
    """
    fields = FieldChecker(path, {"id", "claim", "evidence", "cited_doc_ids"})
    claims: list[Claim] = []
    gold: list[GoldEvidence] = []
    seen: dict[int, int] = {}
    for lineno, obj in iter_jsonl(path):
        where = f"{path}:{lineno}"
        fields.check(obj, lineno)
        claim_id = as_int(fields.require(obj, "id", lineno), "id", where)
        if claim_id < 0:
            raise DataError(f"{where}: negative claim id {claim_id}")
        if claim_id in seen:
            raise DataError(
                f"{path}: duplicate claim id {claim_id} on lines {seen[claim_id]} and {lineno}"
            )
        seen[claim_id] = lineno
        text = fields.require(obj, "claim", lineno)
        if not isinstance(text, str) or not text.strip():
            raise DataError(f"{where}: claim text must be non-empty")
        cited_raw = obj.get("cited_doc_ids", [])
        if not isinstance(cited_raw, list):
            raise DataError(f"{where}: cited_doc_ids must be a list")
        cited = tuple(as_int(d, "cited doc_id", where) for d in cited_raw)

        evidence = obj.get("evidence", {})
        if not isinstance(evidence, dict):
            raise DataError(f"{where}: evidence must be an object")
        entries: dict[int, EvidenceEntry] = {}
        for key, rationales in evidence.items():
            doc_id = as_int(key, "evidence doc_id", where, allow_str=True)
            if not isinstance(rationales, list):
                raise DataError(f"{where}: evidence for doc {doc_id} must be a list")
            label: Optional[Label] = None
            sets = []
            for r in rationales:
                if not isinstance(r, dict):
                    raise DataError(f"{where}: rationale must be an object")
                r_label = parse_label(_require(r, "label", where))
                if r_label not in EVIDENCE_LABELS:
                    raise DataError(f"{where}: label {r_label} not allowed in evidence")
                if label is not None and r_label != label:
                    raise DataError(
                        f"{where}: conflicting labels {label} and {r_label} for doc {doc_id}"
                    )
                label = r_label
                sets.append(frozenset(_as_index_list(_require(r, "sentences", where), where)))
            if label is None:
                if strict:
                    raise DataError(f"{where}: evidence for doc {doc_id} has no rationales")
                continue
            entry = EvidenceEntry(label, tuple(sets))
            if strict:
                _strict_entry_checks(entry, doc_id, corpus, where)
            entries[doc_id] = entry
        claims.append(Claim(claim_id, text, cited))
        gold.append(GoldEvidence(claim_id, entries))
    return claims, gold


def _require(obj: dict, key: str, where: str):
    if key not in obj:
        raise DataError(f"{where}: missing field {key!r}")
    return obj[key]


def _strict_entry_checks(entry: EvidenceEntry, doc_id: int,
                         corpus: Optional[Corpus], where: str) -> None:
    if corpus is not None and doc_id not in corpus:
        raise DataError(f"{where}: evidence doc {doc_id} not in corpus")
    n = len(corpus[doc_id]) if corpus is not None else None
    seen: set[int] = set()
    for r in entry.rationales:
        if not r:
            raise DataError(f"{where}: empty rationale for doc {doc_id}")
        for s in sorted(r):
            if n is not None and not 0 <= s < n:
                raise DataError(
                    f"{where}: sentence {s} out of range for doc {doc_id} ({n} sentences)"
                )
            if s in seen:
                raise DataError(f"{where}: rationales of doc {doc_id} overlap at sentence {s}")
            seen.add(s)


def write_claims(claims: Iterable[Claim], gold: Iterable[GoldEvidence], path) -> None:
    by_id = {g.claim_id: g for g in gold}
    rows = []
    for claim in sorted(claims, key=lambda c: c.id):
        g = by_id.get(claim.id)
        evidence = {}
        if g is not None:
            for doc_id, entry in g.entries.items():
                evidence[str(doc_id)] = [
                    {"sentences": sorted(r), "label": dataset_token(entry.label)}
                    for r in entry.rationales
                ]
        rows.append({
            "id": claim.id,
            "claim": claim.text,
            "evidence": evidence,
            "cited_doc_ids": list(claim.cited_doc_ids),
        })
    write_jsonl(rows, path)


# -- predictions -------------------------------------------------------------

def load_predictions(path, corpus: Optional[Corpus] = None) -> list[Prediction]:
    fields = FieldChecker(path, {"id", "evidence"})
    preds: list[Prediction] = []
    seen: dict[int, int] = {}
    for lineno, obj in iter_jsonl(path):
        where = f"{path}:{lineno}"
        fields.check(obj, lineno)
        claim_id = as_int(fields.require(obj, "id", lineno), "id", where)
        if claim_id in seen:
            raise DataError(
                f"{path}: duplicate prediction id {claim_id} on lines {seen[claim_id]} and {lineno}"
            )
        seen[claim_id] = lineno
        evidence = obj.get("evidence", {})
        if not isinstance(evidence, dict):
            raise DataError(f"{where}: evidence must be an object")
        entries: dict[int, PredictedEntry] = {}
        for key, value in evidence.items():
            doc_id = as_int(key, "evidence doc_id", where, allow_str=True)
            if not isinstance(value, dict):
                raise DataError(f"{where}: prediction for doc {doc_id} must be an object")
            label = parse_label(_require(value, "label", where))
            if label not in EVIDENCE_LABELS:
                raise DataError(f"{where}: label {label} not allowed in predicted evidence")
            sentences = _as_index_list(_require(value, "sentences", where), where)
            if len(set(sentences)) != len(sentences):
                raise DataError(f"{where}: duplicate sentence index for doc {doc_id}")
            if corpus is not None:
                if doc_id not in corpus:
                    raise DataError(f"{where}: predicted doc {doc_id} not in corpus")
                n = len(corpus[doc_id])
                for s in sentences:
                    if not 0 <= s < n:
                        raise DataError(
                            f"{where}: sentence {s} out of range for doc {doc_id} ({n} sentences)"
                        )
            scores = None
            if value.get("scores") is not None:
                raw = value["scores"]
                if not isinstance(raw, list) or len(raw) != len(sentences):
                    raise DataError(f"{where}: scores must align with sentences for doc {doc_id}")
                scores = {s: float(v) for s, v in zip(sentences, raw)}
            entries[doc_id] = PredictedEntry(label, frozenset(sentences), scores)
        preds.append(Prediction(claim_id, entries))
    return preds


def prediction_rows(preds: Iterable[Prediction]) -> list[dict]:
    rows = []
    for pred in sorted(preds, key=lambda p: p.claim_id):
        evidence = {}
        for doc_id in sorted(pred.entries):
            entry = pred.entries[doc_id]
            sentences = sorted(entry.sentences)
            item: dict[str, Any] = {
                "sentences": sentences,
                "label": dataset_token(entry.label),
            }
            if entry.scores is not None:
                item["scores"] = [entry.scores[s] for s in sentences]
            evidence[str(doc_id)] = item
        rows.append({"id": pred.claim_id, "evidence": evidence})
    return rows


def write_predictions(preds: Iterable[Prediction], path) -> None:
    write_jsonl(prediction_rows(preds), path)


# -- stage score files ------------------------------------------------------

def load_sentence_scores(path, corpus: Optional[Corpus] = None) -> list[SentenceScores]:
    fields = FieldChecker(path, {"claim_id", "doc_id", "scores"})
    out: list[SentenceScores] = []
    seen: set[tuple[int, int]] = set()
    for lineno, obj in iter_jsonl(path):
        where = f"{path}:{lineno}"
        fields.check(obj, lineno)
        claim_id = as_int(fields.require(obj, "claim_id", lineno), "claim_id", where)
        doc_id = as_int(fields.require(obj, "doc_id", lineno), "doc_id", where)
        scores = fields.require(obj, "scores", lineno)
        if not isinstance(scores, list) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in scores
        ):
            raise DataError(f"{where}: scores must be a list of numbers")
        for v in scores:
            if not -SCORE_SLACK <= v <= 1 + SCORE_SLACK:
                raise DataError(f"{where}: score {v} outside [0, 1]")
        if corpus is not None:
            if doc_id not in corpus:
                raise DataError(f"{where}: doc {doc_id} not in corpus")
            n = len(corpus[doc_id])
            if len(scores) != n:
                raise DataError(
                    f"{where}: {len(scores)} scores for doc {doc_id} with {n} sentences"
                )
        if (claim_id, doc_id) in seen:
            raise DataError(f"{where}: duplicate scores for claim {claim_id}, doc {doc_id}")
        seen.add((claim_id, doc_id))
        out.append(SentenceScores(claim_id, doc_id, tuple(float(v) for v in scores)))
    return out


def write_sentence_scores(rows: Iterable[SentenceScores], path) -> None:
    write_jsonl(
        ({"claim_id": r.claim_id, "doc_id": r.doc_id, "scores": list(r.scores)}
         for r in sorted(rows, key=lambda r: (r.claim_id, r.doc_id))),
        path,
    )


def _parse_probs(raw: Any, where: str) -> tuple[float, float, float]:
    if isinstance(raw, dict):
        values: dict[Label, float] = {}
        for key, v in raw.items():
            values[parse_label(key)] = v
        if set(values) != set(LABEL_ORDER):
            raise DataError(f"{where}: probs must cover all three labels")
        vec = [values[lab] for lab in LABEL_ORDER]
    elif isinstance(raw, list) and len(raw) == 3:
        vec = raw
    else:
        raise DataError(f"{where}: probs must be a 3-vector or label-keyed object")
    if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in vec):
        raise DataError(f"{where}: probs must be numbers")
    for v in vec:
        if not 0 <= v <= 1:
            raise DataError(f"{where}: probability {v} outside [0, 1]")
    total = sum(vec)
    if abs(total - 1) > PROB_SUM_TOL:
        raise DataError(f"{where}: probabilities sum to {total:g}, not 1")
    return tuple(float(v) for v in vec)  # type: ignore[return-value]


def load_label_probs(path) -> list[LabelProbs]:
    fields = FieldChecker(path, {"claim_id", "doc_id", "probs"})
    out: list[LabelProbs] = []
    seen: set[tuple[int, int]] = set()
    for lineno, obj in iter_jsonl(path):
        where = f"{path}:{lineno}"
        fields.check(obj, lineno)
        claim_id = as_int(fields.require(obj, "claim_id", lineno), "claim_id", where)
        doc_id = as_int(fields.require(obj, "doc_id", lineno), "doc_id", where)
        probs = _parse_probs(fields.require(obj, "probs", lineno), where)
        if (claim_id, doc_id) in seen:
            raise DataError(f"{where}: duplicate probs for claim {claim_id}, doc {doc_id}")
        seen.add((claim_id, doc_id))
        out.append(LabelProbs(claim_id, doc_id, probs))
    return out


def write_label_probs(rows: Iterable[LabelProbs], path) -> None:
    write_jsonl(
        ({"claim_id": r.claim_id, "doc_id": r.doc_id,
          "probs": {lab.value: p for lab, p in zip(LABEL_ORDER, r.probs)}}
         for r in sorted(rows, key=lambda r: (r.claim_id, r.doc_id))),
        path,
    )
