"""Domain types shared across the package: labels, abstracts, claims,
gold evidence, predictions, and structural validation of a dataset.

NOT_ENOUGH_INFO never appears inside an evidence map; an abstract that
neither supports nor refutes a claim simply has no entry.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Optional

MAX_RATIONALE_SENTENCES = 3


class DataError(ValueError):
    """Raised when input data violates a structural invariant."""


class Label(str, enum.Enum):
    SUPPORTS = "SUPPORTS"
    REFUTES = "REFUTES"
    NOT_ENOUGH_INFO = "NOT_ENOUGH_INFO"

    def __str__(self) -> str:
        return self.value


EVIDENCE_LABELS = (Label.SUPPORTS, Label.REFUTES)

# Fixed order; also the argmax tie-break order.
LABEL_ORDER = (Label.SUPPORTS, Label.REFUTES, Label.NOT_ENOUGH_INFO)

_LABEL_ALIASES = {
    "SUPPORTS": Label.SUPPORTS,
    "SUPPORT": Label.SUPPORTS,
    "REFUTES": Label.REFUTES,
    "REFUTE": Label.REFUTES,
    "CONTRADICT": Label.REFUTES,
    "NOT_ENOUGH_INFO": Label.NOT_ENOUGH_INFO,
    "NOT ENOUGH INFO": Label.NOT_ENOUGH_INFO,
    "NOTENOUGHINFO": Label.NOT_ENOUGH_INFO,
    "NEI": Label.NOT_ENOUGH_INFO,
}

# Tokens used by the released dataset files.
_DATASET_TOKENS = {
    Label.SUPPORTS: "SUPPORT",
    Label.REFUTES: "CONTRADICT",
    Label.NOT_ENOUGH_INFO: "NOT_ENOUGH_INFO",
}


def parse_label(token: str) -> Label:
    """Parse a label token, case-insensitively, accepting dataset aliases."""
    if isinstance(token, Label):
        return token
    if not isinstance(token, str):
        raise DataError(f"unknown label token: {token!r}")
    key = " ".join(token.strip().upper().split())
    try:
        return _LABEL_ALIASES[key]
    except KeyError:
        raise DataError(f"unknown label token: {token!r}") from None


def render_label(label: Label) -> str:
    return label.value


def dataset_token(label: Label) -> str:
    return _DATASET_TOKENS[label]


@dataclass(frozen=True)
class AbstractDoc:
    doc_id: int
    title: str
    sentences: tuple[str, ...]
    structured: bool = False

    def __post_init__(self):
        object.__setattr__(self, "sentences", tuple(self.sentences))

    def __len__(self) -> int:
        return len(self.sentences)


@dataclass(frozen=True)
class Corpus:
    """Abstracts keyed by doc_id. Iteration is in ascending doc_id order."""

    documents: Mapping[int, AbstractDoc]

    def __post_init__(self):
        docs = dict(sorted(self.documents.items()))
        for key, doc in docs.items():
            if key != doc.doc_id:
                raise DataError(f"corpus key {key} does not match doc_id {doc.doc_id}")
        object.__setattr__(self, "documents", docs)

    @classmethod
    def from_docs(cls, docs: Iterable[AbstractDoc]) -> "Corpus":
        out: dict[int, AbstractDoc] = {}
        for doc in docs:
            if doc.doc_id in out:
                raise DataError(f"duplicate doc_id {doc.doc_id}")
            out[doc.doc_id] = doc
        return cls(out)

    def __getitem__(self, doc_id: int) -> AbstractDoc:
        return self.documents[doc_id]

    def __contains__(self, doc_id: object) -> bool:
        return doc_id in self.documents

    def __iter__(self) -> Iterator[AbstractDoc]:
        return iter(self.documents.values())

    def __len__(self) -> int:
        return len(self.documents)

    def doc_ids(self) -> list[int]:
        return list(self.documents)


@dataclass(frozen=True)
class Claim:
    id: int
    text: str
    cited_doc_ids: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "cited_doc_ids", tuple(self.cited_doc_ids))


@dataclass(frozen=True)
class EvidenceEntry:
    """Gold label and rationales of one evidence abstract."""

    label: Label
    rationales: tuple[frozenset[int], ...]

    def __post_init__(self):
        object.__setattr__(
            self, "rationales", tuple(frozenset(r) for r in self.rationales)
        )

    def sentence_union(self) -> frozenset[int]:
        return frozenset().union(*self.rationales)


@dataclass(frozen=True)
class GoldEvidence:
    claim_id: int
    entries: Mapping[int, EvidenceEntry] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "entries", dict(sorted(self.entries.items())))

    def label_for(self, doc_id: int) -> Label:
        entry = self.entries.get(doc_id)
        return entry.label if entry is not None else Label.NOT_ENOUGH_INFO


@dataclass(frozen=True)
class PredictedEntry:
    label: Label
    sentences: frozenset[int]
    # Per-sentence scores for the selected sentences, used by cap truncation.
    scores: Optional[Mapping[int, float]] = None

    def __post_init__(self):
        object.__setattr__(self, "sentences", frozenset(self.sentences))
        if self.scores is not None:
            object.__setattr__(self, "scores", dict(sorted(self.scores.items())))


@dataclass(frozen=True)
class Prediction:
    claim_id: int
    entries: Mapping[int, PredictedEntry] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "entries", dict(sorted(self.entries.items())))


@dataclass(frozen=True)
class Issue:
    severity: str  # "error" or "warning"
    message: str
    claim_id: Optional[int] = None
    doc_id: Optional[int] = None
    sentence: Optional[int] = None

    def render(self) -> str:
        where = []
        if self.claim_id is not None:
            where.append(f"claim={self.claim_id}")
        if self.doc_id is not None:
            where.append(f"doc={self.doc_id}")
        if self.sentence is not None:
            where.append(f"sentence={self.sentence}")
        loc = " ".join(where)
        return f"{self.severity}\t{loc}\t{self.message}"


@dataclass
class ValidationReport:
    issues: list[Issue] = field(default_factory=list)

    @property
    def errors(self) -> list[Issue]:
        return [i for i in self.issues if i.severity == "error"]

    @property
    def warnings(self) -> list[Issue]:
        return [i for i in self.issues if i.severity == "warning"]

    def __bool__(self) -> bool:
        return bool(self.issues)

    def __len__(self) -> int:
        return len(self.issues)


def gold_index(gold: Iterable[GoldEvidence]) -> dict[int, GoldEvidence]:
    return {g.claim_id: g for g in gold}


def _check_rationales(entry: EvidenceEntry, n_sentences: Optional[int], claim_id, doc_id):
    issues = []
    seen: dict[int, int] = {}
    for k, rationale in enumerate(entry.rationales):
        if not rationale:
            issues.append(Issue("error", "empty rationale", claim_id, doc_id))
        if len(rationale) > MAX_RATIONALE_SENTENCES:
            issues.append(Issue(
                "warning",
                f"rationale length {len(rationale)} exceeds {MAX_RATIONALE_SENTENCES}",
                claim_id, doc_id,
            ))
        for s in sorted(rationale):
            if n_sentences is not None and not 0 <= s < n_sentences:
                issues.append(Issue(
                    "error", f"sentence index {s} out of range [0, {n_sentences})",
                    claim_id, doc_id, s,
                ))
            if s in seen:
                issues.append(Issue(
                    "error", f"rationales overlap at sentence {s}", claim_id, doc_id, s,
                ))
            seen[s] = k
    return issues


def validate(corpus: Corpus, claims: Iterable[Claim],
             gold: Iterable[GoldEvidence]) -> ValidationReport:
    """Check every structural invariant of a dataset.

    Violations are collected, never raised. Rationales longer than three
    sentences and claims without cited documents are warnings.
    """
    report = ValidationReport()
    add = report.issues.append

    for doc in corpus:
        if not doc.sentences:
            add(Issue("error", "abstract has no sentences", doc_id=doc.doc_id))
        for i, sent in enumerate(doc.sentences):
            if not sent.strip():
                add(Issue("error", "empty sentence", doc_id=doc.doc_id, sentence=i))

    claims_by_id: dict[int, Claim] = {}
    for claim in claims:
        if claim.id in claims_by_id:
            add(Issue("error", "duplicate claim id", claim.id))
        claims_by_id[claim.id] = claim
        if not claim.text.strip():
            add(Issue("error", "empty claim text", claim.id))
        if not claim.cited_doc_ids:
            add(Issue("warning", "claim cites no documents", claim.id))
        for doc_id in claim.cited_doc_ids:
            if doc_id not in corpus:
                add(Issue("error", "cited document not in corpus", claim.id, doc_id))

    for g in gold:
        claim = claims_by_id.get(g.claim_id)
        if claim is None:
            add(Issue("error", "gold evidence for unknown claim", g.claim_id))
        for doc_id, entry in g.entries.items():
            if entry.label not in EVIDENCE_LABELS:
                add(Issue("error", f"label {entry.label} not allowed in evidence map",
                          g.claim_id, doc_id))
            if claim is not None and doc_id not in claim.cited_doc_ids:
                add(Issue("error", "evidence document not in cited_doc_ids",
                          g.claim_id, doc_id))
            n = len(corpus[doc_id]) if doc_id in corpus else None
            if n is None:
                add(Issue("error", "evidence document not in corpus", g.claim_id, doc_id))
            if not entry.rationales:
                add(Issue("error", "evidence entry has no rationales", g.claim_id, doc_id))
            report.issues.extend(_check_rationales(entry, n, g.claim_id, doc_id))

    return report
