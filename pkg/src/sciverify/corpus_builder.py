"""Retrieval-corpus construction from a citation graph.

Each citance contributes its cited documents plus up to ``n`` distractors:
documents cited elsewhere in the same citing article, but never in the
citance's own paragraph.
"""

from __future__ import annotations

import json
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .core import Corpus, DataError
from .io import FieldChecker, as_int, iter_jsonl, open_text, write_jsonl

DEFAULT_DISTRACTORS = 5
ROLE_ORDER = ("seed", "cited", "distractor")


@dataclass(frozen=True)
class Citance:
    citance_id: int
    citing_doc_id: int
    paragraph_id: int
    cited_doc_ids: tuple[int, ...]

    def __post_init__(self):
        cited = tuple(self.cited_doc_ids)
        if not cited:
            raise DataError(f"citance {self.citance_id} cites nothing")
        if len(set(cited)) != len(cited):
            raise DataError(f"citance {self.citance_id} has duplicate cited_doc_ids")
        object.__setattr__(self, "cited_doc_ids", cited)


@dataclass
class CitationGraph:
    citances: list[Citance]
    # None: every cited document is assumed to have an abstract
    available_abstracts: Optional[frozenset[int]] = None
    # (citing_doc_id, paragraph_id) -> docs cited in that paragraph
    _by_paragraph: dict[tuple[int, int], set[int]] = field(init=False, repr=False)
    # citing_doc_id -> docs cited anywhere in that article
    _by_citing: dict[int, set[int]] = field(init=False, repr=False)

    def __post_init__(self):
        if self.available_abstracts is not None:
            self.available_abstracts = frozenset(self.available_abstracts)
        ids = [c.citance_id for c in self.citances]
        if len(set(ids)) != len(ids):
            raise DataError("duplicate citance_id in citation graph")
        self._by_paragraph = defaultdict(set)
        self._by_citing = defaultdict(set)
        for c in self.citances:
            self._by_paragraph[(c.citing_doc_id, c.paragraph_id)].update(c.cited_doc_ids)
            self._by_citing[c.citing_doc_id].update(c.cited_doc_ids)

    def missing_abstracts(self) -> list[tuple[int, int]]:
        """(citance_id, doc_id) pairs whose cited abstract is unavailable."""
        if self.available_abstracts is None:
            return []
        return [
            (c.citance_id, d)
            for c in self.citances
            for d in c.cited_doc_ids
            if d not in self.available_abstracts
        ]

    def distractor_candidates(self, citance: Citance) -> list[int]:
        excluded = self._by_paragraph[(citance.citing_doc_id, citance.paragraph_id)]
        available = self.available_abstracts
        return sorted(
            d for d in self._by_citing[citance.citing_doc_id]
            if d not in excluded and (available is None or d in available)
        )


def load_graph(path, available_abstracts: Optional[Iterable[int]] = None) -> CitationGraph:
    fields = FieldChecker(path, {"citance_id", "citing_doc_id", "paragraph_id", "cited_doc_ids"})
    citances = []
    for lineno, obj in iter_jsonl(path):
        where = f"{path}:{lineno}"
        fields.check(obj, lineno)
        cited = fields.require(obj, "cited_doc_ids", lineno)
        if not isinstance(cited, list):
            raise DataError(f"{where}: cited_doc_ids must be a list")
        try:
            citances.append(Citance(
                citance_id=as_int(fields.require(obj, "citance_id", lineno), "citance_id", where),
                citing_doc_id=as_int(fields.require(obj, "citing_doc_id", lineno),
                                      "citing_doc_id", where),
                paragraph_id=as_int(fields.require(obj, "paragraph_id", lineno),
                                     "paragraph_id", where),
                cited_doc_ids=tuple(as_int(d, "cited doc_id", where) for d in cited),
            ))
        except DataError as e:
            raise DataError(f"{where}: {e}") from None
    if available_abstracts is not None:
        available_abstracts = frozenset(available_abstracts)
    return CitationGraph(citances, available_abstracts)


def _rng(seed: int, citance_id: int) -> np.random.Generator:
    if seed < 0 or citance_id < 0:
        raise ValueError("seed and citance_id must be non-negative")
    return np.random.default_rng(np.random.SeedSequence([seed, citance_id]))


def sample_distractors(graph: CitationGraph, citance: Citance,
                       n: int = DEFAULT_DISTRACTORS, seed: int = 0) -> list[int]:
    """Up to ``n`` distractors for one citance, in sampled order.

    The generator is keyed by ``(seed, citance_id)``, so the result does not
    depend on which other citances are processed or in what order.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    candidates = graph.distractor_candidates(citance)
    size = min(n, len(candidates))
    if size == 0:
        return []
    picks = _rng(seed, citance.citance_id).choice(len(candidates), size=size, replace=False)
    return [candidates[int(i)] for i in picks]


@dataclass(frozen=True)
class ManifestEntry:
    doc_id: int
    roles: tuple[str, ...]
    citance_ids: tuple[int, ...]

    def to_json(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "role": "+".join(self.roles),
            "roles": list(self.roles),
            "citance_ids": list(self.citance_ids),
        }


def assemble_corpus(graph: CitationGraph, seed_doc_ids: Iterable[int],
                    abstracts_source: Corpus, n_distractors: int = DEFAULT_DISTRACTORS,
                    seed: int = 0, threads: int = 1) -> tuple[Corpus, list[ManifestEntry]]:
    """Corpus of seed, co-cited and distractor abstracts, with provenance.

    Citances that cite at least one seed document contribute all of their
    cited documents and their distractors.
    """
    seeds = set(seed_doc_ids)
    roles: dict[int, set[str]] = defaultdict(set)
    origins: dict[int, set[int]] = defaultdict(set)
    for d in seeds:
        roles[d].add("seed")

    selected = sorted(
        (c for c in graph.citances if seeds.intersection(c.cited_doc_ids)),
        key=lambda c: c.citance_id,
    )

    def draw(c: Citance) -> list[int]:
        return sample_distractors(graph, c, n_distractors, seed)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            drawn = list(pool.map(draw, selected))
    else:
        drawn = [draw(c) for c in selected]

    for c, distractors in zip(selected, drawn):
        for d in c.cited_doc_ids:
            roles[d].add("cited")
            origins[d].add(c.citance_id)
        for d in distractors:
            roles[d].add("distractor")
            origins[d].add(c.citance_id)

    missing = sorted(d for d in roles if d not in abstracts_source)
    if missing:
        raise DataError(f"no abstract available for doc ids: {missing}")

    corpus = Corpus({d: abstracts_source[d] for d in sorted(roles)})
    manifest = [
        ManifestEntry(
            doc_id=d,
            roles=tuple(r for r in ROLE_ORDER if r in roles[d]),
            citance_ids=tuple(sorted(origins[d])),
        )
        for d in sorted(roles)
    ]
    return corpus, manifest


def write_manifest(manifest: Iterable[ManifestEntry], path) -> None:
    write_jsonl((m.to_json() for m in manifest), path)


def load_seed_ids(path) -> list[int]:
    """Seed doc ids: one integer per line, or JSONL objects with ``doc_id``."""
    ids = []
    with open_text(path) as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                value = json.loads(line)
            except json.JSONDecodeError:
                raise DataError(f"{path}:{lineno}: expected an integer doc id") from None
            if isinstance(value, dict):
                value = value.get("doc_id")
            ids.append(as_int(value, "doc_id", f"{path}:{lineno}"))
    return ids

