import pytest

from helpers import find_scifact_dir, make_doc
from sciverify.core import Claim, Corpus, EvidenceEntry, GoldEvidence, Label


@pytest.fixture
def toy_corpus():
    return Corpus.from_docs([make_doc(11, 10), make_doc(12, 4), make_doc(13, 3, structured=True)])


@pytest.fixture
def toy_claims():
    return [
        Claim(1, "Claim one text.", (11, 12)),
        Claim(2, "Claim two text.", (12,)),
        Claim(3, "Claim three text.", (13,)),
    ]


@pytest.fixture
def toy_gold():
    return [
        GoldEvidence(1, {11: EvidenceEntry(Label.SUPPORTS, (frozenset({2, 5}), frozenset({7})))}),
        GoldEvidence(2, {}),
        GoldEvidence(3, {13: EvidenceEntry(Label.REFUTES, (frozenset({0}),))}),
    ]


@pytest.fixture(scope="session")
def scifact_dir():
    d = find_scifact_dir()
    if d is None:
        pytest.skip("released dataset not found (set SCIFACT_DATA to its data/ directory)")
    return d


def pytest_terminal_summary(terminalreporter):
    from helpers import ACCEPTANCE_RESULTS

    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, status, detail in sorted(ACCEPTANCE_RESULTS):
        line = f"[{status}] {number}. {title}"
        terminalreporter.write_line(f"{line}: {detail}" if detail else line)
