"""Scientific claim verification: data model, TF-IDF retrieval, pluggable
pipeline stages, oracle ablations, and rationale-aware evaluation."""

__version__ = "0.1.0"
DATA_FORMAT_VERSION = 1

from .core import (  # noqa: E402
    AbstractDoc,
    Claim,
    Corpus,
    DataError,
    EvidenceEntry,
    GoldEvidence,
    Label,
    PredictedEntry,
    Prediction,
    parse_label,
    render_label,
    validate,
)

__all__ = [
    "AbstractDoc",
    "Claim",
    "Corpus",
    "DataError",
    "EvidenceEntry",
    "GoldEvidence",
    "Label",
    "PredictedEntry",
    "Prediction",
    "parse_label",
    "render_label",
    "validate",
    "__version__",
    "DATA_FORMAT_VERSION",
]
