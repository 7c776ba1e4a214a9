"""
Top-k accuracy, per-genre accuracy and the observed × predicted confusion matrix.

All ratios are computed from integer counts, so trace(confusion) / N equals top-1
accuracy exactly and per-genre accuracy equals diagonal / row sum exactly.
"""
import logging
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from errors import ContractError, LabelError
from models.classifiers import predict_topk
from schemas.reports import ConfusionPair, EvaluationReport
from services.autodiff import Tensor

logger = logging.getLogger(__name__)

REPORT_KS: Tuple[int, ...] = (1, 3)

ProbLike = Union[Tensor, np.ndarray, Sequence[Sequence[float]]]


def _checked(probs: ProbLike, labels: Sequence[int], num_classes: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
    values = probs.values if isinstance(probs, Tensor) else np.asarray(probs, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if values.ndim != 2:
        raise ContractError(f"probabilities must be [N×K], got shape {values.shape}")
    if values.shape[0] != labels.shape[0]:
        raise ContractError(f"{values.shape[0]} prediction row(s) but {labels.shape[0]} label(s)")
    if values.shape[0] == 0:
        raise ContractError("cannot score an empty prediction set")
    classes = num_classes or values.shape[1]
    bad = np.flatnonzero((labels < 0) | (labels >= classes))
    if bad.size:
        raise LabelError(f"label {int(labels[bad[0]])} at index {int(bad[0])} is outside [0, {classes})")
    return values, labels


def top_k_accuracy(probs: ProbLike, labels: Sequence[int], k: int) -> float:
    values, labels = _checked(probs, labels)
    top = np.asarray(predict_topk(values, k))
    hits = int((top == labels[:, np.newaxis]).any(axis=1).sum())
    return hits / labels.shape[0]


def confusion_matrix(probs: ProbLike, labels: Sequence[int], num_classes: int = 15) -> np.ndarray:
    """Entry (i, j) counts records observed as genre i and predicted (top-1) as genre j."""
    values, labels = _checked(probs, labels, num_classes)
    predicted = np.asarray(predict_topk(values, 1))[:, 0]
    matrix = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(matrix, (labels, predicted), 1)
    return matrix


def per_genre_accuracy(probs: ProbLike, labels: Sequence[int], num_classes: int = 15) -> List[Optional[float]]:
    """correct_g / support_g per genre; None where a genre has no support."""
    return accuracy_from_confusion(confusion_matrix(probs, labels, num_classes))


def accuracy_from_confusion(matrix: np.ndarray) -> List[Optional[float]]:
    support = matrix.sum(axis=1)
    return [int(matrix[g, g]) / int(support[g]) if support[g] else None for g in range(matrix.shape[0])]


def top_confusions(matrix: np.ndarray, genres: Sequence[str], limit: int = 10) -> List[ConfusionPair]:
    """Largest off-diagonal entries, ties in (observed, predicted) order."""
    pairs = [
        (int(matrix[i, j]), i, j)
        for i in range(matrix.shape[0])
        for j in range(matrix.shape[1])
        if i != j and matrix[i, j] > 0
    ]
    pairs.sort(key=lambda p: (-p[0], p[1], p[2]))
    return [ConfusionPair(observed=genres[i], predicted=genres[j], count=c) for c, i, j in pairs[:limit]]


def evaluate(
    probs: ProbLike,
    labels: Sequence[int],
    genres: Sequence[str],
    ks: Sequence[int] = REPORT_KS,
    model_name: str = "",
    split: str = "test",
    config: Optional[Dict[str, Any]] = None,
) -> EvaluationReport:
    values, labels = _checked(probs, labels, len(genres))
    if values.shape[1] != len(genres):
        raise ContractError(f"model scores {values.shape[1]} classes but {len(genres)} genre names were given")
    matrix = confusion_matrix(values, labels, len(genres))
    report = EvaluationReport(
        genres=list(genres),
        num_records=int(labels.shape[0]),
        top_k_accuracy={k: top_k_accuracy(values, labels, k) for k in ks if k <= values.shape[1]},
        per_genre_accuracy=accuracy_from_confusion(matrix),
        support=matrix.sum(axis=1).tolist(),
        predicted_counts=matrix.sum(axis=0).tolist(),
        confusion=matrix.tolist(),
        top_confusions=top_confusions(matrix, genres),
        model_name=model_name,
        split=split,
        config=config or {},
    )
    logger.info(
        "Evaluated %d record(s) on %s: %s",
        report.num_records,
        split,
        ", ".join(f"top-{k} {v:.4f}" for k, v in report.top_k_accuracy.items()),
    )
    return report
