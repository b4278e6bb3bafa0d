"""Nearest-centroid classification against a trained cluster model."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .errors import DataError
from .rkmeans import ClusterModel


@dataclass(frozen=True)
class Prediction:
    doc_id: str
    label: int        # predicted class index (the winning cluster's label)
    cluster: int      # winning cluster index
    distance: float   # distance to the winning centroid under the model metric


def classify_batch(
    vectors: np.ndarray,
    model: ClusterModel,
    doc_ids: Sequence[str] | None = None,
) -> list[Prediction]:
    """Label each vector by its nearest cluster centroid.

    Distances use the metric the model was trained with; ties go to the
    lowest cluster index. Order-preserving and equivalent to one
    ``classify`` call per row.
    """
    x = np.asarray(vectors, dtype=np.float64)
    if x.ndim == 1:
        x = x.reshape(1, -1)
    if x.shape[0] == 0:
        return []
    if model.n_clusters == 0:
        raise DataError("model has no clusters")
    if x.shape[1] != model.dimension:
        raise DataError(
            f"vector dimension {x.shape[1]} != model dimension {model.dimension}"
        )
    if doc_ids is None:
        doc_ids = [str(i) for i in range(x.shape[0])]
    if len(doc_ids) != x.shape[0]:
        raise DataError("doc_ids and vectors length mismatch")
    assign, dist = kernels.nearest_centroids(x, model.centroids, model.distance)
    if model.distance == "euclidean":
        dist = np.sqrt(dist)
    return [
        Prediction(
            doc_id=doc_ids[i],
            label=int(model.labels[assign[i]]),
            cluster=int(assign[i]),
            distance=float(dist[i]),
        )
        for i in range(x.shape[0])
    ]


def classify(vector: np.ndarray, model: ClusterModel, doc_id: str = "") -> Prediction:
    """Single-vector form of ``classify_batch``."""
    return classify_batch(np.asarray(vector, dtype=np.float64).reshape(1, -1), model, [doc_id])[0]
