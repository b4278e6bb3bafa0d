"""Synthetic corpora for tests: class-specific vocabularies plus shared noise.

Documents of class c draw most tokens from that class's private word list and
the rest from a shared pool, which gives well-separated class-count embeddings
while still exercising vocabulary overlap, OOV handling and stratified splits.
Everything is seeded and deterministic.
"""
from __future__ import annotations

import numpy as np

from textrkm.corpus import Corpus, Document


def make_text_corpus(
    n_classes: int = 4,
    docs_per_class: int = 40,
    doc_len: int = 30,
    class_words: int = 12,
    shared_words: int = 20,
    signal: float = 0.75,
    seed: int = 0,
    class_prefix: str = "topic",
) -> Corpus:
    """Fully labeled corpus with ``n_classes * docs_per_class`` documents."""
    rng = np.random.default_rng(seed)
    shared = [f"common{w}" for w in range(shared_words)]
    private = [
        [f"{class_prefix}{c}word{w}" for w in range(class_words)]
        for c in range(n_classes)
    ]
    documents = []
    labels = []
    for c in range(n_classes):
        for d in range(docs_per_class):
            tokens = []
            for _ in range(doc_len):
                if rng.random() < signal:
                    tokens.append(private[c][int(rng.integers(class_words))])
                else:
                    tokens.append(shared[int(rng.integers(shared_words))])
            documents.append(Document(f"{class_prefix}{c}/doc{d:03d}", tuple(tokens)))
            labels.append(c)
    return Corpus(
        documents=documents,
        labels=labels,
        class_names=tuple(f"{class_prefix}{c}" for c in range(n_classes)),
    )


def write_corpus_tree(corpus: Corpus, root) -> None:
    """Materialize a corpus as the <root>/<class>/<file> directory layout."""
    for doc, label in zip(corpus.documents, corpus.labels):
        cdir = root / corpus.class_names[label]
        cdir.mkdir(parents=True, exist_ok=True)
        (cdir / doc.doc_id.split("/")[-1]).write_text(" ".join(doc.tokens), encoding="utf-8")


def make_point_cloud(
    n_classes: int = 4,
    points_per_class: int = 50,
    dim: int = 4,
    center_scale: float = 8.0,
    sigma: float = 1.0,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Spherical Gaussian blobs at scaled one-hot centers.

    Returns ``(points, true_labels, centers)``; pairwise center distance is
    ``center_scale * sqrt(2)``.
    """
    rng = np.random.default_rng(seed)
    centers = np.eye(max(n_classes, dim))[:n_classes, :dim] * center_scale
    points = []
    labels = []
    for c in range(n_classes):
        pts = rng.normal(loc=centers[c], scale=sigma, size=(points_per_class, dim))
        points.append(pts)
        labels.extend([c] * points_per_class)
    return np.vstack(points), np.array(labels, dtype=np.int64), centers
