"""Class-count document embedding: one vector component per class.

Instead of a full bag-of-words matrix, every document becomes a K-vector
whose j-th component is the average relevance of its tokens to class j. The
relevance table is fitted on labeled documents only. The default weighting is
a smoothed class-conditional term frequency (each class column is a
probability distribution over the vocabulary); alternative schemes plug in
via a callable that maps the raw term/class count matrix to a weight matrix.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .corpus import Corpus, Document
from .errors import DataError

# A weighting scheme maps the (V, K) term/class count matrix to a (V, K)
# non-negative weight matrix.
WeightScheme = Callable[[np.ndarray], np.ndarray]


@dataclass
class TermClassWeights:
    """Fitted per-term, per-class relevance weights.

    ``weights[t, c]`` is the relevance of vocabulary term t to class c;
    ``oov_weight[c]`` is what an out-of-vocabulary token contributes to
    component c (the smoothed floor, 0 for unsmoothed or custom schemes).
    """

    vocabulary: dict[str, int]
    weights: np.ndarray
    oov_weight: np.ndarray
    smoothing: float
    class_names: tuple[str, ...]

    @property
    def n_classes(self) -> int:
        return self.weights.shape[1]

    @property
    def vocab_size(self) -> int:
        return self.weights.shape[0]

    def validate(self) -> None:
        if self.weights.shape != (len(self.vocabulary), len(self.class_names)):
            raise DataError("weight matrix shape does not match vocabulary/classes")
        if not np.all(np.isfinite(self.weights)) or np.any(self.weights < 0):
            raise DataError("weights must be finite and non-negative")
        if not np.all(np.isfinite(self.oov_weight)) or np.any(self.oov_weight < 0):
            raise DataError("oov weights must be finite and non-negative")


def term_class_counts(corpus: Corpus) -> tuple[dict[str, int], np.ndarray]:
    """Vocabulary (sorted terms) and the (V, K) token count matrix."""
    vocab: dict[str, int] = {}
    for doc in corpus.documents:
        for tok in doc.tokens:
            if tok not in vocab:
                vocab[tok] = 0
    vocabulary = {term: i for i, term in enumerate(sorted(vocab))}
    tf = np.zeros((len(vocabulary), corpus.n_classes), dtype=np.float64)
    for doc, label in zip(corpus.documents, corpus.labels):
        if label is None:
            raise DataError(f"document {doc.doc_id!r} is unlabeled")
        for tok in doc.tokens:
            tf[vocabulary[tok], label] += 1.0
    return vocabulary, tf


def fit_term_weights(
    d_labeled: Corpus,
    smoothing: float = 1.0,
    scheme: WeightScheme | None = None,
) -> TermClassWeights:
    """Fit the relevance table on a fully labeled corpus.

    Default scheme: ``w[t, c] = (tf[t, c] + s) / (sum_t tf[t, c] + s * V)``,
    so every class column sums to 1. With a custom ``scheme`` the column
    normalization is whatever the scheme produces and the OOV floor is 0.
    """
    if not d_labeled.fully_labeled():
        raise DataError("term weights are fitted on labeled documents only")
    if smoothing < 0:
        raise DataError(f"smoothing must be >= 0, got {smoothing}")
    present = set(lab for lab in d_labeled.labels)
    missing = [n for i, n in enumerate(d_labeled.class_names) if i not in present]
    if missing:
        raise DataError(f"classes without any labeled document: {missing}")
    vocabulary, tf = term_class_counts(d_labeled)
    if not vocabulary:
        raise DataError("empty vocabulary: no tokens in the labeled corpus")
    v = len(vocabulary)
    if scheme is not None:
        weights = np.asarray(scheme(tf), dtype=np.float64)
        if weights.shape != tf.shape:
            raise DataError(
                f"weight scheme returned shape {weights.shape}, expected {tf.shape}"
            )
        oov = np.zeros(tf.shape[1], dtype=np.float64)
    else:
        mass = tf.sum(axis=0)
        denom = mass + smoothing * v
        if np.any(denom <= 0):
            raise DataError("a class has zero token mass and zero smoothing")
        weights = (tf + smoothing) / denom
        oov = smoothing / denom
    w = TermClassWeights(
        vocabulary=vocabulary,
        weights=weights,
        oov_weight=oov,
        smoothing=float(smoothing),
        class_names=d_labeled.class_names,
    )
    w.validate()
    return w


def embed_tokens(tokens: Sequence[str], w: TermClassWeights) -> np.ndarray:
    """Average the per-token weight rows into one K-vector.

    Out-of-vocabulary tokens contribute the OOV floor and still count in the
    denominator, which keeps the token-count-weighted concatenation identity
    exact.
    """
    if not tokens:
        raise DataError("cannot embed a document with zero tokens")
    vec = np.zeros(w.n_classes, dtype=np.float64)
    n_oov = 0
    for tok in tokens:
        idx = w.vocabulary.get(tok)
        if idx is None:
            n_oov += 1
        else:
            vec += w.weights[idx]
    if n_oov:
        vec += n_oov * w.oov_weight
    return vec / len(tokens)


def embed(doc: Document, w: TermClassWeights) -> np.ndarray:
    return embed_tokens(doc.tokens, w)


def embed_corpus(
    corpus: Corpus, w: TermClassWeights
) -> tuple[np.ndarray, list[str], list[str]]:
    """Embed every document, preserving order.

    Returns ``(matrix, kept_ids, dropped_ids)``; documents with zero tokens
    are dropped and reported rather than raising.
    """
    vectors = []
    kept: list[str] = []
    dropped: list[str] = []
    for doc in corpus.documents:
        if not doc.tokens:
            dropped.append(doc.doc_id)
            continue
        vectors.append(embed_tokens(doc.tokens, w))
        kept.append(doc.doc_id)
    matrix = (
        np.vstack(vectors) if vectors else np.zeros((0, w.n_classes), dtype=np.float64)
    )
    return matrix, kept, dropped


# ---------------------------------------------------------------------------
# persistence: line-oriented text artifact, bit-exact round trip
# ---------------------------------------------------------------------------

_MAGIC = "textrkm-weights 1"


def save_weights(w: TermClassWeights, path: str | Path) -> None:
    """Write the weight table as text.

    Layout: magic line; ``classes``/``vocab``/``smoothing`` header fields;
    one tab-joined class-name line; V vocabulary lines; V weight rows of K
    space-joined ``%.17g`` floats; one ``oov`` row. 17 significant digits
    round-trip float64 exactly.
    """
    for name in w.class_names:
        if "\t" in name or "\n" in name:
            raise DataError(f"class name {name!r} cannot contain tab/newline")
    terms = sorted(w.vocabulary, key=w.vocabulary.get)
    lines = [
        _MAGIC,
        f"classes\t{w.n_classes}",
        f"vocab\t{w.vocab_size}",
        f"smoothing\t{w.smoothing:.17g}",
        "\t".join(w.class_names),
    ]
    lines.extend(terms)
    for row in w.weights:
        lines.append(" ".join(f"{v:.17g}" for v in row))
    lines.append("oov " + " ".join(f"{v:.17g}" for v in w.oov_weight))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def weights_to_dict(w: TermClassWeights) -> dict:
    """JSON-ready payload (floats round-trip exactly via repr)."""
    terms = sorted(w.vocabulary, key=w.vocabulary.get)
    return {
        "class_names": list(w.class_names),
        "smoothing": w.smoothing,
        "terms": terms,
        "weights": [[float(v) for v in row] for row in w.weights],
        "oov_weight": [float(v) for v in w.oov_weight],
    }


def weights_from_dict(d: dict) -> TermClassWeights:
    w = TermClassWeights(
        vocabulary={t: i for i, t in enumerate(d["terms"])},
        weights=np.array(d["weights"], dtype=np.float64).reshape(
            len(d["terms"]), len(d["class_names"])
        ),
        oov_weight=np.array(d["oov_weight"], dtype=np.float64),
        smoothing=float(d["smoothing"]),
        class_names=tuple(d["class_names"]),
    )
    w.validate()
    return w


def load_weights(path: str | Path) -> TermClassWeights:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != _MAGIC:
        raise DataError(f"{path} is not a weight table (bad magic line)")
    try:
        n_classes = int(lines[1].split("\t")[1])
        vocab_size = int(lines[2].split("\t")[1])
        smoothing = float(lines[3].split("\t")[1])
        class_names = tuple(lines[4].split("\t"))
        terms = lines[5 : 5 + vocab_size]
        rows = lines[5 + vocab_size : 5 + 2 * vocab_size]
        oov_line = lines[5 + 2 * vocab_size]
    except (IndexError, ValueError) as exc:
        raise DataError(f"{path} is truncated or malformed: {exc}") from exc
    if len(class_names) != n_classes or len(terms) != vocab_size or len(rows) != vocab_size:
        raise DataError(f"{path} header does not match body")
    if not oov_line.startswith("oov "):
        raise DataError(f"{path} missing oov row")
    weights = np.array([[float(v) for v in row.split()] for row in rows], dtype=np.float64)
    weights = weights.reshape(vocab_size, n_classes)
    oov = np.array([float(v) for v in oov_line.split()[1:]], dtype=np.float64)
    w = TermClassWeights(
        vocabulary={t: i for i, t in enumerate(terms)},
        weights=weights,
        oov_weight=oov,
        smoothing=smoothing,
        class_names=class_names,
    )
    w.validate()
    return w
