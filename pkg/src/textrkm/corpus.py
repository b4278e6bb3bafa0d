"""Document collections: loading, tokenization, splitting and label masking.

A corpus is an ordered list of tokenized documents with an optional class
label per document. All randomized operations take an explicit seed and are
bitwise deterministic for fixed inputs; per-class document order is always
normalized to sorted doc-id order before shuffling, so results do not depend
on load order.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .errors import DataError

UNLABELED = -1


@dataclass(frozen=True)
class Document:
    doc_id: str
    tokens: tuple[str, ...]


@dataclass(frozen=True)
class TokenizerConfig:
    """Preprocessing knobs: lowercase, strip, split, filter.

    ``strip_pattern`` is applied (as a regex replaced by a space) after
    lowercasing; the default removes everything that is not a-z or 0-9.
    """

    min_token_len: int = 2
    stopwords: frozenset[str] = frozenset()
    strip_pattern: str = r"[^a-z0-9]+"

    def to_dict(self) -> dict:
        return {
            "min_token_len": self.min_token_len,
            "stopwords": sorted(self.stopwords),
            "strip_pattern": self.strip_pattern,
        }

    @staticmethod
    def from_dict(d: Mapping) -> "TokenizerConfig":
        return TokenizerConfig(
            min_token_len=int(d["min_token_len"]),
            stopwords=frozenset(d["stopwords"]),
            strip_pattern=str(d["strip_pattern"]),
        )


@dataclass(frozen=True)
class SplitSpec:
    """How to carve a labeled corpus into train/test and labeled/unlabeled."""

    test_fraction: float = 0.5
    labeled_fraction: float = 0.1
    unlabeled_pool_size: int | None = None
    rng_seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.test_fraction < 1.0:
            raise DataError(f"test_fraction must be in (0,1), got {self.test_fraction}")
        if not 0.0 < self.labeled_fraction < 1.0:
            raise DataError(f"labeled_fraction must be in (0,1), got {self.labeled_fraction}")


@dataclass
class Corpus:
    """Ordered documents with per-document optional labels.

    ``labels[i]`` is the class index of ``documents[i]`` or None when the
    document is unlabeled. ``class_names`` gives the dense index -> name map.
    ``skipped`` records doc ids dropped at load time (unreadable or empty
    after tokenization).
    """

    documents: list[Document]
    labels: list[int | None]
    class_names: tuple[str, ...]
    skipped: tuple[str, ...] = ()

    @property
    def n_docs(self) -> int:
        return len(self.documents)

    @property
    def n_labeled(self) -> int:
        return sum(1 for v in self.labels if v is not None)

    @property
    def n_unlabeled(self) -> int:
        return self.n_docs - self.n_labeled

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    def doc_ids(self) -> list[str]:
        return [d.doc_id for d in self.documents]

    def label_array(self) -> np.ndarray:
        """Labels as int64 with UNLABELED (-1) for missing."""
        return np.array(
            [UNLABELED if v is None else v for v in self.labels], dtype=np.int64
        )

    def fully_labeled(self) -> bool:
        return all(v is not None for v in self.labels)

    def validate(self) -> None:
        if len(self.labels) != len(self.documents):
            raise DataError("labels and documents length mismatch")
        seen = set()
        for d in self.documents:
            if not d.tokens:
                raise DataError(f"document {d.doc_id!r} has no tokens")
            if d.doc_id in seen:
                raise DataError(f"duplicate doc id {d.doc_id!r}")
            seen.add(d.doc_id)
        for v in self.labels:
            if v is not None and not 0 <= v < self.n_classes:
                raise DataError(f"label {v} out of range for {self.n_classes} classes")

    def subset(self, indices: Iterable[int], drop_labels: bool = False) -> "Corpus":
        idx = list(indices)
        return Corpus(
            documents=[self.documents[i] for i in idx],
            labels=[None if drop_labels else self.labels[i] for i in idx],
            class_names=self.class_names,
        )


def concat_corpora(a: Corpus, b: Corpus) -> Corpus:
    """Append b's documents after a's; class name tables must agree."""
    if a.class_names != b.class_names:
        raise DataError("cannot concatenate corpora with different class tables")
    return Corpus(
        documents=a.documents + b.documents,
        labels=a.labels + b.labels,
        class_names=a.class_names,
    )


# ---------------------------------------------------------------------------
# tokenization and loading
# ---------------------------------------------------------------------------

_PATTERN_CACHE: dict[str, re.Pattern] = {}


def tokenize(raw_text: str, config: TokenizerConfig = TokenizerConfig()) -> list[str]:
    """Lowercase, strip, whitespace-split; then stopword and length filters."""
    pat = _PATTERN_CACHE.get(config.strip_pattern)
    if pat is None:
        pat = re.compile(config.strip_pattern)
        _PATTERN_CACHE[config.strip_pattern] = pat
    text = pat.sub(" ", raw_text.lower())
    out = []
    for tok in text.split():
        if len(tok) < config.min_token_len:
            continue
        if tok in config.stopwords:
            continue
        out.append(tok)
    return out


def load_directory_corpus(
    root_path: str | Path, config: TokenizerConfig = TokenizerConfig()
) -> Corpus:
    """Load a ``<root>/<class-name>/<doc-file>`` tree as a fully labeled corpus.

    Class names are the immediate subdirectory names, sorted lexicographically
    and indexed densely. Files are read as latin-1 text. Documents that are
    unreadable or empty after tokenization are skipped (counted in
    ``corpus.skipped``); a class left with zero documents is an error.
    """
    root = Path(root_path)
    if not root.is_dir():
        raise DataError(f"corpus root {root} is not a directory")
    class_dirs = sorted(p for p in root.iterdir() if p.is_dir())
    if not class_dirs:
        raise DataError(f"corpus root {root} contains no class directories")

    documents: list[Document] = []
    labels: list[int | None] = []
    skipped: list[str] = []
    for ci, cdir in enumerate(class_dirs):
        n_before = len(documents)
        # non-directory entries only; unreadable ones (broken links, bad
        # permissions) fall into the skip path below
        for fpath in sorted(p for p in cdir.iterdir() if not p.is_dir()):
            doc_id = f"{cdir.name}/{fpath.name}"
            try:
                text = fpath.read_bytes().decode("latin-1")
            except OSError:
                skipped.append(doc_id)
                continue
            tokens = tokenize(text, config)
            if not tokens:
                skipped.append(doc_id)
                continue
            documents.append(Document(doc_id, tuple(tokens)))
            labels.append(ci)
        if len(documents) == n_before:
            raise DataError(f"class directory {cdir} has no readable non-empty documents")

    corpus = Corpus(
        documents=documents,
        labels=labels,
        class_names=tuple(d.name for d in class_dirs),
        skipped=tuple(skipped),
    )
    corpus.validate()
    return corpus


# ---------------------------------------------------------------------------
# splitting and masking
# ---------------------------------------------------------------------------

def _class_members(corpus: Corpus) -> list[list[int]]:
    """Per-class document indices ordered by doc id (load-order independent)."""
    members: list[list[int]] = [[] for _ in range(corpus.n_classes)]
    for i, lab in enumerate(corpus.labels):
        if lab is None:
            raise DataError("operation requires a fully labeled corpus")
        members[lab].append(i)
    for m in members:
        m.sort(key=lambda i: corpus.documents[i].doc_id)
    return members


def split_train_test(corpus: Corpus, spec: SplitSpec) -> tuple[Corpus, Corpus]:
    """Stratified random train/test split; both sides keep their labels."""
    rng = np.random.default_rng(spec.rng_seed)
    train_idx: list[int] = []
    test_idx: list[int] = []
    for ci, members in enumerate(_class_members(corpus)):
        if len(members) < 2:
            raise DataError(
                f"class {corpus.class_names[ci]!r} has {len(members)} document(s); "
                "need at least 2 to appear on both sides of the split"
            )
        n_test = int(round(len(members) * spec.test_fraction))
        n_test = min(max(n_test, 1), len(members) - 1)
        perm = rng.permutation(len(members))
        chosen = {members[p] for p in perm[:n_test]}
        test_idx.extend(sorted(chosen))
        train_idx.extend(i for i in members if i not in chosen)
    train_idx.sort()
    test_idx.sort()
    return corpus.subset(train_idx), corpus.subset(test_idx)


def mask_labels(
    corpus: Corpus, labeled_fraction: float, rng_seed: int
) -> tuple[Corpus, Corpus, dict[str, int]]:
    """Hide labels on all but a stratified fraction of a labeled corpus.

    Returns ``(d_labeled, d_unlabeled, hidden)`` where ``hidden`` maps each
    unlabeled doc id to its ground-truth class index. The ground truth never
    rides on the unlabeled corpus itself, so it cannot leak into a learner
    that only sees the two corpora. Every class keeps at least one labeled
    document regardless of the fraction.
    """
    if not 0.0 < labeled_fraction < 1.0:
        raise DataError(f"labeled_fraction must be in (0,1), got {labeled_fraction}")
    rng = np.random.default_rng(rng_seed)
    labeled_idx: list[int] = []
    unlabeled_idx: list[int] = []
    for ci, members in enumerate(_class_members(corpus)):
        if not members:
            raise DataError(
                f"class {corpus.class_names[ci]!r} has no documents; cannot keep one labeled"
            )
        n_lab = int(round(len(members) * labeled_fraction))
        n_lab = min(max(n_lab, 1), len(members))
        perm = rng.permutation(len(members))
        chosen = {members[p] for p in perm[:n_lab]}
        labeled_idx.extend(sorted(chosen))
        unlabeled_idx.extend(i for i in members if i not in chosen)
    labeled_idx.sort()
    unlabeled_idx.sort()
    hidden = {corpus.documents[i].doc_id: corpus.labels[i] for i in unlabeled_idx}
    return (
        corpus.subset(labeled_idx),
        corpus.subset(unlabeled_idx, drop_labels=True),
        hidden,
    )


def make_training_collection(
    d_labeled: Corpus,
    d_unlabeled: Corpus,
    pool_size: int | None = None,
    rng_seed: int = 0,
) -> Corpus:
    """Labeled docs plus a uniform unlabeled sample, as one training corpus.

    ``pool_size`` is the number of unlabeled documents to draw (without
    replacement); None takes the whole unlabeled set. Sampled documents carry
    no label.
    """
    if d_labeled.class_names != d_unlabeled.class_names:
        raise DataError("labeled/unlabeled corpora have different class tables")
    n_pool = d_unlabeled.n_docs if pool_size is None else int(pool_size)
    if n_pool > d_unlabeled.n_docs:
        raise DataError(
            f"requested {n_pool} unlabeled documents but only {d_unlabeled.n_docs} available"
        )
    if n_pool < 0:
        raise DataError(f"pool size must be >= 0, got {n_pool}")
    order = sorted(range(d_unlabeled.n_docs), key=lambda i: d_unlabeled.documents[i].doc_id)
    rng = np.random.default_rng(rng_seed)
    perm = rng.permutation(len(order))
    sampled = sorted(order[p] for p in perm[:n_pool])
    picked = d_unlabeled.subset(sampled, drop_labels=True)
    return Corpus(
        documents=d_labeled.documents + picked.documents,
        labels=list(d_labeled.labels) + [None] * picked.n_docs,
        class_names=d_labeled.class_names,
    )


# ---------------------------------------------------------------------------
# split manifests (replayable trials)
# ---------------------------------------------------------------------------

SIDE_TRAIN = "train"
SIDE_TEST = "test"


def write_split_manifest(
    path: str | Path,
    train_ids: Iterable[str],
    test_ids: Iterable[str],
    labeled_ids: Iterable[str],
    meta: Mapping[str, str] | None = None,
) -> None:
    """Write ``doc_id<TAB>side<TAB>labeled_flag`` lines, one per document.

    ``meta`` entries are recorded as leading ``# key value`` comment lines
    (trial seed, ratio, ...), which readers surface back as strings.
    """
    labeled = set(labeled_ids)
    lines = []
    for key, value in (meta or {}).items():
        lines.append(f"# {key} {value}")
    for doc_id in train_ids:
        flag = 1 if doc_id in labeled else 0
        lines.append(f"{doc_id}\t{SIDE_TRAIN}\t{flag}")
    for doc_id in test_ids:
        lines.append(f"{doc_id}\t{SIDE_TEST}\t0")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_split_manifest(path: str | Path) -> tuple[dict[str, str], list[tuple[str, str, int]]]:
    """Parse a split manifest back into (meta, [(doc_id, side, labeled_flag)])."""
    meta: dict[str, str] = {}
    entries: list[tuple[str, str, int]] = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        if line.startswith("#"):
            parts = line[1:].strip().split(None, 1)
            if len(parts) == 2:
                meta[parts[0]] = parts[1]
            continue
        fields = line.split("\t")
        if len(fields) != 3 or fields[1] not in (SIDE_TRAIN, SIDE_TEST):
            raise DataError(f"{path}:{lineno}: malformed manifest line {line!r}")
        entries.append((fields[0], fields[1], int(fields[2])))
    return meta, entries


def apply_split_manifest(
    corpus: Corpus, entries: list[tuple[str, str, int]]
) -> tuple[Corpus, Corpus, dict[str, int]]:
    """Rebuild (train, test, labeled id set) from a fully labeled corpus.

    Returns ``(train, test, labeled_flags)`` where ``labeled_flags`` maps
    train doc ids to the manifest's labeled flag. Every manifest doc id must
    exist in the corpus.
    """
    by_id = {d.doc_id: i for i, d in enumerate(corpus.documents)}
    train_idx: list[int] = []
    test_idx: list[int] = []
    flags: dict[str, int] = {}
    for doc_id, side, flag in entries:
        i = by_id.get(doc_id)
        if i is None:
            raise DataError(f"manifest doc id {doc_id!r} not present in corpus")
        if side == SIDE_TRAIN:
            train_idx.append(i)
            flags[doc_id] = flag
        else:
            test_idx.append(i)
    return corpus.subset(train_idx), corpus.subset(test_idx), flags


def mask_from_flags(
    train: Corpus, labeled_flags: Mapping[str, int]
) -> tuple[Corpus, Corpus, dict[str, int]]:
    """Replay a recorded mask: same return contract as ``mask_labels``."""
    labeled_idx = [i for i, d in enumerate(train.documents) if labeled_flags.get(d.doc_id)]
    unlabeled_idx = [i for i, d in enumerate(train.documents) if not labeled_flags.get(d.doc_id)]
    hidden = {train.documents[i].doc_id: train.labels[i] for i in unlabeled_idx}
    return train.subset(labeled_idx), train.subset(unlabeled_idx, drop_labels=True), hidden
