"""Seeded Lloyd k-means and the recursive semi-supervised clustering core.

The learner partitions a mixed labeled/unlabeled point set with k-means (one
seed per class present), then re-clusters any partition whose labeled members
disagree too much, recursively, until every retained cluster's labeled
minority classes fall at or below a relative-percentage threshold. Each final
cluster takes its labeled majority class, every unlabeled member inherits
that class, and the cluster mean vectors become the centroids used later for
nearest-centroid classification.

Guards not implied by the plain recursion: a maximum recursion depth, a
minimum cluster size for recursion, and a no-progress check (k-means returned
the whole input as one cluster). A cluster blocked by a guard is accepted
with its majority label and counted as a fallback acceptance. Clusters with
no labeled member take the label of the nearest labeled sibling centroid from
the same partition.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import kernels
from .errors import DataError, InvariantError

# acceptance reasons recorded on every final cluster
ACCEPT_PURE = "pure"                 # single labeled class present
ACCEPT_THRESHOLD = "threshold"       # minorities all at/below the threshold
ACCEPT_DEPTH = "fallback_depth"      # wanted to recurse, depth limit reached
ACCEPT_SIZE = "fallback_size"        # wanted to recurse, cluster too small
ACCEPT_NO_SPLIT = "fallback_unsplittable"  # k-means could not split the set
ACCEPT_ORPHAN = "orphan"             # no labeled member; labeled via sibling

FALLBACK_REASONS = (ACCEPT_DEPTH, ACCEPT_SIZE, ACCEPT_NO_SPLIT)


@dataclass(frozen=True)
class KMeansConfig:
    distance: str = "euclidean"
    max_iterations: int = 100
    centroid_shift_tolerance: float = 1e-6
    rng_seed: int = 0
    empty_cluster_policy: str = "reseed_farthest"

    def __post_init__(self):
        if self.distance not in kernels.METRICS:
            raise DataError(f"unknown distance {self.distance!r}")
        if self.max_iterations < 1:
            raise DataError("max_iterations must be >= 1")
        if self.centroid_shift_tolerance <= 0:
            raise DataError("centroid_shift_tolerance must be > 0")
        if self.empty_cluster_policy not in ("reseed_farthest", "drop"):
            raise DataError(f"unknown empty_cluster_policy {self.empty_cluster_policy!r}")


@dataclass(frozen=True)
class RecursiveConfig:
    """Knobs for the recursive clustering pass.

    ``th_percent`` is the relative-percentage cutoff: a labeled minority
    class at or below this percentage of the majority count is treated as
    outliers instead of triggering a re-cluster. ``min_cluster_size_for_recursion``
    of None means 2x the number of distinct labeled classes in the cluster.
    """

    th_percent: float = 5.0
    max_recursion_depth: int = 16
    min_cluster_size_for_recursion: int | None = None
    kmeans: KMeansConfig = field(default_factory=KMeansConfig)

    def __post_init__(self):
        if not 0.0 <= self.th_percent <= 100.0:
            raise DataError(f"th_percent must be in [0,100], got {self.th_percent}")
        if self.max_recursion_depth < 1:
            raise DataError("max_recursion_depth must be >= 1")


@dataclass
class KMeansResult:
    """Final assignment plus per-iteration objective values.

    ``centroids`` are the exact componentwise means of the final members;
    empty clusters are dropped from the output and assignments renumbered
    densely in original cluster order. ``sse_history`` records the objective
    (sum of squared euclidean distances, or summed cosine distances) at each
    assignment step.
    """

    assignments: np.ndarray
    centroids: np.ndarray
    counts: np.ndarray
    n_iter: int
    sse_history: list[float]


def kmeans(x: np.ndarray, seeds: np.ndarray, config: KMeansConfig) -> KMeansResult:
    """Lloyd iteration from explicit seed centroids.

    Assign each point to its nearest centroid (ties to the lowest index),
    recompute centroids as member means, and stop when the maximum centroid
    shift drops below tolerance or ``max_iterations`` is hit. Empty clusters
    are reseeded on the farthest-from-its-centroid point or dropped,
    per policy.
    """
    x = kernels.as_points(x)
    if x.shape[0] == 0:
        raise DataError("kmeans needs at least one point")
    centroids = kernels.as_points(seeds).copy()
    if centroids.shape[0] == 0:
        raise DataError("kmeans needs at least one seed")
    if centroids.shape[1] != x.shape[1]:
        raise DataError(
            f"seed dimension {centroids.shape[1]} != point dimension {x.shape[1]}"
        )

    k = centroids.shape[0]
    history: list[float] = []
    assign = np.zeros(x.shape[0], dtype=np.int64)
    n_iter = 0
    for _ in range(config.max_iterations):
        n_iter += 1
        assign, dist = kernels.nearest_centroids(x, centroids, config.distance)
        history.append(float(dist.sum()))
        sums, counts = kernels.centroid_sums(x, assign, k)
        means = np.where(counts[:, None] > 0, sums / np.maximum(counts, 1)[:, None], centroids)
        empties = np.flatnonzero(counts == 0)
        if empties.size:
            if config.empty_cluster_policy == "drop":
                keep = counts > 0
                remap = np.cumsum(keep) - 1
                centroids = np.ascontiguousarray(means[keep])
                assign = remap[assign]
                k = centroids.shape[0]
            else:
                # reseed each empty cluster on the most distant point, one
                # point per cluster, lowest cluster index served first; with
                # fewer points than empty clusters the leftovers stay empty
                order = np.argsort(-dist, kind="stable")
                for pos, j in enumerate(empties):
                    if pos >= x.shape[0]:
                        break
                    means[j] = x[order[pos]]
                centroids = means
            continue  # geometry changed; always run another assignment pass
        shift = np.sqrt(((means - centroids) ** 2).sum(axis=1)).max()
        centroids = means
        if shift < config.centroid_shift_tolerance:
            break

    # final cleanup: drop clusters that ended empty, recompute exact means
    sums, counts = kernels.centroid_sums(x, assign, k)
    keep = counts > 0
    remap = np.cumsum(keep) - 1
    out_centroids = sums[keep] / counts[keep, None]
    return KMeansResult(
        assignments=remap[assign].astype(np.int64),
        centroids=np.ascontiguousarray(out_centroids),
        counts=counts[keep],
        n_iter=n_iter,
        sse_history=history,
    )


def choose_initial_seeds(
    x: np.ndarray,
    labels: np.ndarray,
    rng: int | np.random.Generator = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """One uniformly chosen labeled point per class present.

    Returns ``(seeds, seed_classes)`` with classes in ascending index order;
    deterministic for a fixed seed.
    """
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    x = kernels.as_points(x)
    labels = np.asarray(labels, dtype=np.int64)
    labeled = np.flatnonzero(labels >= 0)
    if labeled.size == 0:
        raise DataError("cannot seed: no labeled points")
    present = np.unique(labels[labeled])
    seeds = np.empty((present.size, x.shape[1]), dtype=np.float64)
    for row, c in enumerate(present):
        members = np.flatnonzero(labels == c)
        seeds[row] = x[members[int(rng.integers(members.size))]]
    return seeds, present


def cluster_class_stats(member_labels: np.ndarray, n_classes: int) -> tuple[int, np.ndarray]:
    """(number of distinct labeled classes, per-class labeled counts)."""
    member_labels = np.asarray(member_labels, dtype=np.int64)
    lab = member_labels[member_labels >= 0]
    lsp = np.bincount(lab, minlength=n_classes).astype(np.int64)
    return int((lsp > 0).sum()), lsp


def majority_label(lsp: np.ndarray) -> int:
    """Class with the highest labeled count; ties go to the lowest index."""
    lsp = np.asarray(lsp)
    if lsp.sum() <= 0:
        raise DataError("cluster has no labeled members")
    return int(np.argmax(lsp))


def relative_percentage(lsp: np.ndarray, majority: int, other: int) -> float:
    """100 * labeled count of ``other`` / labeled count of ``majority``."""
    lsp = np.asarray(lsp)
    if lsp[majority] <= 0:
        raise DataError("majority class has zero labeled count")
    return 100.0 * float(lsp[other]) / float(lsp[majority])


@dataclass
class FinalCluster:
    member_indices: np.ndarray  # positions in the training matrix
    member_doc_ids: list[str]
    centroid: np.ndarray
    label: int
    acceptance: str
    depth: int


@dataclass
class RunStats:
    th_percent: float
    rng_seed: int
    distance: str
    backend: str
    max_depth_reached: int = 0
    recursion_calls: int = 0
    kmeans_runs: int = 0
    fallback_counts: dict[str, int] = field(default_factory=dict)
    orphan_count: int = 0

    @property
    def fallback_total(self) -> int:
        return sum(self.fallback_counts.values())

    def to_dict(self) -> dict:
        return {
            "th_percent": self.th_percent,
            "rng_seed": self.rng_seed,
            "distance": self.distance,
            "backend": self.backend,
            "max_depth_reached": self.max_depth_reached,
            "recursion_calls": self.recursion_calls,
            "kmeans_runs": self.kmeans_runs,
            "fallback_counts": dict(self.fallback_counts),
            "orphan_count": self.orphan_count,
        }


def _sibling_distance(a: np.ndarray, b: np.ndarray, metric: str) -> float:
    _, dist = kernels.nearest_centroids(a.reshape(1, -1), b.reshape(1, -1), metric)
    return float(dist[0])


def _recurse(
    x: np.ndarray,
    labels: np.ndarray,
    idx: np.ndarray,
    n_classes: int,
    config: RecursiveConfig,
    depth: int,
    rng: np.random.Generator,
    stats: RunStats,
    doc_ids: Sequence[str],
) -> list[FinalCluster]:
    stats.max_depth_reached = max(stats.max_depth_reached, depth)
    sub_x = np.ascontiguousarray(x[idx])
    sub_labels = labels[idx]
    seeds, _ = choose_initial_seeds(sub_x, sub_labels, rng)
    result = kmeans(sub_x, seeds, config.kmeans)
    stats.kmeans_runs += 1

    level = []
    for j in range(result.centroids.shape[0]):
        members = idx[result.assignments == j]
        ncp, lsp = cluster_class_stats(labels[members], n_classes)
        level.append((j, members, ncp, lsp))
    labeled_siblings = [
        (result.centroids[j], majority_label(lsp))
        for j, _, ncp, lsp in level
        if ncp >= 1
    ]

    finals: list[FinalCluster] = []
    for j, members, ncp, lsp in level:
        centroid = result.centroids[j]
        if ncp == 0:
            dists = [
                _sibling_distance(centroid, sib, config.kmeans.distance)
                for sib, _ in labeled_siblings
            ]
            label = labeled_siblings[int(np.argmin(dists))][1]
            stats.orphan_count += 1
            finals.append(
                FinalCluster(
                    member_indices=members,
                    member_doc_ids=[doc_ids[i] for i in members],
                    centroid=centroid,
                    label=label,
                    acceptance=ACCEPT_ORPHAN,
                    depth=depth,
                )
            )
            continue
        majority = majority_label(lsp)
        over_threshold = ncp > 1 and any(
            relative_percentage(lsp, majority, c) > config.th_percent
            for c in range(n_classes)
            if c != majority and lsp[c] > 0
        )
        if over_threshold:
            min_size = config.min_cluster_size_for_recursion
            if min_size is None:
                min_size = 2 * ncp
            if members.size == idx.size:
                acceptance = ACCEPT_NO_SPLIT
            elif depth >= config.max_recursion_depth:
                acceptance = ACCEPT_DEPTH
            elif members.size < min_size:
                acceptance = ACCEPT_SIZE
            else:
                stats.recursion_calls += 1
                finals.extend(
                    _recurse(x, labels, members, n_classes, config, depth + 1, rng, stats, doc_ids)
                )
                continue
            stats.fallback_counts[acceptance] = stats.fallback_counts.get(acceptance, 0) + 1
        else:
            acceptance = ACCEPT_PURE if ncp == 1 else ACCEPT_THRESHOLD
        finals.append(
            FinalCluster(
                member_indices=members,
                member_doc_ids=[doc_ids[i] for i in members],
                centroid=centroid,
                label=majority,
                acceptance=acceptance,
                depth=depth,
            )
        )
    return finals


def recursive_kmeans(
    x: np.ndarray,
    labels: np.ndarray,
    n_classes: int,
    config: RecursiveConfig,
    doc_ids: Sequence[str] | None = None,
) -> tuple[list[FinalCluster], RunStats]:
    """Run the recursive clustering pass over one point set.

    ``labels`` uses -1 for unlabeled points. Returns the final clusters in
    deterministic depth-first order plus run statistics.
    """
    x = kernels.as_points(x)
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape[0] != x.shape[0]:
        raise DataError("labels and points length mismatch")
    if not (labels >= 0).any():
        raise DataError("recursive clustering needs at least one labeled point")
    if doc_ids is None:
        doc_ids = [str(i) for i in range(x.shape[0])]
    stats = RunStats(
        th_percent=config.th_percent,
        rng_seed=config.kmeans.rng_seed,
        distance=config.kmeans.distance,
        backend=kernels.backend(),
    )
    rng = np.random.default_rng(config.kmeans.rng_seed)
    finals = _recurse(
        x, labels, np.arange(x.shape[0]), n_classes, config, 0, rng, stats, list(doc_ids)
    )
    return finals, stats


@dataclass
class ClusterModel:
    """The learned knowledgebase: final clusters, centroids and labels.

    ``training_label_assignments`` maps every unlabeled training doc id to
    the class index it inherited from its final cluster.
    """

    centroids: np.ndarray
    labels: np.ndarray
    clusters: list[FinalCluster]
    distance: str
    class_names: tuple[str, ...]
    n_training_points: int
    training_label_assignments: dict[str, int]
    stats: RunStats

    @property
    def n_clusters(self) -> int:
        return self.centroids.shape[0]

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    @property
    def dimension(self) -> int:
        return self.centroids.shape[1]

    def validate(self) -> None:
        m = self.n_clusters
        if len(self.clusters) != m or self.labels.shape[0] != m:
            raise InvariantError("cluster/centroid/label counts disagree")
        if m == 0:
            raise InvariantError("model has no clusters")
        if np.any(self.labels < 0) or np.any(self.labels >= self.n_classes):
            raise InvariantError("cluster label out of class range")
        all_members = np.concatenate([c.member_indices for c in self.clusters])
        if all_members.size != self.n_training_points or np.unique(all_members).size != all_members.size:
            raise InvariantError("final clusters do not partition the training set")
        for c in self.clusters:
            if not 0 <= c.label < self.n_classes:
                raise InvariantError("cluster label out of class range")


def build_model(
    x: np.ndarray,
    labels: np.ndarray,
    doc_ids: Sequence[str],
    class_names: Sequence[str],
    config: RecursiveConfig,
) -> ClusterModel:
    """Cluster a mixed training collection and assemble the knowledgebase.

    Requires at least one labeled point for every class in ``class_names``.
    Every unlabeled point ends up in ``training_label_assignments``.
    """
    x = kernels.as_points(x)
    labels = np.asarray(labels, dtype=np.int64)
    n_classes = len(class_names)
    present = np.unique(labels[labels >= 0])
    missing = [class_names[c] for c in range(n_classes) if c not in present]
    if missing:
        raise DataError(f"classes without labeled training points: {missing}")
    if len(doc_ids) != x.shape[0]:
        raise DataError("doc_ids and points length mismatch")

    finals, stats = recursive_kmeans(x, labels, n_classes, config, doc_ids)
    centroids = np.vstack([c.centroid for c in finals])
    cluster_labels = np.array([c.label for c in finals], dtype=np.int64)
    assignments: dict[str, int] = {}
    for c in finals:
        for i in c.member_indices:
            if labels[i] < 0:
                assignments[doc_ids[i]] = c.label

    model = ClusterModel(
        centroids=np.ascontiguousarray(centroids),
        labels=cluster_labels,
        clusters=finals,
        distance=config.kmeans.distance,
        class_names=tuple(class_names),
        n_training_points=x.shape[0],
        training_label_assignments=assignments,
        stats=stats,
    )
    model.validate()
    n_unlabeled = int((labels < 0).sum())
    if len(assignments) != n_unlabeled:
        raise InvariantError(
            f"{n_unlabeled} unlabeled points but {len(assignments)} label assignments"
        )
    return model


# ---------------------------------------------------------------------------
# model persistence (JSON; float repr round-trips exactly)
# ---------------------------------------------------------------------------

_MODEL_FORMAT = "textrkm-model"
_MODEL_VERSION = 1


def save_model(model: ClusterModel, path: str | Path) -> None:
    """Serialize the model; ``load_model`` restores it bit-exactly."""
    Path(path).write_text(json.dumps(model_to_dict(model)), encoding="utf-8")


def load_model(path: str | Path) -> ClusterModel:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    return model_from_dict(payload)


def model_from_dict(payload: dict) -> ClusterModel:
    if payload.get("format") != _MODEL_FORMAT:
        raise DataError("not a cluster model file")
    clusters = [
        FinalCluster(
            member_indices=np.array(c["member_indices"], dtype=np.int64),
            member_doc_ids=list(c["member_doc_ids"]),
            centroid=np.array(c["centroid"], dtype=np.float64),
            label=int(c["label"]),
            acceptance=c["acceptance"],
            depth=int(c["depth"]),
        )
        for c in payload["clusters"]
    ]
    s = payload["stats"]
    stats = RunStats(
        th_percent=s["th_percent"],
        rng_seed=s["rng_seed"],
        distance=s["distance"],
        backend=s["backend"],
        max_depth_reached=s["max_depth_reached"],
        recursion_calls=s["recursion_calls"],
        kmeans_runs=s["kmeans_runs"],
        fallback_counts=dict(s["fallback_counts"]),
        orphan_count=s["orphan_count"],
    )
    model = ClusterModel(
        centroids=np.vstack([c.centroid for c in clusters]),
        labels=np.array([c.label for c in clusters], dtype=np.int64),
        clusters=clusters,
        distance=payload["distance"],
        class_names=tuple(payload["class_names"]),
        n_training_points=int(payload["n_training_points"]),
        training_label_assignments={
            k: int(v) for k, v in payload["training_label_assignments"].items()
        },
        stats=stats,
    )
    model.validate()
    return model


def model_to_dict(model: ClusterModel) -> dict:
    """The JSON payload ``save_model`` writes, for embedding in bundles."""
    return {
        "format": _MODEL_FORMAT,
        "version": _MODEL_VERSION,
        "n_classes": model.n_classes,
        "class_names": list(model.class_names),
        "n_clusters": model.n_clusters,
        "dimension": model.dimension,
        "distance": model.distance,
        "n_training_points": model.n_training_points,
        "clusters": [
            {
                "label": int(c.label),
                "centroid": [float(v) for v in c.centroid],
                "member_indices": [int(i) for i in c.member_indices],
                "member_doc_ids": list(c.member_doc_ids),
                "acceptance": c.acceptance,
                "depth": c.depth,
            }
            for c in model.clusters
        ],
        "training_label_assignments": model.training_label_assignments,
        "stats": model.stats.to_dict(),
    }
