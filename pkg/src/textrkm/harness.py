"""Experiment harness: seeded trials, the label-ratio sweep, result files.

A trial masks the training half at one labeled:unlabeled ratio, fits the
representation on the labeled part, clusters the mixed collection, classifies
the held-out test half, and scores it. A sweep runs a grid of ratios (default
1:49 .. 20:30 in steps of one part out of fifty) with a fixed number of
seeded trials per ratio and aggregates max/min/mean/std per metric. Every
trial writes a split manifest so it can be replayed bit-for-bit.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .classifier import classify_batch
from .corpus import (
    Corpus,
    SplitSpec,
    TokenizerConfig,
    apply_split_manifest,
    concat_corpora,
    load_directory_corpus,
    make_training_collection,
    mask_from_flags,
    mask_labels,
    read_split_manifest,
    split_train_test,
    write_split_manifest,
)
from .errors import DataError
from .evaluation import EvalReport, confusion, score
from .representation import embed_corpus, fit_term_weights
from .rkmeans import ClusterModel, KMeansConfig, RecursiveConfig, build_model

SWEEP_METRICS = ("accuracy", "macro_precision", "macro_recall", "macro_f", "micro_f")


def default_ratio_grid(total: int = 50, first: int = 1, last: int = 20) -> tuple[tuple[int, int], ...]:
    """Labeled:unlabeled integer pairs over a fixed number of parts."""
    return tuple((i, total - i) for i in range(first, last + 1))


@dataclass(frozen=True)
class SweepConfig:
    ratio_grid: tuple[tuple[int, int], ...] = default_ratio_grid()
    trials_per_ratio: int = 20
    base_seed: int = 0
    test_fraction: float = 0.5
    smoothing: float = 1.0
    recursive: RecursiveConfig = field(default_factory=RecursiveConfig)
    tokenizer: TokenizerConfig = field(default_factory=TokenizerConfig)
    unlabeled_pool_size: int | None = None  # None = use the whole unlabeled set
    transductive: bool = False              # include test docs, unlabeled, in training

    def __post_init__(self):
        if self.trials_per_ratio < 1:
            raise DataError("trials_per_ratio must be >= 1")
        if not self.ratio_grid:
            raise DataError("ratio_grid is empty")
        totals = {a + b for a, b in self.ratio_grid}
        if len(totals) != 1:
            raise DataError(f"ratio grid pairs must share one total, got totals {sorted(totals)}")
        if any(a < 1 or b < 1 for a, b in self.ratio_grid):
            raise DataError("ratio parts must be >= 1")

    def to_dict(self) -> dict:
        km = self.recursive.kmeans
        return {
            "ratio_grid": [list(r) for r in self.ratio_grid],
            "trials_per_ratio": self.trials_per_ratio,
            "base_seed": self.base_seed,
            "test_fraction": self.test_fraction,
            "smoothing": self.smoothing,
            "th_percent": self.recursive.th_percent,
            "max_recursion_depth": self.recursive.max_recursion_depth,
            "min_cluster_size_for_recursion": self.recursive.min_cluster_size_for_recursion,
            "distance": km.distance,
            "max_iterations": km.max_iterations,
            "centroid_shift_tolerance": km.centroid_shift_tolerance,
            "empty_cluster_policy": km.empty_cluster_policy,
            "tokenizer": self.tokenizer.to_dict(),
            "unlabeled_pool_size": self.unlabeled_pool_size,
            "transductive": self.transductive,
        }

    @staticmethod
    def from_dict(d: Mapping) -> "SweepConfig":
        return SweepConfig(
            ratio_grid=tuple((int(a), int(b)) for a, b in d["ratio_grid"]),
            trials_per_ratio=int(d["trials_per_ratio"]),
            base_seed=int(d["base_seed"]),
            test_fraction=float(d["test_fraction"]),
            smoothing=float(d["smoothing"]),
            recursive=RecursiveConfig(
                th_percent=float(d["th_percent"]),
                max_recursion_depth=int(d["max_recursion_depth"]),
                min_cluster_size_for_recursion=(
                    None
                    if d["min_cluster_size_for_recursion"] is None
                    else int(d["min_cluster_size_for_recursion"])
                ),
                kmeans=KMeansConfig(
                    distance=str(d["distance"]),
                    max_iterations=int(d["max_iterations"]),
                    centroid_shift_tolerance=float(d["centroid_shift_tolerance"]),
                    empty_cluster_policy=str(d["empty_cluster_policy"]),
                ),
            ),
            tokenizer=TokenizerConfig.from_dict(d["tokenizer"]),
            unlabeled_pool_size=(
                None if d["unlabeled_pool_size"] is None else int(d["unlabeled_pool_size"])
            ),
            transductive=bool(d["transductive"]),
        )


@dataclass
class TrialResult:
    ratio: tuple[int, int]
    seed: int
    report: EvalReport
    metrics: dict[str, float]
    n_clusters: int
    fallback_acceptances: int
    orphan_count: int
    max_depth_reached: int
    labeled_doc_ids: tuple[str, ...]
    model: ClusterModel | None = None


def metrics_from_report(report: EvalReport) -> dict[str, float]:
    return {
        "accuracy": report.accuracy,
        "macro_precision": report.macro[0],
        "macro_recall": report.macro[1],
        "macro_f": report.macro[2],
        "micro_f": report.micro[2],
    }


def _run_pipeline(
    d_labeled: Corpus,
    d_unlabeled: Corpus,
    test: Corpus,
    ratio: tuple[int, int],
    trial_seed: int,
    config: SweepConfig,
    keep_model: bool = False,
) -> TrialResult:
    """The deterministic stages shared by fresh trials and manifest replays."""
    pool = d_unlabeled
    if config.transductive:
        pool = concat_corpora(pool, test.subset(range(test.n_docs), drop_labels=True))
    training = make_training_collection(
        d_labeled, pool, config.unlabeled_pool_size, rng_seed=trial_seed
    )
    weights = fit_term_weights(d_labeled, config.smoothing)
    x, kept_ids, dropped = embed_corpus(training, weights)
    if dropped:
        raise DataError(f"training documents with zero tokens: {dropped[:5]}")
    labels = training.label_array()
    rkm_config = dataclasses.replace(
        config.recursive,
        kmeans=dataclasses.replace(config.recursive.kmeans, rng_seed=trial_seed),
    )
    model = build_model(x, labels, kept_ids, training.class_names, rkm_config)

    test_x, test_ids, dropped = embed_corpus(test, weights)
    if dropped:
        raise DataError(f"test documents with zero tokens: {dropped[:5]}")
    preds = classify_batch(test_x, model, test_ids)
    truth = {doc.doc_id: lab for doc, lab in zip(test.documents, test.labels)}
    report = score(confusion(preds, truth, test.n_classes))
    return TrialResult(
        ratio=ratio,
        seed=trial_seed,
        report=report,
        metrics=metrics_from_report(report),
        n_clusters=model.n_clusters,
        fallback_acceptances=model.stats.fallback_total,
        orphan_count=model.stats.orphan_count,
        max_depth_reached=model.stats.max_depth_reached,
        labeled_doc_ids=tuple(d.doc_id for d in d_labeled.documents),
        model=model if keep_model else None,
    )


def run_trial(
    train: Corpus,
    test: Corpus,
    ratio: tuple[int, int],
    trial_seed: int,
    config: SweepConfig,
    keep_model: bool = False,
) -> TrialResult:
    """Mask the training half at the given ratio, then learn and score."""
    labeled_fraction = ratio[0] / (ratio[0] + ratio[1])
    d_labeled, d_unlabeled, _hidden = mask_labels(train, labeled_fraction, trial_seed)
    return _run_pipeline(d_labeled, d_unlabeled, test, ratio, trial_seed, config, keep_model)


@dataclass
class TrialRecord:
    ratio: tuple[int, int]
    trial: int
    seed: int
    metrics: dict[str, float]
    fallback_acceptances: int
    orphan_count: int
    n_clusters: int
    labeled_doc_ids: tuple[str, ...]
    error: str | None = None


@dataclass
class SweepRow:
    ratio: tuple[int, int]
    metric: str
    vmax: float
    vmin: float
    mean: float
    std: float
    n_trials: int
    fallback_acceptances: int


@dataclass
class SweepTable:
    rows: list[SweepRow]
    records: list[TrialRecord]
    train_doc_ids: tuple[str, ...]
    test_doc_ids: tuple[str, ...]
    config: SweepConfig


def aggregate_rows(records: list[TrialRecord]) -> list[SweepRow]:
    """One row per (ratio, metric): max/min/mean/std over successful trials."""
    rows: list[SweepRow] = []
    ratios: list[tuple[int, int]] = []
    for rec in records:
        if rec.ratio not in ratios:
            ratios.append(rec.ratio)
    for ratio in ratios:
        ok = [r for r in records if r.ratio == ratio and r.error is None]
        fallbacks = sum(r.fallback_acceptances for r in ok)
        for metric in SWEEP_METRICS:
            values = np.array([r.metrics[metric] for r in ok], dtype=np.float64)
            if values.size:
                stats = (values.max(), values.min(), values.mean(), values.std())
            else:
                stats = (np.nan,) * 4
            rows.append(
                SweepRow(
                    ratio=ratio,
                    metric=metric,
                    vmax=float(stats[0]),
                    vmin=float(stats[1]),
                    mean=float(stats[2]),
                    std=float(stats[3]),
                    n_trials=len(ok),
                    fallback_acceptances=fallbacks,
                )
            )
    return rows


def run_sweep(corpus: Corpus | str | Path, config: SweepConfig = SweepConfig()) -> SweepTable:
    """Run the full ratio grid; individual trial failures are recorded, not raised."""
    if not isinstance(corpus, Corpus):
        corpus = load_directory_corpus(corpus, config.tokenizer)
    train, test = split_train_test(
        corpus, SplitSpec(test_fraction=config.test_fraction, rng_seed=config.base_seed)
    )
    records: list[TrialRecord] = []
    for ratio in config.ratio_grid:
        for t in range(config.trials_per_ratio):
            seed = config.base_seed + t
            try:
                result = run_trial(train, test, ratio, seed, config)
                records.append(
                    TrialRecord(
                        ratio=ratio,
                        trial=t,
                        seed=seed,
                        metrics=result.metrics,
                        fallback_acceptances=result.fallback_acceptances,
                        orphan_count=result.orphan_count,
                        n_clusters=result.n_clusters,
                        labeled_doc_ids=result.labeled_doc_ids,
                    )
                )
            except Exception as exc:  # a failed trial is recorded, never dropped
                records.append(
                    TrialRecord(
                        ratio=ratio,
                        trial=t,
                        seed=seed,
                        metrics={},
                        fallback_acceptances=0,
                        orphan_count=0,
                        n_clusters=0,
                        labeled_doc_ids=(),
                        error=f"{type(exc).__name__}: {exc}",
                    )
                )
    return SweepTable(
        rows=aggregate_rows(records),
        records=records,
        train_doc_ids=tuple(d.doc_id for d in train.documents),
        test_doc_ids=tuple(d.doc_id for d in test.documents),
        config=config,
    )


# ---------------------------------------------------------------------------
# output files
# ---------------------------------------------------------------------------

def ratio_str(ratio: tuple[int, int]) -> str:
    return f"{ratio[0]}:{ratio[1]}"


def manifest_filename(ratio: tuple[int, int], trial: int) -> str:
    return f"ratio_{ratio[0]}_{ratio[1]}_trial_{trial:02d}.tsv"


def emit_results(table: SweepTable, out_dir: str | Path) -> dict[str, Path]:
    """Write per-trial CSV, aggregate CSV, replay manifests and the config.

    Float columns use ``repr`` so parsing them back reproduces the exact
    values.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    per_trial = out / "per_trial.csv"
    lines = ["ratio,trial,metric,value"]
    for rec in table.records:
        if rec.error is not None:
            lines.append(f"{ratio_str(rec.ratio)},{rec.trial},error,{json.dumps(rec.error)}")
            continue
        for metric in SWEEP_METRICS:
            lines.append(f"{ratio_str(rec.ratio)},{rec.trial},{metric},{rec.metrics[metric]!r}")
    per_trial.write_text("\n".join(lines) + "\n", encoding="utf-8")

    aggregate = out / "aggregate.csv"
    lines = ["ratio,metric,max,min,mean,std"]
    for row in table.rows:
        lines.append(
            f"{ratio_str(row.ratio)},{row.metric},{row.vmax!r},{row.vmin!r},{row.mean!r},{row.std!r}"
        )
    aggregate.write_text("\n".join(lines) + "\n", encoding="utf-8")

    manifest_dir = out / "manifests"
    manifest_dir.mkdir(exist_ok=True)
    for rec in table.records:
        if rec.error is not None:
            continue
        write_split_manifest(
            manifest_dir / manifest_filename(rec.ratio, rec.trial),
            table.train_doc_ids,
            table.test_doc_ids,
            rec.labeled_doc_ids,
            meta={
                "ratio": ratio_str(rec.ratio),
                "trial": str(rec.trial),
                "seed": str(rec.seed),
            },
        )

    config_path = out / "sweep_config.json"
    config_path.write_text(json.dumps(table.config.to_dict(), indent=2), encoding="utf-8")
    return {
        "per_trial": per_trial,
        "aggregate": aggregate,
        "manifests": manifest_dir,
        "config": config_path,
    }


def read_aggregate_csv(path: str | Path) -> list[SweepRow]:
    """Parse an aggregate CSV back into rows (exact float round trip)."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != "ratio,metric,max,min,mean,std":
        raise DataError(f"{path} is not an aggregate results file")
    rows = []
    for line in lines[1:]:
        if not line.strip():
            continue
        ratio_part, metric, vmax, vmin, mean, std = line.split(",")
        a, b = ratio_part.split(":")
        rows.append(
            SweepRow(
                ratio=(int(a), int(b)),
                metric=metric,
                vmax=float(vmax),
                vmin=float(vmin),
                mean=float(mean),
                std=float(std),
                n_trials=-1,  # not stored in the file
                fallback_acceptances=-1,
            )
        )
    return rows


def replay_trial(
    corpus: Corpus | str | Path,
    manifest_path: str | Path,
    config: SweepConfig,
    keep_model: bool = False,
) -> TrialResult:
    """Re-run one trial exactly from its emitted manifest.

    The manifest pins the train/test split and the labeled mask; the recorded
    seed drives every remaining stochastic stage, so the result is
    bit-identical to the original trial.
    """
    if not isinstance(corpus, Corpus):
        corpus = load_directory_corpus(corpus, config.tokenizer)
    meta, entries = read_split_manifest(manifest_path)
    for key in ("ratio", "seed"):
        if key not in meta:
            raise DataError(f"manifest {manifest_path} is missing the {key!r} header")
    a, b = meta["ratio"].split(":")
    ratio = (int(a), int(b))
    seed = int(meta["seed"])
    train, test, flags = apply_split_manifest(corpus, entries)
    d_labeled, d_unlabeled, _hidden = mask_from_flags(train, flags)
    return _run_pipeline(d_labeled, d_unlabeled, test, ratio, seed, config, keep_model)
