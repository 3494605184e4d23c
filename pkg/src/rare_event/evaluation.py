"""Metrics, modified k-fold cross-validation and nested grid search.

Every train/test split is one *task*: fit a scaler on the training rows,
scale both sides, rebalance the training rows, fit the classifier and score
the event-free test rows. Task seeds are derived from the base seeds and the
indices of the folds the task leaves out, so results do not depend on the
order in which tasks run or on how many workers run them.
"""

from __future__ import annotations

import itertools
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Iterable, Mapping, Sequence

import numpy as np
from scipy.stats import rankdata

from .classifiers import ClassifierSpec, fit
from .errors import AllFoldsSkipped, EmptyClass, KTooSmall, NoEvents
from .folds import (
    FoldSet,
    ResampleSpec,
    find_event_episodes,
    partition_folds,
    resample_indices,
    sample_blocks,
    training_view,
)
from .rng import derive_seed
from .timeseries import PatternSet, TimeSeries, fit_scaler, make_patterns

log = logging.getLogger(__name__)

REPORT_FORMAT = "rare_event.report"
REPORT_VERSION = 1


# -- metrics ---------------------------------------------------------------


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    @classmethod
    def from_labels(cls, y_true, y_pred) -> "ConfusionCounts":
        t = np.asarray(y_true).astype(bool)
        p = np.asarray(y_pred).astype(bool)
        return cls(
            tp=int((t & p).sum()),
            fp=int((~t & p).sum()),
            tn=int((~t & ~p).sum()),
            fn=int((t & ~p).sum()),
        )

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def as_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn}


def balanced_accuracy(c: ConfusionCounts) -> float:
    """Mean of sensitivity and specificity."""
    pos, neg = c.tp + c.fn, c.tn + c.fp
    if pos == 0 or neg == 0:
        raise EmptyClass("balanced accuracy needs at least one member of each class")
    return (c.tp / pos + c.tn / neg) / 2.0


def accuracy(c: ConfusionCounts) -> float:
    if c.total == 0:
        raise EmptyClass("accuracy of an empty test set")
    return (c.tp + c.tn) / c.total


METRICS: dict[str, Callable[[ConfusionCounts], float]] = {
    "balanced_accuracy": balanced_accuracy,
    "accuracy": accuracy,
}


def roc_auc(scores, labels) -> float:
    """Area under the ROC curve via the rank-sum identity (ties count one half)."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels).astype(bool)
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise EmptyClass("ROC AUC needs both classes")
    ranks = rankdata(scores)
    return float((ranks[labels].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


# -- grids -----------------------------------------------------------------


@dataclass(frozen=True)
class HyperGrid:
    """Ordered hyperparameter combinations for one family.

    Order matters: the grid search keeps the *last* combination among equal
    best scores.
    """

    family: str
    combos: tuple[Mapping[str, Any], ...]

    def __len__(self) -> int:
        return len(self.combos)

    def __iter__(self):
        return iter(self.combos)

    @classmethod
    def from_axes(cls, family: str, axes: Mapping[str, Sequence[Any]]) -> "HyperGrid":
        """Cartesian product in declaration order, last axis varying fastest."""
        keys = list(axes)
        combos = tuple(dict(zip(keys, values)) for values in itertools.product(*axes.values()))
        return cls(family, combos)

    def to_dict(self) -> dict:
        return {"family": self.family, "combos": [dict(c) for c in self.combos]}


def _powers(lo: int, hi: int) -> list[float]:
    return [float(10.0**n) for n in range(lo, hi + 1)]


def grid_preset(name: str, n_columns: int | None = None) -> HyperGrid:
    """Named grids of roughly 100 combinations each.

    ``svm`` needs ``n_columns`` for its ``1 / n_columns`` gamma entry.
    """
    if name == "svm":
        if not n_columns:
            raise ValueError("the svm grid needs n_columns")
        gammas = [1.0 / n_columns] + _powers(-6, 2)
        return HyperGrid.from_axes("svm_rbf", {"C": _powers(-6, 3), "gamma": gammas})
    if name == "gnb":
        return HyperGrid.from_axes(
            "gnb", {"var_smoothing": [float(v) for v in np.logspace(-15, 0, 100)]}
        )
    if name == "brf":
        return HyperGrid.from_axes(
            "brf",
            {
                "n_estimators": [10, 25, 50, 100, 200, 300, 400, 500, 750, 1000],
                "max_features": [2, 4, 8, 16, 32],
                "sampling_strategy": ["under", "over"],
            },
        )
    if name == "adaboost":
        return HyperGrid.from_axes(
            "adaboost",
            {
                "n_estimators": [10, 20, 30, 40, 50, 75, 100, 150, 200, 500, 1000, 2000],
                "learning_rate": _powers(-7, 0),
            },
        )
    raise KeyError(f"unknown grid preset {name!r}")


GRID_PRESETS = ("svm", "gnb", "brf", "adaboost")


# -- single split ----------------------------------------------------------


@dataclass(frozen=True)
class EvalPolicy:
    """Everything about a split evaluation except the data and classifier."""

    include_event: bool = True
    resample: str = "none"
    resample_replace: bool = True
    resample_seed: int = 0
    joint_lag_scaling: bool = False
    metric: str = "balanced_accuracy"
    threshold: float = 0.5
    with_auc: bool = False
    keep_traces: bool = False

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ValueError(f"unknown metric {self.metric!r}")
        ResampleSpec(self.resample)

    def to_dict(self) -> dict:
        return {
            "include_event": self.include_event,
            "resample": self.resample,
            "resample_replace": self.resample_replace,
            "resample_seed": self.resample_seed,
            "scaler": "minmax_joint_lags" if self.joint_lag_scaling else "minmax_per_column",
            "metric": self.metric,
            "threshold": self.threshold,
            "with_auc": self.with_auc,
        }


@dataclass(eq=False)
class SplitResult:
    key: tuple[int, ...]
    skipped: bool
    reason: str | None = None
    counts: ConfusionCounts | None = None
    score: float | None = None
    auc: float | None = None
    n_train: int = 0
    n_train_resampled: int = 0
    n_test: int = 0
    train_ticks: np.ndarray | None = field(default=None, repr=False)
    scaler_mins: np.ndarray | None = field(default=None, repr=False)
    scaler_maxs: np.ndarray | None = field(default=None, repr=False)
    trace: dict | None = field(default=None, repr=False)
    seconds: float = 0.0

    def record(self) -> dict:
        d = {
            "key": list(self.key),
            "skipped": self.skipped,
            "reason": self.reason,
            "n_train": self.n_train,
            "n_train_resampled": self.n_train_resampled,
            "n_test": self.n_test,
        }
        if not self.skipped:
            d.update(self.counts.as_dict())
            d["score"] = self.score
            if self.auc is not None:
                d["roc_auc"] = self.auc
        return d


def evaluate_split(
    patterns: PatternSet,
    train_ticks: np.ndarray,
    test_ticks: np.ndarray,
    spec: ClassifierSpec,
    policy: EvalPolicy,
    key: tuple[int, ...] = (),
) -> SplitResult:
    """Train on ``train_ticks`` and score on ``test_ticks`` (already event-free)."""
    start = time.perf_counter()
    labels = patterns.warning_labels
    if labels is None:
        raise ValueError("pattern set has no warning labels attached")
    test_rows = patterns.rows(test_ticks)
    train_rows = patterns.rows(train_ticks)
    y_test = labels[test_rows]
    n_test_pos = int(y_test.sum())
    if n_test_pos == 0 or n_test_pos == y_test.size:
        which = "no warning-labelled" if n_test_pos == 0 else "no unlabelled"
        return SplitResult(key, True, f"test fold has {which} patterns", n_test=int(y_test.size))
    if train_rows.size == 0:
        return SplitResult(key, True, "empty training set", n_test=int(y_test.size))

    X = patterns.matrix
    scaler = fit_scaler(X[train_rows], policy.joint_lag_scaling, patterns.tau + 1)
    y_train = labels[train_rows]
    res_spec = ResampleSpec(
        policy.resample, derive_seed(policy.resample_seed, *key), policy.resample_replace
    )
    if policy.resample != "none" and (y_train.min() == y_train.max()):
        return SplitResult(key, True, "training set has a single class", n_test=int(y_test.size))
    picked = train_rows[resample_indices(y_train, res_spec)]
    seeded = spec.with_seed(derive_seed(spec.seed, *key))
    model = fit(seeded, scaler.transform(X[picked]), labels[picked])
    proba = model.predict_proba(scaler.transform(X[test_rows]))
    pred = (proba >= policy.threshold).astype(np.int8)
    counts = ConfusionCounts.from_labels(y_test, pred)
    result = SplitResult(
        key,
        False,
        counts=counts,
        score=METRICS[policy.metric](counts),
        auc=roc_auc(proba, y_test) if policy.with_auc else None,
        n_train=int(train_rows.size),
        n_train_resampled=int(picked.size),
        n_test=int(y_test.size),
        train_ticks=patterns.ticks[picked],
        scaler_mins=scaler.mins,
        scaler_maxs=scaler.maxs,
    )
    if policy.keep_traces:
        result.trace = {
            "ticks": np.asarray(test_ticks).tolist(),
            "probability": proba.tolist(),
            "warning_label": y_test.astype(int).tolist(),
        }
    result.seconds = time.perf_counter() - start
    return result


# -- task execution --------------------------------------------------------

_WORKER_PATTERNS: PatternSet | None = None


def _init_worker(patterns: PatternSet):
    global _WORKER_PATTERNS
    _WORKER_PATTERNS = patterns


def _run_task(task):
    return evaluate_split(_WORKER_PATTERNS, *task)


def run_tasks(patterns: PatternSet, tasks: list, workers: int = 1) -> list[SplitResult]:
    """Evaluate ``(train, test, spec, policy, key)`` tuples, results in task order."""
    if workers <= 1 or len(tasks) <= 1:
        return [evaluate_split(patterns, *t) for t in tasks]
    with ProcessPoolExecutor(
        max_workers=workers, initializer=_init_worker, initargs=(patterns,)
    ) as pool:
        return list(pool.map(_run_task, tasks, chunksize=max(1, len(tasks) // (4 * workers))))


# -- reports ---------------------------------------------------------------


def _mean(values: Sequence[float]) -> float:
    return sum(values) / len(values)


@dataclass(eq=False)
class ExperimentReport:
    """Per-fold records plus summary; serialises to JSON lines.

    Wall-clock timings live in ``timings`` and are written separately so the
    report itself is byte-identical across reruns.
    """

    kind: str
    config: dict
    folds: list[dict]
    summary: dict
    results: list[SplitResult] = field(default_factory=list, repr=False)
    timings: dict = field(default_factory=dict, repr=False)

    @property
    def mean(self) -> float | None:
        return self.summary.get("mean_score")

    def to_jsonl(self) -> str:
        lines = [
            {
                "record": "header",
                "format": REPORT_FORMAT,
                "version": REPORT_VERSION,
                "kind": self.kind,
                "config": self.config,
            }
        ]
        lines += [{"record": "fold", **f} for f in self.folds]
        lines.append({"record": "summary", **self.summary})
        return "".join(json_line(d) for d in lines)

    @classmethod
    def from_jsonl(cls, text: str) -> "ExperimentReport":
        import json

        header, folds, summary = None, [], None
        for line in text.splitlines():
            if not line.strip():
                continue
            d = json.loads(line)
            kind = d.pop("record")
            if kind == "header":
                header = d
            elif kind == "fold":
                folds.append(d)
            elif kind == "summary":
                summary = d
        if header is None or header.get("format") != REPORT_FORMAT:
            raise ValueError("not a rare_event report")
        if header.get("version") != REPORT_VERSION:
            raise ValueError(f"unsupported report version {header.get('version')}")
        return cls(header["kind"], header["config"], folds, summary or {})


def json_line(d: dict) -> str:
    import json

    return json.dumps(_jsonable(d), sort_keys=True, allow_nan=False) + "\n"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        obj = float(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def _summarise(results: Iterable[SplitResult], metric: str) -> dict:
    results = list(results)
    scored = [r for r in results if not r.skipped]
    out = {
        "metric": metric,
        "n_folds": len(results),
        "n_scored": len(scored),
        "skipped": [{"key": list(r.key), "reason": r.reason} for r in results if r.skipped],
        "mean_score": _mean([r.score for r in scored]) if scored else None,
    }
    aucs = [r.auc for r in scored if r.auc is not None]
    if aucs:
        out["mean_roc_auc"] = _mean(aucs)
    return out


# -- cross-validation ------------------------------------------------------


def cv_tasks(foldset: FoldSet, spec: ClassifierSpec, policy: EvalPolicy, prefix=()) -> list:
    tasks = []
    for i in range(foldset.k):
        train, test = training_view(foldset, i, policy.include_event)
        tasks.append((train, test, spec, policy, (*prefix, i)))
    return tasks


def cross_validate(
    foldset: FoldSet,
    spec: ClassifierSpec,
    policy: EvalPolicy | None = None,
    workers: int = 1,
    config: dict | None = None,
) -> ExperimentReport:
    """Modified k-fold CV: train on the other folds' training views, test on
    the held-out fold with its event patterns removed.

    The score is the mean over folds whose test set holds both warning
    classes; the others are listed as skipped.
    """
    policy = policy or EvalPolicy(include_event=foldset.include_event)
    if foldset.k < 2:
        raise KTooSmall("cross-validation needs at least two folds")
    t0 = time.perf_counter()
    results = run_tasks(foldset.patterns, cv_tasks(foldset, spec, policy), workers)
    summary = _summarise(results, policy.metric)
    if summary["n_scored"] == 0:
        raise AllFoldsSkipped("every test fold lacks one of the warning classes")
    folds = []
    for r in results:
        rec = r.record()
        rec["fold"] = r.key[-1]
        folds.append(rec)
    cfg = {
        "classifier": spec.to_dict(),
        "policy": policy.to_dict(),
        "folds": {"strategy": foldset.strategy, "k": foldset.k, "notes": list(foldset.notes)},
        **(config or {}),
    }
    return ExperimentReport(
        "cv",
        cfg,
        folds,
        summary,
        results,
        {"total_seconds": time.perf_counter() - t0, "workers": workers,
         "per_fold_seconds": [r.seconds for r in results]},
    )


@dataclass(eq=False)
class OuterFoldChoice:
    fold: int
    skipped: bool
    reason: str | None
    chosen_index: int | None
    chosen: dict | None
    inner_score: float | None
    inner_scores: list[float | None]
    outer: SplitResult | None


@dataclass(eq=False)
class GridSearchResult:
    family: str
    grid: HyperGrid
    outer: list[OuterFoldChoice]
    mean_score: float
    report: ExperimentReport

    @property
    def chosen(self) -> list[dict | None]:
        return [o.chosen for o in self.outer]


def nested_grid_search(
    foldset: FoldSet,
    grid: HyperGrid,
    policy: EvalPolicy | None = None,
    seed: int = 0,
    workers: int = 1,
    config: dict | None = None,
) -> GridSearchResult:
    """Nested k-fold CV with an inner (k-1)-fold grid search per outer fold.

    For outer fold ``i`` each combination is scored by the mean over inner
    folds ``j != i`` of a model trained on the folds other than ``i`` and
    ``j``. A combination replaces the incumbent when its score is greater
    than or equal to it, so the last of several equal scores wins. The
    winner is refit on all folds but ``i`` and scored on fold ``i``.
    """
    policy = policy or EvalPolicy(include_event=foldset.include_event)
    k = foldset.k
    if k < 3:
        raise KTooSmall(f"nested CV needs k >= 3, got {k}")
    t0 = time.perf_counter()
    specs = [ClassifierSpec(grid.family, dict(c), seed) for c in grid.combos]

    outer_tests = [training_view(foldset, i, policy.include_event)[1] for i in range(k)]
    labels = foldset.patterns.warning_labels

    def two_classes(ticks) -> bool:
        y = labels[foldset.patterns.rows(ticks)]
        return 0 < int(y.sum()) < y.size

    tasks, index = [], []
    for i in range(k):
        if not two_classes(outer_tests[i]):
            continue
        for li, spec in enumerate(specs):
            for j in range(k):
                if j == i:
                    continue
                train = np.concatenate(
                    [f.view(policy.include_event) for f in foldset.folds if f.index not in (i, j)]
                )
                test = foldset.folds[j].clean_ticks
                tasks.append((train, test, spec, policy, (i, j)))
                index.append((i, li, j))
    inner_results = run_tasks(foldset.patterns, tasks, workers)

    scores: dict[tuple[int, int], list[float]] = {}
    for (i, li, j), r in zip(index, inner_results):
        if not r.skipped:
            scores.setdefault((i, li), []).append(r.score)

    choices: list[OuterFoldChoice] = []
    outer_tasks, outer_pos = [], []
    for i in range(k):
        if not two_classes(outer_tests[i]):
            choices.append(OuterFoldChoice(i, True, "test fold lacks a warning class",
                                           None, None, None, [], None))
            continue
        inner = [_mean(scores[(i, li)]) if (i, li) in scores else None for li in range(len(specs))]
        best_alpha, best_li = 0.0, None
        for li, alpha in enumerate(inner):
            if alpha is not None and alpha >= best_alpha:
                best_alpha, best_li = alpha, li
        if best_li is None:
            choices.append(OuterFoldChoice(i, True, "no inner fold could be scored",
                                           None, None, None, inner, None))
            continue
        choices.append(OuterFoldChoice(i, False, None, best_li, dict(grid.combos[best_li]),
                                       best_alpha, inner, None))
        train, test = training_view(foldset, i, policy.include_event)
        outer_tasks.append((train, test, specs[best_li], policy, (i,)))
        outer_pos.append(len(choices) - 1)

    for pos, r in zip(outer_pos, run_tasks(foldset.patterns, outer_tasks, workers)):
        choices[pos].outer = r
        if r.skipped:
            choices[pos].skipped, choices[pos].reason = True, r.reason

    scored = [c.outer.score for c in choices if not c.skipped]
    if not scored:
        raise AllFoldsSkipped("no outer fold could be scored")
    mean_score = _mean(scored)

    folds = []
    for c in choices:
        rec = {
            "fold": c.fold,
            "skipped": c.skipped,
            "reason": c.reason,
            "chosen_index": c.chosen_index,
            "chosen": c.chosen,
            "inner_score": c.inner_score,
            "inner_scores": c.inner_scores,
        }
        if c.outer is not None and not c.outer.skipped:
            rec.update({f"outer_{k_}": v for k_, v in c.outer.record().items() if k_ != "key"})
        folds.append(rec)
    summary = {
        "metric": policy.metric,
        "n_folds": k,
        "n_scored": len(scored),
        "mean_score": mean_score,
        "grid_size": len(grid),
    }
    cfg = {
        "grid": grid.to_dict(),
        "seed": seed,
        "policy": policy.to_dict(),
        "folds": {"strategy": foldset.strategy, "k": k, "notes": list(foldset.notes)},
        **(config or {}),
    }
    report = ExperimentReport(
        "gridsearch", cfg, folds, summary,
        [c.outer for c in choices if c.outer is not None],
        {"total_seconds": time.perf_counter() - t0, "workers": workers,
         "n_inner_tasks": len(tasks)},
    )
    return GridSearchResult(grid.family, grid, choices, mean_score, report)


# -- fold-strategy comparison ----------------------------------------------


@dataclass(eq=False)
class StrategyComparison:
    """Mean scores keyed by ``(family, variant, strategy)``.

    ``variant`` is ``"EI"`` (event patterns in training) or ``"EE"``;
    ``strategy`` is ``"partition"`` (whole training folds) or ``"blocks"``.
    """

    means: dict[tuple[str, str, str], float | None]
    report: ExperimentReport

    def table(self) -> list[dict]:
        rows = []
        for strategy in ("partition", "blocks"):
            for variant in ("EE", "EI"):
                row = {"strategy": strategy, "variant": variant}
                vals = []
                for (fam, v, s), m in self.means.items():
                    if v == variant and s == strategy:
                        row[fam] = m
                        if m is not None:
                            vals.append(m)
                if len(row) > 2:
                    row["average"] = _mean(vals) if vals else None
                    rows.append(row)
        return rows


def compare_fold_strategies(
    series: TimeSeries | PatternSet,
    tau: int,
    omega: int,
    beta: int,
    specs: Sequence[ClassifierSpec],
    include_event_variants: Sequence[bool] = (False, True),
    policy: EvalPolicy | None = None,
    workers: int = 1,
    config: dict | None = None,
) -> StrategyComparison:
    """Whole training folds versus event blocks sampled inside them.

    The series is cut into ``k`` chronological folds, ``k`` being the number
    of event episodes. Each held-out fold is scored twice per classifier:
    once for a model trained on all other folds, once for a model trained
    only on blocks sampled from those folds. Iterations whose test fold has
    no warning-labelled pattern are skipped.
    """
    policy = policy or EvalPolicy()
    patterns = series if isinstance(series, PatternSet) else make_patterns(series, tau, omega)
    k = len(find_event_episodes(patterns.original_labels))
    if k == 0:
        raise NoEvents("series has no event episode")
    if k < 2:
        raise KTooSmall("fold comparison needs at least two events")
    t0 = time.perf_counter()
    parts = partition_folds(patterns, k)

    tasks, meta = [], []
    notes: list[str] = []
    for vi, include in enumerate(include_event_variants):
        pol = replace(policy, include_event=include)
        variant = "EI" if include else "EE"
        for i in range(k):
            full_train, test = training_view(parts, i, include)
            allowed = np.ones(len(patterns), dtype=bool)
            allowed[patterns.rows(parts.folds[i].ticks)] = False
            try:
                blocks = sample_blocks(patterns, beta, allowed=allowed, include_event=include)
                block_train = np.concatenate([f.view(include) for f in blocks.folds])
                notes.extend(blocks.notes)
            except NoEvents:
                block_train = np.empty(0, dtype=np.int64)
            for si, spec in enumerate(specs):
                tasks.append((full_train, test, spec, pol, (i,)))
                meta.append((spec.family, si, variant, "partition", i))
                tasks.append((block_train, test, spec, pol, (i,)))
                meta.append((spec.family, si, variant, "blocks", i))
    results = run_tasks(patterns, tasks, workers)

    grouped: dict[tuple[str, str, str], list[SplitResult]] = {}
    folds = []
    for (fam, si, variant, strategy, i), r in zip(meta, results):
        label = f"{fam}#{si}" if sum(s.family == fam for s in specs) > 1 else fam
        grouped.setdefault((label, variant, strategy), []).append(r)
        folds.append({"classifier": label, "variant": variant, "strategy": strategy,
                      "fold": i, **{k_: v for k_, v in r.record().items() if k_ != "key"}})
    means = {}
    for key, rs in grouped.items():
        scored = [r.score for r in rs if not r.skipped]
        means[key] = _mean(scored) if scored else None
    summary = {
        "metric": policy.metric,
        "k": k,
        "means": [
            {"classifier": c, "variant": v, "strategy": s, "mean_score": m}
            for (c, v, s), m in means.items()
        ],
    }
    cfg = {
        "tau": tau,
        "omega": omega,
        "beta": beta,
        "classifiers": [s.to_dict() for s in specs],
        "include_event_variants": list(include_event_variants),
        "policy": policy.to_dict(),
        "block_notes": sorted(set(notes)),
        **(config or {}),
    }
    report = ExperimentReport(
        "compare-folds", cfg, folds, summary, results,
        {"total_seconds": time.perf_counter() - t0, "workers": workers},
    )
    comparison = StrategyComparison(means, report)
    report.summary["table"] = comparison.table()
    return comparison
