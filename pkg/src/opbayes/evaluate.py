"""Train/test evaluation: confusion counting, accuracy, deterministic
stratified splits, and the accuracy-vs-feature-count sweep for both the
single-model and the size-partitioned method."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

from .classifier import DEFAULT_VARIANCE_FLOOR, NBModel, classify, train_regular
from .corpus import BENIGN, MALWARE, Dataset, Sample
from .errors import DegenerateSplit, EmptyClass, EmptyTestSet, InvalidConfig
from .partition import (
    DEFAULT_GROUP_COUNT,
    DEFAULT_GROUP_WIDTH,
    DEFAULT_MIN_GROUP_SAMPLES,
    PartitionedModel,
    ROUTE_FALLBACK,
    ROUTE_GROUP,
    predict_partitioned,
    train_partitioned,
)

METHOD_REGULAR = "regular"
METHOD_PARTITIONED = "partitioned"
METHODS = (METHOD_REGULAR, METHOD_PARTITIONED)

Predictor = NBModel | PartitionedModel | Callable[[Sample], str]


@dataclass(frozen=True)
class ConfusionCounts:
    """Hits and misses per class: tp/fn over malware, tn/fp over benign."""

    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def total_malware(self) -> int:
        return self.tp + self.fn

    @property
    def total_benign(self) -> int:
        return self.tn + self.fp


def accuracy(counts: ConfusionCounts) -> float:
    """Percentage of correctly classified samples over the whole test set."""
    total = counts.total_malware + counts.total_benign
    if total == 0:
        raise EmptyTestSet("no samples to score")
    return (counts.tp + counts.tn) / total * 100.0


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def split(dataset: Dataset, test_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Stratified train/test split, a deterministic function of the seed
    and the sorted sample ids.

    Per class, ``round(test_fraction * N)`` samples (half-up rounding) go to
    the test side.  Raises :class:`DegenerateSplit` when either side of a
    class would be empty.
    """
    if not (0.0 < test_fraction < 1.0):
        raise InvalidConfig("test_fraction must lie strictly between 0 and 1")
    rng = random.Random(seed)
    test_ids: set[str] = set()
    for label in (BENIGN, MALWARE):
        ids = sorted(s.id for s in dataset.of_label(label))
        if not ids:
            raise EmptyClass(f"dataset holds no {label!r} samples")
        take = _round_half_up(test_fraction * len(ids))
        if take == 0 or take == len(ids):
            raise DegenerateSplit(
                f"test_fraction {test_fraction} leaves an empty side for {label!r} ({len(ids)} samples)"
            )
        rng.shuffle(ids)
        test_ids.update(ids[:take])
    train_side = Dataset(tuple(s for s in dataset.samples if s.id not in test_ids))
    test_side = Dataset(tuple(s for s in dataset.samples if s.id in test_ids))
    return train_side, test_side


@dataclass(frozen=True)
class EvalResult:
    counts: ConfusionCounts
    routing: dict[str, int] | None

    @property
    def accuracy_percent(self) -> float:
        return accuracy(self.counts)

    def report_dict(self) -> dict:
        report = {
            "TP": self.counts.tp,
            "TN": self.counts.tn,
            "FP": self.counts.fp,
            "FN": self.counts.fn,
            "total_malware": self.counts.total_malware,
            "total_benign": self.counts.total_benign,
            "accuracy_percent": self.accuracy_percent,
        }
        if self.routing is not None:
            report["routing"] = dict(self.routing)
        return report


def evaluate(predictor: Predictor, test: Dataset) -> EvalResult:
    """Score every test sample and tally the confusion counts.

    ``predictor`` may be a single model, a partitioned model (whose result
    also carries group/fallback routing counts) or any callable mapping a
    sample to a label.
    """
    if not test.samples:
        raise EmptyTestSet("test dataset is empty")
    tp = tn = fp = fn = 0
    routing: dict[str, int] | None = None
    if isinstance(predictor, PartitionedModel):
        routing = {ROUTE_GROUP: 0, ROUTE_FALLBACK: 0}
    for sample in test.samples:
        if isinstance(predictor, PartitionedModel):
            predicted, route = predict_partitioned(predictor, sample)
            routing[route] += 1
        elif isinstance(predictor, NBModel):
            predicted = classify(predictor, sample.histogram)
        else:
            predicted = predictor(sample)
        if sample.label == MALWARE:
            if predicted == MALWARE:
                tp += 1
            else:
                fn += 1
        else:
            if predicted == BENIGN:
                tn += 1
            else:
                fp += 1
    return EvalResult(ConfusionCounts(tp, tn, fp, fn), routing)


@dataclass(frozen=True)
class SweepRow:
    """One (method, feature count) cell of a sweep.

    ``n_effective`` is the clamped feature count actually selected (for the
    partitioned method: by the fallback model).  A cell whose training
    failed carries the error kind instead of counts.
    """

    method: str
    n_features: int
    n_effective: int | None
    counts: ConfusionCounts | None
    accuracy_percent: float | None
    error: str | None = None


def sweep_features(
    train: Dataset,
    test: Dataset,
    n_values: Sequence[int],
    methods: Iterable[str] = METHODS,
    *,
    group_width: int = DEFAULT_GROUP_WIDTH,
    group_count: int = DEFAULT_GROUP_COUNT,
    min_group_samples: int = DEFAULT_MIN_GROUP_SAMPLES,
    variance_floor: float = DEFAULT_VARIANCE_FLOOR,
    feature_scale: str = "raw",
) -> list[SweepRow]:
    """Retrain from scratch and evaluate for every method and feature
    count.  Failed cells are recorded with their error kind rather than
    aborting the sweep.  Rows come back regular-first, ascending n."""
    from .errors import OpbayesError

    if not n_values:
        raise InvalidConfig("n_values must not be empty")
    if list(n_values) != sorted(n_values):
        raise InvalidConfig("n_values must be sorted ascending")
    if any(n < 1 for n in n_values):
        raise InvalidConfig("n_values must be positive")
    wanted = set(methods)
    unknown = wanted - set(METHODS)
    if unknown:
        raise InvalidConfig(f"unknown methods {sorted(unknown)}")

    rows: list[SweepRow] = []
    for method in METHODS:
        if method not in wanted:
            continue
        for n in n_values:
            try:
                if method == METHOD_REGULAR:
                    model = train_regular(train, n, variance_floor, feature_scale)
                    n_effective = model.features.n
                    result = evaluate(model, test)
                else:
                    pmodel = train_partitioned(
                        train,
                        n,
                        group_width=group_width,
                        group_count=group_count,
                        min_group_samples=min_group_samples,
                        variance_floor=variance_floor,
                        feature_scale=feature_scale,
                    )
                    n_effective = pmodel.fallback.features.n
                    result = evaluate(pmodel, test)
            except OpbayesError as exc:
                rows.append(SweepRow(method, n, None, None, None, error=exc.kind))
                continue
            rows.append(SweepRow(method, n, n_effective, result.counts, result.accuracy_percent))
    return rows


def sweep_csv(rows: Sequence[SweepRow]) -> str:
    """Render sweep rows as CSV.  A failed cell keeps the header shape:
    empty count columns and ``error:<Kind>`` in the accuracy column."""
    lines = ["method,n_features,TP,TN,FP,FN,accuracy_percent"]
    for row in rows:
        if row.error is not None:
            lines.append(f"{row.method},{row.n_features},,,,,error:{row.error}")
        else:
            c = row.counts
            lines.append(
                f"{row.method},{row.n_features},{c.tp},{c.tn},{c.fp},{c.fn},{row.accuracy_percent:.2f}"
            )
    return "".join(line + "\n" for line in lines)
