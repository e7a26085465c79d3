"""Size-partitioned classification.

The dataset is bucketed into fixed-width file-size groups (5 KB by default,
100 groups covering files below 500 KB).  Each group that has enough
samples of both classes gets its own feature list and classifier, selected
and trained on that group's samples only.  A global single model is always
trained as well and serves as the fallback for sparse groups and for
samples whose size falls outside the covered range.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .classifier import (
    DEFAULT_VARIANCE_FLOOR,
    NBModel,
    classify,
    load_model,
    model_from_dict,
    model_to_dict,
    train_regular,
)
from .corpus import MALWARE, Dataset, OpcodeHistogram, Sample
from .errors import InvalidConfig, MissingFile, ModelFormatError
from .fileio import atomic_write_text

DEFAULT_GROUP_WIDTH = 5120
DEFAULT_GROUP_COUNT = 100
DEFAULT_MIN_GROUP_SAMPLES = 2

ROUTE_GROUP = "group"
ROUTE_FALLBACK = "fallback"


def group_index(size_bytes: int, group_width: int) -> int:
    """Index of the half-open size interval ``[k*width, (k+1)*width)``."""
    if group_width <= 0:
        raise InvalidConfig("group_width must be positive")
    return size_bytes // group_width


@dataclass(frozen=True)
class PartitionedModel:
    group_width: int
    group_count: int
    min_group_samples: int
    groups: dict[int, NBModel]
    fallback: NBModel
    training_meta: dict[int, dict[str, int]]


def train_partitioned(
    dataset: Dataset,
    n_features: int,
    *,
    group_width: int = DEFAULT_GROUP_WIDTH,
    group_count: int = DEFAULT_GROUP_COUNT,
    min_group_samples: int = DEFAULT_MIN_GROUP_SAMPLES,
    variance_floor: float = DEFAULT_VARIANCE_FLOOR,
    feature_scale: str = "raw",
) -> PartitionedModel:
    """Train the fallback on the full dataset, then one model per size
    group that has at least ``min_group_samples`` samples of each class.

    Feature selection runs independently inside every group, so each group
    model carries its own feature list.  Groups below the threshold are
    omitted; prediction routes them to the fallback.
    """
    if group_width <= 0 or group_count <= 0 or min_group_samples <= 0:
        raise InvalidConfig("group_width, group_count and min_group_samples must be positive")

    fallback = train_regular(dataset, n_features, variance_floor, feature_scale)

    buckets: dict[int, list[Sample]] = {}
    for sample in dataset.samples:
        index = sample.size_bytes // group_width
        if index < group_count:
            buckets.setdefault(index, []).append(sample)

    groups: dict[int, NBModel] = {}
    training_meta: dict[int, dict[str, int]] = {}
    for index in sorted(buckets):
        members = buckets[index]
        n_malware = sum(1 for s in members if s.label == MALWARE)
        n_benign = len(members) - n_malware
        training_meta[index] = {"malware": n_malware, "benign": n_benign}
        if n_malware >= min_group_samples and n_benign >= min_group_samples:
            groups[index] = train_regular(Dataset(tuple(members)), n_features, variance_floor, feature_scale)

    return PartitionedModel(group_width, group_count, min_group_samples, groups, fallback, training_meta)


def classify_sized(model: PartitionedModel, histogram: OpcodeHistogram, size_bytes: int) -> tuple[str, str]:
    """Classify a histogram with its size group's model when one exists,
    otherwise with the fallback.  Returns ``(label, routing)`` where
    routing is ``"group"`` or ``"fallback"``."""
    index = size_bytes // model.group_width
    if index < model.group_count and index in model.groups:
        return classify(model.groups[index], histogram), ROUTE_GROUP
    return classify(model.fallback, histogram), ROUTE_FALLBACK


def predict_partitioned(model: PartitionedModel, sample: Sample) -> tuple[str, str]:
    return classify_sized(model, sample.histogram, sample.size_bytes)


def partitioned_to_dict(model: PartitionedModel) -> dict:
    return {
        "format_version": 1,
        "group_width": model.group_width,
        "group_count": model.group_count,
        "min_group_samples": model.min_group_samples,
        "fallback": model_to_dict(model.fallback),
        "groups": {str(index): model_to_dict(model.groups[index]) for index in sorted(model.groups)},
        "training_meta": {
            str(index): dict(model.training_meta[index]) for index in sorted(model.training_meta)
        },
    }


def _check(condition: bool, message: str) -> None:
    if not condition:
        raise ModelFormatError(message)


def partitioned_from_dict(doc) -> PartitionedModel:
    _check(isinstance(doc, dict), "partitioned model document must be an object")
    _check(doc.get("format_version") == 1, f"unsupported format_version {doc.get('format_version')!r}")
    group_width = doc.get("group_width")
    group_count = doc.get("group_count")
    min_group_samples = doc.get("min_group_samples")
    for name, value in (("group_width", group_width), ("group_count", group_count),
                        ("min_group_samples", min_group_samples)):
        _check(isinstance(value, int) and not isinstance(value, bool) and value > 0,
               f"{name} must be a positive integer")
    fallback = model_from_dict(doc.get("fallback"))

    raw_meta = doc.get("training_meta")
    _check(isinstance(raw_meta, dict), "training_meta must be an object")
    training_meta: dict[int, dict[str, int]] = {}
    for key, value in raw_meta.items():
        _check(isinstance(key, str) and key.isdigit(), f"bad training_meta key {key!r}")
        _check(isinstance(value, dict) and set(value) == {"malware", "benign"}
               and all(isinstance(v, int) and not isinstance(v, bool) and v >= 0 for v in value.values()),
               f"bad training_meta entry for group {key}")
        training_meta[int(key)] = {"malware": value["malware"], "benign": value["benign"]}

    raw_groups = doc.get("groups")
    _check(isinstance(raw_groups, dict), "groups must be an object")
    groups: dict[int, NBModel] = {}
    for key, value in raw_groups.items():
        _check(isinstance(key, str) and key.isdigit(), f"bad group key {key!r}")
        index = int(key)
        _check(index < group_count, f"group {index} outside the configured range")
        meta = training_meta.get(index)
        _check(meta is not None, f"group {index} has no training_meta entry")
        _check(meta["malware"] >= min_group_samples and meta["benign"] >= min_group_samples,
               f"group {index} was trained below min_group_samples")
        groups[index] = model_from_dict(value)

    return PartitionedModel(group_width, group_count, min_group_samples, groups, fallback, training_meta)


def save_partitioned(model: PartitionedModel, path: str | Path) -> None:
    atomic_write_text(path, json.dumps(partitioned_to_dict(model), indent=2) + "\n")


def load_partitioned(path: str | Path) -> PartitionedModel:
    target = Path(path)
    if not target.is_file():
        raise MissingFile(str(target))
    try:
        doc = json.loads(target.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{target}: {exc.msg}") from None
    return partitioned_from_dict(doc)


def load_any_model(path: str | Path):
    """Load a model file of either kind, telling them apart by schema."""
    target = Path(path)
    if not target.is_file():
        raise MissingFile(str(target))
    try:
        doc = json.loads(target.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{target}: {exc.msg}") from None
    if isinstance(doc, dict) and "groups" in doc:
        return partitioned_from_dict(doc)
    return model_from_dict(doc)


# re-exported for callers that only deal in file paths
load_regular = load_model
