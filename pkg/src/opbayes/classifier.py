"""Gaussian naive Bayes over opcode feature vectors.

For a class ``c`` with prior ``P(c)`` and per-feature mean/variance
``mu_i, var_i``, the decision score of a vector ``x`` is computed in log
space as

    log P(c) + sum_i [ -0.5*log(2*pi*var_i) - (x_i - mu_i)^2 / (2*var_i) ]

which is the log of the posterior numerator; the evidence term is constant
across classes and dropped.  A sample is called malware only when its
malware score strictly exceeds the benign score, so exact ties resolve to
benign.  Log space keeps products of many near-zero densities from
underflowing without changing the argmax.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import BENIGN, LABELS, MALWARE, Dataset, OpcodeHistogram
from .errors import DimensionMismatch, EmptyClass, InvalidConfig, MissingFile, ModelFormatError
from .features import FEATURE_SCALES, FeatureList, select_features, vectorize
from .fileio import atomic_write_text

MODEL_FORMAT_VERSION = 1
DEFAULT_VARIANCE_FLOOR = 1e-9


@dataclass(frozen=True)
class ClassStats:
    """Per-class parameters: prior and per-feature mean/variance."""

    prior: float
    mu: tuple[float, ...]
    var: tuple[float, ...]


@dataclass(frozen=True)
class NBModel:
    features: FeatureList
    malware: ClassStats
    benign: ClassStats
    variance_floor: float
    feature_scale: str


def train(
    vectors: Sequence[Sequence[float]],
    labels: Sequence[str],
    features: FeatureList,
    variance_floor: float = DEFAULT_VARIANCE_FLOOR,
    feature_scale: str = "raw",
) -> NBModel:
    """Estimate class priors, means and population variances.

    Variance divides by the class sample count (the maximum-likelihood
    estimator) and is floored at ``variance_floor`` so constant features
    never produce a singular density.  Priors are the training-set class
    proportions.
    """
    if variance_floor <= 0:
        raise InvalidConfig("variance_floor must be positive")
    if feature_scale not in FEATURE_SCALES:
        raise InvalidConfig(f"feature scale must be one of {FEATURE_SCALES}")
    if len(vectors) != len(labels):
        raise DimensionMismatch("vectors and labels differ in length")
    for vector in vectors:
        if len(vector) != features.n:
            raise DimensionMismatch(f"vector of length {len(vector)} against {features.n} features")

    total = len(vectors)
    stats: dict[str, ClassStats] = {}
    for label in (MALWARE, BENIGN):
        rows = [vectors[i] for i in range(total) if labels[i] == label]
        if not rows:
            raise EmptyClass(f"no {label!r} samples in training data")
        matrix = np.asarray(rows, dtype=np.float64).reshape(len(rows), features.n)
        mu = matrix.mean(axis=0)
        var = np.maximum(matrix.var(axis=0), variance_floor)
        stats[label] = ClassStats(
            prior=len(rows) / total,
            mu=tuple(float(v) for v in mu),
            var=tuple(float(v) for v in var),
        )
    return NBModel(features, stats[MALWARE], stats[BENIGN], float(variance_floor), feature_scale)


def gaussian_log_density(x: float, mu: float, var: float) -> float:
    """Log of the normal density with mean ``mu`` and variance ``var`` at
    ``x``; finite for every finite ``x`` as long as ``var > 0``."""
    return -0.5 * math.log(2.0 * math.pi * var) - (x - mu) ** 2 / (2.0 * var)


def log_joint(model: NBModel, vector: Sequence[float], label: str) -> float:
    """Log prior plus the summed per-feature log densities for ``label``."""
    if label not in LABELS:
        raise InvalidConfig(f"label must be one of {LABELS}, got {label!r}")
    if len(vector) != model.features.n:
        raise DimensionMismatch(f"vector of length {len(vector)} against {model.features.n} features")
    stats = model.malware if label == MALWARE else model.benign
    score = math.log(stats.prior)
    for x, mu, var in zip(vector, stats.mu, stats.var):
        score += gaussian_log_density(x, mu, var)
    return score


def predict(model: NBModel, vector: Sequence[float]) -> str:
    """Malware iff the malware log score strictly exceeds the benign one."""
    return MALWARE if log_joint(model, vector, MALWARE) > log_joint(model, vector, BENIGN) else BENIGN


def featurize(model: NBModel, hist: OpcodeHistogram) -> list[float]:
    """Vectorize a histogram against the model's features and scale."""
    return vectorize(hist, model.features, model.feature_scale)


def classify(model: NBModel, hist: OpcodeHistogram) -> str:
    return predict(model, featurize(model, hist))


def train_on_dataset(
    dataset: Dataset,
    features: FeatureList,
    variance_floor: float = DEFAULT_VARIANCE_FLOOR,
    feature_scale: str = "raw",
) -> NBModel:
    vectors = [vectorize(s.histogram, features, feature_scale) for s in dataset.samples]
    labels = [s.label for s in dataset.samples]
    return train(vectors, labels, features, variance_floor, feature_scale)


def train_regular(
    dataset: Dataset,
    n_features: int,
    variance_floor: float = DEFAULT_VARIANCE_FLOOR,
    feature_scale: str = "raw",
) -> NBModel:
    """The single-model flow: select features on the whole dataset, then
    fit one classifier to it."""
    return train_on_dataset(dataset, select_features(dataset, n_features), variance_floor, feature_scale)


def model_to_dict(model: NBModel) -> dict:
    def stats_dict(stats: ClassStats) -> dict:
        return {"prior": stats.prior, "mu": list(stats.mu), "var": list(stats.var)}

    return {
        "format_version": MODEL_FORMAT_VERSION,
        "feature_scale": model.feature_scale,
        "variance_floor": model.variance_floor,
        "features": list(model.features.opcodes),
        "classes": {
            "malware": stats_dict(model.malware),
            "benign": stats_dict(model.benign),
        },
    }


def _check(condition: bool, message: str) -> None:
    if not condition:
        raise ModelFormatError(message)


def _stats_from_dict(doc, n_features: int, floor: float, where: str) -> ClassStats:
    _check(isinstance(doc, dict), f"{where}: class stats must be an object")
    prior = doc.get("prior")
    mu = doc.get("mu")
    var = doc.get("var")
    _check(isinstance(prior, (int, float)) and not isinstance(prior, bool), f"{where}: bad prior")
    _check(math.isfinite(prior) and 0.0 < prior <= 1.0, f"{where}: prior outside (0, 1]")
    for name, values in (("mu", mu), ("var", var)):
        _check(isinstance(values, list) and len(values) == n_features,
               f"{where}: {name} must list one value per feature")
        for value in values:
            _check(isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value),
                   f"{where}: {name} holds a non-finite value")
    for value in var:
        _check(value >= floor, f"{where}: variance below the floor")
    return ClassStats(float(prior), tuple(float(v) for v in mu), tuple(float(v) for v in var))


def model_from_dict(doc) -> NBModel:
    """Parse and validate a serialized model; any violation raises
    :class:`ModelFormatError`."""
    _check(isinstance(doc, dict), "model document must be an object")
    _check(doc.get("format_version") == MODEL_FORMAT_VERSION,
           f"unsupported format_version {doc.get('format_version')!r}")
    feature_scale = doc.get("feature_scale")
    _check(feature_scale in FEATURE_SCALES, f"bad feature_scale {feature_scale!r}")
    floor = doc.get("variance_floor")
    _check(isinstance(floor, (int, float)) and not isinstance(floor, bool)
           and math.isfinite(floor) and floor > 0, "variance_floor must be a positive real")
    features = doc.get("features")
    _check(isinstance(features, list) and all(isinstance(op, str) and op for op in features),
           "features must be a list of mnemonics")
    _check(len(set(features)) == len(features), "features contain duplicates")
    classes = doc.get("classes")
    _check(isinstance(classes, dict) and set(classes) == {"malware", "benign"},
           "classes must hold exactly 'malware' and 'benign'")
    malware = _stats_from_dict(classes["malware"], len(features), float(floor), "classes.malware")
    benign = _stats_from_dict(classes["benign"], len(features), float(floor), "classes.benign")
    _check(abs(malware.prior + benign.prior - 1.0) <= 1e-12, "class priors must sum to 1")
    return NBModel(FeatureList(tuple(features)), malware, benign, float(floor), feature_scale)


def save_model(model: NBModel, path: str | Path) -> None:
    atomic_write_text(path, json.dumps(model_to_dict(model), indent=2) + "\n")


def load_model(path: str | Path) -> NBModel:
    target = Path(path)
    if not target.is_file():
        raise MissingFile(str(target))
    try:
        doc = json.loads(target.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{target}: {exc.msg}") from None
    return model_from_dict(doc)
