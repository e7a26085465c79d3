"""Opcode feature selection by class-mean frequency difference.

Each opcode is scored with the absolute difference between its mean count
per benign file and its mean count per malware file; the top-n opcodes by
score become the model's feature list.
"""

from __future__ import annotations

from dataclasses import dataclass

from .corpus import BENIGN, MALWARE, Dataset, OpcodeHistogram
from .errors import EmptyClass, InvalidConfig

FEATURE_SCALES = ("raw", "relative")


@dataclass(frozen=True)
class ClassMeanTable:
    """Mean raw count per file of one class, for every opcode seen in it."""

    means: dict[str, float]
    label: str
    file_count: int


@dataclass(frozen=True)
class FeatureList:
    """Selected opcodes in rank order (no duplicates)."""

    opcodes: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(set(self.opcodes)) != len(self.opcodes):
            raise ValueError("feature list contains duplicates")

    @property
    def n(self) -> int:
        return len(self.opcodes)


def class_means(dataset: Dataset, label: str) -> ClassMeanTable:
    """Sum each opcode's counts over the files of ``label`` and divide by
    the number of those files.  Opcodes never seen in the class are absent
    (semantically zero)."""
    files = dataset.of_label(label)
    if not files:
        raise EmptyClass(f"dataset holds no {label!r} samples")
    sums: dict[str, int] = {}
    for sample in files:
        for opcode, count in sample.histogram.counts.items():
            sums[opcode] = sums.get(opcode, 0) + count
    file_count = len(files)
    return ClassMeanTable({op: total / file_count for op, total in sums.items()}, label, file_count)


def score_opcodes(benign: ClassMeanTable, malware: ClassMeanTable) -> dict[str, float]:
    """Absolute mean-count difference per opcode, over the union vocabulary
    of both classes (a mean missing from one class counts as zero)."""
    vocabulary = set(benign.means) | set(malware.means)
    return {op: abs(benign.means.get(op, 0.0) - malware.means.get(op, 0.0)) for op in vocabulary}


def select_top_n(scores: dict[str, float], n: int) -> FeatureList:
    """The ``min(n, len(scores))`` highest-scoring opcodes.

    Ordering is total and deterministic: descending score, ties broken by
    ascending mnemonic.
    """
    if n < 1:
        raise InvalidConfig("feature count must be >= 1")
    ranked = sorted(scores.items(), key=lambda item: (-item[1], item[0]))
    return FeatureList(tuple(opcode for opcode, _ in ranked[:n]))


def select_features(dataset: Dataset, n: int) -> FeatureList:
    """Full selection pipeline over a labeled dataset."""
    benign = class_means(dataset, BENIGN)
    malware = class_means(dataset, MALWARE)
    return select_top_n(score_opcodes(benign, malware), n)


def vectorize(hist: OpcodeHistogram, features: FeatureList, scale: str = "raw") -> list[float]:
    """Align a histogram to a feature list.

    ``raw`` yields the file's count of each feature opcode (0 when absent);
    ``relative`` divides by the file's total opcode count (all zeros for an
    empty file).  Opcodes outside the feature list are ignored.
    """
    if scale not in FEATURE_SCALES:
        raise InvalidConfig(f"feature scale must be one of {FEATURE_SCALES}, got {scale!r}")
    values = [float(hist.counts.get(opcode, 0)) for opcode in features.opcodes]
    if scale == "relative":
        if hist.total == 0:
            return [0.0] * len(values)
        return [v / hist.total for v in values]
    return values
