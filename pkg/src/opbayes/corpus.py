"""Disassembly ingestion: opcode extraction, histograms, datasets, corpus stats.

The toolkit never runs a disassembler itself.  It consumes disassembly text
(the tab-separated listing format produced by ``objdump -d``) or plain
opcode lists, and turns them into per-file opcode histograms keyed by
lowercased mnemonics.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple

from .errors import DuplicateId, MalformedManifest, MissingFile, UnknownLabel
from .fileio import atomic_write_text

MALWARE = "malware"
BENIGN = "benign"
LABELS = (MALWARE, BENIGN)

SOURCE_KINDS = ("objdump_text", "opcode_list")

# Instruction lines look like:  "  4004ed:\t55 48 89 e5 \tpush   %rbp"
_HEX_ADDR = re.compile(r"^[0-9a-fA-F]+:$")
_HEX_BYTES = re.compile(r"^[0-9a-fA-F]{2}( [0-9a-fA-F]{2})*$")


class ParseReport(NamedTuple):
    opcodes: list[str]
    skipped_lines: int


def parse_objdump_report(text: str) -> ParseReport:
    """Extract the opcode mnemonic of every instruction line in ``text``.

    An instruction line has three tab-separated fields: a hex address ending
    in ``:``, the instruction's hex byte pairs, and the mnemonic followed by
    optional operands.  The mnemonic is the first whitespace-delimited token
    of the third field, lowercased.  Everything else (section headers, blank
    lines, symbol labels, byte-only continuation lines) is skipped and
    counted, as are ``(bad)`` pseudo-instructions.  Parsing never fails.
    """
    opcodes: list[str] = []
    skipped = 0
    for line in text.splitlines():
        fields = line.split("\t", 2)
        if len(fields) != 3:
            skipped += 1
            continue
        address, raw_bytes, rest = fields
        if not _HEX_ADDR.match(address.strip()) or not _HEX_BYTES.match(raw_bytes.strip()):
            skipped += 1
            continue
        tokens = rest.split()
        if not tokens:
            skipped += 1
            continue
        mnemonic = tokens[0].lower()
        if mnemonic == "(bad)":
            skipped += 1
            continue
        opcodes.append(mnemonic)
    return ParseReport(opcodes, skipped)


def parse_objdump(text: str) -> list[str]:
    """Opcode sequence of ``text``; see :func:`parse_objdump_report`."""
    return parse_objdump_report(text).opcodes


def parse_opcode_list(text: str) -> list[str]:
    """Read the simple test format: one mnemonic per line, blanks ignored."""
    return [line.strip().lower() for line in text.splitlines() if line.strip()]


@dataclass(frozen=True)
class OpcodeHistogram:
    """Per-file opcode occurrence counts.

    Absent opcodes are implicitly zero; ``counts`` never stores a zero and
    ``total`` always equals the sum of the stored counts.
    """

    counts: dict[str, int]
    total: int

    def __post_init__(self) -> None:
        if self.total != sum(self.counts.values()):
            raise ValueError("histogram total must equal the sum of its counts")
        for opcode, count in self.counts.items():
            if not opcode or any(ch.isspace() for ch in opcode):
                raise ValueError(f"invalid opcode token {opcode!r}")
            if count <= 0:
                raise ValueError(f"non-positive count for opcode {opcode!r}")

    @classmethod
    def from_opcodes(cls, opcodes: Iterable[str]) -> "OpcodeHistogram":
        counts = Counter(opcodes)
        return cls(dict(counts), sum(counts.values()))


def histogram(opcodes: Iterable[str]) -> OpcodeHistogram:
    """Count occurrences of each opcode in a sequence."""
    return OpcodeHistogram.from_opcodes(opcodes)


@dataclass(frozen=True)
class Sample:
    """One labeled executable: its id, class label, original file size in
    bytes and opcode histogram."""

    id: str
    label: str
    size_bytes: int
    histogram: OpcodeHistogram

    def __post_init__(self) -> None:
        if self.label not in LABELS:
            raise ValueError(f"label must be one of {LABELS}, got {self.label!r}")
        if self.size_bytes < 0:
            raise ValueError("size_bytes must be non-negative")


@dataclass(frozen=True)
class Dataset:
    """Immutable collection of samples with unique ids."""

    samples: tuple[Sample, ...]

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for sample in self.samples:
            if sample.id in seen:
                raise DuplicateId(f"duplicate sample id {sample.id!r}")
            seen.add(sample.id)

    @property
    def n_malware(self) -> int:
        return sum(1 for s in self.samples if s.label == MALWARE)

    @property
    def n_benign(self) -> int:
        return sum(1 for s in self.samples if s.label == BENIGN)

    def of_label(self, label: str) -> tuple[Sample, ...]:
        return tuple(s for s in self.samples if s.label == label)


def _require_field(record: dict, name: str, expected: type, where: str):
    value = record.get(name)
    # bool is an int subclass; reject it explicitly for integer fields
    if not isinstance(value, expected) or isinstance(value, bool):
        raise MalformedManifest(f"{where}: field {name!r} missing or not {expected.__name__}")
    return value


def _iter_jsonl(path: Path):
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise MissingFile(str(path)) from None
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedManifest(f"{path}:{lineno}: {exc.msg}") from None
        if not isinstance(record, dict):
            raise MalformedManifest(f"{path}:{lineno}: record is not an object")
        yield lineno, record


def load_manifest_report(path: str | Path) -> tuple[Dataset, dict[str, int]]:
    """Load a JSON Lines manifest and materialize every sample's histogram.

    Each record names a source file (``objdump_text`` or ``opcode_list``)
    relative to the manifest's directory.  Returns the dataset plus the
    per-sample count of skipped disassembly lines.
    """
    manifest = Path(path)
    samples: list[Sample] = []
    skipped: dict[str, int] = {}
    seen: set[str] = set()
    for lineno, record in _iter_jsonl(manifest):
        where = f"{manifest}:{lineno}"
        sample_id = _require_field(record, "id", str, where)
        label = _require_field(record, "label", str, where)
        size_bytes = _require_field(record, "size_bytes", int, where)
        source = _require_field(record, "source", str, where)
        source_kind = _require_field(record, "source_kind", str, where)
        if label not in LABELS:
            raise UnknownLabel(f"{where}: unknown label {label!r}")
        if size_bytes < 0:
            raise MalformedManifest(f"{where}: size_bytes must be non-negative")
        if source_kind not in SOURCE_KINDS:
            raise MalformedManifest(f"{where}: unknown source_kind {source_kind!r}")
        if sample_id in seen:
            raise DuplicateId(f"{where}: duplicate sample id {sample_id!r}")
        seen.add(sample_id)

        source_path = Path(source)
        if not source_path.is_absolute():
            source_path = manifest.parent / source_path
        if not source_path.is_file():
            raise MissingFile(f"{source_path} (referenced at {where})")
        text = source_path.read_text(encoding="utf-8", errors="replace")
        if source_kind == "objdump_text":
            opcodes, skipped_lines = parse_objdump_report(text)
        else:
            opcodes, skipped_lines = parse_opcode_list(text), 0
        skipped[sample_id] = skipped_lines
        samples.append(Sample(sample_id, label, size_bytes, OpcodeHistogram.from_opcodes(opcodes)))
    return Dataset(tuple(samples)), skipped


def load_manifest(path: str | Path) -> Dataset:
    return load_manifest_report(path)[0]


def save_histogram_store(dataset: Dataset, path: str | Path) -> None:
    """Write the dataset as a JSON Lines histogram store (atomic, stable
    key order, sorted opcode keys, so identical datasets yield identical
    bytes)."""
    lines = []
    for sample in dataset.samples:
        record = {
            "id": sample.id,
            "label": sample.label,
            "size_bytes": sample.size_bytes,
            "counts": {op: sample.histogram.counts[op] for op in sorted(sample.histogram.counts)},
        }
        lines.append(json.dumps(record, separators=(",", ":")))
    atomic_write_text(path, "".join(line + "\n" for line in lines))


def load_histogram_store(path: str | Path) -> Dataset:
    """Load a histogram store written by :func:`save_histogram_store`."""
    store = Path(path)
    samples: list[Sample] = []
    seen: set[str] = set()
    for lineno, record in _iter_jsonl(store):
        where = f"{store}:{lineno}"
        sample_id = _require_field(record, "id", str, where)
        label = _require_field(record, "label", str, where)
        size_bytes = _require_field(record, "size_bytes", int, where)
        counts = _require_field(record, "counts", dict, where)
        if label not in LABELS:
            raise UnknownLabel(f"{where}: unknown label {label!r}")
        if size_bytes < 0:
            raise MalformedManifest(f"{where}: size_bytes must be non-negative")
        if sample_id in seen:
            raise DuplicateId(f"{where}: duplicate sample id {sample_id!r}")
        seen.add(sample_id)
        for opcode, count in counts.items():
            if not isinstance(opcode, str) or not isinstance(count, int) or isinstance(count, bool) or count <= 0:
                raise MalformedManifest(f"{where}: bad count for opcode {opcode!r}")
        try:
            hist = OpcodeHistogram(dict(counts), sum(counts.values()))
        except ValueError as exc:
            raise MalformedManifest(f"{where}: {exc}") from None
        samples.append(Sample(sample_id, label, size_bytes, hist))
    return Dataset(tuple(samples))


class SizeBinRow(NamedTuple):
    bin_index: int
    bin_start_bytes: int
    malware_count: int
    benign_count: int


class OpcodeStatRow(NamedTuple):
    opcode: str
    mean_benign: float
    mean_malware: float
    diff: float


@dataclass(frozen=True)
class StatsReport:
    """Descriptive corpus statistics: size-bin occupancy and the per-class
    mean opcode count table ranked by absolute difference."""

    size_bins: tuple[SizeBinRow, ...]
    opcode_table: tuple[OpcodeStatRow, ...]

    def size_bins_csv(self) -> str:
        lines = ["bin_index,bin_start_bytes,malware_count,benign_count"]
        for row in self.size_bins:
            lines.append(f"{row.bin_index},{row.bin_start_bytes},{row.malware_count},{row.benign_count}")
        return "".join(line + "\n" for line in lines)

    def opcode_table_csv(self) -> str:
        lines = ["opcode,F_benign,F_malware,D"]
        for row in self.opcode_table:
            lines.append(f"{row.opcode},{row.mean_benign:.6f},{row.mean_malware:.6f},{row.diff:.6f}")
        return "".join(line + "\n" for line in lines)


def corpus_stats(dataset: Dataset, bin_width: int) -> StatsReport:
    """Bin samples by file size and tabulate per-class mean opcode counts.

    Bin ``k`` covers sizes in ``[k*bin_width, (k+1)*bin_width)``.  Only
    occupied bins are reported, in ascending order.  The opcode table covers
    the whole corpus vocabulary, sorted by the absolute difference of the
    class means (descending, ties broken by mnemonic); a class with no
    samples contributes zero means.
    """
    if bin_width <= 0:
        raise ValueError("bin_width must be positive")

    bins: dict[int, list[int]] = {}
    for sample in dataset.samples:
        index = sample.size_bytes // bin_width
        counts = bins.setdefault(index, [0, 0])
        counts[0 if sample.label == MALWARE else 1] += 1
    size_bins = tuple(
        SizeBinRow(index, index * bin_width, bins[index][0], bins[index][1])
        for index in sorted(bins)
    )

    sums: dict[str, list[int]] = {}
    class_sizes = {MALWARE: 0, BENIGN: 0}
    for sample in dataset.samples:
        class_sizes[sample.label] += 1
        slot = 0 if sample.label == MALWARE else 1
        for opcode, count in sample.histogram.counts.items():
            sums.setdefault(opcode, [0, 0])[slot] += count
    rows = []
    for opcode, (malware_sum, benign_sum) in sums.items():
        mean_malware = malware_sum / class_sizes[MALWARE] if class_sizes[MALWARE] else 0.0
        mean_benign = benign_sum / class_sizes[BENIGN] if class_sizes[BENIGN] else 0.0
        rows.append(OpcodeStatRow(opcode, mean_benign, mean_malware, abs(mean_benign - mean_malware)))
    rows.sort(key=lambda row: (-row.diff, row.opcode))
    return StatsReport(size_bins, tuple(rows))
