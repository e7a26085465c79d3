"""Synthetic corpus generator.

Builds a labeled corpus of opcode-list files whose discriminating signal
lives inside size groups but cancels out globally: in each group the two
classes swap a high-rate and a low-rate signal opcode, so pooled class
means are (in expectation) identical for every opcode.  A single global
model has nothing to latch onto while per-group models separate the
classes cleanly, which makes the corpus a controlled benchmark for the
size-partitioned method.

Output is deterministic for a given seed, byte for byte.
"""

from __future__ import annotations

import json
import math
import os
import random
from dataclasses import dataclass
from pathlib import Path

from .corpus import BENIGN, MALWARE
from .errors import InvalidConfig
from .fileio import atomic_write_text

# Background opcodes drawn at the same rate for both classes.
FILLER_PROFILE: dict[str, float] = {
    "mov": 52.0,
    "push": 31.0,
    "pop": 24.0,
    "call": 27.0,
    "ret": 14.0,
    "lea": 18.0,
    "add": 16.0,
    "sub": 12.0,
    "cmp": 19.0,
    "test": 13.0,
    "jmp": 11.0,
    "je": 10.0,
    "jne": 9.0,
    "xor": 8.0,
    "and": 6.0,
    "or": 5.0,
    "nop": 7.0,
    "shl": 4.0,
    "shr": 4.0,
    "inc": 3.0,
    "dec": 3.0,
    "neg": 2.0,
    "not": 2.0,
    "mul": 2.0,
    "div": 2.0,
    "jle": 3.0,
    "jge": 3.0,
    "ja": 2.0,
    "jb": 2.0,
    "leave": 4.0,
    "movl": 6.0,
    "movq": 9.0,
}

# One signal opcode per size group; group g pits SIGNAL_OPCODES[g] against
# SIGNAL_OPCODES[(g + 1) % groups] with the classes on opposite sides.
SIGNAL_OPCODES: tuple[str, ...] = (
    "imul",
    "movzx",
    "movsx",
    "sbb",
    "adc",
    "rol",
    "ror",
    "bt",
    "cpuid",
    "rdtsc",
    "xchg",
    "bswap",
    "setne",
    "sete",
    "cmovne",
    "cmove",
)

BASE_SIGNAL_MEAN = 8.0


def _poisson(rng: random.Random, lam: float) -> int:
    """Poisson draw by inverse-CDF multiplication (Knuth).  Kept local so
    the byte stream of generated corpora never depends on library
    internals changing between versions."""
    if lam <= 0.0:
        return 0
    threshold = math.exp(-lam)
    k = 0
    p = 1.0
    while True:
        p *= rng.random()
        if p <= threshold:
            return k
        k += 1


@dataclass(frozen=True)
class SynthSummary:
    manifest_path: str
    groups: int
    per_class: int
    n_malware: int
    n_benign: int


def generate_corpus(
    out_dir: str | Path,
    *,
    seed: int = 0,
    groups: int = 10,
    per_class: int = 40,
    group_width: int = 5120,
    separation: float = 5.0,
) -> SynthSummary:
    """Write ``manifest.jsonl`` plus ``samples/*.ops`` files under
    ``out_dir``.

    ``per_class`` is the number of files per class in each size group, so
    the corpus holds ``2 * groups * per_class`` files in total.
    ``separation`` scales the high side of each group's signal pair; at
    1.0 the signal vanishes entirely.
    """
    if groups < 2:
        raise InvalidConfig("groups must be at least 2 (the signal pairs wrap around)")
    if groups > len(SIGNAL_OPCODES):
        raise InvalidConfig(f"groups must be at most {len(SIGNAL_OPCODES)}")
    if per_class < 1:
        raise InvalidConfig("per_class must be positive")
    if group_width < 1:
        raise InvalidConfig("group_width must be positive")
    if not (1.0 <= separation <= 64.0):
        raise InvalidConfig("separation must lie in [1.0, 64.0]")

    out_dir = Path(out_dir)
    samples_dir = out_dir / "samples"
    os.makedirs(samples_dir, exist_ok=True)

    rng = random.Random(seed)
    high = BASE_SIGNAL_MEAN * separation
    low = BASE_SIGNAL_MEAN
    manifest_lines: list[str] = []
    n_malware = n_benign = 0

    for g in range(groups):
        sig_a = SIGNAL_OPCODES[g]
        sig_b = SIGNAL_OPCODES[(g + 1) % groups]
        for label in (MALWARE, BENIGN):
            # Malware runs hot on this group's own signal opcode, benign on
            # the neighbour's; summed over all groups the two class means
            # coincide opcode by opcode.
            mean_a, mean_b = (high, low) if label == MALWARE else (low, high)
            prefix = "mal" if label == MALWARE else "ben"
            for i in range(per_class):
                tokens: list[str] = []
                for opcode, mean in FILLER_PROFILE.items():
                    tokens.extend([opcode] * _poisson(rng, mean))
                tokens.extend([sig_a] * _poisson(rng, mean_a))
                tokens.extend([sig_b] * _poisson(rng, mean_b))
                rng.shuffle(tokens)
                size = rng.randrange(max(1, g * group_width), (g + 1) * group_width)
                sample_id = f"{prefix}-g{g:02d}-{i:03d}"
                rel_source = f"samples/{sample_id}.ops"
                atomic_write_text(samples_dir / f"{sample_id}.ops", "".join(t + "\n" for t in tokens))
                record = {
                    "id": sample_id,
                    "label": label,
                    "size_bytes": size,
                    "source": rel_source,
                    "source_kind": "opcode_list",
                }
                manifest_lines.append(json.dumps(record, separators=(",", ":")))
                if label == MALWARE:
                    n_malware += 1
                else:
                    n_benign += 1

    manifest_path = out_dir / "manifest.jsonl"
    atomic_write_text(manifest_path, "".join(line + "\n" for line in manifest_lines))
    return SynthSummary(
        manifest_path=str(manifest_path),
        groups=groups,
        per_class=per_class,
        n_malware=n_malware,
        n_benign=n_benign,
    )
