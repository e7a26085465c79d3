"""Request and response bodies for the HTTP API.

``RunConfig`` is the single source of truth for tunable defaults; the CLI
deliberately defaults every knob to None and lets validation here fill
the gaps.
"""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field, model_validator


class RunConfig(BaseModel):
    """Training and evaluation knobs shared by train/eval/sweep."""

    mode: Literal["regular", "partitioned"] = "regular"
    features: int = Field(default=90, ge=1)
    group_width: int = Field(default=5120, ge=1)
    group_count: int = Field(default=100, ge=1)
    min_group_samples: int = Field(default=2, ge=1)
    variance_floor: float = Field(default=1e-9, gt=0.0)
    feature_scale: Literal["raw", "relative"] = "raw"
    seed: int = 0
    test_fraction: float = Field(default=0.2, gt=0.0, lt=1.0)


class HealthResponse(BaseModel):
    status: str
    version: str


class ExtractRequest(BaseModel):
    manifest: str
    out: str


class ExtractResponse(BaseModel):
    out: str
    samples: int
    malware: int
    benign: int
    skipped_lines: int
    skipped_by_id: dict[str, int]


class StatsRequest(BaseModel):
    store: str
    bin_width: int = Field(default=5120, ge=1)
    out: Optional[str] = None


class StatsResponse(BaseModel):
    samples: int
    malware: int
    benign: int
    vocabulary: int
    size_bins_csv: str
    opcode_table_csv: str
    written: list[str]


class TrainRequest(BaseModel):
    store: str
    out: str
    config: RunConfig = RunConfig()


class TrainResponse(BaseModel):
    out: str
    mode: str
    features_requested: int
    features_selected: int
    top_features: list[str]
    malware: int
    benign: int
    groups_trained: Optional[int] = None
    groups_populated: Optional[int] = None


class InlineSample(BaseModel):
    """A sample shipped in the request body instead of read from disk.

    Exactly one of ``disassembly`` (objdump text) or ``opcodes`` (one
    mnemonic per list element) must be set.
    """

    id: str = "sample"
    size_bytes: int = Field(ge=0)
    disassembly: Optional[str] = None
    opcodes: Optional[list[str]] = None

    @model_validator(mode="after")
    def _exactly_one_source(self) -> "InlineSample":
        if (self.disassembly is None) == (self.opcodes is None):
            raise ValueError("exactly one of disassembly/opcodes must be given")
        return self


class PredictRequest(BaseModel):
    model: str
    store: Optional[str] = None
    samples: Optional[list[InlineSample]] = None

    @model_validator(mode="after")
    def _exactly_one_input(self) -> "PredictRequest":
        if (self.store is None) == (self.samples is None):
            raise ValueError("exactly one of store/samples must be given")
        return self


class Prediction(BaseModel):
    id: str
    label: str
    routing: str


class PredictResponse(BaseModel):
    predictions: list[Prediction]


class EvalRequest(BaseModel):
    model: str
    store: str


class EvalResponse(BaseModel):
    TP: int
    TN: int
    FP: int
    FN: int
    total_malware: int
    total_benign: int
    accuracy_percent: float
    routing: Optional[dict[str, int]] = None


class SweepRequest(BaseModel):
    store: str
    n_values: list[int] = Field(min_length=1)
    methods: list[Literal["regular", "partitioned"]] = ["regular", "partitioned"]
    config: RunConfig = RunConfig()
    out: Optional[str] = None


class SweepResponse(BaseModel):
    csv: str
    rows: int
    train_samples: int
    test_samples: int
    written: list[str]


class SynthRequest(BaseModel):
    out: str
    seed: int = 0
    groups: int = Field(default=10, ge=2)
    per_class: int = Field(default=40, ge=1)
    group_width: int = Field(default=5120, ge=1)
    separation: float = Field(default=5.0, ge=1.0, le=64.0)


class SynthResponse(BaseModel):
    manifest: str
    groups: int
    per_class: int
    malware: int
    benign: int
