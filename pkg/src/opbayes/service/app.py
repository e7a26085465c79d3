"""FastAPI application exposing the toolkit over HTTP.

Every path in a request body is resolved by the service process, so a
remote client operates on server-side corpora and model files; the one
exception is inline prediction, where the sample content travels in the
request itself.  Domain errors surface as JSON with a stable ``kind``
so clients can map them without parsing messages.
"""

from __future__ import annotations

import os
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..classifier import classify, save_model, train_regular
from ..corpus import (
    OpcodeHistogram,
    corpus_stats,
    load_histogram_store,
    load_manifest_report,
    parse_objdump_report,
    save_histogram_store,
)
from ..errors import OpbayesError
from ..evaluate import evaluate, split, sweep_csv, sweep_features
from ..fileio import atomic_write_text
from ..partition import (
    PartitionedModel,
    classify_sized,
    load_any_model,
    save_partitioned,
    train_partitioned,
)
from ..synth import generate_corpus
from . import schemas

_STATUS_BY_KIND = {
    "MissingFile": 404,
    "InvalidConfig": 400,
}
_DEFAULT_STATUS = 422


def create_app() -> FastAPI:
    app = FastAPI(title="opbayes", version=__version__)

    @app.exception_handler(OpbayesError)
    def _domain_error(_request: Request, exc: OpbayesError) -> JSONResponse:
        status = _STATUS_BY_KIND.get(exc.kind, _DEFAULT_STATUS)
        return JSONResponse(
            status_code=status,
            content={"detail": {"kind": exc.kind, "message": str(exc)}},
        )

    @app.get("/v1/health", response_model=schemas.HealthResponse)
    def health() -> schemas.HealthResponse:
        return schemas.HealthResponse(status="ok", version=__version__)

    @app.post("/v1/extract", response_model=schemas.ExtractResponse)
    def extract(req: schemas.ExtractRequest) -> schemas.ExtractResponse:
        dataset, skipped = load_manifest_report(req.manifest)
        save_histogram_store(dataset, req.out)
        noisy = {sid: n for sid, n in skipped.items() if n}
        return schemas.ExtractResponse(
            out=req.out,
            samples=len(dataset.samples),
            malware=dataset.n_malware,
            benign=dataset.n_benign,
            skipped_lines=sum(skipped.values()),
            skipped_by_id=noisy,
        )

    @app.post("/v1/stats", response_model=schemas.StatsResponse)
    def stats(req: schemas.StatsRequest) -> schemas.StatsResponse:
        dataset = load_histogram_store(req.store)
        report = corpus_stats(dataset, req.bin_width)
        written: list[str] = []
        if req.out is not None:
            out_dir = Path(req.out)
            os.makedirs(out_dir, exist_ok=True)
            for name, text in (
                ("size_bins.csv", report.size_bins_csv()),
                ("opcode_table.csv", report.opcode_table_csv()),
            ):
                target = out_dir / name
                atomic_write_text(target, text)
                written.append(str(target))
        return schemas.StatsResponse(
            samples=len(dataset.samples),
            malware=dataset.n_malware,
            benign=dataset.n_benign,
            vocabulary=len(report.opcode_table),
            size_bins_csv=report.size_bins_csv(),
            opcode_table_csv=report.opcode_table_csv(),
            written=written,
        )

    @app.post("/v1/train", response_model=schemas.TrainResponse)
    def train(req: schemas.TrainRequest) -> schemas.TrainResponse:
        dataset = load_histogram_store(req.store)
        cfg = req.config
        if cfg.mode == "regular":
            model = train_regular(dataset, cfg.features, cfg.variance_floor, cfg.feature_scale)
            save_model(model, req.out)
            selected = model.features
            groups_trained = groups_populated = None
        else:
            pmodel = train_partitioned(
                dataset,
                cfg.features,
                group_width=cfg.group_width,
                group_count=cfg.group_count,
                min_group_samples=cfg.min_group_samples,
                variance_floor=cfg.variance_floor,
                feature_scale=cfg.feature_scale,
            )
            save_partitioned(pmodel, req.out)
            selected = pmodel.fallback.features
            groups_trained = len(pmodel.groups)
            groups_populated = len(pmodel.training_meta)
        return schemas.TrainResponse(
            out=req.out,
            mode=cfg.mode,
            features_requested=cfg.features,
            features_selected=selected.n,
            top_features=list(selected.opcodes[:10]),
            malware=dataset.n_malware,
            benign=dataset.n_benign,
            groups_trained=groups_trained,
            groups_populated=groups_populated,
        )

    @app.post("/v1/predict", response_model=schemas.PredictResponse)
    def predict(req: schemas.PredictRequest) -> schemas.PredictResponse:
        model = load_any_model(req.model)
        rows: list[tuple[str, OpcodeHistogram, int]] = []
        if req.store is not None:
            dataset = load_histogram_store(req.store)
            rows = [(s.id, s.histogram, s.size_bytes) for s in dataset.samples]
        else:
            for inline in req.samples or []:
                if inline.disassembly is not None:
                    opcodes = parse_objdump_report(inline.disassembly).opcodes
                else:
                    opcodes = [token.lower() for token in inline.opcodes or []]
                rows.append((inline.id, OpcodeHistogram.from_opcodes(opcodes), inline.size_bytes))
        predictions = []
        for sample_id, hist, size_bytes in rows:
            if isinstance(model, PartitionedModel):
                label, routing = classify_sized(model, hist, size_bytes)
            else:
                label, routing = classify(model, hist), "-"
            predictions.append(schemas.Prediction(id=sample_id, label=label, routing=routing))
        return schemas.PredictResponse(predictions=predictions)

    @app.post("/v1/eval", response_model=schemas.EvalResponse, response_model_exclude_none=True)
    def eval_model(req: schemas.EvalRequest) -> schemas.EvalResponse:
        model = load_any_model(req.model)
        dataset = load_histogram_store(req.store)
        result = evaluate(model, dataset)
        return schemas.EvalResponse(**result.report_dict())

    @app.post("/v1/sweep", response_model=schemas.SweepResponse)
    def sweep(req: schemas.SweepRequest) -> schemas.SweepResponse:
        dataset = load_histogram_store(req.store)
        cfg = req.config
        train_side, test_side = split(dataset, cfg.test_fraction, cfg.seed)
        rows = sweep_features(
            train_side,
            test_side,
            req.n_values,
            req.methods,
            group_width=cfg.group_width,
            group_count=cfg.group_count,
            min_group_samples=cfg.min_group_samples,
            variance_floor=cfg.variance_floor,
            feature_scale=cfg.feature_scale,
        )
        csv = sweep_csv(rows)
        written: list[str] = []
        if req.out is not None:
            atomic_write_text(req.out, csv)
            written.append(req.out)
        return schemas.SweepResponse(
            csv=csv,
            rows=len(rows),
            train_samples=len(train_side.samples),
            test_samples=len(test_side.samples),
            written=written,
        )

    @app.post("/v1/synth", response_model=schemas.SynthResponse)
    def synth(req: schemas.SynthRequest) -> schemas.SynthResponse:
        summary = generate_corpus(
            req.out,
            seed=req.seed,
            groups=req.groups,
            per_class=req.per_class,
            group_width=req.group_width,
            separation=req.separation,
        )
        return schemas.SynthResponse(
            manifest=summary.manifest_path,
            groups=summary.groups,
            per_class=summary.per_class,
            malware=summary.n_malware,
            benign=summary.n_benign,
        )

    return app


app = create_app()
