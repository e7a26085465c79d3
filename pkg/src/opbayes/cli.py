"""Command line interface.

The CLI is a thin client over the HTTP API: by default each command talks
to an in-process application instance (no server required), while
``--server URL`` sends the identical request to a running instance, in
which case file paths in arguments are resolved on the server side.
Inline prediction (``predict --disasm``) is the exception: the file is
read locally and shipped in the request body.

Exit codes:
  0  success
  1  usage or transport error
  2  malformed manifest (bad record, duplicate id, unknown label)
  3  missing input file
  4  a class or test side ended up empty
  5  invalid configuration value
  6  unreadable or mismatched model file
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import __version__

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_MANIFEST = 2
EXIT_MISSING = 3
EXIT_EMPTY = 4
EXIT_CONFIG = 5
EXIT_MODEL = 6

EXIT_BY_KIND = {
    "MalformedManifest": EXIT_MANIFEST,
    "DuplicateId": EXIT_MANIFEST,
    "UnknownLabel": EXIT_MANIFEST,
    "MissingFile": EXIT_MISSING,
    "EmptyClass": EXIT_EMPTY,
    "EmptyTestSet": EXIT_EMPTY,
    "DegenerateSplit": EXIT_EMPTY,
    "InvalidConfig": EXIT_CONFIG,
    "ModelFormatError": EXIT_MODEL,
    "DimensionMismatch": EXIT_MODEL,
}

DEFAULT_SWEEP_N = list(range(10, 201, 10))


class _Parser(argparse.ArgumentParser):
    """argparse with usage failures mapped to exit code 1."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


class ClientError(Exception):
    def __init__(self, kind: str, message: str, exit_code: int):
        super().__init__(message)
        self.kind = kind
        self.message = message
        self.exit_code = exit_code


def _asgi_request(method: str, path: str, payload):
    """Run one request against an in-process application instance."""
    import asyncio

    import httpx

    from .service.app import app

    async def go():
        transport = httpx.ASGITransport(app=app)
        async with httpx.AsyncClient(transport=transport, base_url="http://opbayes.local") as http:
            return await http.request(method, path, json=payload)

    return asyncio.run(go())


def _to_client_error(response) -> ClientError:
    try:
        detail = response.json().get("detail")
    except ValueError:
        detail = None
    if isinstance(detail, dict) and "kind" in detail:
        kind = str(detail["kind"])
        message = str(detail.get("message", ""))
    elif isinstance(detail, list):
        # request body rejected by schema validation
        kind = "InvalidConfig"
        parts = []
        for err in detail:
            loc = ".".join(str(piece) for piece in err.get("loc", []) if piece != "body")
            parts.append(f"{loc}: {err.get('msg', 'invalid value')}")
        message = "; ".join(parts) or "invalid request"
    else:
        kind = "Internal"
        message = response.text.strip()[:500] or f"HTTP {response.status_code}"
    return ClientError(kind, message, EXIT_BY_KIND.get(kind, EXIT_USAGE))


class ServiceClient:
    def __init__(self, server: str | None = None):
        self._server = server

    def get(self, path: str):
        return self._request("GET", path, None)

    def post(self, path: str, payload):
        return self._request("POST", path, payload)

    def _request(self, method: str, path: str, payload):
        import httpx

        try:
            if self._server is None:
                response = _asgi_request(method, path, payload)
            else:
                with httpx.Client(base_url=self._server, timeout=600.0) as http:
                    response = http.request(method, path, json=payload)
        except httpx.HTTPError as exc:
            raise ClientError("Unreachable", f"could not reach service: {exc}", EXIT_USAGE) from None
        if response.status_code >= 400:
            raise _to_client_error(response)
        return response.json()


def _parse_int_list(text: str) -> list[int]:
    try:
        values = [int(piece) for piece in text.split(",") if piece.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated integer list: {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _parse_methods(text: str) -> list[str]:
    methods = [piece.strip() for piece in text.split(",") if piece.strip()]
    for method in methods:
        if method not in ("regular", "partitioned"):
            raise argparse.ArgumentTypeError(f"unknown method {method!r}")
    if not methods:
        raise argparse.ArgumentTypeError("empty method list")
    return methods


def _add_config_flags(
    parser: argparse.ArgumentParser, *, with_mode: bool, with_features: bool, with_split: bool
) -> None:
    """Tuning knobs.  Defaults stay None on purpose: the service fills them
    in, so there is exactly one place that knows the default values."""
    if with_mode:
        parser.add_argument("--mode", choices=("regular", "partitioned"), help="training method")
    if with_features:
        parser.add_argument("--features", type=int, metavar="N", help="feature count (top discriminative opcodes)")
    parser.add_argument("--group-width", type=int, metavar="BYTES", help="size group width in bytes")
    parser.add_argument("--group-count", type=int, metavar="N", help="number of size groups")
    parser.add_argument("--min-group-samples", type=int, metavar="N", help="per-class minimum to train a group model")
    parser.add_argument("--variance-floor", type=float, metavar="X", help="lower bound applied to feature variances")
    parser.add_argument("--feature-scale", choices=("raw", "relative"), help="feature values: raw counts or per-file relative frequencies")
    if with_split:
        parser.add_argument("--seed", type=int, help="split shuffle seed")
        parser.add_argument("--test-fraction", type=float, metavar="F", help="fraction of each class held out for testing")


def _config_payload(args: argparse.Namespace) -> dict:
    payload = {}
    for key in (
        "mode",
        "features",
        "group_width",
        "group_count",
        "min_group_samples",
        "variance_floor",
        "feature_scale",
        "seed",
        "test_fraction",
    ):
        value = getattr(args, key, None)
        if value is not None:
            payload[key] = value
    return payload


def build_parser() -> _Parser:
    common = _Parser(add_help=False)
    common.add_argument("--server", metavar="URL", default=None, help="send requests to a running service instead of in-process")

    parser = _Parser(prog="opbayes", description="Opcode-frequency malware classification toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("extract", parents=[common], help="parse a corpus manifest into a histogram store")
    p.add_argument("--manifest", required=True, help="JSON Lines corpus manifest")
    p.add_argument("--out", required=True, help="histogram store to write (JSON Lines)")
    p.set_defaults(func=_cmd_extract)

    p = sub.add_parser("stats", parents=[common], help="descriptive statistics for a histogram store")
    p.add_argument("--store", required=True, help="histogram store (JSON Lines)")
    p.add_argument("--bin-width", type=int, metavar="BYTES", help="size bin width (default 5120)")
    p.add_argument("--out", metavar="DIR", help="write size_bins.csv and opcode_table.csv here instead of stdout")
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("train", parents=[common], help="train a classifier on a histogram store")
    p.add_argument("--store", required=True, help="histogram store (JSON Lines)")
    p.add_argument("--out", required=True, help="model file to write (JSON)")
    _add_config_flags(p, with_mode=True, with_features=True, with_split=False)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("predict", parents=[common], help="classify samples with a trained model")
    p.add_argument("--model", required=True, help="model file (either kind)")
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--store", help="histogram store to classify")
    source.add_argument("--disasm", metavar="FILE", help="a single objdump disassembly file, read locally")
    p.add_argument("--size-bytes", type=int, metavar="N", help="original binary size for --disasm (default: file size)")
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("eval", parents=[common], help="score a model against a labeled histogram store")
    p.add_argument("--model", required=True, help="model file (either kind)")
    p.add_argument("--store", required=True, help="labeled histogram store")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("sweep", parents=[common], help="accuracy vs. feature count for both methods")
    p.add_argument("--store", required=True, help="labeled histogram store, split internally")
    p.add_argument("--n-values", type=_parse_int_list, metavar="LIST", help="comma-separated feature counts (default 10..200 step 10)")
    p.add_argument("--methods", type=_parse_methods, metavar="LIST", help="comma-separated subset of regular,partitioned")
    p.add_argument("--out", metavar="FILE", help="write the CSV here instead of stdout")
    _add_config_flags(p, with_mode=False, with_features=False, with_split=True)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic labeled corpus")
    p.add_argument("--out", required=True, metavar="DIR", help="corpus directory to create")
    p.add_argument("--seed", type=int, help="generator seed (default 0)")
    p.add_argument("--groups", type=int, help="number of populated size groups (default 10)")
    p.add_argument("--per-class", type=int, help="files per class in each group (default 40)")
    p.add_argument("--group-width", type=int, metavar="BYTES", help="size group width (default 5120)")
    p.add_argument("--separation", type=float, metavar="X", help="signal strength multiplier (default 5.0)")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=_cmd_serve)

    return parser


def _cmd_extract(client: ServiceClient, args: argparse.Namespace) -> int:
    doc = client.post("/v1/extract", {"manifest": args.manifest, "out": args.out})
    print(f"wrote {doc['out']}", file=sys.stderr)
    print(
        f"samples={doc['samples']} malware={doc['malware']} benign={doc['benign']} skipped_lines={doc['skipped_lines']}",
        file=sys.stderr,
    )
    for sample_id, count in sorted(doc["skipped_by_id"].items()):
        print(f"note: {sample_id}: skipped {count} line(s)", file=sys.stderr)
    return EXIT_OK


def _cmd_stats(client: ServiceClient, args: argparse.Namespace) -> int:
    payload = {"store": args.store}
    if args.bin_width is not None:
        payload["bin_width"] = args.bin_width
    if args.out is not None:
        payload["out"] = args.out
    doc = client.post("/v1/stats", payload)
    print(
        f"samples={doc['samples']} malware={doc['malware']} benign={doc['benign']} vocabulary={doc['vocabulary']}",
        file=sys.stderr,
    )
    if args.out is None:
        sys.stdout.write(doc["size_bins_csv"])
        sys.stdout.write("\n")
        sys.stdout.write(doc["opcode_table_csv"])
    else:
        for path in doc["written"]:
            print(f"wrote {path}", file=sys.stderr)
    return EXIT_OK


def _cmd_train(client: ServiceClient, args: argparse.Namespace) -> int:
    payload = {"store": args.store, "out": args.out}
    config = _config_payload(args)
    if config:
        payload["config"] = config
    doc = client.post("/v1/train", payload)
    err = sys.stderr
    print(f"mode={doc['mode']}", file=err)
    print(f"features_requested={doc['features_requested']} features_selected={doc['features_selected']}", file=err)
    print("top_features=" + ",".join(doc["top_features"]), file=err)
    print(f"malware={doc['malware']} benign={doc['benign']}", file=err)
    if doc["groups_trained"] is not None:
        print(f"groups_trained={doc['groups_trained']} groups_populated={doc['groups_populated']}", file=err)
    print(f"wrote {doc['out']}", file=err)
    return EXIT_OK


def _cmd_predict(client: ServiceClient, args: argparse.Namespace) -> int:
    payload = {"model": args.model}
    if args.store is not None:
        if args.size_bytes is not None:
            raise ClientError("InvalidConfig", "--size-bytes only applies to --disasm", EXIT_CONFIG)
        payload["store"] = args.store
    else:
        disasm = Path(args.disasm)
        try:
            text = disasm.read_text(encoding="utf-8", errors="replace")
        except FileNotFoundError:
            raise ClientError("MissingFile", str(disasm), EXIT_MISSING) from None
        except IsADirectoryError:
            raise ClientError("MissingFile", f"{disasm} is a directory", EXIT_MISSING) from None
        size = args.size_bytes if args.size_bytes is not None else os.path.getsize(disasm)
        payload["samples"] = [{"id": disasm.name, "size_bytes": size, "disassembly": text}]
    doc = client.post("/v1/predict", payload)
    for row in doc["predictions"]:
        print(f"{row['id']}\t{row['label']}\t{row['routing']}")
    print(f"classified {len(doc['predictions'])} sample(s)", file=sys.stderr)
    return EXIT_OK


def _cmd_eval(client: ServiceClient, args: argparse.Namespace) -> int:
    doc = client.post("/v1/eval", {"model": args.model, "store": args.store})
    print(json.dumps(doc, indent=2))
    return EXIT_OK


def _cmd_sweep(client: ServiceClient, args: argparse.Namespace) -> int:
    payload = {
        "store": args.store,
        "n_values": args.n_values if args.n_values is not None else DEFAULT_SWEEP_N,
    }
    if args.methods is not None:
        payload["methods"] = args.methods
    if args.out is not None:
        payload["out"] = args.out
    config = _config_payload(args)
    if config:
        payload["config"] = config
    doc = client.post("/v1/sweep", payload)
    print(
        f"train_samples={doc['train_samples']} test_samples={doc['test_samples']} rows={doc['rows']}",
        file=sys.stderr,
    )
    if args.out is None:
        sys.stdout.write(doc["csv"])
    else:
        for path in doc["written"]:
            print(f"wrote {path}", file=sys.stderr)
    return EXIT_OK


def _cmd_synth(client: ServiceClient, args: argparse.Namespace) -> int:
    payload = {"out": args.out}
    for key in ("seed", "groups", "per_class", "group_width", "separation"):
        value = getattr(args, key)
        if value is not None:
            payload[key] = value
    doc = client.post("/v1/synth", payload)
    print(f"wrote {doc['manifest']}", file=sys.stderr)
    print(
        f"groups={doc['groups']} per_class={doc['per_class']} malware={doc['malware']} benign={doc['benign']}",
        file=sys.stderr,
    )
    return EXIT_OK


def _cmd_serve(_client: ServiceClient, args: argparse.Namespace) -> int:
    import uvicorn

    from .service.app import app

    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(args, "command", None) is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    client = ServiceClient(getattr(args, "server", None))
    try:
        return args.func(client, args)
    except ClientError as exc:
        print(f"error [{exc.kind}]: {exc.message}", file=sys.stderr)
        return exc.exit_code


def run() -> None:
    sys.exit(main())
