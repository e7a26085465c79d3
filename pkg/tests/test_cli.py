import json

import pytest

from opbayes.cli import main


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """Generated corpus + extracted store + one model of each kind."""
    root = tmp_path_factory.mktemp("cli")
    assert main(["synth", "--out", str(root / "corpus"), "--groups", "3", "--per-class", "6", "--seed", "9"]) == 0
    assert main(["extract", "--manifest", str(root / "corpus" / "manifest.jsonl"), "--out", str(root / "store.jsonl")]) == 0
    assert main(["train", "--store", str(root / "store.jsonl"), "--out", str(root / "reg.json"), "--features", "8"]) == 0
    assert (
        main(
            [
                "train",
                "--store",
                str(root / "store.jsonl"),
                "--out",
                str(root / "part.json"),
                "--mode",
                "partitioned",
                "--features",
                "8",
            ]
        )
        == 0
    )
    return root


class TestUsage:
    def test_no_command_is_usage_error(self, capsys):
        assert main([]) == 1

    def test_unknown_command(self, capsys):
        assert main(["frobnicate"]) == 1

    def test_missing_required_flag(self, capsys):
        assert main(["extract", "--manifest", "x"]) == 1

    def test_bad_flag_value(self, capsys):
        assert main(["sweep", "--store", "s", "--n-values", "ten,twenty"]) == 1

    def test_help_exits_zero(self, capsys):
        assert main(["--help"]) == 0
        assert main(["train", "--help"]) == 0


class TestExitCodes:
    def test_manifest_error_is_2(self, tmp_path, capsys):
        manifest = tmp_path / "manifest.jsonl"
        (tmp_path / "x.ops").write_text("nop\n")
        record = {"id": "a", "label": "malware", "size_bytes": 1, "source": "x.ops", "source_kind": "opcode_list"}
        manifest.write_text(json.dumps(record) + "\n" + json.dumps(record) + "\n")
        code = main(["extract", "--manifest", str(manifest), "--out", str(tmp_path / "out.jsonl")])
        assert code == 2
        assert "DuplicateId" in capsys.readouterr().err

    def test_missing_file_is_3(self, tmp_path, capsys):
        code = main(["extract", "--manifest", str(tmp_path / "nope.jsonl"), "--out", str(tmp_path / "o.jsonl")])
        assert code == 3
        assert not (tmp_path / "o.jsonl").exists()

    def test_empty_class_is_4(self, tmp_path, capsys):
        store = tmp_path / "store.jsonl"
        rows = [{"id": f"m{i}", "label": "malware", "size_bytes": 5, "counts": {"jmp": 1}} for i in range(3)]
        store.write_text("".join(json.dumps(r) + "\n" for r in rows))
        assert main(["train", "--store", str(store), "--out", str(tmp_path / "m.json")]) == 4

    def test_invalid_config_is_5(self, workspace, capsys):
        code = main(
            ["train", "--store", str(workspace / "store.jsonl"), "--out", str(workspace / "x.json"), "--variance-floor", "0"]
        )
        assert code == 5
        code = main(["sweep", "--store", str(workspace / "store.jsonl"), "--test-fraction", "1.5"])
        assert code == 5

    def test_model_schema_error_is_6(self, workspace, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text('{"format_version": 1}')
        code = main(["predict", "--model", str(bad), "--store", str(workspace / "store.jsonl")])
        assert code == 6
        bad.write_text("not json at all")
        assert main(["predict", "--model", str(bad), "--store", str(workspace / "store.jsonl")]) == 6

    def test_degenerate_split_is_4(self, tmp_path, capsys):
        store = tmp_path / "store.jsonl"
        rows = [
            {"id": "m0", "label": "malware", "size_bytes": 5, "counts": {"jmp": 1}},
            {"id": "b0", "label": "benign", "size_bytes": 5, "counts": {"mov": 1}},
        ]
        store.write_text("".join(json.dumps(r) + "\n" for r in rows))
        assert main(["sweep", "--store", str(store), "--n-values", "1"]) == 4


class TestPredictOutput:
    def test_store_prediction_is_tab_separated(self, workspace, capsys):
        assert main(["predict", "--model", str(workspace / "part.json"), "--store", str(workspace / "store.jsonl")]) == 0
        out = capsys.readouterr().out
        lines = out.strip().splitlines()
        assert len(lines) == 36
        for line in lines:
            sample_id, label, routing = line.split("\t")
            assert label in ("malware", "benign")
            assert routing in ("group", "fallback")

    def test_regular_model_routing_dash(self, workspace, capsys):
        assert main(["predict", "--model", str(workspace / "reg.json"), "--store", str(workspace / "store.jsonl")]) == 0
        routing = {line.split("\t")[2] for line in capsys.readouterr().out.strip().splitlines()}
        assert routing == {"-"}

    def test_single_disassembly_file(self, workspace, tmp_path, capsys):
        disasm = tmp_path / "probe.txt"
        disasm.write_text("  1:\t55\tpush %rbp\n  2:\t90\tnop\n")
        assert main(["predict", "--model", str(workspace / "reg.json"), "--disasm", str(disasm)]) == 0
        line = capsys.readouterr().out.strip()
        assert line.startswith("probe.txt\t")

    def test_disasm_missing_file_is_3(self, workspace, tmp_path, capsys):
        assert main(["predict", "--model", str(workspace / "reg.json"), "--disasm", str(tmp_path / "gone.txt")]) == 3

    def test_size_bytes_with_store_rejected(self, workspace, capsys):
        code = main(
            ["predict", "--model", str(workspace / "reg.json"), "--store", str(workspace / "store.jsonl"), "--size-bytes", "1"]
        )
        assert code == 5


class TestEvalOutput:
    def test_report_is_json(self, workspace, capsys):
        assert main(["eval", "--model", str(workspace / "part.json"), "--store", str(workspace / "store.jsonl")]) == 0
        report = json.loads(capsys.readouterr().out)
        assert set(report) == {"TP", "TN", "FP", "FN", "total_malware", "total_benign", "accuracy_percent", "routing"}
        assert report["total_malware"] == 18

    def test_regular_report_has_no_routing(self, workspace, capsys):
        assert main(["eval", "--model", str(workspace / "reg.json"), "--store", str(workspace / "store.jsonl")]) == 0
        report = json.loads(capsys.readouterr().out)
        assert "routing" not in report


class TestStatsOutput:
    def test_csv_to_stdout(self, workspace, capsys):
        assert main(["stats", "--store", str(workspace / "store.jsonl")]) == 0
        captured = capsys.readouterr()
        assert captured.out.startswith("bin_index,bin_start_bytes,malware_count,benign_count\n")
        assert "opcode,F_benign,F_malware,D" in captured.out
        assert "samples=36" in captured.err

    def test_files_when_out_given(self, workspace, tmp_path, capsys):
        out_dir = tmp_path / "stats"
        assert main(["stats", "--store", str(workspace / "store.jsonl"), "--out", str(out_dir)]) == 0
        captured = capsys.readouterr()
        assert captured.out == ""
        assert (out_dir / "size_bins.csv").read_text().startswith("bin_index")
        assert (out_dir / "opcode_table.csv").read_text().startswith("opcode")


class TestSweepOutput:
    def test_csv_to_stdout(self, workspace, capsys):
        assert main(["sweep", "--store", str(workspace / "store.jsonl"), "--n-values", "4,8", "--methods", "regular"]) == 0
        captured = capsys.readouterr()
        lines = captured.out.splitlines()
        assert lines[0] == "method,n_features,TP,TN,FP,FN,accuracy_percent"
        assert len(lines) == 3
        assert "train_samples=" in captured.err

    def test_csv_to_file(self, workspace, tmp_path, capsys):
        target = tmp_path / "sweep.csv"
        assert main(["sweep", "--store", str(workspace / "store.jsonl"), "--n-values", "4", "--out", str(target)]) == 0
        assert target.read_text().splitlines()[0] == "method,n_features,TP,TN,FP,FN,accuracy_percent"


class TestDeterminism:
    def test_train_byte_identical(self, workspace, tmp_path, capsys):
        a = tmp_path / "a.json"
        b = tmp_path / "b.json"
        for target in (a, b):
            assert (
                main(
                    [
                        "train",
                        "--store",
                        str(workspace / "store.jsonl"),
                        "--out",
                        str(target),
                        "--mode",
                        "partitioned",
                    ]
                )
                == 0
            )
        assert a.read_bytes() == b.read_bytes()

    def test_sweep_byte_identical(self, workspace, tmp_path, capsys):
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        for target in (a, b):
            assert main(["sweep", "--store", str(workspace / "store.jsonl"), "--n-values", "4,8", "--out", str(target)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_synth_byte_identical(self, tmp_path, capsys):
        first = tmp_path / "c1"
        second = tmp_path / "c2"
        for target in (first, second):
            assert main(["synth", "--out", str(target), "--groups", "2", "--per-class", "3", "--seed", "4"]) == 0
        names = sorted(p.relative_to(first) for p in first.rglob("*") if p.is_file())
        assert names
        for name in names:
            assert (first / name).read_bytes() == (second / name).read_bytes()

    def test_inputs_not_mutated(self, workspace, tmp_path, capsys):
        store = workspace / "store.jsonl"
        before = store.read_bytes()
        assert main(["train", "--store", str(store), "--out", str(tmp_path / "m.json")]) == 0
        assert store.read_bytes() == before


class TestRemoteFlag:
    def test_unreachable_server_reports_transport_error(self, workspace, capsys):
        code = main(
            [
                "eval",
                "--server",
                "http://127.0.0.1:1",
                "--model",
                str(workspace / "reg.json"),
                "--store",
                str(workspace / "store.jsonl"),
            ]
        )
        assert code == 1
        assert "could not reach service" in capsys.readouterr().err
