import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from opbayes.corpus import (
    BENIGN,
    MALWARE,
    Dataset,
    OpcodeHistogram,
    Sample,
    corpus_stats,
    histogram,
    load_histogram_store,
    load_manifest,
    load_manifest_report,
    parse_objdump,
    parse_objdump_report,
    parse_opcode_list,
    save_histogram_store,
)
from opbayes.errors import (
    DuplicateId,
    MalformedManifest,
    MissingFile,
    UnknownLabel,
)

from .conftest import make_sample


class TestParseObjdump:
    def test_single_instruction_line(self):
        assert parse_objdump("  4004ed:\t55                   \tpush   %rbp") == ["push"]

    def test_empty_stream(self):
        assert parse_objdump("") == []

    def test_header_line_skipped(self):
        text = "Disassembly of section .text:\n  4004ed:\t55 \tpush %rbp\n  4004ee:\t90 \tnop"
        assert parse_objdump(text) == ["push", "nop"]

    def test_realistic_listing(self):
        text = (
            "\n"
            "binary:     file format elf64-x86-64\n"
            "\n"
            "Disassembly of section .text:\n"
            "\n"
            "00000000004004ed <main>:\n"
            "  4004ed:\t55                   \tpush   %rbp\n"
            "  4004ee:\t48 89 e5             \tmov    %rsp,%rbp\n"
            "  4004f1:\tb8 00 00 00 00       \tmov    $0x0,%eax\n"
            "  4004f6:\t5d                   \tpop    %rbp\n"
            "  4004f7:\tc3                   \tretq\n"
        )
        assert parse_objdump(text) == ["push", "mov", "mov", "pop", "retq"]

    def test_mnemonic_lowercased(self):
        assert parse_objdump("  1:\t90\tNOP") == ["nop"]

    def test_bad_pseudo_mnemonic_skipped_and_counted(self):
        text = "  1:\t90\tnop\n  2:\tff ff\t(bad)\n  3:\tc3\tret"
        report = parse_objdump_report(text)
        assert report.opcodes == ["nop", "ret"]
        assert report.skipped_lines == 1

    def test_continuation_line_without_mnemonic_skipped(self):
        # byte-dump continuation: no third tab field
        text = "  1:\t48 b8 00 11 22 33 44 55 \tmovabs $0x7766554433221100,%rax\n  2:\t66 77 \n"
        report = parse_objdump_report(text)
        assert report.opcodes == ["movabs"]
        assert report.skipped_lines >= 1

    def test_non_hex_address_skipped(self):
        assert parse_objdump("  zz04ed:\t55\tpush %rbp") == []

    def test_trailing_whitespace_ignored(self):
        with_ws = parse_objdump("  1:\t90\tnop   \t  ")
        without = parse_objdump("  1:\t90\tnop")
        assert with_ws == without == ["nop"]

    def test_prefix_token_kept_as_its_own_opcode(self):
        assert parse_objdump("  1:\tf0 ff 03\tlock incl (%rbx)") == ["lock"]

    def test_skipped_count_tallies_every_nonmatching_line(self):
        text = "header\n\n  1:\t90\tnop\nfooter:\n"
        report = parse_objdump_report(text)
        assert report.opcodes == ["nop"]
        assert report.skipped_lines == 3


class TestParseOpcodeList:
    def test_one_mnemonic_per_line(self):
        assert parse_opcode_list("push\nmov\n\nPUSH\n") == ["push", "mov", "push"]


class TestHistogram:
    def test_direct_count(self):
        h = histogram(["push", "mov", "push"])
        assert h.counts == {"push": 2, "mov": 1}
        assert h.total == 3

    def test_empty(self):
        h = histogram([])
        assert h.counts == {}
        assert h.total == 0

    def test_single_symbol_sequence(self):
        h = histogram(["nop"] * 5)
        assert h.counts == {"nop": 5}
        assert h.total == 5

    def test_rejects_inconsistent_total(self):
        with pytest.raises(ValueError):
            OpcodeHistogram({"push": 2}, 3)

    def test_rejects_zero_count(self):
        with pytest.raises(ValueError):
            OpcodeHistogram({"push": 0}, 0)

    @given(st.lists(st.sampled_from(["mov", "push", "nop", "jmp", "call"])))
    def test_total_equals_sequence_length(self, seq):
        h = histogram(seq)
        assert h.total == len(seq)
        assert sum(h.counts.values()) == len(seq)

    @given(st.text())
    @settings(max_examples=50)
    def test_parser_never_raises_and_counts_add_up(self, text):
        report = parse_objdump_report(text)
        assert len(report.opcodes) + report.skipped_lines == len(text.splitlines())
        for opcode in report.opcodes:
            assert opcode == opcode.lower()
            assert not any(ch.isspace() for ch in opcode)


class TestDataset:
    def test_label_counts(self, toy_dataset):
        assert toy_dataset.n_malware == 2
        assert toy_dataset.n_benign == 2

    def test_duplicate_id_rejected(self):
        a = make_sample("x", MALWARE, 10, {"nop": 1})
        b = make_sample("x", BENIGN, 20, {"nop": 2})
        with pytest.raises(DuplicateId):
            Dataset((a, b))

    def test_negative_size_rejected(self):
        with pytest.raises(ValueError):
            Sample("s", MALWARE, -1, OpcodeHistogram({}, 0))

    def test_unknown_label_rejected(self):
        with pytest.raises(ValueError):
            make_sample("s", "spyware", 1, {"nop": 1})


def _write_manifest(tmp_path, records, sources=None):
    for name, text in (sources or {}).items():
        target = tmp_path / name
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(text)
    path = tmp_path / "manifest.jsonl"
    path.write_text("".join(json.dumps(r) + "\n" for r in records))
    return path


def _record(sample_id, label, size, source, kind="opcode_list"):
    return {"id": sample_id, "label": label, "size_bytes": size, "source": source, "source_kind": kind}


class TestManifest:
    def test_counts_mirror_labels(self, tmp_path):
        path = _write_manifest(
            tmp_path,
            [
                _record("m1", "malware", 100, "m1.ops"),
                _record("m2", "malware", 200, "m2.ops"),
                _record("b1", "benign", 300, "b1.ops"),
            ],
            sources={"m1.ops": "nop\n", "m2.ops": "mov\nmov\n", "b1.ops": "push\n"},
        )
        ds = load_manifest(path)
        assert ds.n_malware == 2
        assert ds.n_benign == 1
        assert ds.samples[1].histogram.counts == {"mov": 2}

    def test_empty_manifest(self, tmp_path):
        path = _write_manifest(tmp_path, [])
        ds = load_manifest(path)
        assert ds.samples == ()

    def test_duplicate_id(self, tmp_path):
        path = _write_manifest(
            tmp_path,
            [_record("a1", "malware", 1, "x.ops"), _record("a1", "benign", 2, "x.ops")],
            sources={"x.ops": "nop\n"},
        )
        with pytest.raises(DuplicateId):
            load_manifest(path)

    def test_unknown_label(self, tmp_path):
        path = _write_manifest(tmp_path, [_record("a", "adware", 1, "x.ops")], sources={"x.ops": ""})
        with pytest.raises(UnknownLabel):
            load_manifest(path)

    def test_missing_source_file(self, tmp_path):
        path = _write_manifest(tmp_path, [_record("a", "malware", 1, "gone.ops")])
        with pytest.raises(MissingFile):
            load_manifest(path)

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(MissingFile):
            load_manifest(tmp_path / "nope.jsonl")

    def test_malformed_json_names_line(self, tmp_path):
        path = tmp_path / "manifest.jsonl"
        path.write_text('{"id": "a"}\nnot json\n')
        with pytest.raises(MalformedManifest) as err:
            load_manifest(path)
        assert "1" in str(err.value)  # first record already incomplete

    def test_bad_field_type(self, tmp_path):
        path = _write_manifest(tmp_path, [_record("a", "malware", "big", "x.ops")], sources={"x.ops": ""})
        with pytest.raises(MalformedManifest):
            load_manifest(path)

    def test_objdump_source_reports_skips(self, tmp_path):
        path = _write_manifest(
            tmp_path,
            [_record("a", "malware", 1, "a.txt", kind="objdump_text")],
            sources={"a.txt": "header\n  1:\t90\tnop\n"},
        )
        ds, skipped = load_manifest_report(path)
        assert ds.samples[0].histogram.counts == {"nop": 1}
        assert skipped == {"a": 1}

    def test_empty_disassembly_gives_empty_histogram(self, tmp_path):
        path = _write_manifest(
            tmp_path,
            [_record("a", "malware", 1, "a.txt", kind="objdump_text")],
            sources={"a.txt": ""},
        )
        ds = load_manifest(path)
        assert ds.samples[0].histogram.counts == {}


class TestHistogramStore:
    def test_round_trip_exact(self, tmp_path, toy_dataset):
        path = tmp_path / "store.jsonl"
        save_histogram_store(toy_dataset, path)
        loaded = load_histogram_store(path)
        assert loaded == toy_dataset

    def test_store_is_json_lines(self, tmp_path, toy_dataset):
        path = tmp_path / "store.jsonl"
        save_histogram_store(toy_dataset, path)
        lines = path.read_text().splitlines()
        assert len(lines) == 4
        first = json.loads(lines[0])
        assert set(first) == {"id", "label", "size_bytes", "counts"}

    def test_missing_store(self, tmp_path):
        with pytest.raises(MissingFile):
            load_histogram_store(tmp_path / "nope.jsonl")


class TestCorpusStats:
    def test_size_zero_lands_in_bin_zero(self):
        ds = Dataset((make_sample("m", MALWARE, 0, {"nop": 1}),))
        report = corpus_stats(ds, 5120)
        assert report.size_bins[0].bin_index == 0
        assert report.size_bins[0].malware_count == 1

    def test_boundary_size_lands_in_next_bin(self):
        ds = Dataset((make_sample("m", MALWARE, 5120, {"nop": 1}),))
        report = corpus_stats(ds, 5120)
        assert [row.bin_index for row in report.size_bins] == [1]

    def test_bin_totals_sum_to_dataset_size(self, toy_dataset):
        report = corpus_stats(toy_dataset, 1024)
        assert sum(r.malware_count + r.benign_count for r in report.size_bins) == 4

    def test_f_table_matches_hand_computed_means(self, toy_dataset):
        report = corpus_stats(toy_dataset, 5120)
        by_opcode = {row.opcode: row for row in report.opcode_table}
        assert by_opcode["push"].mean_benign == pytest.approx(3.0)
        assert by_opcode["push"].mean_malware == pytest.approx(1.0)
        assert by_opcode["mov"].mean_benign == pytest.approx(2.0)
        assert by_opcode["mov"].mean_malware == pytest.approx(0.0)
        assert by_opcode["jmp"].mean_malware == pytest.approx(4.0)

    def test_table_sorted_by_diff_then_opcode(self, toy_dataset):
        report = corpus_stats(toy_dataset, 5120)
        assert [row.opcode for row in report.opcode_table] == ["jmp", "mov", "push"]

    def test_csv_headers_and_precision(self, toy_dataset):
        report = corpus_stats(toy_dataset, 5120)
        bins = report.size_bins_csv().splitlines()
        table = report.opcode_table_csv().splitlines()
        assert bins[0] == "bin_index,bin_start_bytes,malware_count,benign_count"
        assert table[0] == "opcode,F_benign,F_malware,D"
        assert table[1] == "jmp,0.000000,4.000000,4.000000"

    def test_empty_dataset_yields_empty_report(self):
        report = corpus_stats(Dataset(()), 5120)
        assert report.size_bins == ()
        assert report.opcode_table == ()
