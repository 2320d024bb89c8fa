"""Command-line interface: exit codes, JSON layouts, artifacts, determinism."""

import json
import subprocess
import sys

import pytest

from snpkit.cli import main
from snpkit.logic import classify, parse_sentence, print_sentence
from snpkit.structures import parse_structure, print_structure

from .fixtures import (
    complete_graph,
    cross_sentence,
    edge_colouring_sentence,
    micro_corpus,
    omega_micro_sentence,
    tautology_sentence,
)


@pytest.fixture(scope="module")
def files(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    corpus = micro_corpus()
    paths = {}

    def sentence_file(name, sentence):
        path = root / name
        path.write_text(print_sentence(sentence))
        paths[name] = str(path)

    sentence_file("eq11.snp", edge_colouring_sentence())
    sentence_file("cross.snp", cross_sentence())
    sentence_file("taut.snp", tautology_sentence())
    sentence_file("omega_micro.snp", omega_micro_sentence())
    for i, s in enumerate(corpus):
        sentence_file(f"m{i}.snp", s)
    k5 = root / "k5.str"
    k5.write_text(print_structure(complete_graph(5)) + "\n")
    paths["k5.str"] = str(k5)
    bad = root / "bad.snp"
    bad.write_text("sentence { bogus")
    paths["bad.snp"] = str(bad)
    paths["root"] = str(root)
    return paths


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestStatsAndSyntax:
    def test_stats_quadruple(self, files, capsys):
        code, out, _ = run(capsys, "stats", files["eq11.snp"])
        assert code == 0
        assert out == '{"ht":3,"lh":4,"wd":3,"ar":2}\n'

    def test_check_syntax_classification(self, files, capsys):
        code, out, _ = run(capsys, "check-syntax", files["eq11.snp"])
        assert code == 0
        doc = json.loads(out)
        assert doc["schema"] == "snpkit.check-syntax/1"
        assert doc["class"]["gmsnp"] and doc["class"]["connected"]
        assert not doc["class"]["monadic"]
        assert doc["stats"] == {"ht": 3, "lh": 4, "wd": 3, "ar": 2}

    def test_check_syntax_disconnected(self, files, capsys):
        code, out, _ = run(capsys, "check-syntax", files["cross.snp"])
        assert code == 0
        assert not json.loads(out)["class"]["connected"]


class TestModelcheck:
    def test_witness_printed(self, files, capsys):
        code, out, _ = run(
            capsys, "modelcheck",
            "--sentence", files["eq11.snp"], "--structure", files["k5.str"],
        )
        assert code == 0
        witness = parse_structure(out)
        assert witness.domain_size == 5
        assert len(witness.relations["E"]) == 20

    def test_json_mode_non_model(self, files, capsys):
        code, out, _ = run(
            capsys, "modelcheck", "--json",
            "--sentence", files["m0.snp"], "--structure", files["k5.str"],
        )
        assert code == 1
        doc = json.loads(out)
        assert doc["model"] is False and doc["witness"] is None


class TestContain:
    def test_identity_exit_zero(self, files, capsys):
        code, out, _ = run(
            capsys, "contain", "--phi1", files["eq11.snp"], "--phi2", files["eq11.snp"]
        )
        assert code == 0
        assert out.startswith("Contained")

    def test_not_contained_with_witness(self, files, capsys):
        code, out, _ = run(
            capsys, "contain", "--json",
            "--phi1", files["taut.snp"], "--phi2", files["m2.snp"],
        )
        assert code == 1
        doc = json.loads(out)
        assert doc["outcome"] == "NotContained"
        assert doc["method"] == "oracle-falsified"
        assert doc["witness"]["phi2_refuted"] is True

    def test_oracle_method_not_contained(self, files, capsys):
        code, out, _ = run(
            capsys, "contain", "--method", "oracle",
            "--phi1", files["m1.snp"], "--phi2", files["m0.snp"],
        )
        assert code == 1
        assert out.startswith("NotContained")

    def test_oracle_only_is_unknown_on_contained_pair(self, files, capsys):
        code, out, _ = run(
            capsys, "contain", "--method", "oracle", "--max-size", "2",
            "--phi1", files["m0.snp"], "--phi2", files["m0.snp"],
        )
        assert code == 2
        assert out.startswith("Unknown")

    def test_signature_mismatch_is_input_error(self, files, capsys):
        code, _, err = run(
            capsys, "contain", "--phi1", files["m4.snp"], "--phi2", files["m0.snp"]
        )
        assert code == 3
        assert json.loads(err)["kind"] == "input-error"


class TestArtifacts:
    def test_decompose_writes_disjuncts_and_manifest(self, files, capsys, tmp_path):
        code, out, _ = run(
            capsys, "decompose", files["cross.snp"], "--out-dir", str(tmp_path)
        )
        assert code == 0
        doc = json.loads(out)
        assert doc["disjuncts"] == 2 and len(doc["files"]) == 2
        for path in doc["files"]:
            disjunct = parse_sentence(open(path).read())
            assert classify(disjunct).connected
        rows = [json.loads(line) for line in open(doc["manifest"])]
        assert {row["disjunct"] for row in rows} == {1, 2}
        assert all("clause" in row and "component" in row for row in rows)

    def test_delta_report_and_files(self, files, capsys, tmp_path):
        code, out, _ = run(
            capsys, "delta", files["m3.snp"], "--out-dir", str(tmp_path)
        )
        assert code == 0
        doc = json.loads(out)
        assert doc["schema"] == "snpkit.delta/1"
        assert all(doc["bounds"].values())
        assert doc["rho"] == doc["counts"]["rho"]
        on_disk = json.loads(open(tmp_path / "m3.delta.json").read())
        assert on_disk == doc
        parse_sentence(open(doc["sentence_file"]).read())

    def test_delta_flags_accepted(self, files, capsys, tmp_path):
        code, out, _ = run(
            capsys, "delta", files["m0.snp"], "--out-dir", str(tmp_path),
            "--max-clause-vars", "2", "--no-subsume",
        )
        assert code == 0
        unfiltered = json.loads(out)["output_stats"]["lh"]
        code, out, _ = run(
            capsys, "delta", files["m0.snp"], "--out-dir", str(tmp_path)
        )
        assert code == 0
        assert json.loads(out)["output_stats"]["lh"] < unfiltered

    def test_delta_clause_cap_enforced(self, files, capsys, tmp_path):
        code, _, err = run(
            capsys, "delta", files["m0.snp"], "--out-dir", str(tmp_path),
            "--max-clauses", "500", "--no-subsume",
        )
        assert code == 2
        assert json.loads(err)["kind"] == "budget-exceeded"

    def test_omega_artifacts(self, files, capsys, tmp_path):
        code, out, _ = run(
            capsys, "omega", files["omega_micro.snp"], "--out-dir", str(tmp_path)
        )
        assert code == 0
        doc = json.loads(out)
        assert doc["counts"] == {
            "patterns": 11, "schemas": 24, "definitions": 64,
            "bounds": 5, "family": 11, "piece_symbols": 4, "clauses": 104,
        }
        rewritten = parse_sentence(open(doc["sentence_file"]).read())
        cls = classify(rewritten)
        assert cls.gmsnp and cls.connected

    def test_omega_prime_artifacts(self, files, capsys, tmp_path):
        code, out, _ = run(
            capsys, "omega-prime", files["omega_micro.snp"],
            "--n", "2", "--var-cap", "3", "--out-dir", str(tmp_path),
        )
        assert code == 0
        doc = json.loads(out)
        assert doc["counts"]["colours"] == 2
        assert doc["order_symbol"] == "lt"
        assert classify(parse_sentence(open(doc["sentence_file"]).read())).gmsnp


class TestColourSearches:
    def test_recolour_found_with_map(self, files, capsys, tmp_path):
        emitted = tmp_path / "map.json"
        code, out, _ = run(
            capsys, "recolour", "--phi1", files["m3.snp"], "--phi2", files["m1.snp"],
            "--emit-map", str(emitted),
        )
        assert code == 0
        doc = json.loads(out)
        assert doc["status"] == "found"
        assert doc["check"]["ok"] is True
        assert doc["map"] and all("source_key" in pair for pair in doc["map"])
        assert json.loads(emitted.read_text()) == doc["map"]

    def test_recolour_naive_check_agrees(self, files, capsys):
        code, out, _ = run(
            capsys, "recolour", "--naive-iii",
            "--phi1", files["m3.snp"], "--phi2", files["m1.snp"],
        )
        assert code == 0
        assert json.loads(out)["check"]["ok"] is True

    def test_recolour_absent(self, files, capsys):
        code, out, _ = run(
            capsys, "recolour", "--phi1", files["m1.snp"], "--phi2", files["m0.snp"]
        )
        assert code == 1
        doc = json.loads(out)
        assert doc["status"] == "absent" and doc["map"] is None

    def test_grecolour_identity(self, files, capsys):
        code, out, _ = run(
            capsys, "grecolour",
            "--phi1", files["omega_micro.snp"], "--phi2", files["omega_micro.snp"],
        )
        assert code == 0
        doc = json.loads(out)
        assert doc["status"] == "found" and doc["identity"] is True

    def test_grecolour_absent(self, files, capsys):
        code, out, _ = run(
            capsys, "grecolour", "--phi1", files["m5.snp"], "--phi2", files["m0.snp"]
        )
        assert code == 1
        assert json.loads(out)["status"] == "absent"


class TestFalsify:
    def test_found_prints_structure(self, files, capsys):
        code, out, _ = run(
            capsys, "falsify", "--phi1", files["m1.snp"], "--phi2", files["m0.snp"],
            "--max-size", "3",
        )
        assert code == 1
        cex = parse_structure(out)
        assert cex.relations["E"]

    def test_exhausted_sweep_stays_unknown(self, files, capsys):
        code, out, _ = run(
            capsys, "falsify", "--phi1", files["m0.snp"], "--phi2", files["m0.snp"],
            "--max-size", "2", "--json",
        )
        assert code == 2
        assert json.loads(out)["counterexample"] is None


class TestErrorsAndModes:
    def test_missing_file(self, files, capsys):
        code, _, err = run(capsys, "stats", files["root"] + "/absent.snp")
        assert code == 66
        doc = json.loads(err)
        assert doc["code"] == 66 and doc["schema"] == "snpkit.error/1"

    def test_parse_error(self, files, capsys):
        code, _, err = run(capsys, "stats", files["bad.snp"])
        assert code == 65
        assert json.loads(err)["kind"] == "parse-error"

    def test_unknown_flag(self, files, capsys):
        code, _, err = run(capsys, "stats", "--bogus", files["eq11.snp"])
        assert code == 64
        assert json.loads(err)["kind"] == "usage"

    def test_unknown_subcommand(self, capsys):
        code, _, err = run(capsys, "frobnicate")
        assert code == 64
        assert json.loads(err)["code"] == 64

    def test_budget_flag_exceeded(self, files, capsys, tmp_path):
        code, _, err = run(
            capsys, "delta", files["m0.snp"], "--budget", "10",
            "--out-dir", str(tmp_path),
        )
        assert code == 2
        assert json.loads(err)["kind"] == "budget-exceeded"

    def test_budget_env_override(self, files, capsys, tmp_path, monkeypatch):
        monkeypatch.setenv("SNPKIT_BUDGET", "10")
        code, _, err = run(
            capsys, "delta", files["m0.snp"], "--out-dir", str(tmp_path)
        )
        assert code == 2
        assert json.loads(err)["kind"] == "budget-exceeded"

    def test_paper_scale_warns(self, files, capsys):
        code, _, err = run(
            capsys, "falsify", "--paper-scale", "--max-size", "2",
            "--phi1", files["m0.snp"], "--phi2", files["m0.snp"],
        )
        assert code == 2
        assert "paper-scale" in err

    def test_jobs_must_be_positive(self, files, capsys):
        code, _, err = run(capsys, "stats", "--jobs", "0", files["eq11.snp"])
        assert code == 64

    def test_determinism_byte_identical(self, files, capsys):
        runs = []
        for _ in range(2):
            argv = [
                "contain", "--json", "--jobs", "1",
                "--phi1", files["m3.snp"], "--phi2", files["m1.snp"],
            ]
            code = main(argv)
            runs.append((code, capsys.readouterr().out))
        assert runs[0] == runs[1]
        first = [main(["check-syntax", files["eq11.snp"]]), capsys.readouterr().out]
        second = [main(["check-syntax", files["eq11.snp"]]), capsys.readouterr().out]
        assert first == second

    def test_module_entry_point(self, files):
        proc = subprocess.run(
            [sys.executable, "-m", "snpkit", "stats", files["eq11.snp"]],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0
        assert proc.stdout == '{"ht":3,"lh":4,"wd":3,"ar":2}\n'
