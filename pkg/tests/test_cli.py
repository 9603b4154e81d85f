import json
import random

import pytest

from asctk.cli import main
from asctk.corpus import SnippetRecord, TokenRecord, load_corpus, save_corpus

from conftest import gen_snippet, make_snippet_record, subword_tokens


def write_corpus(tmp_path, records, name="corpus.jsonl"):
    path = tmp_path / name
    save_corpus(records, path)
    return path


def small_corpus(n=3, seed=11, ntp_of=None):
    rng = random.Random(seed)
    records = []
    for i in range(n):
        source = gen_snippet(rng)
        tokens = subword_tokens(source, rng, ntp_of=ntp_of)
        records.append(SnippetRecord(id=f"s{i}", source=source, tokens=tokens))
    return records


class TestFeatures:
    def test_enriches_all_records(self, tmp_path):
        inp = write_corpus(tmp_path, small_corpus())
        out = tmp_path / "out"
        assert main(["features", "--input", str(inp), "--output", str(out)]) == 0
        enriched = load_corpus(out / "corpus.jsonl")
        assert len(enriched) == 3
        for snippet in enriched:
            assert snippet.features is not None
            assert snippet.loss is not None
            assert snippet.features.cyclomatic >= 1

    def test_idempotent_re_run(self, tmp_path):
        inp = write_corpus(tmp_path, small_corpus())
        out1, out2 = tmp_path / "o1", tmp_path / "o2"
        main(["features", "--input", str(inp), "--output", str(out1)])
        main(["features", "--input", str(out1 / "corpus.jsonl"), "--output", str(out2)])
        assert (out1 / "corpus.jsonl").read_bytes() == (out2 / "corpus.jsonl").read_bytes()

    def test_invalid_record_exits_nonzero_naming_id(self, tmp_path, capsys):
        path = tmp_path / "bad.jsonl"
        rec = {"id": "badid", "source": "x", "tokens":
               [{"text": "y", "start_byte": 0, "end_byte": 1, "ntp": 0.5}]}
        path.write_text(json.dumps(rec) + "\n")
        code = main(["features", "--input", str(path), "--output", str(tmp_path / "o")])
        captured = capsys.readouterr()
        assert code == 1
        assert "badid" in captured.err + captured.out


class TestEval:
    def test_all_ones_corpus_flags_confident(self, tmp_path):
        inp = write_corpus(tmp_path, small_corpus(ntp_of=lambda _: 1.0))
        out = tmp_path / "out"
        code = main(["eval", "--input", str(inp), "--output", str(out),
                     "--seed", "7", "--resamples", "50", "--workers", "1"])
        assert code == 0
        report = json.loads((out / "eval.json").read_text())
        for entry in report["entries"]:
            assert entry["score"] == 1.0
            assert entry["flag"] == "confident"
        assert report["config"]["seed"] == 7
        assert report["config"]["grammar_version"]

    def test_seed_required(self, tmp_path, capsys):
        inp = write_corpus(tmp_path, small_corpus())
        code = main(["eval", "--input", str(inp), "--output", str(tmp_path / "o")])
        assert code == 1
        assert "seed" in capsys.readouterr().err

    def test_two_runs_identical(self, tmp_path):
        inp = write_corpus(tmp_path, small_corpus())
        out1, out2 = tmp_path / "o1", tmp_path / "o2"
        args = ["--seed", "3", "--resamples", "40", "--workers", "1"]
        main(["eval", "--input", str(inp), "--output", str(out1), *args])
        main(["eval", "--input", str(inp), "--output", str(out2), *args])
        r1 = json.loads((out1 / "eval.json").read_text())
        r2 = json.loads((out2 / "eval.json").read_text())
        r1["config"].pop("output"), r2["config"].pop("output")
        assert r1 == r2
        assert (out1 / "eval.csv").read_bytes() == (out2 / "eval.csv").read_bytes()

    def test_empty_corpus_errors(self, tmp_path, capsys):
        path = tmp_path / "empty.jsonl"
        path.write_text("")
        code = main(["eval", "--input", str(path), "--output", str(tmp_path / "o"),
                     "--seed", "1"])
        assert code == 1
        assert "empty" in capsys.readouterr().err


class TestCausal:
    def test_default_treatments_table(self, tmp_path):
        inp = write_corpus(tmp_path, small_corpus(n=25, seed=5))
        out = tmp_path / "out"
        code = main(["causal", "--input", str(inp), "--output", str(out)])
        assert code == 0
        table = json.loads((out / "causal.json").read_text())
        names = [r["treatment"] for r in table["results"]]
        assert "identifier" in names
        row = next(r for r in table["results"] if r["treatment"] == "identifier")
        assert set(row["confounder_correlations"]) == {
            "sequence_size", "n_ast_nodes", "ast_levels", "cyclomatic"}
        csv_lines = (out / "causal.csv").read_text().splitlines()
        assert csv_lines[0].startswith("treatment,pearson_rho,ate,n,dropped")
        assert len(csv_lines) == len(table["results"]) + 1

    def test_constant_loss_warns_without_crash(self, tmp_path):
        records = small_corpus(n=20, seed=6)
        for r in records:
            r.loss = 2.0
        inp = write_corpus(tmp_path, records)
        out = tmp_path / "out"
        code = main(["causal", "--input", str(inp), "--output", str(out),
                     "--treatments", "identifier"])
        assert code == 0
        table = json.loads((out / "causal.json").read_text())
        assert any("zero variance" in w for w in table["warnings"])


class TestViz:
    def test_files_and_manifest(self, tmp_path):
        inp = write_corpus(tmp_path, small_corpus(n=2, seed=8))
        out = tmp_path / "viz"
        code = main(["viz", "--input", str(inp), "--output", str(out),
                     "--render", "partial,complete"])
        assert code == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert len(manifest["outputs"]) == 4
        for name in ["s0.partial.dot", "s0.complete.dot",
                     "s1.partial.dot", "s1.complete.dot"]:
            assert (out / name).exists()
            assert name in manifest["outputs"]

    def test_error_snippet_gets_error_styling(self, tmp_path):
        source = "def f(:"
        rec = SnippetRecord(id="broken", source=source,
                            tokens=[TokenRecord("def f(:", 0, 7, 0.3)])
        inp = write_corpus(tmp_path, [rec])
        out = tmp_path / "viz"
        code = main(["viz", "--input", str(inp), "--output", str(out),
                     "--render", "complete"])
        assert code == 0
        dot = (out / "broken.complete.dot").read_text()
        assert "ERROR" in dot and "penwidth" in dot

    def test_dump_alignment_flag(self, tmp_path):
        inp = write_corpus(tmp_path, small_corpus(n=1, seed=10))
        out = tmp_path / "viz"
        code = main(["viz", "--input", str(inp), "--output", str(out),
                     "--render", "partial", "--dump-alignment"])
        assert code == 0
        dump = json.loads((out / "s0.alignment.json").read_text())
        assert "0" in dump  # root node id
        assert all(isinstance(v, list) for v in dump.values())

    def test_rerun_byte_identical(self, tmp_path):
        inp = write_corpus(tmp_path, small_corpus(n=2, seed=9))
        out1, out2 = tmp_path / "v1", tmp_path / "v2"
        args = ["--render", "partial,sequence", "--format", "svg"]
        main(["viz", "--input", str(inp), "--output", str(out1), *args])
        main(["viz", "--input", str(inp), "--output", str(out2), *args])
        for f in sorted(out1.iterdir()):
            if f.name == "manifest.json":  # config echo carries the out path
                m1 = json.loads(f.read_text())
                m2 = json.loads((out2 / f.name).read_text())
                m1["config"].pop("output"), m2["config"].pop("output")
                assert m1 == m2
                continue
            assert f.read_bytes() == (out2 / f.name).read_bytes(), f.name


class TestTaxonomyAndValidate:
    def test_taxonomy_export_and_env_override(self, tmp_path, monkeypatch):
        out = tmp_path / "tax.json"
        assert main(["taxonomy", "export", "--output", str(out)]) == 0
        obj = json.loads(out.read_text())
        assert obj["mapping"]["for_statement"] == "Iteration"
        # exported file loads back through $ASC_TAXONOMY
        monkeypatch.setenv("ASC_TAXONOMY", str(out))
        inp = write_corpus(tmp_path, small_corpus(n=1))
        code = main(["eval", "--input", str(inp), "--output", str(tmp_path / "o"),
                     "--seed", "1", "--resamples", "10", "--workers", "1"])
        assert code == 0
        report = json.loads((tmp_path / "o" / "eval.json").read_text())
        assert report["taxonomy_version"] == "default-1"

    def test_validate_ok_and_bad(self, tmp_path, capsys):
        inp = write_corpus(tmp_path, small_corpus(n=2))
        assert main(["validate", "--input", str(inp)]) == 0
        bad = tmp_path / "bad.jsonl"
        bad.write_text('{"id": "x", "source": "a", "tokens": '
                       '[{"text": "b", "start_byte": 0, "end_byte": 1, "ntp": 2.0}]}\n')
        assert main(["validate", "--input", str(bad)]) == 1
        err = capsys.readouterr().err
        assert "x" in err


def test_pipeline_composition_numbers_agree(tmp_path):
    # features -> eval -> causal reuse identical parses: the loss written by
    # `features` equals the loss causal recomputes, so ATE rows agree
    inp = write_corpus(tmp_path, small_corpus(n=15, seed=12))
    mid = tmp_path / "mid"
    main(["features", "--input", str(inp), "--output", str(mid)])
    out1 = tmp_path / "c1"
    out2 = tmp_path / "c2"
    main(["causal", "--input", str(mid / "corpus.jsonl"), "--output", str(out1),
          "--treatments", "identifier"])
    main(["causal", "--input", str(inp), "--output", str(out2),
          "--treatments", "identifier"])
    r1 = json.loads((out1 / "causal.json").read_text())["results"][0]
    r2 = json.loads((out2 / "causal.json").read_text())["results"][0]
    assert r1["ate"] == pytest.approx(r2["ate"], rel=1e-12)
    assert r1["pearson_rho"] == pytest.approx(r2["pearson_rho"], rel=1e-12)
