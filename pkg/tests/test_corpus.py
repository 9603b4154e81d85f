import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from asctk.corpus import (
    CodeFeatures,
    CorpusError,
    CorpusLoadError,
    SnippetRecord,
    TokenRecord,
    load_corpus,
    save_corpus,
    validate,
)

from conftest import make_snippet_record, subword_tokens


def simple_record() -> SnippetRecord:
    return SnippetRecord(
        id="a",
        source="x=1",
        tokens=[
            TokenRecord("x", 0, 1, None),
            TokenRecord("=", 1, 2, 0.5),
            TokenRecord("1", 2, 3, 0.25),
        ],
    )


class TestValidate:
    def test_valid_record_has_no_violations(self):
        assert validate(simple_record()) == []

    def test_overlapping_spans(self):
        rec = SnippetRecord(
            id="a",
            source="xy",
            tokens=[TokenRecord("xy", 0, 2), TokenRecord("y", 1, 2)],
        )
        rules = [v.rule for v in validate(rec)]
        assert "spans overlap" in rules

    def test_ntp_out_of_range(self):
        rec = SnippetRecord(id="a", source="x", tokens=[TokenRecord("x", 0, 1, 1.5)])
        rules = [v.rule for v in validate(rec)]
        assert rules == ["ntp out of range"]

    def test_text_mismatch_names_id(self):
        rec = SnippetRecord(id="snip7", source="abc", tokens=[TokenRecord("abd", 0, 3)])
        violations = validate(rec)
        assert len(violations) == 1
        assert violations[0].snippet_id == "snip7"
        assert violations[0].rule == "token text mismatch"

    def test_empty_id(self):
        rec = SnippetRecord(id="", source="x", tokens=[])
        assert [v.rule for v in validate(rec)] == ["id empty"]

    def test_span_out_of_bounds(self):
        rec = SnippetRecord(id="a", source="x", tokens=[TokenRecord("xx", 0, 2)])
        assert [v.rule for v in validate(rec)] == ["span out of bounds"]

    def test_feature_invariants(self):
        rec = simple_record()
        rec.features = CodeFeatures(1, 0, 3, 5, 3, 0, 0, 2)
        rules = [v.rule for v in validate(rec)]
        assert "cyclomatic below one" in rules
        rec.features = CodeFeatures(1, 0, 2, 5, 3, 0, 1, 3)
        rules = [v.rule for v in validate(rec)]
        assert "sequence_size exceeds token_count" in rules


class TestRoundTrip:
    def test_single_record(self, tmp_path):
        path = tmp_path / "c.jsonl"
        save_corpus([simple_record()], path)
        loaded = load_corpus(path)
        assert loaded == [simple_record()]

    def test_empty_file_gives_empty_list(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text("")
        assert load_corpus(path) == []

    def test_empty_corpus_round_trip(self, tmp_path):
        path = tmp_path / "c.jsonl"
        save_corpus([], path)
        assert path.read_text() == ""
        assert load_corpus(path) == []

    def test_non_ascii_byte_offsets(self, tmp_path):
        # 'é' is 2 bytes in UTF-8, so '=' starts at byte 2 and '1' at byte 3
        rec = SnippetRecord(
            id="uni",
            source="é=1",
            tokens=[
                TokenRecord("é", 0, 2, None),
                TokenRecord("=", 2, 3, 0.9),
                TokenRecord("1", 3, 4, 0.8),
            ],
        )
        path = tmp_path / "c.jsonl"
        save_corpus([rec], path)
        assert load_corpus(path) == [rec]

    def test_generated_records_round_trip(self, tmp_path):
        rng = random.Random(77)
        records = [make_snippet_record(rng, f"s{i}") for i in range(10)]
        for rec in records:
            rec.loss = round(rng.random() * 3, 6)
            rec.metadata = {"repo": f"r{rng.randint(0, 5)}"}
        path = tmp_path / "c.jsonl"
        save_corpus(records, path)
        assert load_corpus(path) == records

    def test_unknown_keys_preserved(self, tmp_path):
        obj = {
            "id": "a",
            "source": "x",
            "tokens": [{"text": "x", "start_byte": 0, "end_byte": 1, "ntp": None}],
            "loss": None,
            "features": None,
            "metadata": {},
            "commit": "deadbeef",
        }
        path = tmp_path / "c.jsonl"
        path.write_text(json.dumps(obj) + "\n")
        records = load_corpus(path)
        assert records[0].extra == {"commit": "deadbeef"}
        out = tmp_path / "out.jsonl"
        save_corpus(records, out)
        assert json.loads(out.read_text())["commit"] == "deadbeef"

    @settings(max_examples=30, deadline=None)
    @given(st.integers(min_value=0, max_value=10**9))
    def test_round_trip_property(self, tmp_path_factory, seed):
        rng = random.Random(seed)
        rec = make_snippet_record(rng, f"p{seed}")
        path = tmp_path_factory.mktemp("rt") / "c.jsonl"
        save_corpus([rec], path)
        assert load_corpus(path) == [rec]


class TestLoadErrors:
    def test_malformed_json_carries_line_number(self, tmp_path):
        path = tmp_path / "c.jsonl"
        save_corpus([simple_record()], path)
        with open(path, "a") as fh:
            fh.write("{not json\n")
        with pytest.raises(CorpusLoadError) as err:
            load_corpus(path)
        assert err.value.line == 2

    def test_missing_key_names_field(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text('{"id": "a", "source": "x"}\n')
        with pytest.raises(CorpusLoadError) as err:
            load_corpus(path)
        assert err.value.field_name == "tokens"

    def test_mutated_byte_fails_with_id(self, tmp_path):
        # corrupt one byte of token text so it no longer matches the slice
        path = tmp_path / "c.jsonl"
        save_corpus([simple_record()], path)
        text = path.read_text().replace('"text": "="', '"text": "+"')
        path.write_text(text)
        with pytest.raises(CorpusError) as err:
            load_corpus(path)
        assert "a" in str(err.value)
        assert "token text mismatch" in str(err.value)

    def test_rejected_record_is_flagged_by_validate(self, tmp_path):
        # validation completeness: what load rejects, validate also reports
        rec = SnippetRecord(id="a", source="ab",
                            tokens=[TokenRecord("a", 0, 1), TokenRecord("ab", 0, 2)])
        assert validate(rec)
        path = tmp_path / "c.jsonl"
        save_corpus([rec], path)
        with pytest.raises(CorpusError):
            load_corpus(path)

    def test_order_preserved(self, tmp_path):
        rng = random.Random(3)
        records = [make_snippet_record(rng, f"s{i}") for i in range(6)]
        path = tmp_path / "c.jsonl"
        save_corpus(records, path)
        assert [r.id for r in load_corpus(path)] == [f"s{i}" for i in range(6)]


def test_span_monotonicity_preserved_by_round_trip(tmp_path):
    rng = random.Random(5)
    source = "total = 1 + 2\n"
    tokens = subword_tokens(source, rng)
    rec = SnippetRecord(id="m", source=source, tokens=tokens)
    path = tmp_path / "c.jsonl"
    save_corpus([rec], path)
    loaded = load_corpus(path)[0]
    starts = [t.start_byte for t in loaded.tokens]
    assert starts == sorted(starts)
    for a, b in zip(loaded.tokens, loaded.tokens[1:]):
        assert a.end_byte <= b.start_byte
