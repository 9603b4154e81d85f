"""Secondary acceptance: the extractor output feeds the analysis toolkit.

Run with `pytest tests/test_acceptance.py -v -s` for one PASS line per check.
"""

import random

import pytest
import torch
from transformers import AutoModelForCausalLM, AutoTokenizer

from asctk.asceval import cross_entropy
from asctk.causal import run_causal_suite
from asctk.corpus import load_corpus
from asctk.taxonomy import default_taxonomy

from ntp_extract import ExtractionJob, extract
from conftest import make_corpus_file


@pytest.fixture(scope="module")
def small_run(tiny_checkpoint, tmp_path_factory):
    base = tmp_path_factory.mktemp("accept")
    corpus_in = make_corpus_file(base / "in.jsonl", n=20, seed=3)
    out = base / "out.jsonl"
    summary = extract(ExtractionJob(tiny_checkpoint, corpus_in, out,
                                    max_len=200, batch_size=8))
    assert summary.written == 20
    return load_corpus(out)


def test_output_validates_under_corpus_module(small_run):
    """20 snippets extract cleanly and pass every interchange invariant."""
    assert len(small_run) == 20  # load_corpus validates on load
    print("PASS: 20-snippet extraction validates under the corpus module")


def test_sampled_positions_softmax_sums_near_one(tiny_checkpoint, small_run):
    """10 sampled positions: recomputed probability vectors sum to 1 ± 1e-4."""
    tokenizer = AutoTokenizer.from_pretrained(tiny_checkpoint)
    model = AutoModelForCausalLM.from_pretrained(tiny_checkpoint).eval()
    rng = random.Random(17)
    checked = 0
    while checked < 10:
        rec = rng.choice(small_run)
        ids = tokenizer(rec.source, add_special_tokens=False)["input_ids"]
        pos = rng.randrange(len(ids))
        with torch.no_grad():
            logits = model(torch.tensor([ids])).logits[0, pos]
        normalized = float(torch.softmax(logits.float(), dim=-1).sum())
        assert normalized == pytest.approx(1.0, abs=1e-4)
        checked += 1
    print("PASS: 10 sampled positions have softmax sums within 1e-4 of 1")


def test_written_loss_matches_primary_cross_entropy(small_run):
    """Per snippet, the written loss equals asctk's recomputation to 1e-6."""
    for rec in small_run:
        assert rec.loss == pytest.approx(cross_entropy(rec.tokens), abs=1e-6)
    print("PASS: written loss == primary cross_entropy within 1e-6 (20 snippets)")


def test_identifier_ate_is_negative_on_mini_corpus(tiny_checkpoint, tmp_path_factory):
    """Sign-level check on 200 extracted snippets: better identifier scores
    associate with lower loss after confounder adjustment."""
    base = tmp_path_factory.mktemp("mini")
    corpus_in = make_corpus_file(base / "in.jsonl", n=200, seed=7)
    out = base / "out.jsonl"
    summary = extract(ExtractionJob(tiny_checkpoint, corpus_in, out,
                                    max_len=200, batch_size=16))
    assert summary.written == 200
    corpus = load_corpus(out)
    results, warnings = run_causal_suite(corpus, default_taxonomy(), ["identifier"])
    assert not warnings
    result = results[0]
    assert result.n == 200
    assert result.ate < 0, f"expected negative identifier ATE, got {result.ate}"
    print(f"PASS: identifier ATE on 200-snippet mini-corpus is negative "
          f"({result.ate:.2f}, rho={result.pearson_rho:.3f})")
