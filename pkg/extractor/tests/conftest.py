"""Builds a tiny offline checkpoint: BPE tokenizer + random-weight GPT-2."""

from __future__ import annotations

import json
import random
from pathlib import Path

import pytest
import torch
from tokenizers import Tokenizer, decoders, models, pre_tokenizers, trainers
from tokenizers.processors import TemplateProcessing
from transformers import GPT2Config, GPT2LMHeadModel, PreTrainedTokenizerFast

NAMES = ["count", "total", "items", "value", "result", "données", "flag", "acc"]
OPS = ["+", "-", "*"]


def make_source(rng: random.Random) -> str:
    """Small valid Python snippets with varying identifier density."""
    name = rng.choice(NAMES)
    fn = f"fn_{rng.randint(0, 99)}"
    lines = [f"def {fn}({name}, limit):"]
    body = rng.randint(1, 3)
    for _ in range(body):
        kind = rng.random()
        a, b = rng.choice(NAMES), rng.choice(NAMES)
        if kind < 0.3:
            lines.append(f"    {a} = {b} {rng.choice(OPS)} {rng.randint(1, 9)}")
        elif kind < 0.5:
            lines.append(f"    if {a} > {rng.randint(0, 5)}:")
            lines.append(f"        {b} = {a}")
        elif kind < 0.7:
            lines.append(f"    for i in range({rng.randint(2, 9)}):")
            lines.append(f"        {a} += i")
        elif kind < 0.85:
            lines.append(f"    {a} = '{rng.choice(['ok', 'raw', 'naïve'])}'")
        else:
            lines.append(f"    assert {a}, 'bad {b}'")
    lines.append(f"    return {rng.choice(NAMES)}")
    return "\n".join(lines) + "\n"


def make_corpus_file(path: Path, n: int, seed: int) -> Path:
    rng = random.Random(seed)
    with open(path, "w", encoding="utf-8") as fh:
        for i in range(n):
            fh.write(json.dumps({"id": f"x{i}", "source": make_source(rng),
                                 "metadata": {"origin": "synthetic"}}) + "\n")
    return path


TRAINING_TEXTS = [make_source(random.Random(s)) for s in range(40)] + [
    "def countChars(string, character):\n    return string.count(character)\n",
    "for item in items:\n    print(item)\n",
]


@pytest.fixture(scope="session")
def tiny_checkpoint(tmp_path_factory) -> str:
    """Byte-level BPE tokenizer + seeded random GPT-2, saved like any hub
    checkpoint and loaded back through the normal from_pretrained path."""
    out = tmp_path_factory.mktemp("checkpoint")
    tok = Tokenizer(models.BPE(unk_token=None))
    tok.pre_tokenizer = pre_tokenizers.ByteLevel(add_prefix_space=False)
    tok.decoder = decoders.ByteLevel()
    trainer = trainers.BpeTrainer(
        vocab_size=384,
        special_tokens=["<|end|>"],
        initial_alphabet=pre_tokenizers.ByteLevel.alphabet(),
    )
    tok.train_from_iterator(TRAINING_TEXTS, trainer)
    eos_id = tok.token_to_id("<|end|>")
    tok.post_processor = TemplateProcessing(
        single="$A <|end|>", special_tokens=[("<|end|>", eos_id)]
    )
    fast = PreTrainedTokenizerFast(tokenizer_object=tok, eos_token="<|end|>")
    fast.save_pretrained(out)

    config = GPT2Config(
        vocab_size=len(fast),
        n_embd=64,
        n_layer=2,
        n_head=2,
        n_positions=256,
        bos_token_id=eos_id,
        eos_token_id=eos_id,
    )
    torch.manual_seed(20240811)
    GPT2LMHeadModel(config).save_pretrained(out)
    return str(out)
