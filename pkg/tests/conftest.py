"""Shared test helpers: snippet generation and a synthetic subword tokenizer."""

from __future__ import annotations

import random

import pytest

from asctk.corpus import SnippetRecord, TokenRecord

NAMES = ["count", "total", "items", "values", "result", "data", "idx", "épsilon", "flag"]
FUNCS = ["process", "compute", "merge", "filter_rows", "summarize"]
STRINGS = ["'ok'", "'naïve text'", '"line one"', "f'v={x}'", "'a' 'b'"]


def gen_expr(rng: random.Random, depth: int = 0) -> str:
    choices = [
        lambda: rng.choice(NAMES),
        lambda: str(rng.randint(0, 99)),
        lambda: rng.choice(STRINGS),
        lambda: f"{rng.choice(NAMES)} + {rng.randint(1, 9)}",
        lambda: f"{rng.choice(NAMES)} > {rng.randint(0, 9)}",
        lambda: f"{rng.choice(NAMES)}[{rng.randint(0, 3)}]",
        lambda: f"{rng.choice(FUNCS)}({rng.choice(NAMES)}, key={rng.choice(NAMES)})",
        lambda: f"[{rng.choice(NAMES)} * 2 for {rng.choice(NAMES)} in {rng.choice(NAMES)}]",
        lambda: f"{{'k': {rng.choice(NAMES)}, 'n': {rng.randint(0, 9)}}}",
        lambda: f"lambda v: v if v else {rng.randint(0, 9)}",
        lambda: f"({rng.choice(NAMES)}, {rng.choice(NAMES)})",
        lambda: f"not {rng.choice(NAMES)}",
        lambda: f"{rng.choice(NAMES)} and {rng.choice(NAMES)} or {rng.choice(NAMES)}",
    ]
    return rng.choice(choices)()


def gen_stmt(rng: random.Random, indent: int, depth: int) -> list[str]:
    pad = "    " * indent
    simple = [
        lambda: [f"{pad}{rng.choice(NAMES)} = {gen_expr(rng)}"],
        lambda: [f"{pad}{rng.choice(NAMES)} += {rng.randint(1, 5)}"],
        lambda: [f"{pad}{rng.choice(FUNCS)}({gen_expr(rng)})"],
        lambda: [f"{pad}return {gen_expr(rng)}"],
        lambda: [f"{pad}assert {rng.choice(NAMES)}, {rng.choice(STRINGS)}"],
        lambda: [f"{pad}# note: {rng.choice(NAMES)}", f"{pad}pass"],
        lambda: [f"{pad}pass"],
    ]
    if depth >= 2:
        return rng.choice(simple)()
    compound = [
        lambda: [f"{pad}if {gen_expr(rng)}:"] + gen_stmt(rng, indent + 1, depth + 1)
        + ([f"{pad}else:"] + gen_stmt(rng, indent + 1, depth + 1) if rng.random() < 0.4 else []),
        lambda: [f"{pad}for {rng.choice(NAMES)} in {rng.choice(NAMES)}:"]
        + gen_stmt(rng, indent + 1, depth + 1),
        lambda: [f"{pad}while {rng.choice(NAMES)} > 0:"]
        + gen_stmt(rng, indent + 1, depth + 1),
        lambda: [f"{pad}try:"] + gen_stmt(rng, indent + 1, depth + 1)
        + [f"{pad}except ValueError as exc:"] + gen_stmt(rng, indent + 1, depth + 1),
        lambda: [f"{pad}with open({rng.choice(STRINGS)}) as fh:"]
        + gen_stmt(rng, indent + 1, depth + 1),
    ]
    return rng.choice(simple + compound)()


def gen_snippet(rng: random.Random) -> str:
    lines: list[str] = []
    if rng.random() < 0.3:
        lines.append(f"import {rng.choice(['os', 'json', 'math'])}")
    if rng.random() < 0.2:
        lines.append(f"@{rng.choice(FUNCS)}")
    params = ", ".join(rng.sample(NAMES, rng.randint(1, 3)))
    lines.append(f"def {rng.choice(FUNCS)}({params}):")
    for _ in range(rng.randint(1, 4)):
        lines.extend(gen_stmt(rng, 1, 0))
    if rng.random() < 0.3:
        lines.append(f"{rng.choice(NAMES)} = {gen_expr(rng)}")
    return "\n".join(lines) + "\n"


def subword_tokens(
    source: str,
    rng: random.Random,
    *,
    with_ntp: bool = True,
    ntp_of=None,
) -> list[TokenRecord]:
    """Chop source into 1-5 char chunks at character boundaries, like a
    sub-word tokenizer that glues whitespace and punctuation to neighbors."""
    tokens: list[TokenRecord] = []
    byte_pos = 0
    char_pos = 0
    first = True
    while char_pos < len(source):
        step = rng.randint(1, 5)
        chunk = source[char_pos:char_pos + step]
        nbytes = len(chunk.encode("utf-8"))
        if first:
            ntp = None
        elif ntp_of is not None:
            ntp = ntp_of(chunk)
        elif with_ntp:
            ntp = round(rng.random(), 6)
        else:
            ntp = None
        tokens.append(TokenRecord(chunk, byte_pos, byte_pos + nbytes, ntp))
        byte_pos += nbytes
        char_pos += step
        first = False
    return tokens


def make_snippet_record(rng: random.Random, snippet_id: str) -> SnippetRecord:
    source = gen_snippet(rng)
    return SnippetRecord(id=snippet_id, source=source,
                         tokens=subword_tokens(source, rng))


@pytest.fixture
def rng() -> random.Random:
    return random.Random(20240811)
