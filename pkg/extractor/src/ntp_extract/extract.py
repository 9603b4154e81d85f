"""Offline next-token-probability extraction for causal language models.

For every snippet, one forward pass records the softmax probability the
model assigned to each actual token given its left context. Tokens are
written with UTF-8 byte spans in the snippet source; the first token has no
prediction and carries a null probability. Output is the asctk JSONL
interchange format and is consumed purely as a file: the analysis toolkit
never loads a model, and this extractor never imports the toolkit.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import torch
from transformers import AutoModelForCausalLM, AutoTokenizer

from .offsets import offsets_to_bytes

log = logging.getLogger("ntp_extract")

NTP_FLOOR = 1e-12


class JobError(RuntimeError):
    """The job cannot run at all (bad model, bad input path)."""


@dataclass
class ExtractionJob:
    model_id: str
    input_path: str | Path
    output_path: str | Path
    device: str = "cpu"
    max_len: int = 1024
    batch_size: int = 8
    include_special: bool = False  # zero-width records; breaks strict
    # corpus validation, only for loss parity with a model's own reduction

    def __post_init__(self):
        if self.max_len < 2:
            raise JobError("max_len must be >= 2 (need at least one prediction)")


@dataclass
class SnippetSource:
    id: str
    source: str
    metadata: dict[str, str] = field(default_factory=dict)


@dataclass
class ExtractionSummary:
    output_path: Path
    written: int
    skipped: list[tuple[str, str]] = field(default_factory=list)


def load_inputs(path: str | Path) -> list[SnippetSource]:
    """Accepts a JSONL corpus (id/source per line), a directory of .py
    files, or a single source file."""
    path = Path(path)
    if not path.exists():
        raise JobError(f"input path does not exist: {path}")
    if path.is_dir():
        files = sorted(path.rglob("*.py"))
        if not files:
            raise JobError(f"no .py files under {path}")
        return [
            SnippetSource(id=str(f.relative_to(path)), source=f.read_text(encoding="utf-8"))
            for f in files
        ]
    if path.suffix == ".jsonl":
        out = []
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                obj = json.loads(line)
                if "id" not in obj or "source" not in obj:
                    raise JobError(f"line {lineno}: need 'id' and 'source' keys")
                out.append(SnippetSource(id=obj["id"], source=obj["source"],
                                         metadata=obj.get("metadata") or {}))
        return out
    return [SnippetSource(id=path.name, source=path.read_text(encoding="utf-8"))]


def _load_model(job: ExtractionJob):
    try:
        tokenizer = AutoTokenizer.from_pretrained(job.model_id)
        model = AutoModelForCausalLM.from_pretrained(job.model_id)
    except Exception as exc:
        raise JobError(f"cannot load model {job.model_id!r}: {exc}") from exc
    if not tokenizer.is_fast:
        raise JobError("a fast tokenizer is required (offset mapping)")
    model.eval()
    model.to(job.device)
    return tokenizer, model


def _token_probs(model, device, batch_ids: list[list[int]]) -> list[list[float]]:
    """Per-sequence probabilities of each actual token; index 0 is None-like
    and excluded (the caller treats position 0 as having no prediction)."""
    max_len = max(len(ids) for ids in batch_ids)
    input_ids = torch.zeros((len(batch_ids), max_len), dtype=torch.long)
    attention = torch.zeros((len(batch_ids), max_len), dtype=torch.long)
    for r, ids in enumerate(batch_ids):
        input_ids[r, : len(ids)] = torch.tensor(ids)
        attention[r, : len(ids)] = 1
    with torch.no_grad():
        logits = model(input_ids.to(device), attention_mask=attention.to(device)).logits
    logprobs = torch.log_softmax(logits.float(), dim=-1)
    out = []
    for r, ids in enumerate(batch_ids):
        probs = []
        for i in range(1, len(ids)):
            probs.append(float(logprobs[r, i - 1, ids[i]].exp()))
        out.append(probs)
    return out


def _merge_groups(
    spans: list[tuple[int, int]]
) -> list[tuple[int, int, list[int]]]:
    """Group token indices whose character spans overlap.

    Byte-level BPE splits one multi-byte character into several tokens that
    all report the same character span; those must merge into one record to
    keep byte spans strictly increasing. Returns (start, end, member
    indices) in order.
    """
    groups: list[tuple[int, int, list[int]]] = []
    for i, (start, end) in enumerate(spans):
        if groups and start < groups[-1][1]:
            gs, ge, members = groups[-1]
            groups[-1] = (gs, max(ge, end), members + [i])
        else:
            groups.append((start, end, [i]))
    return groups


def _sig9(p: float) -> float:
    return float(f"{p:.9g}")


def extract(job: ExtractionJob) -> ExtractionSummary:
    """Run the job; per-snippet failures are logged and skipped, the rest
    of the corpus is still written."""
    tokenizer, model = _load_model(job)
    snippets = load_inputs(job.input_path)
    output_path = Path(job.output_path)
    output_path.parent.mkdir(parents=True, exist_ok=True)
    skipped: list[tuple[str, str]] = []
    written = 0

    with open(output_path, "w", encoding="utf-8") as fh:
        for lo in range(0, len(snippets), job.batch_size):
            batch = snippets[lo:lo + job.batch_size]
            encoded = []
            for snip in batch:
                try:
                    enc = tokenizer(
                        snip.source,
                        return_offsets_mapping=True,
                        add_special_tokens=job.include_special,
                    )
                except Exception as exc:
                    skipped.append((snip.id, f"tokenization failed: {exc}"))
                    log.warning("skipping %s: %s", snip.id, exc)
                    continue
                n = len(enc["input_ids"])
                if n == 0:
                    skipped.append((snip.id, "empty after tokenization"))
                    continue
                if n > job.max_len:
                    skipped.append((snip.id, f"length {n} exceeds max_len {job.max_len}"))
                    log.warning("skipping %s: %d tokens > max_len", snip.id, n)
                    continue
                encoded.append((snip, enc["input_ids"], enc["offset_mapping"]))
            if not encoded:
                continue
            all_probs = _token_probs(model, job.device, [ids for _, ids, _ in encoded])
            for (snip, ids, offsets), probs in zip(encoded, all_probs):
                try:
                    record = _build_record(job, snip, ids, offsets, probs)
                except Exception as exc:
                    skipped.append((snip.id, f"record build failed: {exc}"))
                    log.warning("skipping %s: %s", snip.id, exc)
                    continue
                fh.write(json.dumps(record, ensure_ascii=False) + "\n")
                written += 1
    return ExtractionSummary(output_path=output_path, written=written, skipped=skipped)


def _build_record(job, snip, ids, offsets, probs) -> dict:
    # probability of position i (None for position 0, which has no context)
    pos_prob: list[float | None] = [None] + list(probs)
    tokens = []
    special_spans = [i for i, (s, e) in enumerate(offsets) if s == e]
    content = [i for i in range(len(ids)) if i not in set(special_spans)]
    content_spans = [offsets[i] for i in content]
    byte_spans = offsets_to_bytes(snip.source, content_spans)

    for g_start, g_end, members in _merge_groups(content_spans):
        indices = [content[m] for m in members]
        member_probs = [pos_prob[i] for i in indices]
        if any(p is None for p in member_probs):
            ntp = None
        else:
            product = 1.0
            for p in member_probs:
                product *= p
            ntp = _sig9(product)
        b_start = byte_spans[members[0]][0]
        b_end = max(byte_spans[m][1] for m in members)
        tokens.append({
            "text": snip.source[g_start:g_end],
            "start_byte": b_start,
            "end_byte": b_end,
            "ntp": ntp,
        })
    if job.include_special:
        for i in special_spans:
            p = pos_prob[i]
            b = offsets_to_bytes(snip.source, [offsets[i]])[0]
            tokens.append({
                "text": "",
                "start_byte": b[0],
                "end_byte": b[1],
                "ntp": None if p is None else _sig9(p),
            })
        tokens.sort(key=lambda t: (t["start_byte"], t["end_byte"]))

    present = [t["ntp"] for t in tokens if t["ntp"] is not None]
    if present:
        loss = sum(-math.log(max(p, NTP_FLOOR)) for p in present) / len(present)
    else:
        loss = None
        log.warning("%s: no predicted tokens, loss undefined", snip.id)
    return {
        "id": snip.id,
        "source": snip.source,
        "tokens": tokens,
        "loss": loss,
        "features": None,
        "metadata": snip.metadata,
    }
