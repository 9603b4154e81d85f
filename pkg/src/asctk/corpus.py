"""Interchange data model: snippets with token-level next-token probabilities.

The on-disk format is JSON Lines, one snippet object per line, with keys
``id``, ``source``, ``tokens``, ``loss``, ``features``, ``metadata``. Offsets
are UTF-8 byte offsets into ``source``. Unknown keys are kept and written
back on save, so foreign producers can round-trip extra fields through this
toolkit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable


class CorpusError(Exception):
    """Base error for corpus loading/validation."""


class CorpusLoadError(CorpusError):
    """A line of the interchange file could not be decoded or validated."""

    def __init__(self, message: str, *, line: int, field_name: str | None = None):
        self.line = line
        self.field_name = field_name
        where = f"line {line}" + (f", field {field_name!r}" if field_name else "")
        super().__init__(f"{message} ({where})")


@dataclass(frozen=True)
class Violation:
    """One broken invariant: which rule, where, and what was seen."""

    snippet_id: str
    rule: str
    detail: str

    def __str__(self) -> str:
        return f"[{self.snippet_id}] {self.rule}: {self.detail}"


@dataclass(frozen=True)
class TokenRecord:
    """One tokenizer token: exact source slice plus its prediction probability.

    ``ntp`` is the probability the model assigned to this token given its
    left context; it is None only for the first token position, which has no
    context. None is deliberately distinct from 0.0.
    """

    text: str
    start_byte: int
    end_byte: int
    ntp: float | None = None


@dataclass(frozen=True)
class CodeFeatures:
    """Per-snippet code measurements used as causal confounders.

    ``token_count`` counts model-tokenizer tokens (not whitespace words);
    ``sequence_size`` counts the subset that carry an ntp value.
    """

    loc: int
    whitespace_count: int
    token_count: int
    n_ast_nodes: int
    ast_levels: int
    ast_errors: int
    cyclomatic: int
    sequence_size: int


@dataclass
class SnippetRecord:
    """The corpus unit: source text, its token records, and metadata."""

    id: str
    source: str
    tokens: list[TokenRecord] = field(default_factory=list)
    loss: float | None = None
    features: CodeFeatures | None = None
    metadata: dict[str, str] = field(default_factory=dict)
    extra: dict[str, Any] = field(default_factory=dict)


def validate(record: SnippetRecord) -> list[Violation]:
    """Check every snippet/token invariant; violations are values, not errors."""
    out: list[Violation] = []
    rid = record.id

    def bad(rule: str, detail: str) -> None:
        out.append(Violation(rid, rule, detail))

    if not record.id:
        bad("id empty", "snippet id must be a non-empty string")
    source_bytes = record.source.encode("utf-8")
    n = len(source_bytes)

    prev_end = -1
    prev_start = -1
    for i, tok in enumerate(record.tokens):
        where = f"token {i}"
        if tok.start_byte < 0 or tok.end_byte < 0:
            bad("span negative", f"{where} has span [{tok.start_byte}, {tok.end_byte})")
            continue
        if tok.start_byte >= tok.end_byte:
            bad("span empty", f"{where} has start_byte >= end_byte")
            continue
        if tok.end_byte > n:
            bad("span out of bounds", f"{where} ends at {tok.end_byte}, source is {n} bytes")
            continue
        if tok.start_byte <= prev_start:
            bad("spans not increasing", f"{where} starts at {tok.start_byte}, previous at {prev_start}")
        elif tok.start_byte < prev_end:
            bad("spans overlap", f"{where} starts at {tok.start_byte} before previous end {prev_end}")
        prev_start, prev_end = tok.start_byte, tok.end_byte
        sliced = source_bytes[tok.start_byte:tok.end_byte]
        if tok.text.encode("utf-8") != sliced:
            bad(
                "token text mismatch",
                f"{where} text {tok.text!r} != source bytes {sliced!r}",
            )
        if tok.ntp is not None and not (0.0 <= tok.ntp <= 1.0):
            bad("ntp out of range", f"{where} ntp={tok.ntp}")

    if record.loss is not None and record.loss < 0:
        bad("loss negative", f"loss={record.loss}")

    f = record.features
    if f is not None:
        counts = {
            "loc": f.loc,
            "whitespace_count": f.whitespace_count,
            "token_count": f.token_count,
            "n_ast_nodes": f.n_ast_nodes,
            "ast_levels": f.ast_levels,
            "ast_errors": f.ast_errors,
            "sequence_size": f.sequence_size,
        }
        for name, value in counts.items():
            if value < 0:
                bad("feature negative", f"{name}={value}")
        if record.source and f.cyclomatic < 1:
            bad("cyclomatic below one", f"cyclomatic={f.cyclomatic} for non-empty source")
        if f.sequence_size > f.token_count:
            bad("sequence_size exceeds token_count", f"{f.sequence_size} > {f.token_count}")
    return out


_TOKEN_KEYS = {"text", "start_byte", "end_byte", "ntp"}
_SNIPPET_KEYS = {"id", "source", "tokens", "loss", "features", "metadata"}
_FEATURE_KEYS = (
    "loc",
    "whitespace_count",
    "token_count",
    "n_ast_nodes",
    "ast_levels",
    "ast_errors",
    "cyclomatic",
    "sequence_size",
)


def _token_from_obj(obj: dict[str, Any], line: int, index: int) -> TokenRecord:
    for key in ("text", "start_byte", "end_byte"):
        if key not in obj:
            raise CorpusLoadError(
                f"token {index} missing required key", line=line, field_name=key
            )
    text = obj["text"]
    start, end = obj["start_byte"], obj["end_byte"]
    ntp = obj.get("ntp")
    if not isinstance(text, str):
        raise CorpusLoadError(f"token {index} text is not a string", line=line, field_name="text")
    if not isinstance(start, int) or not isinstance(end, int):
        raise CorpusLoadError(
            f"token {index} offsets must be integers", line=line, field_name="start_byte"
        )
    if ntp is not None and not isinstance(ntp, (int, float)):
        raise CorpusLoadError(f"token {index} ntp is not a number", line=line, field_name="ntp")
    return TokenRecord(text=text, start_byte=start, end_byte=end,
                       ntp=float(ntp) if ntp is not None else None)


def _features_from_obj(obj: dict[str, Any], line: int) -> CodeFeatures:
    values = {}
    for key in _FEATURE_KEYS:
        if key not in obj:
            raise CorpusLoadError("features missing key", line=line, field_name=key)
        if not isinstance(obj[key], int):
            raise CorpusLoadError("feature value is not an integer", line=line, field_name=key)
        values[key] = obj[key]
    return CodeFeatures(**values)


def _snippet_from_obj(obj: dict[str, Any], line: int) -> SnippetRecord:
    for key in ("id", "source", "tokens"):
        if key not in obj:
            raise CorpusLoadError("record missing required key", line=line, field_name=key)
    if not isinstance(obj["id"], str):
        raise CorpusLoadError("id is not a string", line=line, field_name="id")
    if not isinstance(obj["source"], str):
        raise CorpusLoadError("source is not a string", line=line, field_name="source")
    if not isinstance(obj["tokens"], list):
        raise CorpusLoadError("tokens is not an array", line=line, field_name="tokens")
    tokens = [_token_from_obj(t, line, i) for i, t in enumerate(obj["tokens"])]
    loss = obj.get("loss")
    if loss is not None and not isinstance(loss, (int, float)):
        raise CorpusLoadError("loss is not a number", line=line, field_name="loss")
    features = obj.get("features")
    metadata = obj.get("metadata") or {}
    if not isinstance(metadata, dict) or not all(
        isinstance(k, str) and isinstance(v, str) for k, v in metadata.items()
    ):
        raise CorpusLoadError("metadata is not a string map", line=line, field_name="metadata")
    extra = {k: v for k, v in obj.items() if k not in _SNIPPET_KEYS}
    return SnippetRecord(
        id=obj["id"],
        source=obj["source"],
        tokens=tokens,
        loss=float(loss) if loss is not None else None,
        features=_features_from_obj(features, line) if features is not None else None,
        metadata=dict(metadata),
        extra=extra,
    )


def load_corpus(path: str | Path) -> list[SnippetRecord]:
    """Load a JSONL corpus; every record is validated before being returned.

    Raises CorpusLoadError with the offending line number for malformed
    lines, and CorpusError naming the snippet id and rule for records that
    decode but break an invariant.
    """
    records: list[SnippetRecord] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise CorpusLoadError(f"invalid JSON: {exc.msg}", line=lineno) from exc
            if not isinstance(obj, dict):
                raise CorpusLoadError("record is not an object", line=lineno)
            record = _snippet_from_obj(obj, lineno)
            violations = validate(record)
            if violations:
                raise CorpusError(
                    f"invalid record {record.id!r} at line {lineno}: "
                    + "; ".join(str(v) for v in violations)
                )
            records.append(record)
    return records


def _token_to_obj(tok: TokenRecord) -> dict[str, Any]:
    return {
        "text": tok.text,
        "start_byte": tok.start_byte,
        "end_byte": tok.end_byte,
        "ntp": tok.ntp,
    }


def snippet_to_obj(record: SnippetRecord) -> dict[str, Any]:
    """Serialize one record to the interchange object layout."""
    obj: dict[str, Any] = {
        "id": record.id,
        "source": record.source,
        "tokens": [_token_to_obj(t) for t in record.tokens],
        "loss": record.loss,
        "features": (
            {k: getattr(record.features, k) for k in _FEATURE_KEYS}
            if record.features is not None
            else None
        ),
        "metadata": record.metadata,
    }
    for key, value in record.extra.items():
        obj[key] = value
    return obj


def save_corpus(records: Iterable[SnippetRecord], path: str | Path) -> None:
    """Write records as JSONL; load_corpus(save_corpus(r)) round-trips exactly."""
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(snippet_to_obj(record), ensure_ascii=False, sort_keys=False))
            fh.write("\n")
