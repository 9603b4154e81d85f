"""Concept scoring: per-node aggregation, snippet and corpus reports.

A node's score collapses the next-token probabilities of its aligned tokens
with a configurable statistic (median by default). Token mode aggregates
each node's own aligned tokens; hierarchical mode scores terminals from
tokens and internal nodes from their children's scores, which is how worked
per-node averages compose bottom-up.

Corpus-level reports pool node scores by concept (node type), by category,
and globally, then report a seeded bootstrapped median per key: resample
the pool with replacement (resample size = pool size) `resamples` times,
take each resample's median, and report the median of those medians.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import SCHEMA_VERSION
from .alignment import Alignment, align, node_ntp, preorder
from .corpus import SnippetRecord, TokenRecord
from .syntax import GRAMMAR_VERSION, SyntaxTree, parse
from .taxonomy import ConceptCategory, Taxonomy

CONFIDENT_THRESHOLD = 0.6
ERRONEOUS_THRESHOLD = 0.5
NTP_FLOOR = 1e-12


class EvalError(ValueError):
    pass


class UndefinedLossError(EvalError):
    """Cross-entropy asked of a snippet with no scored tokens."""


class StatKind(str, Enum):
    MEDIAN = "median"
    MEAN = "mean"
    MAX = "max"


class AggMode(str, Enum):
    TOKEN = "token"
    HIERARCHICAL = "hierarchical"


@dataclass(frozen=True)
class AggregationStatistic:
    kind: StatKind = StatKind.MEDIAN
    mode: AggMode = AggMode.TOKEN


def aggregate_node(values: list[float], stat: AggregationStatistic) -> float | None:
    """Collapse probabilities with the configured statistic; None if empty.

    Even-length medians are the mean of the two middle values.
    """
    if not values:
        return None
    if stat.kind == StatKind.MEAN:
        return sum(values) / len(values)
    if stat.kind == StatKind.MAX:
        return max(values)
    ordered = sorted(values)
    n = len(ordered)
    mid = n // 2
    if n % 2 == 1:
        return ordered[mid]
    return (ordered[mid - 1] + ordered[mid]) / 2


@dataclass
class NodeScore:
    node_type: str
    category: ConceptCategory
    score: float | None
    token_count: int
    is_leaf: bool


@dataclass
class AnnotatedTree:
    """Tree plus one NodeScore per node, indexed by preorder id."""

    tree: SyntaxTree
    nodes: list[NodeScore]

    def score_of(self, node_id: int) -> float | None:
        return self.nodes[node_id].score


def annotate(
    tree: SyntaxTree,
    alignment: Alignment,
    tokens: list[TokenRecord],
    taxonomy: Taxonomy,
    stat: AggregationStatistic = AggregationStatistic(),
) -> AnnotatedTree:
    """Score every node under the configured statistic and mode."""
    order = preorder(tree)
    token_scores: list[float | None] = []
    for node_id in range(len(order)):
        token_scores.append(aggregate_node(node_ntp(alignment, tokens, node_id), stat))

    scores: list[float | None]
    if stat.mode == AggMode.TOKEN:
        scores = token_scores
    else:
        # children precede nothing in preorder; compute bottom-up by index
        scores = [None] * len(order)
        children_ids = _children_ids(order)
        for node_id in range(len(order) - 1, -1, -1):
            node = order[node_id]
            if not node.children:
                scores[node_id] = token_scores[node_id]
            else:
                child_scores = [
                    scores[c] for c in children_ids[node_id] if scores[c] is not None
                ]
                scores[node_id] = aggregate_node(child_scores, stat)

    annotations = [
        NodeScore(
            node_type=node.node_type,
            category=taxonomy.categorize(node.node_type),
            score=scores[node_id],
            token_count=len(alignment.node_tokens[node_id]),
            is_leaf=not node.children,
        )
        for node_id, node in enumerate(order)
    ]
    return AnnotatedTree(tree=tree, nodes=annotations)


def _children_ids(order) -> list[list[int]]:
    """Preorder child-id lists, reconstructed from the flat node list."""
    ids: list[list[int]] = [[] for _ in order]
    index = {id(node): i for i, node in enumerate(order)}
    for i, node in enumerate(order):
        ids[i] = [index[id(child)] for child in node.children]
    return ids


@dataclass
class EvalEntry:
    key: str
    kind: str  # "concept" | "category" | "global"
    score: float
    count: int
    flag: str  # "confident" | "erroneous" | "neither"


@dataclass
class EvalReport:
    scope: str  # "snippet" | "corpus"
    entries: list[EvalEntry]
    stat: AggregationStatistic
    grammar_version: str = GRAMMAR_VERSION
    taxonomy_version: str = "unversioned"
    resamples: int | None = None
    seed: int | None = None
    pool: str | None = None
    warnings: list[str] = field(default_factory=list)
    schema_version: int = SCHEMA_VERSION
    confident_threshold: float = CONFIDENT_THRESHOLD
    erroneous_threshold: float = ERRONEOUS_THRESHOLD

    def entry(self, key: str) -> EvalEntry:
        for e in self.entries:
            if e.key == key:
                return e
        raise KeyError(key)

    def to_obj(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "scope": self.scope,
            "stat": self.stat.kind.value,
            "mode": self.stat.mode.value,
            "grammar_version": self.grammar_version,
            "taxonomy_version": self.taxonomy_version,
            "resamples": self.resamples,
            "seed": self.seed,
            "pool": self.pool,
            "thresholds": {
                "confident": self.confident_threshold,
                "erroneous": self.erroneous_threshold,
            },
            "entries": [
                {
                    "key": e.key,
                    "kind": e.kind,
                    "score": e.score,
                    "count": e.count,
                    "flag": e.flag,
                }
                for e in self.entries
            ],
            "warnings": self.warnings,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_obj(), indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["key", "kind", "score", "count", "flag"])
        for e in self.entries:
            writer.writerow([e.key, e.kind, f"{e.score:.9g}", e.count, e.flag])
        return buf.getvalue()


def flag_for(score: float) -> str:
    if score >= CONFIDENT_THRESHOLD:
        return "confident"
    if score < ERRONEOUS_THRESHOLD:
        return "erroneous"
    return "neither"


def snippet_scores(
    snippet: SnippetRecord,
    taxonomy: Taxonomy,
    stat: AggregationStatistic = AggregationStatistic(),
) -> AnnotatedTree:
    """Parse, align, and annotate one snippet."""
    tree = parse(snippet.source)
    alignment = align(tree, snippet.tokens)
    return annotate(tree, alignment, snippet.tokens, taxonomy, stat)


def local_eval(
    snippet: SnippetRecord,
    taxonomy: Taxonomy,
    stat: AggregationStatistic = AggregationStatistic(),
) -> tuple[AnnotatedTree, EvalReport]:
    """Per-snippet report: aggregate node scores by concept and category."""
    annotated = snippet_scores(snippet, taxonomy, stat)
    by_concept: dict[str, list[float]] = {}
    by_category: dict[str, list[float]] = {}
    everything: list[float] = []
    for ns in annotated.nodes:
        if ns.score is None:
            continue
        by_concept.setdefault(ns.node_type, []).append(ns.score)
        by_category.setdefault(ns.category.value, []).append(ns.score)
        everything.append(ns.score)
    entries = []
    for key in sorted(by_concept):
        score = aggregate_node(by_concept[key], stat)
        entries.append(EvalEntry(key, "concept", score, len(by_concept[key]), flag_for(score)))
    for key in sorted(by_category):
        score = aggregate_node(by_category[key], stat)
        entries.append(EvalEntry(key, "category", score, len(by_category[key]), flag_for(score)))
    if everything:
        score = aggregate_node(everything, stat)
        entries.append(EvalEntry("global", "global", score, len(everything), flag_for(score)))
    report = EvalReport(
        scope="snippet",
        entries=entries,
        stat=stat,
        taxonomy_version=taxonomy.version,
    )
    return annotated, report


def bootstrap_median(values: np.ndarray, resamples: int, rng: np.random.Generator) -> float:
    """Median of `resamples` medians of with-replacement resamples."""
    n = len(values)
    medians = np.empty(resamples)
    for i in range(resamples):
        medians[i] = np.median(values[rng.integers(0, n, size=n)])
    return float(np.median(medians))


def _pool_scores(
    annotated: list[AnnotatedTree],
    stat: AggregationStatistic,
    pool: str,
) -> tuple[dict[str, list[float]], dict[str, list[float]], list[float]]:
    by_concept: dict[str, list[float]] = {}
    by_category: dict[str, list[float]] = {}
    everything: list[float] = []
    for tree in annotated:
        if pool == "node":
            for ns in tree.nodes:
                if ns.score is None:
                    continue
                by_concept.setdefault(ns.node_type, []).append(ns.score)
                by_category.setdefault(ns.category.value, []).append(ns.score)
                everything.append(ns.score)
        else:  # pool == "snippet": one aggregate per key per snippet
            local_concept: dict[str, list[float]] = {}
            local_category: dict[str, list[float]] = {}
            local_all: list[float] = []
            for ns in tree.nodes:
                if ns.score is None:
                    continue
                local_concept.setdefault(ns.node_type, []).append(ns.score)
                local_category.setdefault(ns.category.value, []).append(ns.score)
                local_all.append(ns.score)
            for key, vals in local_concept.items():
                by_concept.setdefault(key, []).append(aggregate_node(vals, stat))
            for key, vals in local_category.items():
                by_category.setdefault(key, []).append(aggregate_node(vals, stat))
            if local_all:
                everything.append(aggregate_node(local_all, stat))
    return by_concept, by_category, everything


def global_eval(
    corpus: list[SnippetRecord],
    taxonomy: Taxonomy,
    stat: AggregationStatistic = AggregationStatistic(),
    resamples: int = 500,
    seed: int = 0,
    pool: str = "node",
    annotated: list[AnnotatedTree] | None = None,
) -> EvalReport:
    """Corpus report: bootstrapped median per concept/category plus global.

    Deterministic for a fixed seed: one RNG stream is consumed in a fixed
    key order (sorted concepts, sorted categories, then global), independent
    of how the per-snippet annotation work was scheduled. Pass `annotated`
    to reuse per-snippet results computed elsewhere (e.g. by a worker pool);
    it must be in corpus order.
    """
    if not corpus:
        raise EvalError("global_eval needs a non-empty corpus")
    if pool not in ("node", "snippet"):
        raise EvalError(f"unknown pool mode {pool!r}")
    if annotated is None:
        annotated = [snippet_scores(s, taxonomy, stat) for s in corpus]
    by_concept, by_category, everything = _pool_scores(annotated, stat, pool)

    rng = np.random.default_rng(seed)
    entries: list[EvalEntry] = []
    warnings: list[str] = []
    for kind, table in (("concept", by_concept), ("category", by_category)):
        for key in sorted(table):
            values = np.asarray(table[key])
            score = bootstrap_median(values, resamples, rng)
            entries.append(EvalEntry(key, kind, score, len(values), flag_for(score)))
    if everything:
        score = bootstrap_median(np.asarray(everything), resamples, rng)
        entries.append(EvalEntry("global", "global", score, len(everything), flag_for(score)))
    else:
        warnings.append("no scored nodes anywhere in the corpus; global key omitted")

    return EvalReport(
        scope="corpus",
        entries=entries,
        stat=stat,
        taxonomy_version=taxonomy.version,
        resamples=resamples,
        seed=seed,
        pool=pool,
        warnings=warnings,
    )


def cross_entropy(tokens: list[TokenRecord]) -> float:
    """Mean negative natural log of the present ntp values.

    Probabilities are floored at NTP_FLOOR so underflowed zeros from an
    extractor keep the loss finite.
    """
    values = [t.ntp for t in tokens if t.ntp is not None]
    if not values:
        raise UndefinedLossError("no tokens with a present ntp value")
    return -sum(math.log(max(v, NTP_FLOOR)) for v in values) / len(values)
