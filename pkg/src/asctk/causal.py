"""Correlation and adjusted treatment effects of concept scores on loss.

The treatment is a snippet-level concept score, the outcome is snippet
cross-entropy loss, and the confounders are four code features (sequence
size, node count, tree levels, cyclomatic complexity). The average
treatment effect is the treatment coefficient of an OLS fit of the outcome
on [intercept, treatment, confounders] — the backdoor adjustment for the
assumed causal graph. Pearson correlation on (treatment, outcome) is
reported unadjusted alongside, so spurious-correlation cases are visible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .asceval import AggregationStatistic, aggregate_node, cross_entropy, snippet_scores
from .corpus import SnippetRecord
from .syntax import compute_features
from .taxonomy import ConceptCategory, Taxonomy

DEFAULT_CONFOUNDERS = ("sequence_size", "n_ast_nodes", "ast_levels", "cyclomatic")
RANK_TOLERANCE = 1e-10


class CausalError(ValueError):
    pass


class UndefinedCorrelationError(CausalError):
    """Pearson correlation of a zero-variance vector."""


class SingularDesignError(CausalError):
    """Design matrix is rank-deficient; names the collinear columns."""

    def __init__(self, columns: list[str]):
        self.columns = columns
        super().__init__(f"design matrix is rank deficient; collinear columns: {columns}")


def pearson(x, y) -> float:
    """Plain Pearson correlation; errors on mismatch or zero variance."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise CausalError(f"length mismatch: {x.shape} vs {y.shape}")
    if len(x) < 2:
        raise CausalError("need at least 2 observations")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise UndefinedCorrelationError("zero variance input")
    return float((dx @ dy) / np.sqrt(sxx * syy))


@dataclass
class CausalDataset:
    """One row per snippet: treatment, outcome, confounder columns."""

    treatment_name: str
    treatment: np.ndarray
    outcome: np.ndarray
    confounders: np.ndarray  # shape (n, k)
    confounder_names: tuple[str, ...] = DEFAULT_CONFOUNDERS
    dropped: int = 0

    def __post_init__(self):
        self.treatment = np.asarray(self.treatment, dtype=float)
        self.outcome = np.asarray(self.outcome, dtype=float)
        self.confounders = np.asarray(self.confounders, dtype=float)
        n = len(self.treatment)
        if len(self.outcome) != n or self.confounders.shape[0] != n:
            raise CausalError("treatment, outcome, and confounders disagree on n")
        if self.confounders.ndim != 2 or self.confounders.shape[1] != len(self.confounder_names):
            raise CausalError("confounder matrix does not match confounder names")
        for name, col in [("treatment", self.treatment), ("outcome", self.outcome)] + [
            (cname, self.confounders[:, j]) for j, cname in enumerate(self.confounder_names)
        ]:
            if not np.all(np.isfinite(col)):
                raise CausalError(f"column {name!r} contains non-finite values")

    @property
    def n(self) -> int:
        return len(self.treatment)

    def min_rows(self) -> int:
        # regressors = intercept + treatment + confounders; need 2 extra rows
        return (2 + self.confounders.shape[1]) + 2


@dataclass
class CausalResult:
    treatment: str
    pearson_rho: float | None
    ate: float
    n: int
    confounders: tuple[str, ...]
    confounder_correlations: dict[str, float] = field(default_factory=dict)
    dropped: int = 0

    def to_obj(self) -> dict:
        return {
            "treatment": self.treatment,
            "pearson_rho": self.pearson_rho,
            "ate": self.ate,
            "n": self.n,
            "dropped": self.dropped,
            "confounders": list(self.confounders),
            "confounder_correlations": self.confounder_correlations,
        }


def ate(dataset: CausalDataset) -> CausalResult:
    """OLS of outcome on [1, T, Z...]; the T coefficient is the ATE.

    Solved via pivoted QR with a relative rank tolerance, so collinear
    confounder columns fail loudly with their names instead of silently
    producing garbage coefficients.
    """
    if dataset.n < dataset.min_rows():
        raise CausalError(
            f"too few rows: {dataset.n} < required {dataset.min_rows()}"
        )
    design = np.column_stack(
        [np.ones(dataset.n), dataset.treatment, dataset.confounders]
    )
    names = ["intercept", "treatment", *dataset.confounder_names]
    q, r, piv = scipy.linalg.qr(design, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    threshold = RANK_TOLERANCE * diag.max()
    deficient = diag < threshold
    if np.any(deficient):
        raise SingularDesignError([names[piv[j]] for j in np.nonzero(deficient)[0]])
    coef_pivoted = scipy.linalg.solve_triangular(r, q.T @ dataset.outcome)
    coef = np.empty_like(coef_pivoted)
    coef[piv] = coef_pivoted

    try:
        rho = pearson(dataset.treatment, dataset.outcome)
    except UndefinedCorrelationError:
        rho = None
    confounder_rho: dict[str, float] = {}
    for j, name in enumerate(dataset.confounder_names):
        try:
            confounder_rho[name] = pearson(dataset.treatment, dataset.confounders[:, j])
        except UndefinedCorrelationError:
            confounder_rho[name] = float("nan")
    return CausalResult(
        treatment=dataset.treatment_name,
        pearson_rho=rho,
        ate=float(coef[1]),
        n=dataset.n,
        confounders=dataset.confounder_names,
        confounder_correlations=confounder_rho,
        dropped=dataset.dropped,
    )


def snippet_treatment_score(
    annotated, treatment: str, stat: AggregationStatistic
) -> float | None:
    """Snippet-level concept score: aggregate of matching node scores.

    The treatment may name a node type or a category; snippets without the
    concept yield None (callers drop them rather than zero-fill).
    """
    category_names = {c.value for c in ConceptCategory}
    values = [
        ns.score
        for ns in annotated.nodes
        if ns.score is not None
        and (
            ns.node_type == treatment
            or (treatment in category_names and ns.category.value == treatment)
        )
    ]
    if not values:
        return None
    return aggregate_node(values, stat)


def build_dataset(
    corpus: list[SnippetRecord],
    taxonomy: Taxonomy,
    treatment: str,
    stat: AggregationStatistic = AggregationStatistic(),
    annotated_cache: dict[str, object] | None = None,
) -> CausalDataset:
    """Assemble (T, Y, Z) rows, computing loss and features on demand."""
    t_col, y_col, z_rows = [], [], []
    dropped = 0
    for snippet in corpus:
        annotated = None
        if annotated_cache is not None and snippet.id in annotated_cache:
            annotated = annotated_cache[snippet.id]
        if annotated is None:
            annotated = snippet_scores(snippet, taxonomy, stat)
            if annotated_cache is not None:
                annotated_cache[snippet.id] = annotated
        score = snippet_treatment_score(annotated, treatment, stat)
        if score is None:
            dropped += 1
            continue
        loss = snippet.loss
        if loss is None:
            loss = cross_entropy(snippet.tokens)
        features = snippet.features
        if features is None:
            features = compute_features(snippet.source, annotated.tree, snippet.tokens)
        t_col.append(score)
        y_col.append(loss)
        z_rows.append([float(getattr(features, name)) for name in DEFAULT_CONFOUNDERS])
    return CausalDataset(
        treatment_name=treatment,
        treatment=np.asarray(t_col),
        outcome=np.asarray(y_col),
        confounders=np.asarray(z_rows).reshape(len(t_col), len(DEFAULT_CONFOUNDERS)),
        dropped=dropped,
    )


def run_causal_suite(
    corpus: list[SnippetRecord],
    taxonomy: Taxonomy,
    treatments: list[str],
    stat: AggregationStatistic = AggregationStatistic(),
) -> tuple[list[CausalResult], list[str]]:
    """One CausalResult per treatment, ordered by treatment name.

    Treatments with too few rows or degenerate outcomes are skipped or
    reported with a warning instead of aborting the run.
    """
    results: list[CausalResult] = []
    warnings: list[str] = []
    cache: dict[str, object] = {}
    for treatment in sorted(treatments):
        dataset = build_dataset(corpus, taxonomy, treatment, stat, annotated_cache=cache)
        if dataset.n < dataset.min_rows():
            warnings.append(
                f"treatment {treatment!r} present in only {dataset.n} snippets "
                f"(needs {dataset.min_rows()}); skipped"
            )
            continue
        try:
            result = ate(dataset)
        except SingularDesignError as exc:
            warnings.append(f"treatment {treatment!r}: {exc}")
            continue
        if result.pearson_rho is None:
            warnings.append(
                f"treatment {treatment!r}: correlation undefined (zero variance)"
            )
        results.append(result)
    return results, warnings
