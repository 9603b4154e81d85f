"""Tree measurements and per-snippet code features used as confounders."""

from __future__ import annotations

from ..corpus import CodeFeatures, TokenRecord
from .parser import SyntaxNode, SyntaxTree

# Decision-point node types for cyclomatic complexity: one unit per branch
# construct plus one per short-circuit operator, on top of the base path.
CYCLOMATIC_NODE_TYPES = frozenset({
    "if_statement",
    "elif_clause",
    "for_statement",
    "while_statement",
    "except_clause",
    "with_statement",
    "assert_statement",
    "boolean_operator",
    "conditional_expression",
    "if_clause",
    "for_in_clause",
    "case_clause",
})

_WHITESPACE_BYTES = frozenset(b" \t\n\r\x0b\x0c")


def count_nodes(tree: SyntaxTree) -> int:
    """Total node count: root, internal, terminal, and ERROR nodes alike."""
    return sum(1 for _ in tree.walk())


def tree_levels(tree: SyntaxTree) -> int:
    """Number of levels; a root-only tree has 1."""

    def depth(node: SyntaxNode) -> int:
        if not node.children:
            return 1
        return 1 + max(depth(c) for c in node.children)

    return depth(tree.root)


def count_errors(tree: SyntaxTree) -> int:
    return sum(1 for n in tree.walk() if n.node_type == "ERROR")


def cyclomatic(tree: SyntaxTree) -> int:
    """1 + number of decision-point nodes (see CYCLOMATIC_NODE_TYPES)."""
    return 1 + sum(1 for n in tree.walk() if n.node_type in CYCLOMATIC_NODE_TYPES)


def line_count(source: str) -> int:
    """Physical lines; a trailing newline does not open a new line."""
    if not source:
        return 0
    return source.count("\n") + (0 if source.endswith("\n") else 1)


def whitespace_count(source: str) -> int:
    return sum(1 for b in source.encode("utf-8") if b in _WHITESPACE_BYTES)


def compute_features(
    source: str, tree: SyntaxTree, tokens: list[TokenRecord]
) -> CodeFeatures:
    """Populate every CodeFeatures field from one parsed snippet."""
    return CodeFeatures(
        loc=line_count(source),
        whitespace_count=whitespace_count(source),
        token_count=len(tokens),
        n_ast_nodes=count_nodes(tree),
        ast_levels=tree_levels(tree),
        ast_errors=count_errors(tree),
        cyclomatic=cyclomatic(tree),
        sequence_size=sum(1 for t in tokens if t.ntp is not None),
    )
