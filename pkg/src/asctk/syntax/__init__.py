from .features import (
    CYCLOMATIC_NODE_TYPES,
    compute_features,
    count_errors,
    count_nodes,
    cyclomatic,
    line_count,
    tree_levels,
    whitespace_count,
)
from .parser import (
    GRAMMAR_NAME,
    GRAMMAR_VERSION,
    ParseEncodingError,
    SyntaxNode,
    SyntaxTree,
    parse,
)

__all__ = [
    "CYCLOMATIC_NODE_TYPES",
    "GRAMMAR_NAME",
    "GRAMMAR_VERSION",
    "ParseEncodingError",
    "SyntaxNode",
    "SyntaxTree",
    "compute_features",
    "count_errors",
    "count_nodes",
    "cyclomatic",
    "line_count",
    "parse",
    "tree_levels",
    "whitespace_count",
]
