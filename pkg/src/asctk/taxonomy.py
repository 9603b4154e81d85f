"""Concept categories: maps grammar node-type names to semantic groups.

The ten core categories plus two artifact sinks (Errors for ERROR nodes,
Uncategorized for anything unmapped) form a total function over node types.
The default mapping below covers every node type the bundled grammar emits,
including anonymous keyword/punctuation tokens; it can be exported, edited,
and reloaded as a JSON config.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path


class ConceptCategory(str, Enum):
    DATA_STRUCTURES = "DataStructures"
    DECISION = "Decision"
    EXCEPTIONS = "Exceptions"
    FUNCTIONAL_PROGRAMMING = "FunctionalProgramming"
    ITERATION = "Iteration"
    NATURAL_LANGUAGE = "NaturalLanguage"
    OPERATORS = "Operators"
    SCOPE = "Scope"
    TESTING = "Testing"
    TYPES = "Types"
    ERRORS = "Errors"
    UNCATEGORIZED = "Uncategorized"


class TaxonomyError(ValueError):
    """Bad taxonomy config: unknown category or duplicate node type."""


DEFAULT_TAXONOMY_VERSION = "default-1"

_DEFAULT_ROWS: dict[ConceptCategory, tuple[str, ...]] = {
    ConceptCategory.ITERATION: (
        "for_statement", "while_statement", "break_statement", "continue_statement",
        "for", "while", "break", "continue",
    ),
    ConceptCategory.DECISION: (
        "if_statement", "elif_clause", "else_clause", "conditional_expression",
        "match_statement", "case_clause", "case_pattern",
        "if", "elif", "else", "match", "case",
    ),
    ConceptCategory.EXCEPTIONS: (
        "try_statement", "except_clause", "finally_clause", "raise_statement",
        "try", "except", "finally", "raise",
    ),
    ConceptCategory.FUNCTIONAL_PROGRAMMING: (
        "lambda", "lambda_parameters", "for_in_clause", "if_clause",
        "list_comprehension", "set_comprehension", "dictionary_comprehension",
        "generator_expression", "yield", "await",
    ),
    ConceptCategory.NATURAL_LANGUAGE: (
        "identifier", "string", "concatenated_string", "comment", "dotted_name",
        "interpolation",
    ),
    ConceptCategory.OPERATORS: (
        "boolean_operator", "binary_operator", "unary_operator", "not_operator",
        "comparison_operator", "assignment", "augmented_assignment",
        "named_expression",
        "and", "or", "not", "in", "is",
        "=", "==", "!=", "<", ">", "<=", ">=", "<>",
        "+", "-", "*", "/", "//", "%", "**",
        "&", "|", "^", "<<", ">>", "~",
        ":=", "+=", "-=", "*=", "/=", "//=", "%=", "**=",
        "@=", "&=", "|=", "^=", ">>=", "<<=",
    ),
    ConceptCategory.SCOPE: (
        "module", "block", "parameters", "argument_list", "keyword_argument",
        "function_definition", "class_definition", "decorated_definition",
        "decorator", "call", "attribute", "expression_statement",
        "return_statement", "import_statement", "import_from_statement",
        "aliased_import", "global_statement", "nonlocal_statement",
        "delete_statement", "pass_statement", "with_statement",
        "default_parameter",
        "(", ")", "[", "]", "{", "}", ",", ":", ";", ".", "@",
        "def", "class", "import", "from", "as", "global", "nonlocal",
        "del", "pass", "with", "return", "async",
    ),
    ConceptCategory.TESTING: (
        "assert_statement", "assert",
    ),
    ConceptCategory.TYPES: (
        "type", "integer", "float", "true", "false", "none", "ellipsis",
        "typed_parameter", "typed_default_parameter", "->", "...",
        "True", "False", "None",
    ),
    ConceptCategory.DATA_STRUCTURES: (
        "list", "dictionary", "set", "tuple", "pair", "subscript", "slice",
        "list_splat", "dictionary_splat", "list_splat_pattern",
        "dictionary_splat_pattern",
    ),
    ConceptCategory.ERRORS: (
        "ERROR",
    ),
}


def _default_mapping() -> dict[str, ConceptCategory]:
    mapping: dict[str, ConceptCategory] = {}
    for category, node_types in _DEFAULT_ROWS.items():
        for node_type in node_types:
            if node_type in mapping:
                raise TaxonomyError(f"default taxonomy maps {node_type!r} twice")
            mapping[node_type] = category
    return mapping


@dataclass(frozen=True)
class Taxonomy:
    """Total node_type -> category function (Uncategorized as the default)."""

    mapping: dict[str, ConceptCategory] = field(default_factory=dict)
    version: str = "unversioned"

    def categorize(self, node_type: str) -> ConceptCategory:
        return self.mapping.get(node_type, ConceptCategory.UNCATEGORIZED)


def categorize(taxonomy: Taxonomy, node_type: str) -> ConceptCategory:
    """Deterministic total mapping; unmapped types go to Uncategorized."""
    return taxonomy.categorize(node_type)


def default_taxonomy() -> Taxonomy:
    return Taxonomy(mapping=_default_mapping(), version=DEFAULT_TAXONOMY_VERSION)


def _pairs_hook(pairs):
    keys = [k for k, _ in pairs]
    dupes = {k for k in keys if keys.count(k) > 1}
    if dupes:
        raise TaxonomyError(f"duplicate node_type key(s): {sorted(dupes)}")
    return dict(pairs)


def load_taxonomy(path: str | Path) -> Taxonomy:
    """Load a JSON taxonomy config: {"version": str, "mapping": {type: cat}}.

    Raises TaxonomyError on duplicate node_type keys or unknown category
    names. An empty file yields an empty mapping (everything Uncategorized).
    """
    text = Path(path).read_text(encoding="utf-8").strip()
    if not text:
        return Taxonomy(mapping={}, version="empty")
    try:
        obj = json.loads(text, object_pairs_hook=_pairs_hook)
    except json.JSONDecodeError as exc:
        raise TaxonomyError(f"taxonomy config is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise TaxonomyError("taxonomy config must be a JSON object")
    raw_mapping = obj.get("mapping", {})
    if not isinstance(raw_mapping, dict):
        raise TaxonomyError("taxonomy 'mapping' must be an object")
    known = {c.value: c for c in ConceptCategory}
    mapping: dict[str, ConceptCategory] = {}
    for node_type, name in raw_mapping.items():
        if name not in known:
            raise TaxonomyError(
                f"unknown category {name!r} for node type {node_type!r}; "
                f"expected one of {sorted(known)}"
            )
        mapping[node_type] = known[name]
    version = obj.get("version", "unversioned")
    if not isinstance(version, str):
        raise TaxonomyError("taxonomy 'version' must be a string")
    return Taxonomy(mapping=mapping, version=version)


def save_taxonomy(taxonomy: Taxonomy, path: str | Path) -> None:
    """Write the config format accepted by load_taxonomy (sorted keys)."""
    obj = {
        "version": taxonomy.version,
        "mapping": {k: v.value for k, v in sorted(taxonomy.mapping.items())},
    }
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=False) + "\n",
                          encoding="utf-8")
