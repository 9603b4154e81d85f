"""Aligns syntax-tree nodes with the tokenizer tokens inside their spans.

A token belongs to a node when their byte spans intersect, so sub-word
tokens that straddle node boundaries are assigned to every node they touch
(strict containment would silently drop them). Nodes are keyed by preorder
index, which is stable and serializable.
"""

from __future__ import annotations

from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field

from .corpus import TokenRecord
from .syntax import SyntaxNode, SyntaxTree


class AlignmentError(ValueError):
    """Tokens inconsistent with the tree (e.g. span beyond source end)."""


@dataclass
class Alignment:
    """node preorder index -> ordered token indices whose spans intersect it."""

    node_tokens: dict[int, list[int]] = field(default_factory=dict)

    def tokens_for(self, node_id: int) -> list[int]:
        if node_id not in self.node_tokens:
            raise KeyError(f"unknown node id {node_id}")
        return self.node_tokens[node_id]

    def to_obj(self) -> dict[str, list[int]]:
        """JSON-friendly debug form, keys sorted numerically."""
        return {str(k): v for k, v in sorted(self.node_tokens.items())}


def preorder(tree: SyntaxTree) -> list[SyntaxNode]:
    """Nodes in preorder; list position is the node id used everywhere."""
    out: list[SyntaxNode] = []

    def visit(node: SyntaxNode) -> None:
        out.append(node)
        for child in node.children:
            visit(child)

    visit(tree.root)
    return out


def align(
    tree: SyntaxTree,
    tokens: list[TokenRecord],
    *,
    drop_whitespace: bool = False,
) -> Alignment:
    """Assign each token to every node whose byte span it intersects.

    Tokens are non-overlapping and sorted, so each node's token set is the
    contiguous index range [first token ending after node start, first token
    starting at/after node end). drop_whitespace skips tokens whose text is
    entirely whitespace (they intersect no terminal, only ancestors).
    """
    for i, tok in enumerate(tokens):
        if tok.end_byte > tree.source_len:
            raise AlignmentError(
                f"token {i} span [{tok.start_byte}, {tok.end_byte}) exceeds "
                f"source length {tree.source_len}"
            )
    keep = [
        i for i, tok in enumerate(tokens)
        if not (drop_whitespace and tok.text.strip() == "")
    ]
    starts = [tokens[i].start_byte for i in keep]
    ends = [tokens[i].end_byte for i in keep]

    node_tokens: dict[int, list[int]] = {}
    for node_id, node in enumerate(preorder(tree)):
        # intersect: tok.start < node.end and tok.end > node.start
        lo = bisect_right(ends, node.start_byte)
        hi = bisect_left(starts, node.end_byte)
        node_tokens[node_id] = [keep[j] for j in range(lo, hi)]
    return Alignment(node_tokens=node_tokens)


def node_ntp(alignment: Alignment, tokens: list[TokenRecord], node_id: int) -> list[float]:
    """Ordered ntp values for the node's tokens, skipping absent ones."""
    return [
        tokens[i].ntp
        for i in alignment.tokens_for(node_id)
        if tokens[i].ntp is not None
    ]
