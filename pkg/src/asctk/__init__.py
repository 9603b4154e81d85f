"""Toolkit for aligning language-model token predictions to syntax trees.

Pipeline stages: parse Python snippets into concrete syntax trees, align
tokenizer tokens to nodes by byte span, aggregate next-token probabilities
into per-node and per-concept scores, estimate causal effects of concept
scores on cross-entropy loss, and render annotated trees.
"""

__version__ = "0.1.0"
SCHEMA_VERSION = 1
