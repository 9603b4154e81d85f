"""Renders annotated trees as deterministic dot, SVG, or HTML documents.

Scores map onto a diverging palette: saturated red at 0.0, white at 0.5,
saturated blue at 1.0, linear channel interpolation between; unscored nodes
are neutral gray. ERROR nodes keep a distinct heavy outline and are always
labeled. Output is a pure function of its inputs (stable node ordering, no
timestamps), so golden-file comparisons are byte-exact.
"""

from __future__ import annotations

import html
from dataclasses import dataclass
from enum import Enum

from .alignment import preorder
from .asceval import AnnotatedTree
from .corpus import TokenRecord

COLOR_BEST = "#0B61A4"  # score 1.0
COLOR_WORST = "#C4302B"  # score 0.0
COLOR_MIDPOINT = "#FFFFFF"  # score 0.5
COLOR_UNSCORED = "#C0C0C0"
COLOR_ERROR_OUTLINE = "#7A0C0C"


class VizConfigError(ValueError):
    pass


class RenderMode(str, Enum):
    PARTIAL = "partial"  # non-terminal nodes only
    COMPLETE = "complete"  # all nodes
    SEQUENCE = "sequence"  # tokens in a linear strip


class OutputFormat(str, Enum):
    DOT = "dot"
    SVG = "svg"
    HTML = "html"


@dataclass(frozen=True)
class RenderConfig:
    mode: RenderMode = RenderMode.PARTIAL
    fmt: OutputFormat = OutputFormat.DOT
    show_scores: bool = True
    precision: int = 2


def _hex_to_rgb(color: str) -> tuple[int, int, int]:
    return int(color[1:3], 16), int(color[3:5], 16), int(color[5:7], 16)


def _lerp(a: tuple[int, int, int], b: tuple[int, int, int], t: float) -> str:
    channels = (round(a[i] + (b[i] - a[i]) * t) for i in range(3))
    return "#" + "".join(f"{c:02X}" for c in channels)


def color_of(score: float | None) -> str:
    """Diverging color for a probability; gray when the score is absent."""
    if score is None:
        return COLOR_UNSCORED
    score = min(1.0, max(0.0, score))
    white = _hex_to_rgb(COLOR_MIDPOINT)
    if score >= 0.5:
        return _lerp(white, _hex_to_rgb(COLOR_BEST), (score - 0.5) / 0.5)
    return _lerp(white, _hex_to_rgb(COLOR_WORST), (0.5 - score) / 0.5)


def _luma(color: str) -> float:
    r, g, b = _hex_to_rgb(color)
    return 0.299 * r + 0.587 * g + 0.114 * b


def _text_color(fill: str) -> str:
    return "#000000" if _luma(fill) > 140 else "#FFFFFF"


@dataclass
class _Element:
    """One renderable box: either a tree node or a sequence token."""

    elem_id: int
    label: str
    fill: str
    is_error: bool
    parent: int | None  # element id of parent, for tree modes
    depth: int


def _score_text(score: float | None, precision: int) -> str:
    return "--" if score is None else f"{score:.{precision}f}"


def _tree_elements(annotated: AnnotatedTree, config: RenderConfig) -> list[_Element]:
    order = preorder(annotated.tree)
    include = [
        config.mode == RenderMode.COMPLETE or bool(node.children) for node in order
    ]
    # map original preorder ids to element ids over included nodes
    elem_ids: dict[int, int] = {}
    elements: list[_Element] = []
    parents: dict[int, int | None] = {0: None}
    depths: dict[int, int] = {0: 0}
    index = {id(node): i for i, node in enumerate(order)}
    for i, node in enumerate(order):
        for child in node.children:
            parents[index[id(child)]] = i
            depths[index[id(child)]] = depths[i] + 1
    for i, node in enumerate(order):
        if not include[i]:
            continue
        ns = annotated.nodes[i]
        label = node.node_type
        if config.show_scores:
            label += "\n" + _score_text(ns.score, config.precision)
        parent = parents.get(i)
        while parent is not None and not include[parent]:
            parent = parents.get(parent)
        elem_ids[i] = len(elements)
        elements.append(
            _Element(
                elem_id=len(elements),
                label=label,
                fill=color_of(ns.score),
                is_error=node.node_type == "ERROR",
                parent=elem_ids[parent] if parent is not None else None,
                depth=depths[i],
            )
        )
    return elements


def _sequence_elements(tokens: list[TokenRecord], config: RenderConfig) -> list[_Element]:
    elements = []
    for i, tok in enumerate(tokens):
        label = tok.text
        if config.show_scores:
            label += "\n" + _score_text(tok.ntp, config.precision)
        elements.append(
            _Element(
                elem_id=i,
                label=label,
                fill=color_of(tok.ntp),
                is_error=False,
                parent=i - 1 if i > 0 else None,
                depth=0,
            )
        )
    return elements


def _elements(
    annotated: AnnotatedTree, tokens: list[TokenRecord], config: RenderConfig
) -> list[_Element]:
    if config.mode == RenderMode.SEQUENCE:
        return _sequence_elements(tokens, config)
    return _tree_elements(annotated, config)


def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")


def render_dot(
    annotated: AnnotatedTree, tokens: list[TokenRecord], config: RenderConfig
) -> str:
    elements = _elements(annotated, tokens, config)
    sequence = config.mode == RenderMode.SEQUENCE
    lines = ["digraph snippet {"]
    if sequence:
        lines.append("  rankdir=LR;")
    lines.append("  graph [ordering=out];")
    lines.append('  node [shape=box, style="filled,rounded", fontname="Helvetica"];')
    for el in elements:
        attrs = [
            f'label="{_dot_escape(el.label)}"',
            f'fillcolor="{el.fill}"',
            f'fontcolor="{_text_color(el.fill)}"',
        ]
        if el.is_error:
            attrs.append(f'color="{COLOR_ERROR_OUTLINE}"')
            attrs.append("penwidth=2.5")
        lines.append(f"  n{el.elem_id} [{', '.join(attrs)}];")
    for el in elements:
        if el.parent is not None:
            style = " [style=invis]" if sequence else ""
            lines.append(f"  n{el.parent} -> n{el.elem_id}{style};")
    lines.append("}")
    return "\n".join(lines) + "\n"


_BOX_W = 120
_BOX_H = 44
_GAP_X = 16
_GAP_Y = 40
_PAD = 12


def _svg_layout(elements: list[_Element]) -> dict[int, tuple[float, float]]:
    """x-center/y-top per element: leaves in order, parents over children."""
    children: dict[int, list[int]] = {}
    for el in elements:
        if el.parent is not None:
            children.setdefault(el.parent, []).append(el.elem_id)
    pos: dict[int, tuple[float, float]] = {}
    next_slot = [0]

    def place(eid: int) -> float:
        el = elements[eid]
        kids = children.get(eid, [])
        if not kids:
            x = _PAD + next_slot[0] * (_BOX_W + _GAP_X) + _BOX_W / 2
            next_slot[0] += 1
        else:
            xs = [place(k) for k in kids]
            x = sum(xs) / len(xs)
        pos[eid] = (x, _PAD + el.depth * (_BOX_H + _GAP_Y))
        return x

    for el in elements:
        if el.parent is None:
            place(el.elem_id)
    return pos


def render_svg(
    annotated: AnnotatedTree, tokens: list[TokenRecord], config: RenderConfig
) -> str:
    elements = _elements(annotated, tokens, config)
    if config.mode == RenderMode.SEQUENCE:
        pos = {
            el.elem_id: (_PAD + i * (_BOX_W + _GAP_X) + _BOX_W / 2, _PAD)
            for i, el in enumerate(elements)
        }
    else:
        pos = _svg_layout(elements)
    width = max((x + _BOX_W / 2 for x, _ in pos.values()), default=0) + _PAD
    height = max((y + _BOX_H for _, y in pos.values()), default=0) + _PAD
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" '
        f'height="{height:.0f}" font-family="Helvetica" font-size="11">'
    ]
    for el in elements:
        if el.parent is None or config.mode == RenderMode.SEQUENCE:
            continue
        x1, y1 = pos[el.parent]
        x2, y2 = pos[el.elem_id]
        out.append(
            f'<line x1="{x1:.1f}" y1="{y1 + _BOX_H:.1f}" x2="{x2:.1f}" '
            f'y2="{y2:.1f}" stroke="#666666"/>'
        )
    for el in elements:
        x, y = pos[el.elem_id]
        stroke = COLOR_ERROR_OUTLINE if el.is_error else "#333333"
        stroke_w = 3 if el.is_error else 1
        out.append(
            f'<rect class="node" x="{x - _BOX_W / 2:.1f}" y="{y:.1f}" '
            f'width="{_BOX_W}" height="{_BOX_H}" rx="6" fill="{el.fill}" '
            f'stroke="{stroke}" stroke-width="{stroke_w}"/>'
        )
        lines = el.label.split("\n")
        for j, line in enumerate(lines):
            ty = y + 18 + j * 14
            out.append(
                f'<text x="{x:.1f}" y="{ty:.1f}" text-anchor="middle" '
                f'fill="{_text_color(el.fill)}">{html.escape(line)}</text>'
            )
    out.append("</svg>")
    return "\n".join(out) + "\n"


_LEGEND = (
    '<div class="legend">'
    f'<span style="background:{COLOR_WORST}">0.0</span>'
    '<span style="background:#E19894">0.25</span>'
    f'<span style="background:{COLOR_MIDPOINT}">0.5</span>'
    '<span style="background:#85B0D3">0.75</span>'
    f'<span style="background:{COLOR_BEST};color:#FFF">1.0</span>'
    f'<span style="background:{COLOR_UNSCORED}">no score</span>'
    " thresholds: erroneous &lt; 0.50, confident &ge; 0.60"
    "</div>"
)


def render_html(
    annotated: AnnotatedTree, tokens: list[TokenRecord], config: RenderConfig
) -> str:
    svg = render_svg(annotated, tokens, config)
    return (
        "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\">"
        "<style>.legend span{padding:2px 8px;margin-right:4px;"
        "border:1px solid #333;font-family:Helvetica}</style>"
        f"</head>\n<body>\n{_LEGEND}\n{svg}</body></html>\n"
    )


def render(
    annotated: AnnotatedTree,
    tokens: list[TokenRecord],
    config: RenderConfig,
) -> bytes:
    """Render one annotated snippet to document bytes per the config."""
    if config.fmt == OutputFormat.DOT:
        text = render_dot(annotated, tokens, config)
    elif config.fmt == OutputFormat.SVG:
        text = render_svg(annotated, tokens, config)
    elif config.fmt == OutputFormat.HTML:
        text = render_html(annotated, tokens, config)
    else:
        raise VizConfigError(f"unsupported output format: {config.fmt!r}")
    return text.encode("utf-8")
