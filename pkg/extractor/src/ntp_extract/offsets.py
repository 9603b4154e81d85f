"""Character-span to UTF-8 byte-span conversion."""

from __future__ import annotations


class OffsetError(ValueError):
    """A character span does not fit the text."""


def offsets_to_bytes(
    text: str, char_spans: list[tuple[int, int]]
) -> list[tuple[int, int]]:
    """Convert (start, end) character spans into UTF-8 byte spans.

    Pure function; spans may repeat or overlap (byte-level tokenizers emit
    duplicate character spans for multi-byte characters), they just have to
    lie within the text.
    """
    # byte offset of each character boundary, including the final one
    boundaries = [0] * (len(text) + 1)
    pos = 0
    for i, ch in enumerate(text):
        pos += len(ch.encode("utf-8"))
        boundaries[i + 1] = pos
    out = []
    for start, end in char_spans:
        if not (0 <= start <= end <= len(text)):
            raise OffsetError(
                f"character span ({start}, {end}) out of range for text of "
                f"length {len(text)}"
            )
        out.append((boundaries[start], boundaries[end]))
    return out
