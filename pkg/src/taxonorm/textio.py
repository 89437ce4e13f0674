"""Line-oriented stream helpers shared by the parsers."""

from __future__ import annotations

from typing import Iterable, Iterator


def iter_lines(stream: Iterable) -> Iterator[str]:
    """Iterate lines of a text or byte stream, decoding bytes as UTF-8."""
    for raw in stream:
        yield raw.decode("utf-8") if isinstance(raw, bytes) else raw
