"""Tolerant start-tag scanner for raw, possibly malformed HTML.

Emits one event per start tag: (lower-cased name, attribute map, self-closing
flag). Comments and <script> element bodies are skipped so markup embedded in
script strings is never counted as page structure. Errors are never repaired
and never raised: unclosed tags at end of input are dropped, stray '<' is
treated as text, and the scanner terminates on every byte sequence.
"""

from __future__ import annotations

import re
from typing import Iterator, NamedTuple

_SCRIPT_END = re.compile(r"</script", re.IGNORECASE)
_NAME_CHARS = frozenset("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789-:")
_SPACE = frozenset(" \t\n\r\f\v")


class TagEvent(NamedTuple):
    name: str
    attrs: dict[str, str]
    self_closing: bool


def _scan_attrs(html: str, i: int) -> tuple[dict[str, str], bool, int] | None:
    """Parse attributes from position i up to '>'.

    Returns (attrs, self_closing, position after '>'), or None when the tag
    never closes (end of input inside the tag).
    """
    n = len(html)
    attrs: dict[str, str] = {}
    self_closing = False
    while True:
        while i < n and (html[i] in _SPACE or html[i] == "/"):
            if html[i] == "/":
                self_closing = True
            else:
                self_closing = False
            i += 1
        if i >= n:
            return None
        if html[i] == ">":
            return attrs, self_closing, i + 1
        self_closing = False
        start = i
        while i < n and html[i] not in _SPACE and html[i] not in "=/>":
            i += 1
        name = html[start:i].lower()
        if i >= n:
            return None
        value = ""
        while i < n and html[i] in _SPACE:
            i += 1
        if i < n and html[i] == "=":
            i += 1
            while i < n and html[i] in _SPACE:
                i += 1
            if i >= n:
                return None
            quote = html[i]
            if quote in "\"'":
                end = html.find(quote, i + 1)
                if end == -1:
                    return None
                value = html[i + 1:end]
                i = end + 1
            else:
                start = i
                while i < n and html[i] not in _SPACE and html[i] != ">":
                    i += 1
                value = html[start:i]
        if name and name not in attrs:  # first occurrence wins
            attrs[name] = value


def scan_tags(html: str) -> Iterator[TagEvent]:
    """Yield TagEvent for every start tag in document order."""
    i = 0
    n = len(html)
    while i < n:
        i = html.find("<", i)
        if i == -1:
            return
        nxt = html[i + 1] if i + 1 < n else ""
        if html.startswith("<!--", i):
            end = html.find("-->", i + 4)
            i = n if end == -1 else end + 3
            continue
        if nxt in "!?":
            end = html.find(">", i + 1)
            i = n if end == -1 else end + 1
            continue
        if nxt == "/":
            end = html.find(">", i + 2)
            i = n if end == -1 else end + 1
            continue
        if not nxt.isascii() or not nxt.isalpha():
            i += 1  # stray '<' is text
            continue
        j = i + 1
        while j < n and html[j] in _NAME_CHARS:
            j += 1
        name = html[i + 1:j].lower()
        parsed = _scan_attrs(html, j)
        if parsed is None:
            return  # unclosed tag at end of input: dropped
        attrs, self_closing, i = parsed
        yield TagEvent(name, attrs, self_closing)
        if name == "script" and not self_closing:
            m = _SCRIPT_END.search(html, i)
            if m is None:
                return
            i = m.start()  # the end-tag branch consumes it
