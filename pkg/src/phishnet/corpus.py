"""Labeled web-page corpus handling: data model, manifest I/O, URL
normalization, sanitization/dedup and stratified splitting.

A corpus is a JSON-Lines manifest, one record per line:

    {"id": "...", "url": "...", "html": "<inline html>" | "html_path": "rel/path",
     "label": "legitimate" | "phishing"}

Exactly one of ``html`` / ``html_path`` must be present; ``html_path`` is
resolved relative to the manifest's directory.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path

import numpy as np

from .errors import DataError

_SCHEME_RE = re.compile(r"^(https?://|www\.)", re.IGNORECASE)


class Label(IntEnum):
    LEGITIMATE = 0
    PHISHING = 1

    @classmethod
    def from_name(cls, name: str) -> "Label":
        try:
            return cls[name.strip().upper()]
        except KeyError:
            raise DataError(f"unknown label {name!r}") from None

    @property
    def canonical_name(self) -> str:
        return self.name.lower()


@dataclass(frozen=True)
class WebPageSample:
    """One labeled (URL, HTML) pair; the unit all pipelines operate on."""

    id: str
    raw_url: str
    normalized_url: str
    html: str
    label: Label


@dataclass
class SanitizationReport:
    kept: int = 0
    dropped_empty_html: int = 0
    dropped_duplicate: int = 0

    @property
    def total_read(self) -> int:
        return self.kept + self.dropped_empty_html + self.dropped_duplicate

    def render(self) -> str:
        return (
            f"records read:       {self.total_read}\n"
            f"kept:               {self.kept}\n"
            f"dropped (empty):    {self.dropped_empty_html}\n"
            f"dropped (duplicate):{self.dropped_duplicate}\n"
        )


@dataclass
class DatasetSplit:
    train: list[WebPageSample]
    validation: list[WebPageSample]
    test: list[WebPageSample]
    seed: int = 0

    def __iter__(self):
        return iter((self.train, self.validation, self.test))


def normalize_url(raw_url: str) -> str:
    """Strip leading ``http://`` / ``https://`` / ``www.`` prefixes.

    Stripping repeats until no prefix remains, which makes the function
    idempotent even on pathological inputs like ``http://www.http://x``.
    Everything else (case, path, query) is preserved verbatim.
    """
    url = raw_url
    while True:
        m = _SCHEME_RE.match(url)
        if m is None:
            return url
        url = url[m.end():]


class ManifestError(DataError):
    """Malformed manifest record; carries the 1-based line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"manifest line {line_no}: {message}")
        self.line_no = line_no


def _read_record(line_no: int, line: str, base_dir: Path) -> WebPageSample:
    try:
        record = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ManifestError(line_no, f"invalid JSON ({exc.msg})") from None
    if not isinstance(record, dict):
        raise ManifestError(line_no, "record is not a JSON object")
    for key in ("id", "url", "label"):
        if key not in record:
            raise ManifestError(line_no, f"missing field {key!r}")
    has_inline = "html" in record
    has_path = "html_path" in record
    if has_inline == has_path:
        raise ManifestError(line_no, "need exactly one of 'html' or 'html_path'")
    if has_inline:
        html = record["html"]
        if not isinstance(html, str):
            raise ManifestError(line_no, "'html' must be a string")
    else:
        html_file = base_dir / record["html_path"]
        if not html_file.is_file():
            raise ManifestError(line_no, f"referenced HTML file not found: {record['html_path']}")
        html = html_file.read_bytes().decode("utf-8", errors="replace")
    try:
        label = Label.from_name(str(record["label"]))
    except DataError as exc:
        raise ManifestError(line_no, str(exc)) from None
    raw_url = str(record["url"])
    return WebPageSample(
        id=str(record["id"]),
        raw_url=raw_url,
        normalized_url=normalize_url(raw_url),
        html=html,
        label=label,
    )


def load_manifest(path: str | Path) -> tuple[list[WebPageSample], SanitizationReport]:
    """Read a JSON-Lines manifest, normalizing URLs and sanitizing samples.

    Drops samples whose HTML is empty/whitespace-only and exact duplicates
    keyed on (normalized_url, sha256 of html), keeping the first occurrence.
    Survivor order follows the manifest. Malformed records raise
    ManifestError with the offending line number.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"manifest not found: {path}")
    base_dir = path.parent
    samples: list[WebPageSample] = []
    report = SanitizationReport()
    seen: set[tuple[str, str]] = set()
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            sample = _read_record(line_no, line, base_dir)
            if not sample.html.strip():
                report.dropped_empty_html += 1
                continue
            key = (sample.normalized_url, hashlib.sha256(sample.html.encode("utf-8")).hexdigest())
            if key in seen:
                report.dropped_duplicate += 1
                continue
            seen.add(key)
            samples.append(sample)
            report.kept += 1
    return samples, report


def write_manifest(path: str | Path, samples: list[WebPageSample]) -> None:
    """Write samples as a JSON-Lines manifest with inline HTML."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for s in samples:
            record = {
                "id": s.id,
                "url": s.raw_url,
                "html": s.html,
                "label": s.label.canonical_name,
            }
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def _largest_remainder_counts(n: int, ratios: tuple[float, float, float]) -> list[int]:
    exact = [n * r for r in ratios]
    base = [math.floor(e) for e in exact]
    leftover = n - sum(base)
    order = sorted(range(3), key=lambda i: (-(exact[i] - base[i]), i))
    for i in order[:leftover]:
        base[i] += 1
    return base


def split(
    samples: list[WebPageSample],
    seed: int,
    ratios: tuple[float, float, float] = (0.8, 0.1, 0.1),
) -> DatasetSplit:
    """Stratified, seeded train/validation/test partition.

    Within each class the samples are shuffled, then allocated per-class
    counts by largest-remainder rounding so the three lists partition the
    input exactly and each split preserves the global class ratio. After
    allocation every nonzero-ratio split is guaranteed at least one sample
    per class (counts get rebalanced if rounding left a zero).
    """
    if not samples:
        raise DataError("cannot split an empty sample list")
    if len(ratios) != 3 or any(r < 0 for r in ratios):
        raise DataError("ratios must be three non-negative fractions")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise DataError(f"ratios must sum to 1.0, got {sum(ratios)}")

    nonzero = [i for i, r in enumerate(ratios) if r > 0]
    by_class: dict[Label, list[WebPageSample]] = {}
    for s in samples:
        by_class.setdefault(s.label, []).append(s)

    rng = np.random.default_rng(seed)
    parts: list[list[WebPageSample]] = [[], [], []]
    for label in sorted(by_class):
        members = by_class[label]
        if len(members) < len(nonzero):
            raise DataError(
                f"class {label.canonical_name} has {len(members)} samples, "
                f"fewer than the {len(nonzero)} nonzero splits"
            )
        counts = _largest_remainder_counts(len(members), tuple(ratios))
        # Rounding can starve a small split of a small class entirely;
        # move one over from the biggest allocation.
        for i in nonzero:
            while counts[i] == 0:
                donor = max(range(3), key=lambda j: counts[j])
                counts[donor] -= 1
                counts[i] += 1
        perm = rng.permutation(len(members))
        shuffled = [members[j] for j in perm]
        offset = 0
        for i in range(3):
            parts[i].extend(shuffled[offset:offset + counts[i]])
            offset += counts[i]

    for part in parts:
        rng.shuffle(part)  # type: ignore[arg-type]
    return DatasetSplit(train=parts[0], validation=parts[1], test=parts[2], seed=seed)
