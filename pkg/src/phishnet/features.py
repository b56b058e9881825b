"""The 31 manual features: 12 URL-lexical and 19 HTML-structural.

URL conventions (inputs are normalized URLs, scheme and leading www already
stripped): the hostname is everything before the first '/', hostname labels
split on '.', the registered domain is the last two labels, and any labels
before it are subdomains. Misleading words match case-insensitively as
substrings anywhere in the URL.

HTML conventions: a <script> with a src pointing at a different host is
external; same-host, relative-src or inline <script> is internal; embedded
JavaScript means on*-prefixed event-handler attributes (one per attribute).
Links via <a href> follow the same host rule. Script presence/count covers
all <script> tags regardless of kind.
"""

from __future__ import annotations

import csv
import re
from dataclasses import astuple, dataclass, fields
from pathlib import Path

import numpy as np

from .corpus import Label
from .errors import DataError
from .htmlscan import scan_tags

DEFAULT_MISLEADING_WORDS = (
    "login", "signin", "bank", "account", "admin",
    "secure", "verify", "update", "confirm", "paypal",
)

_ABSOLUTE_RE = re.compile(r"^[a-zA-Z][a-zA-Z0-9+.-]*://")


@dataclass(frozen=True)
class UrlFeatures:
    misleading_word_count: int
    slash_question_count: int
    digit_count: int
    dot_count: int
    hyphen_underscore_count: int
    equals_ampersand_count: int
    two_letter_subdomain_count: int
    semicolon_count: int
    subdomain_count: int
    has_subdomain: int
    hostname_digit_percent: float
    url_length: int


@dataclass(frozen=True)
class HtmlFeatures:
    script_present: int
    noscript_present: int
    internal_script_present: int
    external_script_present: int
    embedded_script_present: int
    script_count: int
    noscript_count: int
    internal_script_count: int
    external_script_count: int
    embedded_script_count: int
    internal_link_present: int
    external_link_present: int
    image_present: int
    iframe_present: int
    image_count: int
    internal_link_count: int
    external_link_count: int
    iframe_count: int
    whitespace_percent: float


FEATURE_NAMES: tuple[str, ...] = tuple(
    f"url_{f.name}" for f in fields(UrlFeatures)
) + tuple(f"html_{f.name}" for f in fields(HtmlFeatures))


def hostname_of(normalized_url: str) -> str:
    return normalized_url.split("/", 1)[0]


def extract_url_features(
    normalized_url: str,
    wordlist: tuple[str, ...] = DEFAULT_MISLEADING_WORDS,
) -> UrlFeatures:
    if not normalized_url:
        raise DataError("cannot extract features from an empty URL")
    url = normalized_url
    low = url.lower()
    hostname = hostname_of(url)
    labels = hostname.split(".")
    sub_labels = labels[:-2] if len(labels) > 2 else []
    host_digits = sum(c.isdigit() for c in hostname)
    return UrlFeatures(
        misleading_word_count=sum(low.count(w) for w in wordlist),
        slash_question_count=url.count("/") + url.count("?"),
        digit_count=sum(c.isdigit() for c in url),
        dot_count=url.count("."),
        hyphen_underscore_count=url.count("-") + url.count("_"),
        equals_ampersand_count=url.count("=") + url.count("&"),
        two_letter_subdomain_count=sum(len(lab) == 2 for lab in sub_labels),
        semicolon_count=url.count(";"),
        subdomain_count=len(sub_labels),
        has_subdomain=int(bool(sub_labels)),
        hostname_digit_percent=100.0 * host_digits / len(hostname) if hostname else 0.0,
        url_length=len(url),
    )


def _host_of_reference(ref: str) -> str | None:
    """Host of an absolute URL reference, else None for relative ones."""
    ref = ref.strip()
    if ref.startswith("//"):
        rest = ref[2:]
    else:
        m = _ABSOLUTE_RE.match(ref)
        if m is None:
            return None
        rest = ref[m.end():]
    host = re.split(r"[/?#]", rest, maxsplit=1)[0].lower()
    host = host.rsplit("@", 1)[-1]          # userinfo
    if ":" in host:
        host = host.split(":", 1)[0]        # port
    if host.startswith("www."):
        host = host[4:]
    return host


def _same_host(ref: str, page_host: str) -> bool:
    """True when the reference stays on the sample's own host."""
    host = _host_of_reference(ref)
    if host is None:
        return True
    page = page_host.lower()
    if ":" in page:
        page = page.split(":", 1)[0]
    return host == page


def extract_html_features(html: str, page_host: str) -> HtmlFeatures:
    scripts = noscripts = internal_js = external_js = embedded_js = 0
    internal_links = external_links = images = iframes = 0
    if html:
        for tag in scan_tags(html):
            embedded_js += sum(
                1 for a in tag.attrs if a.startswith("on") and len(a) > 2
            )
            if tag.name == "script":
                scripts += 1
                src = tag.attrs.get("src")
                if src is not None and not _same_host(src, page_host):
                    external_js += 1
                else:
                    internal_js += 1
            elif tag.name == "noscript":
                noscripts += 1
            elif tag.name == "a":
                href = tag.attrs.get("href")
                if href is None:
                    continue
                if _same_host(href, page_host):
                    internal_links += 1
                else:
                    external_links += 1
            elif tag.name == "img":
                images += 1
            elif tag.name == "iframe":
                iframes += 1
    whitespace = sum(c.isspace() for c in html)
    return HtmlFeatures(
        script_present=int(scripts > 0),
        noscript_present=int(noscripts > 0),
        internal_script_present=int(internal_js > 0),
        external_script_present=int(external_js > 0),
        embedded_script_present=int(embedded_js > 0),
        script_count=scripts,
        noscript_count=noscripts,
        internal_script_count=internal_js,
        external_script_count=external_js,
        embedded_script_count=embedded_js,
        internal_link_present=int(internal_links > 0),
        external_link_present=int(external_links > 0),
        image_present=int(images > 0),
        iframe_present=int(iframes > 0),
        image_count=images,
        internal_link_count=internal_links,
        external_link_count=external_links,
        iframe_count=iframes,
        whitespace_percent=100.0 * whitespace / len(html) if html else 0.0,
    )


def to_feature_vector(u: UrlFeatures, h: HtmlFeatures) -> np.ndarray:
    vec = np.array(astuple(u) + astuple(h), dtype=np.float64)
    assert vec.shape == (31,)
    return vec


def sample_features(sample, wordlist: tuple[str, ...] = DEFAULT_MISLEADING_WORDS) -> np.ndarray:
    u = extract_url_features(sample.normalized_url, wordlist)
    h = extract_html_features(sample.html, hostname_of(sample.normalized_url))
    return to_feature_vector(u, h)


def load_wordlist(path: str | Path) -> tuple[str, ...]:
    """One lowercase word per line; blank lines and # comments ignored."""
    words = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        word = line.split("#", 1)[0].strip().lower()
        if word:
            words.append(word)
    if not words:
        raise DataError(f"wordlist {path} contains no words")
    return tuple(words)


def write_feature_csv(path: str | Path, ids, labels, matrix: np.ndarray) -> None:
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.shape[1] != len(FEATURE_NAMES):
        raise DataError(f"feature matrix has {matrix.shape[1]} columns, expected 31")
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "label", *FEATURE_NAMES])
        for sid, label, row in zip(ids, labels, matrix):
            name = label.canonical_name if isinstance(label, Label) else Label(int(label)).canonical_name
            writer.writerow([sid, name, *[repr(float(x)) for x in row]])


def read_feature_csv(path: str | Path) -> tuple[list[str], np.ndarray, np.ndarray]:
    """Returns (ids, labels 0/1, feature matrix)."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"feature CSV not found: {path}")
    with path.open("r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[:2] != ["id", "label"]:
            raise DataError(f"{path}: expected header starting with id,label")
        if tuple(header[2:]) != FEATURE_NAMES:
            raise DataError(f"{path}: feature columns do not match the canonical 31 names")
        ids: list[str] = []
        labels: list[int] = []
        rows: list[list[float]] = []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2 + len(FEATURE_NAMES):
                raise DataError(f"{path} line {line_no}: wrong column count")
            ids.append(row[0])
            labels.append(int(Label.from_name(row[1])))
            rows.append([float(x) for x in row[2:]])
    if not rows:
        raise DataError(f"{path}: no data rows")
    return ids, np.asarray(labels, dtype=np.int64), np.asarray(rows, dtype=np.float64)
