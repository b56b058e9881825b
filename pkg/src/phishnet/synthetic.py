"""Seeded synthetic corpus generator.

Produces labeled (URL, HTML) pairs with a configurable class ratio.
Phishing samples carry plantable signals in either channel: credential
bait tokens in the URL, and external-script/iframe/credential-form markers
in the HTML. Signal rates are per-channel so single-branch models can be
exercised on their own channel. Everything is drawn from one seeded
generator, so a (size, seed, rates) triple always yields the same corpus.
"""

from __future__ import annotations

import numpy as np

from .corpus import Label, WebPageSample, normalize_url
from .errors import DataError

_BENIGN_WORDS = [
    "garden", "weather", "recipe", "museum", "cinema", "library", "travel",
    "sports", "market", "school", "gallery", "kitchen", "journal", "nature",
    "music", "photo", "city", "street", "book", "green",
]
_TLDS = ["com", "org", "net", "info", "co.uk", "io"]
_PATH_WORDS = ["home", "about", "news", "articles", "contact", "archive", "index", "tags"]
DEFAULT_BAIT_TOKENS = ("login", "verify", "secure", "account", "update", "signin", "bank")
SHIFTED_BAIT_TOKENS = ("confirm", "wallet", "billing", "support", "access", "portal", "paypal")
_FILLER = (
    "the quick results from our latest field report are in and readers keep "
    "asking for more details about the project and its timeline"
).split()


def _benign_url(rng: np.random.Generator) -> str:
    scheme = rng.choice(["http://", "https://", "http://www.", ""])
    host = f"{rng.choice(_BENIGN_WORDS)}{rng.choice(_BENIGN_WORDS)}.{rng.choice(_TLDS)}"
    path = "/".join(rng.choice(_PATH_WORDS, size=rng.integers(1, 3)))
    suffix = f"{rng.integers(1, 999)}" if rng.random() < 0.3 else ""
    return f"{scheme}{host}/{path}{suffix}"


def _phishing_url(rng: np.random.Generator, with_signal: bool, bait: tuple[str, ...]) -> str:
    if not with_signal:
        return _benign_url(rng)
    scheme = rng.choice(["http://", "https://", ""])
    picks = rng.choice(bait, size=2, replace=False)
    brand = rng.choice(_BENIGN_WORDS)
    host = f"{picks[0]}-{brand}.{rng.choice(_TLDS)}"
    if rng.random() < 0.5:
        host = f"{rng.choice(bait)}.{host}"
    query = f"?id={rng.integers(10**4, 10**6)}&session={rng.integers(10**3, 10**5)}"
    return f"{scheme}{host}/{picks[1]}/confirm{query}"


def _paragraph(rng: np.random.Generator, n_words: int) -> str:
    words = rng.choice(_FILLER, size=n_words)
    return " ".join(words)


def _benign_html(rng: np.random.Generator, approx_chars: int) -> str:
    title = f"{rng.choice(_BENIGN_WORDS)} {rng.choice(_PATH_WORDS)}"
    parts = [
        "<html><head>",
        f"<title>{title}</title>",
        '<meta charset="utf-8">',
        "</head><body>",
        f"<h1>{title}</h1>",
        f'<a href="/{rng.choice(_PATH_WORDS)}">more</a>',
        f'<img src="/static/banner{rng.integers(1, 9)}.png">',
    ]
    while sum(len(p) for p in parts) < approx_chars - 120:
        parts.append(f"<p>{_paragraph(rng, int(rng.integers(8, 18)))}</p>")
    parts.append("</body></html>")
    return "\n".join(parts)


def _phishing_html(
    rng: np.random.Generator, approx_chars: int, with_signal: bool, tracker_domain: str
) -> str:
    base = _benign_html(rng, approx_chars)
    if not with_signal:
        return base
    tracker = f"http://collect{rng.integers(1, 99)}.{tracker_domain}/t.js"
    frame = f"http://frames{rng.integers(1, 99)}.offsite-host.example/overlay"
    injected = (
        f'<script src="{tracker}"></script>\n'
        f'<iframe src="{frame}" width="1" height="1"></iframe>\n'
        '<form action="/collect" method="post">'
        "please verify your account password"
        '<input type="password" name="pass"></form>'
    )
    # keep the markers inside the head-truncated window
    head, sep, tail = base.partition("<h1")
    return head + injected + "\n" + sep + tail


def generate_corpus(
    size: int,
    seed: int,
    phish_fraction: float = 1.0 / 11.0,
    url_signal_rate: float = 1.0,
    html_signal_rate: float = 1.0,
    approx_html_chars: int = 1200,
    bait_tokens: tuple[str, ...] = DEFAULT_BAIT_TOKENS,
    tracker_domain: str = "track-stats.example",
    id_prefix: str = "",
) -> list[WebPageSample]:
    """Generate `size` samples at roughly the given phishing fraction.

    The default fraction keeps one phishing page per ten legitimate ones.
    """
    if size < 2:
        raise DataError("corpus size must be at least 2")
    if not 0.0 < phish_fraction < 1.0:
        raise DataError("phish_fraction must lie strictly between 0 and 1")
    rng = np.random.default_rng(seed)
    n_phish = max(1, round(size * phish_fraction))
    n_legit = size - n_phish
    samples: list[WebPageSample] = []
    for i in range(n_legit):
        url = _benign_url(rng)
        samples.append(
            WebPageSample(
                id=f"{id_prefix}legit-{i:05d}",
                raw_url=url,
                normalized_url=normalize_url(url),
                html=_benign_html(rng, approx_html_chars),
                label=Label.LEGITIMATE,
            )
        )
    for i in range(n_phish):
        url = _phishing_url(rng, rng.random() < url_signal_rate, bait_tokens)
        html = _phishing_html(
            rng, approx_html_chars, rng.random() < html_signal_rate, tracker_domain
        )
        samples.append(
            WebPageSample(
                id=f"{id_prefix}phish-{i:05d}",
                raw_url=url,
                normalized_url=normalize_url(url),
                html=html,
                label=Label.PHISHING,
            )
        )
    order = rng.permutation(len(samples))
    return [samples[j] for j in order]


def shifted_markers_corpus(size: int, seed: int, **kwargs) -> list[WebPageSample]:
    """A second distribution for transfer experiments: same benign pool,
    different bait vocabulary and tracker hosts."""
    return generate_corpus(
        size,
        seed,
        bait_tokens=SHIFTED_BAIT_TOKENS,
        tracker_domain="metrics-hub.example",
        id_prefix="t2-",
        **kwargs,
    )
