"""Feature extraction against hand-counted oracles.

Every expected value in GOLDEN_PAIRS was counted by hand from the literal
URL/HTML strings under the documented rules (substring misleading-word
matching, hostname = text before the first '/', registered domain = last
two labels, script/link host comparison after www/port stripping).
"""

import numpy as np
import pytest

from phishnet.corpus import normalize_url
from phishnet.errors import DataError
from phishnet.features import (
    DEFAULT_MISLEADING_WORDS,
    FEATURE_NAMES,
    HtmlFeatures,
    UrlFeatures,
    extract_html_features,
    extract_url_features,
    hostname_of,
    load_wordlist,
    read_feature_csv,
    to_feature_vector,
    write_feature_csv,
)
from phishnet.synthetic import generate_corpus


def url_f(**kw):
    base = dict(
        misleading_word_count=0, slash_question_count=0, digit_count=0,
        dot_count=0, hyphen_underscore_count=0, equals_ampersand_count=0,
        two_letter_subdomain_count=0, semicolon_count=0, subdomain_count=0,
        has_subdomain=0, hostname_digit_percent=0.0, url_length=0,
    )
    base.update(kw)
    return UrlFeatures(**base)


def html_f(**kw):
    base = dict(
        script_present=0, noscript_present=0, internal_script_present=0,
        external_script_present=0, embedded_script_present=0, script_count=0,
        noscript_count=0, internal_script_count=0, external_script_count=0,
        embedded_script_count=0, internal_link_present=0, external_link_present=0,
        image_present=0, iframe_present=0, image_count=0, internal_link_count=0,
        external_link_count=0, iframe_count=0, whitespace_percent=0.0,
    )
    base.update(kw)
    return HtmlFeatures(**base)


def ws(count, html):
    return 100.0 * count / len(html)


H1 = "<script src='http://evil.com/x.js'></script>"
H3 = "<a href='/home'></a><a href='http://other.com'></a><div onclick='x()'>"
H4 = (
    '<script src="/js/app.js"></script><script>init();</script>'
    '<script src="https://paypal.com.secure-update.net/lib.js"></script>'
    '<script src="http://tracker.net/t.js"></script>'
)
H5 = (
    '<noscript><img src="fallback.png"></noscript>'
    '<iframe src="//ads.example.com/frame"></iframe>'
    '<img src="/a.png"><img src="http://ab.cd.example.org/b.png">'
)
H6 = '<body onload="go()" onresize="r()"><p onclick="c()">x</p></body>'
H7 = '<!-- <img src=x> --><script>var s="<iframe>";</script><img src=y>'
H8 = "<IMG SRC=/X.PNG><A HREF=HTTP://OTHER.NET>out</A><a name=anchor>"
H9 = (
    '<a href="//www.shop.net:80/home">x</a><a href="//www.other.net/x">y</a>'
    '<script src="https://shop.net:8443/app.js"></script>'
)
H10 = '<a href="mailto:x@y.com">m</a><a href="javascript:void(0)">j</a>'
H11 = '<a href="/x><img src=/y.png>'
H12 = '<iframe src="http://x.io/f"/><script src="/app.js"/>ok<p>'
H13 = '<script src="http://good.com/a.js" onerror="x()"></script>'
H14 = '<div><div><a href="/a"><a href="http://b.io">'
H15 = '<p>\t\n a &lt;b&gt; c\r\n</p><img\tsrc="/i.png">'

GOLDEN_PAIRS = [
    (
        "login.bank-secure.com/a?x=1&y=2",
        url_f(misleading_word_count=3, slash_question_count=2, digit_count=2,
              dot_count=2, hyphen_underscore_count=1, equals_ampersand_count=3,
              subdomain_count=1, has_subdomain=1, url_length=31),
        H1,
        html_f(script_present=1, external_script_present=1, script_count=1,
               external_script_count=1, whitespace_percent=ws(1, H1)),
    ),
    (
        "a.com",
        url_f(dot_count=1, url_length=5),
        "",
        html_f(),
    ),
    (
        "192.168.0.1/x",
        url_f(slash_question_count=1, digit_count=8, dot_count=3,
              subdomain_count=2, has_subdomain=1,
              hostname_digit_percent=100.0 * 8 / 11, url_length=13),
        H3,
        html_f(embedded_script_present=1, embedded_script_count=1,
               internal_link_present=1, internal_link_count=1,
               external_link_present=1, external_link_count=1,
               whitespace_percent=ws(3, H3)),
    ),
    (
        "paypal.com.secure-update.net/verify?id=9;session=a1",
        url_f(misleading_word_count=4, slash_question_count=2, digit_count=2,
              dot_count=3, hyphen_underscore_count=1, equals_ampersand_count=2,
              semicolon_count=1, subdomain_count=2, has_subdomain=1, url_length=51),
        H4,
        html_f(script_present=1, internal_script_present=1, external_script_present=1,
               script_count=4, internal_script_count=3, external_script_count=1,
               whitespace_percent=ws(3, H4)),
    ),
    (
        "ab.cd.example.org/login",
        url_f(misleading_word_count=1, slash_question_count=1, dot_count=3,
              two_letter_subdomain_count=2, subdomain_count=2, has_subdomain=1,
              url_length=23),
        H5,
        html_f(noscript_present=1, noscript_count=1, image_present=1, image_count=3,
               iframe_present=1, iframe_count=1, whitespace_percent=ws(4, H5)),
    ),
    (
        "x9.example.net/a_b/c?q=1&r=2&s=3",
        url_f(slash_question_count=3, digit_count=4, dot_count=2,
              hyphen_underscore_count=1, equals_ampersand_count=5,
              two_letter_subdomain_count=1, subdomain_count=1, has_subdomain=1,
              hostname_digit_percent=100.0 * 1 / 14, url_length=32),
        H6,
        html_f(embedded_script_present=1, embedded_script_count=3,
               whitespace_percent=ws(3, H6)),
    ),
    (
        "update.account.mybank.co.uk/form",
        url_f(misleading_word_count=3, slash_question_count=1, dot_count=4,
              subdomain_count=3, has_subdomain=1, url_length=32),
        H7,
        html_f(script_present=1, internal_script_present=1, script_count=1,
               internal_script_count=1, image_present=1, image_count=1,
               whitespace_percent=ws(5, H7)),
    ),
    (
        "my.org/admin",
        url_f(misleading_word_count=1, slash_question_count=1, dot_count=1,
              url_length=12),
        H8,
        html_f(image_present=1, image_count=1, external_link_present=1,
               external_link_count=1, whitespace_percent=ws(3, H8)),
    ),
    (
        "shop.net/cart",
        url_f(slash_question_count=1, dot_count=1, url_length=13),
        H9,
        html_f(script_present=1, internal_script_present=1, script_count=1,
               internal_script_count=1, internal_link_present=1,
               internal_link_count=1, external_link_present=1,
               external_link_count=1, whitespace_percent=ws(3, H9)),
    ),
    (
        "a1b2.net/x;y;z",
        url_f(slash_question_count=1, digit_count=2, dot_count=1,
              semicolon_count=2, hostname_digit_percent=100.0 * 2 / 8,
              url_length=14),
        H10,
        html_f(internal_link_present=1, internal_link_count=2,
               whitespace_percent=ws(2, H10)),
    ),
    (
        "signin.paypal.com-wallet.xyz/auth?token=9f8",
        url_f(misleading_word_count=2, slash_question_count=2, digit_count=2,
              dot_count=3, hyphen_underscore_count=1, equals_ampersand_count=1,
              subdomain_count=2, has_subdomain=1, url_length=43),
        H11,
        html_f(whitespace_percent=ws(2, H11)),
    ),
    (
        "x.io/f",
        url_f(slash_question_count=1, dot_count=1, url_length=6),
        H12,
        html_f(script_present=1, internal_script_present=1, script_count=1,
               internal_script_count=1, iframe_present=1, iframe_count=1,
               whitespace_percent=ws(2, H12)),
    ),
    (
        "good.com/safe",
        url_f(slash_question_count=1, dot_count=1, url_length=13),
        H13,
        html_f(script_present=1, internal_script_present=1,
               embedded_script_present=1, script_count=1,
               internal_script_count=1, embedded_script_count=1,
               whitespace_percent=ws(2, H13)),
    ),
    (
        "c.io/page2",
        url_f(slash_question_count=1, digit_count=1, dot_count=1, url_length=10),
        H14,
        html_f(internal_link_present=1, internal_link_count=1,
               external_link_present=1, external_link_count=1,
               whitespace_percent=ws(2, H14)),
    ),
    (
        "z.org/über?café=sí",
        url_f(slash_question_count=2, dot_count=1, equals_ampersand_count=1,
              url_length=18),
        H15,
        html_f(image_present=1, image_count=1, whitespace_percent=ws(8, H15)),
    ),
]


class TestGoldenCorpus:
    @pytest.mark.parametrize("url,expected_u,html,expected_h", GOLDEN_PAIRS,
                             ids=[p[0] for p in GOLDEN_PAIRS])
    def test_pair_matches_hand_counts(self, url, expected_u, html, expected_h):
        got_u = extract_url_features(url)
        assert got_u == expected_u
        got_h = extract_html_features(html, hostname_of(url))
        assert got_h == expected_h
        vec = to_feature_vector(got_u, got_h)
        expected_vec = to_feature_vector(expected_u, expected_h)
        np.testing.assert_array_equal(vec, expected_vec)
        assert vec.shape == (31,)

    def test_corpus_size(self):
        assert len(GOLDEN_PAIRS) >= 15

    def test_spec_lengths_pinned(self):
        # the two pairs quoted with explicit lengths
        assert len(H1) == 44
        assert len(H3) == 70


class TestUrlFeatures:
    def test_empty_url_rejected(self):
        with pytest.raises(DataError):
            extract_url_features("")

    def test_invariant_to_scheme_and_www(self):
        for raw in ("http://login.a.com/x", "HTTPS://login.a.com/x",
                    "www.login.a.com/x", "login.a.com/x"):
            assert extract_url_features(normalize_url(raw)) == extract_url_features("login.a.com/x")

    def test_custom_wordlist(self, tmp_path):
        path = tmp_path / "words.txt"
        path.write_text("wallet\nportal  # trailing comment\n\n# full comment\n")
        words = load_wordlist(path)
        assert words == ("wallet", "portal")
        feats = extract_url_features("wallet.portal-site.net/a", wordlist=words)
        assert feats.misleading_word_count == 2

    def test_default_wordlist_is_documented_set(self):
        assert "login" in DEFAULT_MISLEADING_WORDS
        assert "bank" in DEFAULT_MISLEADING_WORDS
        assert len(DEFAULT_MISLEADING_WORDS) == 10

    def test_pure_function(self):
        a = extract_url_features("login.x.com/a?b=1")
        b = extract_url_features("login.x.com/a?b=1")
        assert a == b


class TestHtmlFeatures:
    def test_presence_equals_count_indicator_on_synthetic_corpus(self):
        for sample in generate_corpus(60, seed=9, approx_html_chars=400):
            h = extract_html_features(sample.html, hostname_of(sample.normalized_url))
            assert h.script_present == int(h.script_count > 0)
            assert h.noscript_present == int(h.noscript_count > 0)
            assert h.internal_script_present == int(h.internal_script_count > 0)
            assert h.external_script_present == int(h.external_script_count > 0)
            assert h.embedded_script_present == int(h.embedded_script_count > 0)
            assert h.internal_link_present == int(h.internal_link_count > 0)
            assert h.external_link_present == int(h.external_link_count > 0)
            assert h.image_present == int(h.image_count > 0)
            assert h.iframe_present == int(h.iframe_count > 0)
            assert 0.0 <= h.whitespace_percent <= 100.0

    def test_whitespace_zero_iff_none(self):
        assert extract_html_features("", "a.com").whitespace_percent == 0.0
        assert extract_html_features("<p>dense</p>", "a.com").whitespace_percent == 0.0
        assert extract_html_features("<p> </p>", "a.com").whitespace_percent > 0.0


class TestFeatureCsv:
    def test_round_trip(self, tmp_path):
        corpus = generate_corpus(20, seed=2, approx_html_chars=300)
        from phishnet.features import sample_features
        matrix = np.stack([sample_features(s) for s in corpus])
        path = tmp_path / "features.csv"
        write_feature_csv(path, [s.id for s in corpus], [s.label for s in corpus], matrix)
        ids, labels, loaded = read_feature_csv(path)
        assert ids == [s.id for s in corpus]
        assert list(labels) == [int(s.label) for s in corpus]
        np.testing.assert_array_equal(loaded, matrix)

    def test_header_is_canonical(self, tmp_path):
        path = tmp_path / "features.csv"
        write_feature_csv(path, ["a"], [1], np.zeros((1, 31)))
        header = path.read_text().splitlines()[0]
        assert header.split(",")[2:] == list(FEATURE_NAMES)

    def test_wrong_columns_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("id,label,only_one\nx,phishing,1\n")
        with pytest.raises(DataError):
            read_feature_csv(path)
