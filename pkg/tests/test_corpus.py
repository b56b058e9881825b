import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phishnet.corpus import (
    Label,
    ManifestError,
    WebPageSample,
    load_manifest,
    normalize_url,
    split,
    write_manifest,
)
from phishnet.errors import DataError


class TestNormalizeUrl:
    def test_strips_scheme_and_www(self):
        assert normalize_url("http://www.example.com/a") == "example.com/a"

    def test_case_insensitive_scheme_case_preserving_rest(self):
        assert normalize_url("HTTPS://Bank-Login.com/verify?id=1") == "Bank-Login.com/verify?id=1"

    def test_other_schemes_untouched(self):
        assert normalize_url("ftp://x.com") == "ftp://x.com"

    def test_inner_occurrences_preserved(self):
        assert normalize_url("https://a.com/redirect?to=http://b.com") == "a.com/redirect?to=http://b.com"

    @given(st.text(max_size=64))
    @settings(max_examples=300, deadline=None)
    def test_idempotent(self, url):
        once = normalize_url(url)
        assert normalize_url(once) == once


def make_sample(i, url="example.com", html="<html>x</html>", label=Label.LEGITIMATE):
    return WebPageSample(
        id=f"s{i}", raw_url=url, normalized_url=normalize_url(url), html=html, label=label
    )


class TestLoadManifest:
    def write_lines(self, tmp_path, records):
        path = tmp_path / "manifest.jsonl"
        path.write_text("\n".join(json.dumps(r) for r in records) + "\n", encoding="utf-8")
        return path

    def record(self, i, url="http://example.com", html="<html>hi</html>", label="legitimate"):
        return {"id": f"r{i}", "url": url, "html": html, "label": label}

    def test_valid_records_kept_in_order(self, tmp_path):
        path = self.write_lines(tmp_path, [self.record(i, url=f"http://u{i}.com") for i in range(3)])
        samples, report = load_manifest(path)
        assert [s.id for s in samples] == ["r0", "r1", "r2"]
        assert report.kept == 3
        assert samples[0].normalized_url == "u0.com"

    def test_duplicates_drop_second_copy(self, tmp_path):
        records = [self.record(i, url=f"http://u{i}.com") for i in range(5)]
        records[3] = dict(records[1], id="r3")  # same url + html as record 1
        path = self.write_lines(tmp_path, records)
        samples, report = load_manifest(path)
        assert [s.id for s in samples] == ["r0", "r1", "r2", "r4"]
        assert report.dropped_duplicate == 1

    def test_same_html_different_url_both_kept(self, tmp_path):
        path = self.write_lines(
            tmp_path,
            [self.record(0, url="http://a.com"), self.record(1, url="http://b.com")],
        )
        samples, _ = load_manifest(path)
        assert len(samples) == 2

    def test_empty_html_dropped_and_counted(self, tmp_path):
        path = self.write_lines(
            tmp_path, [self.record(0), self.record(1, html="   \n\t ")]
        )
        samples, report = load_manifest(path)
        assert len(samples) == 1
        assert report.dropped_empty_html == 1
        assert "dropped (empty)" in report.render()

    def test_html_path_resolved_relative_to_manifest(self, tmp_path):
        (tmp_path / "pages").mkdir()
        (tmp_path / "pages" / "p.html").write_bytes("<html>\xff file</html>".encode("latin-1"))
        record = {"id": "r0", "url": "http://x.com", "html_path": "pages/p.html", "label": "phishing"}
        path = self.write_lines(tmp_path, [record])
        samples, _ = load_manifest(path)
        assert samples[0].label is Label.PHISHING
        assert "file" in samples[0].html  # invalid byte replaced, not fatal

    def test_missing_html_file_reports_line(self, tmp_path):
        record = {"id": "r0", "url": "http://x.com", "html_path": "gone.html", "label": "phishing"}
        path = self.write_lines(tmp_path, [self.record(5), record])
        with pytest.raises(ManifestError) as err:
            load_manifest(path)
        assert "line 2" in str(err.value)

    def test_malformed_json_reports_line(self, tmp_path):
        path = tmp_path / "manifest.jsonl"
        path.write_text(json.dumps(self.record(0)) + "\n{oops\n", encoding="utf-8")
        with pytest.raises(ManifestError) as err:
            load_manifest(path)
        assert "line 2" in str(err.value)

    def test_unknown_label_rejected(self, tmp_path):
        path = self.write_lines(tmp_path, [self.record(0, label="suspicious")])
        with pytest.raises(ManifestError):
            load_manifest(path)

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(DataError):
            load_manifest(tmp_path / "absent.jsonl")

    def test_write_then_load_round_trip(self, tmp_path):
        samples = [make_sample(i, url=f"http://u{i}.com", html=f"<p>{i}</p>") for i in range(4)]
        path = tmp_path / "out.jsonl"
        write_manifest(path, samples)
        loaded, report = load_manifest(path)
        assert [s.id for s in loaded] == [s.id for s in samples]
        assert [s.html for s in loaded] == [s.html for s in samples]
        assert report.kept == 4


def largest_remainder_oracle(n, ratios):
    """Independent allocation oracle used to freeze expected split sizes."""
    exact = [n * r for r in ratios]
    base = [math.floor(e) for e in exact]
    left = n - sum(base)
    order = sorted(range(len(ratios)), key=lambda i: (-(exact[i] - base[i]), i))
    for i in order[:left]:
        base[i] += 1
    return base


class TestSplit:
    def corpus(self, n_legit, n_phish):
        legit = [make_sample(i, url=f"http://l{i}.com") for i in range(n_legit)]
        phish = [
            make_sample(1000 + i, url=f"http://p{i}.com", label=Label.PHISHING)
            for i in range(n_phish)
        ]
        return legit + phish

    def test_stratified_sizes_match_largest_remainder_oracle(self):
        samples = self.corpus(90, 10)
        result = split(samples, seed=7, ratios=(0.8, 0.1, 0.1))
        # oracle: per-class largest-remainder allocation
        assert largest_remainder_oracle(90, (0.8, 0.1, 0.1)) == [72, 9, 9]
        assert largest_remainder_oracle(10, (0.8, 0.1, 0.1)) == [8, 1, 1]
        assert (len(result.train), len(result.validation), len(result.test)) == (80, 10, 10)
        for part, expected_phish in ((result.train, 8), (result.validation, 1), (result.test, 1)):
            assert sum(1 for s in part if s.label is Label.PHISHING) == expected_phish

    def test_partition_is_exact(self):
        samples = self.corpus(33, 7)
        result = split(samples, seed=3)
        ids = sorted(s.id for part in result for s in part)
        assert ids == sorted(s.id for s in samples)

    def test_degenerate_all_train(self):
        samples = self.corpus(10, 0)
        result = split(samples, seed=1, ratios=(1.0, 0.0, 0.0))
        assert len(result.train) == 10
        assert not result.validation and not result.test

    def test_deterministic_given_seed(self):
        samples = self.corpus(40, 8)
        a = split(samples, seed=42)
        b = split(samples, seed=42)
        for pa, pb in zip(a, b):
            assert [s.id for s in pa] == [s.id for s in pb]

    def test_different_seed_changes_membership(self):
        samples = self.corpus(40, 8)
        a = split(samples, seed=1)
        b = split(samples, seed=2)
        assert any(
            [s.id for s in pa] != [s.id for s in pb] for pa, pb in zip(a, b)
        )

    def test_stratification_bound_over_seeds(self):
        samples = self.corpus(90, 10)
        global_fraction = 10 / 100
        for seed in range(20):
            result = split(samples, seed=seed)
            for part in result:
                frac = sum(1 for s in part if s.label is Label.PHISHING) / len(part)
                assert abs(frac - global_fraction) < 1.0 / len(part)

    def test_bad_ratios_rejected(self):
        samples = self.corpus(10, 2)
        with pytest.raises(DataError):
            split(samples, seed=0, ratios=(0.5, 0.4, 0.2))

    def test_empty_input_rejected(self):
        with pytest.raises(DataError):
            split([], seed=0)

    def test_class_smaller_than_nonzero_splits_rejected(self):
        samples = self.corpus(30, 2)
        with pytest.raises(DataError):
            split(samples, seed=0)

    def test_small_class_present_in_every_nonzero_split(self):
        samples = self.corpus(96, 4)
        result = split(samples, seed=5)
        for part in result:
            assert any(s.label is Label.PHISHING for s in part)
