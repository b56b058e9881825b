"""Corpus building over HTTP(S): fetch final landing pages, write HTML
files plus a JSON-Lines manifest, and record per-URL failures.

Redirects are followed manually (never by the HTTP library) so the hop
count, the final URL and the redirect limit stay under our control. A fetch
never raises: every job terminates in exactly one FetchResult carrying
either the HTML or an enumerated error reason. Batches run with a bounded
thread pool, a global token-bucket rate limit, and a per-host minimum
interval; results are merged back in input order regardless of completion
order.
"""

from __future__ import annotations

import json
import socket
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from urllib.parse import urljoin, urlsplit
from concurrent.futures import ThreadPoolExecutor

import requests

from .corpus import Label
from .errors import DataError

BODY_CAP_BYTES = 5_000_000

DNS_FAILURE = "dns_failure"
CONNECT_TIMEOUT = "connect_timeout"
READ_TIMEOUT = "read_timeout"
CONNECTION_ERROR = "connection_error"
TOO_MANY_REDIRECTS = "too_many_redirects"
HTTP_ERROR = "http_error"
NON_HTML_CONTENT = "non_html_content"
BODY_TOO_LARGE = "body_too_large"


@dataclass(frozen=True)
class FetchJob:
    url: str
    timeout: float = 20.0
    max_redirects: int = 10
    user_agent: str = "phishnet-corpus-builder/0.1"

    def __post_init__(self):
        if self.timeout <= 0:
            raise DataError("timeout must be positive")
        if self.max_redirects < 0:
            raise DataError("max_redirects cannot be negative")


@dataclass
class FetchResult:
    requested_url: str
    final_url: str | None = None
    http_status: int | None = None
    html: str | None = None
    error: str | None = None
    fetched_at: float = 0.0
    duration: float = 0.0


def _with_scheme(url: str) -> str:
    if "://" not in url:
        return "https://" + url
    return url


def _classify_exception(exc: BaseException) -> str:
    seen: BaseException | None = exc
    while seen is not None:
        if isinstance(seen, socket.gaierror):
            return DNS_FAILURE
        if "NameResolutionError" in type(seen).__name__:
            return DNS_FAILURE
        seen = seen.__cause__ or seen.__context__
    if isinstance(exc, requests.exceptions.ConnectTimeout):
        return CONNECT_TIMEOUT
    if isinstance(exc, requests.exceptions.ReadTimeout):
        return READ_TIMEOUT
    return CONNECTION_ERROR


def _is_htmlish(content_type: str | None) -> bool:
    # absent headers are common on sloppy hosting; only an explicit
    # non-HTML type is rejected
    if not content_type:
        return True
    media = content_type.split(";", 1)[0].strip().lower()
    return "html" in media


def fetch(job: FetchJob, body_cap: int = BODY_CAP_BYTES,
          session: requests.Session | None = None) -> FetchResult:
    """Fetch one URL to its final landing page. Total: never raises."""
    result = FetchResult(requested_url=job.url, fetched_at=time.time())
    started = time.monotonic()
    own_session = session is None
    sess = session or requests.Session()
    current = _with_scheme(job.url)
    try:
        for hop in range(job.max_redirects + 1):
            try:
                resp = sess.get(
                    current,
                    allow_redirects=False,
                    timeout=job.timeout,
                    stream=True,
                    headers={"User-Agent": job.user_agent},
                )
            except requests.exceptions.RequestException as exc:
                result.error = _classify_exception(exc)
                return result
            with resp:
                result.final_url = resp.url
                result.http_status = resp.status_code
                if 300 <= resp.status_code < 400 and "location" in resp.headers:
                    current = urljoin(current, resp.headers["location"])
                    continue
                if not 200 <= resp.status_code < 300:
                    result.error = HTTP_ERROR
                    return result
                if not _is_htmlish(resp.headers.get("content-type")):
                    result.error = NON_HTML_CONTENT
                    return result
                chunks: list[bytes] = []
                size = 0
                try:
                    for chunk in resp.iter_content(chunk_size=65536):
                        chunks.append(chunk)
                        size += len(chunk)
                        if size > body_cap:
                            result.error = BODY_TOO_LARGE
                            return result
                except requests.exceptions.RequestException as exc:
                    result.error = _classify_exception(exc)
                    return result
                encoding = resp.encoding or "utf-8"
                try:
                    result.html = b"".join(chunks).decode(encoding, errors="replace")
                except LookupError:
                    result.html = b"".join(chunks).decode("utf-8", errors="replace")
                return result
        result.error = TOO_MANY_REDIRECTS
        return result
    finally:
        result.duration = time.monotonic() - started
        if own_session:
            sess.close()


class _RateLimiter:
    """Token bucket at a fixed request rate plus a per-host floor interval."""

    def __init__(self, rate_limit: float | None, per_host_interval: float):
        self._lock = threading.Lock()
        self._interval = (1.0 / rate_limit) if rate_limit else 0.0
        self._per_host = per_host_interval
        self._next_slot = 0.0
        self._host_next: dict[str, float] = {}

    def acquire(self, url: str) -> None:
        host = urlsplit(_with_scheme(url)).hostname or ""
        with self._lock:
            now = time.monotonic()
            slot = max(now, self._next_slot, self._host_next.get(host, 0.0))
            self._next_slot = slot + self._interval
            if self._per_host > 0:
                self._host_next[host] = slot + self._per_host
        delay = slot - time.monotonic()
        if delay > 0:
            time.sleep(delay)


@dataclass
class FetchReport:
    requested: int = 0
    succeeded: int = 0
    errors: dict[str, int] = field(default_factory=dict)
    total_duration: float = 0.0

    def record(self, result: FetchResult) -> None:
        self.requested += 1
        self.total_duration += result.duration
        if result.error is None:
            self.succeeded += 1
        else:
            key = result.error
            if result.error == HTTP_ERROR and result.http_status is not None:
                key = f"{HTTP_ERROR}({result.http_status})"
            self.errors[key] = self.errors.get(key, 0) + 1

    def render(self) -> str:
        lines = [
            f"urls requested:  {self.requested}",
            f"pages fetched:   {self.succeeded}",
            f"fetch seconds:   {self.total_duration:.2f}",
        ]
        for reason in sorted(self.errors):
            lines.append(f"error {reason}: {self.errors[reason]}")
        return "\n".join(lines) + "\n"


def read_url_list(path: str | Path) -> list[str]:
    """One URL per line; blank lines and # comments ignored."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"URL list not found: {path}")
    urls = []
    for line in path.read_text(encoding="utf-8").splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            urls.append(line)
    if not urls:
        raise DataError(f"URL list {path} is empty")
    return urls


def _existing_manifest_count(manifest_path: Path) -> int:
    if not manifest_path.is_file():
        return 0
    with manifest_path.open("r", encoding="utf-8") as fh:
        return sum(1 for line in fh if line.strip())


def build_corpus(
    url_list: str | Path,
    label: Label,
    out_dir: str | Path,
    concurrency: int = 4,
    rate_limit: float | None = None,
    per_host_interval: float = 1.0,
    timeout: float = 20.0,
    max_redirects: int = 10,
    body_cap: int = BODY_CAP_BYTES,
) -> tuple[Path, FetchReport]:
    """Fetch every listed URL and append successes to out_dir/manifest.jsonl.

    Manifest order equals input-list order filtered to successes; ids
    continue from whatever the manifest already holds, so reruns append
    instead of clobbering. The per-error report is written next to the
    manifest.
    """
    urls = read_url_list(url_list)
    out_dir = Path(out_dir)
    pages_dir = out_dir / "pages"
    try:
        pages_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise DataError(f"cannot create corpus directory {out_dir}: {exc}") from None
    manifest_path = out_dir / "manifest.jsonl"
    next_id = _existing_manifest_count(manifest_path)

    limiter = _RateLimiter(rate_limit, per_host_interval)
    session_local = threading.local()

    def run_one(url: str) -> FetchResult:
        if not hasattr(session_local, "session"):
            session_local.session = requests.Session()
        limiter.acquire(url)
        job = FetchJob(url=url, timeout=timeout, max_redirects=max_redirects)
        return fetch(job, body_cap=body_cap, session=session_local.session)

    report = FetchReport()
    with ThreadPoolExecutor(max_workers=max(1, concurrency)) as pool:
        results = list(pool.map(run_one, urls))

    with manifest_path.open("a", encoding="utf-8") as manifest:
        for result in results:
            report.record(result)
            if result.error is not None:
                continue
            sample_id = f"{label.canonical_name}-{next_id:06d}"
            next_id += 1
            html_file = pages_dir / f"{sample_id}.html"
            html_file.write_text(result.html, encoding="utf-8")
            record = {
                "id": sample_id,
                "url": result.requested_url,
                "html_path": str(html_file.relative_to(out_dir)),
                "label": label.canonical_name,
                "final_url": result.final_url,
                "http_status": result.http_status,
                "fetched_at": result.fetched_at,
            }
            manifest.write(json.dumps(record, ensure_ascii=False) + "\n")
    (out_dir / "fetch_report.txt").write_text(report.render(), encoding="utf-8")
    return manifest_path, report
