"""Harvesting papers from an arXiv-compatible listing API.

Feed parsing is pure (bytes in, records out) and networking goes through a
single module-level ``http_fetch`` that tests can replace. Downloaded
payloads are classified by declared content type first and by leading magic
bytes second, then unpacked with hard safety limits: archive members may not
escape the extraction root, be links, or exceed a cumulative size cap.
Documents land in a file-based store, one directory per paper.
"""

from __future__ import annotations

import io
import json
import os
import posixpath
import re
import tarfile
import time
import xml.etree.ElementTree as ET
import zlib
from dataclasses import dataclass, field
from datetime import date, datetime
from enum import Enum
from pathlib import Path
from typing import Callable, Iterator

import requests

from .errors import Diagnostic, TexcorpusError
from .lexer import SourceDocument

USER_AGENT = "texcorpus/0.1 (batch corpus harvester)"

DEFAULT_API_BASE = "http://export.arxiv.org/api/query"
DEFAULT_SOURCE_BASE = "https://arxiv.org/e-print"
DEFAULT_DELAY = 3.0
DEFAULT_SIZE_CAP = 256 * 1024 * 1024


def api_base() -> str:
    return os.environ.get("TEXCORPUS_API_BASE", DEFAULT_API_BASE)


def source_base() -> str:
    return os.environ.get("TEXCORPUS_SOURCE_BASE", DEFAULT_SOURCE_BASE)


def cache_dir() -> Path:
    return Path(os.environ.get("TEXCORPUS_CACHE_DIR", "~/.cache/texcorpus")).expanduser()


def default_delay() -> float:
    return float(os.environ.get("TEXCORPUS_DELAY", str(DEFAULT_DELAY)))


class HttpError(TexcorpusError):
    def __init__(self, status: int, url: str):
        super().__init__(f"HTTP {status} for {url}")
        self.status = status
        self.url = url


class RateLimited(HttpError):
    """The server asked us to back off (429 or 503)."""

    def __init__(self, status: int, url: str, retry_after: float | None = None):
        super().__init__(status, url)
        self.retry_after = retry_after


class FeedParseError(TexcorpusError):
    """The listing feed is not well-formed or lacks required elements."""


class UnknownPayload(TexcorpusError):
    """A downloaded payload matches no recognized file type."""


class UnsupportedPayload(TexcorpusError):
    """The payload type is recognized but holds no TeX sources."""


class ArchiveCorrupt(TexcorpusError):
    """A source archive cannot be decompressed or read."""


class PathTraversal(TexcorpusError):
    """An archive member tries to escape the extraction root."""


class SizeCapExceeded(TexcorpusError):
    """An archive expands past the configured size limit."""


class CorruptMeta(TexcorpusError):
    """A stored document's metadata cannot be read back."""


FetchFn = Callable[..., tuple[int, dict, bytes]]


def http_fetch(
    url: str, params: dict | None = None, timeout: float = 30.0
) -> tuple[int, dict, bytes]:
    """GET a URL, returning (status, headers, body)."""
    response = requests.get(
        url, params=params, timeout=timeout, headers={"User-Agent": USER_AGENT}
    )
    return response.status_code, dict(response.headers), response.content


def _raise_for_status(status: int, headers: dict, url: str) -> None:
    if status in (429, 503):
        retry_after = None
        raw = headers.get("Retry-After") or headers.get("retry-after")
        if raw is not None:
            try:
                retry_after = float(raw)
            except ValueError:
                retry_after = None
        raise RateLimited(status, url, retry_after)
    if status >= 400:
        raise HttpError(status, url)


@dataclass(frozen=True)
class PaperRecord:
    """One listing entry, as much of it as the pipeline uses."""

    id: str
    title: str
    primary_category: str
    categories: tuple[str, ...]
    timestamp: date | None
    page_count: int | None


@dataclass(frozen=True)
class FeedPage:
    records: tuple[PaperRecord, ...]
    total_results: int
    start_index: int
    items_per_page: int


_NS = {
    "atom": "http://www.w3.org/2005/Atom",
    "arxiv": "http://arxiv.org/schemas/atom",
    "opensearch": "http://a9.com/-/spec/opensearch/1.1/",
}

_VERSION_RE = re.compile(r"v\d+$")
_PAGES_RE = re.compile(r"(\d+)\s*pages?\b", re.IGNORECASE)


def _entry_id(raw: str) -> str:
    """Bare paper id from an abs URL, version suffix removed."""
    tail = raw.rsplit("/abs/", 1)[-1] if "/abs/" in raw else raw
    return _VERSION_RE.sub("", tail.strip())


def _entry_date(raw: str) -> date:
    return datetime.fromisoformat(raw.replace("Z", "+00:00")).date()


def parse_listing_feed(xml_bytes: bytes) -> FeedPage:
    """Parse one Atom page of listing results.

    Raises FeedParseError on malformed XML or entries missing an id or
    publication date. Page counts come from the free-text comment field
    when it mentions them; otherwise they are None.
    """
    try:
        root = ET.fromstring(xml_bytes)
    except ET.ParseError as exc:
        raise FeedParseError(f"feed is not well-formed XML: {exc}") from exc

    def _int_field(tag: str, default: int) -> int:
        text = root.findtext(f"opensearch:{tag}", namespaces=_NS)
        if text is None:
            return default
        try:
            return int(text)
        except ValueError as exc:
            raise FeedParseError(f"bad opensearch:{tag}: {text!r}") from exc

    entries = root.findall("atom:entry", _NS)
    total = _int_field("totalResults", len(entries))
    start = _int_field("startIndex", 0)
    per_page = _int_field("itemsPerPage", len(entries))

    records = []
    for entry in entries:
        raw_id = entry.findtext("atom:id", namespaces=_NS)
        if not raw_id:
            raise FeedParseError("entry without an id")
        published = entry.findtext("atom:published", namespaces=_NS)
        if not published:
            raise FeedParseError(f"entry {raw_id} lacks a published date")
        try:
            timestamp = _entry_date(published)
        except ValueError as exc:
            raise FeedParseError(
                f"entry {raw_id} has bad published date {published!r}"
            ) from exc
        title = (entry.findtext("atom:title", namespaces=_NS) or "").strip()
        categories = tuple(
            el.get("term", "")
            for el in entry.findall("atom:category", _NS)
            if el.get("term")
        )
        primary_el = entry.find("arxiv:primary_category", _NS)
        primary = primary_el.get("term", "") if primary_el is not None else ""
        if not primary and categories:
            primary = categories[0]
        comment = entry.findtext("arxiv:comment", namespaces=_NS) or ""
        pages_match = _PAGES_RE.search(comment)
        page_count = int(pages_match.group(1)) if pages_match else None
        if page_count is not None and page_count < 1:
            page_count = None
        records.append(
            PaperRecord(
                id=_entry_id(raw_id),
                title=title,
                primary_category=primary,
                categories=categories,
                timestamp=timestamp,
                page_count=page_count,
            )
        )
    return FeedPage(
        records=tuple(records),
        total_results=total,
        start_index=start,
        items_per_page=per_page,
    )


def query_listing(
    category: str,
    start: int = 0,
    page_size: int = 100,
    from_date: date | None = None,
    to_date: date | None = None,
    base_url: str | None = None,
    fetch: FetchFn | None = None,
    primary_only: bool = True,
) -> tuple[list[PaperRecord], FeedPage]:
    """Fetch and parse one page of the listing for a category.

    With primary_only, entries whose primary category differs (they match
    the query through a cross-list) are dropped.
    """
    fetch = fetch or http_fetch
    url = base_url or api_base()
    query = f"cat:{category}"
    if from_date and to_date:
        query += (
            f" AND submittedDate:[{from_date:%Y%m%d}0000"
            f" TO {to_date:%Y%m%d}2359]"
        )
    params = {
        "search_query": query,
        "start": start,
        "max_results": page_size,
        "sortBy": "submittedDate",
        "sortOrder": "ascending",
    }
    status, headers, body = fetch(url, params=params)
    _raise_for_status(status, headers, url)
    page = parse_listing_feed(body)
    records = list(page.records)
    if primary_only:
        records = [r for r in records if r.primary_category == category]
    return records, page


def harvest_listing(
    category: str,
    max_records: int,
    page_size: int = 100,
    from_date: date | None = None,
    to_date: date | None = None,
    base_url: str | None = None,
    fetch: FetchFn | None = None,
    delay: float | None = None,
    sleep: Callable[[float], None] = time.sleep,
    max_retries: int = 3,
) -> list[PaperRecord]:
    """Page through the listing until max_records unique papers are seen.

    Waits ``delay`` seconds between page requests and backs off
    exponentially when rate-limited. Pages that only repeat known ids stop
    the walk, as does reaching the feed's reported total.
    """
    if delay is None:
        delay = default_delay()
    seen: dict[str, PaperRecord] = {}
    start = 0
    while len(seen) < max_records:
        attempt = 0
        while True:
            try:
                records, page = query_listing(
                    category,
                    start=start,
                    page_size=page_size,
                    from_date=from_date,
                    to_date=to_date,
                    base_url=base_url,
                    fetch=fetch,
                )
                break
            except RateLimited as exc:
                attempt += 1
                if attempt > max_retries:
                    raise
                wait = exc.retry_after
                if wait is None:
                    wait = delay * (2**attempt)
                sleep(wait)
        if not page.records:
            break
        new = 0
        for record in records:
            if record.id not in seen:
                seen[record.id] = record
                new += 1
        if new == 0 and records:
            break  # page repeated known ids only; server is not advancing
        start += len(page.records)
        if start >= page.total_results:
            break
        if len(seen) < max_records:
            sleep(delay)
    return list(seen.values())[:max_records]


class FileType(Enum):
    PDF = "pdf"
    EPRINT = "x-eprint"
    EPRINT_TAR = "x-eprint-tar"
    POSTSCRIPT = "postscript"
    HTML = "html"
    DOCX = "docx"


_CONTENT_TYPE_MAP = {
    "application/pdf": FileType.PDF,
    "application/x-eprint-tar": FileType.EPRINT_TAR,
    "application/x-eprint": FileType.EPRINT,
    "application/postscript": FileType.POSTSCRIPT,
    "text/html": FileType.HTML,
    "application/vnd.openxmlformats-officedocument.wordprocessingml.document": (
        FileType.DOCX
    ),
}

_GZIP_MAGIC = b"\x1f\x8b"
_TEX_MARKERS = (b"\\documentclass", b"\\documentstyle", b"\\begin{document}")


def _gunzip_head(payload: bytes, limit: int = 4096) -> bytes:
    d = zlib.decompressobj(wbits=47)
    return d.decompress(payload[:65536], limit)


def classify_payload(content: bytes, content_type: str | None = None) -> FileType:
    """Decide what a downloaded payload is.

    The declared content type wins when it maps to a known type; otherwise
    leading magic bytes decide. Gzip payloads are peeked into to separate
    tar archives from single compressed files. Raises UnknownPayload when
    nothing matches.
    """
    if content_type:
        base = content_type.split(";", 1)[0].strip().lower()
        mapped = _CONTENT_TYPE_MAP.get(base)
        if mapped is not None:
            return mapped

    if content.startswith(b"%PDF"):
        return FileType.PDF
    if content.startswith(b"%!"):
        return FileType.POSTSCRIPT
    if content.startswith(_GZIP_MAGIC):
        try:
            head = _gunzip_head(content, 1024)
        except zlib.error:
            return FileType.EPRINT
        if len(head) >= 262 and head[257:262] == b"ustar":
            return FileType.EPRINT_TAR
        return FileType.EPRINT
    if content.startswith(b"PK\x03\x04"):
        if b"[Content_Types].xml" in content[:4096]:
            return FileType.DOCX
        raise UnknownPayload("zip payload that is not a word-processor document")
    head_lower = content[:1024].lower()
    if b"<html" in head_lower or b"<!doctype html" in head_lower:
        return FileType.HTML
    if any(marker in content[:65536] for marker in _TEX_MARKERS):
        return FileType.EPRINT
    raise UnknownPayload(f"unrecognized payload starting {content[:8]!r}")


_GUNZIP_CHUNK = 1 << 16


def _gunzip_capped(payload: bytes, cap: int) -> bytes:
    d = zlib.decompressobj(wbits=47)
    chunks: list[bytes] = []
    total = 0
    pos = 0
    while pos < len(payload) and not d.eof:
        piece = payload[pos : pos + _GUNZIP_CHUNK]
        pos += _GUNZIP_CHUNK
        out = d.decompress(piece, cap - total + 1)
        total += len(out)
        if total > cap:
            raise SizeCapExceeded(f"decompressed size exceeds cap of {cap} bytes")
        chunks.append(out)
        while d.unconsumed_tail and not d.eof:
            out = d.decompress(d.unconsumed_tail, cap - total + 1)
            total += len(out)
            if total > cap:
                raise SizeCapExceeded(
                    f"decompressed size exceeds cap of {cap} bytes"
                )
            chunks.append(out)
    return b"".join(chunks)


def _check_member_name(name: str) -> str:
    """Validate and normalize an archive member path."""
    if "\x00" in name:
        raise PathTraversal(f"member name contains NUL: {name!r}")
    if name.startswith("/") or re.match(r"^[A-Za-z]:[/\\]", name):
        raise PathTraversal(f"absolute member path: {name!r}")
    norm = posixpath.normpath(name.replace("\\", "/"))
    if norm == ".." or norm.startswith("../") or norm.startswith("/"):
        raise PathTraversal(f"member path escapes root: {name!r}")
    return norm


class _NotATar(Exception):
    """Internal: payload was labeled tar but is not readable as one."""


def _unpack_tar(
    raw: bytes, doc_id: str, size_cap: int
) -> list[tuple[str, bytes]]:
    try:
        tf = tarfile.open(fileobj=io.BytesIO(raw), mode="r:")
    except tarfile.TarError as exc:
        raise _NotATar(str(exc)) from exc
    files: list[tuple[str, bytes]] = []
    total = 0
    with tf:
        for member in tf:
            if member.issym() or member.islnk():
                raise PathTraversal(
                    f"{doc_id}: link member {member.name!r} rejected"
                )
            if not member.isreg():
                continue
            norm = _check_member_name(member.name)
            total += member.size
            if total > size_cap:
                raise SizeCapExceeded(
                    f"{doc_id}: archive exceeds cap of {size_cap} bytes"
                )
            handle = tf.extractfile(member)
            if handle is None:
                continue
            files.append((norm, handle.read()))
    if not files:
        raise ArchiveCorrupt(f"{doc_id}: archive holds no regular files")
    return files


def unpack(
    payload: bytes,
    file_type: FileType,
    *,
    doc_id: str,
    category: str = "",
    timestamp: date | None = None,
    page_count: int | None = None,
    size_cap: int = DEFAULT_SIZE_CAP,
    diagnostics: list[Diagnostic] | None = None,
) -> SourceDocument:
    """Turn a downloaded source payload into a SourceDocument.

    Only TeX payload types unpack; PDF and friends raise
    UnsupportedPayload. A payload labeled as a tar archive that gunzips to
    something unreadable as tar is kept as a single file, with a
    diagnostic, since mislabeled single-file submissions do occur.
    """
    if file_type is FileType.EPRINT_TAR:
        try:
            raw = _gunzip_capped(payload, size_cap)
        except zlib.error as exc:
            raise ArchiveCorrupt(f"{doc_id}: bad gzip stream: {exc}") from exc
        try:
            files = _unpack_tar(raw, doc_id, size_cap)
        except _NotATar as exc:
            if not raw:
                raise ArchiveCorrupt(f"{doc_id}: empty payload: {exc}") from exc
            if diagnostics is not None:
                diagnostics.append(
                    Diagnostic(
                        "unpack",
                        f"{doc_id}: labeled as tar but not readable as one; "
                        "kept as a single file",
                    )
                )
            files = [("main.tex", raw)]
    elif file_type is FileType.EPRINT:
        if payload.startswith(_GZIP_MAGIC):
            try:
                content = _gunzip_capped(payload, size_cap)
            except zlib.error as exc:
                raise ArchiveCorrupt(f"{doc_id}: bad gzip stream: {exc}") from exc
        else:
            if len(payload) > size_cap:
                raise SizeCapExceeded(
                    f"{doc_id}: payload exceeds cap of {size_cap} bytes"
                )
            content = payload
        files = [("main.tex", content)]
    else:
        raise UnsupportedPayload(f"{doc_id}: no TeX sources in {file_type.value}")
    return SourceDocument(
        id=doc_id,
        files=files,
        timestamp=timestamp,
        category=category,
        page_count=page_count,
    )


CORPUS_SCHEMA = "texcorpus.corpus.v1"

_SAFE_ID_RE = re.compile(r"[^A-Za-z0-9._-]")


def _safe_id(doc_id: str) -> str:
    return _SAFE_ID_RE.sub("_", doc_id)


class CorpusStore:
    """File-based document store: one directory per paper.

    Layout: <root>/<safe id>/meta.json plus the source files under
    files/. The metadata file is written last, so its presence marks a
    complete save; saving an already-present id is a no-op.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _dir(self, doc_id: str) -> Path:
        return self.root / _safe_id(doc_id)

    def contains(self, doc_id: str) -> bool:
        return (self._dir(doc_id) / "meta.json").is_file()

    def save(self, doc: SourceDocument) -> bool:
        """Store a document; returns False when it was already present."""
        if self.contains(doc.id):
            return False
        directory = self._dir(doc.id)
        files_dir = directory / "files"
        files_dir.mkdir(parents=True, exist_ok=True)
        paths = []
        for path, data in doc.files:
            norm = _check_member_name(path)
            target = files_dir / norm
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_bytes(data)
            paths.append(norm)
        meta = {
            "schema": CORPUS_SCHEMA,
            "id": doc.id,
            "category": doc.category,
            "timestamp": doc.timestamp.isoformat() if doc.timestamp else None,
            "page_count": doc.page_count,
            "main_file": doc.main_file,
            "files": paths,
        }
        (directory / "meta.json").write_text(
            json.dumps(meta, sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )
        return True

    def load(self, doc_id: str) -> SourceDocument:
        return self._load_dir(self._dir(doc_id))

    def _load_dir(self, directory: Path) -> SourceDocument:
        meta_path = directory / "meta.json"
        try:
            meta = json.loads(meta_path.read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise CorruptMeta(f"{directory.name}: {exc}") from exc
        if meta.get("schema") != CORPUS_SCHEMA:
            raise CorruptMeta(
                f"{directory.name}: unrecognized schema {meta.get('schema')!r}"
            )
        try:
            doc_id = meta["id"]
            rel_paths = meta["files"]
        except KeyError as exc:
            raise CorruptMeta(f"{directory.name}: missing key {exc}") from exc
        files = []
        for rel in rel_paths:
            try:
                files.append((rel, (directory / "files" / rel).read_bytes()))
            except OSError as exc:
                raise CorruptMeta(f"{directory.name}: unreadable {rel!r}") from exc
        timestamp = meta.get("timestamp")
        return SourceDocument(
            id=doc_id,
            files=files,
            main_file=meta.get("main_file"),
            timestamp=date.fromisoformat(timestamp) if timestamp else None,
            category=meta.get("category", ""),
            page_count=meta.get("page_count"),
        )

    def ids(self) -> list[str]:
        """Stored ids, sorted by directory name."""
        out = []
        for directory in sorted(self.root.iterdir()):
            if directory.name.endswith(".quarantined"):
                continue
            if (directory / "meta.json").is_file():
                out.append(directory.name)
        return out

    def documents(
        self, diagnostics: list[Diagnostic] | None = None
    ) -> Iterator[SourceDocument]:
        """All stored documents in stable order, skipping corrupt entries."""
        for directory in sorted(self.root.iterdir()):
            if directory.name.endswith(".quarantined"):
                continue
            if not directory.is_dir() or not (directory / "meta.json").is_file():
                continue
            try:
                yield self._load_dir(directory)
            except CorruptMeta as exc:
                if diagnostics is not None:
                    diagnostics.append(Diagnostic("store", str(exc)))

    def quarantine(self, doc_id: str) -> Path:
        """Move a document aside so iteration no longer sees it."""
        directory = self._dir(doc_id)
        target = directory.with_name(directory.name + ".quarantined")
        directory.rename(target)
        return target


@dataclass
class HarvestReport:
    """Counts from one harvest run."""

    listed: int = 0
    stored: int = 0
    already_present: int = 0
    unsupported: int = 0
    failed: int = 0
    diagnostics: list[Diagnostic] = field(default_factory=list)


def fetch_source(
    paper_id: str, fetch: FetchFn | None = None, base: str | None = None
) -> tuple[bytes, str | None]:
    """Download one paper's source payload; returns (bytes, content type)."""
    fetch = fetch or http_fetch
    url = f"{(base or source_base()).rstrip('/')}/{paper_id}"
    status, headers, body = fetch(url)
    _raise_for_status(status, headers, url)
    content_type = headers.get("Content-Type") or headers.get("content-type")
    return body, content_type


def harvest_into_store(
    category: str,
    max_records: int,
    store: CorpusStore,
    from_date: date | None = None,
    to_date: date | None = None,
    page_size: int = 100,
    fetch: FetchFn | None = None,
    delay: float | None = None,
    sleep: Callable[[float], None] = time.sleep,
    size_cap: int = DEFAULT_SIZE_CAP,
) -> HarvestReport:
    """List papers in a category, download their sources, store them.

    Soft failures (unsupported payloads, corrupt archives, HTTP errors on
    single papers) are counted and reported as diagnostics; they never
    abort the run.
    """
    if delay is None:
        delay = default_delay()
    report = HarvestReport()
    records = harvest_listing(
        category,
        max_records,
        page_size=page_size,
        from_date=from_date,
        to_date=to_date,
        fetch=fetch,
        delay=delay,
        sleep=sleep,
    )
    report.listed = len(records)
    for record in records:
        if store.contains(record.id):
            report.already_present += 1
            continue
        sleep(delay)
        try:
            payload, content_type = fetch_source(record.id, fetch=fetch)
            file_type = classify_payload(payload, content_type)
            doc = unpack(
                payload,
                file_type,
                doc_id=record.id,
                category=record.primary_category,
                timestamp=record.timestamp,
                page_count=record.page_count,
                size_cap=size_cap,
                diagnostics=report.diagnostics,
            )
        except (UnknownPayload, UnsupportedPayload) as exc:
            report.unsupported += 1
            report.diagnostics.append(Diagnostic("harvest", str(exc)))
            continue
        except (HttpError, ArchiveCorrupt, PathTraversal, SizeCapExceeded) as exc:
            report.failed += 1
            report.diagnostics.append(Diagnostic("harvest", str(exc)))
            continue
        store.save(doc)
        report.stored += 1
    return report
