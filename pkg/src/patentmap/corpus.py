"""Harvesting, parsing and persistence of patent full-text records."""

from __future__ import annotations

import json
import logging
import os
import re
import tempfile
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import date, datetime, timezone
from html import unescape
from pathlib import Path
from typing import Callable, Iterable, Iterator, Sequence

import requests
from bs4 import BeautifulSoup

from . import textkit
from .errors import ConfigError, ParseError

log = logging.getLogger(__name__)

RECORD_PLACEHOLDER = "{N}"
PAGE_PLACEHOLDER = "{P}"

DEFAULT_ASSIGNEE_EXCLUSIONS = ("universal", "universe")


@dataclass
class HarvestPlan:
    query_template: str
    total_hits: int
    output_dir: Path
    page_size: int = 50
    rate_limit: float = 1000.0  # milliseconds between requests
    resume: bool = True
    attempts: int = 3
    workers: int = 1

    def __post_init__(self):
        self.output_dir = Path(self.output_dir)
        if self.total_hits < 0:
            raise ConfigError("total_hits must be non-negative")
        if self.page_size < 1:
            raise ConfigError("page_size must be positive")
        if self.rate_limit < 0:
            raise ConfigError("rate_limit must be non-negative")
        if self.attempts < 1 or self.workers < 1:
            raise ConfigError("attempts and workers must be at least 1")


@dataclass
class RawDocument:
    record_index: int
    url: str
    body: bytes
    fetched_at: datetime


@dataclass
class PatentRecord:
    patent_number: str
    issue_date: date
    title: str
    assignees: list[tuple[str, str]] = field(default_factory=list)
    inventors: list[tuple[str, str]] = field(default_factory=list)
    patent_refs: list[str] = field(default_factory=list)
    nplr: list[str] = field(default_factory=list)

    def to_json(self) -> str:
        d = asdict(self)
        d["issue_date"] = self.issue_date.isoformat()
        d["assignees"] = [list(a) for a in self.assignees]
        d["inventors"] = [list(a) for a in self.inventors]
        return json.dumps(d, ensure_ascii=False, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "PatentRecord":
        return cls(
            patent_number=d["patent_number"],
            issue_date=date.fromisoformat(d["issue_date"]),
            title=d["title"],
            assignees=[tuple(a) for a in d.get("assignees", [])],
            inventors=[tuple(a) for a in d.get("inventors", [])],
            patent_refs=list(d.get("patent_refs", [])),
            nplr=list(d.get("nplr", [])),
        )

    def quoted_titles(self) -> list[str]:
        titles = (textkit.extract_quoted_title(s) for s in self.nplr)
        return [t for t in titles if t is not None]


@dataclass
class CorpusStats:
    n_patents: int = 0
    n_assignees: int = 0
    n_inventors: int = 0
    n_patent_refs: int = 0
    n_nplr: int = 0
    n_nplr_quoted: int = 0
    n_patents_with_quoted_nplr: int = 0
    n_unique_title_words: int = 0


# -- harvesting ---------------------------------------------------------------


def page_for_record(n: int, page_size: int = 50) -> int:
    """Result-screen number holding 1-based record ``n``."""
    return (n - 1) // page_size + 1


def build_harvest_urls(plan: HarvestPlan) -> list[tuple[int, str]]:
    """Expand the query template into one URL per hit.

    The page counter advances after every ``page_size``-th record, so with
    screens of 50 the records 1..50 live on page 1 and record 51 on page 2.
    """
    tpl = plan.query_template
    for ph in (RECORD_PLACEHOLDER, PAGE_PLACEHOLDER):
        if ph not in tpl:
            raise ConfigError(f"query_template lacks the {ph} placeholder")
    urls = []
    page = 1
    for n in range(1, plan.total_hits + 1):
        urls.append((n, tpl.replace(RECORD_PLACEHOLDER, str(n)).replace(PAGE_PLACEHOLDER, str(page))))
        if n % plan.page_size == 0:
            page += 1
    return urls


def document_path(output_dir: Path, record_index: int) -> Path:
    return Path(output_dir) / f"p{record_index}.htm"


def atomic_write(path: Path, data: bytes | str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, str):
        data = data.encode("utf-8")
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class RateLimiter:
    """Global minimum spacing between requests, shared by all workers."""

    def __init__(self, min_interval_ms: float, clock: Callable[[], float] = time.monotonic,
                 sleep: Callable[[float], None] = time.sleep):
        self.interval = min_interval_ms / 1000.0
        self._clock = clock
        self._sleep = sleep
        self._lock = threading.Lock()
        self._next = None

    def wait(self) -> None:
        with self._lock:
            now = self._clock()
            if self._next is not None and now < self._next:
                self._sleep(self._next - now)
                now = self._clock()
            self._next = now + self.interval


class FailureJournal:
    def __init__(self, path: Path):
        self.path = Path(path)
        self._lock = threading.Lock()

    def record(self, record_index: int, url: str, error: str, attempts: int) -> None:
        entry = {"record_index": record_index, "url": url, "error": error, "attempts": attempts}
        with self._lock:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(entry, sort_keys=True) + "\n")

    def entries(self) -> list[dict]:
        if not self.path.exists():
            return []
        with open(self.path, encoding="utf-8") as fh:
            return [json.loads(line) for line in fh if line.strip()]


def _now() -> datetime:
    return datetime.now(timezone.utc)


def fetch(
    plan: HarvestPlan,
    urls: Sequence[tuple[int, str]],
    *,
    fixtures: str | Path | None = None,
    session: requests.Session | None = None,
    timeout: float = 30.0,
    backoff: float = 0.0,
) -> Iterator[RawDocument]:
    """Download (or replay) documents, yielding them in record order.

    Every document is stored as ``p<N>.htm`` in ``plan.output_dir``.  With
    ``plan.resume`` set, indices whose file already exists are skipped
    without a request.  Failures go to ``failures.jsonl`` and the stream
    moves on.
    """
    out = plan.output_dir
    out.mkdir(parents=True, exist_ok=True)
    journal = FailureJournal(out / "failures.jsonl")
    limiter = RateLimiter(plan.rate_limit)
    todo = [(n, u) for n, u in urls if not (plan.resume and document_path(out, n).exists())]
    own_session = session is None and fixtures is None
    if own_session:
        session = requests.Session()

    def replay(item):
        n, url = item
        src = document_path(Path(fixtures), n)
        if not src.exists():
            log.warning("fixture missing for record %d: %s", n, src)
            journal.record(n, url, f"fixture missing: {src.name}", 1)
            return None
        body = src.read_bytes()
        atomic_write(document_path(out, n), body)
        return RawDocument(n, url, body, _now())

    def download(item):
        n, url = item
        error = ""
        for attempt in range(1, plan.attempts + 1):
            limiter.wait()
            try:
                resp = session.get(url, timeout=timeout)
                if resp.status_code == 200 and resp.content:
                    atomic_write(document_path(out, n), resp.content)
                    return RawDocument(n, url, resp.content, _now())
                error = f"HTTP {resp.status_code}"
            except requests.RequestException as exc:
                error = f"{type(exc).__name__}: {exc}"
            log.info("record %d attempt %d failed: %s", n, attempt, error)
            if backoff and attempt < plan.attempts:
                time.sleep(backoff * attempt)
        journal.record(n, url, error, plan.attempts)
        return None

    worker = replay if fixtures is not None else download
    try:
        if plan.workers == 1:
            results: Iterable = map(worker, todo)
            for doc in results:
                if doc is not None:
                    yield doc
        else:
            with ThreadPoolExecutor(max_workers=plan.workers) as pool:
                for doc in pool.map(worker, todo):
                    if doc is not None:
                        yield doc
    finally:
        if own_session:
            session.close()


def load_documents(directory: str | Path) -> list[RawDocument]:
    """Read every saved ``p<N>.htm`` page in index order."""
    docs = []
    for path in Path(directory).glob("p*.htm"):
        m = re.fullmatch(r"p(\d+)\.htm", path.name)
        if m:
            stamp = datetime.fromtimestamp(path.stat().st_mtime, timezone.utc)
            docs.append(RawDocument(int(m.group(1)), path.resolve().as_uri(), path.read_bytes(), stamp))
    docs.sort(key=lambda d: d.record_index)
    return docs


# -- parsing ------------------------------------------------------------------

_WS = re.compile(r"\s+")
_PARTY_RE = re.compile(r"(.+?)\s*\(([^()]*)\)\s*$")
_DATE_FORMATS = ("%B %d, %Y", "%b %d, %Y", "%b. %d, %Y", "%Y-%m-%d")


def _clean(text: str) -> str:
    return _WS.sub(" ", unescape(text)).strip()


def _parse_date(text: str) -> date:
    text = _clean(text)
    for fmt in _DATE_FORMATS:
        try:
            return datetime.strptime(text, fmt).date()
        except ValueError:
            continue
    raise ValueError(f"unrecognized date {text!r}")


def _parse_parties(cell) -> list[tuple[str, str]]:
    """Split an inventor/assignee cell into (name, country) pairs.

    Each party is a bold name followed by a parenthesized location whose
    last comma-separated token is the country code.
    """
    parties = []
    for b in cell.find_all("b"):
        name = _clean(b.get_text(" "))
        loc = ""
        sib = b.next_sibling
        while sib is not None and getattr(sib, "name", None) != "b":
            loc += sib if isinstance(sib, str) else sib.get_text(" ")
            sib = sib.next_sibling
        m = re.search(r"\(([^()]*)\)", loc)
        country = ""
        if m:
            country = _clean(m.group(1)).split(",")[-1].strip().upper()
        if name:
            parties.append((name, country))
    return parties


def _section_header(soup, label: str):
    for tag in soup.find_all(["center", "b"]):
        if _clean(tag.get_text(" ")).lower() == label.lower():
            return tag
    return None


def _next_table(tag):
    nxt = tag.find_next(["table", "center"])
    while nxt is not None and nxt.name == "center" and nxt.find("b") is None:
        nxt = nxt.find_next(["table", "center"])
    return nxt if nxt is not None and nxt.name == "table" else None


def _cited_numbers(soup, label: str) -> list[str]:
    head = _section_header(soup, label)
    if head is None:
        return []
    table = _next_table(head)
    if table is None:
        return []
    refs = []
    for row in table.find_all("tr"):
        cells = row.find_all("td")
        if cells:
            num = _clean(cells[0].get_text(" "))
            if num:
                refs.append(num)
    return refs


def _other_references(soup) -> list[str]:
    head = _section_header(soup, "Other References")
    if head is None:
        return []
    table = _next_table(head)
    if table is None:
        return []
    cell = table.find("td")
    if cell is None:
        return []
    chunks, cur = [], []
    for node in cell.descendants:
        if getattr(node, "name", None) == "br":
            chunks.append("".join(cur))
            cur = []
        elif isinstance(node, str):
            cur.append(str(node))
    chunks.append("".join(cur))
    return [c for c in (_clean(x) for x in chunks) if c]


def parse_patent(doc: RawDocument) -> PatentRecord:
    """Parse a full-text patent page into a :class:`PatentRecord`."""
    try:
        html = doc.body.decode("utf-8")
    except UnicodeDecodeError:
        html = doc.body.decode("latin-1")
    soup = BeautifulSoup(html, "html.parser")

    number = issue = None
    head_table = soup.find("table")
    if head_table is not None:
        cells = [_clean(td.get_text(" ")) for td in head_table.find_all("td")]
        for i, text in enumerate(cells):
            if text.lower().startswith("united states patent") and i + 1 < len(cells):
                number = cells[i + 1].replace(",", "")
            if i >= 2 and issue is None:
                try:
                    issue = _parse_date(text)
                except ValueError:
                    pass
    if not number:
        raise ParseError(doc.record_index, "patent number not found")
    if issue is None:
        raise ParseError(doc.record_index, "issue date not found")

    font = soup.find("font", attrs={"size": "+1"})
    if font is None:
        raise ParseError(doc.record_index, "title not found")
    title = _clean(font.get_text(" "))

    inventors, assignees = [], []
    for th in soup.find_all("th"):
        label = _clean(th.get_text(" ")).rstrip(":").lower()
        cell = th.find_next_sibling("td")
        if cell is None:
            continue
        if label in ("inventor", "inventors"):
            inventors = _parse_parties(cell)
        elif label in ("assignee", "assignees"):
            assignees = _parse_parties(cell)

    refs = _cited_numbers(soup, "U.S. Patent Documents") + _cited_numbers(soup, "Foreign Patent Documents")
    return PatentRecord(
        patent_number=number,
        issue_date=issue,
        title=title,
        assignees=assignees,
        inventors=inventors,
        patent_refs=refs,
        nplr=_other_references(soup),
    )


# -- corpus-level helpers -----------------------------------------------------


def write_jsonl(records: Iterable[PatentRecord], path: str | Path) -> None:
    atomic_write(Path(path), "".join(r.to_json() + "\n" for r in records))


def read_jsonl(path: str | Path) -> list[PatentRecord]:
    with open(path, encoding="utf-8") as fh:
        return [PatentRecord.from_dict(json.loads(line)) for line in fh if line.strip()]


def deduplicate(records: Iterable[PatentRecord]) -> list[PatentRecord]:
    """Keep the first record for each patent number."""
    seen = set()
    out = []
    for r in records:
        if r.patent_number not in seen:
            seen.add(r.patent_number)
            out.append(r)
    return out


def filter_assignees(records: Iterable[PatentRecord], root: str = "univ",
                     exclude: Sequence[str] = DEFAULT_ASSIGNEE_EXCLUSIONS) -> list[PatentRecord]:
    """Keep records with an assignee word starting with ``root``.

    Words in ``exclude`` (e.g. "universal") match the root but do not count.
    """
    root = root.lower()
    banned = {w.lower() for w in exclude}
    kept = []
    for r in records:
        for name, _ in r.assignees:
            words = textkit.tokenize(name)
            if any(w.startswith(root) and w not in banned for w in words):
                kept.append(r)
                break
    return kept


def corpus_stats(records: Iterable[PatentRecord], stopwords: textkit.StopwordList | None = None) -> CorpusStats:
    st = CorpusStats()
    vocab = set()
    for r in records:
        st.n_patents += 1
        st.n_assignees += len(r.assignees)
        st.n_inventors += len(r.inventors)
        st.n_patent_refs += len(r.patent_refs)
        st.n_nplr += len(r.nplr)
        quoted = len(r.quoted_titles())
        st.n_nplr_quoted += quoted
        st.n_patents_with_quoted_nplr += quoted > 0
        vocab.update(textkit.normalize_title(r.title, stopwords))
    st.n_unique_title_words = len(vocab)
    return st
