"""Thread acquisition, filtering, and a reproducible on-disk corpus.

Threads come either from the live Stack Exchange API or from a recorded
page archive (a JSON file of API-shaped pages), so the whole pipeline can
run offline and deterministically.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import requests

from .errors import ConfigurationError, SoessError

CORPUS_HEADER = "soess-corpus v1"
API_PAGE_SIZE = 100


class FetchError(SoessError):
    """Retriable fetch failure; carries the page index that failed."""

    def __init__(self, message: str, page: int):
        super().__init__(f"{message} (page {page})")
        self.page = page


class ThrottledError(SoessError):
    """API quota exhausted; retry after the backoff window."""

    def __init__(self, message: str, backoff: float = 0.0):
        super().__init__(message)
        self.backoff = backoff


class CorpusFormatError(SoessError):
    pass


class CorpusVersionError(CorpusFormatError):
    """Stored corpus header does not match; migration required."""


@dataclass
class Answer:
    id: int
    score: int
    is_accepted: bool
    body_html: str


@dataclass
class Thread:
    id: int
    title: str
    question_body_html: str
    question_score: int
    creation_date: datetime
    tags: set[str]
    answers: list[Answer] = field(default_factory=list)


@dataclass
class TagVocabulary:
    tags: frozenset[str]
    snapshot_date: datetime

    def __contains__(self, tag: str) -> bool:
        return tag in self.tags

    def __len__(self) -> int:
        return len(self.tags)


@dataclass
class CorpusFilter:
    tag: str
    date_from: datetime
    date_to: datetime
    min_question_score: int = 0
    min_answers: int = 0

    def __post_init__(self):
        if self.date_from > self.date_to:
            raise ValueError("date_from must not be after date_to")


def _utc(ts: int) -> datetime:
    return datetime.fromtimestamp(ts, tz=timezone.utc)


def _sort_answers(answers: list[Answer]) -> list[Answer]:
    # site default: score desc, accepted first among equals, then id
    return sorted(answers, key=lambda a: (-a.score, not a.is_accepted, a.id))


def _thread_from_item(item: dict) -> Thread:
    answers = []
    for a in item.get("answers", []):
        body = a.get("body", "")
        if not body:
            continue
        answers.append(Answer(
            id=int(a["answer_id"]),
            score=int(a.get("score", 0)),
            is_accepted=bool(a.get("is_accepted", False)),
            body_html=body,
        ))
    return Thread(
        id=int(item["question_id"]),
        title=item.get("title", ""),
        question_body_html=item.get("body", ""),
        question_score=int(item.get("score", 0)),
        creation_date=_utc(int(item["creation_date"])),
        tags={t.lower() for t in item.get("tags", [])},
        answers=_sort_answers(answers),
    )


def _matches(thread: Thread, flt: CorpusFilter) -> bool:
    return (
        flt.tag in thread.tags
        and thread.question_score >= flt.min_question_score
        and flt.date_from <= thread.creation_date <= flt.date_to
    )


def _archive_pages(path: Path):
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise FetchError(f"cannot read archive {path}: {exc}", page=0) from exc
    pages = payload.get("pages") if isinstance(payload, dict) else None
    if pages is None:
        raise FetchError(f"archive {path} has no 'pages' key", page=0)
    yield from pages


def _api_pages(base_url: str, flt: CorpusFilter, api_filter: str, key: str | None):
    session = requests.Session()
    page = 1
    while True:
        params = {
            "site": "stackoverflow",
            "tagged": flt.tag,
            "fromdate": int(flt.date_from.timestamp()),
            "todate": int(flt.date_to.timestamp()),
            "pagesize": API_PAGE_SIZE,
            "page": page,
            "filter": api_filter,
        }
        if key:
            params["key"] = key
        try:
            resp = session.get(f"{base_url.rstrip('/')}/questions", params=params, timeout=30)
            resp.raise_for_status()
            payload = resp.json()
        except (requests.RequestException, ValueError) as exc:
            raise FetchError(f"API request failed: {exc}", page=page) from exc
        if payload.get("quota_remaining") == 0:
            raise ThrottledError("API quota exhausted", backoff=float(payload.get("backoff", 0)))
        if payload.get("backoff"):
            time.sleep(float(payload["backoff"]))
        yield payload
        if not payload.get("has_more"):
            return
        page += 1


def fetch_threads(flt: CorpusFilter, source: str | Path, api_filter: str = "withbody") -> list[Thread]:
    """Every thread matching the filter, answers embedded, ascending id.

    ``source`` is a Stack Exchange API base URL (http/https) or the path of
    a recorded page archive.  Pagination runs until exhaustion; results are
    deterministic for a given archive.
    """
    src = str(source)
    if src.startswith(("http://", "https://")):
        pages = _api_pages(src, flt, api_filter, os.environ.get("SOESS_API_KEY"))
    else:
        pages = _archive_pages(Path(src))

    threads: dict[int, Thread] = {}
    for page_index, page in enumerate(pages):
        items = page.get("items", [])
        for item in items:
            try:
                thread = _thread_from_item(item)
            except (KeyError, TypeError, ValueError) as exc:
                raise FetchError(f"malformed question item: {exc}", page=page_index) from exc
            if _matches(thread, flt):
                threads[thread.id] = thread
    result = [threads[tid] for tid in sorted(threads)]
    if flt.min_answers:
        result = apply_answer_filter(result, flt.min_answers)
    return result


def apply_answer_filter(threads: list[Thread], min_answers: int) -> list[Thread]:
    """Keep threads with at least min_answers answers; order preserved."""
    return [t for t in threads if len(t.answers) >= min_answers]


def load_tag_vocabulary(path) -> TagVocabulary:
    """One tag per line, # comments ignored, case-folded and deduplicated.

    A ``# snapshot: <ISO date>`` comment pins the snapshot date; otherwise
    the file mtime is used.
    """
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ConfigurationError(f"cannot read tag vocabulary {path}: {exc}") from exc

    snapshot = None
    tags = set()
    for line in lines:
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            body = stripped.lstrip("#").strip()
            if body.lower().startswith("snapshot:"):
                iso = body.split(":", 1)[1].strip()
                snapshot = datetime.fromisoformat(iso)
                if snapshot.tzinfo is None:
                    snapshot = snapshot.replace(tzinfo=timezone.utc)
            continue
        tags.add(stripped.lower())
    if not tags:
        raise ConfigurationError(f"tag vocabulary {path} is empty")
    if snapshot is None:
        snapshot = _utc(int(path.stat().st_mtime))
    return TagVocabulary(tags=frozenset(tags), snapshot_date=snapshot)


def _thread_to_dict(thread: Thread) -> dict:
    return {
        "id": thread.id,
        "title": thread.title,
        "question_body_html": thread.question_body_html,
        "question_score": thread.question_score,
        "creation_date": int(thread.creation_date.timestamp()),
        "tags": sorted(thread.tags),
        "answers": [
            {
                "id": a.id,
                "score": a.score,
                "is_accepted": a.is_accepted,
                "body_html": a.body_html,
            }
            for a in thread.answers
        ],
    }


def _thread_from_dict(data: dict) -> Thread:
    return Thread(
        id=data["id"],
        title=data["title"],
        question_body_html=data["question_body_html"],
        question_score=data["question_score"],
        creation_date=_utc(data["creation_date"]),
        tags=set(data["tags"]),
        answers=[Answer(**a) for a in data["answers"]],
    )


def persist_corpus(threads: list[Thread], path) -> None:
    """Line-delimited, byte-stable corpus file with a version header."""
    lines = [CORPUS_HEADER]
    for thread in threads:
        lines.append(json.dumps(_thread_to_dict(thread), sort_keys=True,
                                ensure_ascii=False, separators=(",", ":")))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_corpus(path) -> list[Thread]:
    """Inverse of persist_corpus; refuses unknown versions and corrupt files."""
    try:
        content = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CorpusFormatError(f"cannot read corpus {path}: {exc}") from exc
    lines = content.split("\n")
    if not lines or lines[0] != CORPUS_HEADER:
        found = lines[0] if lines else "<empty>"
        raise CorpusVersionError(
            f"unsupported corpus header {found!r}; expected {CORPUS_HEADER!r}"
        )
    threads = []
    for lineno, line in enumerate(lines[1:], 2):
        if not line.strip():
            continue
        try:
            threads.append(_thread_from_dict(json.loads(line)))
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise CorpusFormatError(f"{path}:{lineno}: corrupt thread record: {exc}") from exc
    return threads
