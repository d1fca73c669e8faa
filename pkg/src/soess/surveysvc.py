"""HTTP survey service: participant gating, balanced thread assignment
with a planted quality-gate thread, response capture, and post-filtering.

The store is an in-memory state machine backed by an append-only event
log, so a restarted service replays to the same state.  Assignment and
finalize run under one lock; the balancer counts finalized ratings plus a
soft 0.5 weight for recent unfinished assignments, which keeps concurrent
participants from herding onto the same threads.
"""

from __future__ import annotations

import html as _html
import json
import random
import secrets
import threading
import time
from dataclasses import dataclass
from html.parser import HTMLParser
from pathlib import Path

from fastapi import FastAPI
from fastapi.responses import HTMLResponse, JSONResponse, PlainTextResponse
from pydantic import BaseModel, Field

from .errors import ConfigurationError, SoessError
from .preprocess import (
    CODE_TOKEN,
    LINK_TOKEN,
    SentenceRecord,
    normalize_paragraph_parts,
    preprocess_answer,
    split_blocks,
)

EVENT_LOG_HEADER = {"format": "soess-events", "version": 1}
SNAPSHOT_VERSION = 1

STUDY_THREADS_PER_PARTICIPANT = 3
DEFAULT_RESERVATION_TTL = 30 * 60.0

BQ5_NO_EXPERIENCE = "no experience at all using json"


class UnknownTokenError(SoessError):
    pass


class UnknownThreadError(SoessError):
    pass


class SessionConflictError(SoessError):
    pass


class ResponseValidationError(SoessError):
    def __init__(self, message: str, missing: list[str] | None = None):
        super().__init__(message)
        self.missing = missing or []


@dataclass
class QualityGateSpec:
    thread_id: int
    sentence_id: str
    sentence_text: str = "Hope this helps."
    passing_sr3: frozenset[int] = frozenset({1, 2})

    @classmethod
    def load(cls, path) -> "QualityGateSpec":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
            return cls(
                thread_id=int(data["thread_id"]),
                sentence_id=data["sentence_id"],
                sentence_text=data.get("sentence_text", "Hope this helps."),
                passing_sr3=frozenset(data.get("passing_sr3", [1, 2])),
            )
        except (OSError, KeyError, ValueError, json.JSONDecodeError) as exc:
            raise ConfigurationError(f"bad quality gate config {path}: {exc}") from exc


@dataclass
class Participant:
    token: str
    background: dict
    created_at: float
    status: str = "active"  # active | completed | rejected_at_gate | screened_out
    pilot: bool = False
    client_ref: str | None = None
    receipt: dict | None = None


@dataclass
class Assignment:
    token: str
    thread_ids: list[int]            # 4 threads in presentation order
    gate_thread_id: int
    highlights: dict[int, list[str]]
    created_at: float

    @property
    def study_thread_ids(self) -> list[int]:
        return [t for t in self.thread_ids if t != self.gate_thread_id]

    def all_sentence_ids(self) -> list[str]:
        ids = []
        for tid in self.thread_ids:
            ids.extend(self.highlights[tid])
        return ids


# ---------------------------------------------------------------------------
# thread rendering

class _Sanitizer(HTMLParser):
    """Drops script-like subtrees and event-handler attributes."""

    DROP = {"script", "style", "iframe", "object", "embed", "form"}
    VOID = {"br", "hr", "img", "input", "meta", "link", "area", "col", "wbr"}

    def __init__(self):
        super().__init__(convert_charrefs=False)
        self.out: list[str] = []
        self._drop_depth = 0
        self._drop_tag: str | None = None

    def _clean_attrs(self, attrs):
        cleaned = []
        for name, value in attrs:
            low = name.lower()
            if low.startswith("on"):
                continue
            if low in ("href", "src") and value and \
                    value.strip().lower().startswith(("javascript:", "data:", "vbscript:")):
                continue
            if value is None:
                cleaned.append(low)
            else:
                cleaned.append(f'{low}="{_html.escape(value, quote=True)}"')
        return (" " + " ".join(cleaned)) if cleaned else ""

    def handle_starttag(self, tag, attrs):
        if self._drop_tag:
            if tag == self._drop_tag:
                self._drop_depth += 1
            return
        if tag in self.DROP:
            self._drop_tag = tag
            self._drop_depth = 1
            return
        self.out.append(f"<{tag}{self._clean_attrs(attrs)}>")

    def handle_startendtag(self, tag, attrs):
        if self._drop_tag or tag in self.DROP:
            return
        self.out.append(f"<{tag}{self._clean_attrs(attrs)}/>")

    def handle_endtag(self, tag):
        if self._drop_tag:
            if tag == self._drop_tag:
                self._drop_depth -= 1
                if self._drop_depth == 0:
                    self._drop_tag = None
            return
        if tag not in self.VOID:
            self.out.append(f"</{tag}>")

    def handle_data(self, data):
        if not self._drop_tag:
            self.out.append(_html.escape(data, quote=False))

    def handle_entityref(self, name):
        if not self._drop_tag:
            self.out.append(f"&{name};")

    def handle_charref(self, name):
        if not self._drop_tag:
            self.out.append(f"&#{name};")


def sanitize_html(chunk: str) -> str:
    parser = _Sanitizer()
    parser.feed(chunk or "")
    parser.close()
    return "".join(parser.out)


HIGHLIGHT_CLASS = "essential-highlight"


def _annotate_paragraph(inner_html: str, spans: list[tuple[int, int, str]]) -> str:
    """Paragraph display HTML with highlighted sentence spans wrapped in
    span markers.  Span boundaries always fall on word boundaries."""
    _text, _origins, parts = normalize_paragraph_parts(inner_html)
    starts = {a: sid for a, _b, sid in spans}
    ends = {b for _a, b, _sid in spans}
    out = []
    pos = 0
    for start, end, display in parts:
        if out and start > pos:
            out.append(" ")
        if start in starts:
            sid = starts[start]
            out.append(f'<span class="{HIGHLIGHT_CLASS}" data-sentence-id="{_html.escape(sid, quote=True)}">')
        out.append(display)
        if end in ends:
            out.append("</span>")
        pos = end
    return "".join(out)


def display_sentence_text(record: SentenceRecord) -> str:
    """Sentence text with LINK/CW placeholders restored to their original
    surfaces, for the margin question panel."""
    text = record.text
    for offset in sorted(record.placeholder_origins, reverse=True):
        original = record.placeholder_origins[offset]
        if not original:
            continue
        if text.startswith(LINK_TOKEN, offset):
            width = len(LINK_TOKEN)
        elif text.startswith(CODE_TOKEN, offset):
            width = len(CODE_TOKEN)
        else:
            continue
        text = text[:offset] + original + text[offset + width:]
    return text


def render_answer_html(body_html: str, highlight_records: list[SentenceRecord]) -> str:
    """Sanitized answer HTML with highlight markers around the given
    sentences.  Non-paragraph blocks pass through sanitized."""
    by_paragraph: dict[int, list[tuple[int, int, str]]] = {}
    for rec in highlight_records:
        paragraph_index = int(rec.sentence_id.split(":")[2])
        a, b = rec.char_span
        by_paragraph.setdefault(paragraph_index, []).append((a, b, rec.sentence_id))

    pieces = []
    p_index = 0
    for kind, content in split_blocks(body_html):
        if kind == "p":
            spans = sorted(by_paragraph.get(p_index, []))
            pieces.append("<p>" + _annotate_paragraph(content, spans) + "</p>")
            p_index += 1
        else:
            pieces.append(sanitize_html(content))
    return "\n".join(pieces)


@dataclass
class SurveyThread:
    thread_id: int
    title: str
    question_html: str
    answers: list[dict]
    highlight_ids: list[str]
    sentences: dict[str, SentenceRecord]
    answer_scores: dict[int, int]

    def payload(self) -> dict:
        return {
            "thread_id": self.thread_id,
            "title": self.title,
            "question_html": self.question_html,
            "answers": self.answers,
            "highlights": [
                {
                    "sentence_id": sid,
                    "answer_id": int(sid.split(":")[1]),
                    "text": display_sentence_text(self.sentences[sid]),
                }
                for sid in self.highlight_ids
            ],
        }


def build_survey_thread(thread, highlight_ids: list[str]) -> SurveyThread:
    """Render payload for one thread; highlight markers carry no technique
    information."""
    records: dict[str, SentenceRecord] = {}
    per_answer: dict[int, list[SentenceRecord]] = {}
    wanted = set(highlight_ids)
    for answer in thread.answers:
        recs = preprocess_answer(thread.id, answer.id, answer.body_html)
        for rec in recs:
            records[rec.sentence_id] = rec
            if rec.sentence_id in wanted:
                per_answer.setdefault(answer.id, []).append(rec)
    missing = wanted - set(records)
    if missing:
        raise ConfigurationError(
            f"thread {thread.id}: unknown highlighted sentences {sorted(missing)}"
        )
    answers = [
        {
            "answer_id": answer.id,
            "score": answer.score,
            "html": render_answer_html(answer.body_html, per_answer.get(answer.id, [])),
            "highlight_ids": [r.sentence_id for r in per_answer.get(answer.id, [])],
        }
        for answer in thread.answers
    ]
    return SurveyThread(
        thread_id=thread.id,
        title=thread.title,
        question_html=sanitize_html(thread.question_body_html),
        answers=answers,
        highlight_ids=[sid for sid in highlight_ids if sid in records],
        sentences={sid: records[sid] for sid in highlight_ids},
        answer_scores={a.id: a.score for a in thread.answers},
    )


@dataclass
class SurveyContent:
    threads: dict[int, SurveyThread]
    gate: QualityGateSpec

    @property
    def study_thread_ids(self) -> list[int]:
        return sorted(t for t in self.threads if t != self.gate.thread_id)


def build_survey_content(threads_by_id: dict, evalset, gate: QualityGateSpec) -> SurveyContent:
    """Survey content from a corpus, an evaluation set, and the gate spec.

    Highlights per study thread are the union of all technique
    selections; the gate thread highlights exactly the gate sentence.
    """
    content: dict[int, SurveyThread] = {}
    for tid in evalset.thread_ids:
        if tid not in threads_by_id:
            raise ConfigurationError(f"evaluation thread {tid} missing from corpus")
        ids = sorted({sid for ids in evalset.sentence_ids[tid].values() for sid in ids})
        content[tid] = build_survey_thread(threads_by_id[tid], ids)
    if gate.thread_id not in threads_by_id:
        raise ConfigurationError(f"gate thread {gate.thread_id} missing from corpus")
    if gate.thread_id in content:
        raise ConfigurationError("gate thread must not be part of the evaluation set")
    gate_thread = build_survey_thread(threads_by_id[gate.thread_id], [gate.sentence_id])
    actual = gate_thread.sentences[gate.sentence_id].text
    if gate.sentence_text and actual != gate.sentence_text:
        raise ConfigurationError(
            f"gate sentence text mismatch: expected {gate.sentence_text!r}, found {actual!r}"
        )
    content[gate.thread_id] = gate_thread
    return SurveyContent(threads=content, gate=gate)


# ---------------------------------------------------------------------------
# store

def _screened_out(background: dict) -> bool:
    bq5 = str(background.get("bq5", "")).strip().lower()
    bq6 = str(background.get("bq6", "")).strip().lower()
    return bq5 == BQ5_NO_EXPERIENCE or bq6 != "yes"


class SurveyStore:
    """All mutable survey state; thread-safe; persisted via event log."""

    def __init__(
        self,
        content: SurveyContent,
        seed: int = 0,
        log_path: str | Path | None = None,
        pilot: bool = False,
        reservation_ttl: float = DEFAULT_RESERVATION_TTL,
        clock=time.time,
    ):
        self.content = content
        self.pilot = pilot
        self.reservation_ttl = reservation_ttl
        self._clock = clock
        self._rng = random.Random(seed)
        self._lock = threading.RLock()

        self.participants: dict[str, Participant] = {}
        self.assignments: dict[str, Assignment] = {}
        self.responses: dict[tuple[str, str], dict] = {}
        self.exits: dict[str, dict] = {}
        self.completed_counts: dict[int, int] = {
            tid: 0 for tid in content.study_thread_ids
        }
        self._by_client_ref: dict[str, str] = {}

        self._log_path = Path(log_path) if log_path else None
        if self._log_path and self._log_path.exists():
            self._replay()
        elif self._log_path:
            self._log_path.parent.mkdir(parents=True, exist_ok=True)
            self._log_path.write_text(json.dumps(EVENT_LOG_HEADER) + "\n", encoding="utf-8")

    # -- persistence -----------------------------------------------------
    def _append_event(self, kind: str, data: dict):
        if not self._log_path:
            return
        with open(self._log_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps({"event": kind, **data}, sort_keys=True) + "\n")

    def _replay(self):
        lines = self._log_path.read_text(encoding="utf-8").split("\n")
        if not lines or not lines[0].strip():
            self._log_path.write_text(json.dumps(EVENT_LOG_HEADER) + "\n", encoding="utf-8")
            return
        header = json.loads(lines[0])
        if header.get("format") != EVENT_LOG_HEADER["format"] or \
                header.get("version") != EVENT_LOG_HEADER["version"]:
            raise ConfigurationError(f"unsupported event log header: {header}")
        for line in lines[1:]:
            if not line.strip():
                continue
            event = json.loads(line)
            kind = event.pop("event")
            if kind == "participant":
                p = Participant(
                    token=event["token"], background=event["background"],
                    created_at=event["created_at"], pilot=event["pilot"],
                    client_ref=event.get("client_ref"),
                )
                self.participants[p.token] = p
                if p.client_ref:
                    self._by_client_ref[p.client_ref] = p.token
            elif kind == "assignment":
                a = Assignment(
                    token=event["token"],
                    thread_ids=event["thread_ids"],
                    gate_thread_id=event["gate_thread_id"],
                    highlights={int(k): v for k, v in event["highlights"].items()},
                    created_at=event["created_at"],
                )
                self.assignments[a.token] = a
            elif kind == "response":
                self.responses[(event["token"], event["sentence_id"])] = event["data"]
            elif kind == "finalize":
                token = event["token"]
                self.exits[token] = event["exit"]
                participant = self.participants[token]
                participant.status = "completed"
                participant.receipt = event["receipt"]
                for tid in self.assignments[token].study_thread_ids:
                    if tid in self.completed_counts:
                        self.completed_counts[tid] += 1

    def snapshot(self) -> dict:
        """Versioned point-in-time state dump."""
        with self._lock:
            return {
                "version": SNAPSHOT_VERSION,
                "participants": {
                    t: {
                        "background": p.background, "created_at": p.created_at,
                        "status": p.status, "pilot": p.pilot,
                        "client_ref": p.client_ref,
                    }
                    for t, p in self.participants.items()
                },
                "completed_counts": dict(self.completed_counts),
                "responses": len(self.responses),
            }

    # -- session lifecycle -------------------------------------------------
    def create_session(self, background: dict, client_ref: str | None = None,
                       pilot: bool | None = None) -> Participant:
        """Issue a token unless the answers screen the participant out.

        A repeated submission with the same client_ref returns the same
        token; the same client_ref with different answers conflicts.
        """
        with self._lock:
            if client_ref and client_ref in self._by_client_ref:
                existing = self.participants[self._by_client_ref[client_ref]]
                if existing.background == background:
                    return existing
                raise SessionConflictError(
                    f"client {client_ref!r} already has a session with different answers"
                )
            participant = Participant(
                token=secrets.token_urlsafe(16),
                background=background,
                created_at=self._clock(),
                pilot=self.pilot if pilot is None else pilot,
                client_ref=client_ref,
            )
            if _screened_out(background):
                participant.status = "screened_out"
                return participant
            self.participants[participant.token] = participant
            if client_ref:
                self._by_client_ref[client_ref] = participant.token
            self._append_event("participant", {
                "token": participant.token, "background": background,
                "created_at": participant.created_at, "pilot": participant.pilot,
                "client_ref": client_ref,
            })
            return participant

    def _participant(self, token: str) -> Participant:
        participant = self.participants.get(token)
        if participant is None:
            raise UnknownTokenError(f"unknown token {token!r}")
        return participant

    def _thread_weight(self, tid: int, now: float) -> float:
        weight = float(self.completed_counts.get(tid, 0))
        for token, assignment in self.assignments.items():
            participant = self.participants[token]
            if participant.status != "active":
                continue
            if now - assignment.created_at > self.reservation_ttl:
                continue
            if tid in assignment.study_thread_ids:
                weight += 0.5
        return weight

    def get_assignment(self, token: str) -> Assignment:
        """The participant's assignment, created on first request.

        Picks the study threads with the lowest rating counts (random,
        seeded tie-break) and plants the gate thread at a uniformly random
        position."""
        with self._lock:
            participant = self._participant(token)
            if token in self.assignments:
                return self.assignments[token]
            pool = self.content.study_thread_ids
            if len(pool) < STUDY_THREADS_PER_PARTICIPANT:
                raise ConfigurationError("evaluation set has too few threads")
            now = self._clock()
            ranked = sorted(
                pool, key=lambda tid: (self._thread_weight(tid, now), self._rng.random())
            )
            study = ranked[:STUDY_THREADS_PER_PARTICIPANT]
            gate_tid = self.content.gate.thread_id
            position = self._rng.randrange(STUDY_THREADS_PER_PARTICIPANT + 1)
            thread_ids = list(study)
            thread_ids.insert(position, gate_tid)
            assignment = Assignment(
                token=token,
                thread_ids=thread_ids,
                gate_thread_id=gate_tid,
                highlights={
                    tid: list(self.content.threads[tid].highlight_ids)
                    for tid in thread_ids
                },
                created_at=now,
            )
            self.assignments[token] = assignment
            self._append_event("assignment", {
                "token": token, "thread_ids": thread_ids,
                "gate_thread_id": gate_tid,
                "highlights": {str(k): v for k, v in assignment.highlights.items()},
                "created_at": now,
            })
            return assignment

    def submit_response(self, token: str, sentence_id: str, sr1: int, sr2: int,
                        sr3: int, sr4_justification: str) -> None:
        """Record one sentence rating; revisable until finalize."""
        with self._lock:
            participant = self._participant(token)
            if participant.status == "completed":
                raise ResponseValidationError("session already finalized")
            assignment = self.assignments.get(token)
            if assignment is None or sentence_id not in assignment.all_sentence_ids():
                raise ResponseValidationError(
                    f"sentence {sentence_id!r} is not part of this assignment"
                )
            if sr1 not in (1, 2, 3):
                raise ResponseValidationError("sr1 must be 1, 2 or 3")
            if not (1 <= sr2 <= 5 and 1 <= sr3 <= 5):
                raise ResponseValidationError("sr2/sr3 must be Likert 1..5")
            data = {"sr1": sr1, "sr2": sr2, "sr3": sr3,
                    "sr4_justification": sr4_justification}
            self.responses[(token, sentence_id)] = data
            self._append_event("response", {
                "token": token, "sentence_id": sentence_id, "data": data,
            })

    def finalize(self, token: str, exit_answers: dict) -> dict:
        """Complete a session once every highlighted sentence is rated."""
        with self._lock:
            participant = self._participant(token)
            if participant.status == "completed":
                return participant.receipt
            assignment = self.assignments.get(token)
            if assignment is None:
                raise ResponseValidationError("no assignment for this session")
            missing = [
                sid for sid in assignment.all_sentence_ids()
                if (token, sid) not in self.responses
            ]
            if missing:
                raise ResponseValidationError(
                    f"missing responses for {len(missing)} sentences", missing=missing
                )
            participant.status = "completed"
            receipt = {"token": token, "status": "completed"}
            participant.receipt = receipt
            self.exits[token] = exit_answers
            for tid in assignment.study_thread_ids:
                if tid in self.completed_counts:
                    self.completed_counts[tid] += 1
            self._append_event("finalize", {
                "token": token, "exit": exit_answers, "receipt": receipt,
            })
            return receipt

    # -- post-filtering ----------------------------------------------------
    def apply_quality_gate(self) -> set[str]:
        """Mark completed participants that failed the gate; return the
        kept tokens."""
        gate = self.content.gate
        kept = set()
        with self._lock:
            for token, participant in self.participants.items():
                if participant.status not in ("completed", "rejected_at_gate"):
                    continue
                response = self.responses.get((token, gate.sentence_id))
                if response is not None and response["sr3"] in gate.passing_sr3:
                    participant.status = "completed"
                    kept.add(token)
                else:
                    participant.status = "rejected_at_gate"
        return kept

    def export_records(self) -> list[dict]:
        """Analysis rows: gate-passing, non-pilot participants only, and
        never any gate-thread sentences."""
        kept = self.apply_quality_gate()
        rows = []
        gate_tid = self.content.gate.thread_id
        with self._lock:
            for (token, sentence_id), data in sorted(self.responses.items()):
                if token not in kept:
                    continue
                participant = self.participants[token]
                if participant.pilot:
                    continue
                thread_id = int(sentence_id.split(":")[0])
                if thread_id == gate_tid:
                    continue
                thread = self.content.threads.get(thread_id)
                answer_id = int(sentence_id.split(":")[1])
                rows.append({
                    "token": token,
                    "thread_id": thread_id,
                    "sentence_id": sentence_id,
                    "answer_id": answer_id,
                    "answer_score": (thread.answer_scores.get(answer_id, 0) if thread else 0),
                    **data,
                })
        return rows

    def assignment_thread_counts(self) -> dict[int, int]:
        """How many assignments reference each study thread."""
        counts = {tid: 0 for tid in self.content.study_thread_ids}
        with self._lock:
            for assignment in self.assignments.values():
                for tid in assignment.study_thread_ids:
                    if tid in counts:
                        counts[tid] += 1
        return counts


# ---------------------------------------------------------------------------
# HTTP app

class BackgroundAnswers(BaseModel):
    bq1: str = Field(min_length=1)
    bq2: str = Field(min_length=1)
    bq3: str = Field(min_length=1)
    bq4: str = Field(min_length=1)
    bq5: str = Field(min_length=1)
    bq6: str = Field(min_length=1)
    bq7: str = Field(min_length=1)


class SessionRequest(BaseModel):
    answers: BackgroundAnswers
    client_ref: str | None = None


class ResponsePayload(BaseModel):
    token: str
    sentence_id: str
    sr1: int = Field(ge=1, le=3)
    sr2: int = Field(ge=1, le=5)
    sr3: int = Field(ge=1, le=5)
    sr4_justification: str


class ExitPayload(BaseModel):
    eq1: str = ""
    eq2: str = ""
    eq3: str = ""
    eq4: str = ""
    eq5: str = ""


def create_app(store: SurveyStore) -> FastAPI:
    app = FastAPI(title="soess survey service")

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.post("/sessions", status_code=201)
    def create_session(request: SessionRequest):
        try:
            participant = store.create_session(
                request.answers.model_dump(), client_ref=request.client_ref
            )
        except SessionConflictError as exc:
            return JSONResponse(status_code=409, content={"detail": str(exc)})
        if participant.status == "screened_out":
            return JSONResponse(status_code=422, content={"detail": "screened_out"})
        return {"token": participant.token}

    @app.get("/sessions/{token}/assignment")
    def assignment(token: str):
        try:
            a = store.get_assignment(token)
        except UnknownTokenError as exc:
            return JSONResponse(status_code=404, content={"detail": str(exc)})
        except ConfigurationError as exc:
            return JSONResponse(status_code=503, content={"detail": str(exc)})
        return {
            "token": token,
            "threads": a.thread_ids,
            "highlights": {str(tid): ids for tid, ids in a.highlights.items()},
        }

    @app.get("/threads/{thread_id}")
    def thread(thread_id: int):
        survey_thread = store.content.threads.get(thread_id)
        if survey_thread is None:
            return JSONResponse(status_code=404, content={"detail": "unknown thread"})
        return survey_thread.payload()

    @app.post("/responses")
    def responses(payload: ResponsePayload):
        try:
            store.submit_response(
                payload.token, payload.sentence_id,
                payload.sr1, payload.sr2, payload.sr3, payload.sr4_justification,
            )
        except UnknownTokenError as exc:
            return JSONResponse(status_code=404, content={"detail": str(exc)})
        except ResponseValidationError as exc:
            return JSONResponse(status_code=422, content={"detail": str(exc)})
        return {"status": "recorded"}

    @app.post("/sessions/{token}/finalize")
    def finalize(token: str, exit_answers: ExitPayload):
        try:
            receipt = store.finalize(token, exit_answers.model_dump())
        except UnknownTokenError as exc:
            return JSONResponse(status_code=404, content={"detail": str(exc)})
        except ResponseValidationError as exc:
            return JSONResponse(
                status_code=422,
                content={"detail": str(exc), "missing": exc.missing},
            )
        return receipt

    @app.get("/export")
    def export():
        lines = [json.dumps(row, sort_keys=True) for row in store.export_records()]
        return PlainTextResponse(
            "\n".join(lines) + ("\n" if lines else ""),
            media_type="application/x-ndjson",
        )

    static_dir = Path(__file__).parent / "static"
    if static_dir.exists():
        index = static_dir / "index.html"

        @app.get("/")
        def root():
            return HTMLResponse(index.read_text(encoding="utf-8"))

    return app


def store_from_env() -> SurveyStore:
    """Build a store from SOESS_* environment variables.

    SOESS_CORPUS, SOESS_EVALSET, SOESS_GATE_CONFIG are required paths;
    SOESS_SURVEY_STORE (event log), SOESS_SURVEY_SEED and SOESS_PILOT are
    optional."""
    import os

    from .corpus import load_corpus
    from .studysampler import load_evaluation_set

    corpus_path = os.environ.get("SOESS_CORPUS")
    evalset_path = os.environ.get("SOESS_EVALSET")
    gate_path = os.environ.get("SOESS_GATE_CONFIG")
    if not (corpus_path and evalset_path and gate_path):
        raise ConfigurationError(
            "SOESS_CORPUS, SOESS_EVALSET and SOESS_GATE_CONFIG must be set"
        )
    threads = {t.id: t for t in load_corpus(corpus_path)}
    evalset = load_evaluation_set(evalset_path)
    gate = QualityGateSpec.load(gate_path)
    content = build_survey_content(threads, evalset, gate)
    return SurveyStore(
        content,
        seed=int(os.environ.get("SOESS_SURVEY_SEED", "0")),
        log_path=os.environ.get("SOESS_SURVEY_STORE"),
        pilot=os.environ.get("SOESS_PILOT", "").lower() in ("1", "true", "yes"),
    )
