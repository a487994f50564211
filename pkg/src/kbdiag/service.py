"""HTTP facade for interactive sessions.

Sessions live in memory with a TTL and die with the process.  Every
session-scoped request takes that session's lock, so concurrent clients on
one session are serialized (the state machine stays clean) while separate
sessions proceed in parallel.  The server computes; the client renders: all
payloads are plain data, and the bundled UI (if a build is present next to
the package) is served as static files from the root path.
"""

from __future__ import annotations

import threading
import time
import uuid
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .dpi import AdmissibilityError, DpiFormatError, parse_dpi
from .logic import ParseError
from .session import Session, SessionConfig, SessionError, SessionFinished

DEFAULT_TTL_S = 3600.0


class SessionCreate(BaseModel):
    dpi_text: str
    n: int = 3
    measure: str = "ent"
    criterion: str = "card"
    enrich: bool = False
    sigma: float = 0.95
    rank: str = "card"
    threshold: float | None = None
    budget: int = 10_000
    seed: int | None = None


class AnswerBody(BaseModel):
    answer: bool


class _Entry:
    __slots__ = ("session", "lock", "touched")

    def __init__(self, session: Session) -> None:
        self.session = session
        self.lock = threading.Lock()
        self.touched = time.monotonic()


class SessionStore:
    """TTL-evicting in-memory map from session id to live session."""

    def __init__(self, ttl_s: float = DEFAULT_TTL_S) -> None:
        self.ttl_s = ttl_s
        self._lock = threading.Lock()
        self._entries: dict[str, _Entry] = {}

    def put(self, session: Session) -> str:
        sid = uuid.uuid4().hex
        with self._lock:
            self._sweep()
            self._entries[sid] = _Entry(session)
        return sid

    def get(self, sid: str) -> _Entry:
        with self._lock:
            self._sweep()
            entry = self._entries.get(sid)
            if entry is None:
                raise KeyError(sid)
            entry.touched = time.monotonic()
            return entry

    def _sweep(self) -> None:
        now = time.monotonic()
        dead = [k for k, e in self._entries.items() if now - e.touched > self.ttl_s]
        for k in dead:
            del self._entries[k]


def default_ui_dir() -> Path:
    return Path(__file__).resolve().parents[2] / "frontend" / "dist"


def create_app(ttl_s: float = DEFAULT_TTL_S,
               static_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="kbdiag sessions")
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])
    store = SessionStore(ttl_s)
    app.state.store = store

    def entry_for(sid: str) -> _Entry:
        try:
            return store.get(sid)
        except KeyError:
            raise HTTPException(404, "unknown session id")

    def diagnoses_payload(session: Session) -> list[dict]:
        return [{
            "ids": sorted(d.ids),
            "formulas": [str(f) for f in session.dpi.formulas_of(d.ids)],
            "prob": session.priors[i],
        } for i, d in enumerate(session.diagnoses)]

    def final_payload(session: Session) -> dict:
        final = session.final_diagnosis()
        assert final is not None
        return {
            "ids": sorted(final.ids),
            "formulas": [str(f) for f in session.dpi.formulas_of(final.ids)],
            "repaired_kb": [str(f) for i, f in enumerate(session.dpi.kb, 1)
                            if i not in final.ids],
        }

    @app.post("/sessions")
    def create_session(body: SessionCreate):
        try:
            dpi = parse_dpi(body.dpi_text)
            cfg = SessionConfig(n=body.n, measure=body.measure,
                                threshold=body.threshold, criterion=body.criterion,
                                enrich=body.enrich, sigma=body.sigma,
                                rank=body.rank, budget=body.budget, seed=body.seed)
            session = Session(dpi, cfg)
        except (ParseError, DpiFormatError, AdmissibilityError, ValueError) as e:
            raise HTTPException(400, str(e))
        sid = store.put(session)
        out = {
            "session_id": sid,
            "diagnoses": diagnoses_payload(session),
            "finished": session.is_finished(),
        }
        if len(session.diagnoses) < 2:
            out["warning"] = "insufficient diagnoses for querying"
        if session.is_finished():
            out["final_diagnosis"] = final_payload(session)
        return out

    @app.get("/sessions/{sid}/query")
    def get_query(sid: str):
        entry = entry_for(sid)
        with entry.lock:
            session = entry.session
            try:
                plan = session.next_query()
            except SessionFinished:
                raise HTTPException(409, "session is finished")
            return {
                "round": plan.round,
                "query": plan.texts(),
                "explicit": sorted(plan.explicit_ids),
                "implicit": [str(f) for f in plan.implicit],
                "qpartition": {
                    "dplus": [sorted(session.diagnoses[i].ids)
                              for i in sorted(plan.node.dplus)],
                    "dminus": [sorted(session.diagnoses[i].ids)
                               for i in sorted(plan.node.dminus)],
                    "dzero": [],
                },
                "measure_value": plan.measure_value,
                "phase_timings": dict(plan.timings_ms),
                "reasoner_calls": dict(plan.reasoner_calls),
            }

    @app.post("/sessions/{sid}/answer")
    def post_answer(sid: str, body: AnswerBody):
        entry = entry_for(sid)
        with entry.lock:
            session = entry.session
            try:
                row = session.submit_answer(body.answer)
            except SessionFinished:
                raise HTTPException(409, "session is finished")
            except SessionError:
                raise HTTPException(409, "no pending query to answer")
            out = {
                "round": row["round"],
                "eliminated": row["eliminated"],
                "remaining": diagnoses_payload(session),
                "finished": session.is_finished(),
            }
            if session.is_finished():
                out["final_diagnosis"] = final_payload(session)
                out["ambiguous"] = session.ambiguous
            return out

    @app.get("/sessions/{sid}/history")
    def get_history(sid: str):
        entry = entry_for(sid)
        with entry.lock:
            return list(entry.session.transcript)

    ui = Path(static_dir) if static_dir is not None else default_ui_dir()
    if ui.is_dir():
        app.mount("/", StaticFiles(directory=ui, html=True), name="ui")
    return app
