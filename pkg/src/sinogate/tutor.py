"""Tutoring session service: level-conditioned chat with per-turn compliance audit.

Each session is seeded with the (level, condition) system prompt. Every
assistant reply is scored against the session level's builtin threshold list
and annotated with the out-of-list character spans so a client can highlight
them. Sessions persist to disk as one JSON file each, so a restart preserves
learner history. One in-flight message per session; concurrent sends get 409.
"""

import json
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from threading import Lock
from typing import Optional

from .analysis import annotate, deviation
from .charset import ThresholdLevel, UnknownLevel, load_builtin
from .errors import SinogateError
from .llm import ChatTurn, Client, CompletionRequest, GenerationParams, UpstreamFailure
from .prompts import build_system_prompt, list_tasks

DEFAULT_TURN_CAP = 50


class SessionNotFound(SinogateError):
    pass


class UnknownModel(SinogateError):
    pass


class EmptyMessage(SinogateError):
    pass


class SessionBusy(SinogateError):
    pass


@dataclass
class Session:
    id: str
    level: ThresholdLevel
    condition: str
    model_id: str
    created_at: float
    history: list[ChatTurn] = field(default_factory=list)
    # parallel to assistant turns, in order: {"turn_index", "deviation", "spans"}
    annotations: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "level": self.level.value,
            "condition": self.condition,
            "model": self.model_id,
            "created_at": self.created_at,
            "history": [{"role": t.role, "content": t.content} for t in self.history],
            "annotations": self.annotations,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Session":
        return cls(
            id=doc["id"],
            level=ThresholdLevel.parse(doc["level"]),
            condition=doc["condition"],
            model_id=doc["model"],
            created_at=doc["created_at"],
            history=[ChatTurn(t["role"], t["content"]) for t in doc["history"]],
            annotations=doc["annotations"],
        )


class SessionStore:
    """Durable id -> Session map; one JSON file per session."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._cache: dict[str, Session] = {}
        self._locks: dict[str, Lock] = {}
        self._lock = Lock()

    def _path(self, session_id: str) -> Path:
        return self.directory / f"{session_id}.json"

    def save(self, session: Session) -> None:
        with self._lock:
            self._cache[session.id] = session
            self._path(session.id).write_text(
                json.dumps(session.to_dict(), ensure_ascii=False) + "\n", "utf-8")

    def get(self, session_id: str) -> Session:
        with self._lock:
            if session_id in self._cache:
                return self._cache[session_id]
        path = self._path(session_id)
        if not path.exists():
            raise SessionNotFound(session_id)
        session = Session.from_dict(json.loads(path.read_text("utf-8")))
        with self._lock:
            self._cache[session_id] = session
        return session

    def lock_for(self, session_id: str) -> Lock:
        with self._lock:
            return self._locks.setdefault(session_id, Lock())


class TutorService:
    def __init__(self, client: Client, store: SessionStore,
                 known_models: Optional[set[str]] = None,
                 turn_cap: int = DEFAULT_TURN_CAP,
                 check_user_turns: bool = False):
        self.client = client
        self.store = store
        self.known_models = known_models or {self.client.config.model}
        self.turn_cap = turn_cap
        self.check_user_turns = check_user_turns

    def create_session(self, level: ThresholdLevel, condition: str = "with_list",
                       model_id: Optional[str] = None) -> Session:
        model_id = model_id or self.client.config.model
        if model_id not in self.known_models:
            raise UnknownModel(model_id)
        system = build_system_prompt(level, condition)
        session = Session(
            id=uuid.uuid4().hex,
            level=level,
            condition=condition,
            model_id=model_id,
            created_at=time.time(),
            history=[ChatTurn("system", system.text)],
        )
        self.store.save(session)
        return session

    def get_session(self, session_id: str) -> Session:
        return self.store.get(session_id)

    def post_message(self, session_id: str, text: str) -> dict:
        """Append a user turn, get the tutor reply, audit and persist it.

        A failed upstream call leaves the session unchanged.
        """
        if not text:
            raise EmptyMessage("message text must be non-empty")
        lock = self.store.lock_for(session_id)
        if not lock.acquire(blocking=False):
            raise SessionBusy(session_id)
        try:
            session = self.store.get(session_id)
            turns = list(session.history) + [ChatTurn("user", text)]
            sent = [turns[0]] + turns[1:][-(self.turn_cap - 1):]
            request = CompletionRequest(
                turns=tuple(sent),
                params=GenerationParams(model_id=session.model_id),
            )
            response = self.client.complete(request)  # may raise UpstreamFailure
            reply = response.content
            tlist = load_builtin(session.level)
            report = deviation(reply, tlist, "occurrence")
            spans = [{"start": s.start, "end": s.end, "char": s.char}
                     for s in annotate(reply, tlist).spans]
            session.history.append(ChatTurn("user", text))
            session.history.append(ChatTurn("assistant", reply))
            annotation = {
                "turn_index": len(session.history) - 1,
                "deviation": report.to_dict(),
                "spans": spans,
            }
            session.annotations.append(annotation)
            self.store.save(session)
            return {"reply": reply, "deviation": report.to_dict(), "spans": spans}
        finally:
            lock.release()


def create_app(service: TutorService, static_dir: Optional[str | Path] = None):
    """FastAPI application over a TutorService."""
    from fastapi import FastAPI, HTTPException
    from fastapi.middleware.cors import CORSMiddleware
    from fastapi.responses import JSONResponse
    from pydantic import BaseModel

    app = FastAPI(title="sinogate tutor")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"],
    )

    class CreateSessionBody(BaseModel):
        level: str
        condition: str = "with_list"
        model: Optional[str] = None

    class MessageBody(BaseModel):
        text: str

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.post("/api/sessions", status_code=201)
    def create_session(body: CreateSessionBody):
        try:
            level = ThresholdLevel.parse(body.level)
        except UnknownLevel:
            raise HTTPException(400, f"unknown level: {body.level!r}")
        if body.condition not in ("with_list", "without_list"):
            raise HTTPException(400, f"unknown condition: {body.condition!r}")
        try:
            session = service.create_session(level, body.condition, body.model)
        except UnknownModel as exc:
            raise HTTPException(400, f"unknown model: {exc}")
        return {"session": session.to_dict()}

    @app.get("/api/sessions/{session_id}")
    def get_session(session_id: str):
        try:
            return {"session": service.get_session(session_id).to_dict()}
        except SessionNotFound:
            raise HTTPException(404, "session not found")

    @app.post("/api/sessions/{session_id}/messages")
    def post_message(session_id: str, body: MessageBody):
        try:
            return service.post_message(session_id, body.text)
        except SessionNotFound:
            raise HTTPException(404, "session not found")
        except EmptyMessage:
            raise HTTPException(400, "message text must be non-empty")
        except SessionBusy:
            raise HTTPException(409, "a message is already in flight for this session")
        except UpstreamFailure as exc:
            return JSONResponse(
                status_code=502,
                content={"error": str(exc), "retryable": True},
            )

    @app.get("/api/charsets/{level}")
    def get_charset(level: str):
        try:
            tlist = load_builtin(ThresholdLevel.parse(level))
        except UnknownLevel:
            raise HTTPException(404, f"unknown level: {level!r}")
        return {"characters": list(tlist.characters), "count": len(tlist)}

    @app.get("/api/tasks")
    def get_tasks():
        return {"tasks": [{"code": t.code, "title": t.title,
                           "descriptors": t.descriptors} for t in list_tasks()]}

    if static_dir and Path(static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app
