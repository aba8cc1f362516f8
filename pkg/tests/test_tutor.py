import pytest
from fastapi.testclient import TestClient

from sinogate.analysis import annotate
from sinogate.charset import ThresholdLevel, load_builtin
from sinogate.llm import ClientConfig, CompletionResponse, UpstreamFailure, Usage
from sinogate.tutor import (SessionBusy, SessionNotFound, SessionStore,
                            TutorService, create_app)


class StubLLM:
    def __init__(self, reply="你好！我们开始吧。"):
        self.reply = reply
        self.config = ClientConfig(model="gpt-4o")
        self.calls = 0

    def complete(self, request):
        self.calls += 1
        if isinstance(self.reply, Exception):
            raise self.reply
        return CompletionResponse(content=self.reply, usage=Usage(10, 5),
                                  latency=0.0, raw={})


@pytest.fixture
def service(tmp_path):
    return TutorService(StubLLM(), SessionStore(tmp_path / "sessions"),
                        known_models={"gpt-4o", "gpt-4o-mini"})


@pytest.fixture
def api(service):
    return TestClient(create_app(service))


def test_healthz(api):
    assert api.get("/healthz").json() == {"status": "ok"}


def test_create_session_with_list(api):
    resp = api.post("/api/sessions", json={"level": "A1", "condition": "with_list"})
    assert resp.status_code == 201
    session = resp.json()["session"]
    assert "A1-level character list is:" in session["history"][0]["content"]


def test_create_session_without_list(api):
    resp = api.post("/api/sessions", json={"level": "A2", "condition": "without_list"})
    assert "character list is:" not in resp.json()["session"]["history"][0]["content"]


def test_create_session_unknown_model(api):
    resp = api.post("/api/sessions",
                    json={"level": "A1", "model": "nonexistent-model"})
    assert resp.status_code == 400


def test_create_session_bad_level_and_condition(api):
    assert api.post("/api/sessions", json={"level": "C2"}).status_code == 400
    assert api.post("/api/sessions",
                    json={"level": "A1", "condition": "maybe"}).status_code == 400


def test_get_session_lifecycle(api):
    sid = api.post("/api/sessions", json={"level": "A1"}).json()["session"]["id"]
    session = api.get(f"/api/sessions/{sid}").json()["session"]
    assert len(session["history"]) == 1
    api.post(f"/api/sessions/{sid}/messages", json={"text": "RW2"})
    session = api.get(f"/api/sessions/{sid}").json()["session"]
    assert len(session["history"]) == 3
    assert len(session["annotations"]) == 1
    assert api.get("/api/sessions/nope").status_code == 404


def test_post_message_annotates_reply(service, api, table5_email):
    service.client.reply = table5_email
    sid = api.post("/api/sessions", json={"level": "A1"}).json()["session"]["id"]
    resp = api.post(f"/api/sessions/{sid}/messages", json={"text": "RW2"})
    assert resp.status_code == 200
    body = resp.json()
    assert body["reply"] == table5_email
    chars = {s["char"] for s in body["spans"]}
    assert {"愉", "告", "诉", "希", "望", "祝"} <= chars


def test_post_message_english_reply_undefined_ratio(service, api):
    service.client.reply = "This is all English."
    sid = api.post("/api/sessions", json={"level": "A1"}).json()["session"]["id"]
    body = api.post(f"/api/sessions/{sid}/messages", json={"text": "hi"}).json()
    assert body["deviation"]["total_han"] == 0
    assert body["deviation"]["out_ratio"] is None


def test_post_message_errors(api):
    assert api.post("/api/sessions/nope/messages",
                    json={"text": "hi"}).status_code == 404
    sid = api.post("/api/sessions", json={"level": "A1"}).json()["session"]["id"]
    assert api.post(f"/api/sessions/{sid}/messages",
                    json={"text": ""}).status_code == 400


def test_upstream_failure_leaves_session_unchanged(service, api):
    sid = api.post("/api/sessions", json={"level": "A1"}).json()["session"]["id"]
    service.client.reply = UpstreamFailure(503, 5)
    resp = api.post(f"/api/sessions/{sid}/messages", json={"text": "hi"})
    assert resp.status_code == 502
    assert resp.json()["retryable"] is True
    assert len(api.get(f"/api/sessions/{sid}").json()["session"]["history"]) == 1


def test_busy_session_rejected(service):
    session = service.create_session(ThresholdLevel.A1)
    lock = service.store.lock_for(session.id)
    assert lock.acquire(blocking=False)
    try:
        with pytest.raises(SessionBusy):
            service.post_message(session.id, "hi")
    finally:
        lock.release()


def test_session_persists_across_store_instances(service, tmp_path):
    session = service.create_session(ThresholdLevel.A1)
    service.post_message(session.id, "RW1")
    fresh = SessionStore(tmp_path / "sessions")
    loaded = fresh.get(session.id)
    assert len(loaded.history) == 3
    with pytest.raises(SessionNotFound):
        fresh.get("deadbeef")


def test_annotation_consistency_on_read(service):
    session = service.create_session(ThresholdLevel.A1)
    service.post_message(session.id, "hello")
    loaded = service.get_session(session.id)
    tlist = load_builtin(ThresholdLevel.A1)
    for ann in loaded.annotations:
        reply = loaded.history[ann["turn_index"]].content
        recomputed = [{"start": s.start, "end": s.end, "char": s.char}
                      for s in annotate(reply, tlist).spans]
        assert ann["spans"] == recomputed


def test_charsets_endpoint(api):
    body = api.get("/api/charsets/A1").json()
    assert body["count"] == 249
    assert body["characters"][:3] == ["爱", "八", "爸"]
    assert api.get("/api/charsets/B2").status_code == 404


def test_tasks_endpoint(api):
    tasks = api.get("/api/tasks").json()["tasks"]
    assert len(tasks) == 10
    assert tasks[0]["code"] == "RW1"
