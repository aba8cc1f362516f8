import json

import pytest

from sinogate.llm import (AuthMissing, ChatTurn, Client, ClientConfig,
                          CompletionRequest, FixtureMissing, GenerationParams,
                          LiveTransport, RecordTransport, ReplayTransport,
                          RetryPolicy, Transport, TransientNetworkError,
                          UpstreamFailure, Usage, canonical_request, complete,
                          request_hash)


def make_request(temperature=0.7, content="hi"):
    return CompletionRequest(
        turns=(ChatTurn("system", "You are a tutor."), ChatTurn("user", content)),
        params=GenerationParams(model_id="gpt-4o", temperature=temperature),
    )


def ok_body(content="reply"):
    return {
        "choices": [{"message": {"content": content}, "finish_reason": "stop"}],
        "usage": {"prompt_tokens": 10, "completion_tokens": 5},
    }


class FakeTransport(Transport):
    mode = "live"

    def __init__(self, script):
        self.script = list(script)
        self.calls = 0

    def send(self, payload):
        self.calls += 1
        item = self.script.pop(0)
        if item == "timeout":
            raise TransientNetworkError("timed out")
        return item


def test_request_validation():
    with pytest.raises(ValueError):
        CompletionRequest(turns=(ChatTurn("user", "hi"),),
                          params=GenerationParams())
    with pytest.raises(ValueError):
        ChatTurn("user", "")
    with pytest.raises(ValueError):
        GenerationParams(temperature=-1)


def test_default_temperature_in_wire_payload():
    payload = canonical_request(make_request())
    assert payload["temperature"] == 0.7
    assert payload["messages"][0]["role"] == "system"


def test_request_hash_stable_and_sensitive():
    assert request_hash(make_request()) == request_hash(make_request())
    assert request_hash(make_request(temperature=0.5)) != request_hash(make_request())
    assert request_hash(make_request(content="bye")) != request_hash(make_request())


def test_hash_insensitive_to_dict_ordering():
    doc = canonical_request(make_request())
    a = json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    b = json.dumps(dict(reversed(list(doc.items()))), sort_keys=True,
                   separators=(",", ":"), ensure_ascii=False)
    assert a == b


def test_retry_then_success():
    transport = FakeTransport([(429, {}), (500, {}), (429, {}), (200, ok_body())])
    response = complete(make_request(), transport, sleep=lambda s: None)
    assert response.content == "reply"
    assert transport.calls == 4


def test_no_retry_on_client_error():
    transport = FakeTransport([(400, {"error": "bad"})])
    with pytest.raises(UpstreamFailure) as exc:
        complete(make_request(), transport, sleep=lambda s: None)
    assert exc.value.status == 400
    assert exc.value.attempts == 1
    assert transport.calls == 1


def test_retry_exhaustion():
    transport = FakeTransport(["timeout"] * 5)
    with pytest.raises(UpstreamFailure) as exc:
        complete(make_request(), transport,
                 RetryPolicy(max_attempts=5), sleep=lambda s: None)
    assert exc.value.attempts == 5
    assert transport.calls == 5


def test_truncation_flag():
    body = ok_body()
    body["choices"][0]["finish_reason"] = "length"
    response = complete(make_request(), FakeTransport([(200, body)]),
                        sleep=lambda s: None)
    assert response.truncated


def test_record_then_replay(tmp_path):
    recorder = RecordTransport(FakeTransport([(200, ok_body("你好"))]), tmp_path)
    request = make_request()
    recorded = complete(request, recorder, sleep=lambda s: None)
    replayed = complete(request, ReplayTransport(tmp_path), sleep=lambda s: None)
    assert replayed.content == recorded.content == "你好"
    assert replayed.usage == recorded.usage


def test_replay_missing_fixture(tmp_path):
    with pytest.raises(FixtureMissing):
        complete(make_request(), ReplayTransport(tmp_path))


def test_live_transport_requires_key():
    with pytest.raises(AuthMissing):
        LiveTransport(api_key=None)


def test_backoff_delays_bounded():
    policy = RetryPolicy(base_delay=1.0, max_delay=60.0)
    import random
    rng = random.Random(0)
    for attempt in range(1, 10):
        delay = policy.delay(attempt, rng)
        assert 0 <= delay <= 60.0


def test_client_usage_accounting():
    transport = FakeTransport([(200, ok_body()), (200, ok_body())])
    client = Client(transport, ClientConfig(model="gpt-4o"), sleep=lambda s: None)
    client.complete(make_request())
    client.complete(make_request(content="two"))
    assert client.total_usage == Usage(20, 10)
    assert client.call_count == 2


def test_client_cost_from_price_table():
    transport = FakeTransport([(200, ok_body())])
    cfg = ClientConfig(model="gpt-4o",
                       price_table={"gpt-4o": {"input": 0.0025, "output": 0.01}})
    client = Client(transport, cfg, sleep=lambda s: None)
    client.complete(make_request())
    assert client.cost() == pytest.approx(10 / 1000 * 0.0025 + 5 / 1000 * 0.01)


def test_config_from_env():
    cfg = ClientConfig.from_env({"SINOGATE_API_KEY": "k",
                                 "SINOGATE_BASE_URL": "http://localhost:9999/v1",
                                 "SINOGATE_MODEL": "test-model"})
    assert (cfg.api_key, cfg.model) == ("k", "test-model")
    assert cfg.base_url == "http://localhost:9999/v1"
