import json

import httpx
import pytest

from bimqa.mock_server import MockEndpoint, echo_table
from bimqa.runner import (
    AuthError, EndpointClient, LlmEndpointConfig, MissingDefectText, RetryPolicy, SampleTooLarge, TransportError,
    build_prompt, canonical_system_prompt, read_records, run_batch, sample_blocks,
)

from conftest import API_KEY, API_KEY_ENV


def _ep(url, **kw) -> LlmEndpointConfig:
    kw.setdefault("retry", RetryPolicy(max_attempts=4, backoff_s=(0.0,)))
    return LlmEndpointConfig(url, kw.pop("model_name", "mock-model"), api_key_env=API_KEY_ENV, **kw)


def _pairs(corpus, n_blocks=2):
    return [(qa, ab.block) for ab in corpus[:n_blocks] for qa in ab.items]


def test_retry_policy_delays():
    p = RetryPolicy()
    assert [p.delay(i) for i in (1, 2, 3, 4, 9)] == [0.5, 1.0, 2.0, 4.0, 4.0]


def test_missing_env_var(monkeypatch):
    monkeypatch.delenv(API_KEY_ENV, raising=False)
    with pytest.raises(AuthError):
        EndpointClient(_ep("http://127.0.0.1:9"))


def test_wrong_key_fails_preflight(monkeypatch):
    monkeypatch.setenv(API_KEY_ENV, "wrong")
    with MockEndpoint(api_key=API_KEY) as mock, EndpointClient(_ep(mock.url)) as client:
        with pytest.raises(AuthError):
            client.preflight()


def test_429_twice_then_success(api_key):
    sleeps = []
    with MockEndpoint(api_key=API_KEY, fail_first=2) as mock:
        with EndpointClient(_ep(mock.url), sleep=sleeps.append) as client:
            text, retries = client.chat("sys", "hello")
        assert mock.status_log == [429, 429, 200]
    assert retries == 2
    assert sleeps == [0.0, 0.0]
    assert text == "[Final Answer]:\nUnknown."


def test_retries_exhausted(api_key):
    with MockEndpoint(api_key=API_KEY, fail_first=10, fail_status=503) as mock:
        with EndpointClient(_ep(mock.url, retry=RetryPolicy(3, (0.0,)))) as client:
            with pytest.raises(TransportError):
                client.chat("sys", "hello")
        assert mock.status_log == [503, 503, 503]


def test_non_retryable_status_fails_fast(api_key):
    with MockEndpoint(api_key=API_KEY, fail_first=5, fail_status=400) as mock:
        with EndpointClient(_ep(mock.url)) as client:
            with pytest.raises(TransportError):
                client.chat("sys", "hello")
        assert mock.status_log == [400]


def test_transport_errors_are_retried(api_key):
    calls = []

    def handler(request):
        calls.append(request)
        if len(calls) == 1:
            raise httpx.ConnectError("boom")
        return httpx.Response(200, json={"choices": [{"message": {"content": "ok"}}]})

    with EndpointClient(_ep("http://mock"), transport=httpx.MockTransport(handler), sleep=lambda s: None) as client:
        assert client.chat("s", "u") == ("ok", 1)
    assert calls[0].headers["Authorization"] == f"Bearer {API_KEY}"


def test_request_bodies_are_byte_identical(api_key):
    with EndpointClient(_ep("http://mock", temperature=0.2)) as client:
        a = client.chat_body("sys", "user")
        b = client.chat_body("sys", "user")
    assert a == b
    assert json.loads(a) == {"messages": [{"content": "sys", "role": "system"}, {"content": "user", "role": "user"}],
                             "model": "mock-model", "temperature": 0.2}


def test_prompt_uses_defect_text_for_domain_questions(corpus):
    ab = corpus[0]
    by_id = {qa.question_id: qa for qa in ab.items}
    general = build_prompt(by_id["E1"], ab.block)
    domain = build_prompt(by_id["RI-1"], ab.block)
    assert general.inquiry_text == ab.block.clean_text
    assert domain.inquiry_text == ab.block.defect_text
    assert general.system_prompt == canonical_system_prompt()
    assert general.user_message().startswith(ab.block.clean_text + "\n\n" + by_id["E1"].question_text + "\n")
    from dataclasses import replace
    with pytest.raises(MissingDefectText):
        build_prompt(by_id["RI-1"], replace(ab.block, defect_text=None))


def test_sampling_is_seeded(corpus):
    a = sample_blocks(corpus, 20, seed=3)
    assert len(a) == 20
    assert len({ab.block.block_id for ab in a}) == 20
    assert a == sample_blocks(corpus, 20, seed=3)
    assert a != sample_blocks(corpus, 20, seed=4)
    with pytest.raises(SampleTooLarge):
        sample_blocks(corpus[:5], 6, seed=0)


def test_batch_echo_run_and_concurrency_bound(corpus, api_key, tmp_path):
    pairs = _pairs(corpus, 3)
    out = tmp_path / "records.jsonl"
    with MockEndpoint(echo_table(pairs), api_key=API_KEY, delay_s=0.01) as mock:
        recs = run_batch(pairs, _ep(mock.url, max_in_flight=3), out)
        assert 1 < mock.max_seen <= 3
    assert len(recs) == 66
    assert all(r.raw_output == "[Final Answer]:\n" + r.qa.ground_truth for r in recs)
    assert [r.key for r in recs] == [("mock-model", qa.block_id, qa.question_id) for qa, _ in pairs]
    assert sorted(r.key for r in read_records(out)) == sorted(r.key for r in recs)


def test_resume_skips_finished_items(corpus, api_key, tmp_path):
    pairs = _pairs(corpus, 2)
    out = tmp_path / "records.jsonl"
    with MockEndpoint(echo_table(pairs), api_key=API_KEY) as mock:
        run_batch(pairs[:10], _ep(mock.url), out)
        first = len(mock.chat_requests)
        recs = run_batch(pairs, _ep(mock.url), out)
        second = len(mock.chat_requests) - first
    assert (first, second) == (10, 34)
    assert len(recs) == 44
    assert len(read_records(out)) == 44


def test_retries_are_flagged(corpus, api_key, tmp_path):
    pairs = _pairs(corpus, 1)[:1]
    with MockEndpoint(echo_table(pairs), api_key=API_KEY, fail_first=2) as mock:
        (rec,) = run_batch(pairs, _ep(mock.url, max_in_flight=1))
    assert rec.flags == ("run:retries=2",)
    assert rec.error is None


def test_transport_failure_becomes_error_record(corpus, api_key, tmp_path):
    pairs = _pairs(corpus, 1)[:2]
    with MockEndpoint(echo_table(pairs), api_key=API_KEY, fail_first=100, fail_status=500) as mock:
        recs = run_batch(pairs, _ep(mock.url, retry=RetryPolicy(2, (0.0,))), tmp_path / "r.jsonl")
    assert all(r.error and r.flags == ("run:transport_error",) for r in recs)


def test_auth_failure_aborts_run(corpus, monkeypatch, tmp_path):
    monkeypatch.setenv(API_KEY_ENV, "wrong")
    pairs = _pairs(corpus, 1)
    with MockEndpoint(api_key=API_KEY) as mock:
        with pytest.raises(AuthError):
            run_batch(pairs, _ep(mock.url), tmp_path / "r.jsonl")
        assert mock.chat_requests == []


def test_api_key_never_written(corpus, api_key, tmp_path):
    pairs = _pairs(corpus, 1)
    with MockEndpoint(echo_table(pairs), api_key=API_KEY) as mock:
        run_batch(pairs, _ep(mock.url), tmp_path / "records.jsonl")
    for p in tmp_path.rglob("*"):
        if p.is_file():
            assert API_KEY not in p.read_text(encoding="utf-8")


def test_endpoint_config_from_file(tmp_path):
    p = tmp_path / "ep.json"
    p.write_text(json.dumps({"base_url": "http://x", "model_name": "m", "retry": {"max_attempts": 2,
                                                                                  "backoff_s": [1, 2]}}))
    ep = LlmEndpointConfig.from_file(p)
    assert ep.retry == RetryPolicy(2, (1, 2))
    assert ep.api_key_env == "BIMQA_API_KEY"
