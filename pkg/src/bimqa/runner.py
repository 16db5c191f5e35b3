"""Prompt assembly and batch evaluation against chat-completions endpoints."""

from __future__ import annotations

import json
import logging
import os
import time
from concurrent.futures import FIRST_EXCEPTION, ThreadPoolExecutor, wait
from dataclasses import dataclass, field
from datetime import datetime, timezone
from functools import lru_cache
from importlib import resources
from pathlib import Path

import httpx

from .model import Block, DomainError, EvalRecord, PromptBundle, QaItem
from .questions import example_wrapper
from .rng import SplitMix64
from .textualize import textualize

log = logging.getLogger(__name__)


class MissingDefectText(DomainError):
    pass


class SampleTooLarge(DomainError):
    pass


class RunnerError(Exception):
    pass


class AuthError(RunnerError):
    """Missing or rejected credentials; aborts a run before any item is sent."""


class TransportError(RunnerError):
    """The endpoint could not produce a reply after all retries."""


@lru_cache(maxsize=1)
def canonical_system_prompt() -> str:
    raw = resources.files("bimqa").joinpath("data/system_prompt.txt").read_text(encoding="utf-8")
    return raw.rstrip("\n")


@dataclass(frozen=True)
class RetryPolicy:
    max_attempts: int = 4
    backoff_s: tuple = (0.5, 1.0, 2.0, 4.0)

    def __post_init__(self):
        if self.max_attempts < 1:
            raise DomainError("max_attempts must be at least 1")

    def delay(self, attempt: int) -> float:
        """Sleep before retry number ``attempt`` (1-based)."""
        if not self.backoff_s:
            return 0.0
        return self.backoff_s[min(attempt - 1, len(self.backoff_s) - 1)]


@dataclass(frozen=True)
class LlmEndpointConfig:
    base_url: str
    model_name: str
    temperature: float | None = None
    max_in_flight: int = 4
    retry: RetryPolicy = field(default_factory=RetryPolicy)
    timeout_s: float = 120.0
    api_key_env: str = "BIMQA_API_KEY"
    max_tokens: int | None = None

    def __post_init__(self):
        if self.max_in_flight < 1:
            raise DomainError("max_in_flight must be at least 1")

    @classmethod
    def from_dict(cls, d: dict) -> "LlmEndpointConfig":
        d = dict(d)
        if isinstance(d.get("retry"), dict):
            r = dict(d["retry"])
            if "backoff_s" in r:
                r["backoff_s"] = tuple(r["backoff_s"])
            d["retry"] = RetryPolicy(**r)
        return cls(**d)

    @classmethod
    def from_file(cls, path) -> "LlmEndpointConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


_RETRY_STATUS = {408, 409, 425, 429, 500, 502, 503, 504}


class EndpointClient:
    """Thin chat/embeddings client with retry; the bearer token is read from the environment only."""

    def __init__(self, ep: LlmEndpointConfig, transport: httpx.BaseTransport | None = None, sleep=time.sleep):
        key = os.environ.get(ep.api_key_env)
        if not key:
            raise AuthError(f"environment variable {ep.api_key_env} is not set")
        self.ep = ep
        self._sleep = sleep
        self._http = httpx.Client(
            base_url=ep.base_url.rstrip("/"),
            headers={"Authorization": f"Bearer {key}"},
            timeout=ep.timeout_s,
            transport=transport,
        )

    def close(self) -> None:
        self._http.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def preflight(self) -> None:
        """Check credentials with ``GET /models``; endpoints without that route pass."""
        try:
            r = self._http.get("/models")
        except httpx.HTTPError as exc:
            raise TransportError(f"endpoint unreachable: {exc}") from exc
        if r.status_code in (401, 403):
            raise AuthError(f"endpoint rejected the API key (HTTP {r.status_code})")

    def _post(self, path: str, body: bytes) -> tuple[dict, int]:
        attempts = self.ep.retry.max_attempts
        last = ""
        for attempt in range(1, attempts + 1):
            try:
                r = self._http.post(path, content=body, headers={"Content-Type": "application/json"})
            except httpx.HTTPError as exc:
                last = f"{type(exc).__name__}: {exc}"
            else:
                if r.status_code in (401, 403):
                    raise AuthError(f"endpoint rejected the API key (HTTP {r.status_code})")
                if r.status_code == 200:
                    try:
                        return r.json(), attempt - 1
                    except ValueError:
                        last = "malformed JSON reply"
                elif r.status_code in _RETRY_STATUS:
                    last = f"HTTP {r.status_code}"
                else:
                    raise TransportError(f"HTTP {r.status_code}: {r.text[:200]}")
            if attempt < attempts:
                log.info("retrying %s after %s (attempt %d)", path, last, attempt)
                self._sleep(self.ep.retry.delay(attempt))
        raise TransportError(f"{path} failed after {attempts} attempt(s): {last}")

    def chat_body(self, system: str, user: str, temperature: float | None = None) -> bytes:
        """Request body; identical inputs give byte-identical bodies."""
        body = {
            "model": self.ep.model_name,
            "messages": [{"role": "system", "content": system}, {"role": "user", "content": user}],
        }
        temp = self.ep.temperature if temperature is None else temperature
        if temp is not None:
            body["temperature"] = temp
        if self.ep.max_tokens is not None:
            body["max_tokens"] = self.ep.max_tokens
        return json.dumps(body, ensure_ascii=False, sort_keys=True, separators=(",", ":")).encode("utf-8")

    def chat(self, system: str, user: str, temperature: float | None = None) -> tuple[str, int]:
        """Reply text and the number of retries it took."""
        data, retries = self._post("/chat/completions", self.chat_body(system, user, temperature))
        try:
            return data["choices"][0]["message"]["content"] or "", retries
        except (KeyError, IndexError, TypeError) as exc:
            raise TransportError(f"unexpected reply shape: {str(data)[:200]}") from exc

    def embed(self, texts: list[str]) -> list[list[float]]:
        body = json.dumps({"model": self.ep.model_name, "input": texts}, ensure_ascii=False,
                          sort_keys=True, separators=(",", ":")).encode("utf-8")
        data, _ = self._post("/embeddings", body)
        try:
            rows = sorted(data["data"], key=lambda d: d.get("index", 0))
            return [list(map(float, d["embedding"])) for d in rows]
        except (KeyError, TypeError, ValueError) as exc:
            raise TransportError(f"unexpected embeddings reply: {str(data)[:200]}") from exc


# -- prompts -------------------------------------------------------------------


def build_prompt(qa: QaItem, b: Block, system_prompt: str | None = None) -> PromptBundle:
    if qa.uses_defect_text:
        if not b.defect_text:
            raise MissingDefectText(f"{qa.question_id} needs the defect text of block {b.block_id}")
        inquiry = b.defect_text
    else:
        inquiry = b.clean_text or textualize(b)
    return PromptBundle(
        system_prompt=canonical_system_prompt() if system_prompt is None else system_prompt,
        inquiry_text=inquiry,
        question_text=qa.question_text,
        example_text=example_wrapper(qa.example_text),
    )


def sample_blocks(dataset, n: int, seed: int) -> list:
    dataset = list(dataset)
    if n > len(dataset):
        raise SampleTooLarge(f"cannot sample {n} of {len(dataset)} blocks")
    return SplitMix64(seed).split("sample").sample(dataset, n)


# -- batch runs ------------------------------------------------------------------


def read_records(path) -> list[EvalRecord]:
    p = Path(path)
    if not p.exists():
        return []
    out = []
    with p.open(encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(EvalRecord.from_dict(json.loads(line)))
    return out


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _ask(client: EndpointClient, qa: QaItem, bundle: PromptBundle) -> EvalRecord:
    try:
        text, retries = client.chat(bundle.system_prompt, bundle.user_message())
    except TransportError as exc:
        return EvalRecord(qa, client.ep.model_name, "", timestamp=_now(), prompt=bundle, error=str(exc),
                          flags=("run:transport_error",))
    flags = (f"run:retries={retries}",) if retries else ()
    return EvalRecord(qa, client.ep.model_name, text, timestamp=_now(), prompt=bundle, flags=flags)


def run_batch(items, ep: LlmEndpointConfig, out_path=None, client: EndpointClient | None = None,
              system_prompt: str | None = None) -> list[EvalRecord]:
    """Ask every (QaItem, Block) pair; records are appended to ``out_path`` as they finish.

    Items whose key already appears in ``out_path`` are skipped, so an
    interrupted run resumes where it stopped. Transport failures become error
    records; an authentication failure aborts the run.
    """
    items = list(items)
    done = {r.key: r for r in read_records(out_path)} if out_path else {}
    own_client = client is None
    client = client or EndpointClient(ep)
    try:
        client.preflight()
        pending = []
        for qa, b in items:
            key = (ep.model_name, qa.block_id, qa.question_id)
            if key not in done:
                pending.append((key, qa, build_prompt(qa, b, system_prompt)))
        sink = open(out_path, "a", encoding="utf-8") if out_path else None
        try:
            with ThreadPoolExecutor(max_workers=ep.max_in_flight) as pool:
                futures = {pool.submit(_ask, client, qa, bundle): key for key, qa, bundle in pending}
                remaining = set(futures)
                while remaining:
                    finished, remaining = wait(remaining, return_when=FIRST_EXCEPTION)
                    for fut in finished:
                        exc = fut.exception()
                        if exc is not None:
                            for f in remaining:
                                f.cancel()
                            raise exc
                        rec = fut.result()
                        done[futures[fut]] = rec
                        if sink:
                            sink.write(json.dumps(rec.to_dict(), ensure_ascii=False) + "\n")
                            sink.flush()
        finally:
            if sink:
                sink.close()
    finally:
        if own_client:
            client.close()
    return [done[(ep.model_name, qa.block_id, qa.question_id)] for qa, _ in items
            if (ep.model_name, qa.block_id, qa.question_id) in done]


__all__ = [
    "AuthError",
    "EndpointClient",
    "LlmEndpointConfig",
    "MissingDefectText",
    "RetryPolicy",
    "SampleTooLarge",
    "TransportError",
    "build_prompt",
    "canonical_system_prompt",
    "read_records",
    "run_batch",
    "sample_blocks",
]
