"""Chat-completion client boundary.

One contract (`complete`) with three implementations: a live client speaking
an OpenAI-compatible wire protocol, a deterministic scripted client for
offline runs and tests, and wrappers adding a persistent cache and call
counting. The scripted client never touches the network by construction.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Protocol

import requests


class ClientError(RuntimeError):
    pass


class ScriptedMissError(ClientError):
    """No scripted entry matched the request."""


@dataclass(frozen=True)
class CompletionRequest:
    model: str
    prompt: str
    temperature: float = 1.0
    sample_index: int = 0
    max_output_tokens: int = 1024

    def __post_init__(self):
        if not self.prompt:
            raise ValueError("prompt must be non-empty")
        if self.sample_index < 0:
            raise ValueError("sample_index must be >= 0")


@dataclass(frozen=True)
class CompletionResponse:
    text: str
    input_tokens: int = 0
    output_tokens: int = 0
    from_cache: bool = False


def request_digest(req: CompletionRequest) -> str:
    """Stable content hash; distinct sample indices hash distinctly."""
    payload = json.dumps(
        [req.model, req.prompt, req.temperature, req.sample_index,
         req.max_output_tokens],
        ensure_ascii=False,
        separators=(",", ":"),
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class CompletionClient(Protocol):
    def complete(self, req: CompletionRequest) -> CompletionResponse: ...


# ---------------------------------------------------------------------------
# Usage accounting


@dataclass
class UsageTracker:
    """Per-model, per-stage call and token tally.

    Pipelines set `stage` before issuing calls; clients report through
    `record`. Live (non-cache) calls only.
    """

    stage: str = "unspecified"
    records: list[dict] = field(default_factory=list)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def record(self, model: str, input_tokens: int, output_tokens: int) -> None:
        with self._lock:
            self.records.append(
                {
                    "model": model,
                    "stage": self.stage,
                    "input_tokens": input_tokens,
                    "output_tokens": output_tokens,
                }
            )

    def to_manifest(self) -> list[dict]:
        return list(self.records)


def usage_report(manifest_records: list[dict]) -> dict:
    """Aggregate call counts and token totals per model and per stage."""
    per_model: dict[str, dict] = {}
    per_stage: dict[str, dict] = {}
    for rec in manifest_records:
        for key, bucket in ((rec["model"], per_model), (rec["stage"], per_stage)):
            agg = bucket.setdefault(
                key, {"calls": 0, "input_tokens": 0, "output_tokens": 0}
            )
            agg["calls"] += 1
            agg["input_tokens"] += rec["input_tokens"]
            agg["output_tokens"] += rec["output_tokens"]
    return {
        "total_calls": len(manifest_records),
        "per_model": per_model,
        "per_stage": per_stage,
    }


# ---------------------------------------------------------------------------
# Scripted client

Responder = Callable[[CompletionRequest], str]


@dataclass
class ScriptRule:
    """Matches requests whose prompt contains `contains` (or matches `pattern`).

    `responses` may be a single string, a list cycled by sample_index, or a
    callable on the request.
    """

    responses: str | list[str] | Responder
    contains: str | None = None
    pattern: str | None = None

    def matches(self, req: CompletionRequest) -> bool:
        if self.contains is not None and self.contains in req.prompt:
            return True
        if self.pattern is not None and re.search(self.pattern, req.prompt):
            return True
        return False

    def respond(self, req: CompletionRequest) -> str:
        if callable(self.responses):
            return self.responses(req)
        if isinstance(self.responses, str):
            return self.responses
        return self.responses[req.sample_index % len(self.responses)]


class ScriptedClient:
    """Deterministic replay client: digest table first, then pattern rules."""

    def __init__(
        self,
        rules: list[ScriptRule] | None = None,
        by_digest: dict[str, str] | None = None,
        tracker: UsageTracker | None = None,
    ):
        self.rules = rules or []
        self.by_digest = by_digest or {}
        self.tracker = tracker
        self.call_count = 0

    def complete(self, req: CompletionRequest) -> CompletionResponse:
        self.call_count += 1
        digest = request_digest(req)
        text = self.by_digest.get(digest)
        if text is None:
            for rule in self.rules:
                if rule.matches(req):
                    text = rule.respond(req)
                    break
        if text is None:
            raise ScriptedMissError(f"no scripted entry for request digest {digest}")
        usage_in, usage_out = len(req.prompt.split()), len(text.split())
        if self.tracker is not None:
            self.tracker.record(req.model, usage_in, usage_out)
        return CompletionResponse(text, usage_in, usage_out, from_cache=False)

    @classmethod
    def from_file(cls, path: str | Path, tracker: UsageTracker | None = None):
        """Load pattern rules from a JSON file:
        {"patterns": [{"contains": ..., "responses": [...]}, ...]}"""
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        rules = [
            ScriptRule(
                responses=entry["responses"],
                contains=entry.get("contains"),
                pattern=entry.get("pattern"),
            )
            for entry in data.get("patterns", [])
        ]
        return cls(rules=rules, by_digest=data.get("by_digest"), tracker=tracker)


# ---------------------------------------------------------------------------
# Live client


class TokenBucket:
    """Shared requests-per-interval limiter with a burst allowance."""

    def __init__(self, rate: float, interval: float = 1.0, burst: int | None = None):
        self.capacity = burst if burst is not None else max(1, int(rate))
        self.tokens = float(self.capacity)
        self.fill_rate = rate / interval
        self.last = time.monotonic()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = time.monotonic()
                self.tokens = min(
                    self.capacity, self.tokens + (now - self.last) * self.fill_rate
                )
                self.last = now
                if self.tokens >= 1:
                    self.tokens -= 1
                    return
                wait = (1 - self.tokens) / self.fill_rate
            time.sleep(wait)


class HttpClient:
    """OpenAI-compatible chat-completions client with retry and rate limiting.

    Endpoint and credential come from LLM_API_BASE / LLM_API_KEY unless given
    explicitly. Transient failures (429, 5xx, connection errors) are retried
    with exponential backoff.
    """

    RETRIABLE_STATUS = {429, 500, 502, 503, 504}

    def __init__(
        self,
        base_url: str | None = None,
        api_key: str | None = None,
        max_retries: int = 5,
        backoff: float = 1.0,
        limiter: TokenBucket | None = None,
        tracker: UsageTracker | None = None,
        timeout: float = 120.0,
        session: requests.Session | None = None,
    ):
        self.base_url = (base_url or os.environ.get("LLM_API_BASE", "")).rstrip("/")
        if not self.base_url:
            raise ClientError("no endpoint configured (set LLM_API_BASE)")
        self.api_key = api_key or os.environ.get("LLM_API_KEY", "")
        self.max_retries = max_retries
        self.backoff = backoff
        self.limiter = limiter
        self.tracker = tracker
        self.timeout = timeout
        self.session = session or requests.Session()

    def complete(self, req: CompletionRequest) -> CompletionResponse:
        payload = {
            "model": req.model,
            "messages": [{"role": "user", "content": req.prompt}],
            "temperature": req.temperature,
            "max_tokens": req.max_output_tokens,
        }
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        last_error: Exception | None = None
        for attempt in range(self.max_retries + 1):
            if self.limiter is not None:
                self.limiter.acquire()
            try:
                resp = self.session.post(
                    f"{self.base_url}/chat/completions",
                    json=payload,
                    headers=headers,
                    timeout=self.timeout,
                )
            except requests.RequestException as exc:
                last_error = exc
            else:
                if resp.status_code == 200:
                    body = resp.json()
                    usage = body.get("usage", {})
                    text = body["choices"][0]["message"]["content"]
                    usage_in = usage.get("prompt_tokens", 0)
                    usage_out = usage.get("completion_tokens", 0)
                    if self.tracker is not None:
                        self.tracker.record(req.model, usage_in, usage_out)
                    return CompletionResponse(text, usage_in, usage_out)
                if resp.status_code not in self.RETRIABLE_STATUS:
                    raise ClientError(
                        f"permanent service error {resp.status_code}: {resp.text[:500]}"
                    )
                last_error = ClientError(f"status {resp.status_code}")
            if attempt < self.max_retries:
                time.sleep(self.backoff * (2**attempt))
        raise ClientError(f"retries exhausted: {last_error}")


# ---------------------------------------------------------------------------
# Wrappers


class CachedClient:
    """Directory cache keyed by request digest, one file per entry."""

    def __init__(self, inner: CompletionClient, cache_dir: str | Path):
        self.inner = inner
        self.cache_dir = Path(cache_dir)
        self.cache_dir.mkdir(parents=True, exist_ok=True)

    def complete(self, req: CompletionRequest) -> CompletionResponse:
        digest = request_digest(req)
        entry = self.cache_dir / f"{digest}.json"
        if entry.exists():
            record = json.loads(entry.read_text(encoding="utf-8"))
            return CompletionResponse(
                record["text"],
                record["input_tokens"],
                record["output_tokens"],
                from_cache=True,
            )
        resp = self.inner.complete(req)
        tmp = entry.with_suffix(".tmp")
        tmp.write_text(
            json.dumps(
                {
                    "text": resp.text,
                    "input_tokens": resp.input_tokens,
                    "output_tokens": resp.output_tokens,
                },
                ensure_ascii=False,
            ),
            encoding="utf-8",
        )
        tmp.replace(entry)  # atomic per entry
        return resp


class CountingClient:
    """Counts the calls that reach the wrapped client; used to assert zero
    live traffic on warm-cache reruns."""

    def __init__(self, inner: CompletionClient):
        self.inner = inner
        self.calls = 0

    def complete(self, req: CompletionRequest) -> CompletionResponse:
        self.calls += 1
        return self.inner.complete(req)
