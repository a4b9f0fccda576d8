"""Backend-agnostic chat-completion client, response parsers and query cache.

The wire protocol is a minimal chat-completion JSON over HTTP (POST to the
configured endpoint with model/messages/temperature/max_tokens; response
carries choices[0].message.content), documented field-by-field in
docs/backend-protocol.md. The API credential comes from an environment
variable and is never logged.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import requests

from .corpus import SubtypeLabel
from .prompts import RenderedPrompt

logger = logging.getLogger(__name__)

API_KEY_ENV_VAR = "BRIDGEKIT_API_KEY"

NO_ANTECEDENT = "no antecedent"


class BackendError(Exception):
    """Base class for backend failures."""


class TransportError(BackendError):
    """Network-level failure after exhausting retries."""


class BackendStatusError(BackendError):
    """Non-success HTTP status after exhausting retries."""

    def __init__(self, message, status_code=None):
        super().__init__(message)
        self.status_code = status_code


class BackendTimeout(BackendError):
    """Request timed out after exhausting retries."""


class ResponseParseError(ValueError):
    """A backend response did not match the expected output grammar."""


@dataclass(frozen=True)
class BackendConfig:
    endpoint: str = ""
    model: str = "mock"
    temperature: float = 0.0
    max_output_tokens: int = 256
    timeout_seconds: float = 60.0
    max_attempts: int = 3
    backoff_seconds: float = 1.0

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")


@dataclass
class QueryRecord:
    cache_key: str
    subtask: str
    prompt: str
    raw_response: str
    model: str
    temperature: float
    timestamp: float
    attempts: int = 1
    from_cache: bool = False
    usage: dict = field(default_factory=dict)  # token/cost accounting, if reported

    def to_dict(self):
        return {
            "cache_key": self.cache_key,
            "subtask": self.subtask,
            "prompt": self.prompt,
            "raw_response": self.raw_response,
            "model": self.model,
            "temperature": self.temperature,
            "timestamp": self.timestamp,
            "attempts": self.attempts,
            "usage": self.usage,
        }


def cache_key(subtask, prompt_text, model, temperature) -> str:
    """Digest of (template id, prompt text, model id, temperature)."""
    payload = json.dumps(
        [subtask, prompt_text, model, temperature], ensure_ascii=False
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class QueryCache:
    """Append-only on-disk cache, one JSON record file per key digest."""

    def __init__(self, directory):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def _path(self, key):
        return self.directory / f"{key}.json"

    def get(self, key) -> QueryRecord | None:
        path = self._path(key)
        if not path.exists():
            with self._lock:
                self.misses += 1
            return None
        with open(path, encoding="utf-8") as f:
            obj = json.load(f)
        with self._lock:
            self.hits += 1
        return QueryRecord(
            cache_key=obj["cache_key"],
            subtask=obj["subtask"],
            prompt=obj["prompt"],
            raw_response=obj["raw_response"],
            model=obj["model"],
            temperature=obj["temperature"],
            timestamp=obj["timestamp"],
            attempts=obj.get("attempts", 1),
            from_cache=True,
            usage=obj.get("usage", {}),
        )

    def put(self, record: QueryRecord):
        path = self._path(record.cache_key)
        with self._lock:
            tmp = path.with_suffix(".tmp")
            with open(tmp, "w", encoding="utf-8") as f:
                json.dump(record.to_dict(), f, ensure_ascii=False)
            tmp.replace(path)

    def purge(self) -> int:
        n = 0
        for path in self.directory.glob("*.json"):
            path.unlink()
            n += 1
        return n

    def stats(self) -> dict:
        return {
            "entries": sum(1 for _ in self.directory.glob("*.json")),
            "hits": self.hits,
            "misses": self.misses,
        }


class HttpBackend:
    """Chat-completion client with retry/backoff over the documented protocol."""

    name = "http"

    def __init__(self, cfg: BackendConfig, session=None):
        self.cfg = cfg
        self.session = session or requests.Session()

    def __call__(self, prompt_text: str) -> tuple[str, int, dict]:
        """Return (response text, attempts used, usage accounting)."""
        cfg = self.cfg
        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get(API_KEY_ENV_VAR)
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        body = {
            "model": cfg.model,
            "messages": [{"role": "user", "content": prompt_text}],
            "temperature": cfg.temperature,
            "max_tokens": cfg.max_output_tokens,
        }
        last_error = None
        for attempt in range(1, cfg.max_attempts + 1):
            if attempt > 1:
                time.sleep(cfg.backoff_seconds * 2 ** (attempt - 2))
            try:
                resp = self.session.post(
                    cfg.endpoint,
                    json=body,
                    headers=headers,
                    timeout=cfg.timeout_seconds,
                )
            except requests.Timeout as exc:
                last_error = BackendTimeout(
                    f"request to {cfg.endpoint} timed out after "
                    f"{cfg.timeout_seconds}s"
                )
                logger.warning("attempt %d: %s", attempt, exc)
                continue
            except requests.RequestException as exc:
                last_error = TransportError(
                    f"cannot reach backend endpoint {cfg.endpoint}: {exc}"
                )
                logger.warning("attempt %d: transport failure", attempt)
                continue
            if resp.status_code == 200:
                payload = resp.json()
                text = payload["choices"][0]["message"]["content"]
                return text, attempt, payload.get("usage", {})
            last_error = BackendStatusError(
                f"backend returned status {resp.status_code}",
                status_code=resp.status_code,
            )
            if resp.status_code not in (408, 429) and resp.status_code < 500:
                break  # non-retryable client error
            logger.warning("attempt %d: status %d", attempt, resp.status_code)
        raise last_error


class ScriptedMockBackend:
    """Deterministic backend answering from a prompt-pattern script.

    Patterns are plain substrings matched against the prompt text; a
    pattern containing " && " is a conjunction and matches only when every
    part is present. Exactly one pattern may match a given prompt; an
    unmatched prompt gets the configured default response.
    """

    name = "mock"

    def __init__(self, script: dict, default="[]"):
        self.script = dict(script)
        self.default = default
        self.calls = 0

    @classmethod
    def from_file(cls, path):
        with open(path, encoding="utf-8") as f:
            obj = json.load(f)
        return cls(obj.get("script", {}), default=obj.get("default", "[]"))

    @staticmethod
    def _matches(pattern: str, prompt_text: str) -> bool:
        return all(part in prompt_text for part in pattern.split(" && "))

    def __call__(self, prompt_text: str) -> tuple[str, int, dict]:
        self.calls += 1
        matches = [p for p in self.script if self._matches(p, prompt_text)]
        if len(matches) > 1:
            raise BackendError(
                f"ambiguous mock script: {len(matches)} patterns match one "
                f"prompt: {sorted(matches)!r}"
            )
        if matches:
            return self.script[matches[0]], 1, {}
        return self.default, 1, {}


class Gateway:
    """complete() over a backend with an optional persistent cache."""

    def __init__(self, backend, cfg: BackendConfig, cache: QueryCache | None = None):
        self.backend = backend
        self.cfg = cfg
        self.cache = cache
        self.network_calls = 0
        self._lock = threading.Lock()

    def complete(self, prompt: RenderedPrompt) -> QueryRecord:
        key = cache_key(prompt.subtask, prompt.text, self.cfg.model, self.cfg.temperature)
        if self.cache is not None:
            cached = self.cache.get(key)
            if cached is not None:
                return cached
        text, attempts, usage = self.backend(prompt.text)
        with self._lock:
            self.network_calls += 1
        record = QueryRecord(
            cache_key=key,
            subtask=prompt.subtask,
            prompt=prompt.text,
            raw_response=text,
            model=self.cfg.model,
            temperature=self.cfg.temperature,
            timestamp=time.time(),
            attempts=attempts,
            usage=usage,
        )
        if self.cache is not None:
            self.cache.put(record)
        return record


def parse_recognition(raw: str) -> list[str]:
    """Extract the first bracketed list of strings from a response.

    Leading chatter before the list is tolerated. Raises ResponseParseError
    when no parsable list is present.
    """
    if raw is None:
        raise ResponseParseError("empty recognition response")
    start = raw.find("[")
    if start == -1:
        raise ResponseParseError("no bracketed list in recognition response")
    depth = 0
    end = -1
    for i in range(start, len(raw)):
        if raw[i] == "[":
            depth += 1
        elif raw[i] == "]":
            depth -= 1
            if depth == 0:
                end = i
                break
    if end == -1:
        raise ResponseParseError("unterminated list in recognition response")
    snippet = raw[start : end + 1]
    try:
        parsed = json.loads(snippet)
    except json.JSONDecodeError:
        # JSON-style but not strict JSON: fall back to quoted-string scan.
        items = re.findall(r'"((?:[^"\\]|\\.)*)"|\'((?:[^\'\\]|\\.)*)\'', snippet)
        if not items and snippet.strip() not in ("[]", "[ ]"):
            raise ResponseParseError(
                f"cannot parse recognition list: {snippet[:80]!r}"
            ) from None
        parsed = [a or b for a, b in items]
    if not isinstance(parsed, list) or not all(isinstance(x, str) for x in parsed):
        raise ResponseParseError("recognition list must contain strings only")
    return parsed


_QUOTES = "\"'“”‘’`"


def parse_resolution(raw: str) -> str | None:
    """Single-line antecedent string, or None for "no antecedent"."""
    if raw is None or not raw.strip():
        raise ResponseParseError("empty resolution response")
    line = next(l.strip() for l in raw.splitlines() if l.strip())
    # Strip one layer of surrounding quotes of matching style.
    if len(line) >= 2 and line[0] in _QUOTES and line[-1] in _QUOTES:
        line = line[1:-1].strip()
    if not line:
        raise ResponseParseError("resolution response is only quotes")
    if line.lower() == NO_ANTECEDENT:
        return None
    return line


@dataclass(frozen=True)
class SubtypeParse:
    labels: frozenset[SubtypeLabel]
    unknown: tuple[str, ...] = ()


def parse_subtypes(raw: str) -> SubtypeParse:
    """Semicolon-separated subtype labels; unknown spellings are kept aside.

    Raises ResponseParseError when no known label is present.
    """
    if raw is None or not raw.strip():
        raise ResponseParseError("empty subtype response")
    line = next(l.strip() for l in raw.splitlines() if l.strip())
    if len(line) >= 2 and line[0] in _QUOTES and line[-1] in _QUOTES:
        line = line[1:-1].strip()
    labels = set()
    unknown = []
    for part in line.split(";"):
        part = part.strip().strip(_QUOTES).strip()
        if not part:
            continue
        try:
            labels.add(SubtypeLabel(part.lower()))
        except ValueError:
            unknown.append(part)
    if not labels:
        raise ResponseParseError(
            f"no known subtype label in response: {line[:80]!r}"
        )
    return SubtypeParse(labels=frozenset(labels), unknown=tuple(unknown))
