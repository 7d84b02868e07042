"""Provider-agnostic batch generation client.

Wraps a versioned system preamble (the formatting guidelines) around the
author's prompt plus the sampled problem content, enforces the flat
batch-output schema (one key per step, retrying on violations), and ships
a deterministic mock provider so the whole stack tests offline.
"""

from __future__ import annotations

import hashlib
import importlib.resources
import logging
import random
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Protocol

from .errors import DuplicateName, InvalidEndpoint, ProviderError, SchemaViolation, Timeout

log = logging.getLogger(__name__)

PREAMBLE_VERSION = "v1"

# Consistency runs need output variance; single-shot scratchpad runs
# benefit from stability.
DEFAULT_TEMPERATURE_SINGLE = 0.2
DEFAULT_TEMPERATURE_CONSISTENCY = 1.0

DEFAULT_SCHEMA_RETRIES = 3
DEFAULT_MAX_IN_FLIGHT = 8


def load_preamble(version: str = PREAMBLE_VERSION) -> str:
    resource = importlib.resources.files("promptpad.data") / f"system_preamble_{version}.txt"
    return resource.read_text(encoding="utf-8")


def step_key(problem_id: str, step_id: str) -> str:
    return f"{problem_id}:{step_id}"


def split_step_key(key: str) -> tuple[str, str]:
    problem_id, _, step_id = key.partition(":")
    return problem_id, step_id


@dataclass(frozen=True)
class StepPayload:
    step_ref: str  # "<problem_id>:<step_id>"
    problem_body: str
    step_body: str
    answer: str
    answer_type: str
    choices: tuple[str, ...] | None = None


@dataclass(frozen=True)
class BatchSchema:
    """Flat JSON object schema: exactly one string value per step key."""

    keys: tuple[str, ...]

    def json_schema(self) -> dict:
        return {
            "type": "object",
            "properties": {key: {"type": "string", "minLength": 1} for key in self.keys},
            "required": list(self.keys),
            "additionalProperties": False,
        }


@dataclass(frozen=True)
class GenerationRequest:
    system_preamble: str
    user_prompt: str
    steps: tuple[StepPayload, ...]
    output_schema: BatchSchema
    temperature: float = DEFAULT_TEMPERATURE_SINGLE
    provider: str = "mock"
    # Distinguishes repeated draws of the same request during consistency
    # sampling; part of the mock's deterministic input.
    nonce: int = 0

    def __post_init__(self) -> None:
        if not self.steps:
            raise ValueError("request needs at least one step")
        if set(self.output_schema.keys) != {s.step_ref for s in self.steps}:
            raise ValueError("schema keys must equal the step_ref set")
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError(f"temperature {self.temperature} outside [0, 2]")


@dataclass(frozen=True)
class BatchResponse:
    per_key: dict[str, str]
    provider_metadata: dict[str, str] = field(default_factory=dict)


class Provider(Protocol):
    def complete(self, request: GenerationRequest) -> dict: ...


def render_user_message(request: GenerationRequest) -> str:
    """Combine the author prompt with the sampled problem content."""
    blocks = [request.user_prompt.strip(), "", "Problem steps:"]
    for step in request.steps:
        lines = [
            f"- key: {step.step_ref}",
            f"  problem: {step.problem_body}",
            f"  step: {step.step_body}",
            f"  answer: {step.answer}",
            f"  answer_type: {step.answer_type}",
        ]
        if step.choices:
            lines.append(f"  choices: {'|'.join(step.choices)}")
        blocks.extend(lines)
    blocks.append("")
    blocks.append("Return one JSON object with exactly these keys: " + ", ".join(s.step_ref for s in request.steps))
    return "\n".join(blocks)


def _hash64(*parts: str) -> int:
    joined = "\x1f".join(parts).encode("utf-8")
    return int.from_bytes(hashlib.blake2b(joined, digest_size=8).digest(), "big")


_HINT_TITLES = [
    "Read the goal",
    "Recall the rule",
    "Plan the move",
    "Check the setup",
    "Spot the pattern",
    "Name the concept",
]
_HINT_BODIES = [
    "Restate the step in your own words before computing anything.",
    "Identify which quantity the step asks for and what is already known.",
    "Write down the governing relationship before plugging in numbers.",
    "Compare this step with the previous one and note what changed.",
    "Work the operation on both sides so the expression stays balanced.",
    "Simplify each part separately, then combine the results.",
]
_SCAFFOLD_TITLES = [
    "Solve the piece",
    "Fill the blank",
    "Work the sub-step",
    "Answer the check",
]
_SCAFFOLD_BODIES = [
    "What value does this step come out to",
    "Which result do you get for this part",
    "What does the expression evaluate to here",
]


def _sanitize(text: str) -> str:
    return text.replace(" :: ", " : ").replace("\n", " ")


def mock_pathway_text(system_preamble: str, user_prompt: str, step: StepPayload, nonce: int) -> str:
    """Deterministic pathway text for one step.

    A pure function of the 64-bit hash of (preamble, prompt, step_ref,
    nonce): identical inputs give byte-identical output, while distinct
    nonces give the wording variety consistency selection feeds on.
    """
    rng = random.Random(_hash64(system_preamble, user_prompt, step.step_ref, str(nonce)))
    lines = []
    for _ in range(rng.randint(1, 3)):
        lines.append(f"HINT {rng.choice(_HINT_TITLES)} :: {rng.choice(_HINT_BODIES)}")
    answer = _sanitize(step.answer)
    scaffold = [
        rng.choice(_SCAFFOLD_TITLES),
        f"{rng.choice(_SCAFFOLD_BODIES)}?",
        answer,
        step.answer_type,
    ]
    if step.answer_type == "multiple_choice":
        scaffold.append("|".join(_sanitize(c) for c in step.choices or (answer,)))
    lines.append("SCAFFOLD " + " :: ".join(scaffold))
    return "\n".join(lines)


class MockProvider:
    """Offline provider producing schema-conformant, deterministic output."""

    def complete(self, request: GenerationRequest) -> dict:
        per_key = {
            step.step_ref: mock_pathway_text(
                request.system_preamble, request.user_prompt, step, request.nonce
            )
            for step in request.steps
        }
        return {"per_key": per_key, "metadata": {"provider": "mock", "nonce": str(request.nonce)}}


class HttpProvider:
    """Minimal chat-completions-style HTTP/JSON provider adapter.

    POSTs {system, user, schema, temperature, nonce} to the endpoint and
    expects {"per_key": {...}} back. Bearer credential comes from the
    environment variable named at registration. Rate-limit responses are
    retried with exponential backoff.
    """

    def __init__(
        self,
        name: str,
        endpoint: str,
        key_env: str | None = None,
        timeout: float = 120.0,
        rate_limit_retries: int = 5,
    ):
        self.name = name
        self.endpoint = endpoint
        self.key_env = key_env
        self.timeout = timeout
        self.rate_limit_retries = rate_limit_retries

    def complete(self, request: GenerationRequest) -> dict:
        import os

        import requests

        headers = {"Content-Type": "application/json"}
        if self.key_env:
            token = os.environ.get(self.key_env, "")
            if token:
                headers["Authorization"] = f"Bearer {token}"
        body = {
            "system": request.system_preamble,
            "user": render_user_message(request),
            "schema": request.output_schema.json_schema(),
            "temperature": request.temperature,
            "nonce": request.nonce,
        }
        delay = 1.0
        for attempt in range(self.rate_limit_retries + 1):
            try:
                response = requests.post(self.endpoint, json=body, headers=headers, timeout=self.timeout)
            except requests.Timeout as exc:
                raise Timeout(f"provider {self.name}: {exc}") from exc
            except requests.RequestException as exc:
                raise ProviderError(f"provider {self.name}: {exc}") from exc
            if response.status_code in (429, 503) and attempt < self.rate_limit_retries:
                log.warning("provider %s rate-limited, backing off %.1fs", self.name, delay)
                time.sleep(delay)
                delay *= 2
                continue
            if response.status_code >= 400:
                raise ProviderError(f"provider {self.name}: HTTP {response.status_code}: {response.text[:200]}")
            try:
                return response.json()
            except ValueError as exc:
                raise ProviderError(f"provider {self.name}: non-JSON response") from exc
        raise ProviderError(f"provider {self.name}: rate-limited after {self.rate_limit_retries} retries")


class Gateway:
    """Routes generation requests to registered providers with schema enforcement."""

    def __init__(
        self,
        schema_retries: int = DEFAULT_SCHEMA_RETRIES,
        max_in_flight: int = DEFAULT_MAX_IN_FLIGHT,
        payload_sink: Callable[[dict, dict], None] | None = None,
    ):
        self.schema_retries = schema_retries
        self.payload_sink = payload_sink
        self._max_in_flight = max_in_flight
        self._providers: dict[str, Provider] = {"mock": MockProvider()}
        self._limits: dict[str, threading.BoundedSemaphore] = {
            "mock": threading.BoundedSemaphore(max_in_flight)
        }
        self._lock = threading.Lock()

    def register_provider(self, name: str, endpoint: str, credentials_env: str | None = None) -> None:
        """Make an HTTP provider available under the given name."""
        if not endpoint.startswith(("http://", "https://")):
            raise InvalidEndpoint(f"{endpoint!r} is not an http(s) URL")
        self.add_provider(name, HttpProvider(name, endpoint, key_env=credentials_env))

    def add_provider(self, name: str, provider: Provider) -> None:
        with self._lock:
            if name in self._providers:
                raise DuplicateName(f"provider {name!r} already registered")
            self._providers[name] = provider
            self._limits[name] = threading.BoundedSemaphore(self._max_in_flight)

    def provider_names(self) -> list[str]:
        with self._lock:
            return sorted(self._providers)

    def generate(self, request: GenerationRequest) -> BatchResponse:
        """Run one batch generation, enforcing schema totality.

        Schema violations from the provider are retried up to the
        configured attempt budget, then surfaced with the offending
        payload attached. Raw payloads are forwarded to the sink before
        any validation or parsing.
        """
        with self._lock:
            provider = self._providers.get(request.provider)
            limit = self._limits.get(request.provider)
        if provider is None or limit is None:
            raise ProviderError(f"unknown provider {request.provider!r}")

        expected = set(request.output_schema.keys)
        last_violation = "no attempt made"
        last_payload: dict | None = None
        for attempt in range(1, self.schema_retries + 1):
            with limit:
                payload = provider.complete(request)
            if self.payload_sink is not None:
                self.payload_sink(payload, {"provider": request.provider, "attempt": attempt, "nonce": request.nonce})
            violation = self._schema_violation(payload, expected)
            if violation is None:
                metadata = {str(k): str(v) for k, v in (payload.get("metadata") or {}).items()}
                return BatchResponse(per_key=dict(payload["per_key"]), provider_metadata=metadata)
            last_violation, last_payload = violation, payload
            log.warning("attempt %d/%d schema violation: %s", attempt, self.schema_retries, violation)
        raise SchemaViolation(last_violation, payload=last_payload)

    @staticmethod
    def _schema_violation(payload: dict, expected: set[str]) -> str | None:
        per_key = payload.get("per_key")
        if not isinstance(per_key, dict):
            return "payload has no 'per_key' object"
        got = set(per_key)
        missing = sorted(expected - got)
        extra = sorted(got - expected)
        if missing:
            return f"missing keys: {missing}"
        if extra:
            return f"unexpected keys: {extra}"
        empty = sorted(k for k, v in per_key.items() if not isinstance(v, str) or not v)
        if empty:
            return f"empty or non-string values for keys: {empty}"
        return None
