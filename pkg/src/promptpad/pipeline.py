"""Batch generation pipeline: k samples per step, consistency selection, parse.

One pipeline run resolves the sampled steps, issues k gateway calls (each
returning one value per step key), picks the representative candidate per
step when k > 1, and parses the chosen raw text into pathways. Failures
are isolated per step; a batch never aborts because one step came back
malformed.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Union

from .consistency import Embedder, HashedTfEmbedder, select_representative
from .content_pool import ContentPool, StepRef
from .errors import GatewayUnavailable, ProviderError, SchemaViolation, Timeout, UnresolvedStepRef
from .gateway import (
    DEFAULT_TEMPERATURE_CONSISTENCY,
    DEFAULT_TEMPERATURE_SINGLE,
    BatchSchema,
    Gateway,
    GenerationRequest,
    StepPayload,
    load_preamble,
    step_key,
)
from .validator import HintPathway, parse_pathway

# Spreads seeds apart so per-sample nonces from different runs never collide.
_SEED_STRIDE = 1_000_003


@dataclass(frozen=True)
class GenerationFailure:
    reason: str
    raw_text: str | None = None


StepOutput = Union[HintPathway, GenerationFailure]


@dataclass
class PipelineResult:
    outputs: dict[StepRef, StepOutput]
    raw_chosen: dict[StepRef, str] = field(default_factory=dict)
    similarities: dict[StepRef, float] = field(default_factory=dict)
    generation_count: int = 0
    sample_errors: list[str] = field(default_factory=list)

    def failure_count(self) -> int:
        return sum(1 for out in self.outputs.values() if isinstance(out, GenerationFailure))


def build_step_payloads(pool: ContentPool, step_refs: list[StepRef]) -> list[StepPayload]:
    index = pool.step_index()
    missing = [ref for ref in step_refs if ref not in index]
    if missing:
        raise UnresolvedStepRef(missing)
    problems = {
        p.problem_id: p.body for lesson in pool.lessons for p in lesson.problems
    }
    payloads = []
    for problem_id, step_id in step_refs:
        step = index[(problem_id, step_id)]
        payloads.append(
            StepPayload(
                step_ref=step_key(problem_id, step_id),
                problem_body=problems[problem_id],
                step_body=step.body,
                answer=step.answer,
                answer_type=step.answer_type,
                choices=step.choices,
            )
        )
    return payloads


def generate_pathways(
    pool: ContentPool,
    prompt_body: str,
    step_refs: list[StepRef],
    gateway: Gateway,
    provider: str = "mock",
    k: int = 1,
    seed: int = 0,
    embedder: Embedder | None = None,
    temperature: float | None = None,
    preamble: str | None = None,
    jobs: int = 1,
    on_sample: Callable[[int, int], None] | None = None,
) -> PipelineResult:
    """Run the k-sample generation loop over the given steps.

    Raises GatewayUnavailable only when the provider fails before any
    output; later sample failures are recorded and surviving candidates
    still feed selection. With jobs > 1 the k samples fan out on a worker
    pool; candidates are still collected in sample order, so results are
    identical to the sequential run.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    payloads = build_step_payloads(pool, step_refs)
    system_preamble = preamble if preamble is not None else load_preamble()
    if temperature is None:
        temperature = DEFAULT_TEMPERATURE_CONSISTENCY if k > 1 else DEFAULT_TEMPERATURE_SINGLE
    schema = BatchSchema(keys=tuple(p.step_ref for p in payloads))

    def request_for(i: int) -> GenerationRequest:
        return GenerationRequest(
            system_preamble=system_preamble,
            user_prompt=prompt_body,
            steps=tuple(payloads),
            output_schema=schema,
            temperature=temperature,
            provider=provider,
            nonce=seed * _SEED_STRIDE + i,
        )

    outcomes: list[object]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool_exec:
            futures = [pool_exec.submit(gateway.generate, request_for(i)) for i in range(k)]
            outcomes = []
            for future in futures:
                try:
                    outcomes.append(future.result())
                except Exception as exc:
                    outcomes.append(exc)
    else:
        outcomes = []
        succeeded = False
        for i in range(k):
            try:
                outcomes.append(gateway.generate(request_for(i)))
                succeeded = True
            except Exception as exc:
                outcomes.append(exc)
                # dead provider with nothing received: no point burning k calls
                if isinstance(exc, (ProviderError, Timeout)) and not succeeded:
                    break

    candidates: dict[str, list[str]] = {p.step_ref: [] for p in payloads}
    sample_errors: list[str] = []
    generation_count = 0
    got_any_output = False
    done = 0
    for i, outcome in enumerate(outcomes):
        if isinstance(outcome, (ProviderError, Timeout)):
            if not got_any_output:
                raise GatewayUnavailable(f"provider {provider!r} unreachable: {outcome}") from outcome
            sample_errors.append(f"sample {i}: {outcome}")
            continue
        if isinstance(outcome, SchemaViolation):
            sample_errors.append(f"sample {i}: {outcome}")
            continue
        if isinstance(outcome, Exception):
            raise outcome
        got_any_output = True
        for ref, text in outcome.per_key.items():
            candidates[ref].append(text)
            generation_count += 1
        done += 1
        if on_sample is not None:
            on_sample(done, k)

    embedder = embedder or HashedTfEmbedder()
    outputs: dict[StepRef, StepOutput] = {}
    raw_chosen: dict[StepRef, str] = {}
    similarities: dict[StepRef, float] = {}
    for (problem_id, step_id), payload in zip(step_refs, payloads):
        ref = (problem_id, step_id)
        texts = candidates[payload.step_ref]
        if not texts:
            detail = sample_errors[-1] if sample_errors else "no generations received"
            outputs[ref] = GenerationFailure(reason=f"no candidates: {detail}")
            continue
        if len(texts) == 1:
            chosen, similarity = texts[0], 1.0
        else:
            selection = select_representative(texts, embedder)
            chosen, similarity = selection.chosen_text, selection.similarity_to_centroid
        raw_chosen[ref] = chosen
        similarities[ref] = similarity
        try:
            outputs[ref] = parse_pathway(chosen)
        except Exception as exc:
            outputs[ref] = GenerationFailure(reason=str(exc), raw_text=chosen)

    return PipelineResult(
        outputs=outputs,
        raw_chosen=raw_chosen,
        similarities=similarities,
        generation_count=generation_count,
        sample_errors=sample_errors,
    )
