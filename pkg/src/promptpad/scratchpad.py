"""Per-author workspace: labeled prompt variants, executions, sentence diffs.

Variants get stable labels (A, B, ... Z, AA, ...) that are never reused
within a session, executions snapshot the prompt body and pair it with
one output per sampled step, and iteration diffs work at sentence
granularity so whole removed/added sentences can be highlighted.
"""

from __future__ import annotations

import re
import threading
from dataclasses import dataclass, field
from typing import Callable

from .consistency import Embedder
from .content_pool import ContentPool, StepRef
from .errors import EmptyBody, UnknownVariant
from .gateway import Gateway, step_key
from .log_engine import LogEngine, utc_now_iso
from .pipeline import GenerationFailure, StepOutput, generate_pathways

# -- sentence diff -----------------------------------------------------------

_SENTENCE_BREAK = re.compile(r"(?<=[.!?])\s+")


def split_sentences(text: str) -> list[str]:
    """Split on ., !, ? followed by whitespace; fragments keep their punctuation."""
    return [piece.strip() for piece in _SENTENCE_BREAK.split(text) if piece.strip()]


@dataclass(frozen=True)
class SentenceSpan:
    index: int  # position in the owning body's sentence list
    text: str


@dataclass(frozen=True)
class PromptDiff:
    removed: tuple[SentenceSpan, ...]  # indexed into the old body
    added: tuple[SentenceSpan, ...]  # indexed into the new body
    unchanged_count: int

    @property
    def is_empty(self) -> bool:
        return not self.removed and not self.added

    def removed_texts(self) -> list[str]:
        return [span.text for span in self.removed]

    def added_texts(self) -> list[str]:
        return [span.text for span in self.added]

    def to_dict(self) -> dict:
        return {
            "removed": [{"index": s.index, "text": s.text} for s in self.removed],
            "added": [{"index": s.index, "text": s.text} for s in self.added],
            "unchanged_count": self.unchanged_count,
        }


def _lcs_pairs(old: list[str], new: list[str]) -> list[tuple[int, int]]:
    """Index pairs of one longest common subsequence (leftmost-biased)."""
    n, m = len(old), len(new)
    lengths = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        for j in range(m - 1, -1, -1):
            if old[i] == new[j]:
                lengths[i][j] = lengths[i + 1][j + 1] + 1
            else:
                lengths[i][j] = max(lengths[i + 1][j], lengths[i][j + 1])
    pairs = []
    i = j = 0
    while i < n and j < m:
        if old[i] == new[j]:
            pairs.append((i, j))
            i += 1
            j += 1
        elif lengths[i + 1][j] >= lengths[i][j + 1]:
            i += 1
        else:
            j += 1
    return pairs


def diff(old_body: str, new_body: str) -> PromptDiff:
    """Sentence-level edit script from old to new.

    removed and added are the LCS complements; applying them to the old
    sentence list reproduces the new one (see apply_diff). Equal bodies
    produce an empty diff.
    """
    old = split_sentences(old_body)
    new = split_sentences(new_body)
    pairs = _lcs_pairs(old, new)
    kept_old = {i for i, _ in pairs}
    kept_new = {j for _, j in pairs}
    removed = tuple(SentenceSpan(i, old[i]) for i in range(len(old)) if i not in kept_old)
    added = tuple(SentenceSpan(j, new[j]) for j in range(len(new)) if j not in kept_new)
    return PromptDiff(removed=removed, added=added, unchanged_count=len(pairs))


def apply_diff(old_body: str, patch: PromptDiff) -> list[str]:
    """Replay the edit script; returns the resulting sentence list."""
    old = split_sentences(old_body)
    removed_indices = {span.index for span in patch.removed}
    result = [s for i, s in enumerate(old) if i not in removed_indices]
    for span in sorted(patch.added, key=lambda s: s.index):
        result.insert(span.index, span.text)
    return result


# -- variants and executions ---------------------------------------------------


def variant_label(position: int) -> str:
    """1 -> A, 26 -> Z, 27 -> AA, ... (bijective base-26)."""
    if position < 1:
        raise ValueError("position starts at 1")
    label = ""
    n = position
    while n > 0:
        n, rem = divmod(n - 1, 26)
        label = chr(ord("A") + rem) + label
    return label


@dataclass(frozen=True)
class Variant:
    variant_label: str
    body: str
    derived_from: str | None
    created_at: str


@dataclass(frozen=True)
class ExecutionRecord:
    execution_id: str
    variant_label: str
    prompt_body_snapshot: str
    sampled_step_refs: tuple[StepRef, ...]
    outputs: dict[StepRef, StepOutput]
    provider: str
    started_at: str
    finished_at: str
    generation_count: int = 0
    raw_outputs: dict[StepRef, str] = field(default_factory=dict)
    similarities: dict[StepRef, float] = field(default_factory=dict)


class ScratchpadSession:
    """Single-writer workspace bound to one pool and one author."""

    def __init__(
        self,
        session_id: str,
        pool: ContentPool,
        gateway: Gateway,
        author: str = "anonymous",
        log_engine: LogEngine | None = None,
        embedder: Embedder | None = None,
        base_seed: int = 0,
        level: str = "textbook",
        lesson_id: str | None = None,
        clock: Callable[[], str] = utc_now_iso,
    ):
        self.session_id = session_id
        self.pool = pool
        self.gateway = gateway
        self.author = author
        self.log_engine = log_engine
        self.embedder = embedder
        self.base_seed = base_seed
        self.level = level
        self.lesson_id = lesson_id
        self.clock = clock
        self._lock = threading.RLock()
        self._variants: dict[str, Variant] = {}
        self._variant_count = 0
        self._execution_count = 0
        self._executions: list[ExecutionRecord] = []
        self._last_exec_node: dict[str, str] = {}  # variant label -> log node id

    def create_variant(self, body: str, derived_from: str | None = None) -> Variant:
        """Add a variant under the next free label; bodies are caller-supplied."""
        if not body or not body.strip():
            raise EmptyBody("variant body is empty")
        with self._lock:
            if derived_from is not None and derived_from not in self._variants:
                raise UnknownVariant(f"variant {derived_from!r} not in session")
            self._variant_count += 1
            variant = Variant(
                variant_label=variant_label(self._variant_count),
                body=body,
                derived_from=derived_from,
                created_at=self.clock(),
            )
            self._variants[variant.variant_label] = variant
            return variant

    def get_variant(self, label: str) -> Variant:
        with self._lock:
            if label not in self._variants:
                raise UnknownVariant(f"variant {label!r} not in session")
            return self._variants[label]

    def variants(self) -> list[Variant]:
        with self._lock:
            return [self._variants[variant_label(i + 1)] for i in range(self._variant_count)]

    def executions(self) -> list[ExecutionRecord]:
        with self._lock:
            return list(self._executions)

    def diff_against_source(self, label: str) -> PromptDiff:
        """Diff a variant against the variant it was derived from."""
        target = self.get_variant(label)
        if target.derived_from is None:
            return diff("", target.body)
        return diff(self.get_variant(target.derived_from).body, target.body)

    def execute(
        self,
        variant_label: str,
        step_refs: list[StepRef],
        k: int = 1,
        provider: str = "mock",
        seed: int | None = None,
        inline_outputs: bool = False,
    ) -> ExecutionRecord:
        """Run one variant against the sampled steps and log the execution.

        Per-step failures are recorded in the outputs map, never aborting
        the batch. With the default seed policy each execution draws a
        fresh seed from the session counter, so replays with an explicit
        seed are exact.
        """
        variant = self.get_variant(variant_label)
        with self._lock:
            self._execution_count += 1
            exec_no = self._execution_count
        if seed is None:
            seed = self.base_seed + exec_no
        started_at = self.clock()
        result = generate_pathways(
            pool=self.pool,
            prompt_body=variant.body,
            step_refs=step_refs,
            gateway=self.gateway,
            provider=provider,
            k=k,
            seed=seed,
            embedder=self.embedder,
        )
        record = ExecutionRecord(
            execution_id=f"{self.session_id}-x{exec_no:04d}",
            variant_label=variant_label,
            prompt_body_snapshot=variant.body,
            sampled_step_refs=tuple(step_refs),
            outputs=result.outputs,
            provider=provider,
            started_at=started_at,
            finished_at=self.clock(),
            generation_count=result.generation_count,
            raw_outputs=result.raw_chosen,
            similarities=result.similarities,
        )
        self._log_execution(record, variant, inline_outputs)
        with self._lock:
            self._executions.append(record)
        return record

    def _log_execution(self, record: ExecutionRecord, variant: Variant, inline_outputs: bool) -> None:
        if self.log_engine is None:
            return
        digests = {
            step_key(*ref): self.log_engine.store_blob(text)
            for ref, text in sorted(record.raw_outputs.items())
        }
        data = {
            "body": record.prompt_body_snapshot,
            "variant_label": record.variant_label,
            "session_id": self.session_id,
            "level": self.level,
            "lesson_id": self.lesson_id,
            "step_refs": [step_key(*ref) for ref in record.sampled_step_refs],
            "output_digests": digests,
            "provider": record.provider,
            "execution_id": record.execution_id,
            "failures": {
                step_key(*ref): out.reason
                for ref, out in sorted(record.outputs.items())
                if isinstance(out, GenerationFailure)
            },
        }
        if inline_outputs:
            data["outputs_inline"] = {step_key(*ref): text for ref, text in sorted(record.raw_outputs.items())}
        # Chain executions of one variant; a derived variant branches from
        # its source's latest execution, a fresh variant starts a new root.
        parent = self._last_exec_node.get(record.variant_label)
        if parent is None and variant.derived_from is not None:
            parent = self._last_exec_node.get(variant.derived_from)
        node = self.log_engine.append_node(
            kind="execution",
            author=self.author,
            parent_id=parent,
            data=data,
        )
        self._last_exec_node[record.variant_label] = node.node_id
