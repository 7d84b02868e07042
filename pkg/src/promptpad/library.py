"""Shared two-level prompt store: commit, clone, upvote, query.

Prompts live at textbook or lesson scope, are immutable once committed
(edits create new prompts with parentage), and carry idempotent per-voter
upvotes. State is a pure function of the append-only operation journal,
so a library replays identically from disk.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, replace
from pathlib import Path
from typing import TYPE_CHECKING, Callable

from .errors import EmptyBody, LessonMismatch, UnknownParent, UnknownPrompt
from .log_engine import utc_now_iso

if TYPE_CHECKING:
    from .log_engine import LogEngine

LEVELS = ("textbook", "lesson")


@dataclass(frozen=True)
class Prompt:
    prompt_id: str
    author: str
    level: str  # "textbook" | "lesson"
    lesson_id: str | None
    body: str
    parent_id: str | None
    upvotes: int
    committed_at: str
    sequence: int


def is_verbatim(a: str, b: str) -> bool:
    """Clone-detection rule: bodies byte-equal after whitespace trim."""
    return a.strip() == b.strip()


def _check_level(level: str, lesson_id: str | None) -> None:
    if level not in LEVELS:
        raise ValueError(f"unknown level {level!r}")
    if level == "lesson" and not lesson_id:
        raise LessonMismatch("lesson-level prompt requires a lesson_id")
    if level == "textbook" and lesson_id:
        raise LessonMismatch("textbook-level prompt must not carry a lesson_id")


class PromptLibrary:
    """Single-writer prompt store with an optional on-disk journal."""

    def __init__(
        self,
        journal_path: str | Path | None = None,
        log_engine: "LogEngine | None" = None,
        clock: Callable[[], str] = utc_now_iso,
    ):
        self.clock = clock
        self.log_engine = log_engine
        self._lock = threading.RLock()
        self._prompts: dict[str, Prompt] = {}
        self._order: list[str] = []
        self._voters: dict[str, set[str]] = {}
        self._commit_nodes: dict[str, str] = {}  # prompt_id -> log node_id
        self._replaying = False
        self.journal_path = Path(journal_path) if journal_path else None
        if self.journal_path and self.journal_path.exists():
            self._replay_journal()

    # -- operations -----------------------------------------------------------

    def commit(
        self,
        author: str,
        level: str,
        lesson_id: str | None,
        body: str,
        parent_id: str | None = None,
    ) -> Prompt:
        """Append a new immutable prompt; emits a commit node to the log."""
        if not body or not body.strip():
            raise EmptyBody("prompt body is empty")
        _check_level(level, lesson_id)
        with self._lock:
            if parent_id is not None and parent_id not in self._prompts:
                raise UnknownParent(f"parent prompt {parent_id!r} not in library")
            sequence = len(self._order) + 1
            prompt = Prompt(
                prompt_id=f"prompt-{sequence:05d}",
                author=author,
                level=level,
                lesson_id=lesson_id,
                body=body,
                parent_id=parent_id,
                upvotes=0,
                committed_at=self.clock(),
                sequence=sequence,
            )
            self._prompts[prompt.prompt_id] = prompt
            self._order.append(prompt.prompt_id)
            self._voters[prompt.prompt_id] = set()
            self._journal({"op": "commit", "author": author, "level": level,
                           "lesson_id": lesson_id, "body": body, "parent_id": parent_id,
                           "prompt_id": prompt.prompt_id, "committed_at": prompt.committed_at})
            self._emit_commit_node(prompt)
            return prompt

    def clone(
        self,
        prompt_id: str,
        author: str,
        target_level: str,
        lesson_id: str | None = None,
    ) -> Prompt:
        """Copy a prompt byte-identically into a new scope, keeping lineage."""
        with self._lock:
            source = self._prompts.get(prompt_id)
            if source is None:
                raise UnknownPrompt(f"prompt {prompt_id!r} not in library")
            _check_level(target_level, lesson_id)
            return self.commit(
                author=author,
                level=target_level,
                lesson_id=lesson_id,
                body=source.body,
                parent_id=prompt_id,
            )

    def upvote(self, prompt_id: str, voter: str) -> int:
        """Idempotent per-voter upvote; returns the distinct-voter count."""
        with self._lock:
            if prompt_id not in self._prompts:
                raise UnknownPrompt(f"prompt {prompt_id!r} not in library")
            if voter not in self._voters[prompt_id]:
                self._voters[prompt_id].add(voter)
                self._journal({"op": "upvote", "prompt_id": prompt_id, "voter": voter})
            return len(self._voters[prompt_id])

    def query(
        self,
        level: str | None = None,
        lesson_id: str | None = None,
        order: str = "sequence",
    ) -> list[Prompt]:
        """Filtered, stably ordered view; upvote ties break by sequence."""
        with self._lock:
            prompts = [self._with_votes(pid) for pid in self._order]
        if level is not None:
            prompts = [p for p in prompts if p.level == level]
        if lesson_id is not None:
            prompts = [p for p in prompts if p.lesson_id == lesson_id]
        if order == "upvotes":
            prompts.sort(key=lambda p: (-p.upvotes, p.sequence))
        elif order != "sequence":
            raise ValueError(f"unknown order {order!r}")
        return prompts

    def get(self, prompt_id: str) -> Prompt:
        with self._lock:
            if prompt_id not in self._prompts:
                raise UnknownPrompt(f"prompt {prompt_id!r} not in library")
            return self._with_votes(prompt_id)

    def lineage_root(self, prompt_id: str) -> Prompt:
        """Walk the parent chain to the ultimate ancestor."""
        with self._lock:
            cursor = self.get(prompt_id)
            while cursor.parent_id is not None:
                cursor = self.get(cursor.parent_id)
            return cursor

    def lineage_chain(self, prompt_id: str) -> list[Prompt]:
        """Prompts from the lineage root down to the given prompt."""
        with self._lock:
            chain = [self.get(prompt_id)]
            while chain[-1].parent_id is not None:
                chain.append(self.get(chain[-1].parent_id))
            return list(reversed(chain))

    def __len__(self) -> int:
        with self._lock:
            return len(self._order)

    def snapshot(self) -> dict:
        """Derived state view (not the journal): prompts with live counts."""
        with self._lock:
            return {
                "prompts": [
                    {
                        "prompt_id": p.prompt_id,
                        "author": p.author,
                        "level": p.level,
                        "lesson_id": p.lesson_id,
                        "body": p.body,
                        "parent_id": p.parent_id,
                        "upvotes": p.upvotes,
                        "committed_at": p.committed_at,
                        "sequence": p.sequence,
                    }
                    for p in (self._with_votes(pid) for pid in self._order)
                ]
            }

    # -- internals --------------------------------------------------------------

    def _with_votes(self, prompt_id: str) -> Prompt:
        return replace(self._prompts[prompt_id], upvotes=len(self._voters[prompt_id]))

    def _emit_commit_node(self, prompt: Prompt) -> None:
        if self.log_engine is None or self._replaying:
            return
        parent_node = self._commit_nodes.get(prompt.parent_id) if prompt.parent_id else None
        node = self.log_engine.append_node(
            kind="commit",
            author=prompt.author,
            parent_id=parent_node,
            data={
                "prompt_id": prompt.prompt_id,
                "level": prompt.level,
                "lesson_id": prompt.lesson_id,
                "body": prompt.body,
            },
        )
        self._commit_nodes[prompt.prompt_id] = node.node_id

    def _journal(self, record: dict) -> None:
        if self.journal_path is None or self._replaying:
            return
        line = json.dumps(record, sort_keys=True, separators=(",", ":"))
        with open(self.journal_path, "a", encoding="utf-8") as fh:
            fh.write(line + "\n")
            fh.flush()
        # derived snapshot, rebuilt after every journaled operation
        snapshot_path = self.journal_path.with_suffix(".snapshot.json")
        snapshot_path.write_text(
            json.dumps(self.snapshot(), sort_keys=True, indent=2, ensure_ascii=False) + "\n",
            encoding="utf-8",
        )

    def _replay_journal(self) -> None:
        assert self.journal_path is not None
        self._replaying = True
        try:
            with open(self.journal_path, encoding="utf-8") as fh:
                for line in fh:
                    if not line.strip():
                        continue
                    record = json.loads(line)
                    if record["op"] == "commit":
                        prompt = Prompt(
                            prompt_id=record["prompt_id"],
                            author=record["author"],
                            level=record["level"],
                            lesson_id=record.get("lesson_id"),
                            body=record["body"],
                            parent_id=record.get("parent_id"),
                            upvotes=0,
                            committed_at=record["committed_at"],
                            sequence=len(self._order) + 1,
                        )
                        self._prompts[prompt.prompt_id] = prompt
                        self._order.append(prompt.prompt_id)
                        self._voters[prompt.prompt_id] = set()
                    elif record["op"] == "upvote":
                        self._voters[record["prompt_id"]].add(record["voter"])
        finally:
            self._replaying = False
