"""Append-only, tree-structured capture of executions and commits.

Every prompt execution and library commit becomes an immutable node in a
forest; nodes journal to disk (one JSON line each) before the append is
acknowledged, and the forest exports as nested JSON for offline analysis:
iteration chains, influence edges, per-user activity.
"""

from __future__ import annotations

import hashlib
import json
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import TYPE_CHECKING, Callable, Iterable

from .errors import DuplicateId, UnknownParent, UnknownRoot

if TYPE_CHECKING:
    from .library import PromptLibrary

EXPORT_FORMAT = "promptpad-log-v1"

NODE_KINDS = ("execution", "commit")


def utc_now_iso() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass(frozen=True)
class LogNode:
    node_id: str
    parent_id: str | None
    kind: str  # "execution" | "commit"
    author: str
    timestamp: str  # ISO 8601 UTC
    data: dict = field(default_factory=dict)


@dataclass(frozen=True)
class InfluenceEdge:
    source_prompt: str  # textbook-level lineage root
    target: str  # lesson-level prompt
    verbatim: bool


def _node_to_dict(node: LogNode, seq: int) -> dict:
    return {
        "seq": seq,
        "node_id": node.node_id,
        "parent_id": node.parent_id,
        "kind": node.kind,
        "author": node.author,
        "timestamp": node.timestamp,
        "data": node.data,
    }


def _node_from_dict(record: dict) -> tuple[int, LogNode]:
    return record["seq"], LogNode(
        node_id=record["node_id"],
        parent_id=record.get("parent_id"),
        kind=record["kind"],
        author=record["author"],
        timestamp=record["timestamp"],
        data=record.get("data") or {},
    )


class LogEngine:
    """Single serialized appender over an immutable node sequence."""

    def __init__(
        self,
        journal_path: str | Path | None = None,
        blob_dir: str | Path | None = None,
        clock: Callable[[], str] = utc_now_iso,
    ):
        self.clock = clock
        self._lock = threading.Lock()
        self._nodes: list[LogNode] = []
        self._seq_by_id: dict[str, int] = {}
        self._children: dict[str, list[str]] = {}
        self._blobs: dict[str, str] = {}
        self.journal_path = Path(journal_path) if journal_path else None
        self.blob_dir = Path(blob_dir) if blob_dir else None
        if self.blob_dir:
            self.blob_dir.mkdir(parents=True, exist_ok=True)
        if self.journal_path and self.journal_path.exists():
            self._replay_journal()

    # -- appends ------------------------------------------------------------

    def append(self, node: LogNode) -> int:
        """Durably append one node; returns its monotone sequence number."""
        with self._lock:
            return self._append_locked(node)

    def append_node(
        self,
        kind: str,
        author: str,
        data: dict,
        parent_id: str | None = None,
        node_id: str | None = None,
    ) -> LogNode:
        """Build and append a node, assigning a sequential id and timestamp."""
        with self._lock:
            node = LogNode(
                node_id=node_id or f"n{len(self._nodes) + 1:06d}",
                parent_id=parent_id,
                kind=kind,
                author=author,
                timestamp=self.clock(),
                data=data,
            )
            self._append_locked(node)
            return node

    def _append_locked(self, node: LogNode) -> int:
        if node.kind not in NODE_KINDS:
            raise ValueError(f"unknown node kind {node.kind!r}")
        if node.node_id in self._seq_by_id:
            raise DuplicateId(f"node {node.node_id!r} already appended")
        if node.parent_id is not None and node.parent_id not in self._seq_by_id:
            raise UnknownParent(f"parent {node.parent_id!r} not appended yet")
        seq = len(self._nodes) + 1
        if self.journal_path:
            line = json.dumps(_node_to_dict(node, seq), sort_keys=True, separators=(",", ":"))
            with open(self.journal_path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")
                fh.flush()
        self._admit(node, seq)
        return seq

    def _admit(self, node: LogNode, seq: int) -> None:
        self._nodes.append(node)
        self._seq_by_id[node.node_id] = seq
        self._children.setdefault(node.node_id, [])
        if node.parent_id is not None:
            self._children[node.parent_id].append(node.node_id)

    def _replay_journal(self) -> None:
        assert self.journal_path is not None
        with open(self.journal_path, encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                seq, node = _node_from_dict(json.loads(line))
                self._admit(node, seq)

    # -- reads --------------------------------------------------------------

    def nodes(self) -> list[LogNode]:
        with self._lock:
            return list(self._nodes)

    def node(self, node_id: str) -> LogNode:
        with self._lock:
            seq = self._seq_by_id.get(node_id)
            if seq is None:
                raise KeyError(node_id)
            return self._nodes[seq - 1]

    def sequence_of(self, node_id: str) -> int:
        with self._lock:
            return self._seq_by_id[node_id]

    def __len__(self) -> int:
        with self._lock:
            return len(self._nodes)

    # -- blob store ----------------------------------------------------------

    def store_blob(self, text: str) -> str:
        """Content-address a payload; returns its sha256 digest."""
        digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
        if self.blob_dir:
            path = self.blob_dir / digest
            if not path.exists():
                path.write_text(text, encoding="utf-8")
        else:
            with self._lock:
                self._blobs[digest] = text
        return digest

    def get_blob(self, digest: str) -> str | None:
        if self.blob_dir:
            path = self.blob_dir / digest
            return path.read_text(encoding="utf-8") if path.exists() else None
        with self._lock:
            return self._blobs.get(digest)

    # -- export / import ------------------------------------------------------

    def export_json(
        self,
        author: str | None = None,
        kind: str | None = None,
        since: str | None = None,
        until: str | None = None,
    ) -> bytes:
        """Render the forest as nested JSON, children ordered by sequence.

        With filters, non-matching ancestors of matching nodes appear as
        stub references so every match keeps its ancestry path.
        """
        with self._lock:
            nodes = list(self._nodes)
            children = {k: list(v) for k, v in self._children.items()}
            seq_by_id = dict(self._seq_by_id)

        def matches(node: LogNode) -> bool:
            if author is not None and node.author != author:
                return False
            if kind is not None and node.kind != kind:
                return False
            if since is not None and node.timestamp < since:
                return False
            if until is not None and node.timestamp > until:
                return False
            return True

        filtering = any(v is not None for v in (author, kind, since, until))
        by_id = {n.node_id: n for n in nodes}
        keep: set[str] = set()
        if filtering:
            for node in nodes:
                if not matches(node):
                    continue
                cursor: str | None = node.node_id
                while cursor is not None and cursor not in keep:
                    keep.add(cursor)
                    cursor = by_id[cursor].parent_id
        else:
            keep = set(by_id)

        def render(node_id: str) -> dict:
            node = by_id[node_id]
            kids = [render(c) for c in children.get(node_id, []) if c in keep]
            out = _node_to_dict(node, seq_by_id[node_id])
            if filtering and not matches(node):
                out = {"node_id": node.node_id, "seq": seq_by_id[node_id], "stub": True}
            out["children"] = kids
            return out

        roots = [
            render(n.node_id)
            for n in nodes
            if n.parent_id is None and n.node_id in keep
        ]
        document = {"format": EXPORT_FORMAT, "roots": roots}
        return (json.dumps(document, sort_keys=True, indent=2, ensure_ascii=False) + "\n").encode("utf-8")

    @classmethod
    def import_json(cls, data: bytes, clock: Callable[[], str] = utc_now_iso) -> "LogEngine":
        """Rebuild an in-memory engine from an unfiltered export."""
        document = json.loads(data.decode("utf-8"))
        if document.get("format") != EXPORT_FORMAT:
            raise ValueError(f"unknown export format {document.get('format')!r}")
        collected: list[tuple[int, LogNode]] = []

        def walk(record: dict) -> None:
            if record.get("stub"):
                raise ValueError("cannot import a filtered export containing stub nodes")
            collected.append(_node_from_dict(record))
            for child in record.get("children", []):
                walk(child)

        for root in document.get("roots", []):
            walk(root)
        collected.sort(key=lambda pair: pair[0])
        engine = cls(clock=clock)
        for seq, node in collected:
            engine._admit(node, seq)
        return engine

    # -- analytics -------------------------------------------------------------

    def iteration_chain(self, author: str, level: str | None, root: str) -> list[str]:
        """Prompt bodies along the path from root to the author's latest node.

        The target is the highest-sequence descendant of root (root
        included) authored by ``author`` and matching ``level`` when its
        data carries one; on a forked tree this follows the branch holding
        that final node.
        """
        with self._lock:
            if root not in self._seq_by_id:
                raise UnknownRoot(f"node {root!r} not in log")
            by_id = {n.node_id: n for n in self._nodes}
            children = {k: list(v) for k, v in self._children.items()}
            seq_by_id = dict(self._seq_by_id)

        target: str | None = None
        stack = [root]
        while stack:
            node_id = stack.pop()
            node = by_id[node_id]
            eligible = node.author == author and (
                level is None or node.data.get("level", level) == level
            )
            if eligible and (target is None or seq_by_id[node_id] > seq_by_id[target]):
                target = node_id
            stack.extend(children.get(node_id, []))
        if target is None:
            return []

        path: list[str] = []
        cursor: str | None = target
        while cursor is not None:
            path.append(by_id[cursor].data.get("body", ""))
            cursor = by_id[cursor].parent_id if cursor != root else None
        return list(reversed(path))

    def user_stats(self) -> dict[str, dict[str, int]]:
        """Exact execution/commit counts per author."""
        stats: dict[str, dict[str, int]] = {}
        for node in self.nodes():
            entry = stats.setdefault(node.author, {"executions": 0, "commits": 0})
            if node.kind == "execution":
                entry["executions"] += 1
            else:
                entry["commits"] += 1
        return stats


def influence_graph(library: "PromptLibrary") -> list[InfluenceEdge]:
    """One edge per lesson-level prompt rooted in a textbook-level prompt.

    verbatim marks whitespace-trimmed byte equality between the lesson
    body and its lineage root's body. Lesson prompts with no textbook
    ancestor yield no edge (see orphan_lesson_prompts).
    """
    edges = []
    for prompt in library.query():
        if prompt.level != "lesson":
            continue
        root = library.lineage_root(prompt.prompt_id)
        if root.level != "textbook":
            continue
        edges.append(
            InfluenceEdge(
                source_prompt=root.prompt_id,
                target=prompt.prompt_id,
                verbatim=prompt.body.strip() == root.body.strip(),
            )
        )
    return edges


def orphan_lesson_prompts(library: "PromptLibrary") -> list[str]:
    """Lesson-level prompts whose lineage root is not textbook-level."""
    orphans = []
    for prompt in library.query():
        if prompt.level != "lesson":
            continue
        if library.lineage_root(prompt.prompt_id).level != "textbook":
            orphans.append(prompt.prompt_id)
    return orphans
