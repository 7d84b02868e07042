"""Workbench facade: wires pools, library, log, gateway, and sessions together.

The HTTP service and the embedded CLI mode both drive this object, so
every flow is exercisable with no server running. When a journal
directory is configured, pools, library operations, and log nodes all
persist there and reload on construction.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from .config import Config
from .consistency import Embedder, HashedTfEmbedder
from .content_pool import ContentPool, ingest_csv, serialize_csv
from .errors import NotFound
from .gateway import Gateway, split_step_key, step_key
from .library import PromptLibrary
from .log_engine import LogEngine, utc_now_iso
from .pipeline import GenerationFailure, generate_pathways
from .scratchpad import ScratchpadSession
from .validator import HintPathway, export_document, normalize_answer_type, validate

REMOTE_PROVIDER_NAME = "remote"


@dataclass
class BatchOutcome:
    """Result of one batch generation run over a set of steps."""

    ok: bool
    pathways: dict[str, HintPathway] = field(default_factory=dict)  # step key -> pathway
    failures: dict[str, str] = field(default_factory=dict)  # step key -> reason
    reports: dict[str, dict] = field(default_factory=dict)  # step key -> validation report
    raw_chosen: dict[str, str] = field(default_factory=dict)  # step key -> raw representative
    artifact: bytes | None = None
    generation_count: int = 0
    representative_count: int = 0
    warnings: list[dict] = field(default_factory=list)

    def summary(self) -> dict:
        return {
            "ok": self.ok,
            "steps": len(self.pathways) + len(self.failures),
            "representatives": self.representative_count,
            "generations": self.generation_count,
            "failures": self.failures,
            "warnings": len(self.warnings),
            "artifact_bytes": len(self.artifact) if self.artifact else 0,
        }


class Workbench:
    def __init__(
        self,
        config: Config | None = None,
        embedder: Embedder | None = None,
        clock: Callable[[], str] = utc_now_iso,
    ):
        self.config = config or Config()
        self.clock = clock
        self.embedder = embedder or HashedTfEmbedder()
        journal = self.config.journal_path
        if journal:
            journal.mkdir(parents=True, exist_ok=True)
            (journal / "pools").mkdir(exist_ok=True)
            self.log = LogEngine(
                journal_path=journal / "log.ndjson",
                blob_dir=journal / "blobs",
                clock=clock,
            )
            self.library = PromptLibrary(
                journal_path=journal / "library.ndjson", log_engine=self.log, clock=clock
            )
        else:
            self.log = LogEngine(clock=clock)
            self.library = PromptLibrary(log_engine=self.log, clock=clock)
        self.gateway = Gateway(
            payload_sink=lambda payload, ctx: self.log.store_blob(
                json.dumps(payload, sort_keys=True, ensure_ascii=False)
            )
        )
        if self.config.provider_url:
            self.gateway.register_provider(
                REMOTE_PROVIDER_NAME, self.config.provider_url, self.config.provider_key_env
            )
        self._pools: dict[str, ContentPool] = {}
        self._sessions: dict[str, ScratchpadSession] = {}
        self._session_count = 0
        self._lock = threading.Lock()
        if journal:
            self._load_pools(journal / "pools")

    # -- pools ------------------------------------------------------------------

    def ingest_pool(self, pool_id: str, csv_bytes: bytes | str, source_uri: str = "") -> ContentPool:
        pool = ingest_csv(csv_bytes, pool_id, source_uri=source_uri)
        with self._lock:
            self._pools[pool_id] = pool
        journal = self.config.journal_path
        if journal:
            (journal / "pools" / f"{pool_id}.csv").write_text(serialize_csv(pool), encoding="utf-8")
        return pool

    def get_pool(self, pool_id: str) -> ContentPool:
        with self._lock:
            pool = self._pools.get(pool_id)
        if pool is None:
            raise NotFound(f"pool {pool_id!r} not ingested")
        return pool

    def pools(self) -> list[ContentPool]:
        with self._lock:
            return list(self._pools.values())

    def _load_pools(self, pool_dir: Path) -> None:
        for path in sorted(pool_dir.glob("*.csv")):
            pool = ingest_csv(path.read_text(encoding="utf-8"), path.stem, source_uri=str(path))
            self._pools[path.stem] = pool

    # -- sessions ----------------------------------------------------------------

    def create_session(
        self,
        pool_id: str,
        author: str = "anonymous",
        base_seed: int = 0,
        level: str = "textbook",
        lesson_id: str | None = None,
    ) -> ScratchpadSession:
        pool = self.get_pool(pool_id)
        with self._lock:
            self._session_count += 1
            session = ScratchpadSession(
                session_id=f"session-{self._session_count:04d}",
                pool=pool,
                gateway=self.gateway,
                author=author,
                log_engine=self.log,
                embedder=self.embedder,
                base_seed=base_seed,
                level=level,
                lesson_id=lesson_id,
                clock=self.clock,
            )
            self._sessions[session.session_id] = session
            return session

    def get_session(self, session_id: str) -> ScratchpadSession:
        with self._lock:
            session = self._sessions.get(session_id)
        if session is None:
            raise NotFound(f"session {session_id!r} not found")
        return session

    # -- batch generation ----------------------------------------------------------

    def run_batch(
        self,
        pool_id: str,
        prompt_body: str,
        k: int | None = None,
        provider: str = "mock",
        seed: int = 0,
        step_refs: list[tuple[str, str]] | None = None,
        author: str = "batch",
        jobs: int = 1,
        on_progress: Callable[[float], None] | None = None,
    ) -> BatchOutcome:
        """Generate, normalize, validate, and export pathways for a pool.

        Covers every step of the pool unless step_refs narrows it. The
        export artifact is produced only when every step yielded a valid
        pathway; otherwise the outcome carries the per-step failures and
        whatever validated. The run is captured as an execution log node.
        """
        pool = self.get_pool(pool_id)
        refs = step_refs if step_refs is not None else pool.all_step_refs()
        k = k if k is not None else self.config.default_k

        def on_sample(done: int, total: int) -> None:
            if on_progress is not None:
                on_progress(0.9 * done / total)

        result = generate_pathways(
            pool=pool,
            prompt_body=prompt_body,
            step_refs=refs,
            gateway=self.gateway,
            provider=provider,
            k=k,
            seed=seed,
            embedder=self.embedder,
            jobs=jobs,
            on_sample=on_sample,
        )

        index = pool.step_index()
        outcome = BatchOutcome(ok=True, generation_count=result.generation_count)
        valid_pathways: dict[tuple[str, str], HintPathway] = {}
        for ref in refs:
            key = step_key(*ref)
            output = result.outputs[ref]
            if isinstance(output, GenerationFailure):
                outcome.failures[key] = output.reason
                continue
            normalized, flagged = normalize_answer_type(index[ref], output)
            report = validate(normalized)
            outcome.reports[key] = report.to_dict()
            outcome.warnings.extend(
                {"step": key, "code": i.code, "location": i.location, "message": i.message}
                for i in list(report.warnings()) + flagged
            )
            if report.ok:
                outcome.pathways[key] = normalized
                valid_pathways[ref] = normalized
            else:
                outcome.failures[key] = "; ".join(
                    f"{i.code} at {i.location}" for i in report.errors()
                )
        outcome.raw_chosen = {step_key(*ref): text for ref, text in result.raw_chosen.items()}
        outcome.representative_count = len(result.raw_chosen)
        outcome.ok = not outcome.failures
        # On failure the artifact still covers the valid subset (partials
        # stay retrievable); full coverage only when ok.
        if outcome.ok or valid_pathways:
            outcome.artifact = export_document(pool, valid_pathways)
        self.log.append_node(
            kind="execution",
            author=author,
            data={
                "body": prompt_body,
                "variant_label": "batch",
                "step_refs": [step_key(*ref) for ref in refs],
                "output_digests": {
                    step_key(*ref): self.log.store_blob(text)
                    for ref, text in sorted(result.raw_chosen.items())
                },
                "provider": provider,
                "k": k,
                "generation_count": result.generation_count,
                "pool_id": pool_id,
            },
        )
        if on_progress is not None:
            on_progress(1.0)
        return outcome

    # -- analytics -------------------------------------------------------------------

    def resolve_step_refs(self, raw_refs: list) -> list[tuple[str, str]]:
        """Accept ["pid:sid", ...] or [[pid, sid], ...] forms."""
        refs = []
        for item in raw_refs:
            if isinstance(item, str):
                refs.append(split_step_key(item))
            else:
                problem_id, step_id = item
                refs.append((str(problem_id), str(step_id)))
        return refs
