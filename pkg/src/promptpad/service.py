"""HTTP facade over the workbench for the UI and remote CLI.

Single-process FastAPI app; library and log writes serialize through the
owning modules, generation jobs run on a bounded worker pool and are
polled, and every POST honors an Idempotency-Key header.
"""

from __future__ import annotations

import json
import socket
import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, Header, Query, Request, Response
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import __version__
from .config import Config
from .content_pool import ContentPool, load_source, serialize_csv
from .engine import Workbench
from .errors import (
    ChoiceMismatch,
    ConfigError,
    DuplicateId,
    DuplicateName,
    EmbeddingProviderError,
    EmptyBody,
    EmptyInput,
    EmptyPathway,
    EmptyScope,
    GatewayUnavailable,
    InvalidAnswerType,
    InvalidEndpoint,
    InvalidPathway,
    LessonMismatch,
    MalformedCsv,
    MissingColumn,
    NotFound,
    ParseError,
    PortInUse,
    PromptpadError,
    ProviderError,
    SchemaViolation,
    Timeout,
    UnknownLesson,
    UnknownParent,
    UnknownPrompt,
    UnknownRoot,
    UnknownVariant,
    UnresolvedStepRef,
)
from .gateway import step_key
from .library import Prompt
from .log_engine import influence_graph, orphan_lesson_prompts
from .pipeline import GenerationFailure
from .sampler import sample_steps
from .scratchpad import ExecutionRecord, Variant, diff
from .validator import parse_pathway, validate

_STATUS_BY_ERROR = {
    NotFound: 404,
    UnknownPrompt: 404,
    UnknownLesson: 404,
    UnknownVariant: 404,
    UnknownParent: 404,
    UnknownRoot: 404,
    DuplicateName: 409,
    DuplicateId: 409,
    GatewayUnavailable: 502,
    ProviderError: 502,
    Timeout: 502,
    SchemaViolation: 502,
    EmbeddingProviderError: 502,
    EmptyBody: 400,
    LessonMismatch: 400,
    MalformedCsv: 400,
    MissingColumn: 400,
    InvalidAnswerType: 400,
    ChoiceMismatch: 400,
    ParseError: 400,
    EmptyPathway: 400,
    InvalidPathway: 400,
    EmptyInput: 400,
    EmptyScope: 400,
    UnresolvedStepRef: 400,
    InvalidEndpoint: 400,
    ConfigError: 400,
}


# -- request bodies ------------------------------------------------------------


class PoolCreate(BaseModel):
    pool_id: str
    csv: str | None = None
    url: str | None = None


class PromptCreate(BaseModel):
    level: str
    body: str
    lesson_id: str | None = None
    parent_id: str | None = None


class CloneCreate(BaseModel):
    target_level: str
    lesson_id: str | None = None


class SessionCreate(BaseModel):
    pool_id: str
    level: str = "textbook"
    lesson_id: str | None = None
    base_seed: int = 0


class VariantCreate(BaseModel):
    body: str
    derived_from: str | None = None


class ExecutionCreate(BaseModel):
    session_id: str
    variant_label: str
    step_refs: list
    k: int = 1
    provider: str = "mock"
    seed: int | None = None
    inline_outputs: bool = False


class JobCreate(BaseModel):
    pool_id: str
    prompt_id: str
    k: int | None = None
    provider: str = "mock"
    seed: int = 0


class ValidateBody(BaseModel):
    raw: str


class DiffBody(BaseModel):
    old_body: str
    new_body: str


# -- serialization ---------------------------------------------------------------


def _prompt_json(prompt: Prompt) -> dict:
    return {
        "prompt_id": prompt.prompt_id,
        "author": prompt.author,
        "level": prompt.level,
        "lesson_id": prompt.lesson_id,
        "body": prompt.body,
        "parent_id": prompt.parent_id,
        "upvotes": prompt.upvotes,
        "committed_at": prompt.committed_at,
        "sequence": prompt.sequence,
    }


def _variant_json(variant: Variant) -> dict:
    return {
        "variant_label": variant.variant_label,
        "body": variant.body,
        "derived_from": variant.derived_from,
        "created_at": variant.created_at,
    }


def _output_json(output) -> dict:
    if isinstance(output, GenerationFailure):
        return {"kind": "failure", "reason": output.reason, "raw": output.raw_text}
    return {
        "kind": "pathway",
        "items": [
            {
                "kind": item.kind,
                "title": item.title,
                "body": item.body,
                "answer": item.scaffold_answer,
                "answer_type": item.scaffold_answer_type,
                "choices": list(item.scaffold_choices) if item.scaffold_choices else None,
            }
            for item in output.items
        ],
    }


def _execution_json(record: ExecutionRecord) -> dict:
    return {
        "execution_id": record.execution_id,
        "variant_label": record.variant_label,
        "prompt_body_snapshot": record.prompt_body_snapshot,
        "sampled_step_refs": [step_key(*ref) for ref in record.sampled_step_refs],
        "outputs": {
            step_key(*ref): dict(
                _output_json(output),
                raw=record.raw_outputs.get(ref),
                similarity=record.similarities.get(ref),
            )
            for ref, output in record.outputs.items()
        },
        "provider": record.provider,
        "started_at": record.started_at,
        "finished_at": record.finished_at,
        "generation_count": record.generation_count,
    }


def _pool_json(pool: ContentPool, with_lessons: bool = True) -> dict:
    out = pool.summary()
    if with_lessons:
        out["lesson_list"] = [
            {
                "lesson_id": lesson.lesson_id,
                "title": lesson.title,
                "problems": len(lesson.problems),
                "steps": len(lesson.step_refs()),
            }
            for lesson in pool.lessons
        ]
    return out


# -- jobs -------------------------------------------------------------------------


@dataclass
class Job:
    job_id: str
    state: str = "running"  # running | succeeded | failed
    progress: float = 0.0
    result: dict | None = None
    error: str | None = None
    artifact: bytes | None = None
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def bump(self, progress: float) -> None:
        with self._lock:
            self.progress = max(self.progress, min(progress, 1.0))

    def finish(
        self,
        state: str,
        result: dict | None = None,
        artifact: bytes | None = None,
        error: str | None = None,
    ) -> None:
        with self._lock:
            self.state = state
            self.result = result
            self.artifact = artifact
            self.error = error
            self.progress = 1.0

    def to_dict(self) -> dict:
        with self._lock:
            return {
                "job_id": self.job_id,
                "state": self.state,
                "progress": round(self.progress, 4),
                "result": self.result,
                "error": self.error,
                "artifact_available": self.artifact is not None,
            }


# -- app ------------------------------------------------------------------------------


def create_app(workbench: Workbench | None = None, config: Config | None = None) -> FastAPI:
    bench = workbench or Workbench(config=config)
    app = FastAPI(title="promptpad", version=__version__)
    app.state.workbench = bench
    app.state.jobs = {}
    app.state.executor = ThreadPoolExecutor(max_workers=4)
    app.state.idempotency = {}
    app.state.idempotency_lock = threading.Lock()

    @app.exception_handler(PromptpadError)
    async def _error_handler(_request: Request, exc: PromptpadError):
        status = 500
        for cls, code in _STATUS_BY_ERROR.items():
            if isinstance(exc, cls):
                status = code
                break
        return JSONResponse(
            status_code=status,
            content={"error": type(exc).__name__, "detail": str(exc)},
        )

    @app.exception_handler(ValueError)
    async def _value_error_handler(_request: Request, exc: ValueError):
        return JSONResponse(status_code=400, content={"error": "ValueError", "detail": str(exc)})

    @app.middleware("http")
    async def _idempotency(request: Request, call_next):
        key = request.headers.get("Idempotency-Key")
        if request.method != "POST" or not key:
            return await call_next(request)
        cache_key = (request.url.path, key)
        with app.state.idempotency_lock:
            cached = app.state.idempotency.get(cache_key)
        if cached is not None:
            status, body, media_type = cached
            return Response(content=body, status_code=status, media_type=media_type)
        response = await call_next(request)
        body = b"".join([chunk async for chunk in response.body_iterator])
        with app.state.idempotency_lock:
            app.state.idempotency[cache_key] = (
                response.status_code,
                body,
                response.media_type,
            )
        return Response(
            content=body,
            status_code=response.status_code,
            media_type=response.media_type,
            headers=dict(response.headers),
        )

    # -- health ---------------------------------------------------------------

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "version": __version__}

    # -- pools -----------------------------------------------------------------

    @app.post("/pools", status_code=201)
    async def create_pool(request: Request, pool_id: str | None = Query(default=None)):
        content_type = request.headers.get("content-type", "")
        if content_type.startswith("text/csv"):
            if not pool_id:
                raise EmptyInput("pool_id query parameter required for CSV upload")
            csv_bytes = await request.body()
            pool = bench.ingest_pool(pool_id, csv_bytes)
        else:
            payload = PoolCreate(**(await request.json()))
            if payload.csv is not None:
                pool = bench.ingest_pool(payload.pool_id, payload.csv)
            elif payload.url is not None:
                pool = bench.ingest_pool(payload.pool_id, load_source(payload.url), source_uri=payload.url)
            else:
                raise EmptyInput("provide either csv or url")
        return _pool_json(pool, with_lessons=False)

    @app.get("/pools")
    def list_pools() -> dict:
        return {"pools": [_pool_json(p, with_lessons=False) for p in bench.pools()]}

    @app.get("/pools/{pool_id}")
    def get_pool(pool_id: str) -> dict:
        return _pool_json(bench.get_pool(pool_id))

    @app.get("/pools/{pool_id}/csv")
    def get_pool_csv(pool_id: str) -> Response:
        return Response(content=serialize_csv(bench.get_pool(pool_id)), media_type="text/csv")

    @app.get("/pools/{pool_id}/sample")
    def sample_pool(
        pool_id: str,
        scope: str = "textbook",
        lesson: str | None = None,
        n: int = 3,
        seed: int = 0,
    ) -> dict:
        pool = bench.get_pool(pool_id)
        refs = sample_steps(pool, scope, lesson, n, seed)
        index = pool.step_index()
        problems = {p.problem_id: p.body for l in pool.lessons for p in l.problems}
        return {
            "step_refs": [
                {
                    "problem_id": problem_id,
                    "step_id": step_id,
                    "key": step_key(problem_id, step_id),
                    "problem_body": problems[problem_id],
                    "step_body": index[(problem_id, step_id)].body,
                    "answer": index[(problem_id, step_id)].answer,
                    "answer_type": index[(problem_id, step_id)].answer_type,
                }
                for problem_id, step_id in refs
            ]
        }

    # -- prompt library -------------------------------------------------------------

    @app.post("/prompts", status_code=201)
    def commit_prompt(body: PromptCreate, x_user: str = Header(default="anonymous")) -> dict:
        prompt = bench.library.commit(
            author=x_user,
            level=body.level,
            lesson_id=body.lesson_id,
            body=body.body,
            parent_id=body.parent_id,
        )
        return _prompt_json(prompt)

    @app.post("/prompts/{prompt_id}/clone", status_code=201)
    def clone_prompt(prompt_id: str, body: CloneCreate, x_user: str = Header(default="anonymous")) -> dict:
        prompt = bench.library.clone(
            prompt_id, author=x_user, target_level=body.target_level, lesson_id=body.lesson_id
        )
        return _prompt_json(prompt)

    @app.post("/prompts/{prompt_id}/upvote")
    def upvote_prompt(prompt_id: str, x_user: str = Header(default="anonymous")) -> dict:
        count = bench.library.upvote(prompt_id, voter=x_user)
        return {"prompt_id": prompt_id, "upvotes": count}

    @app.get("/prompts")
    def query_prompts(
        level: str | None = None,
        lesson_id: str | None = None,
        order: str = "sequence",
    ) -> dict:
        prompts = bench.library.query(level=level, lesson_id=lesson_id, order=order)
        return {"prompts": [_prompt_json(p) for p in prompts]}

    @app.get("/prompts/{prompt_id}")
    def get_prompt(prompt_id: str) -> dict:
        return _prompt_json(bench.library.get(prompt_id))

    # -- scratchpad ---------------------------------------------------------------------

    @app.post("/sessions", status_code=201)
    def create_session(body: SessionCreate, x_user: str = Header(default="anonymous")) -> dict:
        session = bench.create_session(
            pool_id=body.pool_id,
            author=x_user,
            base_seed=body.base_seed,
            level=body.level,
            lesson_id=body.lesson_id,
        )
        return {"session_id": session.session_id, "pool_id": body.pool_id, "author": x_user}

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str) -> dict:
        session = bench.get_session(session_id)
        return {
            "session_id": session.session_id,
            "pool_id": session.pool.pool_id,
            "author": session.author,
            "variants": [_variant_json(v) for v in session.variants()],
            "executions": [_execution_json(r) for r in session.executions()],
        }

    @app.post("/sessions/{session_id}/variants", status_code=201)
    def create_variant(session_id: str, body: VariantCreate) -> dict:
        session = bench.get_session(session_id)
        return _variant_json(session.create_variant(body.body, derived_from=body.derived_from))

    @app.post("/executions")
    def execute(body: ExecutionCreate) -> dict:
        session = bench.get_session(body.session_id)
        refs = bench.resolve_step_refs(body.step_refs)
        record = session.execute(
            body.variant_label,
            refs,
            k=body.k,
            provider=body.provider,
            seed=body.seed,
            inline_outputs=body.inline_outputs,
        )
        return _execution_json(record)

    @app.post("/diff")
    def diff_bodies(body: DiffBody) -> dict:
        return diff(body.old_body, body.new_body).to_dict()

    # -- jobs ------------------------------------------------------------------------------

    @app.post("/jobs/generate", status_code=202)
    def start_job(body: JobCreate, x_user: str = Header(default="anonymous")) -> dict:
        prompt = bench.library.get(body.prompt_id)
        bench.get_pool(body.pool_id)
        job = Job(job_id=f"job-{uuid.uuid4().hex[:12]}")
        app.state.jobs[job.job_id] = job

        def run() -> None:
            try:
                outcome = bench.run_batch(
                    pool_id=body.pool_id,
                    prompt_body=prompt.body,
                    k=body.k,
                    provider=body.provider,
                    seed=body.seed,
                    author=x_user,
                    on_progress=job.bump,
                )
                result = dict(outcome.summary(), reports=outcome.reports, raw_outputs=outcome.raw_chosen)
                job.finish(
                    state="succeeded" if outcome.ok else "failed",
                    result=result,
                    artifact=outcome.artifact,
                    error=None if outcome.ok else f"{len(outcome.failures)} step(s) failed",
                )
            except Exception as exc:
                job.finish(state="failed", error=f"{type(exc).__name__}: {exc}")

        app.state.executor.submit(run)
        return {"job_id": job.job_id, "state": job.state}

    @app.get("/jobs/{job_id}")
    def poll_job(job_id: str) -> dict:
        job = app.state.jobs.get(job_id)
        if job is None:
            raise NotFound(f"job {job_id!r} not found")
        return job.to_dict()

    @app.get("/jobs/{job_id}/artifact")
    def job_artifact(job_id: str) -> Response:
        job = app.state.jobs.get(job_id)
        if job is None:
            raise NotFound(f"job {job_id!r} not found")
        if job.artifact is None:
            raise NotFound(f"job {job_id!r} has no artifact")
        return Response(content=job.artifact, media_type="application/json")

    # -- logs and analytics -------------------------------------------------------------------

    @app.get("/logs/export")
    def export_logs(
        author: str | None = None,
        kind: str | None = None,
        since: str | None = None,
        until: str | None = None,
    ) -> Response:
        data = bench.log.export_json(author=author, kind=kind, since=since, until=until)
        return Response(content=data, media_type="application/json")

    @app.get("/analytics/influence")
    def analytics_influence() -> dict:
        edges = influence_graph(bench.library)
        return {
            "edges": [
                {"source_prompt": e.source_prompt, "target": e.target, "verbatim": e.verbatim}
                for e in edges
            ],
            "orphans": orphan_lesson_prompts(bench.library),
            "verbatim_count": sum(1 for e in edges if e.verbatim),
        }

    @app.get("/analytics/users")
    def analytics_users() -> dict:
        return {"users": bench.log.user_stats()}

    # -- validation ------------------------------------------------------------------------------

    @app.post("/validate")
    def validate_raw(body: ValidateBody) -> dict:
        try:
            pathway = parse_pathway(body.raw)
        except (ParseError, EmptyPathway) as exc:
            issue_code = "PARSE_ERROR" if isinstance(exc, ParseError) else "EMPTY_PATHWAY"
            return {
                "ok": False,
                "issues": [
                    {
                        "severity": "error",
                        "code": issue_code,
                        "location": f"line {exc.line}" if isinstance(exc, ParseError) else "pathway",
                        "message": str(exc),
                    }
                ],
            }
        return validate(pathway).to_dict()

    # -- static UI -----------------------------------------------------------------------------------

    ui_dist = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    if ui_dist.is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=str(ui_dist), html=True), name="ui")

    return app


def serve(config: Config | None = None, workbench: Workbench | None = None) -> None:
    """Run the service with uvicorn; raises PortInUse when the bind fails."""
    import uvicorn

    config = config or Config()
    app = create_app(workbench=workbench, config=config)
    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.bind(("0.0.0.0", config.port))
    except OSError as exc:
        raise PortInUse(f"port {config.port}: {exc}") from exc
    finally:
        probe.close()
    uvicorn.run(app, host="0.0.0.0", port=config.port, log_level="info")
