"""Headless driver: ingest, generate, validate, export, log, analyze, serve.

Every subcommand runs against a local embedded engine by default (CI
never needs a running service) or against a remote service via
--server. Operational failures exit 1 with a machine-readable error on
stderr; usage errors exit 2.
"""

from __future__ import annotations

import functools
import json
import os
import sys
import time
from pathlib import Path

import click

from .config import Config, load_config
from .content_pool import ingest_csv, load_source
from .engine import Workbench
from .errors import EmptyPathway, ParseError, PromptpadError
from .gateway import split_step_key
from .log_engine import InfluenceEdge, influence_graph, orphan_lesson_prompts
from .reports import write_influence_report, write_user_stats_report
from .validator import export_document, parse_pathway, validate

DEFAULT_JOURNAL = ".promptpad"


def _fail(exc: Exception) -> None:
    click.echo(json.dumps({"error": type(exc).__name__, "detail": str(exc)}), err=True)
    sys.exit(1)


def handles_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except PromptpadError as exc:
            _fail(exc)
        except OSError as exc:
            _fail(exc)

    return wrapper


def common_options(fn):
    fn = click.option("--server", default=None, metavar="URL", help="Run against a remote service instead of the embedded engine.")(fn)
    fn = click.option("--journal", default=None, metavar="DIR", help=f"Journal directory (default: $PH_JOURNAL_DIR or {DEFAULT_JOURNAL}).")(fn)
    fn = click.option("--json", "as_json", is_flag=True, help="Emit machine-readable JSON on stdout.")(fn)
    return fn


def _journal_dir(journal: str | None) -> str:
    return journal or os.environ.get("PH_JOURNAL_DIR") or DEFAULT_JOURNAL


def _workbench(journal: str | None) -> Workbench:
    return Workbench(config=load_config(env=dict(os.environ, PH_JOURNAL_DIR=_journal_dir(journal))))


def _remote(server: str, method: str, path: str, **kwargs):
    import requests

    response = requests.request(method, server.rstrip("/") + path, timeout=300, **kwargs)
    if response.status_code >= 400:
        try:
            payload = response.json()
        except ValueError:
            payload = {"error": "HttpError", "detail": response.text[:500]}
        click.echo(json.dumps(payload), err=True)
        sys.exit(1)
    return response


def _emit(data: dict, as_json: bool, text: str) -> None:
    if as_json:
        click.echo(json.dumps(data, sort_keys=True))
    else:
        click.echo(text)


@click.group()
def main() -> None:
    """Prompt workbench for generating tutoring hint pathways."""


# -- ingest -----------------------------------------------------------------


@main.command()
@click.option("--csv", "csv_path", type=click.Path(exists=True, dir_okay=False), help="Local spreadsheet export.")
@click.option("--url", help="HTTP(S) link to the spreadsheet export.")
@click.option("--pool", "pool_id", required=True, help="Identifier for the ingested pool.")
@common_options
@handles_errors
def ingest(csv_path, url, pool_id, server, journal, as_json):
    """Load a content-pool CSV into the pool store."""
    if not csv_path and not url:
        raise click.UsageError("provide --csv or --url")
    if server:
        if csv_path:
            data = Path(csv_path).read_text(encoding="utf-8")
            response = _remote(server, "POST", "/pools", json={"pool_id": pool_id, "csv": data})
        else:
            response = _remote(server, "POST", "/pools", json={"pool_id": pool_id, "url": url})
        summary = response.json()
    else:
        bench = _workbench(journal)
        source = Path(csv_path).read_bytes() if csv_path else load_source(url)
        pool = bench.ingest_pool(pool_id, source, source_uri=url or csv_path)
        summary = pool.summary()
    stable = {k: v for k, v in summary.items() if k != "ingested_at"}
    _emit(
        stable,
        as_json,
        f"pool {stable['pool_id']}: {stable['lessons']} lessons, {stable['problems']} problems, "
        f"{stable['steps']} steps"
        + (f" (empty lessons: {', '.join(stable['empty_lessons'])})" if stable.get("empty_lessons") else ""),
    )


# -- generate ---------------------------------------------------------------


@main.command()
@click.option("--pool", "pool_id", required=True)
@click.option("--prompt-file", type=click.Path(exists=True, dir_okay=False), help="File holding the prompt body.")
@click.option("--prompt", "prompt_text", help="Prompt body given inline.")
@click.option("--k", default=1, show_default=True, help="Generations per step (k>1 selects the representative).")
@click.option("--provider", default="mock", show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--jobs", default=1, show_default=True, help="Concurrent generation calls.")
@click.option("--user", default="cli", show_default=True, help="Author identity for the log.")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False), help="Artifact destination.")
@click.option("--raw-out", "raw_out_path", type=click.Path(dir_okay=False),
              help="Also dump the chosen raw pathway texts as a JSON map.")
@common_options
@handles_errors
def generate(pool_id, prompt_file, prompt_text, k, provider, seed, jobs, user, out_path, raw_out_path, server, journal, as_json):
    """Generate hint pathways for every step of a pool and export them."""
    if not prompt_file and not prompt_text:
        raise click.UsageError("provide --prompt-file or --prompt")
    body = prompt_text or Path(prompt_file).read_text(encoding="utf-8")

    if server:
        prompt = _remote(
            server, "POST", "/prompts",
            json={"level": "textbook", "body": body}, headers={"X-User": user},
        ).json()
        job = _remote(
            server, "POST", "/jobs/generate",
            json={"pool_id": pool_id, "prompt_id": prompt["prompt_id"], "k": k,
                  "provider": provider, "seed": seed},
            headers={"X-User": user},
        ).json()
        while True:
            status = _remote(server, "GET", f"/jobs/{job['job_id']}").json()
            if status["state"] in ("succeeded", "failed"):
                break
            time.sleep(0.2)
        if status["state"] == "failed" and not status.get("artifact_available"):
            _fail(PromptpadError(status.get("error") or "job failed"))
        artifact = _remote(server, "GET", f"/jobs/{job['job_id']}/artifact").content
        result = status["result"] or {}
        raw_chosen = result.get("raw_outputs", {})
    else:
        bench = _workbench(journal)
        outcome = bench.run_batch(
            pool_id=pool_id, prompt_body=body, k=k, provider=provider, seed=seed,
            author=user, jobs=jobs,
        )
        if outcome.artifact is None:
            _fail(PromptpadError(f"no artifact: {outcome.failures}"))
        artifact = outcome.artifact
        result = outcome.summary()
        raw_chosen = outcome.raw_chosen

    if raw_out_path:
        Path(raw_out_path).write_text(
            json.dumps(raw_chosen, sort_keys=True, indent=2, ensure_ascii=False) + "\n",
            encoding="utf-8",
        )
    Path(out_path).write_bytes(artifact)
    document = json.loads(artifact)
    payload = {
        "pool_id": pool_id,
        "records": document["record_count"],
        "generations": result.get("generations"),
        "representatives": result.get("representatives"),
        "ok": result.get("ok", True),
        "out": out_path,
    }
    _emit(
        payload,
        as_json,
        f"wrote {payload['records']} records to {out_path} "
        f"({payload['generations']} generations, {payload['representatives']} representatives)",
    )
    if not payload["ok"]:
        _fail(PromptpadError(f"generation incomplete: {result.get('failures')}"))


# -- validate -----------------------------------------------------------------


@main.command("validate")
@click.option("--pathway", "pathway_path", required=True, type=click.Path(exists=True, dir_okay=False))
@common_options
@handles_errors
def validate_cmd(pathway_path, server, journal, as_json):
    """Parse and validate one raw pathway text file."""
    raw = Path(pathway_path).read_text(encoding="utf-8")
    if server:
        report = _remote(server, "POST", "/validate", json={"raw": raw}).json()
    else:
        try:
            report = validate(parse_pathway(raw)).to_dict()
        except (ParseError, EmptyPathway) as exc:
            code = "PARSE_ERROR" if isinstance(exc, ParseError) else "EMPTY_PATHWAY"
            report = {"ok": False, "issues": [{"severity": "error", "code": code, "location": "pathway", "message": str(exc)}]}
    lines = [f"{i['severity']}: {i['code']} at {i['location']}: {i['message']}" for i in report["issues"]]
    _emit(report, as_json, "\n".join(["ok" if report["ok"] else "invalid"] + lines))
    if not report["ok"]:
        sys.exit(1)


# -- export --------------------------------------------------------------------


@main.command()
@click.option("--pool", "pool_id", required=True)
@click.option("--pathways", "pathways_path", required=True, type=click.Path(exists=True, dir_okay=False),
              help='JSON map of "problem:step" keys to raw pathway text.')
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@common_options
@handles_errors
def export(pool_id, pathways_path, out_path, server, journal, as_json):
    """Re-export previously generated raw pathways as deployment content."""
    raw_map = json.loads(Path(pathways_path).read_text(encoding="utf-8"))
    if server:
        csv_text = _remote(server, "GET", f"/pools/{pool_id}/csv").text
        pool = ingest_csv(csv_text, pool_id)
    else:
        pool = _workbench(journal).get_pool(pool_id)
    pathways = {split_step_key(key): parse_pathway(raw) for key, raw in raw_map.items()}
    artifact = export_document(pool, pathways)
    Path(out_path).write_bytes(artifact)
    _emit(
        {"pool_id": pool_id, "records": len(pathways), "out": out_path},
        as_json,
        f"wrote {len(pathways)} records to {out_path}",
    )


# -- log -------------------------------------------------------------------------


@main.group()
def log() -> None:
    """Prompt-evolution log operations."""


@log.command("export")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), help="Destination (default: stdout).")
@click.option("--author", default=None)
@click.option("--kind", default=None, type=click.Choice(["execution", "commit"]))
@common_options
@handles_errors
def log_export(out_path, author, kind, server, journal, as_json):
    """Export the log forest as nested JSON."""
    if server:
        params = {k: v for k, v in (("author", author), ("kind", kind)) if v}
        data = _remote(server, "GET", "/logs/export", params=params).content
    else:
        data = _workbench(journal).log.export_json(author=author, kind=kind)
    if out_path:
        Path(out_path).write_bytes(data)
        document = json.loads(data)
        _emit(
            {"roots": len(document["roots"]), "out": out_path},
            as_json,
            f"wrote {len(document['roots'])} root(s) to {out_path}",
        )
    else:
        click.echo(data.decode("utf-8"), nl=False)


# -- analyze -----------------------------------------------------------------------


@main.group()
def analyze() -> None:
    """Log and library analytics with figures alongside CSV output."""


@analyze.command("influence")
@click.option("--out-dir", default="reports", show_default=True, type=click.Path(file_okay=False))
@common_options
@handles_errors
def analyze_influence(out_dir, server, journal, as_json):
    """Edges from textbook prompts to descendant lesson prompts."""
    if server:
        payload = _remote(server, "GET", "/analytics/influence").json()
        edges = [InfluenceEdge(e["source_prompt"], e["target"], e["verbatim"]) for e in payload["edges"]]
        orphans = payload["orphans"]
    else:
        bench = _workbench(journal)
        edges = influence_graph(bench.library)
        orphans = orphan_lesson_prompts(bench.library)
    written = write_influence_report(edges, orphans, out_dir)
    verbatim = sum(1 for e in edges if e.verbatim)
    data = {
        "edges": [{"source_prompt": e.source_prompt, "target": e.target, "verbatim": e.verbatim} for e in edges],
        "orphans": orphans,
        "verbatim_count": verbatim,
        "files": [str(p) for p in written],
    }
    _emit(
        data,
        as_json,
        f"{len(edges)} influence edge(s), {verbatim} verbatim clone(s), {len(orphans)} orphan(s); "
        f"wrote {', '.join(str(p) for p in written)}",
    )


@analyze.command("users")
@click.option("--out-dir", default="reports", show_default=True, type=click.Path(file_okay=False))
@common_options
@handles_errors
def analyze_users(out_dir, server, journal, as_json):
    """Execution and commit counts per author."""
    if server:
        stats = _remote(server, "GET", "/analytics/users").json()["users"]
    else:
        stats = _workbench(journal).log.user_stats()
    written = write_user_stats_report(stats, out_dir)
    data = {"users": stats, "files": [str(p) for p in written]}
    lines = [f"{author}: {s['executions']} execution(s), {s['commits']} commit(s)" for author, s in sorted(stats.items())]
    _emit(data, as_json, "\n".join(lines + [f"wrote {', '.join(str(p) for p in written)}"]))


# -- serve ---------------------------------------------------------------------------


@main.command()
@click.option("--port", default=None, type=int, help="Override the configured port.")
@click.option("--config", "config_path", default=None, type=click.Path(exists=True, dir_okay=False))
@click.option("--journal", default=None, metavar="DIR")
@handles_errors
def serve(port, config_path, journal):
    """Run the HTTP service."""
    from .service import serve as run_service

    config = load_config(config_path)
    if journal or os.environ.get("PH_JOURNAL_DIR") or not config.journal_dir:
        config.journal_dir = _journal_dir(journal)
    if port is not None:
        config.port = port
    run_service(config)


if __name__ == "__main__":
    main()
