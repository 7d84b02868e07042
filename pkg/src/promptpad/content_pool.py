"""Structured textbook content: ingestion, lookup, and canonical CSV.

A pool is the ground material prompts run against: a textbook broken into
lessons, problems, and answerable steps, loaded from a spreadsheet export.
Pools are immutable after ingestion and safe to share across threads.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from datetime import datetime, timezone

from .errors import ChoiceMismatch, InvalidAnswerType, MalformedCsv, MissingColumn, NotFound
from .validator import ANSWER_TYPES, HintPathway, parse_pathway, parses_decimal, serialize_pathway

log = logging.getLogger(__name__)

CSV_COLUMNS = (
    "lesson_id",
    "lesson_title",
    "problem_id",
    "problem_body",
    "step_id",
    "step_body",
    "answer",
    "answer_type",
    "choices",
    "human_hints",
)

StepRef = tuple[str, str]  # (problem_id, step_id)


@dataclass(frozen=True)
class Step:
    step_id: str
    body: str
    answer: str
    answer_type: str
    choices: tuple[str, ...] | None = None
    human_hints: HintPathway | None = None


@dataclass(frozen=True)
class Problem:
    problem_id: str
    body: str
    steps: tuple[Step, ...]


@dataclass(frozen=True)
class Lesson:
    lesson_id: str
    title: str
    problems: tuple[Problem, ...]

    def step_refs(self) -> list[StepRef]:
        return [(p.problem_id, s.step_id) for p in self.problems for s in p.steps]


@dataclass(frozen=True)
class ContentPool:
    pool_id: str
    source_uri: str
    textbook_title: str
    lessons: tuple[Lesson, ...]
    ingested_at: str = field(compare=False, default="")

    def get_lesson(self, lesson_id: str) -> Lesson:
        for lesson in self.lessons:
            if lesson.lesson_id == lesson_id:
                return lesson
        raise NotFound(f"lesson {lesson_id!r} not in pool {self.pool_id!r}")

    def step_index(self) -> dict[StepRef, Step]:
        return {
            (p.problem_id, s.step_id): s
            for lesson in self.lessons
            for p in lesson.problems
            for s in p.steps
        }

    def all_step_refs(self) -> list[StepRef]:
        return [
            (p.problem_id, s.step_id)
            for lesson in self.lessons
            for p in lesson.problems
            for s in p.steps
        ]

    def step_count(self) -> int:
        return len(self.all_step_refs())

    def empty_lessons(self) -> list[str]:
        return [l.lesson_id for l in self.lessons if not l.problems]

    def summary(self) -> dict:
        return {
            "pool_id": self.pool_id,
            "textbook_title": self.textbook_title,
            "source_uri": self.source_uri,
            "lessons": len(self.lessons),
            "problems": sum(len(l.problems) for l in self.lessons),
            "steps": self.step_count(),
            "empty_lessons": self.empty_lessons(),
            "ingested_at": self.ingested_at,
        }


def _decode(source: bytes | str) -> str:
    if isinstance(source, bytes):
        return source.decode("utf-8")
    return source


def ingest_csv(
    source: bytes | str,
    pool_id: str,
    *,
    source_uri: str = "",
    textbook_title: str = "",
) -> ContentPool:
    """Materialize a pool from a UTF-8 CSV byte stream.

    Rows sharing a problem_id merge into one problem with ordered steps;
    lesson/problem/step order follows row order. A row carrying only the
    lesson columns registers an empty lesson (warned, not fatal).
    """
    text = _decode(source)
    reader = csv.reader(io.StringIO(text, newline=""))
    try:
        header = next(reader, None)
    except csv.Error as exc:
        raise MalformedCsv(1, str(exc)) from exc
    if header is None:
        raise MalformedCsv(1, "no header row")
    header = [h.strip() for h in header]
    col: dict[str, int] = {}
    for name in CSV_COLUMNS:
        if name not in header:
            raise MissingColumn(name)
        col[name] = header.index(name)

    # (lesson_id, problem_id) ownership, insertion-ordered structures
    lesson_order: list[str] = []
    lesson_titles: dict[str, str] = {}
    lesson_problems: dict[str, list[str]] = {}
    problem_owner: dict[str, str] = {}
    problem_bodies: dict[str, str] = {}
    problem_steps: dict[str, list[Step]] = {}

    rownum = 1
    while True:
        try:
            row = next(reader, None)
        except csv.Error as exc:
            raise MalformedCsv(rownum + 1, str(exc)) from exc
        if row is None:
            break
        rownum += 1
        if not any(cell.strip() for cell in row):
            continue
        if len(row) < len(header):
            raise MalformedCsv(rownum, f"expected {len(header)} fields, got {len(row)}")

        def cell(name: str) -> str:
            return row[col[name]]

        lesson_id = cell("lesson_id").strip()
        if not lesson_id:
            raise MalformedCsv(rownum, "lesson_id is empty")
        if lesson_id not in lesson_titles:
            lesson_order.append(lesson_id)
            lesson_titles[lesson_id] = cell("lesson_title")
            lesson_problems[lesson_id] = []

        problem_id = cell("problem_id").strip()
        step_id = cell("step_id").strip()
        if not problem_id and not step_id:
            continue  # lesson-only row, registers an empty lesson
        if not problem_id:
            raise MalformedCsv(rownum, "step row has no problem_id")
        if not step_id:
            raise MalformedCsv(rownum, f"problem {problem_id!r} row has no step_id")

        if problem_id in problem_owner:
            if problem_owner[problem_id] != lesson_id:
                raise MalformedCsv(
                    rownum,
                    f"problem {problem_id!r} already belongs to lesson {problem_owner[problem_id]!r}",
                )
        else:
            problem_owner[problem_id] = lesson_id
            problem_bodies[problem_id] = cell("problem_body")
            problem_steps[problem_id] = []
            lesson_problems[lesson_id].append(problem_id)

        answer_type = cell("answer_type").strip()
        if answer_type not in ANSWER_TYPES:
            raise InvalidAnswerType(rownum, answer_type)
        answer = cell("answer")
        choices_cell = cell("choices")
        choices = tuple(choices_cell.split("|")) if choices_cell else None
        if answer_type == "multiple_choice":
            if choices is None or len(choices) < 2:
                raise ChoiceMismatch(rownum, answer, list(choices or ()))
            if answer not in choices:
                raise ChoiceMismatch(rownum, answer, list(choices))
        if answer_type == "numeric" and not parses_decimal(answer):
            raise InvalidAnswerType(rownum, answer_type, f"numeric answer {answer!r} does not parse as a decimal")

        hints_cell = cell("human_hints")
        human_hints = None
        if hints_cell.strip():
            try:
                human_hints = parse_pathway(hints_cell)
            except Exception as exc:
                raise MalformedCsv(rownum, f"human_hints: {exc}") from exc

        if any(s.step_id == step_id for s in problem_steps[problem_id]):
            raise MalformedCsv(rownum, f"duplicate step_id {step_id!r} in problem {problem_id!r}")
        problem_steps[problem_id].append(
            Step(
                step_id=step_id,
                body=cell("step_body"),
                answer=answer,
                answer_type=answer_type,
                choices=choices,
                human_hints=human_hints,
            )
        )

    lessons = []
    for lesson_id in lesson_order:
        problems = tuple(
            Problem(problem_id=pid, body=problem_bodies[pid], steps=tuple(problem_steps[pid]))
            for pid in lesson_problems[lesson_id]
        )
        if not problems:
            log.warning("lesson %s ingested with no problems", lesson_id)
        lessons.append(Lesson(lesson_id=lesson_id, title=lesson_titles[lesson_id], problems=problems))

    return ContentPool(
        pool_id=pool_id,
        source_uri=source_uri,
        textbook_title=textbook_title or pool_id,
        lessons=tuple(lessons),
        ingested_at=datetime.now(timezone.utc).isoformat(),
    )


def get_lesson(pool: ContentPool, lesson_id: str) -> Lesson:
    return pool.get_lesson(lesson_id)


def serialize_csv(pool: ContentPool) -> str:
    """Render the canonical CSV form; re-ingesting it reproduces the pool."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for lesson in pool.lessons:
        if not lesson.problems:
            writer.writerow([lesson.lesson_id, lesson.title, "", "", "", "", "", "", "", ""])
            continue
        for problem in lesson.problems:
            for step in problem.steps:
                writer.writerow(
                    [
                        lesson.lesson_id,
                        lesson.title,
                        problem.problem_id,
                        problem.body,
                        step.step_id,
                        step.body,
                        step.answer,
                        step.answer_type,
                        "|".join(step.choices) if step.choices else "",
                        serialize_pathway(step.human_hints) if step.human_hints else "",
                    ]
                )
    return buf.getvalue()


def load_source(uri: str, timeout: float = 30.0) -> bytes:
    """Fetch pool bytes from an http(s) URL or a local file path."""
    if uri.startswith(("http://", "https://")):
        import requests

        response = requests.get(uri, timeout=timeout)
        response.raise_for_status()
        return response.content
    with open(uri, "rb") as fh:
        return fh.read()
