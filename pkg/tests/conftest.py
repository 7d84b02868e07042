from __future__ import annotations

import json
from pathlib import Path

import pytest

from promptpad.content_pool import ingest_csv

FIXTURES = Path(__file__).parent / "fixtures"
PATHWAYS = FIXTURES / "pathways"


def make_book_csv(lesson_ids, problems_per_lesson=1, steps_per_problem=1):
    """Build a synthetic content-pool CSV covering the given lessons."""
    lines = ["lesson_id,lesson_title,problem_id,problem_body,step_id,step_body,answer,answer_type,choices,human_hints"]
    for li, lesson_id in enumerate(lesson_ids):
        for pi in range(problems_per_lesson):
            problem_id = f"P{li + 1}_{pi + 1}"
            for si in range(steps_per_problem):
                lines.append(
                    f"{lesson_id},Lesson {lesson_id},{problem_id},"
                    f"Solve problem {problem_id},s{si + 1},Work step {si + 1},{li + pi + si + 1},numeric,,"
                )
    return "\n".join(lines) + "\n"


def fifty_nine_lesson_ids():
    return [f"{chapter}.{number}" for chapter in range(1, 13) for number in range(1, 6)][:59]


class TickingClock:
    """Deterministic ISO-8601 clock for replayable fixtures."""

    def __init__(self):
        self.count = 0

    def __call__(self) -> str:
        self.count += 1
        return f"2024-07-01T00:{self.count // 60:02d}:{self.count % 60:02d}+00:00"


@pytest.fixture
def fixed_clock():
    return TickingClock()


@pytest.fixture(scope="session")
def textbook_prompts():
    return json.loads((FIXTURES / "textbook_prompts.json").read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def iteration_chain_fixture():
    return json.loads((FIXTURES / "iteration_chain.json").read_text(encoding="utf-8"))


@pytest.fixture
def small_pool():
    csv_text = (
        "lesson_id,lesson_title,problem_id,problem_body,step_id,step_body,answer,answer_type,choices,human_hints\n"
        "2.5,Quadratic Equations,P1,Solve x^2 = 4,s1,Take the square root of both sides,2,numeric,,\n"
        "2.5,Quadratic Equations,P1,Solve x^2 = 4,s2,Name the solution form,plus or minus,string_exact,,\n"
        "2.5,Quadratic Equations,P2,Factor x^2 - 9,s1,Recognize the difference of squares,(x-3)(x+3),string_exact,,\n"
        "7.7,Systems of Equations,P3,Pick the consistent system,s1,Which option is consistent?,b,multiple_choice,a|b|c,\n"
    )
    return ingest_csv(csv_text, "small", textbook_title="College Algebra Sampler")


@pytest.fixture
def pool80():
    csv_text = make_book_csv(
        [f"{c}.{n}" for c in range(1, 6) for n in range(1, 3)],  # 10 lessons
        problems_per_lesson=2,
        steps_per_problem=4,
    )
    pool = ingest_csv(csv_text, "pool80", textbook_title="Eighty Step Book")
    assert pool.step_count() == 80
    return pool


@pytest.fixture
def book59():
    pool = ingest_csv(make_book_csv(fifty_nine_lesson_ids()), "book59", textbook_title="Full Book")
    assert len(pool.lessons) == 59
    return pool
