from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from promptpad.content_pool import (
    CSV_COLUMNS,
    ContentPool,
    get_lesson,
    ingest_csv,
    serialize_csv,
)
from promptpad.errors import ChoiceMismatch, InvalidAnswerType, MalformedCsv, MissingColumn, NotFound

from conftest import fifty_nine_lesson_ids, make_book_csv

HEADER = ",".join(CSV_COLUMNS)


def test_rows_sharing_problem_id_merge_into_one_problem():
    csv_text = (
        f"{HEADER}\n"
        "1.1,Intro,P1,Body,s1,First,1,numeric,,\n"
        "1.1,Intro,P1,Body,s2,Second,2,numeric,,\n"
    )
    pool = ingest_csv(csv_text, "merge")
    assert len(pool.lessons) == 1
    assert len(pool.lessons[0].problems) == 1
    assert [s.step_id for s in pool.lessons[0].problems[0].steps] == ["s1", "s2"]


def test_multiple_choice_answer_must_be_among_choices():
    csv_text = f"{HEADER}\n1.1,Intro,P1,Body,s1,Pick,d,multiple_choice,a|b|c,\n"
    with pytest.raises(ChoiceMismatch) as err:
        ingest_csv(csv_text, "bad")
    assert err.value.row == 2


def test_fifty_nine_lesson_book_ingests_all_lessons():
    pool = ingest_csv(make_book_csv(fifty_nine_lesson_ids()), "full")
    assert len({l.lesson_id for l in pool.lessons}) == 59


def test_get_lesson_present_and_missing(small_pool):
    assert get_lesson(small_pool, "2.5").title == "Quadratic Equations"
    with pytest.raises(NotFound):
        get_lesson(small_pool, "99.9")


def test_get_lesson_on_empty_pool():
    pool = ContentPool(pool_id="empty", source_uri="", textbook_title="", lessons=())
    with pytest.raises(NotFound):
        pool.get_lesson("1.1")


def test_missing_column_is_named():
    with pytest.raises(MissingColumn) as err:
        ingest_csv("lesson_id,lesson_title\n1.1,Intro\n", "x")
    assert err.value.column == "problem_id"


def test_invalid_answer_type_reports_row():
    csv_text = f"{HEADER}\n1.1,Intro,P1,Body,s1,Step,yes,boolean,,\n"
    with pytest.raises(InvalidAnswerType) as err:
        ingest_csv(csv_text, "x")
    assert err.value.row == 2


def test_numeric_answer_must_parse():
    csv_text = f"{HEADER}\n1.1,Intro,P1,Body,s1,Step,two,numeric,,\n"
    with pytest.raises(InvalidAnswerType):
        ingest_csv(csv_text, "x")


def test_short_row_is_malformed():
    csv_text = f"{HEADER}\n1.1,Intro,P1\n"
    with pytest.raises(MalformedCsv) as err:
        ingest_csv(csv_text, "x")
    assert err.value.row == 2


def test_problem_cannot_span_lessons():
    csv_text = (
        f"{HEADER}\n"
        "1.1,A,P1,Body,s1,Step,1,numeric,,\n"
        "1.2,B,P1,Body,s2,Step,2,numeric,,\n"
    )
    with pytest.raises(MalformedCsv):
        ingest_csv(csv_text, "x")


def test_empty_lesson_row_is_flagged_not_fatal(caplog):
    csv_text = f"{HEADER}\n3.4,Placeholder,,,,,,,,\n1.1,Real,P1,Body,s1,Step,1,numeric,,\n"
    pool = ingest_csv(csv_text, "warn")
    assert pool.empty_lessons() == ["3.4"]
    assert pool.step_count() == 1


def test_ingestion_is_deterministic(small_pool):
    text = serialize_csv(small_pool)
    assert ingest_csv(text, "small") == ingest_csv(text, "small")


def test_round_trip_preserves_pool(small_pool):
    rebuilt = ingest_csv(
        serialize_csv(small_pool), "small", textbook_title="College Algebra Sampler"
    )
    assert rebuilt == small_pool


def test_step_count_equals_data_rows(small_pool):
    rows = serialize_csv(small_pool).strip().splitlines()[1:]
    assert small_pool.step_count() == len(rows)


def test_human_hints_cell_round_trips():
    hints = "HINT Think :: Start from the definition.\nSCAFFOLD Part :: What is 2+2? :: 4 :: numeric"
    csv_text = f'{HEADER}\n1.1,Intro,P1,Body,s1,Step,1,numeric,,"{hints}"\n'
    pool = ingest_csv(csv_text, "hints")
    step = pool.lessons[0].problems[0].steps[0]
    assert step.human_hints is not None
    assert len(step.human_hints.items) == 2
    assert ingest_csv(serialize_csv(pool), "hints") == pool


_identifier = st.text(alphabet="abcdefghij0123456789", min_size=1, max_size=6)
_body_text = st.text(
    alphabet=st.characters(blacklist_categories=("Cs",), blacklist_characters="\r"),
    max_size=40,
)


@settings(max_examples=40, deadline=None)
@given(
    lessons=st.lists(
        st.tuples(_identifier, st.integers(min_value=1, max_value=3)),
        min_size=1,
        max_size=4,
        unique_by=lambda t: t[0],
    ),
    body=_body_text,
)
def test_round_trip_property(lessons, body):
    lines = [HEADER]
    for lesson_id, step_count in lessons:
        for s in range(step_count):
            cell = '"' + body.replace('"', '""') + '"'
            lines.append(f"L{lesson_id},Title,{lesson_id}-p,{cell},s{s},{cell},ans,string_exact,,")
    text = "\n".join(lines) + "\n"
    pool = ingest_csv(text, "prop")
    assert ingest_csv(serialize_csv(pool), "prop") == pool
    assert pool.step_count() == sum(c for _, c in lessons)
