"""Seeded sampling of problem steps and contiguous lesson assignment.

All randomness flows from a caller-supplied seed so logged draws replay
exactly. Pure functions, safe everywhere.
"""

from __future__ import annotations

import random

from .content_pool import ContentPool, StepRef
from .errors import EmptyInput, EmptyScope, NotFound, UnknownLesson


def sample_steps(
    pool: ContentPool,
    scope: str,
    lesson_id: str | None,
    n: int,
    seed: int,
) -> list[StepRef]:
    """Draw n distinct step refs uniformly without replacement.

    scope is "textbook" or "lesson" (the latter requires lesson_id). When
    the scope holds fewer than n steps, all of them come back in shuffled
    order. Deterministic for a fixed seed.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if scope == "textbook":
        refs = pool.all_step_refs()
    elif scope == "lesson":
        if lesson_id is None:
            raise UnknownLesson("lesson scope requires a lesson_id")
        try:
            refs = pool.get_lesson(lesson_id).step_refs()
        except NotFound as exc:
            raise UnknownLesson(str(exc)) from exc
    else:
        raise ValueError(f"unknown scope {scope!r}")
    if not refs:
        raise EmptyScope(f"no steps in scope {scope!r}" + (f" lesson {lesson_id!r}" if lesson_id else ""))
    rng = random.Random(seed)
    return rng.sample(refs, min(n, len(refs)))


def assign_lessons(lesson_ids: list[str], authors: list[str], seed: int = 0) -> dict[str, list[str]]:
    """Partition lessons into contiguous slices, one per author.

    Slices keep input order, cover every lesson exactly once, and differ
    in size by at most 1 (earlier slices take the remainder). The
    author-to-slice pairing is a seeded random permutation; with more
    authors than lessons, some slices are empty.
    """
    if not lesson_ids or not authors:
        raise EmptyInput("lesson_ids and authors must both be non-empty")
    size, remainder = divmod(len(lesson_ids), len(authors))
    slices: list[list[str]] = []
    start = 0
    for i in range(len(authors)):
        width = size + (1 if i < remainder else 0)
        slices.append(list(lesson_ids[start:start + width]))
        start += width
    shuffled = list(authors)
    random.Random(seed).shuffle(shuffled)
    return {author: slices[i] for i, author in enumerate(shuffled)}
