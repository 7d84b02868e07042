"""Hint-pathway parsing, validation, normalization, and content export.

A pathway is the ordered sequence of hints and scaffolds attached to one
problem step. The raw interchange format is line-oriented, one item per
line:

    HINT <title> :: <body>
    SCAFFOLD <title> :: <body> :: <answer> :: <type>
    SCAFFOLD <title> :: <body> :: <answer> :: <type> :: choice|choice|...

Blank lines are ignored. Fields are separated by ``" :: "``; field text
must not itself contain the separator. ``<type>`` is one of ``numeric``,
``multiple_choice``, ``string_exact`` (unknown values parse but are
rejected by :func:`validate`).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import IO, TYPE_CHECKING

from .errors import EmptyPathway, InvalidPathway, ParseError, UnresolvedStepRef

if TYPE_CHECKING:
    from .content_pool import ContentPool, Step

ANSWER_TYPES = ("numeric", "multiple_choice", "string_exact")

FIELD_SEP = " :: "
CHOICE_SEP = "|"

# Answers like "x = 2 or x = -2" admit several textual forms; this marker
# drives the multiple-choice conversion in normalize_answer_type.
ALTERNATIVE_MARKER = " or "

# Minimum number of slots on a generated multiple-choice scaffold; unused
# slots stay empty for human fill-in.
MC_SLOT_COUNT = 4

EXPORT_FORMAT = "promptpad-content-v1"


@dataclass(frozen=True)
class PathwayItem:
    kind: str  # "hint" | "scaffold"
    title: str
    body: str
    scaffold_answer: str | None = None
    scaffold_answer_type: str | None = None
    scaffold_choices: tuple[str, ...] | None = None


@dataclass(frozen=True)
class HintPathway:
    items: tuple[PathwayItem, ...]


@dataclass(frozen=True)
class Issue:
    severity: str  # "error" | "warning"
    code: str
    location: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    issues: tuple[Issue, ...] = ()

    def errors(self) -> list[Issue]:
        return [i for i in self.issues if i.severity == "error"]

    def warnings(self) -> list[Issue]:
        return [i for i in self.issues if i.severity == "warning"]

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "issues": [
                {
                    "severity": i.severity,
                    "code": i.code,
                    "location": i.location,
                    "message": i.message,
                }
                for i in self.issues
            ],
        }


def parses_decimal(text: str) -> bool:
    """True when the text is a plain finite decimal number."""
    try:
        value = float(text.strip())
    except (TypeError, ValueError):
        return False
    return math.isfinite(value)


def parse_pathway(raw: str) -> HintPathway:
    """Parse raw pathway text into a structured pathway.

    Raises ParseError (with the 1-based line number) on any unknown line
    kind or malformed field list, and EmptyPathway when no items remain.
    """
    if not raw or not raw.strip():
        raise EmptyPathway("pathway text is empty")
    items: list[PathwayItem] = []
    for lineno, line in enumerate(raw.splitlines(), start=1):
        line = line.rstrip("\r")
        if not line.strip():
            continue
        if line.startswith("HINT "):
            parts = line[len("HINT "):].split(FIELD_SEP)
            if len(parts) != 2:
                raise ParseError(lineno, f"HINT needs title and body, got {len(parts)} field(s)")
            items.append(PathwayItem(kind="hint", title=parts[0], body=parts[1]))
        elif line.startswith("SCAFFOLD "):
            parts = line[len("SCAFFOLD "):].split(FIELD_SEP)
            if len(parts) not in (4, 5):
                raise ParseError(
                    lineno,
                    f"SCAFFOLD needs title, body, answer, type (and optional choices), got {len(parts)} field(s)",
                )
            choices = tuple(parts[4].split(CHOICE_SEP)) if len(parts) == 5 else None
            items.append(
                PathwayItem(
                    kind="scaffold",
                    title=parts[0],
                    body=parts[1],
                    scaffold_answer=parts[2],
                    scaffold_answer_type=parts[3],
                    scaffold_choices=choices,
                )
            )
        else:
            raise ParseError(lineno, f"unknown line kind: {line.split(FIELD_SEP)[0][:40]!r}")
    if not items:
        raise EmptyPathway("pathway text contains no items")
    return HintPathway(items=tuple(items))


def serialize_pathway(pathway: HintPathway) -> str:
    """Render the canonical raw-text form (inverse of parse_pathway)."""
    lines = []
    for item in pathway.items:
        if item.kind == "hint":
            lines.append(f"HINT {item.title}{FIELD_SEP}{item.body}")
        else:
            fields = [item.title, item.body, item.scaffold_answer or "", item.scaffold_answer_type or ""]
            if item.scaffold_choices is not None:
                fields.append(CHOICE_SEP.join(item.scaffold_choices))
            lines.append("SCAFFOLD " + FIELD_SEP.join(fields))
    return "\n".join(lines)


def math_delimiters_balanced(text: str) -> bool:
    """Check that every ``$``..``$`` and ``$$``..``$$`` span is closed.

    Balance only; no math grammar. A ``$$`` seen while an inline span is
    open is read as close-then-open of inline spans.
    """
    stack: list[str] = []
    i = 0
    while i < len(text):
        if text.startswith("$$", i):
            if stack and stack[-1] == "$":
                # "$x$$y$": the first dollar closes, the second reopens
                i += 2
                continue
            if stack and stack[-1] == "$$":
                stack.pop()
            else:
                stack.append("$$")
            i += 2
        elif text[i] == "$":
            if stack and stack[-1] == "$":
                stack.pop()
            else:
                stack.append("$")
            i += 1
        else:
            i += 1
    return not stack


def validate(pathway: HintPathway) -> ValidationReport:
    """Run the structural checks and collect findings into a report.

    Never raises: every finding lands in the report, and ok is true iff
    no error-severity issue was found.
    """
    issues: list[Issue] = []

    def error(code: str, location: str, message: str) -> None:
        issues.append(Issue("error", code, location, message))

    def warning(code: str, location: str, message: str) -> None:
        issues.append(Issue("warning", code, location, message))

    if not pathway.items:
        error("EMPTY_PATHWAY", "pathway", "pathway has no items")

    for idx, item in enumerate(pathway.items, start=1):
        loc = f"item {idx}"
        if item.kind == "hint":
            if item.scaffold_answer is not None or item.scaffold_answer_type is not None or item.scaffold_choices is not None:
                error("HINT_WITH_ANSWER", loc, "hints must not carry answer fields")
        elif item.kind == "scaffold":
            if not item.scaffold_answer or not item.scaffold_answer_type:
                error("MISSING_SCAFFOLD_ANSWER", loc, "scaffold requires answer and answer type")
        else:
            error("UNKNOWN_ITEM_KIND", loc, f"unknown item kind {item.kind!r}")

    for idx, item in enumerate(pathway.items, start=1):
        loc = f"item {idx}"
        if item.kind != "scaffold" or not item.scaffold_answer_type:
            continue
        if item.scaffold_answer_type not in ANSWER_TYPES:
            error(
                "INVALID_ANSWER_TYPE",
                loc,
                f"answer type {item.scaffold_answer_type!r} not in {ANSWER_TYPES}",
            )

    for idx, item in enumerate(pathway.items, start=1):
        loc = f"item {idx}"
        if item.kind != "scaffold" or item.scaffold_answer_type != "multiple_choice":
            continue
        choices = [c for c in (item.scaffold_choices or ()) if c != ""]
        if len(choices) < 2:
            error("CHOICE_MISMATCH", loc, "multiple_choice scaffold needs at least 2 non-empty choices")
        elif item.scaffold_answer not in choices:
            error(
                "CHOICE_MISMATCH",
                loc,
                f"answer {item.scaffold_answer!r} not among choices {choices!r}",
            )

    for idx, item in enumerate(pathway.items, start=1):
        loc = f"item {idx}"
        for label, text in (("title", item.title), ("body", item.body)):
            if text and not math_delimiters_balanced(text):
                error("UNBALANCED_MATH", loc, f"unclosed math delimiter in {label}")

    for idx, item in enumerate(pathway.items, start=1):
        loc = f"item {idx}"
        if item.kind == "scaffold" and item.scaffold_answer_type == "numeric":
            if item.scaffold_answer is not None and not parses_decimal(item.scaffold_answer):
                error("NON_NUMERIC_ANSWER", loc, f"answer {item.scaffold_answer!r} does not parse as a decimal")

    for idx, item in enumerate(pathway.items, start=1):
        if not item.title.strip():
            warning("EMPTY_TITLE", f"item {idx}", "item has an empty title")
    if len(pathway.items) > 12:
        warning("LONG_PATHWAY", "pathway", f"{len(pathway.items)} items is unusually long")

    return ValidationReport(ok=not any(i.severity == "error" for i in issues), issues=tuple(issues))


def _split_alternatives(answer: str) -> list[str]:
    parts = [p.strip() for p in answer.split(ALTERNATIVE_MARKER)]
    return [p for p in parts if p]


def normalize_answer_type(step: "Step", pathway: HintPathway) -> tuple[HintPathway, list[Issue]]:
    """Coerce scaffold answers with several textual forms to checkable types.

    Rules, applied per scaffold:
      - answers listing alternatives ("... or ...") become multiple_choice;
        the alternatives become choices, padded with empty distractor slots
        for human fill-in, the first alternative becomes the answer, and a
        NEEDS_HUMAN_REVIEW warning is attached;
      - numeric scaffolds whose answer does not parse as a decimal (and has
        no alternatives) become string_exact with an ANSWER_TYPE_NORMALIZED
        warning;
      - everything else is unchanged.

    The owning step is consulted only for the warning location; the rules
    themselves are purely textual and deterministic.
    """
    flagged: list[Issue] = []
    items: list[PathwayItem] = []
    for idx, item in enumerate(pathway.items, start=1):
        loc = f"step {step.step_id}, item {idx}"
        if item.kind != "scaffold" or item.scaffold_answer is None:
            items.append(item)
            continue
        alternatives = _split_alternatives(item.scaffold_answer)
        if item.scaffold_answer_type != "multiple_choice" and len(alternatives) >= 2:
            slots = tuple(alternatives) + ("",) * max(0, MC_SLOT_COUNT - len(alternatives))
            items.append(
                replace(
                    item,
                    scaffold_answer=alternatives[0],
                    scaffold_answer_type="multiple_choice",
                    scaffold_choices=slots,
                )
            )
            flagged.append(
                Issue(
                    "warning",
                    "NEEDS_HUMAN_REVIEW",
                    loc,
                    f"answer {item.scaffold_answer!r} converted to multiple_choice; fill empty distractor slots",
                )
            )
        elif item.scaffold_answer_type == "numeric" and not parses_decimal(item.scaffold_answer):
            items.append(replace(item, scaffold_answer_type="string_exact"))
            flagged.append(
                Issue(
                    "warning",
                    "ANSWER_TYPE_NORMALIZED",
                    loc,
                    f"non-decimal answer {item.scaffold_answer!r} converted to string_exact",
                )
            )
        else:
            items.append(item)
    return HintPathway(items=tuple(items)), flagged


def _item_to_dict(item: PathwayItem) -> dict:
    out: dict = {"kind": item.kind, "title": item.title, "body": item.body}
    if item.kind == "scaffold":
        out["answer"] = item.scaffold_answer
        out["answer_type"] = item.scaffold_answer_type
        if item.scaffold_choices is not None:
            out["choices"] = list(item.scaffold_choices)
    return out


def item_from_dict(data: dict) -> PathwayItem:
    choices = data.get("choices")
    return PathwayItem(
        kind=data["kind"],
        title=data.get("title", ""),
        body=data.get("body", ""),
        scaffold_answer=data.get("answer"),
        scaffold_answer_type=data.get("answer_type"),
        scaffold_choices=tuple(choices) if choices is not None else None,
    )


def export_document(pool: "ContentPool", pathways: dict[tuple[str, str], HintPathway]) -> bytes:
    """Build the deployment-format JSON document for the given pathways.

    One record per covered step, in pool order, with stable key order.
    Raises UnresolvedStepRef / InvalidPathway before producing any bytes,
    so a failed export writes nothing.
    """
    index = pool.step_index()
    unresolved = [ref for ref in pathways if ref not in index]
    if unresolved:
        raise UnresolvedStepRef(sorted(unresolved))
    offenders = sorted(
        f"{pid}:{sid}" for (pid, sid), pw in pathways.items() if not validate(pw).ok
    )
    if offenders:
        raise InvalidPathway(offenders)

    records = []
    for lesson in pool.lessons:
        for problem in lesson.problems:
            for step in problem.steps:
                ref = (problem.problem_id, step.step_id)
                if ref not in pathways:
                    continue
                record = {
                    "lesson_id": lesson.lesson_id,
                    "problem_id": problem.problem_id,
                    "step_id": step.step_id,
                    "problem_body": problem.body,
                    "step_body": step.body,
                    "answer": step.answer,
                    "answer_type": step.answer_type,
                    "pathway": [_item_to_dict(i) for i in pathways[ref].items],
                }
                if step.choices is not None:
                    record["choices"] = list(step.choices)
                records.append(record)

    document = {
        "format": EXPORT_FORMAT,
        "pool_id": pool.pool_id,
        "textbook_title": pool.textbook_title,
        "source_uri": pool.source_uri,
        "record_count": len(records),
        "records": records,
    }
    return (json.dumps(document, sort_keys=True, indent=2, ensure_ascii=False) + "\n").encode("utf-8")


def export_content(pool: "ContentPool", pathways: dict[tuple[str, str], HintPathway], out: IO[bytes]) -> None:
    """Write the deployment document to a byte sink, all-or-nothing."""
    out.write(export_document(pool, pathways))
