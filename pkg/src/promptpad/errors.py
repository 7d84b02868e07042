"""Exception hierarchy shared across the workbench."""

from __future__ import annotations


class PromptpadError(Exception):
    """Base class for every error raised by this package."""


# --- content pool ---------------------------------------------------------


class MalformedCsv(PromptpadError):
    def __init__(self, row: int, message: str):
        super().__init__(f"row {row}: {message}")
        self.row = row


class MissingColumn(PromptpadError):
    def __init__(self, column: str):
        super().__init__(f"missing required column: {column}")
        self.column = column


class InvalidAnswerType(PromptpadError):
    def __init__(self, row: int, value: str, message: str = ""):
        detail = message or f"invalid answer_type {value!r}"
        super().__init__(f"row {row}: {detail}")
        self.row = row
        self.value = value


class ChoiceMismatch(PromptpadError):
    def __init__(self, row: int, answer: str, choices: list[str]):
        super().__init__(f"row {row}: answer {answer!r} not among choices {choices!r}")
        self.row = row
        self.answer = answer
        self.choices = choices


class NotFound(PromptpadError):
    pass


# --- prompt library -------------------------------------------------------


class EmptyBody(PromptpadError):
    pass


class UnknownParent(PromptpadError):
    pass


class UnknownPrompt(PromptpadError):
    pass


class LessonMismatch(PromptpadError):
    pass


# --- scratchpad -----------------------------------------------------------


class UnknownVariant(PromptpadError):
    pass


class UnresolvedStepRef(PromptpadError):
    def __init__(self, refs: list[tuple[str, str]]):
        super().__init__(f"unresolved step refs: {refs!r}")
        self.refs = refs


class GatewayUnavailable(PromptpadError):
    pass


# --- sampler --------------------------------------------------------------


class UnknownLesson(PromptpadError):
    pass


class EmptyScope(PromptpadError):
    pass


class EmptyInput(PromptpadError):
    pass


# --- gateway --------------------------------------------------------------


class ProviderError(PromptpadError):
    pass


class SchemaViolation(PromptpadError):
    def __init__(self, message: str, payload: object = None):
        super().__init__(message)
        self.payload = payload


class Timeout(PromptpadError):
    pass


class DuplicateName(PromptpadError):
    pass


class InvalidEndpoint(PromptpadError):
    pass


# --- consistency ----------------------------------------------------------


class EmbeddingProviderError(PromptpadError):
    pass


class DimensionMismatch(PromptpadError):
    pass


# --- validator ------------------------------------------------------------


class ParseError(PromptpadError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class EmptyPathway(PromptpadError):
    pass


class InvalidPathway(PromptpadError):
    def __init__(self, offenders: list[str]):
        super().__init__(f"invalid pathways for steps: {', '.join(offenders)}")
        self.offenders = offenders


# --- log engine -----------------------------------------------------------


class DuplicateId(PromptpadError):
    pass


class UnknownRoot(PromptpadError):
    pass


# --- service --------------------------------------------------------------


class ConfigError(PromptpadError):
    pass


class PortInUse(PromptpadError):
    pass
