"""Exception hierarchy. Everything the engine raises on bad input is an EQLError."""

from __future__ import annotations


class EQLError(Exception):
    pass


class EQLSyntaxError(EQLError):
    def __init__(self, message: str, line: int = 1, column: int = 1):
        self.message = message
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {message}")


class UnknownEntityError(EQLError):
    pass


class PropertyKindError(EQLError):
    pass


class UnknownNameError(EQLError):
    """A name in the query resolves to nothing. Carries fuzzy suggestions."""

    def __init__(self, surface: str, suggestions=()):
        self.surface = surface
        self.suggestions = list(suggestions)
        super().__init__(f'do not found "{surface}"')


class TypeMismatchError(EQLError):
    pass


class AggregateError(EQLError):
    pass


class RuleError(EQLError):
    pass


class RevisionError(EQLError):
    pass
