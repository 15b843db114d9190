"""Exception types shared across the toolkit."""


class SelpromptError(Exception):
    """Base class for all toolkit errors."""


class DomainError(SelpromptError, ValueError):
    """An input value is outside the operation's domain."""


class ConfigCodeError(SelpromptError, ValueError):
    """A configuration code cannot be parsed.

    ``slot`` names the offending position (instruction/context/examples/output)
    when a single slot is to blame.
    """

    def __init__(self, message: str, slot: str | None = None):
        super().__init__(message)
        self.slot = slot


class SchemaError(SelpromptError, ValueError):
    """A dataset record violates the task schema."""

    def __init__(self, message: str, index: int | None = None, field: str | None = None):
        super().__init__(message)
        self.index = index
        self.field = field


class TagLengthError(SchemaError):
    """Token and tag sequences of an NER record differ in length."""


class ContractError(SelpromptError):
    """A caller violated an operation precondition."""


class TransportError(SelpromptError):
    """A remote provider failed after the configured retries."""


class ReplayMissError(SelpromptError):
    """A replay store has no entry for the requested key."""


class StoreError(SelpromptError):
    """A persistent store cannot be opened or written."""


class UndefinedCorrelationError(SelpromptError, ValueError):
    """Correlation is undefined for the given vectors (degenerate input)."""


class MissingConfigsError(SelpromptError):
    """A result table lacks rows for some configurations.

    ``missing`` lists the absent configuration codes.
    """

    def __init__(self, message: str, missing: list[str]):
        super().__init__(message)
        self.missing = missing


class UndefinedImprovementError(SelpromptError):
    """Relative improvement over a zero-score baseline is undefined."""


class UnknownLanguageError(SelpromptError):
    """A language is not in the registry and no explicit class was declared."""


class MissingRuleRowError(SelpromptError):
    """No recommendation row exists for the requested key.

    ``available`` lists the (task, resource_level, model_family) keys present.
    """

    def __init__(self, message: str, available: list[tuple[str, str, str]]):
        super().__init__(message)
        self.available = available
