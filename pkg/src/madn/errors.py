"""Exception types shared across the toolkit."""


class MadnError(Exception):
    pass


class ConfigError(MadnError, ValueError):
    pass


class ContractError(MadnError, ValueError):
    """A precondition of an operation was violated by its caller."""


class ResolutionError(MadnError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


class ConvergenceError(MadnError, RuntimeError):
    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class ParseError(MadnError, ValueError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column is not None else "") + ": "
        super().__init__(where + message)


class StageError(MadnError, RuntimeError):
    """A pipeline stage failed; ``stage`` names it and ``__cause__`` holds the original error."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}' failed: {type(cause).__name__}: {cause}")
        self.stage = stage
