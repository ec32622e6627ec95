"""Exception hierarchy shared across the package."""


class MacGridError(Exception):
    pass


class ConfigError(MacGridError, ValueError):
    pass


class EncodingError(MacGridError, ValueError):
    pass


class DecodingError(MacGridError, ValueError):
    pass


class InputError(MacGridError, ValueError):
    pass


class EvaluationError(MacGridError, ValueError):
    pass


class GenerationError(MacGridError, RuntimeError):
    pass


class ParseError(MacGridError, ValueError):
    def __init__(self, message: str, line: int | None = None, source: str | None = None):
        self.line = line
        self.source = source
        where = ""
        if source is not None and line is not None:
            where = f"{source}:{line}: "
        elif line is not None:
            where = f"line {line}: "
        super().__init__(where + message)


class TrainingError(MacGridError, RuntimeError):
    def __init__(self, message: str, epoch: int):
        self.epoch = epoch
        super().__init__(f"epoch {epoch}: {message}")
