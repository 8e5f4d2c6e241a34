"""Exception hierarchy shared across the toolkit."""


class FlowBenchError(Exception):
    """Base class for all toolkit errors."""


class DataError(FlowBenchError):
    """Unusable input data: missing files, bad columns, empty classes."""


class SchemaError(DataError):
    """Feature schema mismatch (wrong feature count, names, or version)."""


class ConfigError(FlowBenchError):
    """Invalid configuration or command usage."""


class StageError(FlowBenchError):
    """A benchmark pipeline stage failed; carries the stage tag."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause
