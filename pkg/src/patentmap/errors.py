"""Exception types shared across the package."""


class PatentMapError(Exception):
    pass


class ConfigError(PatentMapError):
    """Invalid or incomplete configuration."""


class ParseError(PatentMapError):
    def __init__(self, record_index, message, line=None):
        self.record_index = record_index
        self.line = line
        where = f"line {line}" if line is not None else f"record {record_index}"
        super().__init__(f"{where}: {message}")


class UndefinedSimilarity(PatentMapError, ValueError):
    """Similarity of a zero or constant vector."""


class StageError(PatentMapError):
    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage {stage!r} failed: {cause}")
