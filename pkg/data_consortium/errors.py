from typing import Optional


class ConsortiumError(Exception):
    """Base class for every error raised by data_consortium."""


class ConfigError(ConsortiumError, ValueError):
    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"invalid {field}: {message}")


class PreconditionError(ConsortiumError, ValueError):
    pass


class RecordRejected(PreconditionError):
    def __init__(self, record, message: str):
        self.record = record
        super().__init__(f"{message}: {record}")


class CapacityError(ConsortiumError):
    pass


class DataFileError(ConsortiumError):
    def __init__(self, path, message: str, line: Optional[int] = None):
        self.path = path
        self.line = line
        where = f"{path}:{line}" if line is not None else str(path)
        super().__init__(f"{where}: {message}")
