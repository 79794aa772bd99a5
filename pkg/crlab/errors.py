from typing import Optional


class CrlabError(Exception):
    """Base class for errors raised by crlab."""


class DegenerateParametersError(CrlabError, ValueError):
    """Parameters for which a requested quantity is undefined."""


class TrainingDivergedError(CrlabError, RuntimeError):
    def __init__(self, stage: str, step: int, detail: str):
        self.stage = stage
        self.step = step
        self.detail = detail
        super().__init__(f"{stage} diverged at step {step}: {detail}")


class ResultTableError(CrlabError, ValueError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(message if line is None else f"line {line}: {message}")


class EmptyResultTableError(ResultTableError):
    pass
