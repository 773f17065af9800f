# file: aacord/utils/errors.py
from typing import Optional


class AacordError(Exception):
    """Base error; ``anchor`` names the hypothesis or construction step involved."""

    def __init__(self, message: str, anchor: Optional[str] = None):
        super().__init__(message)
        self.message = message
        self.anchor = anchor

    def __str__(self) -> str:
        if self.anchor:
            return f"{self.message} [{self.anchor}]"
        return self.message


class ExprSyntaxError(AacordError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class UnknownFunctionError(AacordError):
    pass


class UnboundVariableError(AacordError):
    pass


class ExprDomainError(AacordError):
    pass


class FlowError(AacordError):
    pass


class StepLimitError(FlowError):
    pass


class EscapeError(FlowError):
    def __init__(self, message: str, time: float, anchor: Optional[str] = None, steps: int = 0):
        super().__init__(message, anchor)
        self.time = time
        self.steps = steps


class SpecError(AacordError):
    def __init__(self, message: str, line: Optional[int] = None):
        text = f"line {line}: {message}" if line is not None else message
        super().__init__(text)
        self.line = line


class HypothesisError(AacordError):
    pass


class LatticeError(AacordError):
    pass


class ChartError(AacordError):
    pass
# end file
