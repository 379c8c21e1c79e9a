"""Exception hierarchy.

Every error carries an optional ``stage`` (pipeline step that raised it) and
``bin`` (frequency bin index) so that failures deep inside a batched update
can be located.
"""

from typing import Optional


class IvasepError(Exception):
    def __init__(self, message: str, *, stage: Optional[str] = None, bin: Optional[int] = None):
        self.stage = stage
        self.bin = bin
        super().__init__(message)

    def __str__(self) -> str:
        msg = super().__str__()
        context = []
        if self.stage is not None:
            context.append(f"stage={self.stage}")
        if self.bin is not None:
            context.append(f"bin={self.bin}")
        if context:
            return f"[{', '.join(context)}] {msg}"
        return msg

    def with_context(self, *, stage: Optional[str] = None, bin: Optional[int] = None) -> "IvasepError":
        if self.stage is None and stage is not None:
            self.stage = stage
        if self.bin is None and bin is not None:
            self.bin = bin
        return self


class InvalidInput(IvasepError, ValueError):
    pass


class DegenerateMatrix(IvasepError, ValueError):
    pass


class SingularMatrix(IvasepError, ValueError):
    pass


class ShapeMismatch(IvasepError, ValueError):
    pass


class InputTooShort(IvasepError, ValueError):
    pass


class InsufficientData(IvasepError, ValueError):
    pass


class DegenerateInput(IvasepError, ValueError):
    pass


class UnsupportedChannelCount(IvasepError, ValueError):
    pass


class FormatMismatch(IvasepError, ValueError):
    pass


class ParseError(IvasepError, ValueError):
    pass


class Unsupported(IvasepError, ValueError):
    pass


class MetricsUnavailable(IvasepError, ValueError):
    pass


class MetricsUndefined(IvasepError, ValueError):
    pass


class ConfigError(IvasepError, ValueError):
    pass
