"""Exception hierarchy shared by every afpga module."""


class AfpgaError(ValueError):
    """Base class; ``kind`` is a short stable identifier for the failure."""

    kind = "error"

    def __init__(self, message: str = "", kind: str | None = None):
        if kind is not None:
            self.kind = kind
        super().__init__(message or self.kind)


class InvalidParamsError(AfpgaError):
    kind = "invalid-params"


class InvalidSinkError(AfpgaError):
    kind = "invalid-sink"


class InvalidConfigError(AfpgaError):
    kind = "invalid-config"


class BitstreamError(AfpgaError):
    """Raised by ``decode``; ``kind`` is one of bad-magic, bad-version,
    truncated-image, trailing-garbage, invalid-config."""

    kind = "invalid-config"


class NetlistSyntaxError(AfpgaError):
    kind = "syntax-error"

    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class UnknownBuiltinError(AfpgaError):
    kind = "unknown-builtin"


class UnsupportedCellError(AfpgaError):
    kind = "unsupported-cell"


class TooManyClustersError(AfpgaError):
    kind = "too-many-clusters"


class UnroutableError(AfpgaError):
    kind = "unroutable"

    def __init__(self, message: str, overused=()):
        self.overused = tuple(overused)
        super().__init__(message)


class ZeroDelayCycleError(AfpgaError):
    kind = "zero-delay-cycle"


class ElaborationError(AfpgaError):
    kind = "elaboration"


class Diagnostic(tuple):
    """A ``(code, message)`` pair returned by the checkers instead of raising."""

    __slots__ = ()

    def __new__(cls, code: str, message: str):
        return super().__new__(cls, (code, message))

    @property
    def code(self) -> str:
        return self[0]

    @property
    def message(self) -> str:
        return self[1]

    def __repr__(self):
        return f"Diagnostic({self.code!r}, {self.message!r})"

    def __str__(self):
        return f"{self.code}: {self.message}"
