"""Exception hierarchy shared by every module of the package."""


class DifinvError(Exception):
    """Base class for all errors raised by difinv."""


class ExprSyntaxError(DifinvError, SyntaxError):
    """Malformed expression text.

    ``offset`` is the 0-based byte offset of the offending token and
    ``expected`` the set of token kinds that would have been accepted.
    """

    def __init__(self, message, text, offset, expected=()):
        self.text_source = text
        self.position = offset
        self.expected = frozenset(expected)
        exp = ", ".join(sorted(self.expected))
        full = f"{message} at offset {offset}" + (f" (expected one of: {exp})" if exp else "")
        super().__init__(full)
        self.offset = offset


class UnknownFunction(DifinvError, ValueError):
    def __init__(self, name, offset=None):
        self.name = name
        self.offset = offset
        super().__init__(f"unknown function {name!r}" + (f" at offset {offset}" if offset is not None else ""))


class UnboundSymbol(DifinvError, KeyError):
    def __init__(self, name):
        self.name = name
        super().__init__(name)

    def __str__(self):
        return f"unbound symbol {self.name!r}"


class DomainError(DifinvError, ArithmeticError):
    """Evaluation left the real domain of a function (``kind`` names which)."""

    def __init__(self, kind, point=None):
        self.kind = kind
        self.point = point
        super().__init__(f"domain error in {kind}" + (f" at {point}" if point else ""))


class SamplingExhausted(DifinvError):
    pass


class OrderExceeded(DifinvError):
    pass


class DegenerateFrame(DifinvError):
    pass


class WrongArity(DifinvError):
    pass


class NotInvariant(DifinvError):
    def __init__(self, message, verdict=None):
        self.verdict = verdict
        super().__init__(message)


class SingularTransform(DifinvError):
    pass


class SingularFrame(DifinvError):
    pass


class AntiderivativeMismatch(DifinvError):
    def __init__(self, message, residual=None):
        self.residual = residual
        super().__init__(message)


class NotOnLevelSet(DifinvError):
    pass


class FlowEscaped(DifinvError):
    pass


class ZeroCoefficient(DifinvError):
    pass


class SingularForSampledCtilde(DifinvError):
    pass


class SingularJacobiMatrix(DifinvError):
    def __init__(self, block, message=None):
        self.block = block
        super().__init__(message or f"Jacobi matrix {block} is singular on the sampled domain")


class InvalidProblem(DifinvError):
    """A problem description (dict or JSON file) is inconsistent."""
