"""Exception hierarchy.

Every error raised on purpose by the package derives from :class:`MhdpolError`
so callers (the CLI in particular) can map families of failures onto exit codes.
"""

from __future__ import annotations


class MhdpolError(Exception):
    """Base class for all package errors."""


class ExprSyntaxError(MhdpolError, ValueError):
    """Malformed background expression.

    Attributes
    ----------
    offset : int
        Byte offset into the source where parsing failed.
    expected : frozenset of str
        Token kinds that would have been accepted at ``offset``.
    """

    def __init__(self, message: str, offset: int, expected=()):
        self.offset = offset
        self.expected = frozenset(expected)
        exp = ", ".join(sorted(self.expected))
        super().__init__(f"{message} at offset {offset}" + (f" (expected {exp})" if exp else ""))


class UnknownIdentifier(MhdpolError, ValueError):
    def __init__(self, name: str, offset: int):
        self.name = name
        self.offset = offset
        super().__init__(f"unknown identifier {name!r} at offset {offset}")


class DomainError(MhdpolError, ArithmeticError):
    """Expression evaluated outside its domain (sqrt of a negative, x/0, ...)."""


class PhysicsError(MhdpolError, ValueError):
    """Base for errors caused by the physical configuration (CLI exit 2)."""


class NonPhysical(PhysicsError):
    """Density, pressure or adiabatic index not strictly positive."""


class ZeroFrequency(PhysicsError):
    """An operation needing xi != 0 was called with xi = 0."""


class DegenerateMode(PhysicsError):
    """A hypothesis separating the three wave families is violated.

    Attributes
    ----------
    hypothesis : str
        Name of the violated condition, e.g. ``"xi x H = 0"``.
    """

    def __init__(self, hypothesis: str, detail: str = ""):
        self.hypothesis = hypothesis
        super().__init__(f"degenerate mode: {hypothesis}" + (f" ({detail})" if detail else ""))


class UnclassifiedDegeneracy(PhysicsError):
    """|H|^2 = rho c^2: the triple crossing left open by the eigenvalue case analysis."""


class RadicalDegenerate(PhysicsError):
    """The magnetosonic radical vanishes, so q2/q3 are not differentiable."""


class NotOnCharacteristic(PhysicsError):
    pass


class WrongRegime(PhysicsError):
    pass


class NotOnSheet(PhysicsError):
    pass


class NotInKernel(PhysicsError):
    pass


class RayStopped(MhdpolError):
    """Ray integration ended early.

    Attributes
    ----------
    reason : str
    s_reached : float
        Last parameter value that was integrated successfully.
    ray : Ray or None
        The partial ray up to ``s_reached`` (attached by the integrator).
    """

    def __init__(self, reason: str, s_reached: float, ray=None):
        self.reason = reason
        self.s_reached = s_reached
        self.ray = ray
        super().__init__(f"ray stopped at s={s_reached:.6g}: {reason}")
