"""Exception types raised by the numerical routines."""


class CmdfsError(Exception):
    """Base class for all package errors."""


class SubcriticalError(CmdfsError, ValueError):
    """The degree law has no giant component (size-biased mean <= 1)."""


class SubcriticalStateError(SubcriticalError):
    """A fluid-limit state has become critical; the drift is undefined."""


class DomainError(CmdfsError, ValueError):
    """An argument lies outside the domain where a formula is valid."""


class NoRootError(CmdfsError, RuntimeError):
    """A bracketing root search failed. Signals a numerical bug."""


class StepSizeError(CmdfsError, RuntimeError):
    """RK4 left the invariant region even after repeated step halving."""
