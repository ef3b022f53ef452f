"""
Error hierarchy shared by every thetabidiff module.

Each error carries a stable `name` (the string printed by the CLI as
`error: <name>: <message>`), so scripts can match on it without importing
Python classes.
"""


class ThetaBidiffError(Exception):
    name = "ThetaBidiffError"
    # usage errors exit 2, numerical errors exit 1
    exit_code = 1

    def __init__(self, message: str = ""):
        super().__init__(message)
        self.message = message

    def __str__(self) -> str:
        return f"{self.name}: {self.message}" if self.message else self.name


class InputError(ThetaBidiffError, ValueError):
    name = "InputError"
    exit_code = 2


# --- input validation (invalid moduli / characteristics) -------------------

class NotSymmetric(InputError):
    name = "NotSymmetric"


class NotPositiveDefinite(InputError):
    name = "NotPositiveDefinite"


class NotHalfInteger(InputError):
    name = "NotHalfInteger"


class NotOdd(InputError):
    name = "NotOdd"


class ConfigError(InputError):
    name = "ConfigError"


# --- numerical ---------------------------------------------------------------

class EpsilonTooSmall(ThetaBidiffError):
    name = "EpsilonTooSmall"


class DenominatorUnderflow(ThetaBidiffError):
    name = "DenominatorUnderflow"


class NotOnThetaDivisor(ThetaBidiffError):
    name = "NotOnThetaDivisor"


class OnDiagonal(ThetaBidiffError):
    name = "OnDiagonal"


class PoleOnPath(ThetaBidiffError):
    name = "PoleOnPath"


class NoConvergence(ThetaBidiffError):
    name = "NoConvergence"


class SingularJacobian(ThetaBidiffError):
    name = "SingularJacobian"


class NotSupported(ThetaBidiffError):
    name = "NotSupported"


class ValueOverflow(ThetaBidiffError):
    name = "ValueOverflow"
