"""Exception hierarchy: configuration errors vs numerical failures."""


class FkwaveError(Exception):
    """Base class for all package errors."""


class ConfigError(FkwaveError):
    """Invalid parameters or configuration (CLI exit code 2)."""


class NumericalError(FkwaveError):
    """A numerical procedure failed or left its validated regime (exit 3)."""


class InvariantError(FkwaveError):
    """A verification-suite invariant failed on a computed solution (exit 4).

    Carries the partial run payload so clients can still persist artifacts.
    """

    def __init__(self, message: str, payload: dict | None = None):
        super().__init__(message)
        self.payload = payload
