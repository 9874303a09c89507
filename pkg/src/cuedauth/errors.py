"""Exception types shared across the package."""


class CuedAuthError(Exception):
    """Base class for all package errors."""


class ConfigError(CuedAuthError):
    """Scheme or service configuration is invalid."""


class InsufficientPortfolios(CuedAuthError):
    """Fewer portfolios available than the credential sequence length."""


class Exhausted(CuedAuthError):
    """Every portfolio has already been visited in this session."""


class UnknownUser(CuedAuthError):
    """No credential record exists for the user."""


class UserExists(CuedAuthError):
    """A credential record already exists for the user."""


class LockedOut(CuedAuthError):
    """The account is locked by the lockout policy."""

    def __init__(self, locked_until: float):
        super().__init__(f"account locked until {locked_until}")
        self.locked_until = locked_until


class InvalidSymbol(CuedAuthError):
    """Submitted key symbol is not part of the configured alphabet."""


class SessionClosed(CuedAuthError):
    """The session is no longer accepting input."""


class NotReady(CuedAuthError):
    """Finalize called before all entries were recorded."""


class SessionBusy(CuedAuthError):
    """Another request for this session is already in flight."""


class RateLimited(CuedAuthError):
    """Too many requests from this user or source address."""


class RegistrationMismatch(CuedAuthError):
    """Register-mode entry did not match the assigned keyword."""

    def __init__(self, step: int):
        super().__init__(f"wrong key at step {step}")
        self.step = step


class SeparatorInKeyword(CuedAuthError):
    """A keyword contains the reserved canonicalization separator."""


class WeakParams(CuedAuthError):
    """KDF cost parameters fall below the configured floor."""


class CorruptRecord(CuedAuthError):
    """Stored bytes failed checksum or framing validation."""


class StorageFull(CuedAuthError):
    """The storage medium rejected a write."""


class PackError(CuedAuthError):
    """A portfolio pack failed validation."""

    def __init__(self, diagnostics):
        super().__init__("; ".join(diagnostics) or "invalid pack")
        self.diagnostics = list(diagnostics)
