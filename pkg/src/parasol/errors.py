"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid run configuration. Carries the offending key path."""

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")


class NonConvergenceError(RuntimeError):
    """Fixed-point sweep limit reached; the time window was too aggressive."""


class OrderViolationError(RuntimeError):
    """A monotone iterate exceeded its predecessor; the shift k is too small."""


class EnsembleBlowUpError(RuntimeError):
    """A pullback ensemble member blew up, contradicting the certificate."""

    def __init__(self, message, diagnostics=None):
        self.diagnostics = diagnostics or {}
        super().__init__(message)
