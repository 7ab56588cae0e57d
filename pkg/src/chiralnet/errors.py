class ParameterError(ValueError):
    """Network parameters violate a physical constraint."""


class PreconditionError(ValueError):
    """An operation was called outside the regime where it is defined."""


class IntegrationError(RuntimeError):
    """The ODE integrator failed; ``t`` is the time at which it stopped."""

    def __init__(self, message: str, t: float):
        super().__init__(f"{message} (at t={t:.12g})")
        self.t = t


class InvariantError(RuntimeError):
    """A conservation law or structural identity was violated during a run."""


class ConfigError(ValueError):
    pass
