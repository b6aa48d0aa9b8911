"""Exception types shared across the package."""


class ModelError(ValueError):
    """Invalid model definition or model size."""


class EvaluationError(FloatingPointError):
    """A potential, functional or gradient produced a non-finite value."""

    def __init__(self, message, particle=None):
        super().__init__(message)
        self.particle = particle


class DomainError(ValueError):
    """Inputs fall outside the domain where a formula is valid."""


class ConfigurationError(ValueError):
    """Sampler or experiment configuration is inconsistent."""


class DivergenceError(RuntimeError):
    """A chain left the finite region; ``iteration`` records where."""

    def __init__(self, message, iteration):
        super().__init__(message)
        self.iteration = iteration
