from __future__ import annotations

from pmgan.exception import PMGANError


class ModelError(PMGANError):
    """Base exception for model construction and inference errors."""


class ModelConfigError(ModelError, ValueError):
    """Raised when a model configuration is inconsistent."""


class UnknownDomainError(ModelError, ValueError):
    """Raised when a domain index is outside the model's domains."""

    def __init__(self, domain: int, num_domains: int, *args: object):
        super().__init__(f"Unknown domain {domain}; model has domains 1..{num_domains}", *args)
        self.domain = domain
        self.num_domains = num_domains


class ConvergenceError(ModelError):
    """Raised when an iterative solver does not converge."""

    def __init__(self, iterations: int, residual: float, *args: object):
        super().__init__(f"No convergence after {iterations} iterations (residual {residual:.3e})", *args)
        self.iterations = iterations
        self.residual = residual
