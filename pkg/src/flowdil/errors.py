"""Shared exception types."""


class FlowDilError(Exception):
    """Base class for package errors."""


class SingularityError(FlowDilError):
    """A velocity field was evaluated where a denominator vanishes (alpha = 0
    or c^2 alpha^2 + sigma^2 beta^2 = 0)."""


class IntegrationError(FlowDilError):
    """A trajectory produced a non-finite state; carries (trajectory, step)
    context where available."""

    def __init__(self, message, trajectories=(), step=None, t=None):
        super().__init__(message)
        self.trajectories = tuple(trajectories)
        self.step = step
        self.t = t


class UnreliableEstimateError(FlowDilError):
    """A Monte-Carlo oracle estimate has too small an effective sample size
    to be trusted; increase n_samples or switch to enumeration."""

    def __init__(self, message, ess=None):
        super().__init__(message)
        self.ess = ess


class ConfigError(FlowDilError):
    """An experiment configuration failed validation before any compute."""
