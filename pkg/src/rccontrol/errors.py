"""Exception types shared across the package."""


class RCControlError(Exception):
    """Base class for all rccontrol errors."""


class ContractViolationError(RCControlError, ValueError):
    """An argument violates a documented precondition (shape, sign, range)."""


class IntegrationDivergedError(RCControlError):
    """A trajectory left the divergence guard (|component| > 1e6 or non-finite).

    ``step_index`` is the index of the step whose result first violated the
    guard.  ``partial`` optionally carries the valid prefix of the run for
    diagnosis; it is never returned through the normal API.
    """

    def __init__(self, step_index, partial=None, phase=None):
        self.step_index = step_index
        self.partial = partial
        self.phase = phase
        where = f" during {phase}" if phase else ""
        super().__init__(f"integration diverged at step {step_index}{where}")


class PredictionDivergedError(RCControlError):
    """The autonomous readout loop produced a non-finite or runaway output."""

    def __init__(self, step_index, partial=None):
        self.step_index = step_index
        self.partial = partial
        super().__init__(f"prediction diverged at step {step_index}")


class SpectralRadiusEstimationError(RCControlError):
    """Spectral radius estimation failed to converge; best estimate attached."""

    def __init__(self, best_estimate, message="spectral radius estimation failed"):
        self.best_estimate = best_estimate
        super().__init__(f"{message} (best estimate {best_estimate!r})")


class DegenerateNetworkError(RCControlError):
    """The raw random reservoir has zero spectral radius; rebuild with a new seed."""

    def __init__(self, seed):
        self.seed = seed
        super().__init__(
            f"reservoir built from seed {seed} has zero spectral radius; "
            "rebuild with the next seed"
        )


class InsufficientDataError(RCControlError):
    """Not enough usable samples for the requested operation."""


class RidgeSolverError(RCControlError):
    """The regularized normal equations could not be solved."""


class DegenerateInputError(RCControlError):
    """Input carries no usable variation (e.g. all points identical)."""


class DegenerateScalingError(RCControlError):
    """Fewer than two radii show a usable correlation-integral value."""


class EnsembleFailedError(RCControlError):
    """Every realization of an ensemble failed."""
