"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """An experiment or task description is invalid or infeasible."""


class TrainingDivergedError(RuntimeError):
    """Local SGD produced a non-finite loss or gradient (learning-rate blowup)."""
