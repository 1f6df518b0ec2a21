"""
Error hierarchy; every error carries the CLI exit code it maps to.
"""
from typing import List, Optional


class SignFaceError(Exception):
    """Base class for all errors raised by the package."""

    exit_code = 1


class ConfigurationError(SignFaceError):
    """Invalid or incomplete configuration."""


class MissingArtifactError(ConfigurationError):
    """A prerequisite artifact (checkpoint, topology, manifest) is missing."""


class VersionMismatchError(ConfigurationError):
    """Artifacts were produced against different versions."""

    def __init__(self, what: str, expected: str, found: str):
        super().__init__(f"{what} version mismatch: expected '{expected}', found '{found}'")
        self.expected = expected
        self.found = found


class InvalidParameterError(SignFaceError):
    """A parameter is outside its valid range."""


class InvalidInputError(SignFaceError):
    """An input value violates a precondition."""


class ShapeError(SignFaceError):
    """Array or tensor shapes do not match."""


class ContractError(SignFaceError):
    """A value violates a documented contract (norm, dimension)."""


class PreprocessingError(SignFaceError):
    """A landmark sequence could not be conditioned."""


class FrontalizationError(PreprocessingError):
    """Anchor configuration too degenerate to estimate a similarity transform."""


class DegenerateFrameError(PreprocessingError):
    """A frame has a zero-extent bounding box."""


class NumericalError(SignFaceError):
    """Numerical failure."""

    exit_code = 2


class DegenerateLatentError(NumericalError):
    """A latent vector has (near) zero norm and cannot be projected."""


class DegenerateVectorError(NumericalError):
    """A vector has zero norm where a direction is required."""


class AmbiguousPathError(NumericalError):
    """Spherical interpolation between antipodal points is undefined."""


class CovarianceError(NumericalError):
    """Covariance cannot be estimated or its square root failed."""


class TrainingDivergedError(NumericalError):
    """Training produced a non-finite loss."""

    def __init__(self, stage: str, iteration: int, batch_ids: Optional[List[str]] = None):
        batch_ids = batch_ids or []
        super().__init__(
            f"Non-finite {stage} loss at iteration {iteration} (batch: {', '.join(batch_ids)})"
        )
        self.stage = stage
        self.iteration = iteration
        self.batch_ids = batch_ids


class BackendError(SignFaceError):
    """A feature backend returned an unusable response."""

    exit_code = 3


class TransportError(BackendError):
    """A feature backend could not be reached."""
