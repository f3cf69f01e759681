"""Exception types shared across the toolkit."""


class UledInspectError(Exception):
    """Base class for all toolkit errors."""


class FrameFormatError(UledInspectError):
    """Malformed ULF1 container: bad magic, bad header, or payload length mismatch."""


class ValidationError(UledInspectError):
    """Data violates a declared invariant (non-finite/negative luminance,
    chroma out of [0, 1], defect index out of range, ...)."""


class ConfigError(UledInspectError):
    """Invalid generator or pipeline configuration."""


class GeometryError(UledInspectError):
    """Degenerate correspondences, singular homography, horizon point, or
    failed corner detection."""


class GridError(UledInspectError):
    """Grid reconstruction failure: no usable periodicity, too few edges,
    or an edge-spacing outlier."""


class FeatureExtractionError(UledInspectError):
    """A cell yields no samples under the extraction rule."""


class MlError(UledInspectError):
    """Bad input to a model fit (too few samples, non-finite values,
    dimension mismatch) or non-convergence."""


class EvaluationError(UledInspectError):
    """Prediction/truth dimension mismatch or an empty statistics population."""


class PipelineStageError(UledInspectError):
    """A pipeline stage failed; carries the stage name and the original cause."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
