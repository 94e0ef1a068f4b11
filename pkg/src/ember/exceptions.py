"""Exception hierarchy for the ember pipeline."""


class EmberError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(EmberError):
    """A configuration value, CLI argument, or config file is invalid."""


class DatasetError(EmberError):
    """The dataset layout or contents violate what the pipeline expects."""


class ImageLoadError(EmberError):
    """An image file could not be decoded."""

    def __init__(self, path, reason=""):
        self.path = str(path)
        message = f"cannot decode image {self.path!r}"
        if reason:
            message += f": {reason}"
        super().__init__(message)


class UsageError(EmberError):
    """An operation was called in an invalid state or with inconsistent inputs."""


class EvaluationError(EmberError):
    """Evaluation cannot proceed, e.g. ROC requested on single-class data."""


class CheckpointError(EmberError):
    """A checkpoint directory is missing, incomplete, or incompatible."""


class TrainingDivergedError(EmberError):
    """Training aborted on a non-finite loss."""

    def __init__(self, epoch, batch_index, value):
        self.epoch = epoch
        self.batch_index = batch_index
        super().__init__(
            f"non-finite loss ({value!r}) at epoch {epoch}, batch {batch_index}"
        )
