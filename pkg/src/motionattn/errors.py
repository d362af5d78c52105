"""Exception types shared across the package."""


class ShapeError(ValueError):
    """An operation was called with incompatible tensor dimensions."""


class DegenerateInputError(ValueError):
    """Input is too degenerate for the requested computation (e.g. all
    points coincide, or fewer than three correspondences for alignment)."""


class ConfigError(ValueError):
    """A run configuration file is malformed or violates the schema."""


class DataFormatError(RuntimeError):
    """A dataset file has a bad magic value, layout, or is otherwise
    unreadable."""


class CheckpointFormatError(DataFormatError):
    """A checkpoint file does not start with the expected magic bytes."""


class CheckpointVersionError(DataFormatError):
    """A checkpoint file carries an unsupported format version."""

    def __init__(self, found: int, expected: int):
        super().__init__(
            f"unsupported checkpoint version {found} (this build reads version {expected})"
        )
        self.found = found
        self.expected = expected


class CheckpointCorruptError(DataFormatError):
    """A checkpoint file is truncated or has trailing garbage."""


class TrainingDivergedError(RuntimeError):
    """Training produced a non-finite loss; raised with the step diagnostics."""
