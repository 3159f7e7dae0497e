"""Exception types shared across the workbench."""


class AoaLocError(Exception):
    """Base class for all workbench errors."""


class DegenerateGeometryError(AoaLocError):
    """Bearing or cost requested for coincident points."""


class IllConditionedGeometryError(AoaLocError):
    """Linear system is singular or numerically unusable."""


class InsufficientDataError(AoaLocError):
    """Fewer usable measurements than the estimator requires."""


class OutOfRegionError(AoaLocError):
    """A point falls outside the configured region or image."""


class TrajectoryFitError(AoaLocError):
    """No trajectory staying inside the region was found within the retry limit."""


class PgmFormatError(AoaLocError):
    """Malformed PGM input; carries the byte offset of the defect."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at byte {offset}")
        self.offset = offset
