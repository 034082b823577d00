"""Exception hierarchy and CLI exit codes.

Every failure mode raised by the toolkit derives from CalibrationError so
callers can catch one base class. The CLI maps each class to a distinct,
documented exit code (see EXIT_CODES and README).
"""

from __future__ import annotations


class CalibrationError(Exception):
    """Base class for all toolkit errors."""


class NonConvergence(CalibrationError):
    """Fixed-point undistortion failed to meet tolerance within the cap."""


class BehindCamera(CalibrationError):
    """A point has non-positive depth in the camera frame."""


class NotARotation(CalibrationError):
    """Matrix violates orthonormality beyond tolerance."""


class GimbalLock(CalibrationError):
    """Euler decomposition undefined: middle angle too close to 90 degrees."""


class DuplicateId(CalibrationError):
    """Feature ids must be unique within a set."""


class EmptyInput(CalibrationError):
    """An operation received an empty observation list."""


class InsufficientPoints(CalibrationError):
    """Fewer correspondences than the solver's minimum."""


class DegenerateConfiguration(CalibrationError):
    """Point configuration is rank-deficient (coplanar / collinear)."""


class InvalidMatrix(CalibrationError):
    """Projection matrix decomposition produced non-physical parameters."""


class RankDeficient(CalibrationError):
    """Distortion fit has no unique solution (all radii equal)."""


class NotConverged(CalibrationError):
    """Iterative refinement hit the iteration cap before the tolerances.

    Carries the solver diagnostics (final state and trace) in `result`.
    """

    def __init__(self, message: str, result=None):
        super().__init__(message)
        self.result = result


class DivergedBehindCamera(CalibrationError):
    """No refinement step keeps every point at positive depth."""


class MatchError(CalibrationError):
    """Feature ids differ between paired datasets."""


class ConfigInvalid(CalibrationError):
    """Configuration file failed validation; message names file/line/field."""


class DatasetInvalid(CalibrationError):
    """Dataset file failed schema validation; message names file/line."""


class PointBehindCamera(BehindCamera):
    """Simulated grid point has non-positive depth; message lists ids."""


class PointOutsideFrame(CalibrationError):
    """Simulated grid point projects outside the frame; message lists ids."""


# One documented exit code per error class. 0 = success, 1 = unexpected error.
EXIT_CODES: dict[type, int] = {
    ConfigInvalid: 2,
    DatasetInvalid: 3,
    MatchError: 4,
    InsufficientPoints: 5,
    DegenerateConfiguration: 6,
    NotConverged: 7,
    BehindCamera: 8,
    DuplicateId: 9,
    EmptyInput: 10,
    RankDeficient: 11,
    InvalidMatrix: 12,
    NonConvergence: 13,
    DivergedBehindCamera: 14,
    PointBehindCamera: 15,
    PointOutsideFrame: 16,
    GimbalLock: 17,
    NotARotation: 18,
}


def exit_code_for(exc: BaseException) -> int:
    """Exit code for an exception, walking the class hierarchy (1 if unknown)."""
    for cls in type(exc).__mro__:
        if cls in EXIT_CODES:
            return EXIT_CODES[cls]
    return 1
