"""Exception hierarchy shared by all modules.

Names follow the failure they describe, so the CLI can report them verbatim.
"""


class ImcfLabError(Exception):
    """Base class for every error raised by the package."""


class WrongBranch(ImcfLabError):
    """Support function is non-negative where the physical branch needs psi < 0."""


class AxisSingular(ImcfLabError):
    """Evaluation requested at or across the rotation axis (r <= 0)."""


class ZeroMeanCurvature(ImcfLabError):
    pass


class InsufficientSmoothness(ImcfLabError):
    pass


class InvalidCap(ImcfLabError):
    pass


class NumericalFailure(ImcfLabError):
    pass


class EmptyGrid(ImcfLabError):
    pass


class NotAGraphTail(ImcfLabError):
    """Trajectory tail is not a graph over the axis (sin(theta) changes sign)."""


class WindowTooShort(ImcfLabError):
    pass


class NotASoliton(ImcfLabError):
    pass


class DegenerateRange(ImcfLabError):
    pass


class MeshTooCoarse(ImcfLabError):
    pass


class MeanCurvatureCollapse(ImcfLabError):
    pass


class CFLViolation(ImcfLabError):
    pass


class WindowEscape(ImcfLabError):
    pass


class InsufficientTimeLevels(ImcfLabError):
    pass
