"""Rotationally symmetric self-expanders of inverse mean curvature flow."""

from .asymptotics import Verdict, classify_end
from .errors import ImcfLabError
from .geometry import ExpanderParams, ProfileState
from .reports import ResidualReport
from .shooting import IntegratorConfig, TerminationCause, Trajectory, integrate, shoot_axis, sweep_bottle

__all__ = [
    "ExpanderParams", "ImcfLabError", "IntegratorConfig", "ProfileState", "ResidualReport",
    "TerminationCause", "Trajectory", "Verdict", "classify_end", "integrate", "shoot_axis",
    "sweep_bottle",
]
