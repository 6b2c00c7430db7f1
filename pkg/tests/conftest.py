import math

import numpy as np
import pytest

from imcf_lab.geometry import ExpanderParams
from imcf_lab.shooting import IntegratorConfig, TerminationCause, Trajectory, shoot_axis


@pytest.fixture(scope="session")
def hi():
    """Axis shot through (0, -1) with n = 2, C = 1, s_max = 200."""
    return shoot_axis(-1.0, ExpanderParams(2, 1.0))


@pytest.fixture(scope="session")
def hi_short():
    return shoot_axis(-1.0, ExpanderParams(2, 1.0), IntegratorConfig(s_max=40.0))


def exact_cylinder(n=2, rho=1.0, length=10.0, m=101):
    s = np.linspace(0.0, length, m)
    return Trajectory(
        s=s, r=np.full(m, rho), z=s - length / 2, theta=np.full(m, math.pi / 2),
        termination=TerminationCause.REACHED_S_MAX, params=ExpanderParams.cylinder(n),
    )


def exact_sphere(n=2, rho=1.0, m=101, margin=0.2):
    a = np.linspace(margin, math.pi - margin, m)
    return Trajectory(
        s=rho * a, r=rho * np.sin(a), z=-rho * np.cos(a), theta=a,
        termination=TerminationCause.AXIS_CAP, params=ExpanderParams.sphere(n),
    )
