import math

import numpy as np
import pytest
from scipy.interpolate import CubicSpline

from imcf_lab import flow
from imcf_lab.errors import CFLViolation, InsufficientTimeLevels, MeanCurvatureCollapse, WindowEscape
from imcf_lab.geometry import ExpanderParams


def cyl_flow(n=2, dt=1e-4, ds=1e-2, t_end=0.1, **kw):
    N = int(round(10.0 / ds)) + 1
    init = flow.cylinder_profile(1.0, (0.0, 10.0), N)
    return flow.imcf_flow(init, flow.FlowConfig(dt=dt, t_end=t_end, n_s=N, **kw), ExpanderParams.cylinder(n))


def sphere_flow(n=2, dt=1e-4, N=628, t_end=0.1, **kw):
    init = flow.sphere_profile(1.0, N)
    return flow.imcf_flow(init, flow.FlowConfig(dt=dt, t_end=t_end, n_s=N, **kw), ExpanderParams.sphere(n), closed=True)


@pytest.mark.parametrize("n", [2, 3])
def test_cylinder_radius_law(n):
    res = cyl_flow(n)
    assert flow.dilation_compare(res) <= 1e-5
    assert np.allclose(res.final.r, math.exp(0.1 / (n - 1)), atol=1e-5)


@pytest.mark.parametrize("n", [2, 3])
def test_sphere_radius_law(n):
    res = sphere_flow(n)
    assert flow.dilation_compare(res) <= 1e-5
    rad = np.hypot(res.final.r, res.final.z)
    assert np.max(np.abs(rad - math.exp(0.1 / n))) <= 1e-5


def test_cylinder_time_order_two():
    errs = [flow.dilation_compare(cyl_flow(dt=dt, ds=0.02, t_end=0.04)) for dt in (4e-4, 2e-4, 1e-4)]
    order = np.polyfit(np.log([4e-4, 2e-4, 1e-4]), np.log(errs), 1)[0]
    assert 1.8 <= order <= 2.2


def test_cylinder_evolution_residuals_small():
    res = cyl_flow(dt=1e-4, ds=0.05, t_end=0.05, probe_substeps=5)
    H, nu = flow.evolution_checks(res)
    sv = flow.support_variation_check(res)
    assert H.sup <= 1e-6 and nu.sup <= 1e-6 and sv.sup <= 1e-6


def test_sphere_evolution_residuals_shrink_with_ds():
    sups = []
    for N, dt, m in ((157, 8e-4, 1), (314, 2e-4, 2)):
        res = sphere_flow(dt=dt, N=N, t_end=0.0192, probe_substeps=m)
        sups.append(flow.evolution_checks(res)[0].sup)
    # second order in ds: halving ds quarters the residual
    assert sups[1] < sups[0] / 3


def test_probe_accuracy_option():
    res = sphere_flow(dt=2e-4, N=314, t_end=0.01, probe_substeps=2)
    for acc in (2, 4):
        H, nu = flow.evolution_checks(res, accuracy=acc)
        assert H.sup < 1e-4 and nu.sup < 1e-6
    with pytest.raises(ValueError):
        flow.evolution_checks(res, accuracy=3)


def test_mean_curvature_stays_positive_on_sphere():
    res = sphere_flow(t_end=0.05, snapshot_every=100)
    assert len(res.states) == 6
    assert all(np.all(st.H > 0) for st in res.states)


def test_cfl_violation():
    with pytest.raises(CFLViolation):
        cyl_flow(dt=1e-2, ds=1e-2, t_end=0.1)


def test_reversed_cylinder_collapses():
    init = flow.cylinder_profile(1.0, (0.0, 10.0), 101)[:, ::-1].copy()
    with pytest.raises(MeanCurvatureCollapse):
        flow.imcf_flow(init, flow.FlowConfig(dt=1e-4, t_end=0.01, n_s=101), ExpanderParams.cylinder(2))


def test_missing_probe():
    res = cyl_flow(t_end=0.01, ds=0.1)
    res.probes = []
    with pytest.raises(InsufficientTimeLevels):
        flow.evolution_checks(res)
    with pytest.raises(InsufficientTimeLevels):
        flow.support_variation_check(res)


def test_window_escape():
    res = cyl_flow(t_end=0.01, ds=0.1)
    # reference covering only a short stretch of the initial cylinder
    s = np.linspace(0.0, 1.0, 11)
    ref = CubicSpline(s, np.stack([np.ones_like(s), s]), axis=1)
    ref.domain = (0.0, 1.0)
    with pytest.raises(WindowEscape):
        flow.dilation_compare(res, reference=ref)


@pytest.mark.parametrize("kw", [
    {"dt": 0.0}, {"t_end": 0.0}, {"t_end": 1.0}, {"probe_substeps": 0},
    {"stages": 1}, {"n_s": 4}, {"window": (0.1, 0.5)}, {"window": (0.5, 0.5)},
])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        flow.FlowConfig(**kw)


def test_bad_initial_shape():
    with pytest.raises(ValueError):
        flow.imcf_flow(np.zeros((3, 10)), flow.FlowConfig(n_s=10), ExpanderParams.cylinder(2))


def test_snapshot_csv(tmp_path):
    res = cyl_flow(t_end=0.01, ds=0.5, snapshot_every=50)
    path = tmp_path / "flow.csv"
    res.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,i,r,z,H"
    assert len(lines) == 1 + len(res.states) * 21
    t, i, r, z, H = lines[-1].split(",")
    assert float(t) == pytest.approx(0.01) and int(i) == 20
    assert float(r) == res.final.r[-1]


def test_resample_uniform():
    a = np.linspace(0, 1, 50) ** 2
    y = np.stack([np.cos(a), np.sin(a)])
    out = flow.resample(y, closed=False)
    seg = np.hypot(*np.diff(out, axis=1))
    # chord-length parametrisation: uniform up to O(ds^2) relative
    assert np.ptp(seg) < 1e-3 * seg.mean()
    assert np.allclose(out[:, [0, -1]], y[:, [0, -1]], atol=1e-15)
