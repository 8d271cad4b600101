import numpy as np
import pytest

from zermelo import DriftSpec, omega, phi, validate_drift
from zermelo.drift import drift_angle, rotated_frame, sample_points
from zermelo.errors import ValidationError
from zermelo.geometry import norm


def test_omega_of_sin_drift(torus, rng):
    eps = 0.3
    d = DriftSpec.form(0, f"{eps}*sin(x)")
    q = rng.uniform(0, 2 * np.pi, (2, 50))
    # d(eps sin x dy) = eps cos x dx^dy = -Omega dV
    np.testing.assert_allclose(omega(torus, d, q), -eps * np.cos(q[0]), atol=1e-15)


def test_exact_form_has_zero_omega(round_sphere, rng):
    # Upsilon = 0.1 d(x y) in chart components, converted to frame components
    d = DriftSpec.from_chart(round_sphere, "form", "0.1*y", "0.1*x")
    q = rng.uniform(-1, 1, (2, 30))
    np.testing.assert_allclose(omega(round_sphere, d, q), 0.0, atol=1e-13)


def test_omega_on_sphere_latitude_form(round_sphere):
    # the area form pulled back: Upsilon = a * (x dy - y dx) / (1+r^2) has
    # d Upsilon = 2a dx^dy/(1+r^2)^2 = (a/2) dV, so Omega = -a/2
    a = 0.2
    d = DriftSpec.from_chart(round_sphere, "form", f"-{a}*y/(1+x^2+y^2)", f"{a}*x/(1+x^2+y^2)")
    q = np.array([[0.1, 0.7, -1.2], [0.3, -0.4, 0.5]])
    np.testing.assert_allclose(omega(round_sphere, d, q), -a / 2, atol=1e-13)


def test_omega_requires_form(torus):
    with pytest.raises(ValidationError):
        omega(torus, DriftSpec.vector(0.1, 0), np.array([0.0, 0.0]))


def test_phi_values(torus):
    d = DriftSpec.form(0.3, 0.4)
    assert phi(torus, d, 0.0, np.array([1.0, 1.0])) == pytest.approx(1.3)
    assert phi(torus, d, np.pi / 2, np.array([1.0, 1.0])) == pytest.approx(1.4)
    assert phi(torus, d, np.arctan2(-0.4, -0.3), np.array([1.0, 1.0])) == pytest.approx(0.5)


def test_phi_rejects_strong_drift(torus):
    with pytest.raises(ValidationError):
        phi(torus, DriftSpec.form(1.2, 0), 0.0, np.array([1.0, 1.0]))


def test_validate_drift_reports_worst_point(torus):
    assert validate_drift(torus, DriftSpec.form(0, "0.5*sin(x)")) == pytest.approx(0.5, abs=1e-3)
    with pytest.raises(ValidationError, match=r"1\.1999.* at \("):
        validate_drift(torus, DriftSpec.form("1.2*cos(y)", 0))
    # the margin: 0.99 is inside the unit ball but above 1 - 0.02
    with pytest.raises(ValidationError):
        validate_drift(torus, DriftSpec.form(0.99, 0))


def test_vector_from_chart_has_right_norm(round_sphere, rng):
    # chart vector (1, 0) has norm 2/(1+r^2)
    d = DriftSpec.from_chart(round_sphere, "vector", "0.25*(1+x^2+y^2)", 0)
    x, y = rng.uniform(-2, 2, (2, 20))
    np.testing.assert_allclose(d.norm(x, y), 0.5, rtol=1e-14)


def test_rotated_frame_aligns_with_drift(torus):
    d = DriftSpec.vector("0.3*cos(y)+0.1", "0.2")
    q = np.array([[0.1, 2.0], [0.4, 3.0]])
    rf = rotated_frame(torus, d, q)
    X = np.stack(d.components(q[0], q[1]))
    n = np.hypot(*X)
    np.testing.assert_allclose(rf.e1X, X / n, rtol=1e-14)
    np.testing.assert_allclose(norm(torus, q, rf.e2X), 1.0, rtol=1e-14)
    np.testing.assert_allclose(np.sum(rf.e1X * rf.e2X, axis=0), 0.0, atol=1e-15)
    np.testing.assert_allclose(drift_angle(d, q), np.arctan2(X[1], X[0]))


def test_sample_points_stay_in_chart(round_sphere, disk, torus):
    for s in (round_sphere, disk, torus):
        x, y = sample_points(s.chart, 32)
        assert x.shape == (32, 32)
        assert np.all(s.chart.contains(x, y))


@pytest.mark.parametrize("comps, angle", [((0, 0), 0.0), ((0.3, 0), 0.0), ((0, 0.3), np.pi / 2)])
def test_drift_angle_examples(comps, angle):
    assert float(drift_angle(DriftSpec.vector(*comps), np.array([0.1, 0.2]))) == pytest.approx(angle)


def test_drift_angle_equivariance(rng):
    q = rng.uniform(0, 6, (2, 20))
    base = DriftSpec.vector("0.3*cos(y)+0.1", "0.2*sin(x)")
    a1, a2 = base.components(*q)
    for alpha in (0.4, 2.0, -1.3):
        ca, sa = np.cos(alpha), np.sin(alpha)
        rot = DriftSpec.vector(
            f"{ca}*(0.3*cos(y)+0.1) - {sa}*0.2*sin(x)", f"{sa}*(0.3*cos(y)+0.1) + {ca}*0.2*sin(x)"
        )
        diff = drift_angle(rot, q) - drift_angle(base, q) - alpha
        np.testing.assert_allclose(np.cos(diff), 1.0, atol=1e-12)


def test_drift_angle_reproduces_components(torus, rng):
    d = DriftSpec.vector("0.3*cos(y)+0.1", "0.2*sin(x)")
    q = rng.uniform(0, 6, (2, 30))
    th = drift_angle(d, q)
    a1, a2 = d.components(*q)
    n = np.hypot(a1, a2)
    np.testing.assert_allclose(np.cos(th) * n, a1, atol=1e-15)
    np.testing.assert_allclose(np.sin(th) * n, a2, atol=1e-15)


def test_exact_form_on_torus(torus, rng):
    # Upsilon = d(sin x cos y)
    d = DriftSpec.form("0.3*cos(x)*cos(y)", "-0.3*sin(x)*sin(y)")
    assert np.max(np.abs(omega(torus, d, rng.uniform(0, 6, (2, 200))))) < 1e-6


def test_phi_positive_on_grid(torus):
    d = DriftSpec.form("0.6*sin(x)*cos(y)", "0.5*cos(x+y)")
    g = np.meshgrid(*(np.linspace(0, 2 * np.pi, 64, endpoint=False),) * 3, indexing="ij")
    assert np.min(phi(torus, d, g[2], np.stack([g[0], g[1]]))) > 0


def test_phi_examples(torus):
    q = np.array([0.2, 0.3])
    assert phi(torus, DriftSpec.form(0, 0), 1.0, q) == 1.0
    assert phi(torus, DriftSpec.form(0.4, 0), 0.0, q) == pytest.approx(1.4)
    assert phi(torus, DriftSpec.form(0.4, 0), np.pi, q) == pytest.approx(0.6)


def test_validation_margin_example(torus):
    with pytest.raises(ValidationError):
        validate_drift(torus, DriftSpec.form("0.99*sin(x)", 0, norm_margin=0.05))
    assert validate_drift(torus, DriftSpec.form(0.5, 0)) == pytest.approx(0.5)
