import numpy as np
import pytest

from zermelo import Chart, Surface, conformal_surface, gaussian_curvature, structural_constants
from zermelo.errors import DomainError, ValidationError
from zermelo.geometry import (
    FrameGeometry,
    builtin_surface,
    flat,
    frame_at,
    gaussian_curvature_conformal,
    metric_tensor,
    norm,
    sharp,
)


def test_flat_torus_is_flat(torus, rng):
    q = rng.uniform(0, 2 * np.pi, (2, 50))
    np.testing.assert_allclose(gaussian_curvature(torus, q), 0.0, atol=1e-15)
    c1, c2 = structural_constants(torus, q)
    assert np.all(c1 == 0) and np.all(c2 == 0)


def test_sphere_curvature_one(round_sphere, rng):
    q = rng.uniform(-3, 3, (2, 100))
    np.testing.assert_allclose(gaussian_curvature(round_sphere, q), 1.0, atol=1e-12)
    np.testing.assert_allclose(gaussian_curvature_conformal(round_sphere, q), 1.0, atol=1e-12)


def test_disk_curvature_minus_one(disk, rng):
    r = rng.uniform(0, 0.95, 100)
    a = rng.uniform(0, 2 * np.pi, 100)
    q = np.stack([r * np.cos(a), r * np.sin(a)])
    np.testing.assert_allclose(gaussian_curvature(disk, q), -1.0, atol=1e-10)


def test_structural_constants_of_conformal_frame(rng):
    # for e_i = exp(-f) d_i the bracket gives c1 = f_y exp(-f), c2 = -f_x exp(-f)
    surf = conformal_surface("0.2*sin(x)*cos(y)", (0, 2 * np.pi, 0, 2 * np.pi), True, True, 0)
    x, y = rng.uniform(0, 2 * np.pi, (2, 20))
    f = 0.2 * np.sin(x) * np.cos(y)
    fx, fy = 0.2 * np.cos(x) * np.cos(y), -0.2 * np.sin(x) * np.sin(y)
    c1, c2 = structural_constants(surf, np.stack([x, y]))
    np.testing.assert_allclose(c1, fy * np.exp(-f), atol=1e-14)
    np.testing.assert_allclose(c2, -fx * np.exp(-f), atol=1e-14)


def test_frame_curvature_matches_laplacian_formula(rng):
    surf = conformal_surface("0.3*sin(x) + 0.1*cos(2*y)", (0, 2 * np.pi, 0, 2 * np.pi), True, True, 0)
    q = rng.uniform(0, 2 * np.pi, (2, 50))
    np.testing.assert_allclose(gaussian_curvature(surf, q), gaussian_curvature_conformal(surf, q), atol=1e-13)


def test_generic_frame_curvature():
    # a rotated frame of the flat plane is still flat
    chart = Chart((-5, 5, -5, 5))
    surf = Surface.from_frame(("cos(x*y)", "sin(x*y)"), ("-sin(x*y)", "cos(x*y)"), chart)
    q = np.array([[0.3, -1.0, 2.0], [0.7, 0.2, -1.5]])
    np.testing.assert_allclose(gaussian_curvature(surf, q), 0.0, atol=1e-12)


def test_metric_flat_sharp_round_trip(round_sphere, rng):
    q = rng.uniform(-2, 2, (2, 10))
    v = rng.normal(size=(2, 10))
    np.testing.assert_allclose(sharp(round_sphere, q, flat(round_sphere, q, v)), v, rtol=1e-13)
    g = metric_tensor(round_sphere, q)
    lam = 2 / (1 + q[0] ** 2 + q[1] ** 2)
    np.testing.assert_allclose(g[:, 0, 0], lam**2, rtol=1e-13)
    np.testing.assert_allclose(g[:, 0, 1], 0.0, atol=1e-15)
    e1, e2 = frame_at(round_sphere, q)
    np.testing.assert_allclose(norm(round_sphere, q, e1), 1.0, rtol=1e-14)
    np.testing.assert_allclose(norm(round_sphere, q, e2), 1.0, rtol=1e-14)


def test_volume_density(round_sphere):
    geo = FrameGeometry(round_sphere, np.array([0.0, 1.0]), np.array([0.0, 0.0]))
    np.testing.assert_allclose(geo.volume_density, [4.0, 1.0], rtol=1e-14)


def test_domain_checks(disk, torus):
    with pytest.raises(DomainError):
        gaussian_curvature(disk, np.array([0.99, 0.2]))
    with pytest.raises(DomainError):
        gaussian_curvature(torus, np.array([np.nan, 0.0]))


def test_chart_validation():
    with pytest.raises(ValidationError):
        Chart((1, 0, 0, 1))
    with pytest.raises(ValidationError):
        Chart((0, np.inf, 0, 1), periodic_x=True)
    with pytest.raises(ValidationError):
        builtin_surface("klein_bottle")


def test_torus_wrap(torus):
    x, y = torus.chart.wrap(np.array([7.0, -1.0]), np.array([0.5, 13.0]))
    np.testing.assert_allclose(x, [7.0 - 2 * np.pi, 2 * np.pi - 1.0])
    np.testing.assert_allclose(y, [0.5, 13.0 - 4 * np.pi])


def test_frames_at_origin(round_sphere, disk, torus):
    for s in (round_sphere, disk):
        e1, e2 = frame_at(s, np.zeros(2))
        np.testing.assert_allclose(e1, [0.5, 0.0])
        np.testing.assert_allclose(e2, [0.0, 0.5])
    e1, e2 = frame_at(torus, np.array([1.0, 2.0]))
    np.testing.assert_array_equal(e1, [1.0, 0.0])


def test_sphere_structural_constants_at_unit_point(round_sphere):
    c1, c2 = structural_constants(round_sphere, np.array([1.0, 0.0]))
    assert c1 == pytest.approx(0.0, abs=1e-15)
    assert c2 == pytest.approx(1.0, rel=1e-14)


def test_structural_constants_match_numeric_commutator(rng):
    from zermelo.curvature import lie_bracket

    surf = conformal_surface("0.3*sin(x+2*y) - 0.2*cos(3*x)*sin(y)", (0, 2 * np.pi, 0, 2 * np.pi), True, True, 0)

    def field(i):
        def f(z):
            e = frame_at(surf, z[:2])[i]
            return np.stack([e[0], e[1], 0 * z[0]])
        return f

    q = rng.uniform(0, 2 * np.pi, (2, 50))
    z = np.vstack([q, np.zeros(50)])
    br = lie_bracket(field(0), field(1), z, 1e-3)[:2]
    c1, c2 = structural_constants(surf, q)
    e1, e2 = frame_at(surf, q)
    assert np.max(np.abs(br - (c1 * e1 + c2 * e2))) < 1e-6


def test_frame_orthonormality(round_sphere, disk, rng):
    from zermelo.geometry import metric_pairing

    for s, q in ((round_sphere, rng.uniform(-3, 3, (2, 100))), (disk, rng.uniform(-0.6, 0.6, (2, 100)))):
        e1, e2 = frame_at(s, q)
        assert np.max(np.abs(metric_pairing(s, q, e1, e1) - 1)) < 1e-10
        assert np.max(np.abs(metric_pairing(s, q, e2, e2) - 1)) < 1e-10
        assert np.max(np.abs(metric_pairing(s, q, e1, e2))) < 1e-10


def test_norm_examples(torus, round_sphere):
    from zermelo.geometry import metric_pairing

    q = np.array([0.5, 0.5])
    assert metric_pairing(torus, q, np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0
    assert norm(torus, q, np.array([3.0, 4.0])) == pytest.approx(5.0)
    assert norm(round_sphere, np.zeros(2), np.array([1.0, 0.0])) == pytest.approx(2.0)
