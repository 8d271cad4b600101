import numpy as np
import pytest

from zermelo import (
    CoZermeloProblem,
    CotangentPoint,
    DriftSpec,
    ZermeloProblem,
    dualize,
    dualize_cozermelo,
    dualize_zermelo,
    integrate_extremal,
    verify_duality,
)
from zermelo.errors import ValidationError
from zermelo.geometry import metric_tensor


def test_flat_constant_drift(torus):
    pair = dualize_zermelo(torus, DriftSpec.vector(0.5, 0))
    rep = verify_duality(pair, 1000, 1e-10, seed=1)
    assert rep.passed and rep.max_abs_error < 1e-10
    q = np.array([[0.3, 2.0, 5.0], [1.0, 4.0, 0.2]])
    np.testing.assert_allclose(pair.drift_norm_tilde(q), 0.5, atol=1e-12)
    ell = pair.ellipse(q)
    np.testing.assert_allclose(ell["a"], 1 / 0.75)
    np.testing.assert_allclose(ell["b"], 1 / np.sqrt(0.75))
    np.testing.assert_allclose(ell["c"], 0.5 / 0.75)
    # dual metric: e~1 = 0.75 dx-direction, e~2 = sqrt(0.75) dy-direction
    g = metric_tensor(pair.surface_tilde, q)
    np.testing.assert_allclose(g[:, 0, 0], 1 / 0.75**2)
    np.testing.assert_allclose(g[:, 1, 1], 1 / 0.75)


def test_variable_drift_on_torus(torus):
    X = DriftSpec.vector("0.5 + 0.2*sin(y)", "0.1*cos(x)")
    pair = dualize_zermelo(torus, X)
    assert verify_duality(pair, 1000, 1e-9, seed=3).passed
    q = np.random.default_rng(0).uniform(0, 6, (2, 40))
    np.testing.assert_allclose(pair.drift_norm_tilde(q), X.norm(*q), atol=1e-12)


def test_sphere_cozermelo_round_trip(round_sphere):
    region = (0.5, 1.5, 0.5, 1.5)
    U = DriftSpec.from_chart(round_sphere, "form", "-0.3*y/(1+x^2+y^2)", "0.3*x/(1+x^2+y^2)")
    pair = dualize_cozermelo(round_sphere, U, region)
    assert verify_duality(pair, 300, 1e-9, region=region).passed
    back = dualize(pair.problem, region)
    assert isinstance(back.problem, CoZermeloProblem)
    rep = verify_duality((pair.source, back.problem), 300, 1e-9, region=region)
    assert rep.passed
    # the round trip recovers the original metric
    q = np.array([[0.6, 1.2], [1.4, 0.7]])
    np.testing.assert_allclose(metric_tensor(back.surface_tilde, q), metric_tensor(round_sphere, q), rtol=1e-12, atol=1e-15)


def test_dual_of_dual_metric_on_torus(torus):
    X = DriftSpec.vector("0.4*cos(y) + 0.2", "0.3")
    pair = dualize_zermelo(torus, X)
    back = dualize(pair.problem)
    assert isinstance(back.problem, ZermeloProblem)
    q = np.random.default_rng(5).uniform(0, 6, (2, 10))
    np.testing.assert_allclose(metric_tensor(back.surface_tilde, q), metric_tensor(torus, q), atol=1e-13)
    assert verify_duality((pair.source, back.problem), 500, 1e-9).passed


def test_zero_drift_is_identity(torus):
    pair = dualize_zermelo(torus, DriftSpec.vector(0, 0))
    assert pair.diagnostics["identity"]
    assert verify_duality(pair).max_abs_error < 1e-14


def test_vanishing_drift_rejected(torus):
    with pytest.raises(ValidationError, match="vanishes"):
        dualize_zermelo(torus, DriftSpec.vector("0.3*sin(x)", 0))


def test_kind_mismatch(torus):
    with pytest.raises(ValidationError):
        dualize_zermelo(torus, DriftSpec.form(0.3, 0))
    with pytest.raises(ValidationError):
        dualize_cozermelo(torus, DriftSpec.vector(0.3, 0))


def test_dual_extremals_coincide(torus):
    X = DriftSpec.vector("0.4 + 0.2*sin(y)", "0.15*cos(x)")
    pair = dualize_zermelo(torus, X)
    start = CotangentPoint(np.array([0.5, 1.0]), np.array([0.3, 1.1]))
    z = integrate_extremal(pair.source.canonical_flow(), start, 5.0)
    c = integrate_extremal(pair.problem.flow(), pair.problem.to_fiber(start.q, start.p), 5.0)
    ts = np.linspace(0, 5, 51)
    za = np.array([z.segment_at(t)[2](t)[:2] if t > 0 else z.states[0, :2] for t in ts])
    ca = np.array([c.segment_at(t)[2](t)[:2] if t > 0 else c.states[0, :2] for t in ts])
    assert np.max(np.abs(za - ca)) < 1e-6


def test_dual_coframe_for_constant_drift(torus):
    from zermelo.geometry import FrameGeometry

    c = 0.5
    pair = dualize_zermelo(torus, DriftSpec.vector(c, 0))
    q = np.array([[0.4, 3.0], [1.2, 2.2]])
    geo = FrameGeometry(pair.surface_tilde, q[0], q[1])
    (a11, a12), (a21, a22) = [[j.v for j in row] for row in geo.coframe]
    np.testing.assert_allclose(np.broadcast_to(a11, (2,)), 1 / (1 - c * c))
    np.testing.assert_allclose(np.broadcast_to(a22, (2,)), 1 / np.sqrt(1 - c * c))
    np.testing.assert_allclose(np.broadcast_to(a12, (2,)), 0, atol=1e-15)
    # Upsilon~ = -c dx / (1 - c^2) as a chart covector
    U1, U2 = pair.drift_tilde.components(q[0], q[1])
    chart = np.stack(geo.chart_covector(U1, U2))
    np.testing.assert_allclose(chart[0], -c / (1 - c * c))
    np.testing.assert_allclose(chart[1], 0, atol=1e-15)


def test_dual_metric_positive_definite(torus):
    pair = dualize_zermelo(torus, DriftSpec.vector("0.5 + 0.3*sin(x)*cos(y)", "0.2*cos(x)"))
    q = np.stack(np.meshgrid(np.linspace(0.1, 6, 30), np.linspace(0.1, 6, 30))).reshape(2, -1)
    assert np.all(np.linalg.eigvalsh(metric_tensor(pair.surface_tilde, q)) > 0)


def test_cozermelo_dual_norm(torus):
    c = 0.35
    pair = dualize_cozermelo(torus, DriftSpec.form(c, 0))
    q = np.array([[0.1, 4.0], [2.0, 5.0]])
    np.testing.assert_allclose(pair.drift_norm_tilde(q), c, atol=1e-12)
    assert verify_duality(pair, 1000, 1e-9).passed


def test_round_trip_hamiltonian(torus):
    X = DriftSpec.vector("0.45 + 0.1*cos(x)", "0.1*sin(y)")
    first = dualize_zermelo(torus, X)
    second = dualize_cozermelo(first.surface_tilde, first.drift_tilde)
    assert verify_duality((first.source, second.problem), 1000, 1e-9, seed=2).passed
