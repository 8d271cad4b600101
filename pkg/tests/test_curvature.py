import numpy as np
import pytest

from conftest import sphere_states, torus_states
from zermelo import CoZermeloProblem, DriftSpec, FiberPoint, ZermeloProblem, integrate_extremal, kappa_zermelo
from zermelo.curvature import (
    CurvatureField,
    check_magnetic_lie_term,
    cozermelo_parts,
    flow_derivatives_of_phi,
    kappa_cozermelo,
    kappa_mag,
    lie_bracket,
    oracle,
    schwarzian,
)
from zermelo.errors import ValidationError

EPS = 0.3


def test_lie_bracket_of_coordinate_fields():
    A = lambda z: np.stack([np.ones_like(z[0]), 0 * z[0], 0 * z[0]])  # noqa: E731  d/dx
    B = lambda z: np.stack([0 * z[0], z[0] ** 2, np.sin(z[1])])  # noqa: E731
    p = np.array([[0.7], [0.2], [0.0]])
    # [A, B] = DB.A - DA.B = (0, 2x, 0)
    np.testing.assert_allclose(lie_bracket(A, B, p)[:, 0], [0, 1.4, 0], atol=1e-12)


def test_sphere_curvature_is_one(sphere_problem, rng):
    st = sphere_states(rng, 100)
    np.testing.assert_allclose(sphere_problem.curvature(st), 1.0, atol=1e-12)
    orc = oracle(sphere_problem, st)
    np.testing.assert_allclose(orc.kappa, 1.0, atol=1e-6)
    assert np.max(orc.purity) < 1e-6


def test_disk_curvature_is_minus_one(disk, rng):
    prob = CoZermeloProblem(disk, DriftSpec.form(0, 0))
    r, a = rng.uniform(0, 0.6, 30), rng.uniform(0, 2 * np.pi, 30)
    st = np.stack([r * np.cos(a), r * np.sin(a), rng.uniform(0, 2 * np.pi, 30)])
    np.testing.assert_allclose(prob.curvature(st), -1.0, atol=1e-10)
    np.testing.assert_allclose(oracle(prob, st).kappa, -1.0, atol=1e-6)


def test_magnetic_curvature_formula(torus, rng):
    d = DriftSpec.form(0, f"{EPS}*sin(x)")
    st = torus_states(rng, 100)
    x, th = st[0], st[2]
    ref = EPS**2 * np.cos(x) ** 2 + EPS * np.sin(th) * np.sin(x)
    np.testing.assert_allclose(kappa_mag(torus, d, st), ref, atol=1e-13)


def test_cozermelo_closed_form_matches_oracle(magnetic_torus, rng):
    st = torus_states(rng, 100)
    closed = magnetic_torus.curvature(st)
    orc = oracle(magnetic_torus, st)
    rel = np.abs(orc.kappa - closed) / np.maximum(np.abs(closed), 1.0)
    assert np.max(rel) < 1e-6
    assert np.max(orc.purity) < 1e-6


def test_cozermelo_on_curved_surface_matches_oracle(rng):
    from zermelo import conformal_surface

    surf = conformal_surface("0.2*cos(x)*sin(y)", (0, 2 * np.pi, 0, 2 * np.pi), True, True, 0)
    prob = CoZermeloProblem(surf, DriftSpec.form("0.2*cos(y)", "0.3*sin(x+y)"))
    st = torus_states(rng, 40)
    closed = prob.curvature(st)
    rel = np.abs(oracle(prob, st).kappa - closed) / np.maximum(np.abs(closed), 1.0)
    assert np.max(rel) < 1e-6


def test_constant_drift_is_flat(torus, rng):
    for c in (0.2, 0.5, 0.8):
        prob = CoZermeloProblem(torus, DriftSpec.form(c, 0))
        assert np.max(np.abs(prob.curvature(torus_states(rng, 200)))) < 1e-14


def test_schwarzian_matches_time_derivatives_along_flow(magnetic_torus):
    # S = phi phi''/2 - phi'^2/4 with derivatives in the co-Zermelo time
    start = FiberPoint(np.array([0.8, 0.3]), 1.1)
    from zermelo import SolverConfig

    traj = integrate_extremal(magnetic_torus.flow(), start, 2.0, SolverConfig(rtol=1e-13, atol=1e-13))
    t0, h = 1.0, 1e-2
    _, _, dense = traj.segment_at(t0)

    def phi_at(t):
        x, y, th = traj.segment_at(t)[2](t)
        return magnetic_torus.phi(x, y, th)

    f = np.array([phi_at(t0 + k * h) for k in (-2, -1, 0, 1, 2)])
    d1 = (f[0] - 8 * f[1] + 8 * f[3] - f[4]) / (12 * h)
    d2 = (-f[0] + 16 * f[1] - 30 * f[2] + 16 * f[3] - f[4]) / (12 * h * h)
    state = dense(t0)
    S_fd = f[2] * d2 / 2 - d1 * d1 / 4
    assert schwarzian(magnetic_torus.surface, magnetic_torus.drift, state) == pytest.approx(S_fd, abs=1e-5)
    l1, l2 = flow_derivatives_of_phi(magnetic_torus.surface, magnetic_torus.drift, state)
    assert l1 == pytest.approx(d1, abs=1e-7)
    assert l2 == pytest.approx(d2, abs=1e-5)


def test_parts_are_consistent(magnetic_torus, rng):
    st = torus_states(rng, 20)
    parts = cozermelo_parts(magnetic_torus.surface, magnetic_torus.drift, st)
    np.testing.assert_allclose(parts["omega"], -EPS * np.cos(st[0]), atol=1e-15)
    np.testing.assert_allclose(parts["phi"], 1 + EPS * np.sin(st[0]) * np.sin(st[2]), atol=1e-15)
    np.testing.assert_allclose(
        parts["kappa_cozermelo"], kappa_cozermelo(magnetic_torus.surface, magnetic_torus.drift, st), rtol=1e-14
    )


def test_orientation_reversal(torus, rng):
    # reflecting y -> -y flips Omega and the fiber angle; the curvature is invariant
    a, b = "0.3*sin(x)*cos(y) + 0.1", "0.2*cos(x+2*y)"
    a_ref, b_ref = "0.3*sin(x)*cos(-y) + 0.1", "-0.2*cos(x-2*y)"
    P = CoZermeloProblem(torus, DriftSpec.form(a, b))
    Q = CoZermeloProblem(torus, DriftSpec.form(a_ref, b_ref))
    st = torus_states(rng, 50)
    mirrored = np.stack([st[0], -st[1], -st[2]])
    np.testing.assert_allclose(Q.curvature(st), P.curvature(mirrored), atol=1e-13)
    from zermelo import omega

    np.testing.assert_allclose(omega(torus, Q.drift, st[:2]), -omega(torus, P.drift, mirrored[:2]), atol=1e-14)


def test_magnetic_lie_term_self_test(magnetic_torus, round_sphere, rng):
    assert check_magnetic_lie_term(magnetic_torus.surface, magnetic_torus.drift, torus_states(rng, 50)) < 1e-8
    d = DriftSpec.from_chart(round_sphere, "form", "0.2*y*x/(1+x^2+y^2)", "0.1/(1+x^2)")
    assert check_magnetic_lie_term(round_sphere, d, sphere_states(rng, 50, 1.5)) < 1e-8


def test_zermelo_curvature_matches_its_own_oracle(torus, rng):
    prob = ZermeloProblem(torus, DriftSpec.vector("0.4 + 0.2*sin(y)", "0.1*cos(x)"))
    st = torus_states(rng, 20)
    closed = prob.curvature(st)
    orc = oracle(prob, st)
    rel = np.abs(orc.kappa - closed) / np.maximum(np.abs(closed), 1.0)
    assert np.max(rel) < 1e-5
    np.testing.assert_allclose(kappa_zermelo(torus, prob.drift, st), closed)


def test_curvature_field_kinds(magnetic_torus, rng):
    st = torus_states(rng, 10)
    assert np.all(CurvatureField.of(magnetic_torus, "gaussian")(st) == 0)
    np.testing.assert_allclose(
        CurvatureField.of(magnetic_torus, "magnetic")(st),
        kappa_mag(magnetic_torus.surface, magnetic_torus.drift, st),
    )
    np.testing.assert_allclose(
        CurvatureField.of(magnetic_torus, "oracle")(st), magnetic_torus.curvature(st), atol=1e-6
    )
    with pytest.raises(ValidationError):
        CurvatureField.of(magnetic_torus, "ricci")


def test_reparametrisation_identity(magnetic_torus, rng):
    st = torus_states(rng, 1000)
    s, d = magnetic_torus.surface, magnetic_torus.drift
    lhs = kappa_cozermelo(s, d, st) * magnetic_torus.phi(*st) ** 2 + schwarzian(s, d, st)
    assert np.max(np.abs(lhs - kappa_mag(s, d, st))) < 1e-8


def test_riemannian_reduction(rng):
    from zermelo import conformal_surface, gaussian_curvature

    surf = conformal_surface("0.3*sin(x)*cos(2*y)", (0, 2 * np.pi, 0, 2 * np.pi), True, True, 0)
    prob = CoZermeloProblem(surf, DriftSpec.form(0, 0))
    q = rng.uniform(0, 6, (2, 40))
    kg = gaussian_curvature(surf, q)
    for th in np.linspace(0, 2 * np.pi, 7):
        k = prob.curvature(np.vstack([q, np.full(40, th)]))
        assert np.max(np.abs(k - kg)) < 1e-8


def test_oracle_flat_zero_drift(torus, rng):
    prob = CoZermeloProblem(torus, DriftSpec.form(0, 0))
    assert np.max(np.abs(oracle(prob, torus_states(rng, 20)).kappa)) < 1e-6


def test_schwarzian_at_origin_from_flow(magnetic_torus):
    # centred differences around the fiber point (x, y, theta) = (0, 0, 0): integrate
    # backwards first with the negated field, then forwards through the point
    from zermelo import SolverConfig

    class Backwards:
        def __init__(self, base):
            self.base, self.surface, self.dim, self.names = base, base.surface, base.dim, base.names

        def __call__(self, t, y):
            return -self.base(t, y)

        def __getattr__(self, name):
            return getattr(self.base, name)

    cfg = SolverConfig(rtol=1e-13, atol=1e-13)
    h = 1e-2
    back = integrate_extremal(Backwards(magnetic_torus.flow()), np.zeros(3), 2 * h, cfg)
    fwd = integrate_extremal(magnetic_torus.flow(), back.final_state, 4 * h, cfg)

    def phi_at(t):
        x, y, th = fwd.states[-1] if t == fwd.t[-1] else fwd.segment_at(t)[2](t)
        return magnetic_torus.phi(x, y, th)

    f = np.array([phi_at(k * h) for k in range(5)])
    d1 = (f[0] - 8 * f[1] + 8 * f[3] - f[4]) / (12 * h)
    d2 = (-f[0] + 16 * f[1] - 30 * f[2] + 16 * f[3] - f[4]) / (12 * h * h)
    S_fd = f[2] * d2 / 2 - d1 * d1 / 4
    assert schwarzian(magnetic_torus.surface, magnetic_torus.drift, np.zeros(3)) == pytest.approx(S_fd, abs=1e-5)


def test_zermelo_curvature_examples(torus, rng):
    st = torus_states(rng, 20)
    flat = ZermeloProblem(torus, DriftSpec.vector(0.6, 0))
    assert np.max(np.abs(flat.curvature(st))) < 1e-12
    from zermelo import sphere

    zs = ZermeloProblem(sphere(), DriftSpec.vector(0, 0))
    np.testing.assert_allclose(zs.curvature(np.array([[0.3], [0.5], [1.0]])), 1.0, atol=1e-12)
