"""Control curvature of co-Zermelo and Zermelo problems.

Closed forms, at a fiber point ``(q, theta)`` of a co-Zermelo problem
``(g, Upsilon)`` with ``u = cos(theta) e1 + sin(theta) e2``:

* magnetic curvature
  ``kappa_mag = kappa_g + Omega^2 + sin(theta) L_e1 Omega - cos(theta) L_e2 Omega``;
* the magnetic field ``hm = u + (c1 cos(theta) + c2 sin(theta) + Omega) d/dtheta``
  is ``phi`` times the co-Zermelo field, and the reparametrisation correction is
  ``S = hm(hm phi) / (2 phi) - 3 (hm phi)^2 / (4 phi^2)``;
* ``kappa_coZ = (kappa_mag - S) / phi^2``.

All derivatives come from second-order jets of the frame and drift, so the
closed forms are exact up to rounding whenever the inputs are symbolic.

The independent oracle :func:`curvature_bracket_oracle` differentiates the
vector fields themselves with nested finite-difference Lie brackets and
decomposes ``[h, [v, h]]`` in the basis ``(v, h, [v, h])``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import jets
from .drift import DriftKind, omega_jet
from .errors import NumericalError, ValidationError
from .geometry import FrameGeometry, check_domain
from .hamiltonian import CoZermeloProblem, FiberPoint, ZermeloProblem

ORACLE_STEP = 1e-3
# 4th-order central difference weights for a first derivative
_D1 = ((-2, 1.0 / 12), (-1, -8.0 / 12), (1, 8.0 / 12), (2, -1.0 / 12))


class _Local:
    """Jets of the co-Zermelo quantities at a batch of fiber points."""

    def __init__(self, surface, drift, x, y, theta):
        self.geo = geo = FrameGeometry(surface, x, y)
        self.theta = th = jets.Jet.variable(np.asarray(theta, dtype=float), 2)
        self.c, self.s = jets.cos(th), jets.sin(th)
        u1, u2 = drift.jets(geo.x, geo.y, 2)
        self.phi = 1.0 + u1 * self.c + u2 * self.s
        self.omega = omega_jet(geo, drift)  # order 1
        c1, c2 = geo.c
        (e1x, e1y), (e2x, e2y) = geo.e
        # magnetic field hm = u + k d/dtheta, components as jets of order >= 1
        self.hm = (
            self.c * e1x + self.s * e2x,
            self.c * e1y + self.s * e2y,
            c1 * self.c + c2 * self.s + self.omega,
        )

    def kappa_mag(self):
        geo = self.geo
        lie = self.s.v * geo.along(0, self.omega).v - self.c.v * geo.along(1, self.omega).v
        return geo.kappa + self.omega.v**2 + lie

    def hm_phi(self):
        first = jets.derivative_along(self.phi, self.hm)  # order 1
        second = jets.derivative_along(first, self.hm)  # order 0
        return first.v, second.v

    def schwarzian(self):
        d1, d2 = self.hm_phi()
        p = self.phi.v
        return d2 / (2.0 * p) - 0.75 * d1 * d1 / (p * p)


def _unpack_state(state):
    if isinstance(state, FiberPoint):
        return state.q[0], state.q[1], state.theta
    if isinstance(state, (tuple, list)):
        return tuple(np.asarray(s, dtype=float) for s in state)
    state = np.asarray(state, dtype=float)
    return state[0], state[1], state[2]


def _local(surface, drift, state, check=True):
    if drift.kind is not DriftKind.FORM:
        raise ValidationError("co-Zermelo curvature needs a drift one-form")
    x, y, theta = _unpack_state(state)
    if check:
        check_domain(surface, x, y)
    return _Local(surface, drift, x, y, theta)


def _scalar(v):
    v = np.asarray(v, dtype=float)
    return float(v) if v.ndim == 0 else v


def kappa_mag(surface, drift_form, state):
    """Curvature of the magnetic flow of ``(g, Upsilon)`` at ``(q, theta)``."""
    return _scalar(_local(surface, drift_form, state).kappa_mag())


def magnetic_lie_term(surface, drift_form, state):
    """``sin(theta) L_e1 Omega - cos(theta) L_e2 Omega``."""
    loc = _local(surface, drift_form, state)
    g = loc.geo
    return _scalar(loc.s.v * g.along(0, loc.omega).v - loc.c.v * g.along(1, loc.omega).v)


def schwarzian(surface, drift_form, state):
    """Reparametrisation correction ``S(phi)`` of the co-Zermelo field."""
    return _scalar(_local(surface, drift_form, state).schwarzian())


def flow_derivatives_of_phi(surface, drift_form, state):
    """``(L_h phi, L_h^2 phi)`` along the co-Zermelo field ``h = hm / phi``."""
    loc = _local(surface, drift_form, state)
    d1, d2 = loc.hm_phi()
    p = loc.phi.v
    return _scalar(d1 / p), _scalar((d2 - d1 * d1 / p) / (p * p))


def kappa_cozermelo(surface, drift_form, state):
    """Control curvature ``(kappa_mag - S(phi)) / phi^2`` of the co-Zermelo problem."""
    loc = _local(surface, drift_form, state)
    p = loc.phi.v
    return _scalar((loc.kappa_mag() - loc.schwarzian()) / (p * p))


def kappa_cozermelo_state(problem: CoZermeloProblem, state):
    loc = _local(problem.surface, problem.drift, state, check=False)
    p = loc.phi.v
    return (loc.kappa_mag() - loc.schwarzian()) / (p * p)


def cozermelo_parts(surface, drift_form, state):
    """All closed-form pieces at once (``kappa_g``, ``Omega``, ``phi``, ``hm phi``, ...)."""
    loc = _local(surface, drift_form, state)
    d1, d2 = loc.hm_phi()
    p = loc.phi.v
    km = loc.kappa_mag()
    S = d2 / (2.0 * p) - 0.75 * d1 * d1 / (p * p)
    return {
        "kappa_g": np.broadcast_to(loc.geo.kappa, np.shape(km)),
        "omega": np.broadcast_to(loc.omega.v, np.shape(km)),
        "phi": p,
        "hm_phi": d1,
        "hm2_phi": d2,
        "kappa_mag": km,
        "schwarzian": S,
        "kappa_cozermelo": (km - S) / (p * p),
    }


# Zermelo curvature through the dual problem -------------------------------------


def _dual_of(problem: ZermeloProblem):
    dual = getattr(problem, "_dual_cache", None)
    if dual is None:
        from .duality import dualize_zermelo

        dual = dualize_zermelo(problem.surface, problem.drift, region=problem.region, validate=False)
        problem._dual_cache = dual
    return dual


def kappa_zermelo_state(problem: ZermeloProblem, state):
    dual = _dual_of(problem).problem
    x, y, theta = _unpack_state(state)
    q = np.stack(np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float)))
    lam = problem.covector_of(q, theta, check=False)
    th = dual.fiber_angle(q, lam)
    return kappa_cozermelo_state(dual, (q[0], q[1], th))


def kappa_zermelo(surface, drift_vector, state, region=None):
    """Curvature of the Zermelo problem ``(g, X)``, evaluated on its dual co-Zermelo problem."""
    problem = ZermeloProblem(surface, drift_vector, validate=False, region=region)
    x, y, _ = _unpack_state(state)
    check_domain(surface, x, y)
    return _scalar(kappa_zermelo_state(problem, state))


# bracket oracle -----------------------------------------------------------------


def _directional(F, p, direction, step):
    """``DF(p) . direction`` by a 4th-order central difference."""
    return sum(w * F(p + k * step * direction) for k, w in _D1) / step


def lie_bracket(A, B, p, step=ORACLE_STEP):
    """``[A, B](p) = DB . A - DA . B`` for vector fields on the (x, y, theta) chart."""
    return _directional(B, p, A(p), step) - _directional(A, p, B(p), step)


@dataclass
class OracleResult:
    kappa: np.ndarray
    residual_h: np.ndarray  # |coefficient on h| * |h|
    residual_transverse: np.ndarray  # |coefficient on [v, h]| * |[v, h]|
    scale: np.ndarray  # |kappa v|

    @property
    def purity(self):
        """Largest off-direction residual relative to ``max(|kappa v|, 1)``."""
        return np.maximum(self.residual_h, self.residual_transverse) / np.maximum(self.scale, 1.0)


def curvature_bracket_oracle(field_h: Callable, field_v: Callable, state, step=ORACLE_STEP):
    """Control curvature from ``[h, [v, h]] = kappa v`` by nested difference brackets.

    Parameters
    ----------
    field_h, field_v : callable
        Vector fields on the (x, y, theta) chart, mapping arrays of shape
        ``(3, N)`` to ``(3, N)``.
    state : array of shape (3,) or (3, N), or FiberPoint
    """
    if isinstance(state, FiberPoint):
        state = state.state
    p = np.asarray(state, dtype=float)
    scalar = p.ndim == 1
    p = p.reshape(3, -1)

    def W(z):
        return lie_bracket(field_v, field_h, z, step)

    with np.errstate(divide="raise", invalid="raise", over="raise"):
        try:
            h, v, w = field_h(p), field_v(p), W(p)
            target = lie_bracket(field_h, W, p, step)
        except FloatingPointError as exc:
            raise NumericalError(f"bracket oracle failed: {exc}") from None
    basis = np.stack([v, h, w], axis=-1)  # (3, N, 3)
    coef = np.linalg.solve(np.moveaxis(basis, 1, 0), np.moveaxis(target, 1, 0)[..., None])[..., 0]
    kappa = coef[:, 0]
    res_h = np.abs(coef[:, 1]) * np.linalg.norm(h, axis=0)
    res_t = np.abs(coef[:, 2]) * np.linalg.norm(w, axis=0)
    scale = np.abs(kappa) * np.linalg.norm(v, axis=0)
    if scalar:
        return OracleResult(float(kappa[0]), float(res_h[0]), float(res_t[0]), float(scale[0]))
    return OracleResult(kappa, res_h, res_t, scale)


def oracle(problem, state, step=ORACLE_STEP):
    """Bracket oracle applied to a problem's own field and vertical field."""
    return curvature_bracket_oracle(problem.field, problem.vertical_field, state, step)


def riemannian_fields(surface):
    """Geodesic field ``h_g`` and ``v_g = d/dtheta`` on the unit tangent bundle."""

    def h(z):
        geo = FrameGeometry(surface, z[0], z[1])
        c, s = np.cos(z[2]), np.sin(z[2])
        xd, yd = geo.chart_vector(c, s)
        c1, c2 = geo.c
        return np.stack(np.broadcast_arrays(xd, yd, c1.v * c + c2.v * s))

    def v(z):
        z = np.asarray(z, float)
        return np.stack([np.zeros_like(z[0]), np.zeros_like(z[0]), np.ones_like(z[0])])

    return h, v


def magnetic_lie_term_numeric(surface, drift_form, state, step=ORACLE_STEP):
    """``L_[h_g, v_g] Omega`` with the bracket taken numerically."""
    h, v = riemannian_fields(surface)
    p = np.asarray(state.state if isinstance(state, FiberPoint) else state, float).reshape(3, -1)
    b = lie_bracket(h, v, p, step)
    geo = FrameGeometry(surface, p[0], p[1])
    om = omega_jet(geo, drift_form)
    return b[0] * om.d[0] + b[1] * om.d[1]


def check_magnetic_lie_term(surface, drift_form, states, tol=1e-5):
    """Self-test: coordinate form of the magnetic Lie term vs the numeric commutator.

    Returns the maximum discrepancy; raises :class:`NumericalError` above ``tol``.
    """
    states = np.asarray(states, float).reshape(3, -1)
    a = np.atleast_1d(magnetic_lie_term(surface, drift_form, states))
    b = magnetic_lie_term_numeric(surface, drift_form, states)
    err = float(np.max(np.abs(a - b)))
    if err > tol:
        raise NumericalError(f"magnetic Lie term disagrees with its commutator by {err:.3g}")
    return err


@dataclass
class CurvatureField:
    """Curvature evaluator on fiber points; ``kind`` in gaussian|magnetic|cozermelo|oracle."""

    kind: str
    evaluator: Callable

    def __call__(self, state):
        return self.evaluator(state)

    @classmethod
    def of(cls, problem, kind="cozermelo"):
        s, d = problem.surface, problem.drift
        if kind == "gaussian":
            def ev(st):
                x, y, th = _unpack_state(st)
                k = FrameGeometry(s, x, y).kappa
                return np.broadcast_to(k, np.broadcast(x, y, th).shape) + 0.0
        elif kind == "magnetic":
            def ev(st):
                return _local(s, d, st).kappa_mag()
        elif kind == "cozermelo":
            def ev(st):
                return problem.curvature(st)
        elif kind == "oracle":
            def ev(st):
                return oracle(problem, st).kappa
        else:
            raise ValidationError(f"unknown curvature kind {kind!r}")
        return cls(kind, ev)
