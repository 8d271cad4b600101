"""PMP Hamiltonians of the Zermelo and co-Zermelo problems and their extremal flows.

Covectors are passed in chart components ``p = (p1, p2)``; their frame
components are ``P_i = p(e_i)``. On the level surface ``H = {h = 1}`` the
co-Zermelo fiber over ``q`` is the unit circle translated by the drift,

    lambda(theta) = Upsilon + cos(theta) e1* + sin(theta) e2*,

and the Zermelo fiber is the polar curve

    lambda(theta) = rho(theta) (cos(theta) e1* + sin(theta) e2*),
    rho = 1 / (1 + X1 cos(theta) + X2 sin(theta)).

Flows on ``H`` are integrated in the coordinates ``(x, y, theta)``; the Zermelo
problem can also be integrated in canonical coordinates ``(x, y, p1, p2)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import DOP853
from scipy.optimize import brentq

from . import jets
from .drift import DriftKind, DriftSpec, omega_jet, validate_drift
from .errors import ChartExitError, NumericalError, ValidationError
from .geometry import FrameGeometry, Surface, check_domain

log = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi

# derivative steps for the numeric q-gradient of the Zermelo Hamiltonian
GRAD_STEP = 1e-3
_D1 = ((-2, 1.0 / 12), (-1, -8.0 / 12), (1, 8.0 / 12), (2, -1.0 / 12))


@dataclass(frozen=True)
class CotangentPoint:
    """Covector ``p`` (chart components) at chart point ``q``; arrays of shape (2, ...)."""

    q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "q", np.asarray(self.q, dtype=float))
        object.__setattr__(self, "p", np.asarray(self.p, dtype=float))
        if self.q.shape[0] != 2 or self.p.shape[0] != 2:
            raise ValidationError("q and p need leading dimension 2")


@dataclass(frozen=True)
class FiberPoint:
    """Point ``(q, theta)`` of the level surface in angle coordinates."""

    q: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "q", np.asarray(self.q, dtype=float))
        object.__setattr__(self, "theta", np.asarray(self.theta, dtype=float))
        if self.q.shape[0] != 2:
            raise ValidationError("q needs leading dimension 2")

    @property
    def state(self):
        return np.concatenate([self.q, self.theta[None]], axis=0)

    @classmethod
    def from_state(cls, state):
        state = np.asarray(state, dtype=float)
        return cls(state[:2], state[2])


@dataclass
class SolverConfig:
    rtol: float = 1e-10
    atol: float = 1e-10
    max_step: float = np.inf
    first_step: Optional[float] = None
    level_tol: float = 1e-8  # allowed max |h - 1| along a trajectory
    check_level: bool = True
    recenter_distance: float = 0.5  # chart units, only used by homogeneous surfaces

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol > 0):
            raise ValidationError("solver tolerances must be positive")


# Hamiltonians ------------------------------------------------------------------


def _frame_comps(surface, x, y, p1, p2):
    (e1x, e1y), (e2x, e2y) = surface.frame_jets(x, y, 0)
    return p1 * e1x.v + p2 * e1y.v, p1 * e2x.v + p2 * e2y.v


def _unpack(lam):
    if isinstance(lam, CotangentPoint):
        return lam.q, lam.p
    q, p = lam
    return np.asarray(q, float), np.asarray(p, float)


def _zermelo_value(surface, drift, x, y, p1, p2):
    P1, P2 = _frame_comps(surface, x, y, p1, p2)
    X1, X2 = drift.components(x, y)
    return P1 * X1 + P2 * X2 + np.hypot(P1, P2)


def _cozermelo_value(surface, drift, x, y, p1, p2):
    P1, P2 = _frame_comps(surface, x, y, p1, p2)
    U1, U2 = drift.components(x, y)
    a = P1 * U1 + P2 * U2
    s = 1.0 - (U1 * U1 + U2 * U2)
    if np.any(s <= 0):
        raise ValidationError("drift one-form violates |Upsilon| < 1")
    lam2 = P1 * P1 + P2 * P2
    root = np.sqrt(a * a + s * lam2)
    # (-a + root)/s loses digits when a > 0; use the conjugate form there
    with np.errstate(divide="ignore", invalid="ignore"):
        stable = np.where(a > 0, lam2 / (a + root), (root - a) / s)
    return np.where(lam2 == 0, 0.0, stable)


def h_zermelo(surface, drift_vector, lam):
    """``<lambda, X(q)> + |lambda|_g``."""
    q, p = _unpack(lam)
    check_domain(surface, q[0], q[1])
    out = _zermelo_value(surface, drift_vector, q[0], q[1], p[0], p[1])
    return float(out) if np.ndim(out) == 0 else out


def h_cozermelo(surface, drift_form, lam):
    """Positive root ``h`` of ``|lambda - h Upsilon|_g = h``."""
    q, p = _unpack(lam)
    check_domain(surface, q[0], q[1])
    out = _cozermelo_value(surface, drift_form, q[0], q[1], p[0], p[1])
    return float(out) if np.ndim(out) == 0 else out


# problems -------------------------------------------------------------------------


class _Problem:
    kind: DriftKind

    def __init__(self, surface: Surface, drift: DriftSpec, validate=True, region=None):
        if drift.kind is not self.kind:
            raise ValidationError(f"{type(self).__name__} needs a drift of kind {self.kind.value}")
        self.surface = surface
        self.drift = drift
        self.region = region
        self.max_drift_norm = validate_drift(surface, drift, region=region) if validate else None
        self.drift_free = drift.is_identically_zero()

    def __repr__(self):
        return f"{type(self).__name__}({self.surface.name})"

    def check(self, x, y):
        check_domain(self.surface, x, y)

    def level_residual(self, state):
        """``h - 1`` at an (x, y, theta) state array of shape (3, ...)."""
        q = state[:2]
        p = self.covector_of(q, state[2], check=False)
        return self.hamiltonian((q, p), check=False) - 1.0

    def to_fiber(self, q, p):
        """Normalise ``p`` to the level set and return its fiber angle."""
        h = self.hamiltonian((q, p))
        if np.any(~(h > 0)):
            raise ValidationError("covector has non-positive Hamiltonian")
        return FiberPoint(q, self.fiber_angle(q, np.asarray(p) / h))


class CoZermeloProblem(_Problem):
    """Time-optimal problem ``qdot = u / (1 + <Upsilon, u>)``, ``|u|_g = 1``."""

    kind = DriftKind.FORM

    def hamiltonian(self, lam, check=True):
        q, p = _unpack(lam)
        if check:
            self.check(q[0], q[1])
        return _cozermelo_value(self.surface, self.drift, q[0], q[1], p[0], p[1])

    def covector_of(self, q, theta, check=True):
        q = np.asarray(q, float)
        if check:
            self.check(q[0], q[1])
        geo = FrameGeometry(self.surface, q[0], q[1])
        U1, U2 = self.drift.components(q[0], q[1])
        p1, p2 = geo.chart_covector(U1 + np.cos(theta), U2 + np.sin(theta))
        return np.stack(np.broadcast_arrays(p1, p2))

    def fiber_angle(self, q, p):
        P1, P2 = _frame_comps(self.surface, q[0], q[1], p[0], p[1])
        U1, U2 = self.drift.components(q[0], q[1])
        return np.mod(np.arctan2(P2 - U2, P1 - U1), TWO_PI)

    def phi(self, x, y, theta):
        U1, U2 = self.drift.components(x, y)
        return 1.0 + U1 * np.cos(theta) + U2 * np.sin(theta)

    def field(self, state):
        """``(xdot, ydot, thetadot)`` at states of shape (3, ...)."""
        x, y, theta = (np.asarray(s, float) for s in state)
        geo = FrameGeometry(self.surface, x, y)
        c, s = np.cos(theta), np.sin(theta)
        U1, U2 = self.drift.components(x, y)
        ph = 1.0 + U1 * c + U2 * s
        c1, c2 = geo.c
        om = omega_jet(geo, self.drift).v if not self.drift_free else 0.0
        xd, yd = geo.chart_vector(c, s)
        td = c1.v * c + c2.v * s + om
        return np.stack(np.broadcast_arrays(xd / ph, yd / ph, td / ph))

    def vertical_field(self, state):
        x, y, theta = (np.asarray(s, float) for s in state)
        zero = np.zeros(np.broadcast(x, y, theta).shape)
        return np.stack([zero, zero, np.sqrt(self.phi(x, y, theta)) + zero])

    def flow(self):
        return FiberFlow(self)

    def curvature(self, state):
        from .curvature import kappa_cozermelo_state

        return kappa_cozermelo_state(self, state)


class ZermeloProblem(_Problem):
    """Time-optimal problem ``qdot = X(q) + u``, ``|u|_g <= 1``."""

    kind = DriftKind.VECTOR

    def hamiltonian(self, lam, check=True):
        q, p = _unpack(lam)
        if check:
            self.check(q[0], q[1])
        return _zermelo_value(self.surface, self.drift, q[0], q[1], p[0], p[1])

    def _rho(self, x, y, theta):
        X1, X2 = self.drift.components(x, y)
        return 1.0 / (1.0 + X1 * np.cos(theta) + X2 * np.sin(theta))

    def covector_of(self, q, theta, check=True):
        q = np.asarray(q, float)
        if check:
            self.check(q[0], q[1])
        geo = FrameGeometry(self.surface, q[0], q[1])
        r = self._rho(q[0], q[1], theta)
        p1, p2 = geo.chart_covector(r * np.cos(theta), r * np.sin(theta))
        return np.stack(np.broadcast_arrays(p1, p2))

    def fiber_angle(self, q, p):
        P1, P2 = _frame_comps(self.surface, q[0], q[1], p[0], p[1])
        return np.mod(np.arctan2(P2, P1), TWO_PI)

    def _h_raw(self, x, y, p1, p2):
        return _zermelo_value(self.surface, self.drift, x, y, p1, p2)

    def canonical_field(self, state):
        """``(xdot, ydot, p1dot, p2dot)``; ``dh/dq`` by 4th-order differences."""
        x, y, p1, p2 = (np.asarray(s, float) for s in state)
        geo = FrameGeometry(self.surface, x, y)
        P1, P2 = geo.frame_components(p1, p2)
        norm = np.hypot(P1, P2)
        if np.any(norm == 0):
            raise NumericalError("Zermelo Hamiltonian is not differentiable at p = 0")
        X1, X2 = self.drift.components(x, y)
        xd, yd = geo.chart_vector(X1 + P1 / norm, X2 + P2 / norm)
        hx = GRAD_STEP * np.maximum(1.0, np.abs(x))
        hy = GRAD_STEP * np.maximum(1.0, np.abs(y))
        dx = sum(w * self._h_raw(x + k * hx, y, p1, p2) for k, w in _D1) / hx
        dy = sum(w * self._h_raw(x, y + k * hy, p1, p2) for k, w in _D1) / hy
        return np.stack(np.broadcast_arrays(xd, yd, -dx, -dy))

    def field(self, state):
        """Flow on ``H`` in ``(x, y, theta)`` coordinates, derived from the canonical field."""
        x, y, theta = (np.asarray(s, float) for s in state)
        p = self.covector_of(np.stack([x, y]), theta, check=False)
        xd, yd, pd1, pd2 = self.canonical_field(np.stack([x, y, p[0], p[1]]))
        geo = FrameGeometry(self.surface, x, y)
        (e1x, e1y), (e2x, e2y) = geo.e
        P1, P2 = geo.frame_components(p[0], p[1])

        def rate(ex, ey):
            # d/dt <p, e_i> = <pdot, e_i> + <p, De_i . qdot>
            dex = jets.partial(ex, 0).v * xd + jets.partial(ex, 1).v * yd
            dey = jets.partial(ey, 0).v * xd + jets.partial(ey, 1).v * yd
            return pd1 * ex.v + pd2 * ey.v + p[0] * dex + p[1] * dey

        R1, R2 = rate(e1x, e1y), rate(e2x, e2y)
        td = (P1 * R2 - P2 * R1) / (P1 * P1 + P2 * P2)
        return np.stack(np.broadcast_arrays(xd, yd, td))

    def vertical_field(self, state):
        """``a d/dtheta`` with ``a^2 = det(lam, lam') / det(lam', lam'')`` on the fiber curve."""
        x, y, theta = (np.asarray(s, float) for s in state)
        X1, X2 = self.drift.components(x, y)
        c, s = np.cos(theta), np.sin(theta)
        D = 1.0 + X1 * c + X2 * s
        D1 = -X1 * s + X2 * c
        D2 = 1.0 - D
        rho = 1.0 / D
        r1 = -D1 / D**2
        r2 = 2.0 * D1**2 / D**3 - D2 / D**2
        a = np.sqrt(rho**2 / (2.0 * r1**2 - rho * r2 + rho**2))
        zero = np.zeros_like(a)
        return np.stack([zero, zero, a])

    def flow(self):
        return FiberFlow(self)

    def canonical_flow(self):
        return CanonicalFlow(self)

    def curvature(self, state):
        from .curvature import kappa_zermelo_state

        return kappa_zermelo_state(self, state)


def covector_of(problem, point: FiberPoint):
    """Chart covector on the level set ``H`` for a fiber point."""
    return problem.covector_of(point.q, point.theta)


def fiber_point_of(problem, lam) -> FiberPoint:
    q, p = _unpack(lam)
    return problem.to_fiber(q, p)


def cozermelo_field(surface, drift_form, state: FiberPoint):
    """``(qdot, thetadot)`` of the co-Zermelo Hamiltonian field."""
    problem = CoZermeloProblem(surface, drift_form, validate=False)
    problem.check(state.q[0], state.q[1])
    v = problem.field(state.state)
    return v[:2], v[2]


def zermelo_field_canonical(surface, drift_vector, lam):
    """``(qdot, pdot)`` of the canonical equations of ``h_zermelo``."""
    q, p = _unpack(lam)
    problem = ZermeloProblem(surface, drift_vector, validate=False)
    problem.check(q[0], q[1])
    v = problem.canonical_field(np.concatenate([q, p]))
    return v[:2], v[2:]


# flows and integration --------------------------------------------------------


class FiberFlow:
    """Extremal flow of a problem in ``(x, y, theta)`` coordinates."""

    names = ("x", "y", "theta")
    dim = 3

    def __init__(self, problem):
        self.problem = problem
        self.surface = problem.surface

    def __call__(self, t, y):
        return self.problem.field(y[:3])

    def level_residual(self, y):
        return self.problem.level_residual(y[:3])

    def fiber_state(self, y):
        return y[:3]

    @property
    def can_recenter(self):
        return self.problem.drift_free and self.surface.recenter is not None

    def recenter(self, y):
        y = np.array(y, dtype=float)
        y[0], y[1], y[2] = self.surface.recenter(y[0], y[1], y[2])
        return y

    def start_state(self, start):
        if isinstance(start, CotangentPoint):
            start = self.problem.to_fiber(start.q, start.p)
        if isinstance(start, FiberPoint):
            return start.state
        return np.asarray(start, dtype=float)


class CanonicalFlow:
    """Zermelo extremal flow in canonical coordinates ``(x, y, p1, p2)``."""

    names = ("x", "y", "p1", "p2")
    dim = 4
    can_recenter = False

    def __init__(self, problem: ZermeloProblem):
        self.problem = problem
        self.surface = problem.surface

    def __call__(self, t, y):
        return self.problem.canonical_field(y[:4])

    def level_residual(self, y):
        return self.problem.hamiltonian((y[:2], y[2:4]), check=False) - 1.0

    def fiber_state(self, y):
        theta = self.problem.fiber_angle(y[:2], y[2:4])
        return np.array([y[0], y[1], theta])

    def start_state(self, start):
        if isinstance(start, FiberPoint):
            p = self.problem.covector_of(start.q, start.theta)
            return np.concatenate([start.q, p])
        if isinstance(start, CotangentPoint):
            h = self.problem.hamiltonian((start.q, start.p))
            if not h > 0:
                raise ValidationError("start covector has non-positive Hamiltonian")
            return np.concatenate([start.q, start.p / h])
        return np.asarray(start, dtype=float)


@dataclass
class ExtremalTrajectory:
    """Accepted solver steps of an extremal.

    ``states`` has one row per time; coordinates are unwrapped (periodic
    coordinates and angles are wrapped only by :meth:`wrapped`). Rows after a
    recentering restart are expressed in the recentered chart position.
    """

    t: np.ndarray
    states: np.ndarray
    names: tuple
    h_residual: np.ndarray
    solver_stats: dict = field(default_factory=dict)
    segments: list = field(default_factory=list, repr=False)
    chart: object = field(default=None, repr=False)
    fiber_states: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def hamiltonian_drift(self):
        return float(np.max(np.abs(self.h_residual))) if len(self.h_residual) else 0.0

    @property
    def final_state(self):
        return self.states[-1]

    @property
    def samples(self):
        return [(float(t), FiberPoint(s[:2], s[2])) for t, s in zip(self.t, self.fiber_states)]

    def wrapped(self):
        """``(x, y, theta)`` rows with periodic coordinates and angles wrapped."""
        out = np.array(self.fiber_states, dtype=float)
        if self.chart is not None:
            out[:, 0], out[:, 1] = self.chart.wrap(out[:, 0], out[:, 1])
        out[:, 2] = np.mod(out[:, 2], TWO_PI)
        return out

    def segment_at(self, t):
        """Return ``(t0, t1, dense)`` of the accepted step containing ``t``."""
        for seg in self.segments:
            if seg[0] <= t <= seg[1]:
                return seg
        raise ValueError(f"time {t} not covered by the trajectory")


class _Counter:
    def __init__(self, fn):
        self.fn = fn
        self.n = 0

    def __call__(self, t, y):
        self.n += 1
        out = self.fn(t, y)
        if not np.all(np.isfinite(out)):
            raise NumericalError(f"non-finite vector field at t={t}")
        return out


def integrate_extremal(flow, start, T, config: Optional[SolverConfig] = None, observer=None):
    """Integrate ``flow`` from ``start`` over ``[0, T]`` with adaptive DOP853 steps.

    Parameters
    ----------
    flow : FiberFlow, CanonicalFlow or compatible
        Callable ``flow(t, y)`` with ``surface``, ``level_residual``,
        ``fiber_state`` and ``start_state``.
    start : FiberPoint, CotangentPoint or array
    T : float
        Final time (> 0).
    config : SolverConfig, optional
    observer : callable, optional
        ``observer(t0, t1, y0, y1, dense)`` after each accepted step; may
        return True to stop the integration early.

    Raises
    ------
    ChartExitError
        The base point came within the guard distance of the chart boundary.
    NumericalError
        Step-size underflow, non-finite field values, or level drift above
        ``config.level_tol``.
    """
    config = config or SolverConfig()
    if not T > 0:
        raise ValidationError("integration time must be positive")
    chart = flow.surface.chart
    y = np.array(flow.start_state(start), dtype=float)
    if y.shape != (flow.dim,):
        raise ValidationError(f"start state must have {flow.dim} components ({', '.join(flow.names)})")
    check_domain(flow.surface, y[0], y[1])
    if chart.boundary_distance(y[0], y[1]) <= chart.guard:
        raise ChartExitError("start lies inside the chart guard", 0.0, y)
    res0 = float(np.abs(flow.level_residual(y)))
    if res0 > 1e-9:
        raise ValidationError(f"start is off the level set h = 1 (residual {res0:.3g})")

    fun = _Counter(flow)
    ts, ys, res = [0.0], [y.copy()], [res0]
    segments = []
    accepted = rejected = restarts = dense_calls = 0
    t = 0.0
    stopped = False
    while t < T and not stopped:
        kw = {} if config.first_step is None else {"first_step": config.first_step}
        solver = DOP853(fun, t, y, T, rtol=config.rtol, atol=config.atol,
                        max_step=config.max_step, **kw)
        while solver.status == "running":
            t0, y0 = solver.t, solver.y.copy()
            n0 = fun.n
            msg = solver.step()
            attempts = (fun.n - n0) // 12
            if solver.status == "failed":
                raise NumericalError(f"integration failed at t={t0}: {msg}")
            accepted += 1
            rejected += max(attempts - 1, 0)
            n_dense = fun.n
            dense = solver.dense_output()
            dense_calls += fun.n - n_dense
            t1, y1 = solver.t, solver.y.copy()
            if chart.boundary_distance(y1[0], y1[1]) <= chart.guard:
                def gap(s):
                    z = dense(s)
                    return chart.boundary_distance(z[0], z[1]) - chart.guard
                tc = brentq(gap, t0, t1, xtol=1e-12) if gap(t0) > 0 else t0
                last = dense(tc)
                raise ChartExitError(
                    f"trajectory reached the chart guard of {flow.surface.name} at t={tc:.6g}",
                    tc, last,
                )
            segments.append((t0, t1, dense))
            ts.append(t1)
            ys.append(y1)
            res.append(float(np.abs(flow.level_residual(y1))))
            if observer is not None and observer(t0, t1, y0, y1, dense):
                stopped = True
                break
            if (
                getattr(flow, "can_recenter", False)
                and t1 < T
                and chart.boundary_distance(y1[0], y1[1]) < config.recenter_distance
            ):
                y = flow.recenter(y1)
                t = t1
                restarts += 1
                log.debug("recentred trajectory at t=%.6g", t1)
                break
        else:
            t = solver.t
            y = solver.y
        if solver.status == "finished":
            t = T

    h_res = np.asarray(res)
    stats = {
        "method": "DOP853",
        "accepted_steps": accepted,
        "rejected_steps": rejected,
        "nfev": fun.n,
        "dense_nfev": dense_calls,
        "restarts": restarts,
    }
    states = np.asarray(ys)
    fiber = np.array([flow.fiber_state(s) for s in states])
    traj = ExtremalTrajectory(
        np.asarray(ts), states, tuple(flow.names), h_res, stats, segments, chart, fiber
    )
    if config.check_level and traj.hamiltonian_drift > config.level_tol:
        raise NumericalError(
            f"level drift {traj.hamiltonian_drift:.3g} exceeds tolerance {config.level_tol:.3g}"
        )
    return traj
