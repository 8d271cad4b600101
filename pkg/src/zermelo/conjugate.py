"""Jacobi curves along extremals: Hill equations, conjugate times, Riccati limit.

Along an extremal the Jacobi curve is ``t -> (beta : gamma)`` where ``beta``
and ``gamma`` solve the Hill equation ``x'' + kappa_t x = 0`` with
``beta(0) = 1, beta'(0) = 0`` and ``gamma(0) = 0, gamma'(0) = 1``. A conjugate
time is a positive zero of ``gamma``. Without conjugate points the chart
coordinate ``y_t = beta / gamma`` decreases and its limit estimates ``y+``.

The Hill equations are appended to the extremal state and integrated with the
same adaptive steps, so ``kappa_t`` is evaluated exactly on the trajectory.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ValidationError
from .geometry import Chart, Surface
from .hamiltonian import (
    CoZermeloProblem,
    ExtremalTrajectory,
    FiberFlow,
    SolverConfig,
    integrate_extremal,
)
from .drift import DriftSpec

T_MIN = 1e-6
BISECT_TOL = 1e-10
# monotonicity of y_t is judged up to this relative rounding allowance
MONOTONE_RTOL = 1e-9


class HillFlow:
    """Extremal flow augmented with ``(beta, beta', gamma, gamma')``."""

    def __init__(self, base):
        self.base = base
        self.problem = base.problem
        self.surface = base.surface
        self.dim = base.dim + 4
        self.names = tuple(base.names) + ("beta", "beta_dot", "gamma", "gamma_dot")

    def __call__(self, t, y):
        n = self.base.dim
        k = float(self.problem.curvature(self.base.fiber_state(y[:n])))
        b, bd, g, gd = y[n:]
        return np.concatenate([self.base(t, y[:n]), [bd, -k * b, gd, -k * g]])

    def level_residual(self, y):
        return self.base.level_residual(y[: self.base.dim])

    def fiber_state(self, y):
        return self.base.fiber_state(y[: self.base.dim])

    @property
    def can_recenter(self):
        return getattr(self.base, "can_recenter", False)

    def recenter(self, y):
        y = np.array(y, dtype=float)
        y[: self.base.dim] = self.base.recenter(y[: self.base.dim])
        return y

    def start_state(self, start):
        return np.concatenate([self.base.start_state(start), [1.0, 0.0, 0.0, 1.0]])


@dataclass
class JacobiArc:
    along: ExtremalTrajectory
    t: np.ndarray
    beta: np.ndarray
    beta_dot: np.ndarray
    gamma: np.ndarray
    gamma_dot: np.ndarray
    offset: int = field(default=3, repr=False)

    @property
    def wronskian(self):
        return self.beta * self.gamma_dot - self.beta_dot * self.gamma

    @property
    def wronskian_drift(self):
        """``max |beta gamma' - beta' gamma - 1|``."""
        return float(np.max(np.abs(self.wronskian - 1.0)))

    @property
    def wronskian_drift_relative(self):
        """Wronskian drift relative to the size of the products forming it.

        For exponentially growing solutions ``beta gamma'`` and ``beta' gamma``
        are huge and nearly equal; their difference can only be resolved to
        rounding relative to their size.
        """
        scale = np.maximum(1.0, np.abs(self.beta * self.gamma_dot) + np.abs(self.beta_dot * self.gamma))
        return float(np.max(np.abs(self.wronskian - 1.0) / scale))

    def hill_at(self, t):
        """``(beta, beta', gamma, gamma')`` at time ``t`` from the dense output."""
        if t == self.t[-1]:
            return self.along.states[-1, self.offset:]
        t0, t1, dense = self.along.segment_at(t)
        return dense(t)[self.offset:]

    def riccati_residual(self, kappa):
        """``dy/dt + y^2 + kappa`` with ``dy/dt = -W / gamma^2`` (valid for constant kappa)."""
        with np.errstate(divide="ignore", invalid="ignore"):
            y = self.beta / self.gamma
            return -self.wronskian / self.gamma**2 + y * y + kappa


def _arc(traj, base_dim):
    s = traj.states
    return JacobiArc(traj, traj.t, s[:, base_dim], s[:, base_dim + 1], s[:, base_dim + 2],
                     s[:, base_dim + 3], base_dim)


def _flow_of(problem, flow):
    if flow is not None:
        return flow
    return problem.flow()


def jacobi_solve(problem, start, T, config: Optional[SolverConfig] = None, flow=None) -> JacobiArc:
    """Integrate the extremal and both Hill equations over ``[0, T]``."""
    base = _flow_of(problem, flow)
    traj = integrate_extremal(HillFlow(base), start, T, config)
    return _arc(traj, base.dim)


@dataclass
class ConjugateReport:
    first_conjugate_time: Optional[float]
    bracket: Optional[tuple] = None
    gamma_bracket: Optional[tuple] = None
    gamma_at_root: Optional[float] = None
    t_max: float = 0.0
    steps: int = 0

    def as_dict(self):
        return {
            "first_conjugate_time": self.first_conjugate_time,
            "bracket": list(self.bracket) if self.bracket else None,
            "gamma_bracket": list(self.gamma_bracket) if self.gamma_bracket else None,
            "gamma_at_root": self.gamma_at_root,
            "t_max": self.t_max,
            "steps": self.steps,
        }


def _bisect(fn, a, b, fa, tol=BISECT_TOL):
    while b - a > tol:
        m = 0.5 * (a + b)
        fm = fn(m)
        if fm == 0.0:
            return m, m
        if np.sign(fm) == np.sign(fa):
            a, fa = m, fm
        else:
            b = m
    return a, b


def first_conjugate_time(problem, start, T_max, config: Optional[SolverConfig] = None,
                         flow=None, t_min=T_MIN) -> ConjugateReport:
    """First sign change of ``gamma`` on ``(t_min, T_max]``, refined by bisection."""
    base = _flow_of(problem, flow)
    hill = HillFlow(base)
    gi = base.dim + 2
    found = {}

    def observer(t0, t1, y0, y1, dense):
        # probe a few interior points too, so a double crossing inside a step is not missed
        ts = np.linspace(t0, t1, 6)
        gs = [y0[gi]] + [dense(s)[gi] for s in ts[1:-1]] + [y1[gi]]
        for a, b, ga, gb in zip(ts[:-1], ts[1:], gs[:-1], gs[1:]):
            if b <= t_min:
                continue
            if a < t_min:
                a, ga = t_min, dense(t_min)[gi]
            if ga > 0 and gb <= 0 or ga < 0 and gb >= 0:
                lo, hi = _bisect(lambda s: dense(s)[gi], a, b, ga)
                found.update(bracket=(lo, hi), gammas=(dense(lo)[gi], dense(hi)[gi]),
                             root=0.5 * (lo + hi), groot=dense(0.5 * (lo + hi))[gi])
                return True
        return False

    traj = integrate_extremal(hill, start, T_max, config, observer=observer)
    steps = traj.solver_stats["accepted_steps"]
    if not found:
        return ConjugateReport(None, t_max=float(T_max), steps=steps)
    return ConjugateReport(
        float(found["root"]),
        tuple(map(float, found["bracket"])),
        tuple(map(float, found["gammas"])),
        float(found["groot"]),
        float(T_max),
        steps,
    )


@dataclass
class RiccatiEstimate:
    estimate: float
    converged: bool
    tail_variation: float
    checkpoints: dict
    monotone: bool
    wronskian_drift: float
    wronskian_drift_relative: float

    def as_dict(self):
        return {
            "estimate": self.estimate,
            "converged": self.converged,
            "tail_variation": self.tail_variation,
            "checkpoints": {f"{k:.17g}": v for k, v in self.checkpoints.items()},
            "monotone": self.monotone,
            "wronskian_drift": self.wronskian_drift,
            "wronskian_drift_relative": self.wronskian_drift_relative,
        }


def riccati_yplus(problem, start, T, convergence_tol=1e-6, config=None, flow=None) -> RiccatiEstimate:
    """Estimate ``y+ = lim y_t`` from ``y_t = beta / gamma`` at ``T/2, 3T/4, T``.

    This is an estimator: ``converged`` only says that ``|y_T - y_{3T/4}|`` is
    below ``convergence_tol``.

    Raises
    ------
    ValidationError
        ``gamma`` vanishes on ``(0, T]``, i.e. a conjugate point exists.
    """
    arc = jacobi_solve(problem, start, T, config, flow)
    late = arc.t > T_MIN
    if np.any(arc.gamma[late] <= 0):
        i = int(np.argmax(late & (arc.gamma <= 0)))
        raise ValidationError(f"conjugate point before t = {float(arc.t[i]):.6g}; y+ is undefined")
    ys = {}
    for tc in (0.5 * T, 0.75 * T, float(T)):
        b, _, g, _ = arc.hill_at(tc)
        if g <= 0:
            raise ValidationError(f"conjugate point before t = {tc:.6g}; y+ is undefined")
        ys[tc] = float(b / g)
    vals = list(ys.values())
    tol = [MONOTONE_RTOL * max(1.0, abs(v)) for v in vals]
    monotone = all(vals[i] > vals[i + 1] - tol[i] for i in range(len(vals) - 1))
    tail = abs(vals[-1] - vals[-2])
    return RiccatiEstimate(
        vals[-1], bool(tail < convergence_tol), float(tail), ys, bool(monotone),
        arc.wronskian_drift, arc.wronskian_drift_relative,
    )


class ConstantCurvatureProblem(CoZermeloProblem):
    """Straight lines in the plane carrying a prescribed constant curvature ``k``.

    A synthetic problem for exercising the Hill machinery: the extremals are
    those of the flat plane, but :meth:`curvature` returns ``k``.
    """

    def __init__(self, k):
        chart = Chart((-np.inf, np.inf, -np.inf, np.inf))
        plane = Surface.from_conformal(0, chart, name=f"constant_curvature({k:g})")
        super().__init__(plane, DriftSpec.form(0, 0), validate=False)
        self.k = float(k)

    def curvature(self, state):
        return np.full(np.shape(np.asarray(state, dtype=float)[0]), self.k)

    def flow(self):
        return FiberFlow(self)
