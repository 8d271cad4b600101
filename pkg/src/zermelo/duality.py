"""Exchange between Zermelo problems (g, X) and co-Zermelo problems (g~, Upsilon~).

With ``s = 1 - |X|^2`` and the frame ``(e1^X, e2^X)`` rotated onto the drift,
the dual metric has the orthonormal frame

    e~1 = s e1^X,    e~2 = sqrt(s) e2^X,

and the dual drift is ``Upsilon~ = -|X| e~1*``, i.e. frame components
``(-|X|, 0)``. The converse map undoes this construction. Both directions keep
the Hamiltonian (hence the level set H and the extremal flow) unchanged; the
construction is certified numerically by :func:`verify_duality`.

The dual frame is generally not conformal, so the dual surface is stored as a
frame field. When all inputs are symbolic the dual frame is symbolic as well.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import minimize

from .drift import DriftKind, DriftSpec, sample_points
from .errors import ValidationError
from .fields import ZERO, compose
from .geometry import Surface, check_domain, metric_pairing, norm, split_points
from .hamiltonian import CoZermeloProblem, ZermeloProblem

MIN_DRIFT_NORM = 1e-6


@dataclass
class DualProblem:
    """Result of a duality transform.

    ``source`` is the original problem, ``problem`` the dual one. ``surface_tilde``
    and ``drift_tilde`` are the dual metric (as a frame field) and drift.
    """

    source: object
    problem: object
    diagnostics: dict = field(default_factory=dict)

    @property
    def surface_tilde(self):
        return self.problem.surface

    @property
    def drift_tilde(self):
        return self.problem.drift

    def ellipse(self, q):
        """Ellipse parameters ``a = 1/s``, ``b = 1/sqrt(s)``, ``c = |X|/s`` at ``q``."""
        x, y, scalar = split_points(q)
        n = self.source.drift.norm(x, y)
        s = 1.0 - n * n
        out = {"a": 1.0 / s, "b": 1.0 / np.sqrt(s), "c": n / s}
        return {k: (float(v) if scalar else v) for k, v in out.items()}

    def drift_norm_tilde(self, q):
        """``|drift~|`` measured by the dual metric, from chart components."""
        x, y, scalar = split_points(q)
        d = self.drift_tilde
        surf = self.surface_tilde
        a1, a2 = d.components(x, y)
        (e1x, e1y), (e2x, e2y) = surf.frame_jets(x, y, 0)
        if d.kind is DriftKind.FORM:
            det = e1x.v * e2y.v - e1y.v * e2x.v
            # chart covector a1 e1* + a2 e2*
            cov = np.stack(np.broadcast_arrays(
                (a1 * e2y.v - a2 * e1y.v) / det, (-a1 * e2x.v + a2 * e1x.v) / det
            ))
            return norm(surf, np.stack([x, y]), cov, covector=True)
        vec = np.stack(np.broadcast_arrays(a1 * e1x.v + a2 * e2x.v, a1 * e1y.v + a2 * e2y.v))
        return norm(surf, np.stack([x, y]), vec)

    def metric_pairing(self, q, a, b, covector=False):
        return metric_pairing(self.surface_tilde, q, a, b, covector)


def _require_nonvanishing(surface, drift, region, what):
    if drift.is_identically_zero():
        return True
    x, y = sample_points(surface.chart, 128, region)
    n = drift.norm(x, y)
    i = np.unravel_index(np.argmin(n), n.shape)
    # isolated zeros fall between grid nodes; polish the grid minimum locally
    start = np.array([x[i], y[i]])
    box = region if region is not None else surface.chart.domain
    bounds = [(lo, hi) if np.isfinite([lo, hi]).all() else (None, None)
              for lo, hi in ((box[0], box[1]), (box[2], box[3]))]
    res = minimize(lambda z: float(drift.norm(z[0], z[1]) ** 2), start, method="Nelder-Mead",
                   bounds=bounds, options={"xatol": 1e-10, "fatol": 1e-16, "maxiter": 400})
    zx, zy, zmin = float(x[i]), float(y[i]), float(n[i])
    if surface.chart.contains(*res.x) and np.sqrt(res.fun) < zmin:
        zx, zy, zmin = float(res.x[0]), float(res.x[1]), float(np.sqrt(res.fun))
    if zmin <= MIN_DRIFT_NORM:
        raise ValidationError(
            f"{what} vanishes at ({zx:.6g}, {zy:.6g}) inside the working region; "
            "duality needs a nonvanishing or identically zero drift"
        )
    if np.max(n) >= 1.0:
        raise ValidationError(f"{what} violates the norm bound |drift| < 1")
    return False


def _rotated_frame_fields(surface, drift, sign=1.0):
    """Chart components of ``sign * e_i^D`` and ``s = 1 - |D|^2`` as fields."""
    e1x, e1y, e2x, e2y = surface.frame
    inputs = [drift.comp1, drift.comp2, e1x, e1y, e2x, e2y]

    def build(which, scale):
        def fn(ops, d1, d2, p, q, r, t):
            n = ops.sqrt(d1 * d1 + d2 * d2)
            s = 1 - (d1 * d1 + d2 * d2)
            k = sign * scale(ops, s) / n
            if which == "1x":
                return k * (d1 * p + d2 * r)
            if which == "1y":
                return k * (d1 * q + d2 * t)
            if which == "2x":
                return k * (-d2 * p + d1 * r)
            return k * (-d2 * q + d1 * t)
        return fn

    return build, inputs


def dualize_zermelo(surface, drift_vector, region=None, validate=True) -> DualProblem:
    """Co-Zermelo problem with the same Hamiltonian as the Zermelo pair ``(g, X)``."""
    if drift_vector.kind is not DriftKind.VECTOR:
        raise ValidationError("dualize_zermelo needs a drift vector field")
    source = ZermeloProblem(surface, drift_vector, validate=validate, region=region)
    zero = _require_nonvanishing(surface, drift_vector, region, "drift vector field")
    if zero:
        dual = CoZermeloProblem(surface, DriftSpec.form(ZERO, ZERO, drift_vector.norm_margin),
                                validate=False, region=region)
        return DualProblem(source, dual, {"identity": True})
    build, inputs = _rotated_frame_fields(surface, drift_vector)
    s1 = lambda ops, s: s  # noqa: E731
    s2 = lambda ops, s: ops.sqrt(s)  # noqa: E731
    frame = (
        compose(build("1x", s1), inputs, "e~1x"),
        compose(build("1y", s1), inputs, "e~1y"),
        compose(build("2x", s2), inputs, "e~2x"),
        compose(build("2y", s2), inputs, "e~2y"),
    )
    tilde = Surface(surface.chart, frame, None, f"dual({surface.name})")
    comp1 = compose(lambda ops, a, b: -ops.sqrt(a * a + b * b),
                    [drift_vector.comp1, drift_vector.comp2], "-|X|")
    drift_tilde = DriftSpec.form(comp1, ZERO, drift_vector.norm_margin)
    dual = CoZermeloProblem(tilde, drift_tilde, validate=False, region=region)
    return DualProblem(source, dual, {"identity": False})


def dualize_cozermelo(surface, drift_form, region=None, validate=True) -> DualProblem:
    """Zermelo problem with the same Hamiltonian as the co-Zermelo pair ``(g, Upsilon)``."""
    if drift_form.kind is not DriftKind.FORM:
        raise ValidationError("dualize_cozermelo needs a drift one-form")
    source = CoZermeloProblem(surface, drift_form, validate=validate, region=region)
    zero = _require_nonvanishing(surface, drift_form, region, "drift one-form")
    if zero:
        dual = ZermeloProblem(surface, DriftSpec.vector(ZERO, ZERO, drift_form.norm_margin),
                              validate=False, region=region)
        return DualProblem(source, dual, {"identity": True})
    build, inputs = _rotated_frame_fields(surface, drift_form, sign=-1.0)
    s1 = lambda ops, s: 1 / s  # noqa: E731
    s2 = lambda ops, s: 1 / ops.sqrt(s)  # noqa: E731
    frame = (
        compose(build("1x", s1), inputs, "e~1x"),
        compose(build("1y", s1), inputs, "e~1y"),
        compose(build("2x", s2), inputs, "e~2x"),
        compose(build("2y", s2), inputs, "e~2y"),
    )
    tilde = Surface(surface.chart, frame, None, f"dual({surface.name})")
    comp1 = compose(lambda ops, a, b: ops.sqrt(a * a + b * b),
                    [drift_form.comp1, drift_form.comp2], "|Upsilon|")
    drift_tilde = DriftSpec.vector(comp1, ZERO, drift_form.norm_margin)
    dual = ZermeloProblem(tilde, drift_tilde, validate=False, region=region)
    return DualProblem(source, dual, {"identity": False})


def dualize(problem, region=None) -> DualProblem:
    if isinstance(problem, ZermeloProblem):
        return dualize_zermelo(problem.surface, problem.drift, region or problem.region, validate=False)
    return dualize_cozermelo(problem.surface, problem.drift, region or problem.region, validate=False)


def default_region(chart):
    """Sub-rectangle of the chart used for random sampling."""
    x0, x1, y0, y1 = chart.domain
    if chart.pole_compactification:
        return (-2.0, 2.0, -2.0, 2.0)
    if chart.disk:
        h = 0.5 * min(x1 - x0, y1 - y0) * 0.65
        cx, cy = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
        return (cx - h, cx + h, cy - h, cy + h)
    if not np.isfinite(chart.domain).all():
        raise ValidationError("unbounded chart needs an explicit sampling region")
    g = chart.guard
    return (x0 + g, x1 - g, y0 + g, y1 - g)


@dataclass
class DualityReport:
    max_abs_error: float
    worst_point: Optional[dict]
    n_samples: int
    tol: float

    @property
    def passed(self):
        return bool(self.max_abs_error < self.tol)

    def as_dict(self):
        return {
            "max_abs_error": self.max_abs_error,
            "worst_point": self.worst_point,
            "n_samples": self.n_samples,
            "tol": self.tol,
            "passed": self.passed,
        }


def random_covectors(rng, region, n, pmin=0.1, pmax=10.0):
    x0, x1, y0, y1 = region
    q = np.stack([rng.uniform(x0, x1, n), rng.uniform(y0, y1, n)])
    r = rng.uniform(pmin, pmax, n)
    a = rng.uniform(0.0, 2.0 * np.pi, n)
    return q, np.stack([r * np.cos(a), r * np.sin(a)])


def verify_duality(pair, n_samples=1000, tol=1e-9, seed=0, region=None) -> DualityReport:
    """Compare the Hamiltonians of two problems at random covectors.

    ``pair`` is a :class:`DualProblem` or a ``(problem_a, problem_b)`` tuple.
    Covectors have chart points uniform in ``region`` and chart components
    with Euclidean length uniform in ``[0.1, 10]``.
    """
    if isinstance(pair, DualProblem):
        a, b = pair.source, pair.problem
    else:
        a, b = pair
    region = region or a.region or default_region(a.surface.chart)
    rng = np.random.default_rng(seed)
    q, p = random_covectors(rng, region, n_samples)
    check_domain(a.surface, q[0], q[1])
    err = np.abs(a.hamiltonian((q, p)) - b.hamiltonian((q, p)))
    i = int(np.argmax(err))
    worst = {"q": [float(q[0, i]), float(q[1, i])], "p": [float(p[0, i]), float(p[1, i])]}
    return DualityReport(float(err[i]), worst, int(n_samples), float(tol))
