"""Riemannian surfaces given by a chart and a g-orthonormal frame.

Built-in surfaces use conformal charts, metric ``exp(2 f) (dx^2 + dy^2)``, with
frame ``e1 = exp(-f) d/dx``, ``e2 = exp(-f) d/dy``. Dual metrics produced by
the duality construction are not conformal; they are stored directly as a
frame field, which is all the curvature machinery needs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import sympy as sp

from . import jets
from .errors import DomainError, ValidationError
from .expr import X, Y
from .fields import ZERO, Field, as_field, compose

TWO_PI = 2.0 * np.pi
GUARD_DISTANCE = 1e-3


@dataclass(frozen=True)
class Chart:
    """Coordinate domain ``[x0, x1] x [y0, y1]`` plus topology metadata.

    ``disk=True`` restricts the domain to the disk inscribed in the rectangle.
    ``pole_compactification=True`` marks a stereographic chart of the unit
    sphere: the domain is the whole plane and the missing point is at infinity.
    """

    domain: tuple = (0.0, TWO_PI, 0.0, TWO_PI)
    periodic_x: bool = False
    periodic_y: bool = False
    euler_characteristic: Optional[int] = None
    pole_compactification: bool = False
    disk: bool = False
    guard: float = GUARD_DISTANCE

    def __post_init__(self):
        x0, x1, y0, y1 = map(float, self.domain)
        object.__setattr__(self, "domain", (x0, x1, y0, y1))
        if not (x1 > x0 and y1 > y0):
            raise ValidationError(f"degenerate chart domain {self.domain}")
        if self.pole_compactification and np.isfinite([x0, x1, y0, y1]).any():
            raise ValidationError("a compactified (stereographic) chart covers the whole plane")
        if (self.periodic_x and not np.isfinite([x0, x1]).all()) or (
            self.periodic_y and not np.isfinite([y0, y1]).all()
        ):
            raise ValidationError("periodic directions need a finite period")

    @property
    def compact(self):
        if self.pole_compactification:
            return True
        return self.periodic_x and self.periodic_y

    @property
    def period(self):
        x0, x1, y0, y1 = self.domain
        return (x1 - x0, y1 - y0)

    def boundary_distance(self, x, y):
        """Distance (chart units; chordal on the sphere) to the edge of the chart."""
        x, y = np.asarray(x, float), np.asarray(y, float)
        x0, x1, y0, y1 = self.domain
        if self.pole_compactification:
            # chordal distance to the north pole of the unit sphere
            return 2.0 / np.sqrt(1.0 + x * x + y * y)
        if self.disk:
            cx, cy = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
            radius = 0.5 * min(x1 - x0, y1 - y0)
            return radius - np.hypot(x - cx, y - cy)
        dist = np.full(np.broadcast(x, y).shape, np.inf)
        if not self.periodic_x:
            dist = np.minimum(dist, np.minimum(x - x0, x1 - x))
        if not self.periodic_y:
            dist = np.minimum(dist, np.minimum(y - y0, y1 - y))
        return dist

    def contains(self, x, y):
        x, y = np.asarray(x, float), np.asarray(y, float)
        finite = np.isfinite(x) & np.isfinite(y)
        with np.errstate(invalid="ignore"):
            return finite & (self.boundary_distance(x, y) > 0)

    def wrap(self, x, y):
        x, y = np.asarray(x, float), np.asarray(y, float)
        x0, x1, y0, y1 = self.domain
        if self.periodic_x:
            x = x0 + np.mod(x - x0, x1 - x0)
        if self.periodic_y:
            y = y0 + np.mod(y - y0, y1 - y0)
        return x, y


@dataclass(frozen=True, eq=False)
class Surface:
    """A chart with a g-orthonormal frame ``(e1, e2)`` given in chart components.

    Attributes
    ----------
    frame : tuple of Field
        ``(e1x, e1y, e2x, e2y)``.
    conformal_factor : Field or None
        ``f`` when the metric is ``exp(2f)(dx^2 + dy^2)`` and the frame is the
        conformal one; enables the Laplacian curvature cross-check.
    recenter : callable or None
        ``recenter(x, y, theta) -> (x, y, theta)`` isometry used to move a
        drift-free trajectory back into the chart (homogeneous surfaces only).
    """

    chart: Chart
    frame: tuple
    conformal_factor: Optional[Field] = None
    name: str = "surface"
    recenter: Optional[Callable] = field(default=None, repr=False)

    @classmethod
    def from_conformal(cls, f, chart, name="conformal", recenter=None):
        f = as_field(f)
        a = compose(lambda ops, g: ops.exp(-g), [f], name="exp(-f)")
        return cls(chart, (a, ZERO, ZERO, a), f, name, recenter)

    @classmethod
    def from_frame(cls, e1, e2, chart, name="frame"):
        comps = tuple(as_field(c) for c in (*e1, *e2))
        return cls(chart, comps, None, name)

    @property
    def is_symbolic(self):
        return all(c.is_symbolic for c in self.frame)

    def frame_jets(self, x, y, order=2):
        e1x, e1y, e2x, e2y = (c.jet(x, y, order) for c in self.frame)
        return (e1x, e1y), (e2x, e2y)


# local differential geometry ------------------------------------------------


class FrameGeometry:
    """Frame quantities at a batch of chart points, as jets.

    ``e`` holds the frame (order 2), ``c1, c2`` the structural constants
    (order 1) and ``kappa`` the Gaussian curvature (values).
    """

    def __init__(self, surface, x, y):
        self.surface = surface
        self.x, self.y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        self.e = surface.frame_jets(self.x, self.y, 2)

    def along(self, i, g):
        """Lie derivative of jet ``g`` along frame vector ``e_i``."""
        ex, ey = self.e[i]
        return jets.derivative_along(g, (ex, ey, None))

    @property
    def det(self):
        (a, b), (c, d) = self.e
        return a * d - b * c

    @property
    def coframe(self):
        """Rows ``e1*``, ``e2*`` in chart components (dual basis)."""
        (a, b), (c, d) = self.e
        det = self.det
        return (d / det, -c / det), (-b / det, a / det)

    def _structural(self):
        (e1x, e1y), (e2x, e2y) = self.e
        # [e1, e2]^a = e1(e2^a) - e2(e1^a)
        bx = self.along(0, e2x) - self.along(1, e1x)
        by = self.along(0, e2y) - self.along(1, e1y)
        (f1x, f1y), (f2x, f2y) = self.coframe
        return f1x * bx + f1y * by, f2x * bx + f2y * by

    @property
    def c(self):
        if not hasattr(self, "_c"):
            self._c = self._structural()
        return self._c

    @property
    def kappa(self):
        c1, c2 = self.c
        k = -c1 * c1 - c2 * c2 + self.along(0, c2) - self.along(1, c1)
        return k.v

    @property
    def volume_density(self):
        """``dV_g = density dx dy`` (always positive)."""
        return np.abs(1.0 / jets.value(self.det))

    def frame_components(self, p1, p2):
        """``(<p, e1>, <p, e2>)`` for a covector with chart components ``(p1, p2)``."""
        (e1x, e1y), (e2x, e2y) = self.e
        return p1 * e1x.v + p2 * e1y.v, p1 * e2x.v + p2 * e2y.v

    def chart_covector(self, a1, a2):
        """Chart components of the covector ``a1 e1* + a2 e2*``."""
        (f1x, f1y), (f2x, f2y) = self.coframe
        return a1 * f1x.v + a2 * f2x.v, a1 * f1y.v + a2 * f2y.v

    def chart_vector(self, a1, a2):
        """Chart components of the vector ``a1 e1 + a2 e2``."""
        (e1x, e1y), (e2x, e2y) = self.e
        return a1 * e1x.v + a2 * e2x.v, a1 * e1y.v + a2 * e2y.v


def split_points(q):
    """Return ``(x, y, scalar)`` from a point array of shape ``(2,)`` or ``(2, ...)``."""
    q = np.asarray(q, dtype=float)
    if q.shape[0] != 2:
        raise ValueError("points must have leading dimension 2")
    return q[0], q[1], q.ndim == 1


def check_domain(surface, x, y):
    inside = surface.chart.contains(x, y)
    if not np.all(inside):
        bad = np.argwhere(~np.atleast_1d(inside))[0]
        xs, ys = np.atleast_1d(x), np.atleast_1d(y)
        i = tuple(bad) if xs.ndim > 1 else bad[0]
        raise DomainError(f"point ({float(xs[i])}, {float(ys[i])}) outside chart of {surface.name}")


def _out(values, scalar):
    values = np.asarray(values, dtype=float)
    return float(values) if scalar else values


def frame_at(surface, q):
    """Chart components of ``e1`` and ``e2`` at ``q``."""
    x, y, scalar = split_points(q)
    check_domain(surface, x, y)
    (e1x, e1y), (e2x, e2y) = surface.frame_jets(x, y, 0)
    e1 = np.stack(np.broadcast_arrays(e1x.v, e1y.v))
    e2 = np.stack(np.broadcast_arrays(e2x.v, e2y.v))
    return e1, e2


def structural_constants(surface, q):
    """``(c1, c2)`` with ``[e1, e2] = c1 e1 + c2 e2``."""
    x, y, scalar = split_points(q)
    check_domain(surface, x, y)
    c1, c2 = FrameGeometry(surface, x, y).c
    return _out(c1.v, scalar), _out(c2.v, scalar)


def gaussian_curvature(surface, q):
    """Gaussian curvature from the structural constants of the frame."""
    x, y, scalar = split_points(q)
    check_domain(surface, x, y)
    return _out(FrameGeometry(surface, x, y).kappa, scalar)


def gaussian_curvature_conformal(surface, q):
    """``-exp(-2f) (f_xx + f_yy)``; only for conformal surfaces."""
    if surface.conformal_factor is None:
        raise ValidationError(f"{surface.name} has no conformal factor")
    x, y, scalar = split_points(q)
    check_domain(surface, x, y)
    f, _, _, fxx, _, fyy = surface.conformal_factor.derivatives(*np.broadcast_arrays(x, y), 2)
    return _out(-np.exp(-2.0 * f) * (fxx + fyy), scalar)


def _metric(surface, x, y):
    (e1x, e1y), (e2x, e2y) = surface.frame_jets(x, y, 0)
    E = np.stack(
        [np.stack(np.broadcast_arrays(e1x.v, e1y.v)), np.stack(np.broadcast_arrays(e2x.v, e2y.v))]
    )  # E[i, a] = e_i^a
    E = np.moveaxis(E, (0, 1), (-2, -1))
    inv_metric = np.swapaxes(E, -1, -2) @ E  # g^{ab} = sum_i e_i^a e_i^b
    return np.linalg.inv(inv_metric), inv_metric


def metric_tensor(surface, q):
    """``g_ab`` at ``q`` with trailing axes ``(2, 2)``."""
    x, y, _ = split_points(q)
    check_domain(surface, x, y)
    return _metric(surface, x, y)[0]


def metric_pairing(surface, q, a, b, covector=False):
    """``<a, b>_g`` of two vectors (or covectors when ``covector=True``)."""
    x, y, scalar = split_points(q)
    check_domain(surface, x, y)
    g, ginv = _metric(surface, x, y)
    m = ginv if covector else g
    a = np.moveaxis(np.asarray(a, float), 0, -1)[..., None]
    b = np.moveaxis(np.asarray(b, float), 0, -1)[..., None]
    return _out((np.swapaxes(a, -1, -2) @ m @ b)[..., 0, 0], scalar)


def norm(surface, q, a, covector=False):
    return np.sqrt(metric_pairing(surface, q, a, a, covector))


def flat(surface, q, v):
    """Lower an index: chart components of the covector ``g(v, .)``."""
    x, y, _ = split_points(q)
    check_domain(surface, x, y)
    g, _ = _metric(surface, x, y)
    v = np.moveaxis(np.asarray(v, float), 0, -1)[..., None]
    return np.moveaxis((g @ v)[..., 0], -1, 0)


def sharp(surface, q, p):
    """Raise an index: chart components of the vector dual to covector ``p``."""
    x, y, _ = split_points(q)
    check_domain(surface, x, y)
    _, ginv = _metric(surface, x, y)
    p = np.moveaxis(np.asarray(p, float), 0, -1)[..., None]
    return np.moveaxis((ginv @ p)[..., 0], -1, 0)


# built-in surfaces ------------------------------------------------------------


def flat_torus():
    chart = Chart((0.0, TWO_PI, 0.0, TWO_PI), True, True, euler_characteristic=0)
    return Surface.from_conformal(sp.Integer(0), chart, name="flat_torus")


def _sphere_flip(x, y, theta):
    # z -> 1/z is the half-turn of the sphere swapping the poles; it maps a
    # unit direction e^{i theta} at z to -e^{i theta} / z^2.
    r2 = x * x + y * y
    return x / r2, -y / r2, theta + np.pi - 2.0 * np.arctan2(y, x)


def sphere():
    """Unit round sphere in the stereographic chart from the north pole."""
    chart = Chart(
        (-np.inf, np.inf, -np.inf, np.inf), euler_characteristic=2, pole_compactification=True
    )
    return Surface.from_conformal(
        sp.log(2 / (1 + X**2 + Y**2)), chart, name="sphere", recenter=_sphere_flip
    )


def _disk_recenter(x, y, theta):
    # Moebius map z -> (z - a)/(1 - conj(a) z) sends a to 0 with positive real
    # derivative there, so the frame angle is unchanged.
    return 0.0 * x, 0.0 * y, theta


def hyperbolic_disk():
    """Poincare disk model of the hyperbolic plane (curvature -1)."""
    chart = Chart((-1.0, 1.0, -1.0, 1.0), disk=True)
    return Surface.from_conformal(
        sp.log(2 / (1 - X**2 - Y**2)), chart, name="hyperbolic_disk", recenter=_disk_recenter
    )


def conformal_surface(f, domain, periodic_x=False, periodic_y=False, euler_characteristic=None,
                      pole_compactification=False, disk=False, name="conformal"):
    chart = Chart(domain, periodic_x, periodic_y, euler_characteristic, pole_compactification, disk)
    return Surface.from_conformal(f, chart, name=name)


BUILTIN_SURFACES = {
    "flat_torus": flat_torus,
    "sphere": sphere,
    "hyperbolic_disk": hyperbolic_disk,
}


def builtin_surface(name):
    try:
        return BUILTIN_SURFACES[name]()
    except KeyError:
        raise ValidationError(f"unknown surface {name!r}; choose from {sorted(BUILTIN_SURFACES)}") from None
