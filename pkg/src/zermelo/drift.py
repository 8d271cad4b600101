"""Drifts of navigation problems, stored as frame components.

A drift is either a vector field X (Zermelo problem) or a one-form Upsilon
(co-Zermelo problem); in both cases ``comp1, comp2`` are its components
against the orthonormal frame, ``<X, e_i>_g`` or ``Upsilon(e_i)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import jets
from .errors import ValidationError
from .fields import ZERO, Field, as_field, compose
from .geometry import FrameGeometry, _out, check_domain, split_points

DEFAULT_NORM_MARGIN = 0.02
VALIDATION_GRID = 256


class DriftKind(str, Enum):
    VECTOR = "vector"
    FORM = "form"


@dataclass(frozen=True, eq=False)
class DriftSpec:
    kind: DriftKind
    comp1: Field
    comp2: Field
    norm_margin: float = DEFAULT_NORM_MARGIN

    def __post_init__(self):
        object.__setattr__(self, "kind", DriftKind(self.kind))
        object.__setattr__(self, "comp1", as_field(self.comp1))
        object.__setattr__(self, "comp2", as_field(self.comp2))
        if not self.norm_margin > 0:
            raise ValidationError("norm_margin must be positive")

    @classmethod
    def vector(cls, comp1, comp2, norm_margin=DEFAULT_NORM_MARGIN):
        return cls(DriftKind.VECTOR, comp1, comp2, norm_margin)

    @classmethod
    def form(cls, comp1, comp2, norm_margin=DEFAULT_NORM_MARGIN):
        return cls(DriftKind.FORM, comp1, comp2, norm_margin)

    @classmethod
    def zero(cls, kind=DriftKind.FORM):
        return cls(kind, ZERO, ZERO)

    @classmethod
    def from_chart(cls, surface, kind, a1, a2, norm_margin=DEFAULT_NORM_MARGIN):
        """Build from chart components (vector ``a^i`` or covector ``a_i``)."""
        kind = DriftKind(kind)
        e1x, e1y, e2x, e2y = surface.frame
        inputs = [a1, a2, e1x, e1y, e2x, e2y]
        if kind is DriftKind.FORM:
            def comp(i):
                return lambda ops, a, b, p, q, r, s: a * (p, r)[i] + b * (q, s)[i]
        else:
            # <v, e_i>_g = coframe_i(v) for an orthonormal frame
            def comp(i):
                def build(ops, a, b, p, q, r, s):
                    det = p * s - q * r
                    row = ((s, -r), (-q, p))[i]
                    return (a * row[0] + b * row[1]) / det
                return build
        return cls(kind, compose(comp(0), inputs), compose(comp(1), inputs), norm_margin)

    @property
    def is_symbolic(self):
        return self.comp1.is_symbolic and self.comp2.is_symbolic

    def is_identically_zero(self):
        return self.comp1.is_identically_zero() and self.comp2.is_identically_zero()

    def jets(self, x, y, order=2):
        return self.comp1.jet(x, y, order), self.comp2.jet(x, y, order)

    def components(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        return self.comp1(x, y), self.comp2(x, y)

    def norm(self, x, y):
        a, b = self.components(x, y)
        return np.hypot(a, b)


@dataclass(frozen=True)
class RotatedFrame:
    """Frame ``(e1^X, e2^X)`` rotated by the drift angle, in chart components."""

    theta0: np.ndarray
    e1X: np.ndarray
    e2X: np.ndarray


def drift_angle(drift, q):
    """Angle of the drift against ``e1``; zero where the drift vanishes."""
    x, y, scalar = split_points(q)
    a, b = drift.components(x, y)
    theta = np.where((a == 0) & (b == 0), 0.0, np.arctan2(b, a))
    return _out(theta, scalar)


def rotated_frame(surface, drift, q):
    x, y, scalar = split_points(q)
    check_domain(surface, x, y)
    theta = np.asarray(drift_angle(drift, q))
    geo = FrameGeometry(surface, x, y)
    c, s = np.cos(theta), np.sin(theta)
    e1X = np.stack(geo.chart_vector(c, s))
    e2X = np.stack(geo.chart_vector(-s, c))
    return RotatedFrame(theta, e1X, e2X)


def omega_jet(geo, drift):
    """Jet (order 1) of the magnetic function: ``d Upsilon = -Omega dV_g``."""
    u1, u2 = drift.jets(geo.x, geo.y, 2)
    c1, c2 = geo.c
    d_upsilon = geo.along(0, u2) - geo.along(1, u1) - c1 * u1 - c2 * u2
    return -d_upsilon


def omega(surface, drift, q):
    """Magnetic function of a drift one-form at ``q``."""
    if drift.kind is not DriftKind.FORM:
        raise ValidationError("omega is defined for drift one-forms")
    x, y, scalar = split_points(q)
    check_domain(surface, x, y)
    return _out(omega_jet(FrameGeometry(surface, x, y), drift).v, scalar)


def phi_jet(drift_jets, theta):
    """``1 + Upsilon_1 cos(theta) + Upsilon_2 sin(theta)`` as a jet."""
    u1, u2 = drift_jets
    th = theta if isinstance(theta, jets.Jet) else jets.Jet.variable(theta, 2)
    return 1.0 + u1 * jets.cos(th) + u2 * jets.sin(th)


def phi(surface, drift, theta, q):
    """Reparametrisation function of the co-Zermelo flow at ``(theta, q)``."""
    x, y, scalar = split_points(q)
    check_domain(surface, x, y)
    a, b = drift.components(x, y)
    n = np.hypot(a, b)
    if np.any(n >= 1.0):
        raise ValidationError(f"drift norm {float(np.max(n))} violates |drift| < 1")
    theta = np.asarray(theta, dtype=float)
    return _out(1.0 + a * np.cos(theta) + b * np.sin(theta), scalar and theta.ndim == 0)


def sample_points(chart, n=VALIDATION_GRID, region=None):
    """Grid of interior points used for sampling checks.

    ``region`` is an optional sub-rectangle ``(x0, x1, y0, y1)``. Stereographic
    charts are sampled uniformly in the compactified (colatitude, longitude)
    coordinates; disk charts on a polar grid inside the guard.
    """
    if region is not None:
        x0, x1, y0, y1 = region
        xs = x0 + (np.arange(n) + 0.5) * (x1 - x0) / n
        ys = y0 + (np.arange(n) + 0.5) * (y1 - y0) / n
        return np.meshgrid(xs, ys, indexing="ij")
    if chart.pole_compactification:
        psi = (np.arange(n) + 0.5) * np.pi / n
        alpha = np.arange(n) * 2 * np.pi / n
        P, A = np.meshgrid(psi, alpha, indexing="ij")
        r = np.tan(P / 2)
        return r * np.cos(A), r * np.sin(A)
    x0, x1, y0, y1 = chart.domain
    if chart.disk:
        radius = 0.5 * min(x1 - x0, y1 - y0) - chart.guard
        rr = (np.arange(n) + 0.5) * radius / n
        alpha = np.arange(n) * 2 * np.pi / n
        R, A = np.meshgrid(rr, alpha, indexing="ij")
        return 0.5 * (x0 + x1) + R * np.cos(A), 0.5 * (y0 + y1) + R * np.sin(A)
    if not np.isfinite(chart.domain).all():
        raise ValidationError("unbounded chart needs an explicit sampling region")
    xs = x0 + (np.arange(n) + 0.5) * (x1 - x0) / n
    ys = y0 + (np.arange(n) + 0.5) * (y1 - y0) / n
    return np.meshgrid(xs, ys, indexing="ij")


def validate_drift(surface, drift, n=VALIDATION_GRID, region=None):
    """Sampling check of the strong-navigation bound ``|drift| <= 1 - margin``.

    Returns the sampled maximum norm; raises :class:`ValidationError` naming
    the worst point otherwise. This is a grid check, not a proof.
    """
    x, y = sample_points(surface.chart, n, region)
    norms = drift.norm(x, y)
    if not np.all(np.isfinite(norms)):
        raise ValidationError("drift is not finite on the sampling grid")
    i = np.unravel_index(np.argmax(norms), norms.shape)
    worst = float(norms[i])
    if worst > 1.0 - drift.norm_margin:
        raise ValidationError(
            f"drift norm {worst:.6g} at ({float(x[i]):.6g}, {float(y[i]):.6g}) exceeds "
            f"1 - margin = {1.0 - drift.norm_margin:.6g}"
        )
    return worst
