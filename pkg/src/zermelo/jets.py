"""Second-order jets over the (x, y, theta) coordinates of the level surface.

A :class:`Jet` carries the value, gradient and Hessian of a scalar quantity
at a batch of points. Arithmetic propagates derivatives exactly (forward mode),
so every curvature formula can be written once, in terms of values, and the
derivatives it needs come for free.

Differentiating a jet with :func:`partial` lowers its ``order`` by one: a jet
built from second-order input fields can be differentiated twice, not three
times. Requesting a derivative that is not available raises ``ValueError``.

Arrays broadcast: base fields sampled on ``(nx, ny, 1)`` grids combine with
angle jets on ``(1, 1, ntheta)`` without materialising redundant copies.
"""

from __future__ import annotations

import numpy as np

NVARS = 3  # x, y, theta


def _outer(a, b):
    return a[:, None] * b[None, :]


class Jet:
    """Value, gradient (leading axis 3) and Hessian (leading axes 3x3)."""

    __slots__ = ("v", "d", "h", "order")
    __array_ufunc__ = None  # let numpy operands defer to Jet arithmetic

    def __init__(self, v, d=None, h=None, order=2):
        self.v = np.asarray(v, dtype=float)
        self.order = int(order)
        if self.order >= 1 and d is None:
            raise ValueError("order >= 1 jet needs a gradient")
        if self.order >= 2 and h is None:
            raise ValueError("order 2 jet needs a Hessian")
        self.d = np.asarray(d, dtype=float) if self.order >= 1 else None
        self.h = np.asarray(h, dtype=float) if self.order >= 2 else None

    @classmethod
    def constant(cls, value, order=2):
        v = np.asarray(value, dtype=float)
        z = np.zeros((NVARS,) + v.shape)
        return cls(v, z, np.zeros((NVARS, NVARS) + v.shape), order)

    @classmethod
    def variable(cls, value, index, order=2):
        v = np.asarray(value, dtype=float)
        d = np.zeros((NVARS,) + v.shape)
        d[index] = 1.0
        return cls(v, d, np.zeros((NVARS, NVARS) + v.shape), order)

    def __repr__(self):
        return f"Jet(order={self.order}, shape={self.v.shape})"

    # arithmetic ---------------------------------------------------------
    def _lift(self, other):
        if isinstance(other, Jet):
            return other
        return None

    def __add__(self, other):
        o = self._lift(other)
        if o is None:
            return Jet(self.v + other, self.d, self.h, self.order)
        order = min(self.order, o.order)
        return Jet(
            self.v + o.v,
            self.d + o.d if order >= 1 else None,
            self.h + o.h if order >= 2 else None,
            order,
        )

    __radd__ = __add__

    def __neg__(self):
        return Jet(
            -self.v,
            -self.d if self.order >= 1 else None,
            -self.h if self.order >= 2 else None,
            self.order,
        )

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._lift(other)
        if o is None:
            c = np.asarray(other, dtype=float)
            return Jet(
                self.v * c,
                self.d * c if self.order >= 1 else None,
                self.h * c if self.order >= 2 else None,
                self.order,
            )
        order = min(self.order, o.order)
        d = h = None
        if order >= 1:
            d = self.d * o.v + o.d * self.v
        if order >= 2:
            h = (
                self.h * o.v
                + o.h * self.v
                + _outer(self.d, o.d)
                + _outer(o.d, self.d)
            )
        return Jet(self.v * o.v, d, h, order)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * reciprocal(other)
        return self * (1.0 / np.asarray(other, dtype=float))

    def __rtruediv__(self, other):
        return reciprocal(self) * other

    def __pow__(self, p):
        if isinstance(p, Jet):
            return exp(log(self) * p)
        p = float(p)
        if p == 2.0:
            return self * self
        return _chain(self, self.v**p, p * self.v ** (p - 1), p * (p - 1) * self.v ** (p - 2))


def _chain(a, g0, g1, g2):
    """Compose a scalar function with derivatives g1, g2 onto jet ``a``."""
    d = h = None
    if a.order >= 1:
        d = a.d * g1
    if a.order >= 2:
        h = a.h * g1 + _outer(a.d, a.d) * g2
    return Jet(g0, d, h, a.order)


def reciprocal(a):
    r = 1.0 / a.v
    return _chain(a, r, -r * r, 2.0 * r * r * r)


def exp(a):
    e = np.exp(a.v)
    return _chain(a, e, e, e)


def log(a):
    r = 1.0 / a.v
    return _chain(a, np.log(a.v), r, -r * r)


def sqrt(a):
    s = np.sqrt(a.v)
    return _chain(a, s, 0.5 / s, -0.25 / (s * a.v))


def sin(a):
    s, c = np.sin(a.v), np.cos(a.v)
    return _chain(a, s, c, -s)


def cos(a):
    s, c = np.sin(a.v), np.cos(a.v)
    return _chain(a, c, -s, -c)


def partial(a, index):
    """Derivative of ``a`` with respect to coordinate ``index`` (order drops by one)."""
    if a.order < 1:
        raise ValueError("jet carries no derivatives")
    return Jet(a.d[index], a.h[index] if a.order >= 2 else None, None, a.order - 1)


def derivative_along(a, components):
    """Lie derivative of ``a`` along the vector field with (x, y, theta) ``components``.

    ``components`` may hold jets, arrays or ``None`` (zero component).
    """
    total = None
    for i, comp in enumerate(components):
        if comp is None:
            continue
        term = partial(a, i) * comp
        total = term if total is None else total + term
    return total


def value(a):
    return a.v if isinstance(a, Jet) else np.asarray(a, dtype=float)
