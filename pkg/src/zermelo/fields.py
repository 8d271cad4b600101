"""Scalar fields on a chart, evaluated as second-order jets.

Two backends share one interface:

* :class:`SymbolicField` wraps a sympy expression in ``x, y``; its partial
  derivatives are exact.
* :class:`CallableField` wraps plain numpy callables; missing derivative
  closures fall back to fourth-order central differences.
"""

from __future__ import annotations

from functools import cached_property

import numpy as np
import sympy as sp

from . import jets
from .expr import X, Y, parse, to_text
from .jets import NVARS, Jet

# 4th-order first-derivative stencil, offsets -2..2 (centre weight 0)
_D1 = ((-2, 1.0 / 12), (-1, -8.0 / 12), (1, 8.0 / 12), (2, -1.0 / 12))
# 4th-order second-derivative stencil
_D2 = ((-2, -1.0 / 12), (-1, 16.0 / 12), (0, -30.0 / 12), (1, 16.0 / 12), (2, -1.0 / 12))

FD_STEP_FIRST = 1e-5
FD_STEP_SECOND = 1e-3


def _step(base, coord):
    return np.maximum(base, base * np.abs(coord))


def _assemble(shape, val, gx, gy, hxx, hxy, hyy, order):
    d = np.zeros((NVARS,) + shape)
    d[0], d[1] = gx, gy
    h = None
    if order >= 2:
        h = np.zeros((NVARS, NVARS) + shape)
        h[0, 0], h[0, 1], h[1, 0], h[1, 1] = hxx, hxy, hxy, hyy
    return Jet(val, d, h, order)


class Field:
    """A scalar field ``F(x, y)``; subclasses implement :meth:`derivatives`."""

    def __call__(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        return self.derivatives(x, y, 0)[0]

    def derivatives(self, x, y, order):
        """Return ``(F, F_x, F_y, F_xx, F_xy, F_yy)`` truncated to ``order``."""
        raise NotImplementedError

    def jet(self, x, y, order=2):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        parts = self.derivatives(x, y, order)
        if order == 0:
            return Jet(parts[0], order=0)
        return _assemble(x.shape, *parts, *([None] * (6 - len(parts))), order=order)

    @property
    def is_symbolic(self):
        return False

    def is_identically_zero(self):
        return False


class SymbolicField(Field):
    """Field given by a sympy expression in the chart variables."""

    def __init__(self, expr):
        if isinstance(expr, str):
            expr = parse(expr)
        self.expr = sp.sympify(expr)
        extra = self.expr.free_symbols - {X, Y}
        if extra:
            raise ValueError(f"field depends on unknown symbols {extra}")

    def __repr__(self):
        return f"SymbolicField({self.text})"

    @property
    def text(self):
        return to_text(self.expr)

    @property
    def is_symbolic(self):
        return True

    def is_identically_zero(self):
        if self.expr == 0:
            return True
        if not self.expr.free_symbols:
            return bool(self.expr.is_zero)
        # cheap probe first: any clearly nonzero sample settles it
        probe = np.array([[0.3, 0.7], [1.1, -0.4], [-0.9, 0.2], [0.05, 1.3]])
        with np.errstate(all="ignore"):
            vals = np.asarray(self(probe[:, 0], probe[:, 1]), dtype=float)
        if np.any(np.isfinite(vals) & (np.abs(vals) > 1e-12)):
            return False
        return sp.simplify(self.expr) == 0

    @cached_property
    def _compiled(self):
        e = self.expr
        ex, ey = sp.diff(e, X), sp.diff(e, Y)
        exprs = [e, ex, ey, sp.diff(ex, X), sp.diff(ex, Y), sp.diff(ey, Y)]
        return [sp.lambdify((X, Y), exprs[:n], "numpy", cse=True) for n in (1, 3, 6)]

    def derivatives(self, x, y, order):
        out = self._compiled[order](x, y)
        shape = np.broadcast(x, y).shape
        return [np.broadcast_to(np.asarray(o, dtype=float), shape) for o in out]


class CallableField(Field):
    """Field given by numpy callables.

    Parameters
    ----------
    fn : callable
        ``fn(x, y)`` returning an array broadcast against its inputs.
    grad, hess : callable, optional
        ``grad(x, y) -> (F_x, F_y)`` and ``hess(x, y) -> (F_xx, F_xy, F_yy)``.
        When omitted, fourth-order central differences are used.
    """

    def __init__(self, fn, grad=None, hess=None, name=None):
        self.fn = fn
        self.grad = grad
        self.hess = hess
        self.name = name or getattr(fn, "__name__", "callable")

    def __repr__(self):
        return f"CallableField({self.name})"

    def _f(self, x, y):
        shape = np.broadcast(x, y).shape
        return np.broadcast_to(np.asarray(self.fn(x, y), dtype=float), shape)

    def derivatives(self, x, y, order):
        out = [self._f(x, y)]
        if order >= 1:
            if self.grad is not None:
                gx, gy = self.grad(x, y)
            else:
                hx, hy = _step(FD_STEP_FIRST, x), _step(FD_STEP_FIRST, y)
                gx = sum(w * self._f(x + k * hx, y) for k, w in _D1) / hx
                gy = sum(w * self._f(x, y + k * hy) for k, w in _D1) / hy
            out += [np.broadcast_to(gx, out[0].shape), np.broadcast_to(gy, out[0].shape)]
        if order >= 2:
            if self.hess is not None:
                hxx, hxy, hyy = self.hess(x, y)
            else:
                hx, hy = _step(FD_STEP_SECOND, x), _step(FD_STEP_SECOND, y)
                hxx = sum(w * self._f(x + k * hx, y) for k, w in _D2) / hx**2
                hyy = sum(w * self._f(x, y + k * hy) for k, w in _D2) / hy**2
                hxy = sum(
                    wi * wj * self._f(x + i * hx, y + j * hy) for i, wi in _D1 for j, wj in _D1
                ) / (hx * hy)
            out += [np.broadcast_to(v, out[0].shape) for v in (hxx, hxy, hyy)]
        return out


class JetField(Field):
    """Field defined by composing other fields' jets (exact to their order)."""

    def __init__(self, builder, inputs, name="derived"):
        self.builder = builder
        self.inputs = tuple(inputs)
        self.name = name

    def __repr__(self):
        return f"JetField({self.name})"

    def jet(self, x, y, order=2):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        return self.builder(*(f.jet(x, y, order) for f in self.inputs))

    def derivatives(self, x, y, order):
        j = self.jet(x, y, order)
        out = [j.v]
        if order >= 1:
            out += [j.d[0], j.d[1]]
        if order >= 2:
            out += [j.h[0, 0], j.h[0, 1], j.h[1, 1]]
        return out


def constant(value):
    return SymbolicField(sp.Float(value) if not float(value).is_integer() else sp.Integer(int(value)))


ZERO = SymbolicField(sp.Integer(0))


def as_field(spec):
    """Coerce a number, expression string, sympy expression, callable or Field."""
    if isinstance(spec, Field):
        return spec
    if isinstance(spec, (int, float, np.floating, np.integer)):
        return constant(float(spec))
    if isinstance(spec, (str, sp.Basic)):
        return SymbolicField(spec)
    if callable(spec):
        return CallableField(spec)
    raise TypeError(f"cannot build a field from {type(spec).__name__}")


def compose(builder, inputs, name="derived"):
    """Build a field ``builder(ops, *inputs)`` from other fields.

    ``ops`` provides ``sqrt exp log sin cos``: the sympy namespace when every
    input is symbolic (the result is then symbolic too), the jet namespace
    otherwise.
    """
    inputs = [as_field(f) for f in inputs]
    if all(f.is_symbolic for f in inputs):
        return SymbolicField(builder(sp, *(f.expr for f in inputs)))
    return JetField(lambda *js: builder(jets, *js), inputs, name)
