"""Ready-made symbol families with exact derivative jets.

Components are built from sympy expressions in the space variables
x1..xd and frequency variables k1..kd; jets lambdify the symbolic
derivatives on demand, so the calculus tests run at roundoff accuracy
instead of finite-difference accuracy. Plain-callable components (with
the central-difference fallback) remain available through
HomogeneousComponent directly.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np
import sympy as sp

from .multiindex import MultiIndex
from .symbols import (
    ClassicalSymbol,
    CutoffSpec,
    HomogeneousComponent,
    MatrixAlgebraSpec,
    zero_component,
)


def space_symbols(dim: int) -> tuple[sp.Symbol, ...]:
    return sp.symbols(f"x1:{dim + 1}", real=True)


def freq_symbols(dim: int) -> tuple[sp.Symbol, ...]:
    return sp.symbols(f"k1:{dim + 1}", real=True)


def _scrub_deltas(expr):
    """Drop DiracDelta artifacts from Piecewise derivatives.

    Bump pieces meet C-infinity flat, so every boundary jump term sympy
    inserts is identically zero.
    """
    if expr.has(sp.DiracDelta):
        expr = expr.replace(lambda e: isinstance(e, sp.DiracDelta),
                            lambda e: sp.S.Zero)
    return expr


def _entry_lambdify(variables, expr):
    fn = sp.lambdify(variables, _scrub_deltas(sp.sympify(expr)),
                     modules=["numpy"])

    def wrapped(*args):
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            out = fn(*args)
        return out

    return wrapped


class SymbolicComponent(HomogeneousComponent):
    """Homogeneous component backed by a sympy matrix expression.

    Parameters
    ----------
    expr : sympy Matrix (n x n) or scalar expression
        Valid for all xi != 0 and positively homogeneous of `degree`.
    degree : complex
    dim : int
    """

    def __init__(self, expr, degree: complex, dim: int):
        if not isinstance(expr, sp.MatrixBase):
            expr = sp.Matrix([[expr]])
        if expr.shape[0] != expr.shape[1]:
            raise ValueError("component expression must be square")
        self.expr = sp.ImmutableMatrix(expr)
        self._xs = space_symbols(dim)
        self._ks = freq_symbols(dim)
        self._fn_cache: dict = {}
        n = expr.shape[0]
        super().__init__(degree, dim, n, self._eval, self._jet, None)

    def _diff_matrix(self, alpha: MultiIndex, beta: MultiIndex):
        mat = self.expr
        for i, a in enumerate(alpha):
            if a:
                mat = mat.diff(self._ks[i], a)
        for i, b in enumerate(beta):
            if b:
                mat = mat.diff(self._xs[i], b)
        return mat

    def _entry_fns(self, alpha: MultiIndex, beta: MultiIndex):
        key = (alpha, beta)
        if key not in self._fn_cache:
            mat = self._diff_matrix(alpha, beta)
            variables = list(self._xs) + list(self._ks)
            self._fn_cache[key] = [
                [_entry_lambdify(variables, mat[i, j])
                 for j in range(self.n)] for i in range(self.n)]
        return self._fn_cache[key]

    def _apply(self, fns, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        shape = np.broadcast_shapes(x.shape[:-1], u.shape[:-1])
        args = ([x[..., i] for i in range(self.dim)]
                + [u[..., i] for i in range(self.dim)])
        out = np.empty(shape + (self.n, self.n), dtype=complex)
        for i in range(self.n):
            for j in range(self.n):
                out[..., i, j] = np.broadcast_to(fns[i][j](*args), shape)
        return out

    def _eval(self, x, u):
        zero = (0,) * self.dim
        return self._apply(self._entry_fns(zero, zero), x, u)

    def _jet(self, x, u, alpha, beta):
        return self._apply(self._entry_fns(tuple(alpha), tuple(beta)), x, u)


def norm_expr(dim: int):
    ks = freq_symbols(dim)
    return sp.sqrt(sum(k**2 for k in ks))


def bump_expr(variables, center, radius):
    """Smooth bump exp(1 - 1/(1 - s^2)) on s < 1, s = |v - c| / radius."""
    s2 = sum(((v - c) / radius) ** 2 for v, c in zip(variables, center))
    return sp.Piecewise((sp.exp(1 - 1 / (1 - s2)), s2 < 1), (0, True))


class SmoothFunction:
    """Scalar smooth function of x with exact gradient, sympy-backed."""

    def __init__(self, expr, dim: int):
        self.expr = sp.sympify(expr)
        self.dim = dim
        self._xs = space_symbols(dim)
        self._value = _entry_lambdify(list(self._xs), self.expr)
        self._grads = [_entry_lambdify(list(self._xs),
                                       sp.diff(self.expr, xv))
                       for xv in self._xs]

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        args = [x[..., i] for i in range(self.dim)]
        return np.broadcast_to(np.asarray(self._value(*args), dtype=float),
                               x.shape[:-1]).copy()

    def gradient(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        args = [x[..., i] for i in range(self.dim)]
        cols = [np.broadcast_to(np.asarray(g(*args), dtype=float),
                                x.shape[:-1]) for g in self._grads]
        return np.stack(cols, axis=-1)


def bump_function(dim: int, center=None, radius: float = 0.5,
                  height: float = 1.0) -> SmoothFunction:
    center = np.zeros(dim) if center is None else np.asarray(center, float)
    xs = space_symbols(dim)
    return SmoothFunction(height * bump_expr(xs, center, radius), dim)


def support_box(center, radius, dim: int) -> np.ndarray:
    center = np.broadcast_to(np.asarray(center, dtype=float), (dim,))
    return np.stack([center - radius, center + radius], axis=1)


# -- classical symbols -------------------------------------------------


def multiplier_symbol(dim: int, order: complex, matrix=None,
                      truncation: int = 1,
                      cutoff: Optional[CutoffSpec] = None) -> ClassicalSymbol:
    """x-independent symbol Q |xi|^m with a single homogeneous component."""
    matrix = np.eye(1) if matrix is None else np.asarray(matrix)
    n = matrix.shape[0]
    comps = [SymbolicComponent(sp.Matrix(matrix) * norm_expr(dim) ** order,
                               order, dim)]
    for j in range(1, truncation):
        comps.append(zero_component(order - j, dim, n))
    return ClassicalSymbol(dim, order, comps, cutoff or CutoffSpec(),
                           MatrixAlgebraSpec(n), None)


def bessel_symbol(dim: int, order: float, matrix=None,
                  truncation: int = 4,
                  cutoff: Optional[CutoffSpec] = None) -> ClassicalSymbol:
    """Classical expansion of Q (1 + |xi|^2)^{m/2}.

    (1+r^2)^{m/2} = sum_k C(m/2, k) r^{m-2k}: even-step components, exact
    jets from the closed form. Elliptic and positive for positive Q.
    """
    matrix = np.eye(1) if matrix is None else np.asarray(matrix)
    n = matrix.shape[0]
    r = norm_expr(dim)
    half = sp.nsimplify(order) / 2
    comps = []
    for j in range(truncation):
        if j % 2 == 0:
            c = sp.binomial(half, j // 2)
            comps.append(SymbolicComponent(
                sp.Matrix(matrix) * c * r ** (order - j), order - j, dim))
        else:
            comps.append(zero_component(order - j, dim, n))
    return ClassicalSymbol(dim, order, comps, cutoff or CutoffSpec(),
                           MatrixAlgebraSpec(n), None)


def symbol_from_exprs(dim: int, order: complex, exprs: Sequence,
                      spatial_support=None,
                      cutoff: Optional[CutoffSpec] = None) -> ClassicalSymbol:
    """Classical symbol from sympy expressions, entry j of degree m - j.

    Pass None for an identically zero component.
    """
    comps: list = []
    n = None
    for j, e in enumerate(exprs):
        comp = None if e is None else SymbolicComponent(e, order - j, dim)
        if comp is not None and n is None:
            n = comp.n
        comps.append(comp)
    if n is None:
        raise ValueError("need at least one nonzero component")
    comps = [zero_component(order - j, dim, n) if c is None else c
             for j, c in enumerate(comps)]
    return ClassicalSymbol(dim, order, comps, cutoff or CutoffSpec(),
                           MatrixAlgebraSpec(n), spatial_support)


def riesz_symbol(dim: int, axis: int,
                 truncation: int = 1) -> ClassicalSymbol:
    """Degree-0 angular symbol xi_axis / |xi| (scalar Riesz direction)."""
    ks = freq_symbols(dim)
    expr = ks[axis] / norm_expr(dim)
    return symbol_from_exprs(dim, 0.0, [expr] + [None] * (truncation - 1))


def elliptic_bump_symbol(dim: int, order: float, matrix=None,
                         bump_center=None, bump_radius: float = 0.5,
                         bump_amplitude: float = 0.5,
                         truncation: int = 4) -> ClassicalSymbol:
    """Elliptic symbol (1 + a b(x)) Q |xi|^m with a compactly supported bump.

    The x-dependent factor stays in [1, 1 + a], so ellipticity constants
    are controlled; spatial_support records the bump box.
    """
    matrix = np.eye(1) if matrix is None else np.asarray(matrix)
    n = matrix.shape[0]
    center = np.zeros(dim) if bump_center is None else np.asarray(bump_center)
    xs = space_symbols(dim)
    profile = 1 + bump_amplitude * bump_expr(xs, center, bump_radius)
    exprs = [profile * sp.Matrix(matrix) * norm_expr(dim) ** order]
    exprs += [None] * (truncation - 1)
    return symbol_from_exprs(dim, order, exprs,
                             spatial_support=support_box(center, bump_radius, dim))
