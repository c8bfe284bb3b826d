"""Matrix-valued classical symbols on R^d x (R^d \\ 0).

A classical symbol of order m is a finite expansion

    sigma(x, xi) ~ sum_j phi(xi) sigma_{m-j}(x, xi),

where sigma_{m-j} is positively homogeneous of degree m-j in xi and phi is
a fixed radial cutoff vanishing for |xi| <= 1/2 and equal to 1 for
|xi| >= 1. Components are represented by their values and derivative jets
on the unit sphere; homogeneity supplies values and jets everywhere else.

Composition and adjoint act degree by degree through the Leibniz sums

    sigma(Op(a) Op(b))_{m1+m2-j} = sum_{|alpha|+k+l=j} (1/alpha!)
        d_xi^alpha a_{m1-k} . D_x^alpha b_{m2-l},
    sigma(Op(a)^*)_{conj(m)-j} = sum_{|alpha|+k=j} (1/alpha!)
        d_xi^alpha D_x^alpha (a_{m-k})^*,

with D_x = -i d_x. The produced components carry jet closures, so composed
symbols can be composed and differentiated again.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .jets import Jet
from .multiindex import (
    MultiIndex,
    add_indices,
    factorial,
    binomial,
    indices_of_order,
    indices_up_to,
    lower_indices,
    sub_indices,
    zero_index,
)

_FD_STEP = np.finfo(float).eps ** (1.0 / 3.0)


@dataclass(frozen=True)
class MatrixAlgebraSpec:
    """Coefficient algebra M_n(C) with its unnormalized trace."""

    n: int

    def trace(self, a: np.ndarray) -> np.ndarray:
        return np.trace(a, axis1=-2, axis2=-1)

    def identity(self) -> np.ndarray:
        return np.eye(self.n, dtype=complex)


@dataclass(frozen=True)
class CutoffSpec:
    """Fixed radial cutoff phi(xi) = psi(|xi|).

    psi(r) = h(2r-1) / (h(2r-1) + h(2-2r)) with h(t) = exp(-1/t) for t > 0
    and h(t) = 0 otherwise, so phi vanishes for |xi| <= 1/2 and equals 1
    for |xi| >= 1.
    """

    inner: float = 0.5
    outer: float = 1.0

    @staticmethod
    def _h(t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        pos = t > 0
        with np.errstate(over="ignore"):
            out[pos] = np.exp(-1.0 / t[pos])
        return out

    def radial(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        up = self._h(2.0 * r - 1.0)
        down = self._h(2.0 - 2.0 * r)
        denom = up + down
        out = np.zeros_like(r)
        nz = denom > 0
        out[nz] = up[nz] / denom[nz]
        out[r >= self.outer] = 1.0
        return out

    def of_xi(self, xi: np.ndarray) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        return self.radial(np.linalg.norm(xi, axis=-1))


def _fd_jet(extension: Callable[[np.ndarray, np.ndarray], np.ndarray],
            x: np.ndarray, xi: np.ndarray,
            alpha: MultiIndex, beta: MultiIndex) -> np.ndarray:
    """Central-difference jet of the homogeneous extension.

    Differences recursively, one coordinate at a time, with step
    h = eps^{1/3} (1 + |coordinate|).
    """
    for i, a in enumerate(alpha):
        if a > 0:
            h = _FD_STEP * (1.0 + abs(float(xi[i])))
            e = np.zeros_like(xi)
            e[i] = h
            lower = tuple(a - 1 if j == i else aj
                          for j, aj in enumerate(alpha))
            hi = _fd_jet(extension, x, xi + e, lower, beta)
            lo = _fd_jet(extension, x, xi - e, lower, beta)
            return (hi - lo) / (2.0 * h)
    for i, b in enumerate(beta):
        if b > 0:
            h = _FD_STEP * (1.0 + abs(float(x[i])))
            e = np.zeros_like(x)
            e[i] = h
            lower = tuple(b - 1 if j == i else bj
                          for j, bj in enumerate(beta))
            hi = _fd_jet(extension, x + e, xi, alpha, lower)
            lo = _fd_jet(extension, x - e, xi, alpha, lower)
            return (hi - lo) / (2.0 * h)
    return extension(x, xi)


class HomogeneousComponent:
    """One positively homogeneous term of a classical symbol.

    Parameters
    ----------
    degree : complex
        Homogeneity degree in xi.
    eval_fn : callable
        (x, u) -> ndarray(n, n) on unit vectors u; must broadcast over
        leading axes of x and u.
    jet_fn : callable, optional
        (x, u, alpha, beta) -> ndarray(n, n), the derivative
        d_xi^alpha d_x^beta of the homogeneous extension evaluated at
        xi = u. When omitted, central differences are used.
    jet_order : int or None
        Largest |alpha| + |beta| the jets are trusted to; None means any
        order (analytic closures).
    """

    def __init__(self, degree: complex, dim: int, n: int,
                 eval_fn: Callable, jet_fn: Optional[Callable] = None,
                 jet_order: Optional[int] = None):
        self.degree = complex(degree)
        self.dim = dim
        self.n = n
        self.eval_fn = eval_fn
        self.jet_fn = jet_fn
        self.jet_order = jet_order

    # -- values ---------------------------------------------------------

    def value(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        out = np.asarray(self.eval_fn(np.asarray(x, dtype=float),
                                      np.asarray(u, dtype=float)))
        return out.astype(complex, copy=False)

    def value_at(self, x: np.ndarray, xi: np.ndarray) -> np.ndarray:
        """Value of the homogeneous extension at general xi != 0."""
        xi = np.asarray(xi, dtype=float)
        r = np.asarray(np.linalg.norm(xi, axis=-1))
        u = xi / r[..., None]
        scale = np.asarray(np.exp(self.degree * np.log(r)))
        return scale[..., None, None] * self.value(x, u)

    # -- jets -----------------------------------------------------------

    def jet(self, x: np.ndarray, u: np.ndarray,
            alpha: MultiIndex, beta: MultiIndex) -> np.ndarray:
        """d_xi^alpha d_x^beta of the homogeneous extension at xi = u."""
        if sum(alpha) + sum(beta) == 0:
            return self.value(x, u)
        if self.jet_fn is not None:
            return np.asarray(
                self.jet_fn(np.asarray(x, dtype=float),
                            np.asarray(u, dtype=float), alpha, beta)
            ).astype(complex, copy=False)
        return _fd_jet(self._extension, np.asarray(x, dtype=float),
                       np.asarray(u, dtype=float), alpha, beta)

    def _extension(self, x: np.ndarray, xi: np.ndarray) -> np.ndarray:
        return self.value_at(x, xi)

    def jet_at(self, x: np.ndarray, xi: np.ndarray,
               alpha: MultiIndex, beta: MultiIndex) -> np.ndarray:
        """Jet at general xi != 0; d_xi^alpha drops the degree by |alpha|."""
        xi = np.asarray(xi, dtype=float)
        r = np.asarray(np.linalg.norm(xi, axis=-1))
        u = xi / r[..., None]
        scale = np.asarray(np.exp((self.degree - sum(alpha)) * np.log(r)))
        return scale[..., None, None] * self.jet(x, u, alpha, beta)

    def point_jet(self, x: np.ndarray, u: np.ndarray,
                  order_xi: int, order_x: int) -> Jet:
        """Jet table at (x, u) for use in the pointwise jet arithmetic."""
        return Jet.build(self.dim, order_xi, order_x,
                         lambda a, b: self.jet(x, u, a, b))

    def scaled(self, c: complex) -> "HomogeneousComponent":
        return HomogeneousComponent(
            self.degree, self.dim, self.n,
            lambda x, u: c * self.eval_fn(x, u),
            None if self.jet_fn is None
            else (lambda x, u, a, b: c * self.jet_fn(x, u, a, b)),
            self.jet_order)


def zero_component(degree: complex, dim: int, n: int) -> HomogeneousComponent:
    z = np.zeros((n, n), dtype=complex)
    broadcast = lambda x, u: np.broadcast_to(
        z, np.broadcast_shapes(np.shape(x)[:-1], np.shape(u)[:-1]) + (n, n))
    return HomogeneousComponent(degree, dim, n, broadcast,
                                lambda x, u, a, b: broadcast(x, u),
                                None)


@dataclass(eq=False)
class ClassicalSymbol:
    """Truncated classical symbol expansion.

    Attributes
    ----------
    dim : int
        Space dimension d.
    order : complex
        Leading degree m.
    components : sequence of HomogeneousComponent
        Entry j has degree m - j; length is the truncation N.
    cutoff : CutoffSpec
        Radial cutoff applied when the expansion is evaluated.
    algebra : MatrixAlgebraSpec
        Coefficient algebra.
    spatial_support : ndarray(d, 2) or None
        Box containing the support of every x-dependent factor; None
        declares the symbol x-independent (multiplier type).
    """

    dim: int
    order: complex
    components: Sequence[HomogeneousComponent]
    cutoff: CutoffSpec = field(default_factory=CutoffSpec)
    algebra: MatrixAlgebraSpec = field(default_factory=lambda: MatrixAlgebraSpec(1))
    spatial_support: Optional[np.ndarray] = None

    def __post_init__(self):
        self.order = complex(self.order)
        self.components = tuple(self.components)
        for j, comp in enumerate(self.components):
            expected = self.order - j
            if abs(comp.degree - expected) > 1e-12:
                raise ValueError(
                    f"component {j} has degree {comp.degree}, expected {expected}")
        if self.spatial_support is not None:
            box = np.asarray(self.spatial_support, dtype=float)
            if box.shape != (self.dim, 2):
                raise ValueError("spatial_support must be a (d, 2) box")
            self.spatial_support = box

    @property
    def truncation(self) -> int:
        return len(self.components)

    @property
    def n(self) -> int:
        return self.algebra.n

    def component(self, j: int) -> Optional[HomogeneousComponent]:
        if 0 <= j < len(self.components):
            return self.components[j]
        return None

    @property
    def principal(self) -> HomogeneousComponent:
        return self.components[0]

    @property
    def is_multiplier(self) -> bool:
        return self.spatial_support is None


def evaluate_symbol(symbol: ClassicalSymbol, x: np.ndarray,
                    xi: np.ndarray,
                    truncation: Optional[int] = None) -> np.ndarray:
    """Evaluate the truncated expansion sum_j phi(xi) sigma_{m-j}(x, xi).

    Returns the zero matrix wherever |xi| <= 1/2 (the cutoff vanishes
    there, removing the homogeneity singularity at xi = 0). truncation
    limits the number of components summed.
    """
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    shape = np.broadcast_shapes(x.shape[:-1], xi.shape[:-1])
    n = symbol.n
    out = np.zeros(shape + (n, n), dtype=complex)
    r = np.broadcast_to(np.linalg.norm(xi, axis=-1), shape)
    live = r > symbol.cutoff.inner
    if not np.any(live):
        return out
    x_live = np.broadcast_to(x, shape + (symbol.dim,))[live]
    xi_live = np.broadcast_to(xi, shape + (symbol.dim,))[live]
    phi = symbol.cutoff.radial(r[live])
    comps = symbol.components if truncation is None \
        else symbol.components[:truncation]
    acc = np.zeros(x_live.shape[:-1] + (n, n), dtype=complex)
    for comp in comps:
        acc = acc + comp.value_at(x_live, xi_live)
    out[live] = phi[..., None, None] * acc
    return out


def _component_sum(parts: Sequence[tuple[complex, HomogeneousComponent,
                                         MultiIndex, MultiIndex]],
                   degree: complex, dim: int, n: int,
                   jet_order: Optional[int]) -> HomogeneousComponent:
    """Homogeneous component defined as sum_i c_i d_xi^{a_i} d_x^{b_i} comp_i.

    Each part is homogeneous of the common target degree after its
    derivatives are applied, so jets extend off the sphere by scaling.
    """

    def eval_fn(x, u):
        acc = None
        for c, comp, a, b in parts:
            term = c * comp.jet(x, u, a, b)
            acc = term if acc is None else acc + term
        if acc is None:
            shape = np.broadcast_shapes(np.shape(x)[:-1], np.shape(u)[:-1])
            acc = np.zeros(shape + (n, n), dtype=complex)
        return acc

    def jet_fn(x, u, alpha, beta):
        acc = None
        for c, comp, a, b in parts:
            term = c * comp.jet(x, u, add_indices(a, alpha),
                                add_indices(b, beta))
            acc = term if acc is None else acc + term
        if acc is None:
            shape = np.broadcast_shapes(np.shape(x)[:-1], np.shape(u)[:-1])
            acc = np.zeros(shape + (n, n), dtype=complex)
        return acc

    return HomogeneousComponent(degree, dim, n, eval_fn, jet_fn, jet_order)


def compose_symbols(left: ClassicalSymbol, right: ClassicalSymbol,
                    truncation: Optional[int] = None) -> ClassicalSymbol:
    """Symbol of Op(left) Op(right), truncated classical expansion.

    Degree m1 + m2 - j collects sum over |alpha| + k + l = j of
    (1/alpha!) d_xi^alpha left_{m1-k} . D_x^alpha right_{m2-l}.
    """
    if left.dim != right.dim or left.n != right.n:
        raise ValueError("symbols live on different spaces")
    d, n = left.dim, left.n
    if truncation is None:
        truncation = min(left.truncation, right.truncation)
    out_components = []
    for j in range(truncation):
        parts = []
        for a_ord in range(j + 1):
            for alpha in indices_of_order(d, a_ord):
                coeff = 1.0 / factorial(alpha)
                dx_phase = (-1j) ** a_ord
                for k in range(j - a_ord + 1):
                    l = j - a_ord - k
                    ck = left.component(k)
                    cl = right.component(l)
                    if ck is None or cl is None:
                        continue
                    parts.append((coeff * dx_phase, ck, cl, alpha))
        out_components.append(_product_sum_component(
            parts, left.order + right.order - j, d, n,
            _remaining_order(left, right, j)))
    support = _merge_supports(left, right)
    return ClassicalSymbol(d, left.order + right.order, out_components,
                           left.cutoff, left.algebra, support)


def _remaining_order(left: ClassicalSymbol, right: ClassicalSymbol,
                     j: int) -> Optional[int]:
    orders = [c.jet_order for c in list(left.components) + list(right.components)
              if c.jet_order is not None]
    if not orders:
        return None
    return max(0, min(orders) - j)


def _merge_supports(left: ClassicalSymbol,
                    right: ClassicalSymbol) -> Optional[np.ndarray]:
    if left.spatial_support is None and right.spatial_support is None:
        return None
    boxes = [b for b in (left.spatial_support, right.spatial_support)
             if b is not None]
    lo = np.min([b[:, 0] for b in boxes], axis=0)
    hi = np.max([b[:, 1] for b in boxes], axis=0)
    return np.stack([lo, hi], axis=1)


def _product_sum_component(parts, degree, dim, n, jet_order):
    """Component sum_i c_i (d_xi^{alpha_i} L_i) (d_x^{alpha_i} R_i).

    Every part is homogeneous of the common degree, and jets follow from
    the Leibniz rule applied to each product.
    """

    def jet_fn(x, u, alpha, beta):
        acc = None
        for c, compL, compR, a in parts:
            for a1 in lower_indices(alpha):
                ca1 = binomial(alpha, a1)
                a2 = sub_indices(alpha, a1)
                for b1 in lower_indices(beta):
                    cb1 = binomial(beta, b1)
                    b2 = sub_indices(beta, b1)
                    jl = compL.jet(x, u, add_indices(a, a1), b1)
                    jr = compR.jet(x, u, a2, add_indices(a, b2))
                    term = (c * ca1 * cb1) * (jl @ jr)
                    acc = term if acc is None else acc + term
        if acc is None:
            shape = np.broadcast_shapes(np.shape(x)[:-1], np.shape(u)[:-1])
            acc = np.zeros(shape + (n, n), dtype=complex)
        return acc

    def eval_fn(x, u):
        return jet_fn(x, u, zero_index(dim), zero_index(dim))

    return HomogeneousComponent(degree, dim, n, eval_fn, jet_fn, jet_order)


def adjoint_symbol(symbol: ClassicalSymbol,
                   truncation: Optional[int] = None) -> ClassicalSymbol:
    """Symbol of Op(a)^*: degree conj(m) - j collects
    sum_{|alpha|+k=j} (1/alpha!) d_xi^alpha D_x^alpha (a_{m-k})^*.
    """
    d, n = symbol.dim, symbol.n
    if truncation is None:
        truncation = symbol.truncation
    out_components = []
    for j in range(truncation):
        parts = []
        for a_ord in range(j + 1):
            k = j - a_ord
            comp = symbol.component(k)
            if comp is None:
                continue
            star = _starred_component(comp)
            for alpha in indices_of_order(d, a_ord):
                coeff = ((-1j) ** a_ord) / factorial(alpha)
                parts.append((coeff, star, alpha, alpha))
        out_components.append(_component_sum(
            parts, np.conjugate(symbol.order) - j, d, n,
            _remaining_order(symbol, symbol, j)))
    return ClassicalSymbol(d, np.conjugate(symbol.order), out_components,
                           symbol.cutoff, symbol.algebra,
                           None if symbol.spatial_support is None
                           else symbol.spatial_support.copy())


def _starred_component(comp: HomogeneousComponent) -> HomogeneousComponent:
    """Pointwise conjugate transpose; jets commute with the star."""
    conj_deg = np.conjugate(comp.degree)

    def eval_fn(x, u):
        return np.conjugate(np.swapaxes(comp.value(x, u), -1, -2))

    def jet_fn(x, u, alpha, beta):
        return np.conjugate(np.swapaxes(comp.jet(x, u, alpha, beta), -1, -2))

    return HomogeneousComponent(conj_deg, comp.dim, comp.n,
                                eval_fn, jet_fn, comp.jet_order)
