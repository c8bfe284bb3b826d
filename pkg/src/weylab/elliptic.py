"""Ellipticity certificates, parametrices, and resolvent expansions.

An order-m symbol is elliptic when the principal part is invertible on
the unit sphere with ||sigma_m(x, u)^{-1}|| <= C1; equivalently the
smallest singular value stays above C2 = 1/C1. check_ellipticity
certifies both constants by dense sampling.

The parametrix inverts the symbol degree by degree:

    b_{-m}   = sigma_m^{-1},
    b_{-m-j} = -[ sum_{|alpha|+k+l=j, l<j} (1/alpha!)
                  d_xi^alpha b_{-m-l} . D_x^alpha sigma_{m-k} ] sigma_m^{-1},

so compose(parametrix, symbol) is 1 + O(|xi|^{-N}).

The resolvent expansion solves (sigma - lambda) degree by degree on the
keyhole region (small |lambda| or arg lambda near pi):

    B_0(lambda)  = (sigma_m - lambda)^{-1},
    B_j(lambda)  = -[ sum_{|alpha|+k+l=j, k<j} (1/alpha!)
                     d_xi^alpha B_k . D_x^alpha (sigma - lambda)_{m-l} ]
                   (sigma_m - lambda)^{-1},

with lambda counted as degree m, giving the joint homogeneity
B_j(x, t xi, t^m lambda) = t^{-m-j} B_j(x, xi, lambda). All lambda
arithmetic is batched, so a whole contour node set evaluates at once.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .jets import Jet
from .multiindex import factorial, indices_of_order, zero_index
from .quadrature import box_rule, sphere_rule
from .symbols import (
    ClassicalSymbol,
    HomogeneousComponent,
    MatrixAlgebraSpec,
)


@dataclass(frozen=True)
class EllipticityReport:
    """Sampled ellipticity certificate for a classical symbol.

    c1 bounds ||sigma_m^{-1}|| on the sphere bundle; c2 is the smallest
    singular value of sigma_m there (c1 * c2 = 1 on the same sample set).
    spectral_floor / spectral_ceiling bound the Hermitian eigenvalues of
    the sampled principal symbol, used to place resolvent contours.
    """

    order: complex
    c1: float
    c2: float
    spectral_floor: float
    spectral_ceiling: float
    sphere_count: int
    space_count: int
    worst_point: Optional[tuple] = None

    @property
    def is_elliptic(self) -> bool:
        return np.isfinite(self.c1) and self.c2 > 0


def _space_samples(symbol: ClassicalSymbol, resolution: int) -> np.ndarray:
    if symbol.spatial_support is None:
        return np.zeros((1, symbol.dim))
    per_axis = max(2, int(round(resolution ** (1.0 / symbol.dim))))
    return box_rule(symbol.spatial_support, per_axis).points


def check_ellipticity(symbol: ClassicalSymbol,
                      sphere_resolution: int = 200,
                      space_resolution: int = 200) -> EllipticityReport:
    """Certify E1/E2 ellipticity constants by dense sampling."""
    sphere = sphere_rule(symbol.dim, sphere_resolution)
    xs = _space_samples(symbol, space_resolution)
    vals = symbol.principal.value(xs[:, None, :], sphere.points[None, :, :])
    svals = np.linalg.svd(vals, compute_uv=False)
    smin_grid = svals[..., -1]
    where = np.unravel_index(int(np.argmin(smin_grid)), smin_grid.shape)
    smin = float(smin_grid[where])
    smax = float(svals[..., 0].max())
    # A sample within round-off of singular counts as singular: the
    # certificate must reject symbols that vanish on the sphere bundle.
    singular = smin <= 1e-10 * smax
    herm = 0.5 * (vals + np.conjugate(np.swapaxes(vals, -1, -2)))
    eigs = np.linalg.eigvalsh(herm)
    return EllipticityReport(
        order=symbol.order,
        c1=np.inf if singular else float(1.0 / smin),
        c2=0.0 if singular else smin,
        spectral_floor=float(eigs.min()),
        spectral_ceiling=float(max(smax, eigs.max())),
        sphere_count=sphere.count,
        space_count=len(xs),
        worst_point=(tuple(xs[where[0]]), tuple(sphere.points[where[1]])),
    )


@dataclass(frozen=True)
class KeyholeSpec:
    """Keyhole resolvent region: a disc |lambda| < arc_radius together
    with the sector |arg lambda - theta0| < aperture."""

    arc_radius: float
    theta0: float = np.pi
    aperture: float = np.pi / 4.0

    def contains(self, lam: np.ndarray) -> np.ndarray:
        lam = np.asarray(lam, dtype=complex)
        in_disc = np.abs(lam) < self.arc_radius
        ang = np.angle(-lam)  # distance of arg(lam) from pi, sign-safe
        in_sector = np.abs(ang) < self.aperture
        return in_disc | in_sector

    def ray_points(self, count: int, r_max: float) -> np.ndarray:
        """Log-spaced points on the ray arg lambda = theta0."""
        radii = np.geomspace(self.arc_radius, r_max, count)
        return radii * np.exp(1j * self.theta0)

    @staticmethod
    def for_report(report: EllipticityReport) -> "KeyholeSpec":
        """Default keyhole: arc radius half the certified spectral floor."""
        return KeyholeSpec(arc_radius=0.5 * report.spectral_floor)


def _component_jets(symbol: ClassicalSymbol, x, u,
                    order_xi: int, order_x: int) -> list[Jet]:
    return [comp.point_jet(x, u, order_xi, order_x)
            for comp in symbol.components]


def _leibniz_correction(b_jets: Sequence[Jet], a_jets: Sequence[Jet],
                        j: int, d: int, skip: str) -> Optional[Jet]:
    """sum_{|alpha|+k+l=j} (1/alpha!) d_xi^alpha B_k . D_x^alpha A_l.

    skip='left' omits k=j (parametrix/resolvent recursion); the caller
    multiplies by the inverted principal factor afterwards.
    """
    acc = None
    for a_ord in range(j + 1):
        phase = (-1j) ** a_ord
        for alpha in indices_of_order(d, a_ord):
            coeff = phase / factorial(alpha)
            for k in range(j - a_ord + 1):
                l = j - a_ord - k
                if skip == "left" and k == j:
                    continue
                if k >= len(b_jets) or l >= len(a_jets):
                    continue
                zero = zero_index(d)
                term = (b_jets[k].derivative(alpha, zero)
                        .matmul(a_jets[l].derivative(zero, alpha))
                        .scaled(coeff))
                acc = term if acc is None else acc + term
    return acc


def parametrix_jets(symbol: ClassicalSymbol, x, u,
                    truncation: int, order_xi: int, order_x: int) -> list[Jet]:
    """Jet tables of the parametrix components b_{-m-j} at (x, u)."""
    need_xi = order_xi + truncation - 1
    need_x = order_x + truncation - 1
    a_jets = _component_jets(symbol, x, u, need_xi, need_x)
    inv0 = a_jets[0].inverse()
    b_jets: list[Jet] = [inv0]
    for j in range(1, truncation):
        corr = _leibniz_correction(b_jets, a_jets, j, symbol.dim, skip="left")
        b_jets.append(corr.matmul(inv0).scaled(-1.0))
    return b_jets


def parametrix(symbol: ClassicalSymbol,
               truncation: Optional[int] = None) -> ClassicalSymbol:
    """Parametrix symbol of order -m for an elliptic classical symbol."""
    if truncation is None:
        truncation = symbol.truncation
    d, n = symbol.dim, symbol.n
    m = symbol.order

    def make_component(j: int) -> HomogeneousComponent:
        def jet_fn(x, u, alpha, beta):
            tables = parametrix_jets(symbol, x, u, j + 1,
                                     sum(alpha), sum(beta))
            return tables[j].data[(tuple(alpha), tuple(beta))]

        def eval_fn(x, u):
            return jet_fn(x, u, zero_index(d), zero_index(d))

        jet_order = None
        finite = [c.jet_order for c in symbol.components
                  if c.jet_order is not None]
        if finite:
            jet_order = max(0, min(finite) - j)
        return HomogeneousComponent(-m - j, d, n, eval_fn, jet_fn, jet_order)

    comps = [make_component(j) for j in range(truncation)]
    return ClassicalSymbol(d, -m, comps, symbol.cutoff, symbol.algebra,
                           None if symbol.spatial_support is None
                           else symbol.spatial_support.copy())


class ResolventExpansion:
    """Degree-by-degree resolvent symbols B_j(x, xi, lambda).

    Values and jets are computed for batches of lambda at once; lambda is
    graded with degree m, so values off the unit sphere follow from

        B_j(x, xi, lambda) = r^{-m-j} B_j(x, xi/r, lambda / r^m), r=|xi|.
    """

    def __init__(self, symbol: ClassicalSymbol,
                 truncation: Optional[int] = None):
        self.symbol = symbol
        self.truncation = symbol.truncation if truncation is None else truncation
        self.m = symbol.order

    def jet_tables(self, x, u, lam: np.ndarray,
                   order_xi: int = 0, order_x: int = 0) -> list[Jet]:
        """Jets of B_0..B_{J-1} at (x, u), batched over lam."""
        sym = self.symbol
        lam = np.asarray(lam, dtype=complex)
        need_xi = order_xi + self.truncation - 1
        need_x = order_x + self.truncation - 1
        a_jets = _component_jets(sym, x, u, need_xi, need_x)
        n = sym.n
        # lambda axes broadcast ahead of any (x, u) batch axes.
        batch_nd = len(np.broadcast_shapes(np.shape(x)[:-1], np.shape(u)[:-1]))
        lam_lead = lam.reshape(lam.shape + (1,) * batch_nd)
        shifted = a_jets[0].shift(lam_lead, n)
        r0 = shifted.inverse()
        b_jets: list[Jet] = [r0]
        # A - lambda has the lambda only in its principal entry:
        a_shift = [shifted] + list(a_jets[1:])
        for j in range(1, self.truncation):
            corr = _leibniz_correction(b_jets, a_shift, j, sym.dim,
                                       skip="left")
            b_jets.append(corr.matmul(r0).scaled(-1.0))
        return b_jets

    def component_value(self, j: int, x, u, lam: np.ndarray) -> np.ndarray:
        tables = self.jet_tables(x, u, lam, 0, 0)
        return tables[j].value

    def value_at(self, j: int, x, xi, lam: np.ndarray) -> np.ndarray:
        """B_j at general xi != 0 through joint homogeneity."""
        xi = np.asarray(xi, dtype=float)
        r = float(np.linalg.norm(xi))
        u = xi / r
        scaled_lam = np.asarray(lam, dtype=complex) / r ** self.m
        val = self.component_value(j, x, u, scaled_lam)
        return r ** (-self.m - j) * val


def resolvent_symbols(symbol: ClassicalSymbol,
                      truncation: Optional[int] = None) -> ResolventExpansion:
    """Resolvent expansion of an elliptic symbol; evaluate its components
    at chosen (x, u, lambda) batches via the returned object."""
    return ResolventExpansion(symbol, truncation)
