"""Localized zeta functions of elliptic symbols and operators.

For a positive elliptic symbol of order m > 0 in dimension d,

    zeta_sigma(z) = (2 pi)^{-d} integral tau(phi(x)* sigma_m(x,xi)^{-z} phi(x)) dx dxi

has its right-most simple pole at z = d/m with residue

    (1 / (m (2 pi)^d)) integral_{S^{d-1}} integral tau(phi* sigma_m^{-d/m} phi) dx du.

The xi integral splits into an exact radial factor on |xi| >= 1 plus
numerical quadrature of the cutoff transition region, times a sphere
integral of the fiber power. The operator-side zeta is the weighted
trace Tr(M_phi* A^{-z} M_phi) of the discretized operator; residues are
recovered from samples right of the pole by polynomial extrapolation of
g(z) = (z - d/m) zeta(z).

A finite frequency lattice carries no pole: its zeta is an entire
finite sum, and g vanishes at the pole instead of tending to the
residue. The deficit is the tail of the mode sum beyond the lattice
ceiling Xi, which scales like poly(t) * Xi^{-m t} in t = z - pole. When
the rate m*log(Xi) is supplied, the fit basis gains that exponential
mode and the polynomial part recovers the true residue from samples in
the same window right of the pole.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .families import bump_function
from .powers import matrix_power
from .quadrature import box_rule, sphere_rule
from .quantize import FREQ_DIAGONAL, SPACE_DIAGONAL, DiscretizedOperator
from .symbols import ClassicalSymbol, CutoffSpec

POLE_MARGIN = 1e-3


@dataclass(frozen=True)
class ZetaSample:
    """Zeta samples on the real axis right of the pole z = d/m."""

    z_values: tuple
    values: tuple
    pole: float

    def __post_init__(self):
        zs = tuple(complex(z) for z in self.z_values)
        vs = tuple(complex(v) for v in self.values)
        if len(zs) != len(vs):
            raise ValueError("z_values and values must align")
        if any(z.real <= self.pole + POLE_MARGIN for z in zs):
            raise ValueError(
                f"zeta samples must satisfy Re z > {self.pole} + 1e-3")
        object.__setattr__(self, "z_values", zs)
        object.__setattr__(self, "values", vs)

    def csv_rows(self) -> list:
        return [(z.real, z.imag, v.real, v.imag)
                for z, v in zip(self.z_values, self.values)]

    def write_csv(self, path: str) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["re_z", "im_z", "re_zeta", "im_zeta"])
            for row in self.csv_rows():
                writer.writerow([f"{c:.17g}" for c in row])


@dataclass(frozen=True)
class Localizer:
    """Compactly supported localizer phi(x) = profile(x) * matrix.

    profile maps points (..., d) to scalars; box is the (d, 2) support;
    matrix defaults to the identity of whatever algebra it meets.
    """

    profile: Callable[[np.ndarray], np.ndarray]
    box: np.ndarray
    matrix: Optional[np.ndarray] = None

    @classmethod
    def bump(cls, dim: int, center, radius: float, height: float = 1.0,
             matrix: Optional[np.ndarray] = None) -> "Localizer":
        center = np.asarray(center, dtype=float)
        fn = bump_function(dim, center, radius, height)
        box = np.stack([center - radius, center + radius], axis=1)
        return cls(fn, box, matrix)

    def gram(self, n: int) -> np.ndarray:
        """C = phi_matrix phi_matrix^*, the constant part of M_phi M_phi*."""
        if self.matrix is None:
            return np.eye(n, dtype=complex)
        P = np.asarray(self.matrix, dtype=complex)
        if P.shape != (n, n):
            raise ValueError("localizer matrix size mismatch")
        return P @ P.conj().T

    def squared_profile(self, x: np.ndarray) -> np.ndarray:
        vals = np.asarray(self.profile(x))
        return np.abs(vals) ** 2


def _as_localizer(phi) -> Localizer:
    if isinstance(phi, Localizer):
        return phi
    raise TypeError("expected a Localizer (use Localizer.bump or wrap "
                    "profile and support box explicitly)")


def _gauss_panel(a: float, b: float, npts: int = 128):
    t, w = np.polynomial.legendre.leggauss(npts)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return mid + half * t, half * w


def radial_factor(cutoff: CutoffSpec, s: complex, d: int) -> complex:
    """integral_0^inf chi(r) r^{d-1-s} dr for Re s > d.

    Exact 1/(s-d) on r >= outer plus Gauss quadrature of the transition
    region [inner, outer] where the cutoff climbs from 0 to 1.
    """
    if s.real <= d:
        raise ValueError("radial integral diverges: need Re(m z) > d")
    r, w = _gauss_panel(cutoff.inner, cutoff.outer)
    transition = np.sum(w * cutoff.radial(r) * r ** (d - 1 - s))
    outer_tail = cutoff.outer ** (d - s) / (s - d)
    return complex(transition + outer_tail)


def _angular_average(symbol: ClassicalSymbol, phi: Localizer, z: complex,
                     sphere_resolution: int,
                     space_per_axis: int) -> complex:
    """(2 pi)^{-d} int int tau(phi* sigma_m^{-z} phi) dx du over the
    sphere bundle (radial part factored out)."""
    d, n = symbol.dim, symbol.n
    sph = sphere_rule(d, sphere_resolution)
    box = box_rule(np.asarray(phi.box, dtype=float), space_per_axis)
    C = phi.gram(n)
    tau = symbol.algebra.trace
    if symbol.is_multiplier:
        fibers = symbol.principal.value(np.zeros((1, d)), sph.points)
        powers = matrix_power(fibers, -z)
        ang = np.sum(sph.weights * np.einsum("uab,ba->u", powers, C))
        space = np.sum(box.weights * phi.squared_profile(box.points))
        return complex(space * ang)
    X = box.points[:, None, :]
    U = sph.points[None, :, :]
    fibers = symbol.principal.value(X, U)
    powers = matrix_power(fibers, -z)
    per_point = np.einsum("xuab,ba->xu", powers, C)
    f2 = phi.squared_profile(box.points)
    return complex(np.einsum("x,x,u,xu->", box.weights, f2,
                             sph.weights, per_point))


def symbolic_zeta(symbol: ClassicalSymbol, phi, z: complex, *,
                  sphere_resolution: int = 200,
                  space_per_axis: int = 32) -> complex:
    """Principal-symbol zeta value at z (Re z > d/m)."""
    phi = _as_localizer(phi)
    z = complex(z)
    d = symbol.dim
    m = symbol.order.real
    if m <= 0:
        raise ValueError("zeta needs a positive order")
    if z.real <= d / m:
        raise ValueError(f"z on the pole side: need Re z > d/m = {d / m}")
    ang = _angular_average(symbol, phi, z, sphere_resolution, space_per_axis)
    rad = radial_factor(symbol.cutoff, m * z, d)
    return (2 * np.pi) ** (-d) * rad * ang


def symbolic_zeta_samples(symbol: ClassicalSymbol, phi,
                          z_values: Sequence[complex],
                          **kwargs) -> ZetaSample:
    vals = [symbolic_zeta(symbol, phi, z, **kwargs) for z in z_values]
    return ZetaSample(tuple(z_values), tuple(vals),
                      symbol.dim / symbol.order.real)


def residue_at_pole(symbol: ClassicalSymbol, phi, *,
                    sphere_resolution: int = 200,
                    space_per_axis: int = 32) -> complex:
    """Closed-form residue of the zeta at z = d/m."""
    phi = _as_localizer(phi)
    d = symbol.dim
    m = symbol.order.real
    if m <= 0:
        raise ValueError("residue needs a positive order")
    ang = _angular_average(symbol, phi, d / m, sphere_resolution,
                           space_per_axis)
    return ang / (m * (2 * np.pi) ** d)


def _localizer_on_grid(phi, op: DiscretizedOperator):
    grid = op.grid
    if isinstance(phi, np.ndarray):
        f = np.asarray(phi, dtype=complex)
        if f.shape != (grid.sites,):
            raise ValueError("grid localizer must give one value per site")
        return np.abs(f) ** 2, np.eye(op.n, dtype=complex)
    if isinstance(phi, Localizer):
        return (phi.squared_profile(grid.space_points()),
                phi.gram(op.n))
    if callable(phi):
        return (np.abs(np.asarray(phi(grid.space_points()),
                                  dtype=complex)) ** 2,
                np.eye(op.n, dtype=complex))
    raise TypeError("localizer must be a Localizer, callable, or per-site "
                    "value array")


def spectral_weights(op: DiscretizedOperator, phi) -> tuple:
    """(eigenvalues w_e, weights q_e) with
    Tr(M_phi* A^{-z} M_phi) = sum_e w_e^{-z} q_e.

    A must be Hermitian positive definite; indicator-style localizers
    (per-site arrays) are accepted.
    """
    if not op.is_hermitian():
        raise ValueError("operator zeta needs a Hermitian operator")
    f2, C = _localizer_on_grid(phi, op)
    n, S = op.n, op.grid.sites
    if op.rep_kind == FREQ_DIAGONAL:
        w, V = np.linalg.eigh(op.payload)
        q = np.einsum("kia,ab,kib->ki", V.conj(), C, V).real
        q = q * np.mean(f2)
    elif op.rep_kind == SPACE_DIAGONAL:
        w, V = np.linalg.eigh(op.payload)
        q = np.einsum("kia,ab,kib->ki", V.conj(), C, V).real
        q = q * f2[:, None]
    else:
        w, V = np.linalg.eigh(op.matrix)
        v = V.reshape(S, n, -1)
        q = np.einsum("j,jae,ab,jbe->e", f2, v.conj(), C, v).real
    w = np.asarray(w, dtype=float).ravel()
    q = np.asarray(q, dtype=float).ravel()
    if np.any(w <= 0):
        raise ValueError("operator zeta needs a positive definite operator")
    return w, q


def operator_zeta(op: DiscretizedOperator, phi, z: complex) -> complex:
    """Tr(M_phi* A^{-z} M_phi) on the grid."""
    w, q = spectral_weights(op, phi)
    return complex(np.sum(np.exp(-complex(z) * np.log(w)) * q))


def operator_zeta_samples(op: DiscretizedOperator, phi,
                          z_values: Sequence[complex],
                          pole: Optional[float] = None) -> ZetaSample:
    w, q = spectral_weights(op, phi)
    logw = np.log(w)
    vals = [complex(np.sum(np.exp(-complex(z) * logw) * q))
            for z in z_values]
    if pole is None:
        if op.order_hint is None or op.order_hint <= 0:
            raise ValueError("need a positive order hint (or explicit pole)")
        pole = op.grid.dim / op.order_hint
    return ZetaSample(tuple(z_values), tuple(vals), pole)


class ResidueFit(complex):
    """Extrapolated residue; carries the fit report."""

    fit_residual: float
    degree: int

    def __new__(cls, value: complex, fit_residual: float, degree: int):
        obj = super().__new__(cls, value)
        obj.fit_residual = float(fit_residual)
        obj.degree = int(degree)
        return obj


def lattice_truncation_rate(op: DiscretizedOperator) -> float:
    """Decay rate m * log(Xi) of the missing-tail term of an operator
    zeta, from the grid's frequency ceiling Xi and the order hint."""
    if op.order_hint is None or op.order_hint <= 0:
        raise ValueError("need a positive order hint")
    xi_max = np.pi * op.grid.npts / op.grid.L
    return float(op.order_hint * np.log(xi_max))


def extrapolate_residue(sample: ZetaSample,
                        degree: Optional[int] = None,
                        truncation_rate: Optional[float] = None,
                        truncation_degree: int = 2) -> ResidueFit:
    """Fit g(z) = (z - pole) zeta(z) by a polynomial in t = z - pole and
    return g(pole), the residue.

    With truncation_rate = a the basis gains poly(t) * exp(-a t) terms
    of degree truncation_degree, absorbing the finite-lattice deficit of
    operator-side samples; the residue is still the constant polynomial
    coefficient. Use lattice_truncation_rate to obtain a.
    """
    z = np.asarray(sample.z_values, dtype=complex)
    vals = np.asarray(sample.values, dtype=complex)
    if len(z) < 4:
        raise ValueError("need at least 4 zeta samples")
    t = z - sample.pole
    if np.any(t.real > 0.5 + 1e-12):
        raise ValueError("zeta samples must sit within 0.5 of the pole")
    g = t * vals
    if degree is None:
        degree = min(3, len(z) - 2)
    V = np.vander(t, degree + 1, increasing=True)
    if truncation_rate is not None:
        if truncation_rate <= 0:
            raise ValueError("truncation_rate must be positive")
        decay = np.exp(-truncation_rate * t)
        E = np.vander(t, truncation_degree + 1, increasing=True)
        V = np.hstack([V, E * decay[:, None]])
        if len(z) < V.shape[1] + 1:
            raise ValueError("need more samples than basis functions")
    cond = np.linalg.cond(V)
    if cond > 1e10:
        raise ValueError(f"ill-conditioned residue fit (cond={cond:.2e}); "
                         "spread the samples")
    coef, *_ = np.linalg.lstsq(V, g, rcond=None)
    fit = V @ coef
    resid = float(np.max(np.abs(fit - g)) / max(np.max(np.abs(g)), 1e-300))
    return ResidueFit(coef[0], resid, degree)
