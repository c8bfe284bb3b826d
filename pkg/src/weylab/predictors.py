"""Closed-form limits for the spectral asymptotics, commutator
builders, and the random-potential density of states.

Every asymptotic experiment compares a measured quantity (from the
spectral module) against a prediction computed here by quadrature of
the corresponding closed-form integral. Commutator predictions work
with the degree-0 homogeneous extension of a sphere function; the
density of states uses the counting constant pinned by the explicit
d = 1 lattice oracle: for order m > 0,

    N(lambda) / lambda^{d/m} -> (1 / (d (2 pi)^d))
        * integral_{S^{d-1}} integral tau(E sigma_m(x, u)^{-d/m}) dx du.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
import sympy as sp

from .families import SmoothFunction, _entry_lambdify, freq_symbols
from .quadrature import (box_rule, refine_box, refine_sphere, sphere_rule,
                         sphere_box_integrate)
from .quantize import DENSE, DiscretizedOperator, GridSpec
from .symbols import ClassicalSymbol, MatrixAlgebraSpec

QUAD_AGREEMENT = 0.01


class Prediction(float):
    """Predicted limit; carries the two-refinement quadrature gap."""

    quad_gap: float

    def __new__(cls, value: float, quad_gap: float):
        obj = super().__new__(cls, value)
        obj.quad_gap = float(quad_gap)
        return obj


def _trace_abs_power(B: np.ndarray, p: float) -> np.ndarray:
    """tau(|B|^p) pointwise over leading axes, via |B| = (B* B)^{1/2}.

    Eigenvalues of B* B may vanish on the support boundary, so the
    power is taken on the clipped spectrum directly.
    """
    B = np.asarray(B, dtype=complex)
    H = np.einsum("...ca,...cb->...ab", B.conj(), B)
    eigs = np.clip(np.linalg.eigvalsh(H), 0.0, None)
    return np.sum(eigs ** (p / 2.0), axis=-1)


def _refined_integral(sphere, box, fn):
    """Integral plus its value at one joint refinement level."""
    coarse = sphere_box_integrate(sphere, box, fn)
    fine = sphere_box_integrate(refine_sphere(sphere), refine_box(box), fn)
    return float(np.real(coarse)), float(np.real(fine))


def _prediction(coarse: float, fine: float, exponent: float,
                constant: float, label: str) -> Prediction:
    if fine == 0.0 and coarse == 0.0:
        return Prediction(0.0, 0.0)
    gap = abs(fine - coarse) / max(abs(fine), 1e-300)
    if gap > QUAD_AGREEMENT:
        warnings.warn(f"{label}: quadrature refinements disagree by "
                      f"{gap:.2%}; increase the resolution", stacklevel=3)
    return Prediction(constant * fine ** exponent, gap)


def expected_weyl(symbol: ClassicalSymbol, f, m: Optional[float] = None,
                  d: Optional[int] = None, *,
                  sphere_resolution: int = 200,
                  space_per_axis: int = 32,
                  box=None) -> Prediction:
    """Weyl constant for T = Op(sigma) M_f with sigma of order -m:

        d^{-m/d} (2 pi)^{-m}
            [int_{S^{d-1}} int tau(|sigma_{-m}(x,u) f(x)|^{d/m}) dx du]^{m/d}
    """
    d = symbol.dim if d is None else d
    m = -symbol.order.real if m is None else m
    if m <= 0:
        raise ValueError("need a symbol of negative order -m, m > 0")
    if box is None:
        box = (symbol.spatial_support if symbol.spatial_support is not None
               else np.array([[-1.0, 1.0]] * d))
    sphere = sphere_rule(d, sphere_resolution)
    brule = box_rule(np.asarray(box, dtype=float), space_per_axis)

    def integrand(x, u):
        sig = symbol.principal.value(x, u)
        n = sig.shape[-1]
        shape = np.broadcast_shapes(np.shape(x)[:-1], np.shape(u)[:-1])
        xb = np.broadcast_to(x, shape + (d,))
        fv = np.asarray(f(xb), dtype=complex)
        if fv.shape == shape:
            fv = fv[..., None, None] * np.eye(n)
        elif fv.shape != shape + (n, n):
            raise ValueError("f must return scalars or n x n matrices "
                             "per point")
        sigb = np.broadcast_to(sig, shape + (n, n))
        return _trace_abs_power(sigb @ fv, d / m)

    coarse, fine = _refined_integral(sphere, brule, integrand)
    const = d ** (-m / d) * (2 * np.pi) ** (-m)
    return _prediction(coarse, fine, m / d, const, "expected_weyl")


def homogeneous_extension(phi_sphere, d: int):
    """Degree-0 homogeneous extension of a sphere function.

    phi_sphere is a sympy expression in the frequency variables k1..kd,
    read as a function on the unit sphere; substituting k -> k/|k|
    extends it by homogeneity. Returns (extension expr, gradient exprs
    restricted to the sphere).
    """
    ks = freq_symbols(d)
    r = sp.sqrt(sum(k ** 2 for k in ks))
    ext = sp.sympify(phi_sphere).subs(
        [(k, sp.Symbol(f"_t{i}")) for i, k in enumerate(ks)]).subs(
        [(sp.Symbol(f"_t{i}"), k / r) for i, k in enumerate(ks)])
    grads = [sp.simplify(sp.diff(ext, k).subs(r, 1)) for k in ks]
    return ext, grads


def multiplier_lattice_values(phi_sphere, grid: GridSpec) -> np.ndarray:
    """Degree-0 homogeneous extension of phi_sphere on the frequency
    lattice (value 0 at xi = 0), shape (sites,)."""
    d = grid.dim
    ext, _ = homogeneous_extension(phi_sphere, d)
    ks = freq_symbols(d)
    ext_fn = _entry_lambdify(list(ks), ext)
    xi = grid.frequency_points()
    args = [xi[:, i] for i in range(d)]
    r2 = np.sum(xi ** 2, axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        vals = np.asarray(ext_fn(*args), dtype=complex)
    return np.where(r2 > 0, np.broadcast_to(vals, r2.shape), 0.0)


def fourier_section_coefficients(f: SmoothFunction,
                                 grid: GridSpec) -> np.ndarray:
    """Fourier coefficients of f on the doubled frequency lattice, so
    every difference of two box frequencies is represented without
    wrap-around. Axis order matches fft indexing modulo 2 npts."""
    n2 = 2 * grid.npts
    axis = -grid.L / 2 + (grid.L / n2) * np.arange(n2)
    mesh = np.meshgrid(*([axis] * grid.dim), indexing="ij")
    pts = np.stack([a.ravel() for a in mesh], axis=-1)
    fv = np.asarray(f(pts), dtype=complex).reshape((n2,) * grid.dim)
    return np.fft.fftn(fv) / n2 ** grid.dim


def cz_commutator_build(phi_sphere, f: SmoothFunction, grid: GridSpec,
                        n: int = 1) -> DiscretizedOperator:
    """Finite section of [T_phi, M_f] on the truncated frequency box.

    T_phi is the Fourier multiplier of the degree-0 homogeneous
    extension of phi_sphere (zero at xi = 0). The kernel is assembled
    directly in the frequency representation,

        K(xi, xi') = (phi(xi) - phi(xi')) fhat(xi - xi'),

    with the true lattice difference xi - xi', i.e. the compression
    P_N [T_phi, M_f] P_N of the full lattice operator. Building the
    product on the sampled torus instead would alias fhat across the
    frequency seam, and a degree-0 extension of odd phi_sphere jumps by
    O(1) there, polluting O(npts) singular values. Constant f gives
    exactly the zero operator.

    The returned dense payload acts in the frequency basis; use it for
    basis-independent quantities (singular values, norms, traces) only.
    """
    p = multiplier_lattice_values(phi_sphere, grid)
    chat = fourier_section_coefficients(f, grid)
    npts, d = grid.npts, grid.dim
    idx = np.arange(-npts // 2, npts // 2, dtype=np.int64)
    mesh = np.meshgrid(*([idx] * d), indexing="ij")
    ii = np.stack([a.ravel() for a in mesh], axis=-1)
    diff = tuple((ii[:, a][:, None] - ii[:, a][None, :]) % (2 * npts)
                 for a in range(d))
    K = (p[:, None] - p[None, :]) * chat[diff]
    if n > 1:
        K = np.kron(K, np.eye(n))
    return DiscretizedOperator(grid, MatrixAlgebraSpec(n), DENSE, K,
                               None, -1.0)


def expected_weyl_cz(phi_sphere, f: SmoothFunction, d: int, *,
                     sphere_resolution: int = 200,
                     space_per_axis: int = 32,
                     box=None) -> Prediction:
    """Commutator Weyl constant

        (2 pi)^{-1} d^{-1/d}
            [int_{S^{d-1}} int tau(|grad phi(s) . grad f(x)|^d) dx ds]^{1/d}

    with grad phi the sphere-restricted gradient of the degree-0
    extension.
    """
    if d < 2:
        raise ValueError("the singular-kernel commutator needs d >= 2")
    _, grads = homogeneous_extension(phi_sphere, d)
    ks = freq_symbols(d)
    grad_fns = [_entry_lambdify(list(ks), g) for g in grads]
    if box is None:
        box = np.array([[-1.0, 1.0]] * d)
    sphere = sphere_rule(d, sphere_resolution)
    brule = box_rule(np.asarray(box, dtype=float), space_per_axis)

    def integrand(x, u):
        shape = np.broadcast_shapes(np.shape(x)[:-1], np.shape(u)[:-1])
        xb = np.broadcast_to(x, shape + (d,))
        ub = np.broadcast_to(u, shape + (d,))
        args = [ub[..., i] for i in range(d)]
        df = f.gradient(xb)
        total = np.zeros(shape, dtype=complex)
        for i in range(d):
            total = total + np.broadcast_to(
                np.asarray(grad_fns[i](*args), dtype=complex),
                shape) * df[..., i]
        return np.abs(total) ** d

    coarse, fine = _refined_integral(sphere, brule, integrand)
    const = (2 * np.pi) ** (-1) * d ** (-1.0 / d)
    return _prediction(coarse, fine, 1.0 / d, const, "expected_weyl_cz")


def frac_constant(d: int, alpha: float) -> float:
    """C_{d, alpha} = |alpha| d^{(alpha - 1)/d} (2 pi)^{alpha - 1}."""
    return abs(alpha) * d ** ((alpha - 1.0) / d) * \
        (2 * np.pi) ** (alpha - 1.0)


def expected_weyl_frac(alpha: float, f: SmoothFunction, d: int, *,
                       sphere_resolution: int = 200,
                       space_per_axis: int = 32,
                       box=None) -> Prediction:
    """Fractional-power commutator constant

        C_{d,alpha} [int_{S^{d-1}} int tau(|s . grad f(x)|^{d/(1-alpha)})
                     dx ds]^{(1-alpha)/d}

    valid for d >= 2 with alpha in (-d/2, 0) u (0, 1), or d = 1 with
    alpha in (0, 1).
    """
    in_range = ((d >= 2 and (-d / 2.0 < alpha < 0 or 0 < alpha < 1))
                or (d == 1 and 0 < alpha < 1))
    if not in_range:
        raise ValueError(
            f"alpha={alpha} outside the admissible range for d={d}: need "
            "alpha in (-d/2, 0) u (0, 1) for d >= 2, or (0, 1) for d = 1")
    if box is None:
        box = np.array([[-1.0, 1.0]] * d)
    sphere = sphere_rule(d, sphere_resolution)
    brule = box_rule(np.asarray(box, dtype=float), space_per_axis)
    p = d / (1.0 - alpha)

    def integrand(x, u):
        shape = np.broadcast_shapes(np.shape(x)[:-1], np.shape(u)[:-1])
        xb = np.broadcast_to(x, shape + (d,))
        ub = np.broadcast_to(u, shape + (d,))
        df = f.gradient(xb)
        return np.abs(np.sum(ub * df, axis=-1)) ** p

    coarse, fine = _refined_integral(sphere, brule, integrand)
    return _prediction(coarse, fine, (1.0 - alpha) / d,
                       frac_constant(d, alpha), "expected_weyl_frac")


# -- random potentials and density of states ---------------------------

COUPLING_LAWS = ("rademacher", "uniform", "deterministic")


@dataclass(frozen=True)
class RandomModel:
    """Random potential V(x, eps) = sum_nu V0(x + nu) eps_nu over the
    integer translates nu inside the torus.

    Couplings are drawn per sample with a counter-based seed, so sample
    k is reproducible independently of scheduling. The deterministic
    law sets eps identically to zero (free operator).
    """

    dim: int
    base_profile: Callable[[np.ndarray], np.ndarray]
    law: str
    sample_count: int
    seed: int

    def __post_init__(self):
        if self.law not in COUPLING_LAWS:
            raise ValueError(f"unknown coupling law {self.law!r}")
        if self.sample_count <= 0:
            raise ValueError("sample_count must be positive")

    def lattice_shifts(self, L: float) -> np.ndarray:
        cells = int(round(L))
        if abs(L - cells) > 1e-12 or cells < 1:
            raise ValueError("the coupling lattice needs an integer "
                             "torus side")
        axis = np.arange(-(cells // 2), cells - cells // 2)
        mesh = np.meshgrid(*([axis] * self.dim), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1).astype(float)

    def couplings(self, sample_index: int, count: int) -> np.ndarray:
        if self.law == "deterministic":
            return np.zeros(count)
        rng = np.random.default_rng((self.seed, sample_index))
        if self.law == "rademacher":
            return rng.integers(0, 2, size=count) * 2.0 - 1.0
        return rng.uniform(-1.0, 1.0, size=count)

    def realize(self, grid: GridSpec, sample_index: int) -> np.ndarray:
        """Per-site potential values for one coupling sample."""
        if grid.dim != self.dim:
            raise ValueError("grid dimension mismatch")
        if grid.npts % int(round(grid.L)) != 0:
            raise ValueError("npts must be divisible by the torus side "
                             "so lattice shifts land on grid points")
        shifts = self.lattice_shifts(grid.L)
        eps = self.couplings(sample_index, len(shifts))
        x = grid.space_points()
        V = np.zeros(grid.sites)
        half = grid.L / 2.0
        for nu, e in zip(shifts, eps):
            if e == 0.0:
                continue
            y = np.mod(x + nu + half, grid.L) - half
            V += e * np.asarray(self.base_profile(y), dtype=float)
        return V


def dos_estimate(model: RandomModel,
                 op_builder: Callable[[np.ndarray], DiscretizedOperator],
                 lam_grid: Sequence[float],
                 grid: GridSpec) -> list:
    """Monte-Carlo density of states: per sample, the eigenvalue count
    below each lambda normalized by the torus volume; returns a list of
    (lambda, mean, stderr)."""
    lam = np.asarray(lam_grid, dtype=float)
    counts = []
    skipped = []
    for k in range(model.sample_count):
        try:
            V = model.realize(grid, k)
            op = op_builder(V)
            if not op.is_hermitian():
                raise ValueError("builder produced a non-Hermitian "
                                 "operator")
            if op.rep_kind in ("freq_diagonal", "space_diagonal"):
                eigs = np.linalg.eigvalsh(op.payload).ravel()
            else:
                eigs = np.linalg.eigvalsh(op.matrix)
            counts.append(np.searchsorted(np.sort(eigs), lam,
                                          side="right")
                          / grid.L ** grid.dim)
        except (ValueError, np.linalg.LinAlgError) as exc:
            skipped.append((k, str(exc)))
            warnings.warn(f"sample {k} skipped: {exc}", stacklevel=2)
    if len(skipped) > 0.1 * model.sample_count:
        raise RuntimeError(f"{len(skipped)} of {model.sample_count} "
                           "samples failed")
    arr = np.asarray(counts)
    mean = arr.mean(axis=0)
    if len(arr) > 1:
        stderr = arr.std(axis=0, ddof=1) / np.sqrt(len(arr))
    else:
        stderr = np.zeros_like(mean)
    return [(float(l), float(m), float(s))
            for l, m, s in zip(lam, mean, stderr)]


def dos_prediction(symbol: ClassicalSymbol, lam, *,
                   sphere_resolution: int = 200,
                   space_per_axis: int = 16) -> np.ndarray:
    """Integrated density of states of an order-m operator:

        N(lambda) = lambda^{d/m} (1 / (d (2 pi)^d))
            * int_{S^{d-1}} int_{[0,1]^d} tau(sigma_m(x,u)^{-d/m}) dx du

    with the constant pinned against the explicit d = 1 lattice count.
    The expectation over couplings must already be folded into sigma_m.
    """
    d = symbol.dim
    m = symbol.order.real
    if m <= 0:
        raise ValueError("density of states needs a positive order")
    sphere = sphere_rule(d, sphere_resolution)
    brule = box_rule(np.array([[0.0, 1.0]] * d), space_per_axis)

    def integrand(x, u):
        sig = symbol.principal.value(x, u)
        eigs = np.linalg.eigvalsh(sig)
        if np.any(eigs <= 0):
            raise ValueError("principal symbol must be positive definite "
                             "on the sphere")
        return np.sum(eigs ** (-d / m), axis=-1)

    total = float(np.real(sphere_box_integrate(sphere, brule, integrand)))
    lam = np.asarray(lam, dtype=float)
    out = np.where(lam > 0, np.abs(lam) ** (d / m), 0.0) * \
        total / (d * (2 * np.pi) ** d)
    return out if out.ndim else float(out)
