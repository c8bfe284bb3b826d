"""Finite-dimensional realization of pseudo-differential operators.

Functions live on a periodic grid over [-L/2, L/2)^d with Npts points
per axis; frequencies are the integer lattice scaled by 2 pi / L. The
Kohn-Nirenberg matrix is

    A[(j,a),(j',b)] = N^{-d} sum_k sigma_ab(x_j, xi_k) e^{i xi_k.(x_j - x_j')}

which acts exactly like sigma(x_j, xi_k) on sampled pure waves.

Operators remember structure: multipliers stay diagonal in frequency and
multiplication operators diagonal in space, so spectral work on them
scales with the number of blocks instead of the full matrix side. The
dense matrix is materialized on demand (capped side), and every mixed
product falls back to dense GEMM; there is no fast application path.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .symbols import ClassicalSymbol, MatrixAlgebraSpec, evaluate_symbol

DENSE_SIDE_CAP = 8192
HERMITIAN_TOL = 1e-10

FREQ_DIAGONAL = "freq_diagonal"
SPACE_DIAGONAL = "space_diagonal"
DENSE = "dense"


@dataclass(frozen=True)
class GridSpec:
    """Periodic grid: dim axes, side length L, npts points per axis."""

    dim: int
    L: float
    npts: int

    def __post_init__(self):
        if self.npts < 2 or (self.npts & (self.npts - 1)) != 0:
            raise ValueError("npts must be a power of two")
        if self.L <= 0:
            raise ValueError("torus side must be positive")

    @property
    def sites(self) -> int:
        return self.npts ** self.dim

    @property
    def dx(self) -> float:
        return self.L / self.npts

    @property
    def dxi(self) -> float:
        return 2.0 * np.pi / self.L

    def axis_points(self) -> np.ndarray:
        return -self.L / 2 + self.dx * np.arange(self.npts)

    def axis_frequencies(self) -> np.ndarray:
        return self.dxi * np.arange(-self.npts // 2, self.npts // 2)

    def space_points(self) -> np.ndarray:
        """All grid points, shape (sites, dim), C-order over axes."""
        axes = np.meshgrid(*([self.axis_points()] * self.dim), indexing="ij")
        return np.stack([a.ravel() for a in axes], axis=-1)

    def frequency_points(self) -> np.ndarray:
        """All lattice frequencies, shape (sites, dim), C-order."""
        axes = np.meshgrid(*([self.axis_frequencies()] * self.dim),
                           indexing="ij")
        return np.stack([a.ravel() for a in axes], axis=-1)

    def cell_volume(self) -> float:
        return self.dx ** self.dim


def _phase_matrix(grid: GridSpec) -> np.ndarray:
    """E[j,k] = exp(i xi_k . x_j), shape (sites, sites)."""
    x = grid.space_points()
    xi = grid.frequency_points()
    return np.exp(1j * (x @ xi.T))


class DiscretizedOperator:
    """Matrix realization of an operator on the grid.

    rep_kind is one of dense / freq_diagonal / space_diagonal; diagonal
    reps store per-site (or per-frequency) n x n blocks. trace_weights
    give the weighted trace Tr = sum_i w_i <e_i, A e_i>; the default
    unit weights make the trace count Fourier modes, so phase-space
    volumes come out independent of L.
    """

    def __init__(self, grid: GridSpec, algebra: MatrixAlgebraSpec,
                 rep_kind: str, payload: np.ndarray,
                 trace_weights: Optional[np.ndarray] = None,
                 order_hint: Optional[float] = None):
        self.grid = grid
        self.algebra = algebra
        self.rep_kind = rep_kind
        side = grid.sites * algebra.n
        if rep_kind == DENSE:
            if payload.shape != (side, side):
                raise ValueError("dense payload has wrong shape")
        elif rep_kind in (FREQ_DIAGONAL, SPACE_DIAGONAL):
            if payload.shape != (grid.sites, algebra.n, algebra.n):
                raise ValueError("diagonal payload has wrong shape")
        else:
            raise ValueError(f"unknown rep_kind {rep_kind!r}")
        self.payload = np.asarray(payload, dtype=complex)
        self.trace_weights = (np.ones(side) if trace_weights is None
                              else np.asarray(trace_weights, dtype=float))
        if self.trace_weights.shape != (side,):
            raise ValueError("trace_weights length must match matrix side")
        if np.any(self.trace_weights < 0):
            raise ValueError("trace_weights must be nonnegative")
        self.order_hint = order_hint
        self._dense: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        return self.algebra.n

    @property
    def side(self) -> int:
        return self.grid.sites * self.n

    @property
    def total_weight(self) -> float:
        return float(self.trace_weights.sum())

    @property
    def matrix(self) -> np.ndarray:
        """Dense matrix, materialized on demand (side capped)."""
        if self._dense is None:
            if self.side > DENSE_SIDE_CAP:
                raise ValueError(
                    f"dense side {self.side} exceeds cap {DENSE_SIDE_CAP}; "
                    "use the structured representation")
            if self.rep_kind == DENSE:
                self._dense = self.payload
            elif self.rep_kind == SPACE_DIAGONAL:
                n, S = self.n, self.grid.sites
                out = np.zeros((S * n, S * n), dtype=complex)
                for j in range(S):
                    out[j * n:(j + 1) * n, j * n:(j + 1) * n] = self.payload[j]
                self._dense = out
            else:
                E = _phase_matrix(self.grid) / np.sqrt(self.grid.sites)
                n = self.n
                if n == 1:
                    self._dense = (E * self.payload[:, 0, 0]) @ E.conj().T
                else:
                    # Entry (j*n+a, k*n+b) = sum_xi E[j,xi] p[xi,a,b]
                    # conj(E[k,xi]); assembling per (a,b) block keeps the
                    # temporaries at 1/n^2 of the full matrix.
                    S = self.grid.sites
                    Ec = E.conj().T
                    out = np.empty((S * n, S * n), dtype=complex)
                    for a in range(n):
                        for b in range(n):
                            out[a::n, b::n] = (E * self.payload[:, a, b]) @ Ec
                    self._dense = out
        return self._dense

    def is_hermitian(self, tol: float = HERMITIAN_TOL) -> bool:
        if self.rep_kind in (FREQ_DIAGONAL, SPACE_DIAGONAL):
            defect = np.linalg.norm(
                self.payload - np.conjugate(np.swapaxes(self.payload, -1, -2)))
            return bool(defect <= tol * max(np.linalg.norm(self.payload),
                                            1e-300))
        M = self.matrix
        # Row-block chunks keep the M - M^* temporary small on large
        # dense operators.
        side = M.shape[0]
        step = max(1, (1 << 22) // max(side, 1))
        num = 0.0
        den = 0.0
        for i in range(0, side, step):
            blk = M[i:i + step, :]
            num += float(np.sum(np.abs(blk - M[:, i:i + step].conj().T) ** 2))
            den += float(np.sum(np.abs(blk) ** 2))
        return bool(num ** 0.5 <= tol * max(den ** 0.5, 1e-300))

    def trace(self) -> complex:
        if self.rep_kind == DENSE:
            return complex(np.dot(self.trace_weights, np.diag(self.payload)))
        w = self.trace_weights.reshape(self.grid.sites, self.n)
        diag = np.einsum("kaa->ka", self.payload)
        if self.rep_kind == SPACE_DIAGONAL:
            return complex(np.sum(w * diag))
        # frequency blocks against space weights: unit weights only,
        # where the two bases give the same weighted trace.
        if not np.allclose(self.trace_weights, self.trace_weights[0]):
            return complex(np.dot(self.trace_weights, np.diag(self.matrix)))
        return complex(self.trace_weights[0] * diag.sum())

    def _same_layout(self, other: "DiscretizedOperator"):
        if self.grid != other.grid or self.n != other.n:
            raise ValueError("operators live on different grids")

    def __matmul__(self, other: "DiscretizedOperator") -> "DiscretizedOperator":
        self._same_layout(other)
        if self.rep_kind == other.rep_kind and self.rep_kind in (
                FREQ_DIAGONAL, SPACE_DIAGONAL):
            return DiscretizedOperator(self.grid, self.algebra, self.rep_kind,
                                       self.payload @ other.payload,
                                       self.trace_weights, None)
        # Against a space-diagonal factor, scale column (row) blocks of
        # the dense side instead of materializing a second full matrix.
        S, n = self.grid.sites, self.n
        if other.rep_kind == SPACE_DIAGONAL:
            prod = np.einsum("isa,sab->isb",
                             self.matrix.reshape(S * n, S, n),
                             other.payload).reshape(S * n, S * n)
        elif self.rep_kind == SPACE_DIAGONAL:
            prod = np.einsum("sab,sbj->saj", self.payload,
                             other.matrix.reshape(S, n, S * n)
                             ).reshape(S * n, S * n)
        else:
            prod = self.matrix @ other.matrix
        return DiscretizedOperator(self.grid, self.algebra, DENSE,
                                   prod, self.trace_weights, None)

    def __add__(self, other: "DiscretizedOperator") -> "DiscretizedOperator":
        self._same_layout(other)
        if self.rep_kind == other.rep_kind and self.rep_kind in (
                FREQ_DIAGONAL, SPACE_DIAGONAL):
            return DiscretizedOperator(self.grid, self.algebra, self.rep_kind,
                                       self.payload + other.payload,
                                       self.trace_weights, self.order_hint)
        return DiscretizedOperator(self.grid, self.algebra, DENSE,
                                   self.matrix + other.matrix,
                                   self.trace_weights, self.order_hint)

    def __sub__(self, other: "DiscretizedOperator") -> "DiscretizedOperator":
        return self + other.scaled(-1.0)

    def scaled(self, c: complex) -> "DiscretizedOperator":
        return DiscretizedOperator(self.grid, self.algebra, self.rep_kind,
                                   c * self.payload, self.trace_weights,
                                   self.order_hint)

    def adjoint(self) -> "DiscretizedOperator":
        if self.rep_kind in (FREQ_DIAGONAL, SPACE_DIAGONAL):
            return DiscretizedOperator(
                self.grid, self.algebra, self.rep_kind,
                np.conjugate(np.swapaxes(self.payload, -1, -2)),
                self.trace_weights, self.order_hint)
        return DiscretizedOperator(self.grid, self.algebra, DENSE,
                                   self.matrix.conj().T, self.trace_weights,
                                   self.order_hint)

    def apply(self, vec: np.ndarray) -> np.ndarray:
        """Apply to a state vector of length side (space-major layout)."""
        vec = np.asarray(vec, dtype=complex)
        if self.rep_kind == SPACE_DIAGONAL:
            v = vec.reshape(self.grid.sites, self.n)
            return np.einsum("jab,jb->ja", self.payload, v).ravel()
        if self.rep_kind == FREQ_DIAGONAL:
            shape = (self.npts_shape() + (self.n,))
            v = vec.reshape(shape)
            space_axes = tuple(range(self.grid.dim))
            vhat = np.fft.fftn(v, axes=space_axes, norm="ortho")
            vhat = np.fft.fftshift(vhat, axes=space_axes)
            blocks = self.payload.reshape(self.npts_shape() + (self.n, self.n))
            # account for the -L/2 grid offset in the transform phase
            phase = self._offset_phase()
            what = np.einsum("...ab,...b->...a", blocks, vhat * phase[..., None])
            what = np.fft.ifftshift(what / phase[..., None], axes=space_axes)
            return np.fft.ifftn(what, axes=space_axes, norm="ortho").ravel()
        return self.matrix @ vec

    def npts_shape(self) -> tuple:
        return (self.grid.npts,) * self.grid.dim

    def _offset_phase(self) -> np.ndarray:
        xi = self.grid.frequency_points().reshape(self.npts_shape()
                                                  + (self.grid.dim,))
        x0 = -self.grid.L / 2
        return np.exp(-1j * x0 * xi.sum(axis=-1))

    def save(self, path: str) -> None:
        """Binary export: 8-byte LE header length, UTF-8 JSON header,
        then the row-major complex128 dense matrix."""
        header = {
            "dim": self.grid.dim, "L": self.grid.L, "npts": self.grid.npts,
            "n": self.n, "order_hint": self.order_hint,
            "trace_weights": ("ones" if np.all(self.trace_weights == 1.0)
                              else self.trace_weights.tolist()),
        }
        blob = json.dumps(header).encode("utf-8")
        M = np.ascontiguousarray(self.matrix, dtype=np.complex128)
        with open(path, "wb") as fh:
            fh.write(len(blob).to_bytes(8, "little"))
            fh.write(blob)
            fh.write(M.tobytes())


def load_operator(path: str) -> DiscretizedOperator:
    with open(path, "rb") as fh:
        hlen = int.from_bytes(fh.read(8), "little")
        header = json.loads(fh.read(hlen).decode("utf-8"))
        raw = fh.read()
    grid = GridSpec(header["dim"], header["L"], header["npts"])
    n = header["n"]
    side = grid.sites * n
    M = np.frombuffer(raw, dtype=np.complex128).reshape(side, side)
    tw = header["trace_weights"]
    weights = None if tw == "ones" else np.asarray(tw, dtype=float)
    return DiscretizedOperator(grid, MatrixAlgebraSpec(n), DENSE, M.copy(),
                               weights, header["order_hint"])


def _check_support(symbol: ClassicalSymbol, grid: GridSpec) -> None:
    box = symbol.spatial_support
    if box is None:
        return
    lo, hi = box[:, 0], box[:, 1]
    margin = grid.L / 4
    if np.any(lo < -grid.L / 2 + margin) or np.any(hi > grid.L / 2 - margin):
        raise ValueError(
            "spatial support must fit inside the torus with margin >= L/4 "
            "(grow L to avoid wrap-around of the coefficients)")


def quantize(symbol: ClassicalSymbol, grid: GridSpec, *,
             truncation: Optional[int] = None,
             chunk: int = 1 << 22) -> DiscretizedOperator:
    """Kohn-Nirenberg matrix of the symbol on the grid.

    Multipliers become frequency-diagonal. General symbols assemble the
    dense matrix in frequency chunks: columns of sigma(x_j, xi_k)
    e^{i xi_k x_j} against the inverse Fourier matrix.
    """
    if symbol.dim != grid.dim:
        raise ValueError("symbol and grid dimension differ")
    _check_support(symbol, grid)
    n = symbol.n
    xi = grid.frequency_points()
    if symbol.is_multiplier:
        vals = evaluate_symbol(symbol, np.zeros(grid.dim), xi,
                               truncation=truncation)
        return DiscretizedOperator(grid, symbol.algebra, FREQ_DIAGONAL, vals,
                                   None, symbol.order.real)
    side = grid.sites * n
    if side > DENSE_SIDE_CAP:
        raise ValueError(f"dense side {side} exceeds cap {DENSE_SIDE_CAP}")
    x = grid.space_points()
    S = grid.sites
    M = np.empty((side, side), dtype=complex)
    cols_per_chunk = max(1, chunk // max(side, 1))
    E = _phase_matrix(grid)
    for k0 in range(0, S, cols_per_chunk):
        k1 = min(S, k0 + cols_per_chunk)
        vals = evaluate_symbol(symbol, x[:, None, :], xi[None, k0:k1, :],
                               truncation=truncation)
        G = vals * E[:, k0:k1, None, None]
        G = np.transpose(G, (0, 2, 1, 3)).reshape(S * n, (k1 - k0) * n)
        Finv = E[:, k0:k1].conj().T / S
        if n == 1:
            M_part = G @ Finv
        else:
            M_part = G @ np.kron(Finv, np.eye(n))
        if k0 == 0:
            M[:] = M_part
        else:
            M += M_part
    return DiscretizedOperator(grid, symbol.algebra, DENSE, M, None,
                               symbol.order.real)


def fourier_multiplier(fn: Callable[[np.ndarray], np.ndarray],
                       grid: GridSpec, *, n: int = 1,
                       zero_mode: Optional[np.ndarray] = None,
                       order_hint: Optional[float] = None) -> DiscretizedOperator:
    """Frequency-diagonal operator from a function of xi.

    fn maps frequencies (..., d) to scalars (...,) or blocks (..., n, n).
    zero_mode overrides the value at xi = 0 (for symbols singular there,
    e.g. homogeneous negative degrees, pass 0).
    """
    xi = grid.frequency_points()
    zero_row = int(np.flatnonzero(~np.any(xi != 0.0, axis=1))[0])
    vals = np.asarray(fn(xi), dtype=complex)
    if vals.ndim == 1:
        vals = vals[:, None, None] * np.eye(n)
    if zero_mode is not None:
        zm = np.asarray(zero_mode, dtype=complex)
        vals[zero_row] = zm * np.eye(n) if zm.ndim == 0 else zm
    if not np.all(np.isfinite(vals)):
        raise ValueError("multiplier not finite on the lattice "
                         "(set zero_mode for symbols singular at xi=0)")
    return DiscretizedOperator(grid, MatrixAlgebraSpec(n), FREQ_DIAGONAL,
                               vals, None, order_hint)


def multiplication_op(fn: Callable[[np.ndarray], np.ndarray],
                      grid: GridSpec, *, n: int = 1) -> DiscretizedOperator:
    """Space-diagonal operator multiplying by f(x)."""
    x = grid.space_points()
    vals = np.asarray(fn(x), dtype=complex)
    if vals.ndim == 1:
        vals = vals[:, None, None] * np.eye(n)
    return DiscretizedOperator(grid, MatrixAlgebraSpec(n), SPACE_DIAGONAL,
                               vals, None, 0.0)


def identity_operator(grid: GridSpec, n: int = 1) -> DiscretizedOperator:
    blocks = np.broadcast_to(np.eye(n, dtype=complex),
                             (grid.sites, n, n)).copy()
    return DiscretizedOperator(grid, MatrixAlgebraSpec(n), FREQ_DIAGONAL,
                               blocks, None, 0.0)


def commutator(A: DiscretizedOperator,
               B: DiscretizedOperator) -> DiscretizedOperator:
    return (A @ B) - (B @ A)


def frequency_band_projector(grid: GridSpec, xi_max: float,
                             n: int = 1,
                             xi_min: float = 0.0) -> DiscretizedOperator:
    """Projector onto lattice modes with xi_min <= |xi| <= xi_max."""
    xi = grid.frequency_points()
    r = np.linalg.norm(xi, axis=1)
    keep = ((r <= xi_max) & (r >= xi_min)).astype(complex)
    blocks = keep[:, None, None] * np.eye(n)
    return DiscretizedOperator(grid, MatrixAlgebraSpec(n), FREQ_DIAGONAL,
                               blocks, None, 0.0)
