"""Singular value functions and spectral asymptotics of discretized
operators.

The singular value function mu(t, A) is the right-continuous decreasing
step function whose plateaus are the singular values of the block
matrix, each carrying its trace weight. Weyl limits are read off as the
median of t^{m/d} mu(t) over a logarithmic window, Dixmier-type values
as log-averaged partial integrals, and microlocal counts as weighted
traces of spectral projections. A Tauberian check compares the
distribution-function and quantile-function forms of the same limit.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.linalg.blas import zherk

from .quantize import (FREQ_DIAGONAL, SPACE_DIAGONAL, DiscretizedOperator,
                       identity_operator)
from .zeta import _localizer_on_grid

WEYL_WINDOW = (0.02, 0.15)


@dataclass(frozen=True)
class SingularValueFunction:
    """Weighted singular values as a decreasing step function.

    values are nonincreasing and nonnegative; weights are positive and
    sum to total_weight. mu(t) is the value at the first index whose
    cumulative weight strictly exceeds t, which makes it right
    continuous.
    """

    values: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        w = np.asarray(self.weights, dtype=float).ravel()
        if v.shape != w.shape:
            raise ValueError("values and weights must align")
        if np.any(w <= 0):
            raise ValueError("weights must be positive")
        if np.any(v < 0):
            raise ValueError("singular values must be nonnegative")
        order = np.argsort(-v, kind="stable")
        object.__setattr__(self, "values", v[order])
        object.__setattr__(self, "weights", w[order])
        object.__setattr__(self, "_cumw", np.cumsum(self.weights))

    @property
    def total_weight(self) -> float:
        return float(self._cumw[-1]) if len(self.values) else 0.0

    def mu(self, t) -> np.ndarray:
        """mu(t): value at the first index with cumulative weight > t."""
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self._cumw, t, side="right")
        padded = np.concatenate([self.values, [0.0]])
        out = padded[np.minimum(idx, len(self.values))]
        return out if out.ndim else float(out)

    def weight_above(self, s) -> np.ndarray:
        """Distribution function: total weight of values > s."""
        s = np.asarray(s, dtype=float)
        asc = self.values[::-1]
        count = len(asc) - np.searchsorted(asc, s, side="right")
        padded = np.concatenate([[0.0], self._cumw])
        out = padded[count]
        return out if out.ndim else float(out)

    def merge(self, other: "SingularValueFunction") -> "SingularValueFunction":
        return SingularValueFunction(
            np.concatenate([self.values, other.values]),
            np.concatenate([self.weights, other.weights]))

    def scaled_weights(self, c: float) -> "SingularValueFunction":
        return SingularValueFunction(self.values, self.weights * float(c))

    def partial_integral(self, N: float) -> float:
        """Exact integral of the step function mu over [0, N]."""
        if N < 0:
            raise ValueError("upper limit must be nonnegative")
        upper = np.minimum(self._cumw, N)
        lower = np.concatenate([[0.0], upper[:-1]])
        return float(np.sum(self.values * np.clip(upper - lower, 0.0, None)))

    def write_csv(self, path: str, points: int = 200) -> None:
        W = self.total_weight
        ts = np.geomspace(W * 1e-4, W, points)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "mu"])
            for t, m in zip(ts, self.mu(ts)):
                writer.writerow([f"{t:.17g}", f"{m:.17g}"])


@dataclass(frozen=True)
class WeylEstimate:
    """Median of t^{m/d} mu(t) over a window, with its IQR spread."""

    limit: float
    window: tuple
    spread: float
    grids_used: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.spread < 0:
            raise ValueError("spread must be nonnegative")


def singular_value_function(A: DiscretizedOperator,
                            hermitian_hint: Optional[bool] = None,
                            via_gram: bool = False
                            ) -> SingularValueFunction:
    """Weighted singular values of a discretized operator.

    Diagonal representations decompose block by block; dense operators
    take |eigenvalues| when Hermitian and a full SVD otherwise. With
    via_gram the singular values come from the eigenvalues of A* A,
    which is markedly faster on large dense operators at the cost of
    squaring the condition number. Trace weights ride along per block
    row (diagonal reps) or uniformly (dense reps, which require uniform
    weights).
    """
    if A.rep_kind in (FREQ_DIAGONAL, SPACE_DIAGONAL):
        try:
            sv = np.linalg.svd(A.payload, compute_uv=False)
        except np.linalg.LinAlgError as exc:
            raise np.linalg.LinAlgError(
                f"block SVD failed: {exc}; payload norm "
                f"{np.linalg.norm(A.payload):.3e}") from exc
        w = A.trace_weights.reshape(A.grid.sites, A.n)
        if not np.allclose(w, w[:, :1]):
            raise ValueError("per-block trace weights must be constant "
                             "within each block")
        return SingularValueFunction(sv.ravel(),
                                     np.repeat(w[:, 0], A.n))
    if not np.allclose(A.trace_weights, A.trace_weights[0]):
        raise ValueError("dense singular value functions need uniform "
                         "trace weights")
    M = A.matrix
    herm = A.is_hermitian() if hermitian_hint is None else hermitian_hint
    try:
        if herm:
            sv = np.abs(np.linalg.eigvalsh(M))
        elif via_gram:
            # zherk on the F-contiguous transpose fills one triangle of
            # conj(M^* M) without copying M or conjugating it; the
            # spectrum is invariant under conjugation and eigvalsh reads
            # only the lower triangle.
            gram = zherk(1.0, M.T, trans=0, lower=1)
            gram_eigs = np.linalg.eigvalsh(gram)
            sv = np.sqrt(np.clip(gram_eigs, 0.0, None))
        else:
            sv = np.linalg.svd(M, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(
            f"SVD failed: {exc}; matrix norm {np.linalg.norm(M):.3e}, "
            f"side {M.shape[0]}") from exc
    return SingularValueFunction(sv, np.full(sv.shape,
                                             A.trace_weights[0]))


def weyl_limit(svf: SingularValueFunction, m: float, d: int,
               window: Optional[tuple] = None,
               grids_used: Sequence = ()) -> WeylEstimate:
    """Extract lim t^{m/d} mu(t) as median over a log-spaced window.

    The default window (0.02, 0.15) * total_weight avoids both the
    pre-asymptotic head and the truncation-corrupted tail of the
    discretized singular value function.
    """
    if m <= 0 or d <= 0:
        raise ValueError("need m > 0 and d > 0")
    W = svf.total_weight
    if window is None:
        window = (WEYL_WINDOW[0] * W, WEYL_WINDOW[1] * W)
    t_lo, t_hi = window
    if not (0 < t_lo < t_hi <= 0.5 * W + 1e-12):
        raise ValueError("window must sit inside (0, total_weight/2]")
    ts = np.geomspace(t_lo, t_hi, 200)
    g = ts ** (m / d) * svf.mu(ts)
    limit = float(np.median(g))
    spread = float(np.percentile(g, 75) - np.percentile(g, 25))
    return WeylEstimate(limit, (float(t_lo), float(t_hi)), spread,
                        tuple(grids_used))


def dixmier_log_average(svf: SingularValueFunction, Nmax: float) -> float:
    """(1 / log N) * integral_0^N mu(t) dt, the Dixmier-type partial
    log-average, evaluated exactly on the step function."""
    if Nmax > svf.total_weight + 1e-9:
        raise ValueError("Nmax exceeds the total trace weight")
    if Nmax <= 1.0:
        raise ValueError("log-average needs Nmax > 1")
    return svf.partial_integral(Nmax) / np.log(Nmax)


def microlocal_counting(A: DiscretizedOperator,
                        Q: Optional[DiscretizedOperator],
                        phi, lam) -> np.ndarray:
    """Weighted count Tr(M_phi Q chi_{[0, lam]}(A)).

    A must be Hermitian; Q defaults to the identity. Accepts a scalar
    or array of thresholds lam and counts eigenvalues in [0, lam].
    """
    if not A.is_hermitian():
        raise ValueError("microlocal counting needs a Hermitian operator")
    f2, C = _localizer_on_grid(phi, A)
    lam_arr = np.atleast_1d(np.asarray(lam, dtype=float))
    if Q is None:
        Q = identity_operator(A.grid, A.n)
    if A.rep_kind == FREQ_DIAGONAL and Q.rep_kind == FREQ_DIAGONAL:
        vals, V = np.linalg.eigh(A.payload)
        QV = np.einsum("kab,kbe->kae", Q.payload, V)
        diag = np.einsum("kae,ab,kbe->ke", V.conj(), C, QV) * np.mean(f2)
        vals = vals.ravel()
        diag = diag.ravel()
    else:
        vals, V = np.linalg.eigh(A.matrix)
        B = (np.kron(np.diag(f2), C) @ Q.matrix)
        diag = np.einsum("je,jk,ke->e", V.conj(), B, V)
    keep = vals >= 0.0
    order = np.argsort(vals[keep], kind="stable")
    v_sorted = vals[keep][order]
    c_sorted = np.concatenate([[0.0 + 0.0j], np.cumsum(diag[keep][order])])
    counts = c_sorted[np.searchsorted(v_sorted, lam_arr, side="right")]
    scale = A.trace_weights[0]
    if not np.allclose(A.trace_weights, scale):
        raise ValueError("microlocal counting needs uniform trace weights")
    counts = counts * scale
    bad = np.abs(counts.imag) > 1e-8 * np.maximum(np.abs(counts), 1e-300)
    if np.any(bad):
        raise ValueError("counting trace came out non-real; localizer or "
                         "symbol is not self-adjoint compatible")
    out = counts.real
    return out if np.ndim(lam) else float(out[0])


def tauberian_duality_check(svf: SingularValueFunction, p: float,
                            s_grid: Sequence[float]) -> dict:
    """Compare s^p * weight_above(s) with t * mu(t)^p at the dual
    points t = weight_above(s); for a clean power tail both converge to
    the same constant. Returns both series and the max relative gap."""
    if p <= 0:
        raise ValueError("need p > 0")
    s = np.asarray(sorted(s_grid), dtype=float)
    lhs = s ** p * svf.weight_above(s)
    t_dual = np.asarray(svf.weight_above(s), dtype=float)
    ok = t_dual > 0
    rhs = np.zeros_like(lhs)
    rhs[ok] = t_dual[ok] * svf.mu(t_dual[ok] * (1 - 1e-12)) ** p
    denom = np.maximum(np.abs(lhs), 1e-300)
    rel = np.abs(lhs - rhs) / denom
    return {"s": s, "lhs": lhs, "rhs": rhs,
            "max_rel": float(np.max(rel[ok])) if np.any(ok) else 0.0}
