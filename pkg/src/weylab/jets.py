"""Pointwise jet arithmetic for matrix-valued functions of (x, xi).

A jet collects the partial derivatives d_xi^alpha d_x^beta F at a single
point, for all |alpha| <= order_xi and |beta| <= order_x, each entry an
ndarray whose last two axes are the matrix indices. Leading axes are free
batch axes (used to evaluate whole contour-quadrature node sets at once),
so all arithmetic broadcasts.

Products use the Leibniz rule over both index groups; inverses are filled
by the recursion obtained from differentiating F F^{-1} = I.
"""

from __future__ import annotations

from typing import Callable, Dict, Tuple

import numpy as np

from .multiindex import (
    MultiIndex,
    binomial,
    indices_up_to,
    lower_indices,
    sub_indices,
    zero_index,
)

JetKey = Tuple[MultiIndex, MultiIndex]


class Jet:
    """Derivative table of a matrix-valued function at one point.

    Parameters
    ----------
    d : int
        Number of coordinates in each of the two variable groups.
    order_xi, order_x : int
        Largest derivative order stored in the xi and x groups.
    data : dict
        Maps (alpha, beta) to ndarray(..., n, n). Must be complete on the
        rectangle |alpha| <= order_xi, |beta| <= order_x.
    """

    __slots__ = ("d", "order_xi", "order_x", "data")

    def __init__(self, d: int, order_xi: int, order_x: int,
                 data: Dict[JetKey, np.ndarray]):
        self.d = d
        self.order_xi = order_xi
        self.order_x = order_x
        self.data = data

    @classmethod
    def build(cls, d: int, order_xi: int, order_x: int,
              fn: Callable[[MultiIndex, MultiIndex], np.ndarray]) -> "Jet":
        data = {}
        for alpha in indices_up_to(d, order_xi):
            for beta in indices_up_to(d, order_x):
                data[(alpha, beta)] = np.asarray(fn(alpha, beta))
        return cls(d, order_xi, order_x, data)

    @classmethod
    def constant(cls, d: int, order_xi: int, order_x: int,
                 value: np.ndarray) -> "Jet":
        value = np.asarray(value)
        zero = np.zeros_like(value)
        data = {}
        for alpha in indices_up_to(d, order_xi):
            for beta in indices_up_to(d, order_x):
                is_zero_key = (sum(alpha) == 0 and sum(beta) == 0)
                data[(alpha, beta)] = value if is_zero_key else zero
        return cls(d, order_xi, order_x, data)

    @property
    def value(self) -> np.ndarray:
        z = zero_index(self.d)
        return self.data[(z, z)]

    def _common_orders(self, other: "Jet") -> tuple[int, int]:
        return (min(self.order_xi, other.order_xi),
                min(self.order_x, other.order_x))

    def __add__(self, other: "Jet") -> "Jet":
        oxi, ox = self._common_orders(other)
        data = {}
        for alpha in indices_up_to(self.d, oxi):
            for beta in indices_up_to(self.d, ox):
                key = (alpha, beta)
                data[key] = self.data[key] + other.data[key]
        return Jet(self.d, oxi, ox, data)

    def __sub__(self, other: "Jet") -> "Jet":
        return self + other.scaled(-1.0)

    def scaled(self, c: complex) -> "Jet":
        return Jet(self.d, self.order_xi, self.order_x,
                   {k: c * v for k, v in self.data.items()})

    def matmul(self, other: "Jet") -> "Jet":
        """Jet of the pointwise matrix product self @ other (Leibniz)."""
        oxi, ox = self._common_orders(other)
        data = {}
        for alpha in indices_up_to(self.d, oxi):
            for beta in indices_up_to(self.d, ox):
                acc = None
                for a in lower_indices(alpha):
                    ca = binomial(alpha, a)
                    for b in lower_indices(beta):
                        c = ca * binomial(beta, b)
                        term = self.data[(a, b)] @ other.data[
                            (sub_indices(alpha, a), sub_indices(beta, b))]
                        if c != 1:
                            term = c * term
                        acc = term if acc is None else acc + term
                data[(alpha, beta)] = acc
        return Jet(self.d, oxi, ox, data)

    def inverse(self) -> "Jet":
        """Jet of the pointwise matrix inverse.

        From differentiating F F^{-1} = I: the (alpha, beta) entry of the
        inverse is determined by all strictly lower entries.
        """
        inv0 = np.linalg.inv(self.value)
        data: Dict[JetKey, np.ndarray] = {}
        keys = [(alpha, beta)
                for alpha in indices_up_to(self.d, self.order_xi)
                for beta in indices_up_to(self.d, self.order_x)]
        keys.sort(key=lambda k: (sum(k[0]) + sum(k[1]), k))
        for alpha, beta in keys:
            if sum(alpha) + sum(beta) == 0:
                data[(alpha, beta)] = inv0
                continue
            acc = None
            for a in lower_indices(alpha):
                ca = binomial(alpha, a)
                for b in lower_indices(beta):
                    if sum(a) + sum(b) == 0:
                        continue
                    c = ca * binomial(beta, b)
                    term = self.data[(a, b)] @ data[
                        (sub_indices(alpha, a), sub_indices(beta, b))]
                    if c != 1:
                        term = c * term
                    acc = term if acc is None else acc + term
            data[(alpha, beta)] = -(inv0 @ acc)
        return Jet(self.d, self.order_xi, self.order_x, data)

    def derivative(self, alpha: MultiIndex, beta: MultiIndex) -> "Jet":
        """Jet of d_xi^alpha d_x^beta F (re-indexes the table)."""
        oxi = self.order_xi - sum(alpha)
        ox = self.order_x - sum(beta)
        if oxi < 0 or ox < 0:
            raise ValueError("jet does not hold enough derivatives")
        data = {}
        for a in indices_up_to(self.d, oxi):
            for b in indices_up_to(self.d, ox):
                data[(a, b)] = self.data[(tuple(x + y for x, y in zip(a, alpha)),
                                          tuple(x + y for x, y in zip(b, beta)))]
        return Jet(self.d, oxi, ox, data)

    def conj_transpose(self) -> "Jet":
        """Jet of the pointwise conjugate transpose."""
        data = {k: np.conjugate(np.swapaxes(v, -1, -2))
                for k, v in self.data.items()}
        return Jet(self.d, self.order_xi, self.order_x, data)

    def shift(self, c: complex | np.ndarray, n: int) -> "Jet":
        """Jet of self - c*I (c enters the zero-order entry only)."""
        z = zero_index(self.d)
        data = dict(self.data)
        eye = np.eye(n, dtype=complex)
        data[(z, z)] = self.data[(z, z)] - np.asarray(c)[..., None, None] * eye \
            if np.ndim(c) > 0 else self.data[(z, z)] - c * eye
        return Jet(self.d, self.order_xi, self.order_x, data)
