"""Symbol algebra: evaluation, cutoff, composition, adjoint, and the
homogeneity and Euler identities of the components."""

import math

import numpy as np
import sympy as sp
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from weylab.families import (
    bessel_symbol,
    elliptic_bump_symbol,
    freq_symbols,
    multiplier_symbol,
    space_symbols,
    symbol_from_exprs,
)
from weylab.multiindex import (
    binomial,
    factorial,
    indices_of_order,
    lower_indices,
    sub_indices,
)
from weylab.symbols import (
    ClassicalSymbol,
    CutoffSpec,
    MatrixAlgebraSpec,
    adjoint_symbol,
    compose_symbols,
    evaluate_symbol,
)

RNG = np.random.default_rng(11)


def sample_xu(d, nx=5, nu=8):
    """Space points in (-0.8, 0.8)^d and unit directions."""
    xs = np.linspace(-0.8, 0.8, nx)[:, None] * np.ones(d)
    if d == 1:
        us = np.array([[1.0], [-1.0]])
    else:
        ang = 2 * np.pi * np.arange(nu) / nu
        us = np.stack([np.cos(ang), np.sin(ang)], axis=1)
        us = np.concatenate([us, np.zeros((nu, d - 2))], axis=1)
    return xs, us


def component_gap(sa, sb, j, xs, us):
    va = sa.component(j).value(xs[:, None, :], us[None, :, :])
    vb = sb.component(j).value(xs[:, None, :], us[None, :, :])
    return float(np.max(np.abs(va - vb)))


# -- algebra spec -------------------------------------------------------

def test_trace_is_positive_and_cyclic():
    alg = MatrixAlgebraSpec(3)
    for _ in range(20):
        a = RNG.normal(size=(3, 3)) + 1j * RNG.normal(size=(3, 3))
        b = RNG.normal(size=(3, 3)) + 1j * RNG.normal(size=(3, 3))
        q = alg.trace(a.conj().T @ a)
        assert q.real >= 0
        assert abs(q.imag) <= 1e-12 * abs(q.real)
        assert abs(alg.trace(a @ b) - alg.trace(b @ a)) <= 1e-12 * max(
            1.0, abs(alg.trace(a @ b)))


# -- cutoff -------------------------------------------------------------

def test_cutoff_vanishes_inside_and_saturates_outside():
    phi = CutoffSpec()
    r = np.linspace(0.0, 2.0, 401)
    vals = phi.radial(r)
    assert np.all(vals[r <= 0.5] == 0.0)
    assert np.all(vals[r >= 1.0] == 1.0)
    assert np.all((vals >= 0.0) & (vals <= 1.0))


# -- evaluation ---------------------------------------------------------

def test_evaluate_homogeneous_inverse_norm():
    # scalar |xi|^{-1} in d=2 at xi=(2,0): cutoff is 1, value 1/2
    sym = multiplier_symbol(2, -1.0)
    val = evaluate_symbol(sym, np.zeros(2), np.array([2.0, 0.0]))
    assert abs(val[0, 0] - 0.5) <= 1e-14


def test_evaluate_vanishes_under_half():
    sym = multiplier_symbol(2, -1.0)
    val = evaluate_symbol(sym, np.zeros(2), np.array([0.25, 0.0]))
    assert np.all(val == 0.0)


def test_evaluate_sums_components():
    # components |xi| and 1 at degrees 1, 0 in d=1; at xi=3 both count
    k1 = freq_symbols(1)[0]
    sym = symbol_from_exprs(1, 1.0, [sp.sqrt(k1 ** 2), sp.Integer(1)])
    val = evaluate_symbol(sym, np.zeros(1), np.array([3.0]))
    assert abs(val[0, 0] - 4.0) <= 1e-12


def test_class_estimate_with_reported_constant():
    # ||sigma(x, xi)|| <= C (1 + |xi|^2)^{m/2} on a sample grid
    sym = bessel_symbol(2, -1.0, truncation=4)
    xi = RNG.normal(size=(200, 2)) * 3.0
    vals = evaluate_symbol(sym, np.zeros(2), xi)
    norms = np.linalg.norm(vals, axis=(-2, -1))
    bound = (1.0 + np.sum(xi ** 2, axis=-1)) ** (-0.5)
    C = float(np.max(norms / bound))
    assert np.isfinite(C) and C <= 5.0


# -- homogeneity and Euler identity --------------------------------------

def test_components_positively_homogeneous():
    sym = elliptic_bump_symbol(2, 1.0, matrix=np.diag([1.0, 3.0]),
                               truncation=1)
    comp = sym.principal
    x = np.array([0.1, -0.2])
    u = np.array([0.6, 0.8])
    base = comp.value(x, u)
    for t in (0.5, 2.0, 10.0):
        scaled = comp.value_at(x, t * u)
        assert np.max(np.abs(scaled - t ** 1.0 * base)) <= 1e-12 * t


def test_euler_identity_analytic_jets():
    sym = elliptic_bump_symbol(2, -1.5, truncation=2)
    xs, us = sample_xu(2)
    for comp in sym.components:
        val = comp.value(xs[:, None, :], us[None, :, :])
        radial = np.zeros_like(val)
        for i in range(2):
            alpha = tuple(1 if j == i else 0 for j in range(2))
            jet = comp.jet(xs[:, None, :], us[None, :, :], alpha, (0, 0))
            radial = radial + us[None, :, i, None, None] * jet
        err = np.max(np.abs(radial - comp.degree * val))
        assert err <= 1e-8 * max(1.0, float(np.max(np.abs(val))))


# -- composition ---------------------------------------------------------

def test_compose_position_and_derivative():
    # b = xi, a = x in d=1: Op(b)Op(a) has symbol x xi - i
    k1 = freq_symbols(1)[0]
    x1 = space_symbols(1)[0]
    box = np.array([[-2.0, 2.0]])
    b = symbol_from_exprs(1, 1.0, [k1])
    a = symbol_from_exprs(1, 0.0, [x1, None], spatial_support=box)
    c = compose_symbols(b, a, 2)
    xs, us = sample_xu(1)
    lead = c.component(0).value(xs[:, None, :], us[None, :, :])
    expect = (xs[:, None, 0] * us[None, :, 0])[..., None, None]
    assert np.max(np.abs(lead - expect)) <= 1e-12
    corr = c.component(1).value(xs[:, None, :], us[None, :, :])
    assert np.max(np.abs(corr - (-1j))) <= 1e-12


def test_compose_multipliers_is_pointwise_product():
    b = multiplier_symbol(2, -1.0, matrix=RNG.normal(size=(2, 2)),
                          truncation=3)
    a = multiplier_symbol(2, 2.0, matrix=RNG.normal(size=(2, 2)),
                          truncation=3)
    c = compose_symbols(b, a, 3)
    xs, us = sample_xu(2)
    lead = c.component(0).value(xs[:, None, :], us[None, :, :])
    prod = (b.principal.value(xs[:, None, :], us[None, :, :])
            @ a.principal.value(xs[:, None, :], us[None, :, :]))
    assert np.max(np.abs(lead - prod)) <= 1e-12
    for j in (1, 2):
        vals = c.component(j).value(xs[:, None, :], us[None, :, :])
        assert np.max(np.abs(vals)) == 0.0


def test_compose_principal_is_matrix_product():
    b = elliptic_bump_symbol(2, 1.0, matrix=np.array([[2.0, 0.5],
                                                      [0.0, 1.0]]),
                             truncation=2)
    a = elliptic_bump_symbol(2, -2.0, matrix=np.array([[1.0, 1.0],
                                                       [0.0, 3.0]]),
                             bump_radius=0.7, truncation=2)
    c = compose_symbols(b, a, 1)
    xs, us = sample_xu(2)
    lead = c.component(0).value(xs[:, None, :], us[None, :, :])
    prod = (b.principal.value(xs[:, None, :], us[None, :, :])
            @ a.principal.value(xs[:, None, :], us[None, :, :]))
    assert np.max(np.abs(lead - prod)) <= 1e-10


def test_compose_associative_up_to_truncation():
    N = 3
    a = elliptic_bump_symbol(1, 1.0, bump_amplitude=0.4, truncation=N)
    b = elliptic_bump_symbol(1, -2.0, bump_amplitude=0.3, bump_radius=0.6,
                             truncation=N)
    c = elliptic_bump_symbol(1, 0.5, bump_amplitude=0.2, truncation=N)
    left = compose_symbols(compose_symbols(c, b, N), a, N)
    right = compose_symbols(c, compose_symbols(b, a, N), N)
    xs, us = sample_xu(1)
    for j in range(N):
        assert component_gap(left, right, j, xs, us) <= 1e-8


def test_compose_output_satisfies_euler():
    N = 2
    a = elliptic_bump_symbol(2, 1.0, truncation=N)
    b = elliptic_bump_symbol(2, -2.0, truncation=N)
    c = compose_symbols(b, a, N)
    xs, us = sample_xu(2, nx=3, nu=6)
    for j, comp in enumerate(c.components):
        val = comp.value(xs[:, None, :], us[None, :, :])
        radial = np.zeros_like(val)
        for i in range(2):
            alpha = tuple(1 if k == i else 0 for k in range(2))
            jet = comp.jet(xs[:, None, :], us[None, :, :], alpha, (0, 0))
            radial = radial + us[None, :, i, None, None] * jet
        err = np.max(np.abs(radial - comp.degree * val))
        assert err <= 1e-8 * max(1.0, float(np.max(np.abs(val))))


# -- adjoint -------------------------------------------------------------

def test_adjoint_of_multiplication():
    x1 = space_symbols(1)[0]
    box = np.array([[-2.0, 2.0]])
    f = sp.Matrix([[sp.cos(x1), sp.I * x1], [0, 1]])
    a = symbol_from_exprs(1, 0.0, [f, None], spatial_support=box)
    astar = adjoint_symbol(a, 2)
    xs, us = sample_xu(1)
    lead = astar.component(0).value(xs[:, None, :], us[None, :, :])
    ref = np.conjugate(np.swapaxes(
        a.component(0).value(xs[:, None, :], us[None, :, :]), -1, -2))
    assert np.max(np.abs(lead - ref)) <= 1e-12
    corr = astar.component(1).value(xs[:, None, :], us[None, :, :])
    assert np.max(np.abs(corr)) == 0.0


def test_adjoint_of_real_multiplier_is_itself():
    a = multiplier_symbol(1, -1.0, truncation=3)
    astar = adjoint_symbol(a, 3)
    xs, us = sample_xu(1)
    for j in range(3):
        assert component_gap(a, astar, j, xs, us) <= 1e-14


def test_adjoint_position_momentum():
    # a = x xi in d=1: adjoint symbol is x xi - i
    k1 = freq_symbols(1)[0]
    x1 = space_symbols(1)[0]
    box = np.array([[-2.0, 2.0]])
    a = symbol_from_exprs(1, 1.0, [x1 * k1, None], spatial_support=box)
    astar = adjoint_symbol(a, 2)
    xs, us = sample_xu(1)
    lead = astar.component(0).value(xs[:, None, :], us[None, :, :])
    expect = (xs[:, None, 0] * us[None, :, 0])[..., None, None]
    assert np.max(np.abs(lead - expect)) <= 1e-12
    corr = astar.component(1).value(xs[:, None, :], us[None, :, :])
    assert np.max(np.abs(corr - (-1j))) <= 1e-12


def test_double_adjoint_returns_symbol():
    N = 3
    a = elliptic_bump_symbol(1, 1.0, matrix=np.array([[2.0, 0.5],
                                                      [0.0, 1.0]]),
                             truncation=N)
    back = adjoint_symbol(adjoint_symbol(a, N), N)
    xs, us = sample_xu(1)
    for j in range(N):
        assert component_gap(a, back, j, xs, us) <= 1e-8


def test_component_degree_mismatch_rejected():
    sym = multiplier_symbol(1, 1.0, truncation=2)
    with pytest.raises(ValueError):
        ClassicalSymbol(1, 2.0, sym.components, sym.cutoff, sym.algebra)


# -- multi-index helpers (hypothesis) -------------------------------------

@st.composite
def multi_index_pairs(draw):
    d = draw(st.integers(min_value=1, max_value=3))
    alpha = tuple(draw(st.integers(min_value=0, max_value=4))
                  for _ in range(d))
    beta = tuple(draw(st.integers(min_value=0, max_value=a))
                 for a in alpha)
    return alpha, beta


@given(multi_index_pairs())
@settings(max_examples=60, deadline=None)
def test_binomial_matches_factorials(pair):
    alpha, beta = pair
    lhs = binomial(alpha, beta)
    rhs = factorial(alpha) // (factorial(beta)
                               * factorial(sub_indices(alpha, beta)))
    assert lhs == rhs


@given(st.integers(min_value=1, max_value=3), st.integers(min_value=0,
                                                          max_value=4))
@settings(max_examples=30, deadline=None)
def test_indices_of_order_counts(d, k):
    idx = indices_of_order(d, k)
    assert all(sum(a) == k for a in idx)
    assert len(idx) == len(set(idx))
    assert len(idx) == math.comb(k + d - 1, d - 1)


@given(multi_index_pairs())
@settings(max_examples=40, deadline=None)
def test_lower_indices_complete(pair):
    alpha, _ = pair
    lows = lower_indices(alpha)
    count = int(np.prod([a + 1 for a in alpha]))
    assert len(lows) == count
    assert all(all(b <= a for a, b in zip(alpha, low)) for low in lows)
