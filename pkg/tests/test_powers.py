"""Complex powers: Hermitian functional calculus, contour quadrature,
and the symbol-level power construction."""

import numpy as np
import pytest

from weylab.elliptic import parametrix
from weylab.families import elliptic_bump_symbol, multiplier_symbol
from weylab.powers import (
    contour_power,
    identity_symbol,
    keyhole_contour,
    matrix_power,
    power_symbol,
    principal_modulus_power,
)
from weylab.symbols import compose_symbols

RNG = np.random.default_rng(37)


def random_spd(n, cond, rng):
    """SPD matrix with the prescribed condition number."""
    Q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    eigs = np.geomspace(1.0, cond, n)
    return (Q * eigs) @ Q.T


def symbol_gap(sa, sb, count, xs, us, relative=True):
    worst = 0.0
    scale = 1e-300
    for j in range(count):
        va = sa.component(j).value(xs[:, None, :], us[None, :, :])
        vb = sb.component(j).value(xs[:, None, :], us[None, :, :])
        worst = max(worst, float(np.max(np.abs(va - vb))))
        scale = max(scale, float(np.max(np.abs(va))))
    return worst / scale if relative else worst


# -- Hermitian functional calculus -----------------------------------------

def test_matrix_power_closed_forms():
    P = np.diag([2.0, 3.0]).astype(complex)
    out = matrix_power(P, -1.3)
    ref = np.diag([2.0 ** -1.3, 3.0 ** -1.3])
    assert np.max(np.abs(out - ref)) <= 1e-14
    assert np.max(np.abs(matrix_power(P, 0.0) - np.eye(2))) <= 1e-14
    assert np.max(np.abs(matrix_power(P, 1.0) - P)) <= 1e-14


def test_matrix_power_square_root_squares_back():
    P = random_spd(5, 50.0, RNG)
    R = matrix_power(P, 0.5)
    assert np.max(np.abs(R @ R - P)) <= 1e-10 * np.abs(P).max()


def test_matrix_power_batched():
    P = np.stack([random_spd(3, 10.0, RNG) for _ in range(4)]).reshape(2, 2, 3, 3)
    out = matrix_power(P, -0.5)
    assert out.shape == P.shape
    for idx in np.ndindex(2, 2):
        ref = matrix_power(P[idx], -0.5)
        assert np.max(np.abs(out[idx] - ref)) <= 1e-13


def test_matrix_power_rejects_non_hermitian():
    with pytest.raises(ValueError):
        matrix_power(np.array([[1.0, 1.0], [0.0, 1.0]]), 0.5)


def test_matrix_power_rejects_singular():
    with pytest.raises(ValueError):
        matrix_power(np.diag([1.0, 0.0]), -1.0)


# -- contour quadrature ------------------------------------------------------

def test_contour_oracle_hundred_spd_matrices():
    rng = np.random.default_rng(101)
    zs = (-0.5, -1.3, 0.8, 2.0)
    worst = 0.0
    for _ in range(100):
        cond = float(rng.uniform(2.0, 1e4))
        P = random_spd(4, cond, rng)
        z = zs[int(rng.integers(len(zs)))]
        got = contour_power(P, z)
        ref = matrix_power(P, z)
        worst = max(worst, float(np.max(np.abs(got - ref))
                                 / max(np.abs(ref).max(), 1e-300)))
    assert worst <= 1e-6


def test_contour_semigroup_gives_inverse():
    P = random_spd(5, 200.0, RNG)
    prod = contour_power(P, -0.3) @ contour_power(P, -0.7)
    ref = np.linalg.inv(P)
    assert np.max(np.abs(prod - ref)) <= 1e-6 * np.abs(ref).max()


def test_contour_needs_positive_floor():
    with pytest.raises(ValueError):
        keyhole_contour(0.0, 1.0)


# -- symbol powers -----------------------------------------------------------

def test_power_of_multiplier_matches_matrix_power():
    Q = np.diag([1.0, 4.0])
    sym = multiplier_symbol(1, 1.0, matrix=Q, truncation=2)
    p = power_symbol(sym, -0.8, 2)
    assert abs(p.order - (-0.8)) <= 1e-12
    xs = np.zeros((1, 1))
    us = np.array([[1.0], [-1.0]])
    lead = p.component(0).value(xs[:, None, :], us[None, :, :])
    ref = matrix_power(Q, -0.8)
    assert np.max(np.abs(lead - ref)) <= 1e-6
    sub = p.component(1).value(xs[:, None, :], us[None, :, :])
    assert np.max(np.abs(sub)) <= 1e-12


def test_power_zero_is_identity_symbol():
    sym = elliptic_bump_symbol(1, 1.0, matrix=np.diag([1.0, 4.0]),
                               truncation=2)
    p = power_symbol(sym, 0)
    xs = np.array([[0.2], [-0.4]])
    us = np.array([[1.0], [-1.0]])
    lead = p.component(0).value(xs[:, None, :], us[None, :, :])
    assert np.max(np.abs(lead - np.eye(2))) <= 1e-14
    assert np.max(np.abs(
        p.component(1).value(xs[:, None, :], us[None, :, :]))) == 0.0


def test_power_two_composes_the_symbol():
    sym = elliptic_bump_symbol(1, 1.0, matrix=np.diag([1.0, 4.0]),
                               truncation=2)
    p = power_symbol(sym, 2)
    assert abs(p.order - 2.0) <= 1e-12
    xs = np.array([[0.1], [0.3]])
    us = np.array([[1.0], [-1.0]])
    lead = p.component(0).value(xs[:, None, :], us[None, :, :])
    base = sym.principal.value(xs[:, None, :], us[None, :, :])
    assert np.max(np.abs(lead - base @ base)) <= 1e-12


def test_power_minus_one_is_parametrix():
    sym = elliptic_bump_symbol(1, 1.0, matrix=np.diag([1.0, 4.0]),
                               bump_amplitude=0.5, truncation=2)
    xs = np.linspace(-0.6, 0.6, 3)[:, None]
    us = np.array([[1.0], [-1.0]])
    gap = symbol_gap(power_symbol(sym, -1.0, 2), parametrix(sym, 2),
                     2, xs, us)
    assert gap <= 1e-6


def test_power_group_law_small():
    sym = elliptic_bump_symbol(1, 1.0, matrix=np.diag([1.0, 4.0]),
                               bump_amplitude=0.5, truncation=2)
    xs = np.array([[0.0], [0.3]])
    us = np.array([[1.0], [-1.0]])
    half = power_symbol(sym, -0.5, 2)
    combined = compose_symbols(half, half, 2)
    direct = power_symbol(sym, -1.0, 2)
    assert symbol_gap(direct, combined, 2, xs, us) <= 1e-6


def test_power_lift_exponent_independence():
    sym = multiplier_symbol(1, 1.0, matrix=np.diag([1.0, 4.0]),
                            truncation=2)
    xs = np.zeros((1, 1))
    us = np.array([[1.0], [-1.0]])
    a = power_symbol(sym, 0.5, 2, lift_k=1)
    b = power_symbol(sym, 0.5, 2, lift_k=2)
    assert symbol_gap(a, b, 2, xs, us) <= 1e-6


def test_power_requires_positive_symbol():
    sym = multiplier_symbol(1, 1.0, matrix=np.array([[0.0, 1.0],
                                                     [1.0, 0.0]]),
                            truncation=2)
    with pytest.raises(ValueError):
        power_symbol(sym, -0.5, 2)


def test_identity_symbol_jets_vanish():
    ident = identity_symbol(1, 2, 2)
    xs = np.array([[0.2]])
    us = np.array([[1.0]])
    jet = ident.component(0).jet(xs[:, None, :], us[None, :, :], (1,), (0,))
    assert np.max(np.abs(jet)) == 0.0


def test_principal_modulus_of_rotation_is_identity():
    Q = np.array([[0.0, -1.0], [1.0, 0.0]])
    sym = multiplier_symbol(2, 1.0, matrix=Q, truncation=1)
    mod = principal_modulus_power(sym, 1.0, truncation=1)
    assert abs(mod.order - 1.0) <= 1e-12
    u = np.array([0.6, 0.8])
    val = mod.principal.value(np.zeros(2), u)
    assert np.max(np.abs(val - np.eye(2))) <= 1e-12
