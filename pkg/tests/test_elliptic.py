"""Ellipticity certificates, parametrix recursion, resolvent expansion."""

import numpy as np
import sympy as sp

from weylab.elliptic import (
    KeyholeSpec,
    check_ellipticity,
    parametrix,
    resolvent_symbols,
)
from weylab.families import (
    SmoothFunction,
    bump_expr,
    elliptic_bump_symbol,
    freq_symbols,
    multiplier_symbol,
    norm_expr,
    space_symbols,
    support_box,
    symbol_from_exprs,
)
from weylab.symbols import compose_symbols, evaluate_symbol

RNG = np.random.default_rng(23)


def sample_xu(d, nx=5, nu=8):
    xs = np.linspace(-0.8, 0.8, nx)[:, None] * np.ones(d)
    if d == 1:
        us = np.array([[1.0], [-1.0]])
    else:
        ang = 2 * np.pi * np.arange(nu) / nu
        us = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    return xs, us


def residual_to_identity(sym, count, xs, us):
    """Max deviation of sym from the identity symbol over count degrees,
    relative to the largest sampled magnitude."""
    eye = np.eye(sym.n)
    worst = 0.0
    scale = 1.0
    for j in range(count):
        vals = sym.component(j).value(xs[:, None, :], us[None, :, :])
        target = eye if j == 0 else np.zeros_like(eye)
        worst = max(worst, float(np.max(np.abs(vals - target))))
        scale = max(scale, float(np.max(np.abs(vals))))
    return worst / scale


# -- ellipticity certificate ----------------------------------------------

def test_flat_direction_is_not_elliptic():
    # sigma_1 = xi_1 in d=2 vanishes at xi = (0, +-1)
    k1 = freq_symbols(2)[0]
    sym = symbol_from_exprs(2, 1.0, [k1])
    report = check_ellipticity(sym)
    assert not report.is_elliptic
    assert report.c1 == np.inf and report.c2 == 0.0
    _, u = report.worst_point
    assert abs(abs(u[1]) - 1.0) <= 1e-12


def test_inverse_norm_is_elliptic_with_unit_constants():
    report = check_ellipticity(multiplier_symbol(2, -1.0))
    assert report.is_elliptic
    assert abs(report.c1 - 1.0) <= 1e-12
    assert abs(report.c2 - 1.0) <= 1e-12
    assert abs(report.c1 * report.c2 - 1.0) <= 1e-12


def test_diagonal_symbol_constants():
    report = check_ellipticity(multiplier_symbol(2, 1.0,
                                                 matrix=np.diag([1.0, 2.0])))
    assert report.is_elliptic
    assert abs(report.c2 - 1.0) <= 1e-12
    assert abs(report.spectral_ceiling - 2.0) <= 1e-12
    assert report.spectral_floor >= 0.99


def test_bump_symbol_constants_track_amplitude():
    sym = elliptic_bump_symbol(1, 1.0, bump_amplitude=0.5)
    report = check_ellipticity(sym)
    assert report.is_elliptic
    assert abs(report.c2 - 1.0) <= 1e-6
    assert report.spectral_ceiling <= 1.5 + 1e-12


def test_keyhole_region_geometry():
    spec = KeyholeSpec(arc_radius=0.5)
    assert spec.contains(np.array([-3.0 + 0.0j]))[0]
    assert spec.contains(np.array([0.3 + 0.1j]))[0]
    assert not spec.contains(np.array([2.0 + 0.0j]))[0]
    rep = check_ellipticity(multiplier_symbol(2, 1.0,
                                              matrix=np.diag([1.0, 2.0])))
    assert abs(KeyholeSpec.for_report(rep).arc_radius
               - 0.5 * rep.spectral_floor) <= 1e-12


# -- parametrix ------------------------------------------------------------

def test_parametrix_of_multiplier_is_inverse_power():
    Q = np.diag([1.0, 4.0])
    sym = multiplier_symbol(1, 1.0, matrix=Q, truncation=3)
    b = parametrix(sym, 3)
    assert abs(b.order - (-1.0)) <= 1e-12
    xs, us = sample_xu(1)
    lead = b.component(0).value(xs[:, None, :], us[None, :, :])
    assert np.max(np.abs(lead - np.linalg.inv(Q))) <= 1e-12
    for j in (1, 2):
        vals = b.component(j).value(xs[:, None, :], us[None, :, :])
        assert np.max(np.abs(vals)) <= 1e-14


def test_parametrix_step_matches_closed_form():
    # sigma = a(x) |xi| in d=1 with a = 2 + b(x)/2. The degree -2 term of
    # the recursion is b_{-2} = -(d_xi b_{-1}) (D_x sigma_1) / sigma_1,
    # which on the sphere reduces to -i a'(x) a(x)^{-2} u.
    x1 = space_symbols(1)[0]
    a_expr = 2 + sp.Rational(1, 2) * bump_expr((x1,), np.zeros(1), 0.5)
    sym = symbol_from_exprs(1, 1.0, [a_expr * norm_expr(1), None],
                            spatial_support=support_box(0.0, 0.5, 1))
    b = parametrix(sym, 2)
    a_fn = SmoothFunction(a_expr, 1)
    xs = np.array([[0.2], [0.35], [0.0], [0.7]])
    us = np.array([[1.0], [-1.0]])
    avals = a_fn(xs)[:, None]
    aprime = a_fn.gradient(xs)[:, 0][:, None]
    lead = b.component(0).value(xs[:, None, :], us[None, :, :])[..., 0, 0]
    assert np.max(np.abs(lead - 1.0 / avals)) <= 1e-12
    sub = b.component(1).value(xs[:, None, :], us[None, :, :])[..., 0, 0]
    oracle = -1j * aprime / avals ** 2 * us[None, :, 0]
    assert np.max(np.abs(sub - oracle)) <= 1e-10


def test_parametrix_left_composition_is_identity():
    N = 3
    sym = elliptic_bump_symbol(1, 1.0, matrix=np.array([[2.0, 0.3],
                                                        [0.1, 1.0]]),
                               truncation=N)
    res = compose_symbols(parametrix(sym, N), sym, N)
    xs, us = sample_xu(1)
    assert residual_to_identity(res, N, xs, us) <= 1e-8


def test_parametrix_is_two_sided():
    N = 3
    sym = elliptic_bump_symbol(2, 2.0, matrix=np.diag([1.0, 3.0]),
                               bump_amplitude=0.4, truncation=N)
    res = compose_symbols(sym, parametrix(sym, N), N)
    xs, us = sample_xu(2)
    assert residual_to_identity(res, N, xs, us) <= 1e-6


def test_parametrix_evaluation_inverts_high_frequencies():
    sym = elliptic_bump_symbol(1, 1.0, truncation=3)
    b = parametrix(sym, 3)
    x = np.array([0.1])
    for r in (8.0, 16.0):
        xi = np.array([r])
        prod = (evaluate_symbol(sym, x, xi) @ evaluate_symbol(b, x, xi))
        assert np.max(np.abs(prod - np.eye(1))) <= 1.0 / r


# -- resolvent expansion ----------------------------------------------------

def test_resolvent_leading_term_inverts_shifted_symbol():
    sym = multiplier_symbol(2, 1.0, truncation=2)
    exp = resolvent_symbols(sym, 2)
    val = exp.component_value(0, np.zeros(2), np.array([1.0, 0.0]),
                              np.array([-1.0 + 0.0j]))
    assert abs(val[0, 0, 0] - 0.5) <= 1e-12


def test_resolvent_inverts_at_general_frequencies():
    Q = np.diag([1.0, 2.0])
    sym = multiplier_symbol(2, 1.0, matrix=Q, truncation=2)
    exp = resolvent_symbols(sym, 2)
    x = np.zeros(2)
    for r, lam in ((0.5, -0.3), (2.0, -5.0), (7.0, -0.01)):
        xi = r * np.array([0.6, 0.8])
        ref = np.linalg.inv(Q * r - lam * np.eye(2))
        val = exp.value_at(0, x, xi, np.array([lam + 0.0j]))[0]
        assert np.max(np.abs(val - ref)) <= 1e-12 * np.abs(ref).max()


def test_resolvent_correction_vanishes_for_multipliers():
    sym = multiplier_symbol(2, 1.0, truncation=3)
    exp = resolvent_symbols(sym, 3)
    lam = np.array([-1.0 + 0.0j, -4.0 + 0.5j])
    for j in (1, 2):
        val = exp.component_value(j, np.zeros(2), np.array([0.0, 1.0]), lam)
        assert np.max(np.abs(val)) <= 1e-14


def test_resolvent_correction_matches_closed_form():
    # sigma = a(x)|xi| in d=1: B_1 = -i a a' u (a - lam)^{-3} on the sphere
    x1 = space_symbols(1)[0]
    a_expr = 2 + sp.Rational(1, 2) * bump_expr((x1,), np.zeros(1), 0.5)
    sym = symbol_from_exprs(1, 1.0, [a_expr * norm_expr(1), None],
                            spatial_support=support_box(0.0, 0.5, 1))
    exp = resolvent_symbols(sym, 2)
    a_fn = SmoothFunction(a_expr, 1)
    lam = np.array([-1.0 + 0.0j, -0.2 + 0.0j, -9.0 + 0.0j])
    for xval in (0.2, 0.35):
        for u in (1.0, -1.0):
            a = float(a_fn(np.array([xval])))
            ap = float(a_fn.gradient(np.array([xval]))[0])
            got = exp.component_value(1, np.array([xval]), np.array([u]),
                                      lam)[:, 0, 0]
            ref = -1j * a * ap * u / (a - lam) ** 3
            assert np.max(np.abs(got - ref)) <= 1e-10


def test_resolvent_joint_homogeneity():
    sym = elliptic_bump_symbol(2, 2.0, truncation=2)
    exp = resolvent_symbols(sym, 2)
    x = np.array([0.1, -0.2])
    u = np.array([0.6, 0.8])
    lam = np.array([-1.5 + 0.0j])
    for j in (0, 1):
        base = exp.component_value(j, x, u, lam)
        for t in (0.5, 2.0, 4.0):
            scaled = exp.value_at(j, x, t * u, t ** 2 * lam)
            ref = t ** (-2.0 - j) * base
            assert np.max(np.abs(scaled - ref)) <= 1e-8 * np.abs(ref).max()


def test_resolvent_norm_decay_on_the_ray():
    sym = elliptic_bump_symbol(1, 1.0, matrix=np.diag([1.0, 2.0]),
                               truncation=1)
    report = check_ellipticity(sym)
    exp = resolvent_symbols(sym, 1)
    xs, us = sample_xu(1)
    worst = 0.0
    for s in np.geomspace(0.01, 100.0, 12):
        lam = np.array([-s + 0.0j])
        val = exp.component_value(0, xs[:, None, :], us[None, :, :], lam)
        norms = np.linalg.norm(val, ord=2, axis=(-2, -1))
        worst = max(worst, float(np.max(norms)) * (1.0 + s))
    assert worst <= 10.0 * report.c1
