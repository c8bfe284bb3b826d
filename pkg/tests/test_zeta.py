"""Zeta functions: closed-form residues, operator-side traces, and the
pole extrapolation."""

import csv

import numpy as np
import pytest

from weylab.families import bessel_symbol, multiplier_symbol
from weylab.quantize import GridSpec, fourier_multiplier, identity_operator
from weylab.zeta import (
    Localizer,
    ZetaSample,
    extrapolate_residue,
    lattice_truncation_rate,
    operator_zeta,
    operator_zeta_samples,
    residue_at_pole,
    symbolic_zeta,
    symbolic_zeta_samples,
)


def flat_localizer(d, half=0.5):
    """Indicator-style localizer with unit squared mass."""
    box = np.stack([-half * np.ones(d), half * np.ones(d)], axis=1)
    return Localizer(lambda x: np.ones(np.shape(x)[:-1]), box)


# -- closed-form residues ----------------------------------------------------

def test_scalar_residue_closed_form():
    # sigma = |xi|^2 in d=2 with unit-mass localizer: residue is
    # |S^1| / (m (2 pi)^d) = 2 pi / (2 (2 pi)^2) = 1 / (4 pi)
    sym = multiplier_symbol(2, 2.0)
    res = residue_at_pole(sym, flat_localizer(2), space_per_axis=8)
    assert abs(res - 1.0 / (4 * np.pi)) <= 1e-10


def test_matrix_residue_closed_form():
    # tau(diag(1,16)^{-1}) = 17/16 scales the scalar answer
    sym = multiplier_symbol(2, 2.0, matrix=np.diag([1.0, 16.0]))
    res = residue_at_pole(sym, flat_localizer(2), space_per_axis=8)
    assert abs(res - 17.0 / (64 * np.pi)) <= 1e-10


def test_residue_scales_with_localizer_height():
    sym = multiplier_symbol(2, 2.0)
    phi1 = Localizer.bump(2, np.zeros(2), 0.6)
    phi3 = Localizer.bump(2, np.zeros(2), 0.6, height=3.0)
    r1 = residue_at_pole(sym, phi1)
    r3 = residue_at_pole(sym, phi3)
    assert abs(r3 - 9.0 * r1) <= 1e-10 * abs(r3)


# -- symbol-side zeta ---------------------------------------------------------

def test_zeta_scaling_in_the_symbol():
    # (c sigma)^{-z} = c^{-z} sigma^{-z}
    phi = flat_localizer(1)
    base = multiplier_symbol(1, 1.0)
    scaled = multiplier_symbol(1, 1.0, matrix=np.array([[3.0]]))
    for z in (1.5, 2.0, 3.25):
        za = symbolic_zeta(base, phi, z, space_per_axis=8)
        zb = symbolic_zeta(scaled, phi, z, space_per_axis=8)
        assert abs(zb - 3.0 ** (-z) * za) <= 1e-12 * abs(za)


def test_zeta_values_are_positive_for_positive_symbols():
    sym = multiplier_symbol(2, 2.0, matrix=np.diag([1.0, 16.0]))
    phi = Localizer.bump(2, np.zeros(2), 0.6)
    sample = symbolic_zeta_samples(sym, phi, [1.1, 1.3, 1.7, 2.4])
    for v in sample.values:
        assert v.real > 0
        assert abs(v.imag) <= 1e-10 * abs(v)


def test_zeta_rejects_pole_side():
    sym = multiplier_symbol(2, 2.0)
    with pytest.raises(ValueError):
        symbolic_zeta(sym, flat_localizer(2), 1.0)
    with pytest.raises(ValueError):
        symbolic_zeta(sym, flat_localizer(2), 0.5)


def test_extrapolation_matches_closed_form_residue():
    sym = multiplier_symbol(2, 2.0, matrix=np.diag([1.0, 16.0]))
    phi = Localizer.bump(2, np.zeros(2), 0.6)
    ts = np.linspace(0.04, 0.5, 12)
    sample = symbolic_zeta_samples(sym, phi, [1.0 + t for t in ts])
    fit = extrapolate_residue(sample)
    exact = residue_at_pole(sym, phi)
    assert abs(fit - exact) <= 0.01 * abs(exact)
    assert fit.fit_residual <= 1e-3


# -- operator-side zeta -------------------------------------------------------

def test_identity_operator_zeta_counts_sites():
    grid = GridSpec(1, 2.0, 32)
    ident = identity_operator(grid, n=2)
    ones = np.ones(grid.sites)
    for z in (0.7, 2.0):
        val = operator_zeta(ident, ones, z)
        assert abs(val - 2 * grid.sites) <= 1e-9 * grid.sites


def test_operator_zeta_matches_lattice_sum():
    grid = GridSpec(2, 2.0, 16)
    mult = lambda xi: 1.0 + np.sum(xi ** 2, axis=-1)
    A = fourier_multiplier(mult, grid, order_hint=2.0)
    xi = grid.frequency_points()
    vals = 1.0 + np.sum(xi ** 2, axis=-1)
    for z in (1.2, 2.5):
        got = operator_zeta(A, np.ones(grid.sites), z)
        ref = np.sum(vals ** (-z))
        assert abs(got - ref) <= 1e-10 * abs(ref)


def test_operator_zeta_requires_positive_operator():
    grid = GridSpec(1, 2.0, 16)
    A = fourier_multiplier(lambda xi: np.sum(xi ** 2, axis=-1) - 1.0, grid)
    with pytest.raises(ValueError):
        operator_zeta(A, np.ones(grid.sites), 2.0)


def test_operator_residue_improves_under_grid_doubling():
    sym = bessel_symbol(2, 2.0)
    phi = Localizer.bump(2, np.zeros(2), 0.6)
    exact = residue_at_pole(sym, phi)
    ts = np.linspace(0.05, 0.5, 12)
    rels = []
    for npts in (64, 128):
        grid = GridSpec(2, 2.0, npts)
        A = fourier_multiplier(
            lambda xi: 1.0 + np.sum(xi ** 2, axis=-1), grid, order_hint=2.0)
        sample = operator_zeta_samples(A, phi, [1.0 + t for t in ts])
        fit = extrapolate_residue(
            sample, truncation_rate=lattice_truncation_rate(A))
        rels.append(abs(fit - exact) / abs(exact))
    assert rels[-1] <= 0.03
    assert rels[1] < rels[0]


# -- sample container and fit validation --------------------------------------

def test_zeta_sample_rejects_pole_touching_values():
    with pytest.raises(ValueError):
        ZetaSample((1.0005,), (1.0,), pole=1.0)


def test_extrapolate_recovers_simple_pole():
    ts = np.array([0.05, 0.1, 0.2, 0.3, 0.45])
    sample = ZetaSample(tuple(1.0 + ts), tuple(1.0 / ts), pole=1.0)
    fit = extrapolate_residue(sample)
    assert abs(fit - 1.0) <= 1e-10
    assert fit.fit_residual <= 1e-10


def test_extrapolate_recovers_pole_plus_constant():
    ts = np.array([0.05, 0.1, 0.2, 0.3, 0.45])
    sample = ZetaSample(tuple(1.0 + ts), tuple(1.0 / ts + 7.0), pole=1.0)
    fit = extrapolate_residue(sample)
    assert abs(fit - 1.0) <= 1e-9


def test_extrapolate_validation():
    with pytest.raises(ValueError):
        extrapolate_residue(ZetaSample((1.1, 1.2, 1.3), (1, 1, 1), 1.0))
    far = ZetaSample((1.1, 1.2, 1.3, 2.0), (1, 1, 1, 1), 1.0)
    with pytest.raises(ValueError):
        extrapolate_residue(far)
    ok = ZetaSample((1.1, 1.2, 1.3, 1.4), (1, 1, 1, 1), 1.0)
    with pytest.raises(ValueError):
        extrapolate_residue(ok, truncation_rate=-1.0)


def test_zeta_csv_roundtrip(tmp_path):
    sample = ZetaSample((1.5, 2.0 + 0.5j), (0.25, 0.125 - 0.01j), pole=1.0)
    path = tmp_path / "zeta.csv"
    sample.write_csv(str(path))
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["re_z", "im_z", "re_zeta", "im_zeta"]
    assert len(rows) == 3
    back = [tuple(float(c) for c in row) for row in rows[1:]]
    assert back[0] == (1.5, 0.0, 0.25, 0.0)
    assert back[1] == (2.0, 0.5, 0.125, -0.01)
