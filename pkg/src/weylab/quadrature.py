"""Sphere and box quadrature for the asymptotic-constant integrals.

Sphere rules carry the surface measure of S^{d-1}: counting measure on
the two-point sphere in d=1, arc length 2*pi in d=2 (periodic
trapezoid, spectrally accurate), and Lebedev octahedral rules with
total weight 4*pi in d=3 (node counts 26, 50, 86).

Box rules are midpoint products; every integrand they meet is smooth
and compactly supported in the box interior, so convergence is fast and
deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class SphereRule:
    dim: int
    points: np.ndarray  # (M, d) unit vectors
    weights: np.ndarray  # (M,), sums to |S^{d-1}|

    @property
    def count(self) -> int:
        return len(self.weights)

    def integrate(self, fn: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
        vals = np.asarray(fn(self.points))
        return np.tensordot(self.weights, vals, axes=(0, 0))


@dataclass(frozen=True)
class BoxRule:
    box: np.ndarray  # (d, 2)
    points: np.ndarray  # (M, d)
    weights: np.ndarray  # (M,), sums to box volume

    @property
    def count(self) -> int:
        return len(self.weights)

    def integrate(self, fn: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
        vals = np.asarray(fn(self.points))
        return np.tensordot(self.weights, vals, axes=(0, 0))


def _octahedral_a1() -> np.ndarray:
    eye = np.eye(3)
    return np.concatenate([eye, -eye])


def _octahedral_a2() -> np.ndarray:
    pts = []
    for i, j in ((0, 1), (0, 2), (1, 2)):
        for si, sj in product((1.0, -1.0), repeat=2):
            p = np.zeros(3)
            p[i], p[j] = si, sj
            pts.append(p / np.sqrt(2.0))
    return np.array(pts)


def _octahedral_a3() -> np.ndarray:
    return np.array(list(product((1.0, -1.0), repeat=3))) / np.sqrt(3.0)


def _octahedral_b(l: float) -> np.ndarray:
    m = np.sqrt(1.0 - 2.0 * l * l)
    pts = []
    for pos in range(3):
        for signs in product((1.0, -1.0), repeat=3):
            p = np.array([l, l, l])
            p[pos] = m
            pts.append(p * np.array(signs))
    return np.array(pts)


def _octahedral_c(p: float) -> np.ndarray:
    q = np.sqrt(1.0 - p * p)
    pts = []
    for (i, j) in ((0, 1), (1, 0), (0, 2), (2, 0), (1, 2), (2, 1)):
        for si, sj in product((1.0, -1.0), repeat=2):
            v = np.zeros(3)
            v[i], v[j] = si * p, sj * q
            pts.append(v)
    return np.array(pts)


_LEBEDEV = {
    26: (
        (_octahedral_a1, (), 1.0 / 21.0),
        (_octahedral_a2, (), 4.0 / 105.0),
        (_octahedral_a3, (), 9.0 / 280.0),
    ),
    50: (
        (_octahedral_a1, (), 4.0 / 315.0),
        (_octahedral_a2, (), 64.0 / 2835.0),
        (_octahedral_a3, (), 27.0 / 1280.0),
        (_octahedral_b, (0.3015113445777636,), 14641.0 / 725760.0),
    ),
    86: (
        (_octahedral_a1, (), 0.0115440115440116),
        (_octahedral_a3, (), 0.0119439090859366),
        (_octahedral_b, (0.3696028464541502,), 0.0111105557106034),
        (_octahedral_b, (0.6943540066026664,), 0.0118765012945371),
        (_octahedral_c, (0.3742430390903412,), 0.0118123037469044),
    ),
}


def sphere_rule(dim: int, resolution: int = 200) -> SphereRule:
    """Quadrature nodes and weights on S^{d-1}.

    Parameters
    ----------
    dim : int
        Ambient dimension d in {1, 2, 3}.
    resolution : int
        d=2: number of angular nodes. d=3: Lebedev node count, one of
        {26, 50, 86} (smaller requests round up). Ignored for d=1.
    """
    if dim == 1:
        pts = np.array([[1.0], [-1.0]])
        return SphereRule(1, pts, np.ones(2))
    if dim == 2:
        theta = 2.0 * np.pi * np.arange(resolution) / resolution
        pts = np.stack([np.cos(theta), np.sin(theta)], axis=1)
        w = np.full(resolution, 2.0 * np.pi / resolution)
        return SphereRule(2, pts, w)
    if dim == 3:
        counts = sorted(_LEBEDEV)
        pick = next((c for c in counts if c >= resolution), counts[-1])
        pts_list, w_list = [], []
        for maker, args, w in _LEBEDEV[pick]:
            block = maker(*args)
            pts_list.append(block)
            w_list.append(np.full(len(block), w * 4.0 * np.pi))
        return SphereRule(3, np.concatenate(pts_list), np.concatenate(w_list))
    raise ValueError("sphere_rule supports d in {1, 2, 3}")


def refine_sphere(rule: SphereRule) -> SphereRule:
    """Next refinement level of a sphere rule (for convergence checks)."""
    if rule.dim == 1:
        return rule
    if rule.dim == 2:
        return sphere_rule(2, 2 * rule.count)
    counts = sorted(_LEBEDEV)
    idx = counts.index(rule.count) if rule.count in counts else 0
    return sphere_rule(3, counts[min(idx + 1, len(counts) - 1)])


def box_rule(box: np.ndarray, per_axis: int = 32) -> BoxRule:
    """Midpoint product rule over a (d, 2) box."""
    box = np.asarray(box, dtype=float)
    d = box.shape[0]
    axes, steps = [], []
    for i in range(d):
        lo, hi = box[i]
        h = (hi - lo) / per_axis
        axes.append(lo + h * (np.arange(per_axis) + 0.5))
        steps.append(h)
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    w = np.full(len(pts), float(np.prod(steps)))
    return BoxRule(box, pts, w)


def refine_box(rule: BoxRule) -> BoxRule:
    per_axis = round(len(rule.points) ** (1.0 / rule.box.shape[0]))
    return box_rule(rule.box, 2 * per_axis)


def sphere_box_integrate(sphere: SphereRule, box: BoxRule,
                         fn: Callable[[np.ndarray, np.ndarray], np.ndarray]):
    """Integral over S^{d-1} x box of fn(x, u).

    fn must broadcast: called with x of shape (Mx, 1, d) and u of shape
    (1, Mu, d), returning (Mx, Mu, ...).
    """
    x = box.points[:, None, :]
    u = sphere.points[None, :, :]
    vals = np.asarray(fn(x, u))
    w = box.weights[:, None] * sphere.weights[None, :]
    return np.tensordot(w, vals, axes=([0, 1], [0, 1]))
