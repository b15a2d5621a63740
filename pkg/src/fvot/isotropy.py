"""Isotropy tensors, centre-of-mass weights and anisotropy diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from fvot.errors import InvalidArgument
from fvot.means import WeightFunction

BOX_TOL = 1e-12


def _oriented(mesh, weights):
    """Per-cell list of ``(edge, neighbour, lambda_KL)``."""
    lam = weights.lam if isinstance(weights, WeightFunction) else np.asarray(weights, float)
    if lam.shape != (mesh.n_edges,):
        raise InvalidArgument(f"weights have {lam.shape} entries, mesh has {mesh.n_edges} edges")
    out = [[] for _ in range(mesh.n_cells)]
    for e, (k, l) in enumerate(mesh.edges):
        out[k].append((e, l, lam[e]))
        out[l].append((e, k, 1.0 - lam[e]))
    return out


def isotropy_tensor(mesh, weights, k, boundary="none"):
    """``M_K = sum_L lambda_KL |(K|L)| / d_KL (x_K - x_L) (x) (x_K - x_L)``.

    With ``boundary="reflect"`` every boundary facet of ``K`` contributes a
    mirrored ghost neighbour with weight 1/2.
    """
    return _tensor(mesh, _oriented(mesh, weights)[k], k, boundary)


def _tensor(mesh, nbrs, k, boundary):
    x = mesh.anchors[k]
    M = np.zeros((mesh.dimension, mesh.dimension))
    for e, l, lam in nbrs:
        diff = x - mesh.anchors[l]
        M += lam * mesh.measures[e] / mesh.distances[e] * np.outer(diff, diff)
    if boundary == "reflect":
        for pts, n, length in mesh.boundary_facets(k):
            gap = float(np.dot(pts[0] - x, n))
            M += 0.5 * length * 2 * gap * np.outer(n, n)
    elif boundary != "none":
        raise InvalidArgument(f"unknown boundary treatment {boundary!r}")
    return M


@dataclass
class IsotropyReport:
    tensors: np.ndarray
    defects: np.ndarray
    lambda_max: np.ndarray
    volumes: np.ndarray
    interior: np.ndarray

    @property
    def worst_defect(self) -> float:
        return float(self.defects.max())

    def _worst(self, mask):
        return float(self.defects[mask].max()) if mask.any() else None

    @property
    def worst_interior_defect(self):
        return self._worst(self.interior)

    @property
    def worst_boundary_defect(self):
        return self._worst(~self.interior)

    def to_dict(self):
        return {
            "worst_defect": self.worst_defect,
            "worst_interior_defect": self.worst_interior_defect,
            "worst_boundary_defect": self.worst_boundary_defect,
            "interior_cells": int(self.interior.sum()),
            "boundary_cells": int((~self.interior).sum()),
            "cells": [
                {"id": k, "interior": bool(i), "defect": float(d), "lambda_max": float(lm),
                 "volume": float(v), "tensor": t.tolist()}
                for k, (i, d, lm, v, t) in enumerate(
                    zip(self.interior, self.defects, self.lambda_max, self.volumes, self.tensors))
            ],
        }


def isotropy_defect(mesh, weights, boundary="none"):
    """Per-cell defect ``eta(K) = lambda_max(M_K) / |K| - 1``."""
    nbrs = _oriented(mesh, weights)
    T = np.array([_tensor(mesh, nbrs[k], k, boundary) for k in range(mesh.n_cells)])
    lmax = np.linalg.eigvalsh(T)[:, -1]
    return IsotropyReport(T, lmax / mesh.volumes - 1.0, lmax, mesh.volumes, np.asarray(mesh.interior))


@dataclass
class CentreOfMassResult:
    weights: WeightFunction
    s: np.ndarray
    residuals: np.ndarray
    tol: float = 1e-9

    @property
    def holds(self) -> bool:
        return bool(np.all(self.residuals <= self.tol) and np.all((self.s >= -self.tol) & (self.s <= 1 + self.tol)))

    @property
    def violations(self):
        bad = (self.residuals > self.tol) | (self.s < -self.tol) | (self.s > 1 + self.tol)
        return np.flatnonzero(bad)


def center_of_mass_weights(mesh, tol=1e-9):
    """Weights from the interface barycentres.

    The barycentre of ``(K|L)`` is projected onto the line through ``x_K`` and
    ``x_L``; with ``s`` the projection parameter measured from ``x_K``, the
    barycentre equals ``(1 - s) x_K + s x_L``, so ``lambda_KL = s``.  Weights
    are clipped to ``[0, 1]``; ``s`` and the distance of the barycentre from
    the line are returned for diagnosis.
    """
    s = np.empty(mesh.n_edges)
    res = np.empty(mesh.n_edges)
    for e, f in enumerate(mesh.interfaces):
        k, l = f.cells
        xk, xl = mesh.anchors[k], mesh.anchors[l]
        c = np.mean(f.facet, axis=0)
        seg = xl - xk
        s[e] = np.dot(c - xk, seg) / np.dot(seg, seg)
        res[e] = np.linalg.norm(c - (xk + s[e] * seg))
    return CentreOfMassResult(WeightFunction(np.clip(s, 0.0, 1.0)), s, res, tol)


def _box(mesh, box):
    lo, hi = (np.atleast_1d(np.asarray(b, float)) for b in box)
    if lo.shape != (mesh.dimension,) or hi.shape != (mesh.dimension,) or np.any(hi <= lo):
        raise InvalidArgument("box must be (lo, hi) with lo < hi in every coordinate")
    return lo, hi


def _inside(mesh, lo, hi):
    return np.array(
        [np.all(c.vertices >= lo - BOX_TOL) and np.all(c.vertices <= hi + BOX_TOL) for c in mesh.cells]
    )


def _unit(mesh, v):
    v = np.atleast_1d(np.asarray(v, float))
    if v.shape != (mesh.dimension,) or abs(np.linalg.norm(v) - 1) > 1e-12:
        raise InvalidArgument("v must be a unit vector")
    return v


def anisotropy_functional(mesh, weights, v, box):
    """``sum_{K in V} (sum_{L in V} lambda_KL (v.n_KL)^2 |(K|L)| d_KL - |K|)_+``.

    ``box = (lo, hi)`` is an axis-aligned box; a cell belongs to it when all
    its vertices do.
    """
    v = _unit(mesh, v)
    lo, hi = _box(mesh, box)
    inside = _inside(mesh, lo, hi)
    lam = weights.lam if isinstance(weights, WeightFunction) else np.asarray(weights, float)
    k, l = mesh.edges[:, 0], mesh.edges[:, 1]
    both = inside[k] & inside[l]
    c = (mesh.normals @ v) ** 2 * mesh.measures * mesh.distances * both
    S = np.bincount(k, lam * c, mesh.n_cells) + np.bincount(l, (1 - lam) * c, mesh.n_cells)
    return float(np.sum(np.maximum(S - mesh.volumes, 0.0)[inside]))


def boundary_neighbourhood_volume(lo, hi, rho):
    """``|B(dU, rho)|`` for the box ``U = (lo, hi)`` in one or two dimensions."""
    lo, hi = np.atleast_1d(lo).astype(float), np.atleast_1d(hi).astype(float)
    size = hi - lo
    if len(size) == 1:
        return float(min(4 * rho, size[0] + 2 * rho))
    w, h = size
    outer = (w + 2 * rho) * (h + 2 * rho) - (4 - math.pi) * rho**2
    return float(outer - max(w - 2 * rho, 0.0) * max(h - 2 * rho, 0.0))


def macroscopic_balance_check(mesh, weights, v, box):
    """Both sides of the averaged isotropy identity on the box ``U``.

    The left side is ``|sum_{K, L in U} lambda_KL (v.n)^2 |(K|L)| d_KL - |U||``
    and does not depend on the weights; the bound is ``|B(dU, 4[T])|``.
    """
    v = _unit(mesh, v)
    lo, hi = _box(mesh, box)
    inside = _inside(mesh, lo, hi)
    k, l = mesh.edges[:, 0], mesh.edges[:, 1]
    both = inside[k] & inside[l]
    lam = weights.lam if isinstance(weights, WeightFunction) else np.asarray(weights, float)
    c = (mesh.normals @ v) ** 2 * mesh.measures * mesh.distances * both
    total = float(np.sum(lam * c + (1 - lam) * c))
    dev = abs(total - float(np.prod(hi - lo)))
    bound = boundary_neighbourhood_volume(lo, hi, 4 * mesh.mesh_size)
    return {"lhs_deviation": dev, "bound": bound, "passed": dev <= bound}
