"""Geometric checks: admissibility, zeta-regularity and monitored constants."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from fvot.errors import InvalidMesh


@dataclass
class AdmissibilityReport:
    residuals: np.ndarray
    tol: float
    passed: bool = field(init=False)

    def __post_init__(self):
        self.passed = bool(np.all(self.residuals <= self.tol))

    @property
    def worst(self) -> float:
        return float(self.residuals.max()) if len(self.residuals) else 0.0

    def to_dict(self):
        return {
            "admissible": self.passed,
            "tol": self.tol,
            "worst_residual": self.worst,
            "residuals": self.residuals.tolist(),
        }


def check_admissibility(mesh, tol=1e-9):
    """Orthogonality of anchor segments to their interfaces.

    The residual of edge ``K~L`` is ``|t . (x_K - x_L)| / d_KL`` for the unit
    tangent ``t`` of ``(K|L)``; it vanishes identically in 1D.
    """
    res = np.zeros(mesh.n_edges)
    for e, f in enumerate(mesh.interfaces):
        if f.measure <= 0:
            raise InvalidMesh(f"interface {list(f.cells)} has zero measure")
        if mesh.dimension == 1:
            continue
        p, q = f.facet
        t = (q - p) / np.linalg.norm(q - p)
        k, l = f.cells
        res[e] = abs(np.dot(t, mesh.anchors[k] - mesh.anchors[l])) / f.distance
    return AdmissibilityReport(res, tol)


def check_zeta_regularity(mesh):
    """Largest ``zeta`` for which the mesh is zeta-regular (0 on failure).

    Combines the inner-ball ratio ``r_K / [T]`` and the area bound
    ``|(K|L)| / [T]^(d-1)``, capped at 1.
    """
    h = mesh.mesh_size
    inner = min(c.inner_radius() for c in mesh.cells) / h
    area = (mesh.measures / h ** (mesh.dimension - 1)).min() if mesh.n_edges else 1.0
    return max(0.0, min(inner, float(area), 1.0))


def geometry_monitors(mesh):
    """Quantities that stay bounded on zeta-regular families.

    Returns a dict with the maximal neighbour count, ``diam(K)/d_KL``,
    ``d_KL |(K|L)| / |K|`` and its inverse, each maximised over ``K~L``.
    """
    k, l = mesh.edges[:, 0], mesh.edges[:, 1]
    counts = np.bincount(mesh.edges.ravel(), minlength=mesh.n_cells)
    d, a = mesh.distances, mesh.measures
    ratio = np.concatenate([d * a / mesh.volumes[k], d * a / mesh.volumes[l]])
    diam = np.concatenate([mesh.diameters[k], mesh.diameters[l]]) / np.concatenate([d, d])
    return {
        "max_neighbours": int(counts.max()),
        "max_diam_over_distance": float(diam.max()),
        "max_flux_volume_ratio": float(ratio.max()),
        "max_inverse_flux_volume_ratio": float((1.0 / ratio).max()),
    }


def gauss_tensor(mesh, k):
    """``sum_facets int (x - x_K) (x) n dS`` for cell ``k``, exact for polygons."""
    cell = mesh.cells[k]
    out = np.zeros((mesh.dimension, mesh.dimension))
    for pts, n, length in cell.facets():
        centre = pts.mean(axis=0)
        out += length * np.outer(centre - cell.anchor, n)
    return out
