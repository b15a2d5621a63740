"""Discrete measures on a mesh, the projection P_T and the embedding Q_T."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from fvot._quad import GL_W as _GL_W, GL_X as _GL_X, integrate
from fvot.errors import InvalidArgument

MASS_TOL = 1e-12


@dataclass(frozen=True)
class DiscreteMeasure:
    """Probability masses ``m(K)`` on the cells of a mesh."""

    mass: np.ndarray

    def __post_init__(self):
        m = np.array(self.mass, dtype=float)
        if m.ndim != 1 or not np.all(np.isfinite(m)):
            raise InvalidArgument("masses must be a finite 1D array")
        if np.any(m < 0):
            raise InvalidArgument(f"negative mass in cell {int(np.argmin(m))}")
        if abs(m.sum() - 1.0) > MASS_TOL * max(1.0, len(m) ** 0.5):
            raise InvalidArgument(f"masses sum to {m.sum()!r}, not 1")
        m.setflags(write=False)
        object.__setattr__(self, "mass", m)

    def density(self, mesh):
        return self.mass / mesh.volumes

    def __len__(self):
        return len(self.mass)


def as_masses(m, mesh=None):
    """Return a plain float array of masses from an array or DiscreteMeasure."""
    arr = np.asarray(m.mass if isinstance(m, DiscreteMeasure) else m, dtype=float)
    if mesh is not None and arr.shape != (mesh.n_cells,):
        raise InvalidArgument(f"expected {mesh.n_cells} cell values, got shape {arr.shape}")
    return arr


def uniform(mesh):
    return DiscreteMeasure(mesh.volumes / mesh.volumes.sum())


def dirac(mesh, k):
    m = np.zeros(mesh.n_cells)
    m[k] = 1.0
    return DiscreteMeasure(m)


class CellDensity:
    """Piecewise-constant density taking the value ``values[K]`` on cell K."""

    def __init__(self, mesh, values):
        self.mesh = mesh
        self.values = np.asarray(values, dtype=float)
        if mesh.dimension == 1:
            lo = np.array([c.vertices[0, 0] for c in mesh.cells])
            order = np.argsort(lo)
            self._order = order
            self._breaks = np.append(lo[order], mesh.cells[order[-1]].vertices[1, 0])

    @property
    def breaks(self):
        """Sorted cell break points (1D only)."""
        return self._breaks

    @property
    def sorted_values(self):
        """Cell values in left-to-right order (1D only)."""
        return self.values[self._order]

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.mesh.dimension == 1:
            idx = np.clip(np.searchsorted(self._breaks, x.ravel(), side="right") - 1, 0, self.mesh.n_cells - 1)
            return self.sorted_values[idx].reshape(x.shape)
        pts = x.reshape(-1, 2)
        return np.array([self.values[self.mesh.locate(p)] for p in pts])


def embed(mesh, m):
    """Q_T: the density equal to ``m(K)/|K|`` on each cell."""
    return CellDensity(mesh, as_masses(m, mesh) / mesh.volumes)


# collapsed Gauss-Legendre rule on the reference triangle (0,0),(1,0),(0,1)
_u = 0.5 * (_GL_X + 1)
_U, _V = np.meshgrid(_u, _u, indexing="ij")
_TRI_PTS = np.stack([_U.ravel(), (_V * (1 - _U)).ravel()], axis=1)
_TRI_W = (np.outer(_GL_W, _GL_W) * 0.25 * (1 - _U)).ravel()


def _gl_triangle(f, p0, p1, p2):
    J = np.stack([p1 - p0, p2 - p0], axis=1)
    area2 = abs(np.linalg.det(J))
    pts = p0 + _TRI_PTS @ J.T
    return area2 * float(np.dot(_TRI_W, f(pts)))


def _integrate_triangle(f, p0, p1, p2, tol, depth=0):
    whole = _gl_triangle(f, p0, p1, p2)
    a, b, c = (p0 + p1) / 2, (p1 + p2) / 2, (p2 + p0) / 2
    subs = [(p0, a, c), (a, p1, b), (c, b, p2), (a, b, c)]
    parts = sum(_gl_triangle(f, *t) for t in subs)
    if abs(whole - parts) <= tol or depth >= 8:
        return parts
    return sum(_integrate_triangle(f, *t, tol / 4, depth + 1) for t in subs)


def _cell_integral(f, cell, tol):
    v = cell.vertices
    if v.shape[1] == 1:
        return integrate(f, [v[0, 0], v[1, 0]], tol)
    return sum(_integrate_triangle(f, v[0], v[i], v[i + 1], tol / (len(v) - 2)) for i in range(1, len(v) - 1))


def project(mesh, mu, tol=1e-10):
    """P_T: cell masses ``m(K) = mu(K)`` of a probability measure.

    ``mu`` may be

    * an object with a ``cdf`` method (1D continuum densities; exact),
    * a :class:`CellDensity` on the same mesh (exact),
    * a sequence of atoms ``[(x, mass), ...]`` (each atom goes to the first
      cell whose closure contains it),
    * a vectorised density callable, integrated per cell by Gauss-Legendre
      quadrature with adaptive refinement to absolute tolerance ``tol``.

    The masses are renormalised to sum to one; a total mass off by more than
    1e-6 raises :class:`InvalidArgument`.
    """
    n = mesh.n_cells
    if isinstance(mu, CellDensity) and mu.mesh is mesh:
        m = mu.values * mesh.volumes
    elif hasattr(mu, "cdf") and mesh.dimension == 1:
        a = np.array([c.vertices[0, 0] for c in mesh.cells])
        b = np.array([c.vertices[1, 0] for c in mesh.cells])
        m = np.asarray(mu.cdf(b), float) - np.asarray(mu.cdf(a), float)
        lo, hi = mesh.bounding_box()
        outside = 1.0 - (float(mu.cdf(hi[0])) - float(mu.cdf(lo[0])))
        if abs(outside) > 1e-6:
            raise InvalidArgument("measure puts mass outside the mesh domain")
    elif callable(mu):
        m = np.array([_cell_integral(mu, c, tol) for c in mesh.cells])
    else:
        m = np.zeros(n)
        try:
            atoms = [(np.atleast_1d(np.asarray(x, float)), float(w)) for x, w in mu]
        except (TypeError, ValueError) as exc:
            raise InvalidArgument("unsupported measure descriptor") from exc
        for x, w in atoms:
            if w < 0:
                raise InvalidArgument("atom masses must be nonnegative")
            m[mesh.locate(x)] += w
    if np.any(m < -1e-12):
        raise InvalidArgument("measure has negative mass on some cell")
    m = np.clip(m, 0.0, None)
    total = m.sum()
    if not math.isfinite(total) or abs(total - 1.0) > 1e-6:
        raise InvalidArgument(f"measure has total mass {total!r}, expected 1")
    return DiscreteMeasure(m / total)


def project_signed(mesh, w, tol=1e-10):
    """Cell integrals ``sigma(K) = int_K w`` of a signed density.

    Uses an antiderivative ``w.integral`` when available (1D), otherwise the
    same adaptive quadrature as :func:`project`.  No normalisation.
    """
    if hasattr(w, "integral") and mesh.dimension == 1:
        a = np.array([c.vertices[0, 0] for c in mesh.cells])
        b = np.array([c.vertices[1, 0] for c in mesh.cells])
        return np.asarray(w.integral(b), float) - np.asarray(w.integral(a), float)
    return np.array([_cell_integral(w, c, tol) for c in mesh.cells])
