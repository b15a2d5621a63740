"""Cells, interfaces and the immutable :class:`Mesh` container."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from fvot.errors import InvalidArgument, InvalidMesh

VERTEX_TOL = 1e-9


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


def _next(a):
    """``a`` shifted so that row ``i`` holds ``a[i + 1]`` (cyclically)."""
    return np.concatenate((a[1:], a[:1]))


def polygon_area(vertices):
    """Signed shoelace area of a polygon given as an ``(k, 2)`` array."""
    x, y = vertices[:, 0], vertices[:, 1]
    return 0.5 * float(np.dot(x, _next(y)) - np.dot(_next(x), y))


@dataclass(frozen=True)
class Cell:
    """A convex cell with its anchor point ``x_K``.

    In 1D ``vertices`` is ``[[a], [b]]`` with ``a < b``; in 2D it is the
    counter-clockwise vertex list of a convex polygon.
    """

    id: int
    vertices: np.ndarray
    anchor: np.ndarray
    volume: float

    @cached_property
    def diameter(self) -> float:
        v = self.vertices
        diff = v[:, None, :] - v[None, :, :]
        return float(np.sqrt((diff**2).sum(-1)).max())

    @cached_property
    def _facets(self):
        v = self.vertices
        if v.shape[1] == 1:
            return ((v[:1], np.array([-1.0]), 1.0), (v[1:], np.array([1.0]), 1.0))
        q = _next(v)
        t = q - v
        lengths = np.hypot(t[:, 0], t[:, 1])
        normals = np.stack([t[:, 1], -t[:, 0]], axis=1) / lengths[:, None]
        return tuple((np.array([v[i], q[i]]), normals[i], float(lengths[i])) for i in range(len(v)))

    def facets(self):
        """Yield ``(points, outward_normal, measure)`` for each facet."""
        return iter(self._facets)

    def contains(self, x, tol=1e-12) -> bool:
        """Closed-cell membership with absolute tolerance ``tol``."""
        x = np.asarray(x, dtype=float)
        v = self.vertices
        if v.shape[1] == 1:
            return v[0, 0] - tol <= x[0] <= v[1, 0] + tol
        v0 = np.array([f[0][0] for f in self._facets])
        n = np.array([f[1] for f in self._facets])
        return bool(np.all(np.einsum("ij,ij->i", x - v0, n) <= tol))

    def inner_radius(self) -> float:
        """Radius of the largest ball around the anchor contained in the cell."""
        return min(float(np.dot(pts[0] - self.anchor, n)) for pts, n, _ in self.facets())


@dataclass(frozen=True)
class Interface:
    """The shared facet ``(K|L)`` between neighbouring cells ``K < L``.

    ``normal`` is the unit normal pointing out of ``K``; ``facet`` holds the
    facet end points (a single point in 1D).
    """

    cells: tuple
    measure: float
    normal: np.ndarray
    distance: float
    facet: np.ndarray

    @property
    def transmission(self) -> float:
        return self.measure / self.distance


class Mesh:
    """Immutable admissible-mesh candidate on a convex domain.

    Construction validates the partition, anchor placement and distinctness,
    and derives interfaces from shared facets.  Orthogonality of the anchor
    segments is *not* enforced here; see
    :func:`fvot.mesh.checks.check_admissibility`.

    Parameters
    ----------
    dimension : int
        1 or 2.
    vertices : sequence
        Per-cell vertex lists; ``[a, b]`` in 1D.
    anchors : array_like
        Per-cell anchor points, shape ``(n, d)`` (or ``(n,)`` in 1D).
    domain_volume : float, optional
        ``|Omega|``; defaults to the sum of cell volumes.
    interfaces : sequence, optional
        Declared ``(i, j, measure)`` triples, cross-checked against the
        derived interfaces.
    """

    def __init__(self, dimension, vertices, anchors, domain_volume=None, interfaces=None):
        if dimension not in (1, 2):
            raise InvalidMesh(f"dimension must be 1 or 2, got {dimension}")
        self.dimension = int(dimension)
        anchors = np.asarray(anchors, dtype=float).reshape(len(vertices), self.dimension)
        if len(vertices) == 0:
            raise InvalidMesh("mesh has no cells")

        cells = []
        for k, (verts, x) in enumerate(zip(vertices, anchors)):
            cells.append(self._make_cell(k, verts, x))
        self.cells = tuple(cells)

        volumes = np.array([c.volume for c in cells])
        total = float(volumes.sum())
        if domain_volume is None:
            domain_volume = total
        domain_volume = float(domain_volume)
        if abs(total - domain_volume) > 1e-9 * domain_volume:
            raise InvalidMesh(
                f"cell volumes sum to {total!r}, domain volume is {domain_volume!r}"
            )
        self.domain_volume = domain_volume

        scale = max(c.diameter for c in cells)
        pairs = cKDTree(anchors).query_pairs(1e-12 * max(scale, 1.0))
        if pairs:
            i, j = sorted(next(iter(pairs)))
            raise InvalidMesh(f"cells {i} and {j} have coincident anchors")

        if self.dimension == 1:
            ifaces, boundary = self._interfaces_1d()
        else:
            ifaces, boundary = self._interfaces_2d()
        self.interfaces = tuple(ifaces)
        self._boundary_facets = boundary
        if interfaces is not None:
            self._cross_check(interfaces)

        self.volumes = _frozen(volumes)
        self.anchors = _frozen(anchors)
        self.diameters = _frozen([c.diameter for c in cells])
        self.mesh_size = float(self.diameters.max())
        E = len(ifaces)
        self.edges = _frozen([f.cells for f in ifaces] if E else np.zeros((0, 2)), dtype=int).reshape(E, 2)
        self.measures = _frozen([f.measure for f in ifaces])
        self.distances = _frozen([f.distance for f in ifaces])
        self.normals = _frozen([f.normal for f in ifaces] if E else np.zeros((0, self.dimension))).reshape(
            E, self.dimension
        )
        self.transmissions = _frozen(self.measures / self.distances if E else [])

    # -- construction helpers -------------------------------------------------

    def _make_cell(self, k, verts, anchor):
        verts = np.array(verts, dtype=float)
        if self.dimension == 1:
            verts = verts.reshape(2, 1)
            a, b = verts[:, 0]
            if not b > a:
                raise InvalidMesh(f"cell {k}: interval [{a}, {b}] is empty")
            volume = float(b - a)
        else:
            if verts.ndim != 2 or verts.shape[1] != 2 or len(verts) < 3:
                raise InvalidMesh(f"cell {k}: expected at least 3 planar vertices")
            area = polygon_area(verts)
            if area < 0:
                verts = verts[::-1].copy()
                area = -area
            if area <= 0:
                raise InvalidMesh(f"cell {k}: degenerate polygon")
            e1 = _next(verts) - verts
            e2 = _next(e1)
            cross = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
            lengths = np.hypot(e1[:, 0], e1[:, 1])
            if np.any(lengths <= VERTEX_TOL) or np.any(
                cross < -VERTEX_TOL * lengths * _next(lengths)
            ):
                raise InvalidMesh(f"cell {k}: polygon is not convex")
            volume = area
        verts.setflags(write=False)
        anchor = np.array(anchor, dtype=float)
        anchor.setflags(write=False)
        cell = Cell(k, verts, anchor, volume)
        if not cell.contains(anchor, tol=1e-12 * max(cell.diameter, 1.0)):
            raise InvalidMesh(f"cell {k}: anchor {anchor.tolist()} lies outside the cell")
        return cell

    def _interfaces_1d(self):
        order = sorted(range(len(self.cells)), key=lambda k: self.cells[k].vertices[0, 0])
        ifaces = []
        boundary = {k: [] for k in range(len(self.cells))}
        first, last = self.cells[order[0]], self.cells[order[-1]]
        boundary[first.id].append((first.vertices[:1], np.array([-1.0]), 1.0))
        boundary[last.id].append((last.vertices[1:], np.array([1.0]), 1.0))
        for k, l in zip(order, order[1:]):
            K, L = self.cells[k], self.cells[l]
            b, a = K.vertices[1, 0], L.vertices[0, 0]
            if abs(b - a) > VERTEX_TOL:
                kind = "overlap" if a < b else "gap"
                raise InvalidMesh(f"cells {k} and {l}: {kind} between {b} and {a}")
            d = float(abs(L.anchor[0] - K.anchor[0]))
            i, j = (k, l) if k < l else (l, k)
            normal = np.array([1.0 if i == k else -1.0])
            ifaces.append(Interface((i, j), 1.0, normal, d, np.array([[0.5 * (a + b)]])))
        ifaces.sort(key=lambda f: f.cells)
        return ifaces, boundary

    def _interfaces_2d(self):
        all_verts = np.concatenate([c.vertices for c in self.cells])
        # cluster coincident vertices within VERTEX_TOL
        parent = np.arange(len(all_verts))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for a, b in cKDTree(all_verts).query_pairs(VERTEX_TOL):
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
        vid = np.array([find(a) for a in range(len(all_verts))])

        offsets = np.concatenate([[0], np.cumsum([len(c.vertices) for c in self.cells])])
        facet_owners = {}
        for k, c in enumerate(self.cells):
            ids = vid[offsets[k] : offsets[k + 1]]
            for s in range(len(ids)):
                key = frozenset((ids[s], ids[(s + 1) % len(ids)]))
                facet_owners.setdefault(key, []).append((k, s))

        ifaces = []
        boundary = {k: [] for k in range(len(self.cells))}
        for key, owners in facet_owners.items():
            if len(owners) > 2:
                cells = sorted(o[0] for o in owners)
                raise InvalidMesh(f"facet shared by more than two cells: {cells}")
            k, s = owners[0]
            facet = list(self.cells[k].facets())[s]
            if len(owners) == 1:
                boundary[k].append(facet)
                continue
            (k, s), (l, _) = sorted(owners)
            pts, normal, length = list(self.cells[k].facets())[s]
            if length <= VERTEX_TOL:
                raise InvalidMesh(f"interface ({k}|{l}) has zero measure")
            d = float(np.linalg.norm(self.cells[l].anchor - self.cells[k].anchor))
            ifaces.append(Interface((k, l), length, normal, d, pts))
        ifaces.sort(key=lambda f: f.cells)
        return ifaces, boundary

    def _cross_check(self, declared):
        derived = {f.cells: f.measure for f in self.interfaces}
        seen = set()
        for entry in declared:
            i, j, measure = entry
            key = (min(i, j), max(i, j))
            if key not in derived:
                raise InvalidMesh(f"interface {list(key)}: cells are not nearest neighbours")
            if abs(derived[key] - measure) > 1e-9 * max(derived[key], 1.0):
                raise InvalidMesh(
                    f"interface {list(key)}: declared measure {measure!r} != derived {derived[key]!r}"
                )
            seen.add(key)
        missing = set(derived) - seen
        if missing:
            raise InvalidMesh(f"interface {list(min(missing))} missing from declared list")

    # -- derived data -----------------------------------------------------------

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def n_edges(self) -> int:
        return len(self.interfaces)

    def boundary_facets(self, k):
        """Facets of cell ``k`` on the domain boundary."""
        return list(self._boundary_facets[k])

    @cached_property
    def interior(self) -> np.ndarray:
        """Boolean mask of cells without boundary facets."""
        mask = np.array([not self._boundary_facets[k] for k in range(self.n_cells)])
        mask.setflags(write=False)
        return mask

    @cached_property
    def incidence(self):
        """Sparse ``(n_cells, n_edges)`` matrix with +1 at ``K`` and -1 at ``L``."""
        E = self.n_edges
        rows = np.concatenate([self.edges[:, 0], self.edges[:, 1]])
        cols = np.concatenate([np.arange(E), np.arange(E)])
        vals = np.concatenate([np.ones(E), -np.ones(E)])
        return coo_matrix((vals, (rows, cols)), shape=(self.n_cells, E)).tocsr()

    def neighbours(self, k):
        """Edge indices incident to cell ``k``."""
        return np.flatnonzero((self.edges[:, 0] == k) | (self.edges[:, 1] == k))

    def components(self, edge_mask=None):
        """Connected components of the cell graph restricted to ``edge_mask``."""
        e = self.edges if edge_mask is None else self.edges[np.asarray(edge_mask, bool)]
        g = coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(self.n_cells,) * 2)
        return connected_components(g, directed=False)

    def locate(self, x):
        """Index of the first cell whose closure contains ``x``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.shape != (self.dimension,):
            raise InvalidArgument(f"point {x.tolist()} has wrong dimension")
        for c in self.cells:
            if c.contains(x, tol=1e-12):
                return c.id
        raise InvalidArgument(f"point {x.tolist()} lies outside the domain")

    def bounding_box(self):
        v = np.concatenate([c.vertices for c in self.cells])
        return v.min(axis=0), v.max(axis=0)

    def __repr__(self):
        return (
            f"Mesh(dimension={self.dimension}, n_cells={self.n_cells}, "
            f"n_edges={self.n_edges}, mesh_size={self.mesh_size:.6g})"
        )
