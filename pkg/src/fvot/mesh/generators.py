"""Mesh generators for the model families used in the experiments."""

from __future__ import annotations

import math

import numpy as np

from fvot.errors import InvalidArgument, InvalidMesh
from fvot.mesh.core import Mesh


def build_interval(breaks, anchor_fractions=None):
    """1D mesh of ``[breaks[0], breaks[-1]]`` with the given break points.

    ``anchor_fractions[k]`` places ``x_K`` at ``a + f (b - a)``; midpoints by
    default.
    """
    breaks = np.asarray(breaks, dtype=float)
    if breaks.ndim != 1 or len(breaks) < 2 or np.any(np.diff(breaks) <= 0):
        raise InvalidArgument("break points must be strictly increasing")
    n = len(breaks) - 1
    f = np.full(n, 0.5) if anchor_fractions is None else np.asarray(anchor_fractions, float)
    if f.shape != (n,) or np.any(f < 0) or np.any(f > 1):
        raise InvalidArgument("anchor fractions must lie in [0, 1], one per cell")
    a, b = breaks[:-1], breaks[1:]
    try:
        return Mesh(1, np.stack([a, b], axis=1), a + f * (b - a), domain_volume=breaks[-1] - breaks[0])
    except InvalidMesh as exc:
        raise InvalidArgument(str(exc)) from exc


def build_periodic_1d(r, N):
    """The periodic mesh of ``[0, 1]`` alternating cells of length r/N and (1-r)/N.

    Cells are ordered left to right, so even cells are small.  Anchors sit at
    the cell midpoints, which gives ``d_{k,k+1} = 1/(2N)`` throughout.
    """
    if not 0 < r < 0.5:
        raise InvalidArgument(f"r must lie in (0, 1/2), got {r}")
    if int(N) != N or N < 1:
        raise InvalidArgument(f"N must be a positive integer, got {N}")
    N = int(N)
    j = np.arange(N)
    breaks = np.empty(2 * N + 1)
    breaks[0:-1:2] = j / N
    breaks[1::2] = (j + r) / N
    breaks[-1] = 1.0
    return build_interval(breaks)


def build_rectangular(nx, ny, widths=None, heights=None, x_offsets=None, y_offsets=None):
    """Tensor-product rectangular grid with column/row-wise anchor offsets.

    Parameters
    ----------
    nx, ny : int
        Number of columns and rows.
    widths, heights : sequence of float, optional
        Column widths and row heights; uniform on the unit square by default.
    x_offsets, y_offsets : sequence of float, optional
        Anchor position inside each column/row as a fraction in ``[0, 1]``;
        ``None`` centres the anchors.  Column/row-wise offsets keep every
        anchor segment orthogonal to its interface.

    Cells are numbered row by row, ``k = j * nx + i``.
    """
    nx, ny = int(nx), int(ny)
    if nx < 1 or ny < 1:
        raise InvalidArgument("nx and ny must be positive")
    w = np.full(nx, 1.0 / nx) if widths is None else np.asarray(widths, float)
    h = np.full(ny, 1.0 / ny) if heights is None else np.asarray(heights, float)
    if w.shape != (nx,) or h.shape != (ny,) or np.any(w <= 0) or np.any(h <= 0):
        raise InvalidArgument("widths/heights must be positive with lengths nx/ny")
    fx = np.full(nx, 0.5) if x_offsets is None else np.asarray(x_offsets, float)
    fy = np.full(ny, 0.5) if y_offsets is None else np.asarray(y_offsets, float)
    if fx.shape != (nx,) or fy.shape != (ny,):
        raise InvalidArgument("offset fractions must have lengths nx/ny")
    if np.any((fx < 0) | (fx > 1)) or np.any((fy < 0) | (fy > 1)):
        raise InvalidArgument("offset fractions must lie in [0, 1]")
    xs = np.concatenate([[0.0], np.cumsum(w)])
    ys = np.concatenate([[0.0], np.cumsum(h)])
    vertices, anchors = [], []
    for j in range(ny):
        for i in range(nx):
            x0, x1, y0, y1 = xs[i], xs[i + 1], ys[j], ys[j + 1]
            vertices.append([[x0, y0], [x1, y0], [x1, y1], [x0, y1]])
            anchors.append([x0 + fx[i] * w[i], y0 + fy[j] * h[j]])
    try:
        return Mesh(2, vertices, anchors, domain_volume=xs[-1] * ys[-1])
    except InvalidMesh as exc:
        raise InvalidArgument(str(exc)) from exc


def build_crossed_square(N, r):
    """Unit square cut into N x N squares, each split by its diagonals.

    The four triangles of a square are stored as S, E, N, W (in that order,
    square index ``j * N + i``).  Each anchor lies on the axis of its square
    at distance ``r/N`` from the outer edge midpoint, so coordinate-direction
    neighbours are ``2r/N`` apart and diagonal ones ``(1/2 - r) sqrt(2)/N``.
    """
    if int(N) != N or N < 1:
        raise InvalidArgument(f"N must be a positive integer, got {N}")
    if not 0 < r < 0.5:
        raise InvalidArgument(f"r must lie in (0, 1/2), got {r}")
    N = int(N)
    s = 1.0 / N
    h = (0.5 - r) / N
    vertices, anchors = [], []
    for j in range(N):
        for i in range(N):
            x0, y0 = i * s, j * s
            c = np.array([x0 + s / 2, y0 + s / 2])
            p00, p10, p11, p01 = [x0, y0], [x0 + s, y0], [x0 + s, y0 + s], [x0, y0 + s]
            vertices += [[p00, p10, c], [p10, p11, c], [p11, p01, c], [p01, p00, c]]
            anchors += [c + [0, -h], c + [h, 0], c + [0, h], c + [-h, 0]]
    return Mesh(2, vertices, anchors, domain_volume=1.0)


def build_triangular(N):
    """Equilateral triangle of unit side cut into N^2 equilateral triangles.

    Anchors are the triangle centroids.
    """
    if int(N) != N or N < 1:
        raise InvalidArgument(f"N must be a positive integer, got {N}")
    N = int(N)
    e1 = np.array([1.0, 0.0]) / N
    e2 = np.array([0.5, math.sqrt(3) / 2]) / N

    def p(a, b):
        return a * e1 + b * e2

    vertices = []
    for b in range(N):
        for a in range(N - b):
            vertices.append([p(a, b), p(a + 1, b), p(a, b + 1)])
            if a + b <= N - 2:
                vertices.append([p(a + 1, b), p(a + 1, b + 1), p(a, b + 1)])
    anchors = [np.mean(v, axis=0) for v in vertices]
    return Mesh(2, vertices, anchors, domain_volume=math.sqrt(3) / 4)
