"""Mesh JSON reading and writing."""

from __future__ import annotations

import json
import numbers
from pathlib import Path

from fvot import _json
from fvot.errors import MeshParseError
from fvot.mesh.core import Mesh


def mesh_to_dict(mesh):
    cells = []
    for c in mesh.cells:
        verts = c.vertices[:, 0].tolist() if mesh.dimension == 1 else c.vertices.tolist()
        cells.append({"id": c.id, "vertices": verts, "anchor": c.anchor.tolist()})
    return {
        "dimension": mesh.dimension,
        "domain_volume": mesh.domain_volume,
        "cells": cells,
        "interfaces": [{"cells": list(f.cells), "measure": f.measure} for f in mesh.interfaces],
    }


def _number(x, locus):
    if isinstance(x, bool) or not isinstance(x, numbers.Real):
        raise MeshParseError(f"expected a number, got {x!r}", locus)
    return float(x)


def _point(x, d, locus):
    if not isinstance(x, list) or len(x) != d:
        raise MeshParseError(f"expected a list of {d} numbers", locus)
    return [_number(v, f"{locus}[{i}]") for i, v in enumerate(x)]


def mesh_from_dict(data):
    """Validate a decoded mesh document and build the :class:`Mesh`."""
    if not isinstance(data, dict):
        raise MeshParseError("top level must be an object")
    for key in ("dimension", "cells"):
        if key not in data:
            raise MeshParseError(f"missing required key {key!r}")
    d = data["dimension"]
    if d not in (1, 2) or isinstance(d, bool):
        raise MeshParseError(f"dimension must be 1 or 2, got {d!r}", "dimension")
    cells = data["cells"]
    if not isinstance(cells, list) or not cells:
        raise MeshParseError("cells must be a non-empty list", "cells")
    n = len(cells)
    vertices, anchors = [None] * n, [None] * n
    for pos, c in enumerate(cells):
        locus = f"cells[{pos}]"
        if not isinstance(c, dict):
            raise MeshParseError("cell must be an object", locus)
        for key in ("id", "vertices", "anchor"):
            if key not in c:
                raise MeshParseError(f"missing key {key!r}", locus)
        cid = c["id"]
        if not isinstance(cid, int) or isinstance(cid, bool) or not 0 <= cid < n:
            raise MeshParseError(f"id must be an integer in 0..{n - 1}", locus)
        if vertices[cid] is not None:
            raise MeshParseError(f"duplicate cell id {cid}", locus)
        v = c["vertices"]
        if d == 1:
            if not isinstance(v, list) or len(v) != 2:
                raise MeshParseError("1D vertices must be [a, b]", f"{locus}.vertices")
            vertices[cid] = [_number(x, f"{locus}.vertices") for x in v]
        else:
            if not isinstance(v, list) or len(v) < 3:
                raise MeshParseError("2D vertices must list at least 3 points", f"{locus}.vertices")
            vertices[cid] = [_point(p, 2, f"{locus}.vertices[{i}]") for i, p in enumerate(v)]
        anchors[cid] = _point(c["anchor"], d, f"{locus}.anchor")
    declared = None
    if "interfaces" in data:
        declared = []
        if not isinstance(data["interfaces"], list):
            raise MeshParseError("interfaces must be a list", "interfaces")
        for pos, f in enumerate(data["interfaces"]):
            locus = f"interfaces[{pos}]"
            if not isinstance(f, dict) or "cells" not in f or "measure" not in f:
                raise MeshParseError("interface needs 'cells' and 'measure'", locus)
            pair = f["cells"]
            if (
                not isinstance(pair, list)
                or len(pair) != 2
                or not all(isinstance(i, int) and 0 <= i < n for i in pair)
                or pair[0] == pair[1]
            ):
                raise MeshParseError("cells must be two distinct cell ids", locus)
            declared.append((pair[0], pair[1], _number(f["measure"], f"{locus}.measure")))
    volume = data.get("domain_volume")
    if volume is not None:
        volume = _number(volume, "domain_volume")
    return Mesh(d, vertices, anchors, domain_volume=volume, interfaces=declared)


def save_mesh(mesh, path):
    Path(path).write_text(_json.dumps(mesh_to_dict(mesh), indent=1) + "\n")


def load_mesh(path):
    """Read and validate a mesh file.

    Raises :class:`MeshParseError` for schema violations and
    :class:`InvalidMesh` for geometric inconsistencies.
    """
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise MeshParseError(f"not valid JSON: {exc}") from exc
    return mesh_from_dict(data)
