"""Finite-volume meshes: construction, validation, projection and embedding."""

from fvot.mesh.checks import (
    AdmissibilityReport,
    check_admissibility,
    check_zeta_regularity,
    gauss_tensor,
    geometry_monitors,
)
from fvot.mesh.core import Cell, Interface, Mesh
from fvot.mesh.generators import (
    build_crossed_square,
    build_interval,
    build_periodic_1d,
    build_rectangular,
    build_triangular,
)
from fvot.mesh.io import load_mesh, mesh_from_dict, mesh_to_dict, save_mesh
from fvot.mesh.measures import (
    CellDensity,
    DiscreteMeasure,
    as_masses,
    dirac,
    embed,
    project,
    project_signed,
    uniform,
)

__all__ = [
    "AdmissibilityReport",
    "Cell",
    "CellDensity",
    "DiscreteMeasure",
    "Interface",
    "Mesh",
    "as_masses",
    "build_crossed_square",
    "build_interval",
    "build_periodic_1d",
    "build_rectangular",
    "build_triangular",
    "check_admissibility",
    "check_zeta_regularity",
    "dirac",
    "embed",
    "gauss_tensor",
    "geometry_monitors",
    "load_mesh",
    "mesh_from_dict",
    "mesh_to_dict",
    "project",
    "project_signed",
    "save_mesh",
    "uniform",
]
