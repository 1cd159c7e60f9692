"""Staggered semi-implicit space-time DG solver for 2D incompressible Navier-Stokes."""

from ._core import (
    ConfigError,
    Mesh,
    MeshError,
    convergence_order,
    generate_structured_mesh,
    load_mesh,
    max_spatial_degree,
    max_temporal_degree,
    parse_config,
    reference_mass,
    run_convergence_study,
    run_taylor_green,
    taylor_green_exact,
    triangle_basis,
    write_mesh,
)

__all__ = [
    "ConfigError",
    "Mesh",
    "MeshError",
    "convergence_order",
    "generate_structured_mesh",
    "load_mesh",
    "max_spatial_degree",
    "max_temporal_degree",
    "parse_config",
    "reference_mass",
    "run_convergence_study",
    "run_taylor_green",
    "taylor_green_exact",
    "triangle_basis",
    "write_mesh",
]
