"""Regularized transformation-optics cloaks: construction, modal scattering and rate checks."""

__version__ = "0.1.0"

from .acoustic import (
    FarField,
    ScatteringSolution,
    far_field,
    solve_layered,
    solve_radial_anisotropic,
    solve_sound_hard,
    solve_with_core_source,
)
from .em import EmScatteringSolution, em_far_field, mie_layered_sphere
from .materials import (
    EmLayer,
    GeneralLossyParams,
    Layer,
    LayeredConfig,
    RadialProfile,
    build_em_virtual,
    build_physical_fullcloak,
    build_shrinking_obstacle_coat,
    build_virtual_fullcloak,
    electrostatic_cloak_tensor,
)
from .transform import EmMaterial, MaterialTensor, RadialBlowupMap

__all__ = [
    "EmLayer", "EmMaterial", "EmScatteringSolution", "FarField", "GeneralLossyParams", "Layer",
    "LayeredConfig", "MaterialTensor", "RadialBlowupMap", "RadialProfile", "ScatteringSolution",
    "build_em_virtual", "build_physical_fullcloak", "build_shrinking_obstacle_coat",
    "build_virtual_fullcloak", "electrostatic_cloak_tensor", "em_far_field", "far_field",
    "mie_layered_sphere", "solve_layered", "solve_radial_anisotropic", "solve_sound_hard",
    "solve_with_core_source",
]
