"""Design toolkit for spectrally pure photon-pair sources in KDP-family crystals.

The package covers the full chain from birefringent dispersion to four-fold
interference: Sellmeier evaluation for the fourteen KDP isomorphs, type-II
phase-matching and group-velocity-matching solvers, joint spectral amplitudes
with Schmidt purity, and Hong-Ou-Mandel curves between independent heralded
sources.
"""

from kdpiso.crystals import (
    CrystalDatabase,
    CrystalId,
    CrystalRecord,
    SellmeierEntry,
    default_database,
    load_database,
)
from kdpiso.phasematch import (
    GvmSolution,
    GvmType,
    SpdcConfig,
    delta_k,
    gvm_residual,
    phase_mismatch,
    pmf_gvm_map,
    ridge_angle,
    solve_angle,
    solve_gvm_degenerate,
    solve_gvm_nondegenerate,
)
from kdpiso.spectral import (
    GridSpec,
    PumpSpec,
    SchmidtResult,
    SpectralGrid,
    auto_grid,
    jsa,
    marginals,
    phase_matching_amplitude,
    pump_envelope,
    schmidt,
)
from kdpiso.hom import HomCurve, default_delays, hom_fourfold, visibility

__version__ = "0.1.0"

__all__ = [
    "CrystalDatabase",
    "CrystalId",
    "CrystalRecord",
    "SellmeierEntry",
    "default_database",
    "load_database",
    "GvmSolution",
    "GvmType",
    "SpdcConfig",
    "delta_k",
    "gvm_residual",
    "phase_mismatch",
    "pmf_gvm_map",
    "ridge_angle",
    "solve_angle",
    "solve_gvm_degenerate",
    "solve_gvm_nondegenerate",
    "GridSpec",
    "PumpSpec",
    "SchmidtResult",
    "SpectralGrid",
    "auto_grid",
    "jsa",
    "marginals",
    "phase_matching_amplitude",
    "pump_envelope",
    "schmidt",
    "HomCurve",
    "default_delays",
    "hom_fourfold",
    "visibility",
    "__version__",
]
