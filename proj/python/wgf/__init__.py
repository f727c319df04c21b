from ._core import (
    InvalidInput,
    SolverDiverged,
    aggregation_equilibrium_1d,
    barenblatt,
    gaussian_wasserstein,
    geodesic_1d,
    kinetic_value,
    prox_phi_point,
    run_config,
)

__all__ = [
    "InvalidInput",
    "SolverDiverged",
    "aggregation_equilibrium_1d",
    "barenblatt",
    "gaussian_wasserstein",
    "geodesic_1d",
    "kinetic_value",
    "prox_phi_point",
    "run_config",
]
