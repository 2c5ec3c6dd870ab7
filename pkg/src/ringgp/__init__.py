"""Off-diagonal non-Abelian geometric phases of a four-qubit XY/DM ring."""

from .grassmann import (
    Decomposition,
    Frame,
    FramePath,
    GammaChain,
    GpResult,
    SigmaMatrix,
    gamma,
    gauge_transform,
    off_diagonal_gp,
    overlap,
    sigma,
    wz_transport,
)
from .interferometer import (
    WGenParams,
    WOperator,
    recover_gp,
    run_ancilla,
    run_direct,
    w_from_params,
)
from .linalg import RankStatus, Status, Svd, eig_hermitian, herm_fn, phi, pseudo_inverse, svd
from .ring import (
    EvolutionOperator,
    PulseSpec,
    RingCouplings,
    SectorLabel,
    compose_pulses,
    effective_hamiltonian,
    evolve,
    full_hamiltonian,
    gp_kappa1,
    gp_kappa2_composed,
    gp_kappa2_single,
    su2_target,
    sweep_area,
    t_matrix,
)

__version__ = "0.1.0"
