"""Liouvillian spectra, exceptional points, and resultant-winding topology
of a dissipatively stabilized cat qubit, with a full Fock-space oracle."""

from .params import (
    AdiabaticElimination,
    CatManifold,
    SystemParams,
    adiabatic_elimination,
    cat_norm_ratio,
    confinement_rate,
    derive_cat_manifold,
    p_combination,
)
from .logical_liouvillian import (
    ConvergenceError,
    LogicalLiouvillian,
    LogicalVector,
    NumericSpectrum,
    Spectrum,
    build_matrix,
    closed_form_eigenvalues,
    closed_form_spectrum,
    cubic_invariants,
    numeric_eigenvalues,
    numeric_spectrum,
    propagate,
    propagate_many,
    steady_state,
)
from .ep_locator import (
    Lep3Locus,
    RefinedLep3,
    lep2_zero_drive,
    lep3_locus,
    lep3_real_alpha,
    lep3_sweep,
    reference_lep3,
    refine_lep3,
)
from .resultant_topology import (
    GridSpec,
    LoopSpec,
    ResultantPair,
    WindingResult,
    resultant_components,
    resultants,
    resultants_at,
    trajectory,
    winding_number,
    zero_contours,
)
from .fock_engine import (
    DensityMatrix,
    FockOperator,
    FullLiouvillian,
    SubspaceValidation,
    annihilation,
    build_full_liouvillian,
    cat_state,
    choose_dim,
    coherent_state,
    embed_logical,
    evolve,
    fidelity,
    hermitian_eigendecomposition,
    steady_state_full,
    subspace_fidelity_scan,
)

__version__ = "0.1.0"
