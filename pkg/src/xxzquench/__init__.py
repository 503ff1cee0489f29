"""Quench-generated entanglement between the end spins of finite XXZ chains.

The package simulates the protocol end to end: a chain prepared in the
(possibly ideal) antiferromagnetic ground mixture is quenched to a lower
anisotropy, the reduced state of the two end spins is tracked in time,
its fully entangled fraction is maximized over the first revival, and
the resulting pair states are fed through recurrence purification.
"""

__version__ = "0.1.0"

from .entangle import (
    FefResult,
    PowerLawFit,
    TmaxResult,
    find_tmax,
    fit_power_law,
    fully_entangled_fraction,
    negativity,
    resolve_engine,
)
from .errors import (
    ConvergenceError,
    NoPeakError,
    NotPurifiableError,
    NumericalFaultError,
)
from .exactdiag import (
    MixedState,
    PureComponent,
    SectorBasis,
    SectorHamiltonian,
    build_sector_hamiltonian,
    evolve,
    ground_mixture,
    neel_mixture,
    sector_basis,
    two_site_matrix,
    two_spin_rdm,
)
from .freefermion import (
    EndSpinState,
    Propagator,
    SecondMoments,
    end_spin_series,
    end_spin_state,
    propagator,
    second_moments,
)
from .model import (
    ChainSpec,
    CouplingRealization,
    INFINITE_ANISOTROPY,
    NeelOrder,
    NeelState,
    neel_state,
    realize_couplings,
    sub_seed,
)
from .purify import (
    BellDiagonal,
    PurificationStep,
    PurificationTrace,
    purify_until,
    recurrence_step,
    recurrence_step_dense,
)

__all__ = [
    "__version__",
    "BellDiagonal",
    "ChainSpec",
    "ConvergenceError",
    "CouplingRealization",
    "EndSpinState",
    "FefResult",
    "INFINITE_ANISOTROPY",
    "MixedState",
    "NeelOrder",
    "NeelState",
    "NoPeakError",
    "NotPurifiableError",
    "NumericalFaultError",
    "PowerLawFit",
    "Propagator",
    "PureComponent",
    "PurificationStep",
    "PurificationTrace",
    "SecondMoments",
    "SectorBasis",
    "SectorHamiltonian",
    "TmaxResult",
    "build_sector_hamiltonian",
    "end_spin_series",
    "end_spin_state",
    "evolve",
    "find_tmax",
    "fit_power_law",
    "fully_entangled_fraction",
    "ground_mixture",
    "neel_mixture",
    "neel_state",
    "negativity",
    "propagator",
    "purify_until",
    "realize_couplings",
    "recurrence_step",
    "recurrence_step_dense",
    "resolve_engine",
    "second_moments",
    "sector_basis",
    "sub_seed",
    "two_site_matrix",
    "two_spin_rdm",
]
