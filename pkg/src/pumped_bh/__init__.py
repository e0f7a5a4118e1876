"""Steady states, excitation spectra and phase diagrams of the incoherently
pumped dissipative Bose-Hubbard lattice.

The single-cavity problem is solved with a truncated hierarchy of photon
correlation functions; the lattice problem dresses the single-cavity retarded
Green's function with the hopping dispersion through a Dyson equation.  A
Fock-space Lindblad solver provides an independent reference.
"""

from .errors import (
    ConfigError,
    DimensionError,
    DomainError,
    EigenSolverError,
    PumpedBHError,
    SingularChainError,
    UnboundedOccupationError,
)
from .params import COORDINATION, ModelParams, check_order
from .hierarchy import (
    GreenSystem,
    MomentSystem,
    build_green_system,
    build_moment_system,
    coefficients,
)
from .steady import (
    MomentSet,
    MomentTrajectory,
    Observables,
    evolve_moments,
    observables,
    solve_steady_moments,
)
from .spectra import (
    PoleSet,
    SingleCavityPhase,
    classify_single_cavity,
    critical_interaction,
    find_poles,
    single_cavity_phase_diagram,
)
from .lattice import (
    BZPoint,
    DressedPoleSet,
    LatticePhase,
    SelfEnergy,
    classify_lattice,
    dispersion,
    dispersion_curve,
    dressed_poles,
    find_tip,
    lattice_phase_diagram,
)
from .meanfield import (
    MeanFieldState,
    mf_keldysh_homogeneous,
    mf_lattice,
    mf_single_cavity,
)
from .sweep import Axis, BoundaryPoint, PhaseDiagram

__version__ = "0.1.0"
