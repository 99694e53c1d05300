"""Counting-field spectra, eigenvalue braids and hidden exceptional points
of a monitored three-level system, with full-counting-statistics observables,
quantum-jump Monte Carlo sampling and eigenvalue retrieval from click
histograms."""

from .model import (
    ModelParams,
    TwoLevelParams,
    TwoQubitParams,
    h_eff,
    h_int,
    jump_operators,
    lindbladian,
    state_density,
    two_level_liouvillian,
    two_qubit_h0,
)
from .linalg import Spectrum, eig_full, expm_apply, kron, solve
from .braid import BandSet, BraidClassification, classify, sweep, words_equivalent
from .ep import (
    EPRecord,
    JordanChainData,
    duality_scan,
    find_ep,
    gap_objective,
    jordan_chain,
    puiseux_first_order,
    scan_transitions,
    two_level_exact,
)
from .fcs import GeneratingSeries, JumpHistogram, Rates, partial_sum, pk, pn, poisson_baseline, staggered
from .trajectories import ClickRecord, EnsembleHistogram, aggregate, run_ensemble, simulate
from .retrieve import RetrievedEigen, fit_leading, fit_subleading, reconstruct
from .reduce import BlockPartition, eliminate, eliminate_hamiltonian, partition

__version__ = "0.1.0"
