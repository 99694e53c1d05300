"""Adiabatic elimination of the fast (bright) sector.

The bright state decays orders of magnitude faster than anything in the
ground/dark sector, so the five superoperator coordinates touching B can be
slaved to the four slow ones (the populations of G and D and their mutual
coherences).  Setting the fast block's time derivative to zero turns the
9x9 generator

    [ S  C_up ]          into the 4x4 effective generator
    [ C_lo  F ]          S - C_up F^{-1} C_lo.

The paper-style notation writes the lower-left block as the transpose of the
upper-right one; generically it is not, so both blocks are stored and used
independently.  The same one-step formula applied to -i H_eff eliminates the
bright row/column at the Schroedinger level, giving the effective
non-Hermitian two-level Hamiltonian of the ground/dark pair.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, EliminationError, SingularMatrixError
from .linalg import solve

#: slow superoperator coordinates: rho_GG, rho_GD, rho_DG, rho_DD
SLOW_INDICES = (0, 1, 3, 4)
#: fast coordinates: everything touching the bright state
FAST_INDICES = (2, 5, 6, 7, 8)


@dataclass(frozen=True)
class BlockPartition:
    """Generator blocks after the slow/fast permutation."""

    slow_indices: tuple
    fast_indices: tuple
    s_block: np.ndarray
    c_upper: np.ndarray
    c_lower: np.ndarray
    f_block: np.ndarray

    def reassemble(self) -> np.ndarray:
        """Undo the permutation; exact round trip of the original matrix."""
        n = len(self.slow_indices) + len(self.fast_indices)
        out = np.zeros((n, n), dtype=complex)
        si = list(self.slow_indices)
        fi = list(self.fast_indices)
        out[np.ix_(si, si)] = self.s_block
        out[np.ix_(si, fi)] = self.c_upper
        out[np.ix_(fi, si)] = self.c_lower
        out[np.ix_(fi, fi)] = self.f_block
        return out


def partition(gen, slow_indices=SLOW_INDICES, fast_indices=FAST_INDICES) -> BlockPartition:
    """Split a generator into slow/fast blocks.

    Defaults to the three-level convention above; any disjoint index split
    covering all coordinates is accepted for reuse on other systems.
    """
    gen = np.asarray(gen, dtype=complex)
    n = gen.shape[0]
    si, fi = tuple(slow_indices), tuple(fast_indices)
    if sorted(si + fi) != list(range(n)):
        raise DimensionError("slow and fast indices must partition the coordinates")
    return BlockPartition(
        slow_indices=si,
        fast_indices=fi,
        s_block=gen[np.ix_(si, si)].copy(),
        c_upper=gen[np.ix_(si, fi)].copy(),
        c_lower=gen[np.ix_(fi, si)].copy(),
        f_block=gen[np.ix_(fi, fi)].copy(),
    )


def eliminate(gen, slow_indices=SLOW_INDICES, fast_indices=FAST_INDICES) -> np.ndarray:
    """Effective slow-sector generator S - C_up F^{-1} C_lo.

    Raises:
        EliminationError: if the fast block is numerically singular, i.e.
            the time-scale separation assumption has broken down.
    """
    blocks = partition(gen, slow_indices, fast_indices)
    try:
        correction = blocks.c_upper @ solve(blocks.f_block, blocks.c_lower)
    except SingularMatrixError as exc:
        raise EliminationError(
            f"fast block numerically singular ({exc}); no time-scale separation"
        ) from exc
    return blocks.s_block - correction


def eliminate_hamiltonian(h) -> np.ndarray:
    """Eliminate the bright level from a 3x3 non-Hermitian Hamiltonian.

    Applies the slow/fast block formula to -i h (so the elimination happens
    at the generator level) and maps back, returning the effective 2x2
    Hamiltonian on the ground/dark pair.
    """
    h = np.asarray(h, dtype=complex)
    if h.shape != (3, 3):
        raise DimensionError(f"expected a 3x3 Hamiltonian, got {h.shape}")
    gen = -1j * h
    reduced = eliminate(gen, slow_indices=(0, 1), fast_indices=(2,))
    return 1j * reduced
