"""Dense complex linear algebra kernel.

Everything in this library runs on matrices of dimension <= 16 (the largest
operator is the 9x9 vectorized generator), so robustness of the returned
quantities matters far more than speed.  The heavy lifting is delegated to
LAPACK through numpy/scipy:

* eigendecomposition: Hessenberg reduction + implicitly shifted QR (zgeev),
  wrapped so that left and right eigenvectors come back biorthonormalized
  and in a deterministic order;
* matrix exponential: scaling-and-squaring with a Pade approximant
  (scipy.linalg.expm), which stays accurate at defective matrices, i.e. the
  propagator never requires diagonalizability;
* linear solves: LU with a reciprocal-condition guard.

The defectiveness diagnostic ``defect_score`` is the condition number of the
right-eigenvector matrix.  Healthy spectra sit at O(1..1e3); at an
exceptional point the eigenvector matrix degenerates and the score diverges.
``DEFECT_THRESHOLD`` (1e6, i.e. reciprocal condition 1e-6) separates the two
regimes; biorthogonality of the returned left/right pairs is only guaranteed
below it.
"""

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionError, RangeError, SingularMatrixError

#: condition number of the eigenvector matrix above which a matrix is
#: treated as defective (reciprocal condition below 1e-6)
DEFECT_THRESHOLD = 1e6

#: ||a*t|| cap for expm_apply; scaling-and-squaring overflows far beyond this
_EXPM_NORM_CAP = 1e4


@dataclass(frozen=True)
class Spectrum:
    """Full eigendecomposition of one complex matrix.

    Attributes:
        values: eigenvalues, sorted by (Re ascending, Im ascending).
        right: matrix whose columns are right eigenvectors (unit norm).
        left: matrix whose rows are left eigenvectors, scaled so that
            ``left @ right == I`` whenever ``defect_score`` is healthy.
        defect_score: condition number of ``right``; values above
            :data:`DEFECT_THRESHOLD` signal eigenvector coalescence.
    """

    values: np.ndarray
    right: np.ndarray
    left: np.ndarray
    defect_score: float

    @property
    def dim(self) -> int:
        return len(self.values)

    def is_defective(self) -> bool:
        return self.defect_score > DEFECT_THRESHOLD


def _as_square(a) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise RangeError("matrix contains non-finite entries")
    return a


def kron(a, b) -> np.ndarray:
    """Kronecker product of two square complex matrices."""
    return np.kron(_as_square(a), _as_square(b))


def eig_full(a) -> Spectrum:
    """Eigenvalues with biorthonormalized left and right eigenvectors.

    Eigenvalues are ordered by (Re asc, Im asc) so repeated runs are
    bit-reproducible.  Left eigenvectors are returned as rows and rescaled
    against their right partners; the rescaling is skipped for pairs whose
    overlap underflows, which only happens beyond the defectiveness
    threshold.
    """
    a = _as_square(a)
    w, vl, vr = scipy.linalg.eig(a, left=True, right=True)
    order = np.lexsort((w.imag, w.real))
    w = w[order]
    vr = vr[:, order]
    vl = vl[:, order]

    # zgeev returns vl with vl^H a = w vl^H; store left vectors as rows
    left = vl.conj().T
    overlaps = np.einsum("ij,ji->i", left, vr)
    safe = np.abs(overlaps) > 1e-300
    left[safe] = left[safe] / overlaps[safe, None]

    sv = np.linalg.svd(vr, compute_uv=False)
    defect = float(sv[0] / sv[-1]) if sv[-1] > 0 else np.inf
    return Spectrum(values=w, right=vr, left=left, defect_score=defect)


def expm_apply(a, t: float, v) -> np.ndarray:
    """Return ``exp(a*t) @ v`` without assuming ``a`` is diagonalizable.

    Args:
        a: square generator.
        t: evolution time, t >= 0.
        v: vector (or matrix of stacked column vectors).
    """
    a = _as_square(a)
    if t < 0:
        raise RangeError(f"negative evolution time t={t}")
    v = np.asarray(v, dtype=complex)
    if v.shape[0] != a.shape[0]:
        raise DimensionError(
            f"vector length {v.shape[0]} does not match matrix dimension {a.shape[0]}"
        )
    if t == 0.0:
        return v.copy()
    scaled_norm = np.linalg.norm(a, 2) * t
    if scaled_norm > _EXPM_NORM_CAP:
        raise RangeError(f"||a*t|| = {scaled_norm:.3g} exceeds supported range")
    return scipy.linalg.expm(a * t) @ v


def expm_multi(a, times, v) -> np.ndarray:
    """Evaluate ``exp(a*t) @ v`` on an ascending time grid.

    Propagates step by step, one Pade exponential per grid interval, which is
    exact for a constant generator and far cheaper than independent
    exponentials on dense grids.  Returns an array of shape (len(times), n).
    """
    a = _as_square(a)
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or len(times) == 0:
        raise DimensionError("times must be a non-empty 1-d grid")
    if times[0] < 0 or np.any(np.diff(times) < 0):
        raise RangeError("times must be ascending and nonnegative")
    out = np.empty((len(times), a.shape[0]), dtype=complex)
    cur = np.asarray(v, dtype=complex)
    prev_t = 0.0
    prev_dt = None
    step = None
    for i, t in enumerate(times):
        dt = t - prev_t
        if dt > 0:
            if prev_dt is None or abs(dt - prev_dt) > 1e-15 * max(dt, prev_dt):
                step = scipy.linalg.expm(a * dt)
                prev_dt = dt
            cur = step @ cur
        out[i] = cur
        prev_t = t
    return out


def solve(a, b) -> np.ndarray:
    """Solve ``a @ x = b`` with a conditioning guard.

    Raises:
        SingularMatrixError: if the 1-norm reciprocal condition estimate of
            ``a`` falls below 1e-12; the estimate is attached to the error.
    """
    a = _as_square(a)
    b = np.asarray(b, dtype=complex)
    with warnings.catch_warnings():
        # exact singularity is diagnosed below; the LAPACK warning is noise
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(a)
    anorm = np.linalg.norm(a, 1)
    diag = np.abs(np.diag(lu))
    if np.any(diag == 0.0):
        raise SingularMatrixError("matrix is exactly singular", rcond=0.0)
    # cheap reciprocal-condition estimate from the LU factors
    unorm = np.linalg.norm(scipy.linalg.lu_solve((lu, piv), np.eye(a.shape[0])), 1)
    rcond = 1.0 / (anorm * unorm) if anorm * unorm > 0 else 0.0
    if rcond < 1e-12:
        raise SingularMatrixError(
            f"matrix numerically singular (rcond ~ {rcond:.2e})", rcond=rcond
        )
    return scipy.linalg.lu_solve((lu, piv), b)
