"""Operators of the monitored three-level system and its small companions.

The system is a V-shaped three-level atom with basis ordered ``{G, D, B}``
(ground, dark, bright).  The bright decay channel B -> G is monitored; a
counting field ``k`` multiplies that jump term by ``exp(i*k)``, and an
additional weight ``r in [0, 1]`` models a detector that registers only a
fraction of the jumps.  Both enter through the single complex jump weight
``z = r * exp(i*k)``.

Vectorization convention: density matrices are stacked row by row
(``rho[i, j] -> vec[3*i + j]``), so a superoperator term acting as
``A rho B`` becomes ``kron(A, B^T)``.  With this choice the generator reads

    L(z) = -i [ (H - i/2 G) (x) 1  -  1 (x) (H^T + i/2 G^T) ]
           + gamma_B * z * (T- (x) T-)  +  gamma_D * (S- (x) S-),

with ``G = gamma_B T+ T- + gamma_D S+ S-``, ``S+- / T+-`` the dark/bright
ladder operators, and H the Rabi drive Hamiltonian.  At ``z = 1`` this is a
trace-preserving Lindbladian; the trace functional (the vectorized identity)
is then a left null vector, which pins the convention and is asserted in the
test suite.

All rates and frequencies are dimensionless (measured against a common
reference frequency), matching the numerical defaults gamma_B = 0.5,
Omega_B = 0.1, gamma_D = 0.
"""

import cmath
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .linalg import kron

#: basis indices within {G, D, B}
G, D, B = 0, 1, 2

_I3 = np.eye(3, dtype=complex)


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters of the monitored three-level system.

    ``gamma_b``/``gamma_d`` are the bright/dark decay rates, ``omega_b`` and
    ``omega_d`` the Rabi drive amplitudes, and ``(r, k)`` the polar pieces of
    the jump weight ``z = r * exp(i*k)``.
    """

    gamma_b: float = 0.5
    gamma_d: float = 0.0
    omega_b: float = 0.1
    omega_d: float = 0.008
    r: float = 1.0
    k: float = 0.0

    def __post_init__(self):
        if not self.gamma_b > 0:
            raise ConfigError(f"gamma_b must be positive, got {self.gamma_b}")
        if self.gamma_d < 0:
            raise ConfigError(f"gamma_d must be nonnegative, got {self.gamma_d}")
        if self.omega_b < 0 or self.omega_d < 0:
            raise ConfigError("Rabi amplitudes must be nonnegative")
        if not 0.0 <= self.r <= 1.0:
            raise ConfigError(f"jump weight modulus r must lie in [0, 1], got {self.r}")
        for name in ("gamma_b", "gamma_d", "omega_b", "omega_d", "r", "k"):
            if not np.isfinite(getattr(self, name)):
                raise ConfigError(f"{name} must be finite")

    @property
    def jump_weight(self) -> complex:
        return self.r * cmath.exp(1j * self.k)

    def with_(self, **kw) -> "ModelParams":
        """Copy with selected fields replaced."""
        data = {f: getattr(self, f) for f in
                ("gamma_b", "gamma_d", "omega_b", "omega_d", "r", "k")}
        data.update(kw)
        return ModelParams(**data)


@dataclass(frozen=True)
class TwoLevelParams:
    """Driven-decaying two-level benchmark: H = omega/2 sx, dissipator sqrt(gamma) s-."""

    omega: float = 1.0
    gamma: float = 2.0
    r: float = 1.0
    k: float = 0.0

    def __post_init__(self):
        if not self.omega > 0:
            raise ConfigError(f"omega must be positive, got {self.omega}")
        if self.gamma < 0:
            raise ConfigError(f"gamma must be nonnegative, got {self.gamma}")
        if not 0.0 <= self.r <= 1.0:
            raise ConfigError(f"jump weight modulus r must lie in [0, 1], got {self.r}")

    @property
    def jump_weight(self) -> complex:
        return self.r * cmath.exp(1j * self.k)


@dataclass(frozen=True)
class TwoQubitParams:
    """Two longitudinally coupled qubits that realize the three-level system."""

    eps: float
    omega: float
    chi: float

    def __post_init__(self):
        for name in ("eps", "omega", "chi"):
            if not np.isfinite(getattr(self, name)):
                raise ConfigError(f"{name} must be finite")


def jump_operators():
    """Ladder operators (S+, S-, T+, T-) in the {G, D, B} basis.

    S+- drive G <-> D transitions, T+- drive G <-> B transitions; each is a
    3x3 matrix with a single unit entry.
    """
    sp = np.zeros((3, 3), dtype=complex)
    sp[D, G] = 1.0
    tp = np.zeros((3, 3), dtype=complex)
    tp[B, G] = 1.0
    return sp, sp.conj().T, tp, tp.conj().T


def h_int(p: ModelParams) -> np.ndarray:
    """Rabi drive Hamiltonian Omega_D Sx + Omega_B Tx (Hermitian)."""
    sp, sm, tp, tm = jump_operators()
    return p.omega_d * (sp + sm) / 2 + p.omega_b * (tp + tm) / 2


def h_eff(p: ModelParams) -> np.ndarray:
    """Non-Hermitian no-jump Hamiltonian: drive minus i/2 times the decay rates."""
    sp, sm, tp, tm = jump_operators()
    return h_int(p) - 0.5j * p.gamma_b * (tp @ tm) - 0.5j * p.gamma_d * (sp @ sm)


def lindbladian(p: ModelParams) -> np.ndarray:
    """9x9 generator with the counting field attached to the bright jump.

    Only the monitored B -> G channel carries the complex weight ``z``; dark
    decay (if any) enters with weight one.
    """
    sp, sm, tp, tm = jump_operators()
    h = h_int(p)
    decay = p.gamma_b * (tp @ tm) + p.gamma_d * (sp @ sm)
    left = h - 0.5j * decay
    right = h.T + 0.5j * decay.T
    gen = -1j * (kron(left, _I3) - kron(_I3, right))
    gen += p.gamma_b * p.jump_weight * kron(tm, tm)
    gen += p.gamma_d * kron(sm, sm)
    return gen


def two_level_liouvillian(q: TwoLevelParams) -> np.ndarray:
    """4x4 generator of the two-level benchmark with weighted jump term.

    Basis order {e, g}; density matrices vectorized row-major, jump term
    ``z * gamma * (s- (x) s-)``.
    """
    i2 = np.eye(2, dtype=complex)
    sx = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
    sm = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)
    h = 0.5 * q.omega * sx
    decay = q.gamma * np.diag([1.0, 0.0]).astype(complex)  # gamma * s+ s-
    left = h - 0.5j * decay
    right = h.T + 0.5j * decay.T
    gen = -1j * (kron(left, i2) - kron(i2, right))
    gen += q.gamma * q.jump_weight * kron(sm, sm)
    return gen


def two_qubit_h0(q: TwoQubitParams):
    """Static two-qubit Hamiltonian and its excitation energies.

    Returns ``(h0, (E_D, E_B, E_F))`` where h0 is diagonal in the product
    basis {GG= |dn dn>, D= |up dn>, B= |dn up>, F= |up up>} and the energies
    are measured from the ground state.
    """
    # first qubit (sigma) distinguishes G/D, second (tau) distinguishes G/B;
    # basis order |sigma tau> = {dn dn, up dn, dn up, up up}
    diag_sigma = np.array([-1.0, 1.0, -1.0, 1.0])
    diag_tau = np.array([-1.0, -1.0, 1.0, 1.0])
    h0 = 0.5 * np.diag(
        q.eps * diag_sigma + q.omega * diag_tau + q.chi * diag_sigma * diag_tau
    ).astype(complex)
    e_ground = h0[0, 0].real
    energies = (
        h0[1, 1].real - e_ground,  # E_D = eps - chi
        h0[2, 2].real - e_ground,  # E_B = omega - chi
        h0[3, 3].real - e_ground,  # E_F = eps + omega
    )
    return h0, energies


def state_density(label: str) -> np.ndarray:
    """Pure-state density matrix for one of the levels 'G', 'D', 'B'."""
    idx = {"G": G, "D": D, "B": B}.get(label.upper())
    if idx is None:
        raise ConfigError(f"unknown state label {label!r}; expected G, D or B")
    rho = np.zeros((3, 3), dtype=complex)
    rho[idx, idx] = 1.0
    return rho


def vectorize(rho) -> np.ndarray:
    """Row-major stacking of a density matrix into a length-9 vector."""
    rho = np.asarray(rho, dtype=complex)
    return rho.reshape(-1)


def unvectorize(vec) -> np.ndarray:
    """Inverse of :func:`vectorize`."""
    vec = np.asarray(vec, dtype=complex)
    n = int(round(np.sqrt(vec.size)))
    return vec.reshape(n, n)


def trace_of_vec(vec) -> complex:
    """Trace of a row-major vectorized square matrix."""
    vec = np.asarray(vec)
    n = int(round(np.sqrt(vec.size)))
    return complex(vec.reshape(n, n).trace())
