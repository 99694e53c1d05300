import numpy as np
import pytest

from lindbraid import model
from lindbraid.errors import ConfigError
from lindbraid.linalg import eig_full
from lindbraid.model import (
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
    vectorize,
)


def spectrum_at(p, k):
    return np.linalg.eigvals(lindbladian(p.with_(k=k)))


class TestParams:
    def test_defaults_match_reference_point(self, defaults):
        assert defaults.gamma_b == 0.5
        assert defaults.omega_b == 0.1
        assert defaults.gamma_d == 0.0

    @pytest.mark.parametrize(
        "kw",
        [dict(gamma_b=0.0), dict(gamma_b=-1.0), dict(gamma_d=-0.1),
         dict(omega_b=-0.1), dict(r=1.5), dict(r=-0.2), dict(gamma_b=np.nan)],
    )
    def test_invalid_rejected(self, kw):
        with pytest.raises(ConfigError):
            ModelParams(**kw)

    def test_jump_weight(self):
        p = ModelParams(r=0.5, k=np.pi / 2)
        assert abs(p.jump_weight - 0.5j) < 1e-15


class TestOperators:
    def test_ladder_structure(self):
        sp, sm, tp, tm = jump_operators()
        assert sp[model.D, model.G] == 1.0 and np.count_nonzero(sp) == 1
        assert tp[model.B, model.G] == 1.0 and np.count_nonzero(tp) == 1
        assert np.array_equal(sm, sp.conj().T)
        assert np.array_equal(tm, tp.conj().T)

    def test_projector_algebra(self):
        sp, sm, tp, tm = jump_operators()
        assert np.array_equal(sp @ sm + tp @ tm, np.diag([0.0, 1.0, 1.0]))

    def test_h_int_entries(self):
        p = ModelParams(omega_d=0.008)
        h = h_int(p)
        assert np.allclose(h, h.conj().T)
        assert h[model.G, model.D] == pytest.approx(0.004)
        assert h[model.G, model.B] == pytest.approx(0.05)
        assert h[model.D, model.B] == 0.0

    def test_h_int_zero_drive(self):
        assert np.count_nonzero(h_int(ModelParams(omega_d=0.0, omega_b=0.0))) == 0

    def test_h_int_eigenvalues_against_charpoly_oracle(self):
        # characteristic polynomial of the drive Hamiltonian is
        # -x^3 + x (om_d^2 + om_b^2)/4, so eigenvalues are 0 and +-R/2
        p = ModelParams(omega_d=0.037, omega_b=0.21)
        rabi = np.hypot(p.omega_d, p.omega_b)
        vals = np.sort(np.linalg.eigvalsh(h_int(p)))
        assert np.allclose(vals, [-rabi / 2, 0.0, rabi / 2], atol=1e-14)

    def test_h_eff_structure(self):
        p = ModelParams(omega_d=0.008)
        h = h_eff(p)
        assert np.allclose(np.diag(h).imag, [0.0, 0.0, -p.gamma_b / 2])
        assert np.trace(h) == pytest.approx(-0.5j * (p.gamma_b + p.gamma_d))

    def test_h_eff_dark_block_decouples_without_bright_drive(self):
        p = ModelParams(omega_b=0.0, omega_d=0.02, gamma_d=0.0)
        h = h_eff(p)
        assert np.count_nonzero(h[model.B, :2]) == 0
        assert np.count_nonzero(h[:2, model.B]) == 0
        block = h[:2, :2]
        assert np.allclose(block, block.conj().T)
        assert np.allclose(
            np.sort(np.linalg.eigvalsh(block)), [-p.omega_d / 2, p.omega_d / 2]
        )


class TestLindbladian:
    def test_trace_functional_is_left_null_at_full_weight(self, defaults):
        gen = lindbladian(defaults.with_(k=0.0, r=1.0))
        left = vectorize(np.eye(3))
        assert np.linalg.norm(left @ gen) < 1e-14

    def test_half_period_flips_jump_block(self, defaults):
        gen = lindbladian(defaults.with_(k=np.pi))
        assert gen[0, 8] == pytest.approx(-defaults.gamma_b)

    def test_zero_dark_drive_gives_double_zero(self):
        # steady state plus conserved dark population
        gen = lindbladian(ModelParams(omega_d=0.0, gamma_d=0.0, k=0.0))
        vals = np.linalg.eigvals(gen)
        assert np.sum(np.abs(vals) < 1e-12) >= 2

    @pytest.mark.parametrize("k", [0.3, 1.1, 2.9, 5.5])
    def test_conjugation_symmetry(self, defaults, k):
        p = defaults.with_(omega_d=0.009)
        a = np.sort_complex(spectrum_at(p, k))
        b = np.sort_complex(np.conj(spectrum_at(p, 2 * np.pi - k)))
        assert np.allclose(a, b, atol=1e-12)

    def test_trace_independent_of_counting_field(self, defaults):
        p = defaults.with_(omega_d=0.013)
        traces = [np.trace(lindbladian(p.with_(k=k))) for k in np.linspace(0, 2 * np.pi, 17)]
        assert np.ptp([t.real for t in traces]) < 1e-15
        assert max(abs(t.imag) for t in traces) < 1e-15

    def test_fourth_slowest_eigenvalue_is_weight_independent(self, defaults):
        # the braid-relevant statement: among the four slowest bands the
        # fourth is constant in k and the first three all move
        p = defaults.with_(omega_d=0.008)
        base = spectrum_at(p, 0.0)
        slow = base[np.argsort(-base.real)][:4]
        drift = np.zeros(4)
        for k in np.linspace(0.0, 2 * np.pi, 41):
            vals = spectrum_at(p, k)
            for j in range(4):
                drift[j] = max(drift[j], np.min(np.abs(vals - slow[j])))
        assert drift[3] < 1e-9
        assert np.all(drift[:3] > 1e-5)

    def test_steady_state_is_density_matrix(self, defaults):
        p = defaults.with_(omega_d=0.011, k=0.0, r=1.0)
        spec = eig_full(lindbladian(p))
        idx = int(np.argmax(spec.values.real))
        assert abs(spec.values[idx].real) < 1e-10
        rho = spec.right[:, idx].reshape(3, 3)
        rho = rho / np.trace(rho)
        assert np.allclose(rho, rho.conj().T, atol=1e-8)
        assert np.min(np.linalg.eigvalsh((rho + rho.conj().T) / 2)) > -1e-8

    def test_max_real_part_zero_at_full_weight(self, defaults):
        vals = spectrum_at(defaults.with_(omega_d=0.02), 0.0)
        assert abs(np.max(vals.real)) < 1e-10


class TestTwoLevel:
    def test_minus_half_gamma_for_all_weights(self):
        for k in (0.0, 1.0, np.pi):
            q = TwoLevelParams(omega=1.0, gamma=1.7, r=0.6, k=k)
            vals = np.linalg.eigvals(two_level_liouvillian(q))
            assert min(abs(vals + q.gamma / 2)) < 1e-12

    def test_triple_degeneracy_at_critical_gamma_without_jumps(self):
        # the no-jump generator at gamma = 2 omega has a triple eigenvalue -1
        # (plus the bystander -gamma/2 = -1), with a rank-3 Jordan block
        q = TwoLevelParams(omega=1.0, gamma=2.0, r=0.0, k=0.0)
        gen = two_level_liouvillian(q)
        vals = np.linalg.eigvals(gen)
        assert np.allclose(vals, -1.0, atol=2e-5)  # quadruple root splits at fp noise
        shifted = gen + np.eye(4)
        assert np.linalg.matrix_rank(shifted, tol=1e-8) == 2
        assert np.linalg.matrix_rank(shifted @ shifted, tol=1e-8) == 1
        assert np.linalg.matrix_rank(shifted @ shifted @ shifted, tol=1e-8) == 0

    def test_cubic_roots_match_spectrum(self, rng):
        # remaining three eigenvalues solve the stated cubic
        for _ in range(20):
            g = float(rng.uniform(0.2, 5.0))
            z = float(rng.uniform(0, 1)) * np.exp(1j * rng.uniform(0, 2 * np.pi))
            q = TwoLevelParams(omega=1.0, gamma=g, r=abs(z), k=float(np.angle(z)))
            vals = np.linalg.eigvals(two_level_liouvillian(q))
            vals = np.delete(vals, np.argmin(np.abs(vals + g / 2)))
            for x in 2 * vals:  # x = 2 lambda in the cubic's variable
                resid = x**3 + 3 * g * x**2 + (4 + 2 * g**2) * x + 4 * g * (1 - z)
                assert abs(resid) < 1e-9


class TestTwoQubit:
    def test_energies(self):
        _, (e_d, e_b, e_f) = two_qubit_h0(TwoQubitParams(eps=5.0, omega=4.0, chi=1.0))
        assert (e_d, e_b, e_f) == (4.0, 3.0, 9.0)

    def test_no_coupling_energies_add(self):
        _, (e_d, e_b, e_f) = two_qubit_h0(TwoQubitParams(eps=2.5, omega=1.5, chi=0.0))
        assert e_f == pytest.approx(e_d + e_b)

    def test_equal_frequencies_degenerate(self):
        _, (e_d, e_b, _) = two_qubit_h0(TwoQubitParams(eps=3.0, omega=3.0, chi=0.7))
        assert e_d == pytest.approx(e_b)

    def test_diagonal_readout_matches(self):
        h0, energies = two_qubit_h0(TwoQubitParams(eps=5.0, omega=4.0, chi=1.0))
        diag = np.sort(np.diag(h0).real)
        from_h0 = tuple(np.sort(np.diag(h0).real - h0[0, 0].real)[1:])
        assert from_h0 == energies or tuple(sorted(energies)) == from_h0


class TestStates:
    def test_presets(self):
        for label, idx in (("G", 0), ("D", 1), ("B", 2)):
            rho = state_density(label)
            assert rho[idx, idx] == 1.0 and np.trace(rho) == 1.0
        with pytest.raises(ConfigError):
            state_density("X")
