import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lindbraid import linalg
from lindbraid.errors import DimensionError, RangeError, SingularMatrixError
from lindbraid.model import TwoLevelParams, jump_operators, two_level_liouvillian


def random_complex(rng, shape, scale=1.0):
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


class TestKron:
    def test_identity(self):
        assert np.array_equal(linalg.kron(np.eye(2), np.eye(2)), np.eye(4))

    def test_shift_block(self):
        a = np.array([[0, 1], [0, 0]], dtype=complex)
        out = linalg.kron(a, np.eye(2))
        expect = np.zeros((4, 4))
        expect[0, 2] = expect[1, 3] = 1.0
        assert np.array_equal(out, expect)

    def test_bright_jump_block_by_index_arithmetic(self):
        # oracle: (A (x) B)[3i+j, 3k+l] = A[i,k] B[j,l] evaluated entrywise
        _, _, _, tm = jump_operators()
        out = linalg.kron(tm, tm)
        expect = np.zeros((9, 9), dtype=complex)
        for i in range(3):
            for j in range(3):
                for k in range(3):
                    for l in range(3):
                        expect[3 * i + j, 3 * k + l] = tm[i, k] * tm[j, l]
        assert np.array_equal(out, expect)
        # single nonzero entry: row 0 (GG), column 8 (BB)
        nz = np.argwhere(out != 0)
        assert nz.tolist() == [[0, 8]]
        assert out[0, 8] == 1.0

    def test_rejects_non_square(self):
        with pytest.raises(DimensionError):
            linalg.kron(np.ones((2, 3)), np.eye(2))

    def test_mixed_product_property(self, rng):
        for _ in range(5):
            a, b, c, d = (random_complex(rng, (3, 3)) for _ in range(4))
            lhs = linalg.kron(a, b) @ linalg.kron(c, d)
            rhs = linalg.kron(a @ c, b @ d)
            assert np.allclose(lhs, rhs, atol=1e-12)


class TestEig:
    def test_diagonal(self):
        spec = linalg.eig_full(np.diag([-1.0, -2.0 + 3.0j]))
        assert np.allclose(spec.values, [-2.0 + 3.0j, -1.0])
        assert not spec.is_defective()

    def test_jordan_block_is_defective(self):
        spec = linalg.eig_full(np.array([[0.0, 1.0], [0.0, 0.0]]))
        assert np.allclose(spec.values, [0.0, 0.0], atol=1e-8)
        assert spec.is_defective()

    def test_two_level_generator_has_minus_half_gamma(self):
        q = TwoLevelParams(omega=1.0, gamma=1.3, r=0.7, k=0.9)
        spec = linalg.eig_full(two_level_liouvillian(q))
        assert min(abs(spec.values + q.gamma / 2)) < 1e-12

    def test_trace_equals_eigenvalue_sum(self, rng):
        for n in (2, 5, 9):
            a = random_complex(rng, (n, n))
            spec = linalg.eig_full(a)
            assert abs(spec.values.sum() - np.trace(a)) < 1e-9 * max(
                1.0, abs(np.trace(a))
            )

    def test_eigenpair_residuals_and_biorthogonality(self, rng):
        a = random_complex(rng, (9, 9))
        spec = linalg.eig_full(a)
        assert not spec.is_defective()
        norm_a = np.linalg.norm(a, 2)
        for i in range(9):
            resid = np.linalg.norm(a @ spec.right[:, i] - spec.values[i] * spec.right[:, i])
            assert resid <= 1e-8 * norm_a
        assert np.allclose(spec.left @ spec.right, np.eye(9), atol=1e-8)

    def test_deterministic_ordering(self, rng):
        a = random_complex(rng, (6, 6))
        v1 = linalg.eig_full(a).values
        v2 = linalg.eig_full(a.copy()).values
        assert np.array_equal(v1, v2)
        assert np.all(np.diff(v1.real) >= -1e-15)


class TestExpm:
    def test_zero_time(self, rng):
        a = random_complex(rng, (4, 4))
        v = random_complex(rng, 4)
        assert np.array_equal(linalg.expm_apply(a, 0.0, v), v)

    def test_scalar(self):
        out = linalg.expm_apply(np.array([[-1.0]]), 1.0, np.array([1.0]))
        assert abs(out[0] - np.exp(-1)) < 1e-14

    def test_against_taylor_series_oracle(self, rng):
        # independent oracle: truncated series sum_0^40 (a t)^n / n! applied to v
        a = random_complex(rng, (9, 9), scale=0.2)
        a *= 1.0 / max(1.0, np.linalg.norm(a, 2))
        t = 2.0
        v = random_complex(rng, 9)
        term = v.copy()
        acc = v.copy()
        for n in range(1, 41):
            term = (a @ term) * (t / n)
            acc = acc + term
        out = linalg.expm_apply(a, t, v)
        assert np.linalg.norm(out - acc) <= 1e-9 * np.linalg.norm(acc)

    def test_works_at_defective_matrix(self):
        jordan = np.array([[0.0, 1.0], [0.0, 0.0]])
        out = linalg.expm_apply(jordan, 3.0, np.array([0.0, 1.0]))
        assert np.allclose(out, [3.0, 1.0], atol=1e-14)

    def test_semigroup_property(self, rng):
        a = random_complex(rng, (5, 5), scale=0.5)
        v = random_complex(rng, 5)
        lhs = linalg.expm_apply(a, 1.7, v)
        rhs = linalg.expm_apply(a, 0.9, linalg.expm_apply(a, 0.8, v))
        assert np.linalg.norm(lhs - rhs) <= 1e-8 * np.linalg.norm(lhs)

    def test_range_guards(self, rng):
        a = random_complex(rng, (3, 3))
        with pytest.raises(RangeError):
            linalg.expm_apply(a, -1.0, np.ones(3))
        with pytest.raises(RangeError):
            linalg.expm_apply(1e6 * np.eye(3), 1.0, np.ones(3))

    def test_multi_matches_single(self, rng):
        a = random_complex(rng, (4, 4), scale=0.3)
        v = random_complex(rng, 4)
        times = np.array([0.0, 0.5, 0.5, 2.0])
        multi = linalg.expm_multi(a, times, v)
        for t, row in zip(times, multi):
            assert np.allclose(row, linalg.expm_apply(a, t, v), atol=1e-11)


class TestSolve:
    def test_identity(self, rng):
        b = random_complex(rng, (4, 2))
        assert np.allclose(linalg.solve(np.eye(4), b), b)

    def test_scalar(self):
        assert np.allclose(linalg.solve(np.array([[2.0]]), np.array([[4.0]])), [[2.0]])

    def test_multiply_back_oracle(self, rng):
        a = random_complex(rng, (5, 5)) + 5 * np.eye(5)
        b = random_complex(rng, (5, 3))
        x = linalg.solve(a, b)
        assert np.linalg.norm(a @ x - b) <= 1e-10 * np.linalg.norm(b)

    def test_singular_raises_with_condition(self):
        a = np.ones((3, 3), dtype=complex)
        with pytest.raises(SingularMatrixError) as err:
            linalg.solve(a, np.eye(3))
        assert err.value.rcond is not None and err.value.rcond < 1e-12


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=2, max_value=6), st.integers(min_value=0, max_value=2**32 - 1))
def test_eig_trace_property(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    spec = linalg.eig_full(a)
    assert abs(spec.values.sum() - np.trace(a)) <= 1e-9 * max(1.0, abs(np.trace(a)))
