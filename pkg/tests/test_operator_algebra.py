import numpy as np
import pytest

from helpers import I2, SX, SY, SZ, GROUND, EXCITED, SIGMA_MINUS, random_hermitian, random_matrix, random_density
from qtur import operator_algebra as oa
from qtur import JumpModelSpec, TwoLevelParams, feedback_generator, rabi_model


class TestVectorize:
    def test_column_stacking_order(self):
        A = np.array([[1.0 + 2.0j, 3.0], [4.0, 5.0 - 1.0j]])
        v = oa.vectorize(A)
        assert np.array_equal(v, np.array([A[0, 0], A[1, 0], A[0, 1], A[1, 1]]))

    def test_identity(self):
        assert np.array_equal(oa.vectorize(I2), np.array([1, 0, 0, 1], dtype=complex))

    def test_round_trip_random_3x3(self):
        rng = np.random.default_rng(5)
        A = random_matrix(rng, 3)
        assert np.array_equal(oa.unvectorize(oa.vectorize(A)), A)

    def test_round_trip_all_dims_up_to_8(self):
        rng = np.random.default_rng(6)
        for d in range(2, 9):
            A = random_matrix(rng, d)
            assert np.array_equal(oa.unvectorize(oa.vectorize(A)), A)

    def test_unvectorize_identity(self):
        assert np.array_equal(oa.unvectorize(np.array([1, 0, 0, 1.0])), I2)

    def test_unvectorize_unit_vector_hits_e_g_entry(self):
        out = oa.unvectorize(np.array([0.0, 1.0, 0.0, 0.0]))
        expected = np.zeros((2, 2), dtype=complex)
        expected[1, 0] = 1.0
        assert np.array_equal(out, expected)

    def test_unvectorize_rejects_non_square_length(self):
        with pytest.raises(ValueError, match="square"):
            oa.unvectorize(np.array([1.0, 2.0, 3.0]))


class TestKronSandwich:
    def test_identity_pair(self):
        S = oa.kron_sandwich(I2, I2)
        assert np.array_equal(S, np.eye(4, dtype=complex))

    def test_triple_product_identity(self):
        rng = np.random.default_rng(7)
        for k in range(200):
            d = 2 if k % 2 == 0 else 3
            A, B, C = (random_matrix(rng, d) for _ in range(3))
            S = oa.kron_sandwich(A, C)
            lhs = oa.unvectorize(S @ oa.vectorize(B))
            ref = A @ B @ C
            assert np.linalg.norm(lhs - ref) <= 1e-12 * np.linalg.norm(ref)

    def test_pauli_action_on_ground(self):
        S = oa.kron_sandwich(SX, I2)
        out = S @ oa.vectorize(GROUND)
        expected = np.zeros((2, 2), dtype=complex)
        expected[1, 0] = 1.0
        assert np.allclose(oa.unvectorize(out), expected, atol=1e-15)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            oa.kron_sandwich(I2, np.eye(3))


class TestCommutatorGenerator:
    def test_pauli_algebra(self):
        S = oa.commutator_generator(SZ)
        out = oa.unvectorize(S @ oa.vectorize(SX))
        assert np.allclose(out, 2.0 * SY, atol=1e-14)

    def test_identity_hamiltonian_is_zero(self):
        assert np.allclose(oa.commutator_generator(I2), 0.0, atol=1e-15)

    def test_annihilates_trace_functional(self):
        rng = np.random.default_rng(8)
        ell = oa.trace_vector(3).conj()
        for _ in range(20):
            S = oa.commutator_generator(random_hermitian(rng, 3))
            rho = random_density(rng, 3)
            assert abs(ell @ (S @ oa.vectorize(rho))) <= 1e-10

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError, match="Hermitian"):
            oa.commutator_generator(np.array([[0.0, 1.0], [0.0, 0.0]]))


class TestDissipator:
    def test_decay_channel_on_excited(self):
        D = oa.dissipator(SIGMA_MINUS)
        out = oa.unvectorize(D @ oa.vectorize(EXCITED))
        assert np.allclose(out, GROUND - EXCITED, atol=1e-14)

    def test_identity_jump_is_zero(self):
        assert np.allclose(oa.dissipator(I2), 0.0, atol=1e-15)

    def test_traceless_output(self):
        rng = np.random.default_rng(9)
        for _ in range(20):
            D = oa.dissipator(random_matrix(rng, 2))
            rho = random_density(rng, 2)
            out = oa.unvectorize(D @ oa.vectorize(rho))
            assert abs(np.trace(out)) <= 1e-10


class TestSuperopExp:
    def test_zero_generator(self):
        assert np.allclose(oa.superop_exp(np.zeros((4, 4)), 2.7), np.eye(4), atol=1e-15)

    def test_pauli_phase_cancellation(self):
        S = oa.commutator_generator(SZ)
        phase = oa.superop_exp(S, np.pi)
        for rho in (GROUND, EXCITED, np.diag([0.3, 0.7]).astype(complex)):
            out = oa.unvectorize(phase @ oa.vectorize(rho))
            assert np.allclose(out, rho, atol=1e-12)

    def test_semigroup_property(self):
        rng = np.random.default_rng(10)
        for _ in range(5):
            S = random_matrix(rng, 4, scale=0.5)
            lhs = oa.superop_exp(S, 0.7) @ oa.superop_exp(S, 1.6)
            rhs = oa.superop_exp(S, 2.3)
            assert np.linalg.norm(lhs - rhs) <= 1e-10

    def test_rejects_non_finite(self):
        bad = np.full((4, 4), np.nan)
        with pytest.raises(ValueError, match="finite"):
            oa.superop_exp(bad, 1.0)


class TestPseudoinverse:
    def test_invertible_matrix(self):
        rng = np.random.default_rng(11)
        S = random_matrix(rng, 4) + 3.0 * np.eye(4)
        assert np.linalg.norm(oa.pseudoinverse(S) - np.linalg.inv(S)) <= 1e-8

    def test_penrose_conditions_on_singular_liouvillian(self):
        gen = feedback_generator(rabi_model(TwoLevelParams(1.0, 1.0, 1.0, nu=1.0)))
        plus = oa.pseudoinverse(gen)
        assert np.linalg.norm(gen @ plus @ gen - gen) <= 1e-8
        assert np.linalg.norm(plus @ gen @ plus - plus) <= 1e-8
        assert np.linalg.norm((gen @ plus).conj().T - gen @ plus) <= 1e-8
        assert np.linalg.norm((plus @ gen).conj().T - plus @ gen) <= 1e-8

    def test_zero_matrix(self):
        assert np.array_equal(oa.pseudoinverse(np.zeros((4, 4))), np.zeros((4, 4)))


class TestSteadyState:
    def test_pure_decay_dark_state(self):
        gen = feedback_generator(
            JumpModelSpec(H=np.zeros((2, 2)), jumps=(SIGMA_MINUS,), F=np.zeros((2, 2)), nus=(0.0,))
        )
        assert np.allclose(oa.steady_state(gen), GROUND, atol=1e-12)

    def test_resonant_drive_population(self):
        # optical-Bloch closed form: excited population Omega^2/(kappa^2 + 2 Omega^2)
        gen = feedback_generator(rabi_model(TwoLevelParams(0.0, 1.0, 1.0, nu=0.0)))
        rho = oa.steady_state(gen)
        assert abs(rho[1, 1].real - 1.0 / 3.0) <= 1e-12
        # cross-check against a constrained least-squares null-space solve
        tr_row = oa.trace_vector(2).conj()
        M = np.vstack([gen, tr_row])
        rhs = np.zeros(5, dtype=complex)
        rhs[-1] = 1.0
        x, *_ = np.linalg.lstsq(M, rhs, rcond=None)
        assert np.allclose(oa.unvectorize(x), rho, atol=1e-10)

    def test_trace_one_for_random_models(self):
        rng = np.random.default_rng(12)
        for _ in range(20):
            p = TwoLevelParams(*rng.uniform(0.1, 3.0, 3), nu=rng.uniform(0.0, 1.5))
            rho = oa.steady_state(feedback_generator(rabi_model(p)))
            assert abs(np.trace(rho).real - 1.0) <= 1e-12

    def test_fixed_point_under_propagation(self):
        gen = feedback_generator(rabi_model(TwoLevelParams(1.0, 1.0, 1.0, nu=1.0)))
        v = oa.vectorize(oa.steady_state(gen))
        for t in (1.0, 10.0):
            assert np.linalg.norm(oa.superop_exp(gen, t) @ v - v) <= 1e-8

    def test_degenerate_zero_mode_reports_multiplicity(self):
        with pytest.raises(ValueError, match="multiplicity 4"):
            oa.steady_state(np.zeros((4, 4)))


class TestValidators:
    def test_require_density_accepts_valid(self):
        rng = np.random.default_rng(13)
        rho = random_density(rng, 2)
        oa.require_density(rho)

    def test_require_density_rejects_bad_trace(self):
        with pytest.raises(ValueError, match="trace"):
            oa.require_density(2.0 * GROUND)

    def test_trace_distance_orthogonal_states(self):
        assert abs(oa.trace_distance(GROUND, EXCITED) - 1.0) <= 1e-12
