import math

import numpy as np
import pytest

from sdiqkd.qmath import (
    BlochAngles,
    DensityOperator,
    I2,
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    ProjectorPair,
    bloch_vector_of_matrix,
    born_probability,
    generator_from_hermitian,
    hermitian_from_generator,
    partial_trace,
    projector_pair_from_bloch,
    state_from_bloch,
    tensor,
    unitary_from_generator,
)


def random_state_matrix(rng, dim=2):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    m = a @ a.conj().T
    return m / np.trace(m).real


class TestBlochAngles:
    @pytest.mark.parametrize(
        "alpha, beta, vec",
        [
            (0.0, 0.0, (0, 0, 1)),  # |0>
            (math.pi, 0.0, (0, 0, -1)),  # |1>
            (math.pi / 2, 0.0, (1, 0, 0)),  # |+>
            (math.pi / 2, math.pi, (-1, 0, 0)),  # |->
            (math.pi / 2, math.pi / 2, (0, 1, 0)),  # |+i>
        ],
    )
    def test_unit_vector(self, alpha, beta, vec):
        assert np.allclose(BlochAngles(alpha, beta).unit_vector(), vec, atol=1e-15)

    @pytest.mark.parametrize(
        "raw, wrapped",
        [
            (3.0 * math.pi, -math.pi),
            (math.pi, -math.pi),  # the open edge folds down
            (-math.pi, -math.pi),
            (math.tau + 0.25, 0.25),
            (-math.tau - 0.25, -0.25),
        ],
    )
    def test_beta_wrapping(self, raw, wrapped):
        assert np.isclose(BlochAngles(1.0, raw).beta, wrapped, atol=1e-12)

    @pytest.mark.parametrize("alpha", [-0.1, math.pi + 0.1, math.inf, math.nan])
    def test_alpha_rejected(self, alpha):
        with pytest.raises(ValueError):
            BlochAngles(alpha, 0.0)

    def test_antipode_negates_vector(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            angles = BlochAngles(rng.uniform(0, math.pi), rng.uniform(-math.pi, math.pi))
            assert np.allclose(
                angles.antipode().unit_vector(), -angles.unit_vector(), atol=1e-12
            )

    def test_from_vector_round_trip(self):
        rng = np.random.default_rng(4)
        for _ in range(200):
            v = rng.normal(size=3)
            v /= np.linalg.norm(v)
            assert np.allclose(BlochAngles.from_vector(v).unit_vector(), v, atol=1e-12)

    def test_from_vector_rejects_zero(self):
        with pytest.raises(ValueError):
            BlochAngles.from_vector(np.zeros(3))


class TestDensityOperator:
    def test_accepts_pure_and_mixed(self):
        DensityOperator(np.diag([1.0, 0.0]).astype(complex))
        DensityOperator(np.eye(4, dtype=complex) / 4)

    @pytest.mark.parametrize(
        "matrix",
        [
            np.diag([0.6, 0.6]),  # trace 1.2
            np.array([[0.5, 0.5], [0.0, 0.5]]),  # not Hermitian
            np.diag([1.5, -0.5]),  # negative eigenvalue
            np.eye(3) / 3,  # unsupported dimension
        ],
    )
    def test_rejects(self, matrix):
        with pytest.raises(ValueError):
            DensityOperator(np.asarray(matrix, dtype=complex))

    def test_bloch_vector_matches_pauli_traces(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            rho = random_state_matrix(rng)
            expected = [np.trace(rho @ p).real for p in (PAULI_X, PAULI_Y, PAULI_Z)]
            assert np.allclose(DensityOperator(rho).bloch_vector(), expected, atol=1e-12)

    def test_matrix_is_read_only(self):
        rho = DensityOperator(np.eye(2, dtype=complex) / 2)
        with pytest.raises(ValueError):
            rho.matrix[0, 0] = 9.0


class TestProjectorPair:
    def test_from_bloch_resolves_identity(self):
        rng = np.random.default_rng(6)
        for _ in range(200):
            pair = projector_pair_from_bloch(
                BlochAngles(rng.uniform(0, math.pi), rng.uniform(-math.pi, math.pi))
            )
            assert np.allclose(pair.p0 + pair.p1, I2, atol=1e-12)
            assert np.allclose(pair.p0 @ pair.p0, pair.p0, atol=1e-12)

    def test_axis_matches_angles(self):
        angles = BlochAngles(1.1, -2.3)
        pair = projector_pair_from_bloch(angles)
        assert np.allclose(pair.axis(), angles.unit_vector(), atol=1e-12)

    def test_effect_selects_projector(self):
        pair = projector_pair_from_bloch(BlochAngles(0.0, 0.0))
        assert np.allclose(pair.effect(0), np.diag([1, 0]))
        assert np.allclose(pair.effect(1), np.diag([0, 1]))
        with pytest.raises(ValueError):
            pair.effect(2)

    @pytest.mark.parametrize(
        "p0, p1",
        [
            (np.diag([1.0, 0.0]), np.diag([0.0, 0.9])),  # no identity resolution
            (np.eye(2) / 2, np.eye(2) / 2),  # not idempotent
        ],
    )
    def test_rejects(self, p0, p1):
        with pytest.raises(ValueError):
            ProjectorPair(p0.astype(complex), p1.astype(complex))


class TestBornProbability:
    def test_known_values(self):
        zero = state_from_bloch(BlochAngles(0.0, 0.0))
        z_pair = projector_pair_from_bloch(BlochAngles(0.0, 0.0))
        x_pair = projector_pair_from_bloch(BlochAngles(math.pi / 2, 0.0))
        assert np.isclose(born_probability(z_pair.effect(0), zero), 1.0)
        assert np.isclose(born_probability(z_pair.effect(1), zero), 0.0)
        assert np.isclose(born_probability(x_pair.effect(0), zero), 0.5)

    def test_outcomes_sum_to_one(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            rho = random_state_matrix(rng)
            pair = projector_pair_from_bloch(
                BlochAngles(rng.uniform(0, math.pi), rng.uniform(-math.pi, math.pi))
            )
            total = born_probability(pair.effect(0), rho) + born_probability(pair.effect(1), rho)
            assert np.isclose(total, 1.0, atol=1e-12)

    def test_clamp_band(self):
        assert born_probability(np.diag([-5e-11, 0.0]).astype(complex), np.diag([1.0, 0.0])) == 0.0
        assert born_probability(np.diag([1.0 + 5e-11, 0.0]).astype(complex), np.diag([1.0, 0.0])) == 1.0
        with pytest.raises(ValueError):
            born_probability(np.diag([-1e-3, 0.0]).astype(complex), np.diag([1.0, 0.0]))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            born_probability(np.eye(2), np.eye(4) / 4)


class TestTensorAndPartialTrace:
    def test_partial_trace_of_product(self):
        rng = np.random.default_rng(8)
        for _ in range(200):
            a = random_state_matrix(rng)
            b = random_state_matrix(rng)
            joint = tensor(a, b)
            assert np.allclose(partial_trace(joint, keep="first"), a, atol=1e-12)
            assert np.allclose(partial_trace(joint, keep="second"), b, atol=1e-12)

    def test_trace_preserved(self):
        rng = np.random.default_rng(9)
        for _ in range(200):
            joint = random_state_matrix(rng, dim=4)
            for keep in ("first", "second"):
                assert np.isclose(np.trace(partial_trace(joint, keep)).real, 1.0, atol=1e-12)

    def test_keep_validated(self):
        with pytest.raises(ValueError):
            partial_trace(np.eye(4) / 4, keep="third")
        with pytest.raises(ValueError):
            partial_trace(np.eye(2) / 2, keep="first")


class TestGenerators:
    def test_hermitian_round_trip(self):
        rng = np.random.default_rng(10)
        for _ in range(200):
            params = rng.normal(size=16)
            h = hermitian_from_generator(params)
            assert np.allclose(h, h.conj().T, atol=1e-14)
            assert np.allclose(generator_from_hermitian(h), params, atol=1e-14)

    def test_unitarity(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            u = unitary_from_generator(rng.normal(size=16) * 3.0)
            assert np.max(np.abs(u.conj().T @ u - np.eye(4))) < 1e-12

    def test_zero_generator_is_identity(self):
        assert np.allclose(unitary_from_generator(np.zeros(16)), np.eye(4), atol=1e-14)

    def test_diagonal_phase(self):
        params = np.zeros(16)
        params[3] = math.pi
        u = unitary_from_generator(params)
        assert np.allclose(u, np.diag([1, 1, 1, -1]), atol=1e-12)

    def test_shape_validated(self):
        with pytest.raises(ValueError):
            hermitian_from_generator(np.zeros(15))
        with pytest.raises(ValueError):
            generator_from_hermitian(np.eye(2))


def test_bloch_vector_of_matrix_known():
    assert np.allclose(bloch_vector_of_matrix(np.diag([1.0, 0.0])), (0, 0, 1))
    plus = np.full((2, 2), 0.5)
    assert np.allclose(bloch_vector_of_matrix(plus), (1, 0, 0))
