import numpy as np
import pytest

from cscovq.numerics import SingularMatrixError, least_squares, mat_vec


class TestMatVec:
    def test_identity(self):
        out = mat_vec(np.eye(2), np.array([3.0, -1.0]))
        np.testing.assert_array_equal(out, [3.0, -1.0])

    def test_hand_arithmetic(self):
        out = mat_vec(np.array([[1.0, 2.0], [3.0, 4.0]]), np.array([1.0, 1.0]))
        np.testing.assert_allclose(out, [3.0, 7.0])

    def test_zero_row_matrix(self):
        out = mat_vec(np.zeros((1, 3)), np.array([5.0, -2.0, 7.0]))
        np.testing.assert_array_equal(out, [0.0])

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            mat_vec(np.eye(3), np.ones(2))

    def test_linearity(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            a = rng.standard_normal((6, 4))
            u, v = rng.standard_normal(4), rng.standard_normal(4)
            np.testing.assert_allclose(mat_vec(a, u + v), mat_vec(a, u) + mat_vec(a, v), atol=1e-12)


class TestLeastSquares:
    def test_identity(self):
        np.testing.assert_allclose(least_squares(np.eye(3), np.array([1.0, 2.0, 3.0])), [1.0, 2.0, 3.0])

    def test_normal_equations_by_hand(self):
        # A^T A = 2, A^T b = 2 -> z = 1
        z = least_squares(np.array([[1.0], [1.0]]), np.array([0.0, 2.0]))
        np.testing.assert_allclose(z, [1.0])

    def test_orthogonal_projection(self):
        a = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
        np.testing.assert_allclose(least_squares(a, np.array([4.0, 5.0, 6.0])), [4.0, 5.0])

    def test_rank_deficient_rejected(self):
        c = np.array([1.0, 1.0, 0.0]) / np.sqrt(2)
        with pytest.raises(SingularMatrixError):
            least_squares(np.column_stack([c, c]), np.array([1.0, 0.0, 0.0]))

    def test_zero_matrix_rejected(self):
        with pytest.raises(SingularMatrixError):
            least_squares(np.zeros((3, 2)), np.ones(3))

    def test_underdetermined_rejected(self):
        with pytest.raises(ValueError, match="underdetermined"):
            least_squares(np.ones((2, 3)), np.ones(2))

    def test_residual_orthogonal_to_columns(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            rows = rng.integers(3, 12)
            cols = rng.integers(1, rows + 1)
            a = rng.standard_normal((rows, cols))
            b = rng.standard_normal(rows)
            z = least_squares(a, b)
            residual = a @ z - b
            scale = np.linalg.norm(a, axis=0) * max(np.linalg.norm(b), 1.0)
            assert np.all(np.abs(a.T @ residual) <= 1e-8 * scale)
