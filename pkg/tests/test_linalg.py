"""Core linear algebra: Laplacians, Jacobi eigensolver, norms, serialization."""

import numpy as np
import pytest

from gclss.errors import (
    ConvergenceFailure,
    DegenerateFiedler,
    DisconnectedGraph,
    SymmetryViolation,
)
from gclss.linalg import (
    eig_sym,
    fiedler,
    inf_norm,
    laplacian,
    min_singular,
    read_matrix_csv,
    read_matrix_json,
    two_norm_bound,
    write_matrix_csv,
    write_matrix_json,
)


def random_sym(rng, n):
    a = rng.standard_normal((n, n))
    return 0.5 * (a + a.T)


class TestLaplacian:
    def test_two_by_two(self):
        lap = laplacian([[1.0, 0.5], [0.5, 1.0]])
        assert np.allclose(lap, [[0.5, -0.5], [-0.5, 0.5]], atol=1e-15)

    def test_identity_gives_zero(self):
        assert np.allclose(laplacian(np.eye(3)), np.zeros((3, 3)), atol=1e-15)

    def test_row_sums_zero_and_corner(self):
        s = np.array([[1, 0.8, 0.2], [0.8, 1, 0.5], [0.2, 0.5, 1.0]])
        lap = laplacian(s)
        assert np.max(np.abs(lap.sum(axis=1))) <= 1e-12
        # rowsum(0) = 2.0, minus diagonal 1.0
        assert lap[0, 0] == pytest.approx(1.0, abs=1e-14)

    def test_rejects_asymmetry(self):
        with pytest.raises(SymmetryViolation):
            laplacian([[1.0, 0.2], [0.1, 1.0]])

    def test_psd_on_random_similarities(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            y = rng.uniform(0, 5, size=6)
            s = np.exp(-np.abs(y[:, None] - y[None, :]))
            lap = laplacian(s)
            assert np.max(np.abs(lap.sum(axis=1))) <= 1e-12
            assert eig_sym(lap).eigenvalues[0] >= -1e-9


class TestEigSym:
    def test_diagonal_matrix(self):
        dec = eig_sym(np.diag([3.0, 1.0, 2.0]))
        assert np.allclose(dec.eigenvalues, [1.0, 2.0, 3.0])
        # eigenvectors are signed unit basis columns
        assert np.allclose(np.abs(dec.eigenvectors), np.eye(3)[:, [1, 2, 0]])

    def test_analytic_two_by_two(self):
        dec = eig_sym([[2.0, 1.0], [1.0, 2.0]])
        assert np.allclose(dec.eigenvalues, [1.0, 3.0])
        expected = np.array([[1, 1], [-1, 1]]) / np.sqrt(2)
        for k in range(2):
            col = dec.eigenvectors[:, k]
            assert np.allclose(col, expected[:, k]) or np.allclose(col, -expected[:, k])

    @pytest.mark.parametrize("n", [2, 5, 10, 16, 33, 64])
    def test_reconstruction_residual(self, n):
        rng = np.random.default_rng(n)
        a = random_sym(rng, n)
        dec = eig_sym(a)
        bound = 1e-9 * max(1.0, np.linalg.norm(a, 2))
        assert np.linalg.norm(dec.reconstruct() - a, 2) <= bound
        assert np.all(np.diff(dec.eigenvalues) >= 0)
        orth = dec.eigenvectors.T @ dec.eigenvectors
        assert np.max(np.abs(orth - np.eye(n))) <= 1e-10

    def test_eigenpairs_satisfy_definition(self):
        rng = np.random.default_rng(5)
        a = random_sym(rng, 9)
        dec = eig_sym(a)
        norm = np.linalg.norm(a, 2)
        for k in range(9):
            v = dec.eigenvectors[:, k]
            assert np.linalg.norm(a @ v - dec.eigenvalues[k] * v) <= 1e-8 * norm

    def test_matches_lapack(self):
        rng = np.random.default_rng(11)
        for n in (3, 7, 20):
            a = random_sym(rng, n)
            assert np.allclose(
                eig_sym(a).eigenvalues, np.linalg.eigvalsh(a), atol=1e-12
            )

    def test_deterministic(self):
        rng = np.random.default_rng(13)
        a = random_sym(rng, 8)
        d1 = eig_sym(a.copy())
        d2 = eig_sym(a.copy())
        assert np.array_equal(d1.eigenvalues, d2.eigenvalues)
        assert np.array_equal(d1.eigenvectors, d2.eigenvectors)

    def test_sweep_budget_raises(self):
        rng = np.random.default_rng(17)
        a = random_sym(rng, 16)
        with pytest.raises(ConvergenceFailure):
            eig_sym(a, max_sweeps=1)

    def test_shift_invariance_of_eigenvectors(self):
        rng = np.random.default_rng(19)
        a = random_sym(rng, 6)
        d1 = eig_sym(a)
        d2 = eig_sym(a + 3.7 * np.eye(6))
        assert np.allclose(d2.eigenvalues, d1.eigenvalues + 3.7, atol=1e-12)
        assert np.allclose(np.abs(d1.eigenvectors), np.abs(d2.eigenvectors), atol=1e-9)


class TestFiedler:
    def test_path_graph_monotone(self):
        s = np.zeros((4, 4))
        for i in range(3):
            s[i, i + 1] = s[i + 1, i] = 1.0
        vec = fiedler(laplacian(s))
        diffs = np.diff(vec)
        assert np.all(diffs > 0) or np.all(diffs < 0)

    def test_two_node_graph(self):
        lap = np.array([[0.7, -0.7], [-0.7, 0.7]])
        vec = fiedler(lap)
        assert np.allclose(np.abs(vec), [1 / np.sqrt(2)] * 2)
        assert vec[0] > 0  # sign convention

    def test_disconnected_components(self):
        s = np.zeros((4, 4))
        s[0, 1] = s[1, 0] = 1.0
        s[2, 3] = s[3, 2] = 1.0
        np.fill_diagonal(s, 1.0)
        with pytest.raises(DisconnectedGraph):
            fiedler(laplacian(s))

    def test_degenerate_second_eigenvalue(self):
        # complete graph: Fiedler eigenvalue has multiplicity n-1
        s = np.ones((4, 4))
        with pytest.raises(DegenerateFiedler):
            fiedler(laplacian(s))

    def test_unit_norm(self):
        rng = np.random.default_rng(23)
        y = rng.uniform(0, 3, size=7)
        s = np.exp(-np.abs(y[:, None] - y[None, :]))
        vec = fiedler(laplacian(s))
        assert np.linalg.norm(vec) == pytest.approx(1.0, abs=1e-10)


class TestNorms:
    def test_min_singular_examples(self):
        assert min_singular(np.eye(3)) == pytest.approx(1.0, abs=1e-12)
        assert min_singular(np.zeros((3, 3))) == 0.0
        assert min_singular([[3.0, 0.0], [0.0, 4.0]]) == pytest.approx(3.0, abs=1e-12)

    def test_min_singular_zero_iff_rank_deficient(self):
        # oracle: Gram determinant on 3x3 cases
        rng = np.random.default_rng(29)
        for _ in range(20):
            b = rng.standard_normal((3, 3))
            if rng.uniform() < 0.5:
                b[2] = b[0] + b[1]  # force rank deficiency
            gram_det = np.linalg.det(b.T @ b)
            sigma = min_singular(b)
            if abs(gram_det) < 1e-12:
                assert sigma <= 1e-6
            else:
                assert sigma > 0

    def test_inf_norm_examples(self):
        assert inf_norm([[1.0, -2.0], [0.0, 3.0]]) == 3.0
        assert inf_norm(np.eye(4)) == 1.0

    def test_two_norm_identity(self):
        assert two_norm_bound(np.eye(5)) == pytest.approx(1.0, abs=1e-12)

    def test_two_norm_inequality(self):
        # ||B||_2 <= sqrt(||B||_inf * ||B||_1)
        rng = np.random.default_rng(31)
        for _ in range(10):
            b = rng.standard_normal((5, 5))
            one_norm = np.max(np.abs(b).sum(axis=0))
            assert two_norm_bound(b) <= np.sqrt(inf_norm(b) * one_norm) + 1e-12

    def test_two_norm_matches_lapack(self):
        rng = np.random.default_rng(37)
        b = rng.standard_normal((6, 4))
        assert two_norm_bound(b) == pytest.approx(np.linalg.norm(b, 2), rel=1e-10)


class TestSerialization:
    def test_csv_roundtrip(self, tmp_path):
        rng = np.random.default_rng(41)
        a = random_sym(rng, 5)
        path = tmp_path / "m.csv"
        write_matrix_csv(a, path)
        assert np.array_equal(read_matrix_csv(path), a)

    def test_json_roundtrip(self, tmp_path):
        rng = np.random.default_rng(43)
        a = random_sym(rng, 4)
        path = tmp_path / "m.json"
        write_matrix_json(a, path)
        assert np.allclose(read_matrix_json(path), a, atol=0)

    def test_csv_rejects_nan(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("1.0,nan\n0.5,2.0\n")
        with pytest.raises(ValueError):
            read_matrix_csv(path)

    def test_json_rejects_inf(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"n": 2, "data": [[1.0, Infinity], [0.0, 1.0]]}')
        with pytest.raises(ValueError):
            read_matrix_json(path)
