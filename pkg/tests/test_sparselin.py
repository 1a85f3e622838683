import numpy as np
import pytest

from helpers import dense_gauss_solve
from stokeseig.errors import SingularMatrixError
from stokeseig.sparselin import SparseMatrix, factorize, matvec


def test_identity_solve():
    A = SparseMatrix.from_dense(np.eye(4))
    fact = factorize(A)
    b = np.array([1.0, -2.0, 3.0, 0.5])
    assert np.allclose(fact.solve(b), b, atol=1e-14)


def test_antidiagonal_needs_pivoting():
    A = SparseMatrix.from_dense([[0.0, 1.0], [1.0, 0.0]])
    fact = factorize(A)
    assert np.allclose(fact.solve(np.array([1.0, 2.0])), [2.0, 1.0], atol=1e-14)


def test_random_saddle_point_residual():
    rng = np.random.default_rng(42)
    n, m = 140, 60
    Ablk = rng.standard_normal((n, n))
    Ablk = Ablk + Ablk.T + 2.0 * n * np.eye(n)
    Bblk = rng.standard_normal((m, n))
    K = np.block([[Ablk, Bblk.T], [Bblk, np.zeros((m, m))]])
    # sparsify: zero small entries while keeping symmetry and full rank
    K[np.abs(K) < 0.4] = 0.0
    K = (K + K.T) / 2.0
    A = SparseMatrix.from_dense(K)
    x = rng.standard_normal(n + m)
    b = A @ x
    got = factorize(A).solve(b)
    denom = A.norm_inf() * np.abs(got).max() + np.abs(b).max()
    assert np.abs(A @ got - b).max() / denom <= 1e-10


def test_matvec_cases():
    eye = SparseMatrix.from_dense(np.eye(3))
    x = np.array([1.0, 2.0, 3.0])
    assert np.array_equal(matvec(eye, x), x)
    zero = SparseMatrix.from_triplets(3, [], [], [])
    assert np.array_equal(zero @ x, np.zeros(3))
    rng = np.random.default_rng(2)
    dense = rng.standard_normal((3, 3))
    A = SparseMatrix.from_dense(dense)
    # triple-loop oracle
    want = np.zeros(3)
    for i in range(3):
        for j in range(3):
            want[i] += dense[i, j] * x[j]
    assert np.allclose(A @ x, want, atol=1e-14)
    with pytest.raises(ValueError):
        matvec(A, np.ones(5))


@pytest.mark.parametrize("n", [5, 17, 50])
def test_matches_dense_elimination_oracle(n):
    rng = np.random.default_rng(n)
    dense = rng.standard_normal((n, n)) + n * np.eye(n)
    dense[np.abs(dense) < 0.5] = 0.0
    dense += n * np.eye(n) * 0.0
    b = rng.standard_normal(n)
    A = SparseMatrix.from_dense(dense)
    x_sparse = factorize(A).solve(b)
    x_oracle = dense_gauss_solve(dense, b)
    assert np.abs(x_sparse - x_oracle).max() <= 1e-9 * max(1.0, np.abs(x_oracle).max())


def test_structurally_singular_reported():
    dense = np.eye(4)
    dense[2, 2] = 0.0
    with pytest.raises(SingularMatrixError) as info:
        factorize(SparseMatrix.from_dense(dense))
    assert info.value.kind in ("structural", "numerical")


def test_numerically_singular_reported():
    dense = np.array([[1.0, 2.0], [2.0, 4.0]])
    with pytest.raises(SingularMatrixError) as info:
        factorize(SparseMatrix.from_dense(dense))
    assert info.value.kind == "numerical"


def test_rejects_non_square():
    A = SparseMatrix.from_triplets((2, 3), [0, 1], [0, 2], [1.0, 1.0])
    with pytest.raises(SingularMatrixError):
        factorize(A)


def test_csr_invariants():
    A = SparseMatrix.from_triplets(3, [0, 0, 1, 2, 0], [2, 1, 1, 0, 2], [1.0, 2.0, 3.0, 4.0, 5.0])
    # duplicates summed, indices sorted per row
    assert A.nnz == 4
    for r in range(3):
        idx = A.indices[A.indptr[r]:A.indptr[r + 1]]
        assert np.all(np.diff(idx) > 0)
    assert A.toarray()[0, 2] == 6.0
