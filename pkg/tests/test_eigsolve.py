import numpy as np
import pytest

import stokeseig.mesh as mm
from helpers import dense_pencil_eigenvalues, solve_problem
from stokeseig.eigsolve import EigConfig, SpectralSolution, eigen_residuals, solve_eig
from stokeseig.mesh import build_square_mesh


def test_config_validation():
    with pytest.raises(ValueError):
        EigConfig(nev=0)
    cfg = EigConfig(nev=5)
    assert cfg.krylov_dim == 40
    with pytest.raises(ValueError):
        EigConfig(nev=5, krylov_dim=8)


def test_tiny_pencil_matches_dense_oracle():
    mesh = build_square_mesh(1, mm.UNIT_SQUARE)
    solution, pencil, _ = solve_problem(mesh, 1, 0, nev=4)
    dense = dense_pencil_eigenvalues(pencil)
    assert len(dense) >= 4
    rel = np.abs(solution.eigenvalues - dense[:4]) / dense[:4]
    assert rel.max() < 1e-9


def test_square_lowest_eigenvalue_against_published_values():
    # coarse and fine resolutions of the (-1,1)^2 benchmark
    mesh = build_square_mesh(20, mm.BI_UNIT_SQUARE)
    sol, _, _ = solve_problem(mesh, 1, 0, nev=1)
    assert abs(sol.eigenvalues[0] - 13.07172) / 13.07172 < 5e-3

    mesh = build_square_mesh(50, mm.BI_UNIT_SQUARE)
    sol, _, _ = solve_problem(mesh, 1, 0, nev=1)
    assert abs(sol.eigenvalues[0] - 13.08371) / 13.08371 < 5e-3


def test_double_eigenvalue_on_square():
    mesh = build_square_mesh(12, mm.BI_UNIT_SQUARE)
    sol, _, _ = solve_problem(mesh, 1, 0, nev=3)
    lam = sol.eigenvalues
    assert abs(lam[1] - lam[2]) / lam[1] < 1e-6


def test_shift_independence():
    mesh = build_square_mesh(10, mm.BI_UNIT_SQUARE)
    sol0, _, _ = solve_problem(mesh, 1, 0, nev=1, shift=0.0)
    sol5, _, _ = solve_problem(mesh, 1, 0, nev=1, shift=5.0)
    assert abs(sol0.eigenvalues[0] - sol5.eigenvalues[0]) / sol0.eigenvalues[0] < 1e-8


def test_monotone_error_under_refinement():
    lams = []
    for N in (10, 20, 40):
        mesh = build_square_mesh(N, mm.BI_UNIT_SQUARE)
        sol, _, _ = solve_problem(mesh, 1, 0, nev=1)
        lams.append(sol.eigenvalues[0])
    # extrapolated target from the finest pair of steps
    from stokeseig.study import extrapolate
    lam_inf, _, _ = extrapolate([(1.0 / N, l) for N, l in zip((10, 20, 40), lams)])
    errs = [abs(l - lam_inf) for l in lams]
    assert errs[0] > errs[1] > errs[2]


def test_velocity_normalized_and_residuals_small():
    mesh = build_square_mesh(8, mm.BI_UNIT_SQUARE)
    solution, pencil, dofmap = solve_problem(mesh, 1, 0, nev=3)
    assert np.all(solution.eigenvalues > 0)
    assert np.all(np.diff(solution.eigenvalues) >= -1e-12)
    kinf = pencil.K.norm_inf()
    assert np.all(solution.residuals <= 1e-8 * kinf)
    # unit velocity: -x^T N x = |u|^2 = 1
    for i in range(3):
        x = solution.vectors[:, i]
        assert abs(-(x @ (pencil.N @ x)) - 1.0) < 1e-10


def test_eigen_residuals_recompute_and_reject():
    mesh = build_square_mesh(6, mm.BI_UNIT_SQUARE)
    solution, pencil, _ = solve_problem(mesh, 1, 0, nev=2)
    res = eigen_residuals(pencil, solution)
    assert max(res) <= 1e-8 * pencil.K.norm_inf()

    rng = np.random.default_rng(0)
    noisy = solution.vectors + 1e-3 * rng.standard_normal(solution.vectors.shape)
    perturbed = SpectralSolution(
        solution.eigenvalues, solution.sigma, solution.u, solution.multiplier,
        solution.residuals, noisy)
    res_noisy = eigen_residuals(pencil, perturbed)
    assert min(np.array(res_noisy) / np.array(res)) > 10.0

    zeroed = SpectralSolution(
        solution.eigenvalues[:1], solution.sigma[:1], solution.u[:1],
        solution.multiplier[:1], solution.residuals[:1],
        np.zeros((pencil.layout.size, 1)))
    with pytest.raises(ValueError):
        eigen_residuals(pencil, zeroed)


def test_shift_at_eigenvalue_reported():
    from stokeseig.assembly import Pencil, PencilLayout
    from stokeseig.errors import ShiftAtEigenvalueError
    from stokeseig.sparselin import SparseMatrix

    singular = np.zeros((3, 3))
    singular[0, 0] = 1.0
    pencil = Pencil(SparseMatrix.from_dense(singular),
                    SparseMatrix.from_dense(-np.eye(3)),
                    PencilLayout(0, np.empty(0, dtype=int), 0, 3, 0), None)
    with pytest.raises(ShiftAtEigenvalueError):
        solve_eig(pencil, EigConfig(nev=1))


def test_deterministic_given_seed():
    mesh = build_square_mesh(6, mm.BI_UNIT_SQUARE)
    sol1, _, _ = solve_problem(mesh, 1, 0, nev=3, seed=7)
    sol2, _, _ = solve_problem(mesh, 1, 0, nev=3, seed=7)
    assert np.array_equal(sol1.eigenvalues, sol2.eigenvalues)
    assert np.array_equal(sol1.vectors, sol2.vectors)
