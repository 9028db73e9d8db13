import numpy as np
import pytest

import sgpalm as sg
from sgpalm.synth import GeneratorSpec, PDESpec
from sgpalm.tensors import vec_samples


class TestRandomSparseFactor:
    def test_zero_density_is_boosted_diagonal(self):
        rng = np.random.default_rng(0)
        psi = sg.random_sparse_factor(5, 0.0, 0.7, rng)
        assert np.array_equal(psi, 0.7 * np.eye(5))

    def test_full_density_2x2_dominant(self):
        rng = np.random.default_rng(1)
        psi = sg.random_sparse_factor(2, 1.0, 0.5, rng)
        v = psi[0, 1]
        assert 0.2 <= abs(v) <= 1.0
        assert psi[1, 0] == v
        # 2x2 symmetric eigenvalues: diag +- |offdiag|; dominance keeps them positive
        assert psi[0, 0] - abs(v) == pytest.approx(0.5)
        assert np.linalg.eigvalsh(psi).min() > 0

    def test_every_output_positive_definite(self):
        rng = np.random.default_rng(2)
        for density in [0.05, 0.3, 0.8]:
            psi = sg.random_sparse_factor(12, density, 0.4, rng)
            assert np.array_equal(psi, psi.T)
            assert np.linalg.eigvalsh(psi).min() > 0

    def test_edge_count_matches_density(self):
        rng = np.random.default_rng(3)
        d = 10
        psi = sg.random_sparse_factor(d, 0.2, 0.5, rng)
        edges = np.count_nonzero(psi[np.triu_indices(d, 1)])
        assert edges == round(0.2 * d * (d - 1) / 2)

    def test_factor_set_kronecker_sum_positive(self):
        spec = GeneratorSpec(dims=(4, 5, 3), density=0.3, boost=0.2, seed=9)
        factors = sg.random_factor_set(spec)
        eig_mins = [np.linalg.eigvalsh(p).min() for p in factors]
        assert all(m > 0 for m in eig_mins)
        assert sum(eig_mins) > 0

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            GeneratorSpec(dims=(1, 4))
        with pytest.raises(ValueError):
            GeneratorSpec(dims=(4, 4), density=1.5)
        with pytest.raises(ValueError):
            GeneratorSpec(dims=(4, 4), boost=0.0)


class TestSampleTensors:
    def test_seed_determinism(self):
        f = [np.eye(3), np.eye(2)]
        a = sg.sample_tensors(f, 10, np.random.default_rng(42))
        b = sg.sample_tensors(f, 10, np.random.default_rng(42))
        assert np.array_equal(a, b)

    def test_identity_factor_entry_variance(self):
        # Cov = (2I)^{-2} so each entry has variance 1/4
        rng = np.random.default_rng(77)
        x = sg.sample_tensors([np.eye(2), np.eye(2)], 200_000, rng)
        v = x.reshape(200_000, -1).var(axis=0, ddof=1)
        se = 0.25 * np.sqrt(2.0 / (200_000 - 1))
        assert np.abs(v - 0.25).max() <= 3 * se

    def test_empirical_covariance_matches_dense_inverse(self):
        rng = np.random.default_rng(5)
        f = [sg.random_sparse_factor(2, 1.0, 1.0, rng) for _ in range(2)]
        x = sg.sample_tensors(f, 200_000, rng)
        v = vec_samples(x)
        emp = v.T @ v / x.shape[0]
        dense = sg.ks_dense(f)
        expect = np.linalg.inv(dense @ dense)
        assert np.abs(emp - expect).max() <= 5e-3

    def test_empirical_precision_support_and_sign(self):
        # diagonal second factor leaves exact zeros between its blocks
        rng = np.random.default_rng(6)
        f = [sg.random_sparse_factor(2, 1.0, 1.2, rng), np.diag([1.0, 1.7])]
        x = sg.sample_tensors(f, 200_000, rng)
        v = vec_samples(x)
        emp_prec = np.linalg.inv(v.T @ v / x.shape[0])
        dense = sg.ks_dense(f)
        true_prec = dense @ dense
        big = np.abs(true_prec) > 0.5
        assert not big.all() and big.any()
        assert np.array_equal(np.sign(emp_prec[big]), np.sign(true_prec[big]))
        assert np.abs(emp_prec[~big]).max() < 0.5

    def test_singular_operator_raises(self):
        f = [np.diag([1.0, -1.0]), np.diag([-1.0, 1.0])]
        with pytest.raises(sg.SingularOperatorError):
            sg.sample_tensors(f, 3, np.random.default_rng(0))


class TestPoissonFactor:
    def test_d3_matrix(self):
        expect = [[2.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 2.0]]
        assert np.array_equal(sg.poisson_factor(3), expect)

    def test_classical_eigenvalues(self):
        d = 7
        a = sg.poisson_factor(d)
        expect = 2 - 2 * np.cos(np.pi * np.arange(1, d + 1) / (d + 1))
        assert np.allclose(np.sort(np.linalg.eigvalsh(a)), np.sort(expect), atol=1e-10)
        assert expect.min() > 0

    def test_five_point_stencil_on_interior(self):
        # (A ⊕ A) vec(U) reproduces 4u(i,j) - neighbors on interior nodes
        d = 6
        a = sg.poisson_factor(d)
        rng = np.random.default_rng(7)
        u = rng.standard_normal((d, d))
        out = sg.ks_apply([a, a], u)
        for i in range(1, d - 1):
            for j in range(1, d - 1):
                local = 4 * u[i, j] - u[i + 1, j] - u[i - 1, j] - u[i, j + 1] - u[i, j - 1]
                assert out[i, j] == pytest.approx(local, abs=1e-12)


class TestConvectionDiffusion:
    def test_reduces_to_poisson(self):
        spec = PDESpec(d=5, theta=1.0, eps=0.0, h=1.0)
        assert np.allclose(sg.convection_diffusion_factor(spec), sg.poisson_factor(5))

    def test_d3_hand_case(self):
        spec = PDESpec(d=3, theta=1.0, eps=1.0, h=1.0)
        expect = [[2.0, -0.5, 0.0], [-1.5, 2.0, -0.5], [0.0, -1.5, 2.0]]
        assert np.allclose(sg.convection_diffusion_factor(spec), expect)

    def test_interior_rows_annihilate_constants_at_zero_eps(self):
        spec = PDESpec(d=8, theta=2.5, eps=0.0, h=0.5)
        a = sg.convection_diffusion_factor(spec)
        row_sums = a @ np.ones(8)
        assert np.allclose(row_sums[1:-1], 0.0, atol=1e-12)

    def test_scaling_with_mesh(self):
        spec = PDESpec(d=4, theta=2.0, eps=0.4, h=0.5)
        a = sg.convection_diffusion_factor(spec)
        assert a[0, 0] == pytest.approx(2 * 2.0 / 0.25)
        assert a[1, 0] == pytest.approx(-2.0 / 0.25 - 0.4 / 1.0)
        assert a[0, 1] == pytest.approx(-2.0 / 0.25 + 0.4 / 1.0)


class TestSteadyStatePrecision:
    def test_zero_matrix(self):
        out = sg.steady_state_precision(np.zeros((3, 3)), 2.0)
        assert np.allclose(out, 4.0 * np.eye(3))

    def test_scalar_fixed_point(self):
        out = sg.steady_state_precision(0.5 * np.eye(4), 1.0)
        assert np.allclose(out, (4.0 / 3.0) * np.eye(4))

    def test_tridiagonal_residual_and_banding(self):
        spec = PDESpec(d=12, theta=1.0, eps=1.0, h=1.0)
        a = sg.convection_diffusion_factor(spec)
        a = 0.9 * a / np.abs(np.linalg.eigvals(a)).max()
        omega = sg.steady_state_precision(a, 1.0)
        residual = np.linalg.norm(omega - a @ omega @ a.T - np.eye(12))
        assert residual <= 1e-10
        magnitudes = [np.abs(np.diag(omega, k)).mean() for k in range(4)]
        assert magnitudes[0] > magnitudes[1] > magnitudes[2] > magnitudes[3]

    def test_unstable_map_raises(self):
        with pytest.raises(ValueError, match="spectral radius"):
            sg.steady_state_precision(1.1 * np.eye(2), 1.0)
