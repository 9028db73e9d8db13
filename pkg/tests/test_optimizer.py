import numpy as np
import pytest

import sgpalm as sg
from sgpalm.model import BlockObjective, GramSet
from sgpalm.optimizer import BacktrackingError, SGPalmConfig
from sgpalm.penalties import Penalty, prox_l1_offdiag, q_prime


def quick_instance(seed=0, dims=(8, 8), density=0.1, n=400, boost=0.5):
    rng = np.random.default_rng(seed)
    truth = [sg.random_sparse_factor(d, density, boost, rng) for d in dims]
    samples = sg.sample_tensors(truth, n, rng)
    return truth, samples


class TestLineSearch:
    def test_exact_quadratic_accepts_inverse_curvature(self):
        # value = L/2 ||psi||^2 has the tight majorizer at eta = 1/L
        rng = np.random.default_rng(0)
        lip = 4.0
        psi = sg.symmetrize(rng.standard_normal((3, 3)))

        def value(p):
            return 0.5 * lip * float(np.vdot(p, p))

        eta, cand, shrinks = sg.line_search(
            value, psi, lip * psi, lam=0.0, eta_start=1.0 / lip, c=0.5, max_backtracks=20
        )
        assert eta == 1.0 / lip
        assert shrinks == 0
        assert np.abs(cand).max() <= 1e-12

    def test_huge_start_shrinks_and_satisfies_condition(self):
        _, samples = quick_instance(1)
        grams = GramSet(samples)
        factors = [np.eye(8), np.eye(8)]
        block = BlockObjective(grams, factors, 0)
        grad = block.grad(factors[0])
        eta, cand, shrinks = sg.line_search(
            block.value, factors[0], grad, lam=1.0, eta_start=1e6, c=0.5, max_backtracks=80
        )
        assert shrinks >= 1
        delta = cand - factors[0]
        bound = (
            block.value(factors[0])
            + float(np.vdot(grad, delta))
            + float(np.vdot(delta, delta)) / (2 * eta)
        )
        assert block.value(cand) <= bound

    def test_exhaustion_raises(self):
        # an ascent direction violates the majorizer bound at every step size
        psi = np.eye(2) * 5

        def value(p):
            return float(np.vdot(p, p))

        with pytest.raises(BacktrackingError):
            sg.line_search(value, psi, -psi, 0.0, 1.0, 0.5, 5)


class TestBBStep:
    def test_quadratic_secant_is_inverse_curvature(self):
        rng = np.random.default_rng(2)
        lip = 3.0
        a = sg.symmetrize(rng.standard_normal((4, 4)))
        b = sg.symmetrize(rng.standard_normal((4, 4)))
        eta = sg.bb_step(a, b, lip * a, lip * b, fallback=99.0)
        assert eta == pytest.approx(1.0 / lip)

    def test_zero_difference_falls_back(self):
        a = np.eye(3)
        assert sg.bb_step(a, a, a, 2 * a, fallback=0.7) == 0.7

    def test_nonpositive_curvature_falls_back(self):
        a, b = np.zeros((2, 2)), np.eye(2)
        assert sg.bb_step(a, b, b, -b, fallback=0.3) == 0.3

    def test_independent_arithmetic_oracle(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            a, b = rng.standard_normal((3, 3)), rng.standard_normal((3, 3))
            ga, gb = rng.standard_normal((3, 3)), rng.standard_normal((3, 3))
            num = ((b - a) ** 2).sum()
            den = ((b - a) * (gb - ga)).sum()
            got = sg.bb_step(a, b, ga, gb, fallback=-1.0)
            if den > 0:
                assert got == pytest.approx(num / den, rel=1e-12)
            else:
                assert got == -1.0


class TestConvergenceCheck:
    def test_constant_sequence(self):
        assert sg.convergence_check([5.0, 5.0], 1e-12)

    def test_geometric_decay_above_tolerance(self):
        objs = [2.0 ** (-t) for t in range(20)]
        assert not sg.convergence_check(objs, 1e-12)

    def test_single_entry(self):
        assert not sg.convergence_check([1.0], 1.0)


class TestFit:
    def test_zero_data_follows_scaled_identity_path(self):
        # with zero data the smooth part depends only on the diagonals, the
        # iterates stay on the identity ray, and the gradient flattens out
        samples = np.zeros((5, 2, 2))
        res = sg.fit(samples, SGPalmConfig(lambdas=0.0, max_iters=60, tol=0.0))
        objs = np.array(res.trace.objectives)
        assert np.all(np.diff(objs) <= 0)
        for psi in res.factors:
            assert psi[0, 1] == 0.0 and psi[1, 0] == 0.0
            assert psi[0, 0] == pytest.approx(psi[1, 1])
        grams = GramSet(samples)
        gnorm = max(
            np.linalg.norm(sg.grad_k(res.factors, samples, grams, k)) for k in range(2)
        )
        assert gnorm <= 1e-6

    def test_monotone_descent(self):
        _, samples = quick_instance(4)
        res = sg.fit(samples, SGPalmConfig(lambdas=20.0, max_iters=100, tol=1e-10))
        objs = np.array(res.trace.objectives)
        assert np.all(np.diff(objs) <= 0)

    def test_determinism(self):
        _, samples = quick_instance(5)
        cfg = SGPalmConfig(lambdas=10.0, max_iters=40, tol=1e-10)
        a = sg.fit(samples, cfg)
        b = sg.fit(samples, cfg)
        assert a.trace.objectives == b.trace.objectives
        assert a.trace.steps == b.trace.steps
        for fa, fb in zip(a.factors, b.factors):
            assert np.array_equal(fa, fb)

    def test_fixed_point_property_at_convergence(self):
        # tol=0 runs until the prox update is exactly idempotent
        _, samples = quick_instance(6)
        res = sg.fit(samples, SGPalmConfig(lambdas=30.0, max_iters=5000, tol=0.0))
        assert res.converged
        grams = GramSet(samples)
        for k in range(2):
            eta = res.trace.steps[-1][k]
            g = sg.grad_k(res.factors, samples, grams, k)
            prox = prox_l1_offdiag(res.factors[k] - eta * g, eta * res.lambdas[k])
            assert np.linalg.norm(prox - res.factors[k]) <= 1e-8

    def test_iterates_stay_symmetric_and_feasible(self):
        _, samples = quick_instance(7)
        res = sg.fit(samples, SGPalmConfig(lambdas=15.0, max_iters=50, tol=1e-10))
        for psi in res.factors:
            assert np.array_equal(psi, psi.T)
        from sgpalm.model import diag_grid

        assert diag_grid(res.factors).min() > 0

    def test_huge_lambda_kills_all_edges(self):
        _, samples = quick_instance(8)
        res = sg.fit(samples, SGPalmConfig(lambdas=1e9, max_iters=30, tol=1e-10))
        for psi in res.factors:
            off = psi - np.diag(np.diag(psi))
            assert not off.any()

    def test_recovery_on_planted_support(self):
        truth, samples = quick_instance(9, dims=(16, 16), density=0.05, n=1000)
        lam = sg.lambda_schedule(2000.0, (16, 16), 1000)
        res = sg.fit(samples, SGPalmConfig(lambdas=lam, max_iters=300, tol=1e-9))
        assert sg.mcc(sg.support_confusion(res.factors, truth)) >= 0.9

    def test_scad_and_mcp_descend(self):
        _, samples = quick_instance(10)
        for pen in [Penalty.scad(), Penalty.mcp()]:
            res = sg.fit(
                samples,
                SGPalmConfig(lambdas=25.0, penalty=pen, max_iters=80, tol=1e-10),
            )
            objs = np.array(res.trace.objectives)
            assert np.all(np.diff(objs) <= 0)
            assert np.isfinite(objs[-1])

    def test_nonconvex_fixed_point_uses_corrected_gradient(self):
        _, samples = quick_instance(11)
        pen = Penalty.scad()
        res = sg.fit(
            samples, SGPalmConfig(lambdas=25.0, penalty=pen, max_iters=5000, tol=0.0)
        )
        assert res.converged
        grams = GramSet(samples)
        for k in range(2):
            eta = res.trace.steps[-1][k]
            g = sg.grad_k(res.factors, samples, grams, k) + q_prime(
                pen, res.lambdas[k], res.factors[k]
            )
            prox = prox_l1_offdiag(res.factors[k] - eta * g, eta * res.lambdas[k])
            assert np.linalg.norm(prox - res.factors[k]) <= 1e-8

    def test_time_limit_stop(self):
        _, samples = quick_instance(12, dims=(16, 16), n=500)
        cfg = SGPalmConfig(lambdas=1.0, max_iters=100000, tol=0.0, max_seconds=0.05)
        res = sg.fit(samples, cfg)
        assert res.stop_reason == "time_limit"
        assert not res.converged

    def test_nan_data_raises(self):
        samples = np.full((2, 2, 2), np.nan)
        with pytest.raises(ValueError):
            sg.fit(samples, SGPalmConfig(lambdas=1.0))

    def test_config_validation(self):
        with pytest.raises(ValueError):
            SGPalmConfig(lambdas=1.0, backtrack_c=1.5)
        with pytest.raises(ValueError):
            SGPalmConfig(lambdas=-2.0)
        with pytest.raises(ValueError):
            SGPalmConfig(lambdas=1.0, step0=0.0)

    def test_trace_csv_round_trip(self, tmp_path):
        _, samples = quick_instance(13)
        res = sg.fit(samples, SGPalmConfig(lambdas=20.0, max_iters=20, tol=1e-10))
        path = tmp_path / "trace.csv"
        res.trace.to_csv(path)
        header = path.read_text().splitlines()[0].split(",")
        assert header == ["iteration", "objective", "eta_1", "eta_2", "backtracks", "millis"]
        body = np.loadtxt(path, delimiter=",", skiprows=1)
        assert body.shape[0] == res.iterations
        assert np.allclose(body[:, 1], res.trace.objectives[1:])


class TestLambdaSchedule:
    def test_formula(self):
        lam = sg.lambda_schedule(2.0, (4, 9), 100)
        d = 36.0
        assert lam[0] == pytest.approx(2.0 * np.sqrt(4 * np.log(d) / 100))
        assert lam[1] == pytest.approx(2.0 * np.sqrt(9 * np.log(d) / 100))
