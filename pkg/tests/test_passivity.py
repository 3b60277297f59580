import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from passive_ifir.lti import SampledSignal, simulate_lti, DiscreteTransferFunction
from passive_ifir.passivity import (IFIRController, KYP_DELTA, epsilon_bound,
                                    finite_toeplitz_constraints, kyp_block_matrix,
                                    kyp_constraints, kyp_realization, lipschitz_bound_check,
                                    passivity_margin, posreal_constraints, split_unknowns,
                                    toeplitz_matrix, toeplitz_min_eig)
from passive_ifir.solver import ConstrainedLSProblem, check_solution, solve


def feasible(cons, x):
    return np.all(cons.ineq_matrix @ x >= cons.ineq_bounds - 1e-12) and all(
        b.min_eig(x) >= -1e-12 for b in cons.psd_blocks)


class TestToeplitzMatrix:
    def test_scalar(self):
        np.testing.assert_array_equal(toeplitz_matrix([1.0], 2), np.eye(2))

    def test_two_taps(self):
        np.testing.assert_array_equal(toeplitz_matrix([1, 2], 3),
                                      [[1, 0, 0], [2, 1, 0], [0, 2, 1]])

    def test_full_lower(self):
        t = toeplitz_matrix([3.0, 5.0, 7.0], 3)
        np.testing.assert_array_equal(t, [[3, 0, 0], [5, 3, 0], [7, 5, 3]])

    def test_order_too_small(self):
        with pytest.raises(ValueError):
            toeplitz_matrix([1, 2, 3], 2)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 6), st.integers(0, 10), st.integers(0, 2**31 - 1))
    def test_quadratic_form_is_fir_response(self, m, extra, seed):
        rng = np.random.default_rng(seed)
        g = rng.normal(size=m)
        n = m + extra
        w = rng.normal(size=n)
        fir = DiscreteTransferFunction(g, [1.0], 0.1)
        resp = simulate_lti(fir, SampledSignal(w, 0.1)).values
        lhs = w @ toeplitz_matrix(g, n).T @ w
        rhs = w @ resp
        assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-12)


class TestKYP:
    def test_realization_m3(self):
        A, B = kyp_realization(3)
        np.testing.assert_array_equal(A, [[0, 1], [0, 0]])
        np.testing.assert_array_equal(B, [0, 1])

    def test_unknown_count(self):
        for m in (2, 3, 7):
            cons = kyp_constraints(m)
            assert cons.n_vars == m + 1 + (m - 1) * m // 2
            assert [b.size for b in cons.psd_blocks] == [m - 1, m]

    def test_rejects_m1(self):
        with pytest.raises(ValueError):
            kyp_constraints(1)

    def test_identity_certificate_block(self):
        # with the shift realization the (2,2) entry of X - A^T X A vanishes
        block = kyp_block_matrix([1.0, 0.0, 0.0], np.eye(2))
        np.testing.assert_allclose(block, np.diag([1.0, 0.0, 1.0]))
        assert np.min(np.linalg.eigvalsh(block)) >= 0

    def test_operator_matches_direct_block(self):
        rng = np.random.default_rng(3)
        m = 5
        cons = kyp_constraints(m)
        x = rng.normal(size=cons.n_vars)
        g, _, X = split_unknowns(x, m)
        np.testing.assert_allclose(cons.psd_blocks[1].evaluate(x), kyp_block_matrix(g, X),
                                   atol=1e-12)
        np.testing.assert_allclose(cons.psd_blocks[0].evaluate(x), X - KYP_DELTA * np.eye(m - 1),
                                   atol=1e-12)

    def test_negative_g0_infeasible(self):
        cons = kyp_constraints(3)
        x = np.zeros(cons.n_vars)
        x[0] = -0.1
        assert np.any(cons.ineq_matrix @ x < cons.ineq_bounds)

    def test_feasible_points_are_passive(self):
        # solve projections onto the KYP set; every certified (g, X) must give a passive g
        rng = np.random.default_rng(11)
        for trial in range(5):
            m = int(rng.integers(2, 6))
            cons = kyp_constraints(m)
            target = rng.normal(size=m)
            prob = ConstrainedLSProblem(np.eye(m), target, cons.ineq_matrix, cons.ineq_bounds,
                                        cons.psd_blocks, cons.n_vars)
            sol = solve(prob)
            assert sol.optimal
            report = check_solution(prob, sol.x, 1e-6)
            assert report.passed
            g, _, _ = split_unknowns(sol.x, m)
            assert passivity_margin(g) >= -1e-6


class TestFiniteToeplitz:
    def test_scalar_block(self):
        cons = finite_toeplitz_constraints(1, 3, 0.2, 10.0, 1.0)
        blk = cons.psd_blocks[0]
        assert blk.min_eig(np.array([0.1, 0.0])) == pytest.approx(0.0, abs=1e-14)
        assert blk.min_eig(np.array([0.09, 0.0])) < 0

    def test_flat_decay_bounds(self):
        cons = finite_toeplitz_constraints(3, 3, 0.1, 10.0, 1.0)
        # rows after gamma >= 0 are +/- g_k >= -10
        np.testing.assert_allclose(cons.ineq_bounds[1:], -10.0)
        assert cons.n_ineqs == 1 + 2 * 3

    def test_block_matches_eigensolve(self):
        g = np.array([1.0, -0.4])
        cons = finite_toeplitz_constraints(2, 4, 0.1, 10.0, 1.0)
        x = np.concatenate([g, [0.0]])
        t = toeplitz_matrix(g, 4)
        expected = np.min(np.linalg.eigvalsh(t + t.T)) - 0.1
        assert cons.psd_blocks[0].min_eig(x) == pytest.approx(expected, abs=1e-12)
        # 2 - 0.8 cos(pi/5) - 0.1 for the 4x4 tridiagonal matrix
        assert expected == pytest.approx(2 - 0.8 * math.cos(math.pi / 5) - 0.1, abs=1e-12)

    @pytest.mark.parametrize("args", [(2, 1, 0.1, 1.0, 1.0), (2, 2, 0.0, 1.0, 1.0),
                                      (2, 2, 0.1, 0.0, 1.0), (2, 2, 0.1, 1.0, 1.5)])
    def test_domain(self, args):
        with pytest.raises(ValueError):
            finite_toeplitz_constraints(*args)


class TestEpsilonBound:
    def test_geometric(self):
        assert epsilon_bound(1.0, 0.5, 3, 10) == pytest.approx(math.pi * 1.75 * 0.1, rel=1e-12)
        assert epsilon_bound(1.0, 0.5, 3, 10) == pytest.approx(0.5497787, abs=1e-7)

    def test_constant_fir(self):
        assert epsilon_bound(3.0, 0.7, 1, 5) == 0.0

    def test_rho_one_limit(self):
        assert epsilon_bound(1.0, 1.0, 3, 10) == pytest.approx(0.9424778, abs=1e-7)
        assert epsilon_bound(1.0, 1.0 - 1e-9, 3, 10) == pytest.approx(
            epsilon_bound(1.0, 1.0, 3, 10), rel=1e-6)

    @pytest.mark.parametrize("args", [(0.0, 0.5, 3, 10), (1.0, 0.0, 3, 10),
                                      (1.0, 0.5, 3, 1), (1.0, 0.5, 0, 10)])
    def test_domain(self, args):
        with pytest.raises(ValueError):
            epsilon_bound(*args)


class TestPosreal:
    def test_m1_identical_rows(self):
        cons = posreal_constraints(1, 4, 1.0, 1.0, epsilon=0.3)
        rows = cons.ineq_matrix.toarray()[-5:]
        np.testing.assert_allclose(rows, np.tile([2.0, 0.0], (5, 1)))
        np.testing.assert_allclose(cons.ineq_bounds[-5:], 0.3)

    def test_dc_and_nyquist_rows(self):
        m, M = 4, 6
        cons = posreal_constraints(m, M, 1.0, 1.0, epsilon=0.0)
        rows = cons.ineq_matrix.toarray()[-(M + 1):, :m]
        np.testing.assert_allclose(rows[0], 2.0)
        np.testing.assert_allclose(rows[-1], 2.0 * (-1.0) ** np.arange(m), atol=1e-14)

    def test_counts_and_auto_epsilon(self):
        cons = posreal_constraints(5, 12, 2.0, 0.8)
        assert cons.n_ineqs == 1 + 2 * 5 + 13
        assert cons.params["epsilon"] == pytest.approx(epsilon_bound(2.0, 0.8, 5, 12))
        assert cons.params["auto_epsilon"] == 1.0

    def test_negative_override(self):
        with pytest.raises(ValueError):
            posreal_constraints(3, 6, 1.0, 1.0, epsilon=-1e-3)


class TestMargin:
    def test_examples(self):
        assert passivity_margin([1.0]) == pytest.approx(2.0)
        assert passivity_margin([0.0, 1.0]) == pytest.approx(-2.0)
        assert passivity_margin([1.0, 1.0]) == pytest.approx(0.0, abs=1e-12)

    def test_grid_and_empty(self):
        with pytest.raises(ValueError):
            passivity_margin([1.0], 999)
        with pytest.raises(ValueError):
            passivity_margin([])

    def test_controller_certification(self):
        assert IFIRController(0.0, [1.0], 0.05).is_passive()
        assert not IFIRController(-1.0, [1.0], 0.05).is_passive()
        assert not IFIRController(0.0, [0.0, 1.0], 0.05).is_passive()


class TestToeplitzMinEig:
    def test_examples(self):
        assert toeplitz_min_eig([1.0], 7) == pytest.approx(2.0)
        assert toeplitz_min_eig([0.0, 1.0], 2) == pytest.approx(-1.0)

    def test_converges_to_margin(self):
        lam = toeplitz_min_eig([1.0, 1.0], 512)
        assert abs(lam - passivity_margin([1.0, 1.0])) < 1e-4

    def test_matches_dense(self):
        g = np.array([0.5, -0.3, 0.2, 0.1])
        t = toeplitz_matrix(g, 9)
        assert toeplitz_min_eig(g, 9) == pytest.approx(np.min(np.linalg.eigvalsh(t + t.T)),
                                                       abs=1e-12)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(1, 12), st.integers(0, 2**31 - 1))
    def test_interlacing_monotone(self, m, seed):
        g = np.random.default_rng(seed).normal(size=m)
        e1, e2, e4 = (toeplitz_min_eig(g, k * m) for k in (1, 2, 4))
        assert e1 >= e2 - 1e-10 and e2 >= e4 - 1e-10
        # Toeplitz eigenvalues never undershoot the symbol minimum
        assert e4 >= passivity_margin(g) - 1e-9

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 10), st.integers(0, 2**31 - 1))
    def test_large_order_tracks_margin(self, m, seed):
        # min eig at n >= 8m exceeds the symbol minimum by at most the
        # curvature term (pi/(n+1))^2 * sum k^2 |g_k|
        g = np.random.default_rng(seed).normal(size=m)
        n = 8 * m
        k = np.arange(m)
        slack = (math.pi / (n + 1)) ** 2 * np.sum(k ** 2 * np.abs(g))
        assert passivity_margin(g) >= toeplitz_min_eig(g, n) - slack - 1e-9


class TestLipschitz:
    def test_examples(self):
        assert lipschitz_bound_check([2.5], 0.3, 1.0)
        assert lipschitz_bound_check([0.0, 1.0], 0.0, math.pi / 2)
        assert lipschitz_bound_check([0.3, -1.0, 2.0], 1.1, 0.0)

    def test_detects_violation(self):
        # a bound scaled down below the true variation must fail
        g = [0.0, 1.0]
        assert not lipschitz_bound_check(g, math.pi / 2, 1e-3, atol=-1e-3 * 0.5)

    @settings(max_examples=300, deadline=None)
    @given(st.lists(st.floats(-10, 10), min_size=1, max_size=25),
           st.floats(-4, 4), st.floats(-1, 1))
    def test_property(self, g, theta, delta):
        assert lipschitz_bound_check(g, theta, delta, atol=1e-12)


@settings(max_examples=150, deadline=None)
@given(st.integers(1, 12), st.integers(0, 2**31 - 1))
def test_posreal_soundness(m, seed):
    rng = np.random.default_rng(seed)
    rho0 = rng.uniform(0.1, 10.0)
    rho = rng.uniform(0.05, 1.0)
    M = int(rng.integers(max(2, m), 4 * m + 3))
    cons = posreal_constraints(m, M, rho0, rho)
    eps = cons.params["epsilon"]
    g = rng.uniform(-1, 1, m) * rho0 * rho ** np.arange(m) * rng.uniform(0, 1)
    g[0] = 0.0
    rows = cons.ineq_matrix.toarray()[-(M + 1):, :m]
    g[0] = (eps - np.min(rows @ g)) / 2.0
    x = np.concatenate([g, [0.0]])
    if not feasible(cons, x):
        return
    assert passivity_margin(g, 100_000) >= 0.0
