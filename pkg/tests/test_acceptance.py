"""The ten acceptance criteria, each printing one PASS/FAIL line."""

import math
import time

import numpy as np
import pytest

from _instances import tiny_instances
from conftest import record
from passive_ifir.bench import format_table, ordering_holds, run_bench, two_cart_probe_data
from passive_ifir.design import DesignConfig, design_from_data, design_from_regressor
from passive_ifir.lti import c2d_zoh, fir_freq_response, simulate_lti, step_signal
from passive_ifir.passivity import (kyp_block_matrix, lipschitz_bound_check, passivity_margin,
                                    posreal_constraints, split_unknowns)
from passive_ifir.plants import (CARTS_NL, DEFAULT_TS, PID_GAINS_MR1, closed_loop_sim,
                                 fitting_data, fitting_target_response, probe_signal,
                                 pid_controller, plant_response, reference_model, rms, two_cart)
from passive_ifir.solver import SolverOptions, check_solution, oracle_solve_small, solve
from passive_ifir.vrft import assemble_problem, least_squares_fit

pytestmark = pytest.mark.slow


def verdict(tag: str, ok: bool, detail: str) -> None:
    record(f"[{tag}] {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, detail


def mr_config(T: float, **kw) -> DesignConfig:
    return DesignConfig(ref_num=(0.1, 1.0), ref_den=(T * T, 2 * T, 1.0), **kw)


@pytest.fixture(scope="module")
def fit_c1():
    e, u = fitting_data(1)
    return e, u


@pytest.fixture(scope="module")
def fit_c2():
    e, u = fitting_data(2)
    return e, u


# 1 ---------------------------------------------------------------------------

@pytest.mark.parametrize("method", ["kyp", "toeplitz", "posreal"])
def test_c1_certification(fit_c2, method):
    e, u = fit_c2
    m = 60
    reg = assemble_problem(u, e, m, gamma=0.0)
    g_ls, _ = least_squares_fit(reg)
    kw = dict(rho=0.9, M=2000) if method == "posreal" else {}
    t0 = time.perf_counter()
    res = design_from_regressor(reg, DesignConfig(method=method, m=m, gamma=0.0, **kw))
    elapsed = time.perf_counter() - t0
    margin = passivity_margin(res.controller.g, 100_000)
    ok = margin >= -1e-6 and res.controller.gamma >= 0 and elapsed < 60.0
    verdict(f"C1 {method}", ok,
            f"LS margin {passivity_margin(g_ls):.3g}, designed margin {margin:.3e}, "
            f"gamma {res.controller.gamma:g}, {elapsed:.1f} s (limit 60 s)")


# 2 ---------------------------------------------------------------------------

def test_c2_passive_target_fidelity(fit_c1):
    e, u = fit_c1
    m = 100
    reg = assemble_problem(u, e, m, gamma=0.0)
    res = design_from_regressor(reg, DesignConfig(method="posreal", m=m, gamma=0.0,
                                                  epsilon=1e-4, rho=1.0, rho0=1e3))
    theta = np.linspace(0.0, math.pi, 2048)
    target = fitting_target_response(1, theta)
    err = np.max(np.abs(fir_freq_response(res.controller.g, theta) - target))
    rel = err / np.max(np.abs(target))
    verdict("C2", rel <= 0.02 and res.certified,
            f"max |G - G_target| / max |G_target| = {rel:.4g} (limit 0.02), "
            f"margin {res.margin:.3e}")


# 3 ---------------------------------------------------------------------------

def test_c3_epsilon_bound_soundness():
    rng = np.random.default_rng(2024)
    accepted = violations = drawn = 0
    worst = math.inf
    while accepted < 1000:
        drawn += 1
        m = int(rng.integers(1, 21))
        M = int(rng.integers(2, 4 * m + 1))
        rho0 = 10.0 * (1.0 - rng.uniform())       # (0, 10]
        rho = 1.0 - rng.uniform()                 # (0, 1]
        cons = posreal_constraints(m, M, rho0, rho)
        eps = cons.params["epsilon"]
        # random tail inside the decay envelope, g0 placed on the tightest sampled row
        g = rng.uniform(-1, 1, m) * rho0 * rho ** np.arange(m) * rng.uniform()
        g[0] = 0.0
        rows = cons.ineq_matrix.toarray()[-(M + 1):, :m]
        g[0] = (eps - np.min(rows @ g)) / 2.0 + rng.uniform() * rng.choice([0.0, 0.1]) * rho0
        x = np.concatenate([g, [0.0]])
        if np.any(cons.ineq_matrix @ x < cons.ineq_bounds - 1e-12):
            continue
        accepted += 1
        margin = passivity_margin(g, 100_000)
        worst = min(worst, margin)
        violations += margin < 0
    verdict("C3", violations == 0,
            f"{accepted} feasible instances ({drawn} drawn), {violations} violations, "
            f"smallest margin {worst:.3e}")


# 4 ---------------------------------------------------------------------------

def test_c4_lipschitz_fuzz():
    rng = np.random.default_rng(7)
    violations = 0
    for _ in range(10_000):
        m = int(rng.integers(1, 41))
        g = rng.normal(size=m) * 10 ** rng.uniform(-3, 2)
        theta = rng.uniform(-2 * math.pi, 2 * math.pi)
        delta = rng.uniform(-math.pi, math.pi) * 10 ** rng.uniform(-6, 0)
        violations += not lipschitz_bound_check(g, theta, delta, atol=1e-12)
    verdict("C4", violations == 0, f"10000 triples, {violations} violations")


# 5 ---------------------------------------------------------------------------

def test_c5_formulation_agreement(fit_c1):
    e, u = fit_c1
    m = 100
    reg = assemble_problem(u, e, m, gamma=0.0)
    g_ls, _ = least_squares_fit(reg)
    diffs = {}
    for method in ("toeplitz", "posreal"):
        cfg = DesignConfig(method=method, m=m, gamma=0.0, epsilon=1e-6, rho=1.0, rho0=1e3,
                           n=2 * m, M=2 * m)
        res = design_from_regressor(reg, cfg, SolverOptions(max_iters=50_000))
        diffs[method] = float(np.max(np.abs(res.controller.g - g_ls)))
    ok = all(d <= 1e-3 for d in diffs.values())
    verdict("C5", ok, f"LS margin {passivity_margin(g_ls):.3g}; ||dg||_inf toeplitz(n=2m) "
                      f"{diffs['toeplitz']:.3e}, posreal(M=2m) {diffs['posreal']:.3e} "
                      f"(limit 1e-3)")


# 6 ---------------------------------------------------------------------------

def test_c6_kyp_feasibility(fit_c2):
    e, u = fit_c2
    m = 30
    reg = assemble_problem(u, e, m, gamma=0.0)
    res = design_from_regressor(reg, DesignConfig(method="kyp", m=m, gamma=0.0))
    # gamma is fixed, so its column is absent from the solver unknowns
    g, _, X = split_unknowns(np.insert(res.solution.x, m, 0.0), m)
    x_eig = float(np.min(np.linalg.eigvalsh(X)))
    lmi_eig = float(np.min(np.linalg.eigvalsh(kyp_block_matrix(g, X))))
    report = check_solution(res.problem, res.solution.x, 1e-6)
    ok = x_eig >= -1e-6 and lmi_eig >= -1e-6 and report.passed
    verdict("C6", ok, f"min eig X {x_eig:.3e}, min eig LMI block {lmi_eig:.3e}, "
                      f"check_solution {'pass' if report.passed else 'FAIL'}")


# 7 ---------------------------------------------------------------------------

def test_c7_oracle_equivalence():
    worst_obj = worst_x = 0.0
    failures = 0
    for prob in tiny_instances(100, seed=77):
        ours, ref = solve(prob), oracle_solve_small(prob)
        d_obj = abs(ours.objective - ref.objective)
        d_x = float(np.max(np.abs(ours.x - ref.x)))
        worst_obj, worst_x = max(worst_obj, d_obj), max(worst_x, d_x)
        failures += not (ours.optimal and d_obj <= 1e-5 and d_x <= 1e-5)
    verdict("C7", failures == 0, f"100 instances, {failures} mismatches, worst |dobj| "
                                 f"{worst_obj:.2e}, worst |dx| {worst_x:.2e} (limit 1e-5)")


# 8 ---------------------------------------------------------------------------

def test_c8_two_cart_closed_loop():
    t0 = time.perf_counter()
    T = 0.25
    plant = two_cart()
    u = probe_signal()
    y = plant_response(plant, u)
    res = design_from_data(u, y, mr_config(T, method="posreal", m=100, epsilon=0.05))
    pd = c2d_zoh(plant, DEFAULT_TS)
    r = step_signal(int(round(20 / DEFAULT_TS)), DEFAULT_TS)
    y_ref = simulate_lti(c2d_zoh(reference_model(T), DEFAULT_TS), r).values
    err_ifir = rms(closed_loop_sim(pd, res.controller, r)[0].values - y_ref)
    err_pid = rms(closed_loop_sim(pd, pid_controller(*PID_GAINS_MR1, DEFAULT_TS), r)[0].values
                  - y_ref)
    y_swap = closed_loop_sim(pd, pid_controller(*PID_GAINS_MR1, DEFAULT_TS, swap_roles=True),
                             r)[0].values
    err_swap = rms(y_swap - y_ref)
    elapsed = time.perf_counter() - t0
    ok = res.certified and err_ifir < err_pid and elapsed < 300
    verdict("C8", ok, f"RMS iFIR {err_ifir:.4g} < PID {err_pid:.4g} "
                      f"(role-swapped PID {err_swap:.4g}), certified {res.certified}, "
                      f"{elapsed:.1f} s (limit 300 s)")


# 9 ---------------------------------------------------------------------------

def test_c9_nonlinear_plant():
    T = 1.0
    plant = two_cart(CARTS_NL)
    u = probe_signal()
    y = plant_response(plant, u)
    res = design_from_data(u, y, mr_config(T, method="posreal", m=100, epsilon=0.05))
    r = step_signal(int(round(100 / DEFAULT_TS)) + 1, DEFAULT_TS)
    y_cl = closed_loop_sim(plant, res.controller, r)[0].values
    peak = float(np.max(np.abs(y_cl)))
    final = abs(y_cl[-1] - 1.0)
    ok = res.certified and peak <= 10 and final <= 1e-2
    verdict("C9", ok, f"max |y| {peak:.4g} (limit 10), |y(100 s) - 1| {final:.3e} "
                      f"(limit 1e-2), certified {res.certified}")


# 10 --------------------------------------------------------------------------

def test_c10_table_trend():
    u, y = two_cart_probe_data()
    rows = run_bench(u, y, [150], ["posreal", "toeplitz", "kyp"], repeat=3)
    print(format_table(rows))
    times = {r.method: r.median_s for r in rows}
    ok = ordering_holds(rows, 150) and all(r.status == "optimal" for r in rows)
    verdict("C10", ok, "median solve s at m=150: " + ", ".join(
        f"{k} {times[k]:.3g}" for k in ("posreal", "toeplitz", "kyp"))
        + " (expected posreal < toeplitz < kyp)")
