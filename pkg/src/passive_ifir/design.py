"""End-to-end passive iFIR design from open-loop data."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace
from typing import List, Optional, Tuple

import numpy as np
import scipy.sparse as sp

from passive_ifir.lti import (DiscreteTransferFunction, SampledSignal, StateSpace, c2d_zoh)
from passive_ifir.passivity import (PASSIVE_TOL, IFIRController, PassivityConstraintSet,
                                    finite_toeplitz_constraints, kyp_constraints,
                                    passivity_margin, posreal_constraints, toeplitz_min_eig)
from passive_ifir.solver import (AffinePSD, ConstrainedLSProblem, Solution, SolutionReport,
                                 SolverOptions, check_solution, solve)
from passive_ifir.vrft import (RegressorSystem, assemble_problem, least_squares_fit,
                               virtual_error_filtered)

log = logging.getLogger(__name__)

METHODS = ("kyp", "toeplitz", "posreal")
SCHEDULES = ("epsilon", "order")
MARGIN_GRID = 100_000
CHECK_TOL = 1e-6
# the pipeline solves to practical accuracy and certifies independently
DESIGN_TOL = 1e-6
DESIGN_MAX_ITERS = 100_000
# constraint tightening that absorbs first-order residuals; grown 10x on retry
TIGHTEN = 1e-5
TIGHTEN_RETRIES = 2


class InfeasibleSettings(ValueError):
    """Constraint parameters that provably admit no solution."""


def check_posreal_settings(cons: PassivityConstraintSet) -> None:
    """Reject ``epsilon > 2 rho0`` for the sampled positive-realness rows.

    With trapezoid weights the sampled rows average to ``2 g_0`` whenever
    ``m <= 2M``, and the decay bounds cap ``g_0`` at ``rho0``.
    """
    p = cons.params
    if cons.method != "posreal" or cons.m > 2 * p["M"]:
        return
    if p["epsilon"] > 2.0 * p["rho0"]:
        raise InfeasibleSettings(
            f"posreal constraints are infeasible: epsilon={p['epsilon']:.6g} exceeds "
            f"2*rho0={2 * p['rho0']:.6g}; increase M or give an explicit epsilon")


def design_solver_options() -> SolverOptions:
    return SolverOptions(abs_tol=DESIGN_TOL, rel_tol=DESIGN_TOL, max_iters=DESIGN_MAX_ITERS)


def tightened(problem: ConstrainedLSProblem, tau: float) -> ConstrainedLSProblem:
    """Shift coupled rows by ``tau`` and every PSD block by ``tau * I``.

    Single-variable rows are left alone since the solver enforces them exactly.
    """
    if tau <= 0:
        return problem
    A = problem.ineq_matrix
    coupled = np.diff(A.indptr) > 1
    bounds = problem.ineq_bounds + tau * coupled * np.maximum(1.0, np.abs(problem.ineq_bounds))
    blocks = [AffinePSD(b.f0 - tau * np.eye(b.size), b.op, b.name) for b in problem.psd_blocks]
    return ConstrainedLSProblem(problem.design_matrix, problem.target, A, bounds, blocks,
                                problem.n_vars, problem.ineq_labels)


@dataclass
class DesignConfig:
    """Design settings; ``None`` means "choose automatically".

    ``rho0`` defaults to ten times the largest unconstrained coefficient;
    ``n`` and ``M`` default to ``2m``. For ``toeplitz`` a missing ``epsilon``
    becomes ``1e-3 * rho0``; for ``posreal`` it selects the guaranteed bound.
    ``schedule`` picks how a failed margin check is refined: ``epsilon``
    raises epsilon by twice the observed deficit, ``order`` doubles n or M.
    """

    method: str = "posreal"
    m: int = 50
    n: Optional[int] = None
    M: Optional[int] = None
    rho0: Optional[float] = None
    rho: float = 1.0
    epsilon: Optional[float] = None
    gamma: Optional[float] = None
    ts: Optional[float] = None
    ref_num: Tuple[float, ...] = (0.1, 1.0)
    ref_den: Tuple[float, ...] = (0.0625, 0.5, 1.0)
    refine: bool = True
    max_refinements: int = 2
    schedule: str = "epsilon"

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.m < 1:
            raise ValueError("FIR order must be at least 1")
        if self.method == "kyp" and self.m < 2:
            raise ValueError("KYP design needs m >= 2")
        if self.n is not None and self.n < self.m:
            raise ValueError("Toeplitz order n must be at least m")
        if self.M is not None and self.M < 2:
            raise ValueError("M must be at least 2")
        if self.rho0 is not None and not self.rho0 > 0:
            raise ValueError("rho0 must be positive")
        if not 0 < self.rho <= 1:
            raise ValueError("rho must lie in (0, 1]")
        if self.epsilon is not None and self.epsilon < 0:
            raise ValueError("epsilon must be non-negative")
        if self.method == "toeplitz" and self.epsilon is not None and self.epsilon <= 0:
            raise ValueError("Toeplitz epsilon must be positive")
        if self.gamma is not None and self.gamma < 0:
            raise ValueError("fixed integral gain must be non-negative")
        if self.schedule not in SCHEDULES:
            raise ValueError(f"schedule must be one of {SCHEDULES}, got {self.schedule!r}")
        if self.ts is not None and not self.ts > 0:
            raise ValueError("ts must be positive")

    def reference_model(self, ts: float) -> DiscreteTransferFunction:
        cont = StateSpace.from_continuous_tf(self.ref_num, self.ref_den)
        return DiscreteTransferFunction.from_state_space(c2d_zoh(cont, ts))


@dataclass
class DesignResult:
    controller: IFIRController
    solution: Solution
    check: SolutionReport
    margin: float
    constraints: PassivityConstraintSet
    problem: ConstrainedLSProblem
    ls_controller: IFIRController
    assembly_time: float
    attempts: List[dict] = field(default_factory=list)

    @property
    def certified(self) -> bool:
        return (self.controller.gamma >= 0 and self.margin >= -PASSIVE_TOL
                and self.check.passed)

    def report(self) -> str:
        cons = self.constraints
        counts = cons.counts()
        sol = self.solution
        c = self.controller
        lines = [
            f"method               {cons.method}",
            f"m                    {cons.m}",
        ]
        for key in ("n", "M", "epsilon", "rho0", "rho", "delta"):
            if key in cons.params:
                lines.append(f"{key:<21}{cons.params[key]:.10g}")
        lines += [
            f"unknowns             {counts['unknowns'] - (0 if self.problem.n_vars == counts['unknowns'] else 1)}",
            f"linear constraints   {self.problem.n_ineqs}",
            f"psd blocks           {counts['psd_blocks']} (total size {counts['psd_sizes']})",
            f"status               {sol.status}",
            f"iterations           {sol.iterations}",
            f"primal residual      {sol.primal_residual:.3e}",
            f"dual residual        {sol.dual_residual:.3e}",
            f"assembly time s      {self.assembly_time:.4f}",
            f"solve time s         {sol.solve_time:.4f}",
            f"gamma                {c.gamma:.10g}",
            f"passivity margin     {self.margin:.6e} (grid {MARGIN_GRID}, threshold {-PASSIVE_TOL:g})",
            self.check.summary(),
            f"certified            {'yes' if self.certified else 'no'}",
        ]
        if len(self.attempts) > 1:
            lines.append("refinement attempts:")
            for a in self.attempts:
                lines.append("  " + ", ".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}"
                                              for k, v in a.items()))
        return "\n".join(lines)


def constraints_for(config: DesignConfig, rho0: float, n: Optional[int] = None,
                    M: Optional[int] = None, epsilon: Optional[float] = None
                    ) -> PassivityConstraintSet:
    m = config.m
    if config.method == "kyp":
        return kyp_constraints(m)
    if config.method == "toeplitz":
        eps = epsilon if epsilon is not None else (
            config.epsilon if config.epsilon is not None else 1e-3 * rho0)
        return finite_toeplitz_constraints(m, n or config.n or 2 * m, eps, rho0, config.rho)
    return posreal_constraints(m, M or config.M or 2 * m, rho0, config.rho,
                               epsilon if epsilon is not None else config.epsilon)


def build_problem(reg: RegressorSystem, cons: PassivityConstraintSet) -> ConstrainedLSProblem:
    """Combine the regression data with a constraint set.

    With a fixed integral gain the ``gamma`` column is removed from every
    constraint; the ``gamma >= 0`` row then becomes vacuous and is dropped.
    """
    if cons.m != reg.m:
        raise ValueError(f"constraint order {cons.m} differs from regressor order {reg.m}")
    ineq, bounds, labels = cons.ineq_matrix, cons.ineq_bounds, list(cons.ineq_labels)
    blocks = cons.psd_blocks
    n_vars = cons.n_vars
    if not reg.gamma_free:
        keep = np.array([j for j in range(cons.n_vars) if j != cons.m])
        ineq = sp.csr_matrix(ineq[:, keep])
        nonzero = np.diff(ineq.indptr) > 0
        ineq, bounds = ineq[nonzero], bounds[nonzero]
        labels = [lab for lab, k in zip(labels, nonzero) if k]
        blocks = [type(b)(b.f0, b.op[:, keep], b.name) for b in blocks]
        n_vars -= 1
    return ConstrainedLSProblem(reg.design_matrix(), reg.target, ineq, bounds, blocks,
                                n_vars, labels)


def controller_from(x: np.ndarray, reg: RegressorSystem) -> IFIRController:
    m = reg.m
    gamma = float(x[m]) if reg.gamma_free else float(reg.gamma)
    return IFIRController(gamma, x[:m], reg.ts)


def default_rho0(ls: IFIRController) -> float:
    peak = float(np.max(np.abs(ls.g)))
    return 10.0 * peak if peak > 0 else 1.0


def design_from_regressor(reg: RegressorSystem, config: DesignConfig,
                          options: Optional[SolverOptions] = None) -> DesignResult:
    """Solve the constrained fit and refine the relaxation until the margin check passes.

    Refinement applies to ``toeplitz`` and to ``posreal`` with an explicit
    epsilon, at most ``max_refinements`` times. The guaranteed-epsilon
    variant of ``posreal`` needs no refinement.
    """
    if config.m > reg.n_samples:
        raise ValueError("FIR order exceeds data length")
    g_ls, gamma_ls = least_squares_fit(reg)
    ls = IFIRController(gamma_ls, g_ls, reg.ts)
    rho0 = config.rho0 if config.rho0 is not None else default_rho0(ls)
    n = config.n or 2 * config.m
    M = config.M or 2 * config.m
    eps = config.epsilon
    if config.method == "toeplitz" and eps is None:
        eps = 1e-3 * rho0
    attempts: List[dict] = []
    result = None
    for attempt in range(config.max_refinements + 1):
        t0 = time.perf_counter()
        cons = constraints_for(config, rho0, n=n, M=M, epsilon=eps)
        check_posreal_settings(cons)
        problem = build_problem(reg, cons)
        assembly = time.perf_counter() - t0
        tau = TIGHTEN
        for _ in range(TIGHTEN_RETRIES + 1):
            sol = solve(tightened(problem, tau), options or design_solver_options())
            check = check_solution(problem, sol.x, CHECK_TOL)
            if check.passed:
                break
            tau *= 10.0
        controller = controller_from(sol.x, reg)
        margin = passivity_margin(controller.g, MARGIN_GRID)
        result = DesignResult(controller, sol, check, margin, cons, problem, ls, assembly,
                              attempts)
        info = {"method": cons.method, "status": sol.status, "margin": margin,
                "iterations": sol.iterations, "tighten": tau}
        info.update({k: cons.params[k] for k in ("n", "M", "epsilon") if k in cons.params})
        attempts.append(info)
        log.info("design attempt %d: %s", attempt, info)
        refinable = config.refine and (
            config.method == "toeplitz"
            or (config.method == "posreal" and config.epsilon is not None))
        if margin >= -PASSIVE_TOL or not refinable:
            break
        if config.schedule == "epsilon":
            eps = cons.params["epsilon"] + 2.0 * (-margin)
        else:
            n *= 2
            M *= 2
    return result


def vrft_regressor(u: SampledSignal, y: SampledSignal, config: DesignConfig
                   ) -> RegressorSystem:
    mr = config.reference_model(u.ts)
    u_f, e_f = virtual_error_filtered(u, y, mr)
    return assemble_problem(u_f, e_f, config.m, config.gamma)


def design_from_data(u: SampledSignal, y: SampledSignal, config: DesignConfig,
                     options: Optional[SolverOptions] = None) -> DesignResult:
    if config.ts is not None and abs(config.ts - u.ts) > 1e-9 * config.ts:
        raise ValueError(f"data sampling period {u.ts} differs from configured ts {config.ts}")
    return design_from_regressor(vrft_regressor(u, y, config), config, options)


def toeplitz_diagnostics(g: np.ndarray, orders=(1, 2, 4)) -> List[Tuple[int, float]]:
    m = len(g)
    return [(k * m, toeplitz_min_eig(g, k * m)) for k in orders]
