"""Solve-time comparison of the three passivity formulations."""

from __future__ import annotations

import statistics
import time
from dataclasses import dataclass, replace
from typing import Iterable, List, Optional, Sequence

import numpy as np

from passive_ifir.design import (DesignConfig, build_problem, constraints_for,
                                 controller_from, default_rho0, design_solver_options,
                                 tightened, TIGHTEN, vrft_regressor)
from passive_ifir.lti import SampledSignal
from passive_ifir.passivity import IFIRController, passivity_margin
from passive_ifir.plants import probe_signal, plant_response, two_cart
from passive_ifir.solver import SolverOptions, solve
from passive_ifir.vrft import least_squares_fit


@dataclass
class BenchRow:
    method: str
    m: int
    size: int
    assembly_s: float
    median_s: float
    iterations: int
    objective: float
    margin: float
    status: str
    error: str = ""


def two_cart_probe_data() -> tuple:
    """Noise-free open-loop probe of the linear two-cart plant."""
    u = probe_signal()
    return u, plant_response(two_cart(), u)


def bench_config(method: str, m: int, base: DesignConfig) -> DesignConfig:
    # one-to-one relaxation sizes; posreal needs a heuristic epsilon when M = m
    kw = {"method": method, "m": m, "refine": False}
    if method == "toeplitz":
        kw["n"] = m
    elif method == "posreal":
        kw["M"] = m
    return replace(base, **kw)


def run_bench(u: SampledSignal, y: SampledSignal, orders: Sequence[int],
              methods: Iterable[str], repeat: int = 3, base: Optional[DesignConfig] = None,
              options: Optional[SolverOptions] = None) -> List[BenchRow]:
    base = base or DesignConfig()
    options = options or design_solver_options()
    rows = []
    for m in orders:
        reg = vrft_regressor(u, y, replace(base, m=m))
        g_ls, gamma_ls = least_squares_fit(reg)
        rho0 = base.rho0 or default_rho0(IFIRController(gamma_ls, g_ls, reg.ts))
        for method in methods:
            cfg = bench_config(method, m, base)
            if method == "posreal" and cfg.epsilon is None:
                cfg = replace(cfg, epsilon=1e-3 * rho0)
            try:
                t0 = time.perf_counter()
                cons = constraints_for(cfg, rho0)
                problem = tightened(build_problem(reg, cons), TIGHTEN)
                assembly = time.perf_counter() - t0
                times, sol = [], None
                for _ in range(repeat):
                    sol = solve(problem, options)
                    times.append(sol.solve_time)
                c = controller_from(sol.x, reg)
                rows.append(BenchRow(method, m, problem.n_vars, assembly,
                                     statistics.median(times), sol.iterations,
                                     sol.objective, passivity_margin(c.g), sol.status))
            except Exception as exc:  # recorded in-table, not fatal
                rows.append(BenchRow(method, m, 0, float("nan"), float("nan"), 0,
                                     float("nan"), float("nan"), "error",
                                     f"{type(exc).__name__}: {exc}"))
    return rows


COLUMNS = ("method", "m", "size", "assembly_s", "median_s", "iterations", "objective",
           "margin", "status", "error")


def _cell(value) -> str:
    if isinstance(value, float):
        return f"{value:.4g}"
    return str(value)


def format_table(rows: Sequence[BenchRow]) -> str:
    cells = [list(COLUMNS)] + [[_cell(getattr(r, k)) for k in COLUMNS] for r in rows]
    widths = [max(len(row[j]) for row in cells) for j in range(len(COLUMNS))]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip()
                     for row in cells)


def format_csv(rows: Sequence[BenchRow]) -> str:
    lines = [",".join(COLUMNS)]
    for r in rows:
        vals = []
        for k in COLUMNS:
            v = getattr(r, k)
            v = f"{v:.17g}" if isinstance(v, float) else str(v)
            vals.append('"' + v.replace('"', "'") + '"' if "," in v else v)
        lines.append(",".join(vals))
    return "\n".join(lines) + "\n"


def ordering_holds(rows: Sequence[BenchRow], m: int) -> bool:
    t = {r.method: r.median_s for r in rows if r.m == m}
    return bool(np.all(np.isfinite([t.get(k, np.nan) for k in ("posreal", "toeplitz", "kyp")]))
                and t["posreal"] < t["toeplitz"] < t["kyp"])
