"""``passive-ifir`` command line: design, verify, simulate and bench."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from passive_ifir import bench as bench_mod
from passive_ifir.design import (METHODS, MARGIN_GRID, DesignConfig, InfeasibleSettings,
                                 design_from_data, design_solver_options)
from passive_ifir.files import (InputError, read_config, read_controller, read_data_csv,
                                read_signal_csv, write_columns_csv, write_controller)
from passive_ifir.lti import (DiscreteTransferFunction, SampledSignal, StateSpace, c2d_zoh,
                              simulate_lti, step_signal)
from passive_ifir.passivity import PASSIVE_TOL, passivity_margin, toeplitz_min_eig
from passive_ifir.plants import (CARTS, CARTS_NL, closed_loop_sim, rms, two_cart)
from passive_ifir.solver import SolverOptions

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NONCONVERGED = 3
EXIT_UNCERTIFIED = 4

log = logging.getLogger("passive_ifir")


def _coeff_list(text: str, what: str) -> List[float]:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise InputError(f"{what}: cannot parse {text!r}") from None
    if not vals or not np.all(np.isfinite(vals)):
        raise InputError(f"{what}: need at least one finite coefficient")
    return vals


def parse_plant(spec: str, ts: float):
    """``two-cart``, ``two-cart-nl`` or ``tf:<num>/<den>`` (z^-1 coefficients at ``ts``)."""
    if spec == "two-cart":
        return c2d_zoh(two_cart(CARTS), ts)
    if spec == "two-cart-nl":
        return two_cart(CARTS_NL)
    if spec.startswith("tf:"):
        num, sep, den = spec[3:].partition("/")
        if not sep:
            raise InputError("tf plant spec must look like tf:<num>/<den>")
        try:
            return DiscreteTransferFunction(_coeff_list(num, "plant numerator"),
                                            _coeff_list(den, "plant denominator"), ts)
        except ValueError as exc:
            raise InputError(f"invalid tf plant: {exc}") from None
    raise InputError(f"unknown plant spec {spec!r} (two-cart, two-cart-nl, tf:<num>/<den>)")


def _reference_model(num: Optional[str], den: Optional[str], ts: float):
    if num is None and den is None:
        return None
    cfg = DesignConfig()
    n = _coeff_list(num, "--ref-num") if num else list(cfg.ref_num)
    d = _coeff_list(den, "--ref-den") if den else list(cfg.ref_den)
    try:
        return c2d_zoh(StateSpace.from_continuous_tf(n, d), ts)
    except ValueError as exc:
        raise InputError(f"invalid reference model: {exc}") from None


# commands --------------------------------------------------------------------

def cmd_design(args) -> int:
    u, y = read_data_csv(args.data)
    config, solver_kw = read_config(args.config) if args.config else (DesignConfig(), {})
    if config.ts is not None and abs(config.ts - u.ts) > 1e-9 * config.ts:
        raise InputError(f"data ts={u.ts:.12g} does not match config ts={config.ts:.12g}")
    if config.m > len(u):
        raise InputError("FIR order exceeds data length")
    base = design_solver_options()
    options = SolverOptions(**{**base.__dict__, **solver_kw})
    try:
        result = design_from_data(u, y, config, options)
    except InfeasibleSettings as exc:
        raise InputError(str(exc)) from None
    write_controller(args.out, result.controller)
    report = result.report()
    report_path = Path(args.report) if args.report else Path(str(args.out) + ".report.txt")
    report_path.write_text(report + "\n", encoding="utf-8")
    print(report)
    if not result.solution.optimal:
        return EXIT_NONCONVERGED
    return EXIT_OK if result.certified else EXIT_UNCERTIFIED


def cmd_verify(args) -> int:
    c = read_controller(args.controller)
    if args.grid < 1000:
        raise InputError("--grid must be at least 1000")
    margin = passivity_margin(c.g, args.grid)
    gamma_ok = c.gamma >= 0
    margin_ok = margin >= -PASSIVE_TOL
    print(f"m                    {c.m}")
    print(f"ts                   {c.ts:.17g}")
    print(f"gamma >= 0           {'pass' if gamma_ok else 'FAIL'} (gamma = {c.gamma:.10g})")
    print(f"passivity margin     {margin:.6e} (grid {args.grid}, threshold {-PASSIVE_TOL:g})"
          f" {'pass' if margin_ok else 'FAIL'}")
    for k in (1, 2, 4):
        print(f"toeplitz min eig n={k * c.m:<5d}{toeplitz_min_eig(c.g, k * c.m):.6e}")
    certified = gamma_ok and margin_ok
    print(f"certified            {'yes' if certified else 'no'}")
    return EXIT_OK if certified else EXIT_UNCERTIFIED


def cmd_simulate(args) -> int:
    c = read_controller(args.controller)
    plant = parse_plant(args.plant, c.ts)
    if args.ref == "step":
        if args.horizon is None or args.horizon < 1:
            raise InputError("--horizon must be a positive sample count for a step reference")
        r = step_signal(args.horizon, c.ts)
    elif args.ref.startswith("csv:"):
        r = read_signal_csv(args.ref[4:], "r")
        if abs(r.ts - c.ts) > 1e-9 * c.ts:
            raise InputError(f"reference ts={r.ts:.12g} differs from controller ts={c.ts:.12g}")
        if args.horizon is not None:
            r = r.with_values(r.values[:args.horizon])
    else:
        raise InputError("--ref must be 'step' or 'csv:<path>'")
    try:
        y, u = closed_loop_sim(plant, c, r)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    write_columns_csv(args.out, {"t": r.time, "r": r.values, "u": u.values, "y": y.values})
    print(f"samples              {len(r)}")
    print(f"max |y|              {np.max(np.abs(y.values)):.6g}")
    mr = _reference_model(args.ref_num, args.ref_den, c.ts)
    if mr is not None:
        y_ref = simulate_lti(mr, r)
        print(f"rms(y - Mr r)        {rms(y.values - y_ref.values):.10g}")
    return EXIT_OK


def cmd_bench(args) -> int:
    try:
        orders = [int(v) for v in args.orders.split(",") if v.strip()]
    except ValueError:
        raise InputError(f"--orders: cannot parse {args.orders!r}") from None
    methods = [v.strip() for v in args.methods.split(",") if v.strip()]
    if args.methods == "all":
        methods = list(METHODS)
    bad = [m for m in methods if m not in METHODS]
    if bad or not methods:
        raise InputError(f"unknown methods {bad}; choose from {METHODS} or 'all'")
    if not orders or min(orders) < 2:
        raise InputError("--orders needs integers >= 2")
    if args.repeat < 1:
        raise InputError("--repeat must be positive")
    if args.data:
        u, y = read_data_csv(args.data)
    else:
        u, y = bench_mod.two_cart_probe_data()
    config, solver_kw = read_config(args.config) if args.config else (DesignConfig(), {})
    base = design_solver_options()
    options = SolverOptions(**{**base.__dict__, **solver_kw})
    rows = bench_mod.run_bench(u, y, orders, methods, args.repeat, config, options)
    print(bench_mod.format_table(rows))
    if args.csv:
        Path(args.csv).write_text(bench_mod.format_csv(rows), encoding="utf-8")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="passive-ifir",
                                description="Passive iFIR controller design from data.")
    p.add_argument("-v", "--verbose", action="store_true", help="log solver progress")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("design", help="design a controller from t,u,y data")
    d.add_argument("--data", required=True)
    d.add_argument("--config")
    d.add_argument("--out", required=True, help="controller file to write")
    d.add_argument("--report", help="report path (default <out>.report.txt)")
    d.set_defaults(func=cmd_design)

    v = sub.add_parser("verify", help="check passivity of a controller file")
    v.add_argument("--controller", required=True)
    v.add_argument("--grid", type=int, default=MARGIN_GRID)
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("simulate", help="closed-loop simulation")
    s.add_argument("--plant", required=True, help="two-cart | two-cart-nl | tf:<num>/<den>")
    s.add_argument("--controller", required=True)
    s.add_argument("--ref", default="step", help="step | csv:<path with t,r columns>")
    s.add_argument("--horizon", type=int, help="number of samples")
    s.add_argument("--out", required=True, help="trajectory CSV (t,r,u,y)")
    s.add_argument("--ref-num", help="continuous reference-model numerator, comma separated")
    s.add_argument("--ref-den", help="continuous reference-model denominator")
    s.set_defaults(func=cmd_simulate)

    b = sub.add_parser("bench", help="median solve time per method and order")
    b.add_argument("--orders", default="50,150")
    b.add_argument("--methods", default="all")
    b.add_argument("--data", help="t,u,y data (default: two-cart probe)")
    b.add_argument("--config")
    b.add_argument("--repeat", type=int, default=3)
    b.add_argument("--csv", help="also write the table as CSV")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
