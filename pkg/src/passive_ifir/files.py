"""Stable text formats: data CSV, controller files and design configs."""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path
from typing import Dict, Tuple, Union

import numpy as np

from passive_ifir.design import DesignConfig
from passive_ifir.lti import SampledSignal
from passive_ifir.passivity import IFIRController

PathLike = Union[str, Path]

CONTROLLER_MAGIC = "ifir-v1"
DATA_HEADER = ("t", "u", "y")
UNIFORM_RTOL = 1e-9


class InputError(ValueError):
    """Malformed or inconsistent user input (CLI exit code 2)."""


def _fmt(value: float) -> str:
    return f"{value:.17g}"


def _float(text: str, what: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise InputError(f"{what}: cannot parse {text!r} as a number") from None
    if not math.isfinite(value):
        raise InputError(f"{what}: value must be finite, got {text!r}")
    return value


def _int(text: str, what: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise InputError(f"{what}: cannot parse {text!r} as an integer") from None


# data CSV ------------------------------------------------------------------

def uniform_ts(t: np.ndarray, rtol: float = UNIFORM_RTOL) -> float:
    if t.size < 2:
        raise InputError("at least two samples are needed to infer ts")
    steps = np.diff(t)
    ts = (t[-1] - t[0]) / (t.size - 1)
    if not ts > 0:
        raise InputError("time column must be increasing")
    if np.max(np.abs(steps - ts)) > rtol * ts:
        raise InputError("time grid is not uniform (tolerance 1e-9 relative)")
    return float(ts)


def read_data_csv(path: PathLike) -> Tuple[SampledSignal, SampledSignal]:
    """Read a ``t,u,y`` file; returns ``(u, y)`` sharing the inferred ``ts``."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read data file {path}: {exc}") from None
    rows = list(csv.reader(io.StringIO(text)))
    rows = [r for r in rows if r]
    if not rows:
        raise InputError(f"data file {path} is empty")
    header = tuple(c.strip() for c in rows[0])
    if header != DATA_HEADER:
        raise InputError(f"data header must be 't,u,y', got {','.join(header)!r}")
    if len(rows) < 3:
        raise InputError("data file needs at least two samples")
    values = np.empty((len(rows) - 1, 3))
    for i, row in enumerate(rows[1:]):
        if len(row) != 3:
            raise InputError(f"line {i + 2}: expected 3 columns, got {len(row)}")
        for j, cell in enumerate(row):
            values[i, j] = _float(cell.strip(), f"line {i + 2}")
    ts = uniform_ts(values[:, 0])
    return SampledSignal(values[:, 1], ts), SampledSignal(values[:, 2], ts)


def write_data_csv(path: PathLike, u: SampledSignal, y: SampledSignal) -> None:
    if len(u) != len(y):
        raise ValueError("u and y must have the same length")
    lines = [",".join(DATA_HEADER)]
    t = u.time
    lines += [f"{_fmt(a)},{_fmt(b)},{_fmt(c)}" for a, b, c in zip(t, u.values, y.values)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_columns_csv(path: PathLike, columns: Dict[str, np.ndarray]) -> None:
    names = list(columns)
    data = np.column_stack([np.asarray(columns[k], dtype=float) for k in names])
    lines = [",".join(names)] + [",".join(_fmt(v) for v in row) for row in data]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_signal_csv(path: PathLike, column: str = "r") -> SampledSignal:
    """Read a ``t,<column>`` file (used for reference signals)."""
    try:
        rows = [r for r in csv.reader(io.StringIO(Path(path).read_text(encoding="utf-8"))) if r]
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    if not rows or [c.strip() for c in rows[0]] != ["t", column]:
        raise InputError(f"{path}: header must be 't,{column}'")
    vals = np.array([[_float(c.strip(), str(path)) for c in r] for r in rows[1:]])
    if vals.ndim != 2 or vals.shape[1] != 2 or vals.shape[0] < 2:
        raise InputError(f"{path}: expected at least two rows of 2 columns")
    return SampledSignal(vals[:, 1], uniform_ts(vals[:, 0]))


# controller file -------------------------------------------------------------

def format_controller(c: IFIRController) -> str:
    lines = [CONTROLLER_MAGIC, f"ts={_fmt(c.ts)}", f"gamma={_fmt(c.gamma)}", f"m={c.m}"]
    lines += [f"g{k}={_fmt(v)}" for k, v in enumerate(c.g)]
    return "\n".join(lines) + "\n"


def parse_controller(text: str) -> IFIRController:
    lines = [ln.strip() for ln in text.strip().splitlines()]
    if not lines or lines[0] != CONTROLLER_MAGIC:
        raise InputError(f"controller file must start with {CONTROLLER_MAGIC!r}")
    fields = {}
    for ln in lines[1:]:
        key, sep, val = ln.partition("=")
        if not sep:
            raise InputError(f"malformed controller line {ln!r}")
        fields[key.strip()] = val.strip()
    for key in ("ts", "gamma", "m"):
        if key not in fields:
            raise InputError(f"controller file lacks {key!r}")
    m = _int(fields["m"], "m")
    if m < 1:
        raise InputError("controller order m must be positive")
    expected = {"ts", "gamma", "m"} | {f"g{k}" for k in range(m)}
    extra = set(fields) - expected
    missing = expected - set(fields)
    if extra or missing:
        raise InputError(f"controller coefficients inconsistent with m={m}"
                         f" (missing {sorted(missing)}, unexpected {sorted(extra)})")
    g = [_float(fields[f"g{k}"], f"g{k}") for k in range(m)]
    ts = _float(fields["ts"], "ts")
    if not ts > 0:
        raise InputError("ts must be positive")
    return IFIRController(_float(fields["gamma"], "gamma"), g, ts)


def write_controller(path: PathLike, c: IFIRController) -> None:
    Path(path).write_text(format_controller(c), encoding="utf-8")


def read_controller(path: PathLike) -> IFIRController:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read controller file {path}: {exc}") from None
    return parse_controller(text)


# design config ---------------------------------------------------------------

_SOLVER_KEYS = {"abs_tol": float, "rel_tol": float, "max_iters": int, "time_limit": float}
_CONFIG_KEYS = {"method", "m", "n", "M", "rho0", "rho", "epsilon", "gamma", "ts",
                "ref_num", "ref_den", "discretization", "refine", "max_refinements",
                "schedule"}


def _coeffs(text: str, what: str) -> Tuple[float, ...]:
    parts = [p for p in text.replace(" ", "").split(",") if p]
    if not parts:
        raise InputError(f"{what}: empty coefficient list")
    return tuple(_float(p, what) for p in parts)


def parse_config(text: str) -> Tuple[DesignConfig, dict]:
    """Parse ``key=value`` lines into a config and solver-option overrides.

    ``#`` starts a comment. Unknown keys are errors.
    """
    raw: Dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if not sep or not key:
            raise InputError(f"config line {lineno}: expected key=value")
        if key not in _CONFIG_KEYS and key not in _SOLVER_KEYS:
            raise InputError(f"config line {lineno}: unknown key {key!r}")
        if key in raw:
            raise InputError(f"config line {lineno}: duplicate key {key!r}")
        raw[key] = val

    kw = {}
    for key in ("method", "schedule"):
        if key in raw:
            kw[key] = raw[key]
    for key in ("m", "n", "M", "max_refinements"):
        if key in raw:
            kw[key] = _int(raw[key], key)
    for key in ("rho0", "rho", "ts"):
        if key in raw:
            kw[key] = _float(raw[key], key)
    if raw.get("epsilon", "auto") != "auto":
        kw["epsilon"] = _float(raw["epsilon"], "epsilon")
    if raw.get("gamma", "free") != "free":
        kw["gamma"] = _float(raw["gamma"], "gamma")
    for key in ("ref_num", "ref_den"):
        if key in raw:
            kw[key] = _coeffs(raw[key], key)
    if raw.get("discretization", "zoh") != "zoh":
        raise InputError("only discretization=zoh is supported")
    if "refine" in raw:
        if raw["refine"] not in ("true", "false"):
            raise InputError("refine must be true or false")
        kw["refine"] = raw["refine"] == "true"
    try:
        config = DesignConfig(**kw)
    except ValueError as exc:
        raise InputError(f"invalid config: {exc}") from None

    opts = {}
    for key, conv in _SOLVER_KEYS.items():
        if key in raw:
            opts[key] = _int(raw[key], key) if conv is int else _float(raw[key], key)
    return config, opts


def read_config(path: PathLike) -> Tuple[DesignConfig, dict]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read config file {path}: {exc}") from None
    return parse_config(text)
