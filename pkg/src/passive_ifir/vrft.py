"""Virtual-reference least-squares problem from open-loop data."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Tuple, Union

import numpy as np

from passive_ifir.lti import (DiscreteTransferFunction, SampledSignal, StateSpace,
                              TimebaseError, _same_ts, simulate_lti)

PreFilter = Callable[[SampledSignal], SampledSignal]


@dataclass(frozen=True)
class RegressorSystem:
    """Least-squares data ``target ~ e_mat @ g + gamma * e_int``.

    When ``gamma`` is set the integral term has been folded into ``target``
    and only ``g`` is unknown.
    """

    e_mat: np.ndarray
    e_int: np.ndarray
    target: np.ndarray
    ts: float
    gamma: Optional[float] = None

    @property
    def m(self) -> int:
        return self.e_mat.shape[1]

    @property
    def n_samples(self) -> int:
        return self.e_mat.shape[0]

    @property
    def gamma_free(self) -> bool:
        return self.gamma is None

    def design_matrix(self) -> np.ndarray:
        """Columns ordered ``[g_0 .. g_{m-1}, gamma]`` (gamma only when free)."""
        if self.gamma_free:
            return np.column_stack([self.e_mat, self.e_int])
        return self.e_mat

    def objective(self, g: np.ndarray, gamma: float = 0.0) -> float:
        if not self.gamma_free:
            gamma = 0.0
        r = self.target - self.e_mat @ g - gamma * self.e_int
        return float(r @ r)


def _check_stable(mr: DiscreteTransferFunction) -> None:
    if not mr.is_stable():
        raise ValueError("reference model must have all poles strictly inside the unit circle")


def virtual_error_filtered(u: SampledSignal, y: SampledSignal,
                           mr: Union[DiscreteTransferFunction, StateSpace],
                           prefilter: Optional[PreFilter] = None
                           ) -> Tuple[SampledSignal, SampledSignal]:
    """Filtered VRFT signals ``(M_r u, y - M_r y)``.

    ``prefilter`` is applied to both ``u`` and ``y`` first when given.
    """
    if len(u) != len(y):
        raise ValueError(f"input has {len(u)} samples, output has {len(y)}")
    if not _same_ts(u.ts, y.ts):
        raise TimebaseError(f"input ts={u.ts} differs from output ts={y.ts}")
    if isinstance(mr, StateSpace):
        mr = DiscreteTransferFunction.from_state_space(mr)
    if not _same_ts(mr.ts, u.ts):
        raise TimebaseError(f"reference model ts={mr.ts} differs from data ts={u.ts}")
    _check_stable(mr)
    if prefilter is not None:
        u, y = prefilter(u), prefilter(y)
    u_f = simulate_lti(mr, u)
    e_f = y.with_values(y.values - simulate_lti(mr, y).values)
    return u_f, e_f


def build_regressor(e: Union[SampledSignal, np.ndarray], m: int) -> np.ndarray:
    """Banded causal matrix whose column ``k`` is ``e`` delayed by ``k`` samples."""
    values = e.values if isinstance(e, SampledSignal) else np.asarray(e, dtype=float)
    n = values.shape[0]
    if not 1 <= m <= n:
        raise ValueError(f"FIR order must satisfy 1 <= m <= N={n}, got {m}")
    out = np.zeros((n, m))
    for k in range(m):
        out[k:, k] = values[:n - k]
    return out


def build_integral_regressor(e: SampledSignal) -> np.ndarray:
    return e.ts * np.cumsum(e.values)


def assemble_problem(u_f: SampledSignal, e_f: SampledSignal, m: int,
                     gamma: Optional[float] = None) -> RegressorSystem:
    """Stack the regressors; ``gamma=None`` leaves the integral gain free."""
    if len(u_f) != len(e_f):
        raise ValueError("filtered signals are not aligned")
    if not _same_ts(u_f.ts, e_f.ts):
        raise TimebaseError(f"u_f ts={u_f.ts} differs from e_f ts={e_f.ts}")
    if gamma is not None and gamma < 0:
        raise ValueError("fixed integral gain must be non-negative")
    e_mat = build_regressor(e_f, m)
    e_int = build_integral_regressor(e_f)
    target = np.array(u_f.values)
    if gamma is not None:
        target = target - gamma * e_int
    return RegressorSystem(e_mat, e_int, target, e_f.ts, gamma)


def least_squares_fit(reg: RegressorSystem) -> Tuple[np.ndarray, float]:
    """Unconstrained minimum-norm fit; returns ``(g, gamma)``."""
    sol, *_ = np.linalg.lstsq(reg.design_matrix(), reg.target, rcond=None)
    if reg.gamma_free:
        return sol[:-1], float(sol[-1])
    return sol, float(reg.gamma)
