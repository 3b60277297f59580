"""Discrete and continuous LTI representations, discretization and simulation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from scipy.linalg import expm

from passive_ifir import kernels

TS_RTOL = 1e-12


class TimebaseError(ValueError):
    """Sampling periods of two objects that must agree do not."""


def _same_ts(a: float, b: float) -> bool:
    return abs(a - b) <= TS_RTOL * max(abs(a), abs(b))


@dataclass(frozen=True)
class SampledSignal:
    """Uniformly sampled scalar time series."""

    values: np.ndarray
    ts: float

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float).reshape(-1)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if not (np.isfinite(self.ts) and self.ts > 0):
            raise ValueError(f"sampling period must be positive, got {self.ts}")
        if not np.all(np.isfinite(values)):
            raise ValueError("signal contains non-finite samples")

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def time(self) -> np.ndarray:
        return self.ts * np.arange(len(self))

    def with_values(self, values: np.ndarray) -> "SampledSignal":
        return SampledSignal(values, self.ts)


@dataclass(frozen=True)
class StateSpace:
    """Single-input single-output state-space model.

    ``ts`` is ``None`` for continuous time and the sampling period otherwise.
    """

    a_mat: np.ndarray
    b_vec: np.ndarray
    c_vec: np.ndarray
    d: float = 0.0
    ts: Optional[float] = None

    def __post_init__(self) -> None:
        a = np.atleast_2d(np.array(self.a_mat, dtype=float))
        n = a.shape[0]
        if a.size == 0:
            a = np.zeros((0, 0))
            n = 0
        b = np.array(self.b_vec, dtype=float).reshape(n, 1)
        c = np.array(self.c_vec, dtype=float).reshape(1, n)
        if a.shape != (n, n):
            raise ValueError(f"state matrix must be square, got {a.shape}")
        for name, arr in (("a_mat", a), ("b_vec", b), ("c_vec", c)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} has non-finite entries")
            arr.setflags(write=False)
        if not math.isfinite(self.d):
            raise ValueError("feedthrough must be finite")
        if self.ts is not None and not self.ts > 0:
            raise ValueError(f"discrete sampling period must be positive, got {self.ts}")
        object.__setattr__(self, "a_mat", a)
        object.__setattr__(self, "b_vec", b)
        object.__setattr__(self, "c_vec", c)
        object.__setattr__(self, "d", float(self.d))

    @property
    def order(self) -> int:
        return self.a_mat.shape[0]

    @property
    def is_discrete(self) -> bool:
        return self.ts is not None

    def dc_gain(self) -> float:
        n = self.order
        if n == 0:
            return self.d
        if self.is_discrete:
            lhs = np.eye(n) - self.a_mat
        else:
            lhs = -self.a_mat
        return float(self.c_vec @ np.linalg.solve(lhs, self.b_vec)) + self.d

    def freq_response(self, w: np.ndarray) -> np.ndarray:
        """Frequency response at ``w`` (rad/s for continuous, rad/sample for discrete)."""
        w = np.atleast_1d(np.asarray(w, dtype=float))
        s = np.exp(1j * w) if self.is_discrete else 1j * w
        n = self.order
        out = np.empty(w.shape, dtype=complex)
        for i, si in enumerate(s):
            if n == 0:
                out[i] = self.d
            else:
                x = np.linalg.solve(si * np.eye(n) - self.a_mat, self.b_vec)
                out[i] = (self.c_vec @ x).item() + self.d
        return out

    @classmethod
    def from_continuous_tf(cls, num: Sequence[float], den: Sequence[float]) -> "StateSpace":
        """Controllable canonical realization of ``num(s)/den(s)`` (descending powers)."""
        num = np.trim_zeros(np.asarray(num, dtype=float), "f")
        den = np.trim_zeros(np.asarray(den, dtype=float), "f")
        if den.size == 0:
            raise ValueError("denominator is zero")
        if num.size > den.size:
            raise ValueError("improper transfer function")
        num = num / den[0]
        den = den / den[0]
        n = den.size - 1
        num = np.concatenate([np.zeros(n + 1 - num.size), num])
        d = num[0]
        resid = num[1:] - d * den[1:]
        a = np.zeros((n, n))
        if n:
            a[0, :] = -den[1:]
            a[1:, :-1] = np.eye(n - 1)
        b = np.zeros(n)
        if n:
            b[0] = 1.0
        return cls(a, b, resid, d)


@dataclass(frozen=True)
class DiscreteTransferFunction:
    """``num(z^-1)/den(z^-1)`` with coefficients ordered by increasing delay."""

    num: np.ndarray
    den: np.ndarray
    ts: float

    def __post_init__(self) -> None:
        num = np.array(self.num, dtype=float).reshape(-1)
        den = np.array(self.den, dtype=float).reshape(-1)
        if num.size == 0:
            num = np.zeros(1)
        if den.size == 0 or den[0] == 0:
            raise ValueError("leading denominator coefficient must be nonzero")
        if not (np.all(np.isfinite(num)) and np.all(np.isfinite(den))):
            raise ValueError("coefficients must be finite")
        if not self.ts > 0:
            raise ValueError(f"sampling period must be positive, got {self.ts}")
        num.setflags(write=False)
        den.setflags(write=False)
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)

    @property
    def feedthrough(self) -> float:
        return float(self.num[0] / self.den[0])

    def freq_response(self, theta: np.ndarray) -> np.ndarray:
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        zinv = np.exp(-1j * theta)
        return np.polyval(self.num[::-1], zinv) / np.polyval(self.den[::-1], zinv)

    def dc_gain(self) -> float:
        return float(np.sum(self.num) / np.sum(self.den))

    def poles(self) -> np.ndarray:
        den = np.trim_zeros(self.den, "b")
        if den.size <= 1:
            return np.zeros(0, dtype=complex)
        return np.roots(den)

    def is_stable(self, margin: float = 1.0 - 1e-9) -> bool:
        p = self.poles()
        return bool(p.size == 0 or np.max(np.abs(p)) < margin)

    def to_state_space(self) -> StateSpace:
        size = max(self.num.size, self.den.size)
        num = np.concatenate([self.num, np.zeros(size - self.num.size)]) / self.den[0]
        den = np.concatenate([self.den, np.zeros(size - self.den.size)]) / self.den[0]
        realization = StateSpace.from_continuous_tf(num, den)
        return StateSpace(realization.a_mat, realization.b_vec, realization.c_vec,
                          realization.d, ts=self.ts)

    @classmethod
    def from_state_space(cls, sys: StateSpace) -> "DiscreteTransferFunction":
        if not sys.is_discrete:
            raise ValueError("state-space model must be discrete")
        n = sys.order
        if n == 0:
            return cls([sys.d], [1.0], sys.ts)
        den = np.poly(sys.a_mat).real
        # numerator of C (zI - A)^-1 B + D, written in z^-1 powers
        num = np.poly(sys.a_mat - sys.b_vec @ sys.c_vec).real - den + sys.d * den
        return cls(num, den, sys.ts)


LinearSystem = Union[StateSpace, DiscreteTransferFunction]


def c2d_zoh(sys: StateSpace, ts: float) -> StateSpace:
    """Exact zero-order-hold discretization via the augmented matrix exponential."""
    if sys.is_discrete:
        raise ValueError("system is already discrete")
    if not ts > 0:
        raise ValueError(f"sampling period must be positive, got {ts}")
    n = sys.order
    aug = np.zeros((n + 1, n + 1))
    aug[:n, :n] = sys.a_mat * ts
    aug[:n, n:] = sys.b_vec * ts
    phi = expm(aug)
    if not np.all(np.isfinite(phi)):
        raise FloatingPointError("matrix exponential did not produce finite entries")
    return StateSpace(phi[:n, :n], phi[:n, n:], sys.c_vec, sys.d, ts=ts)


def backward_euler_integrator(gamma: float, ts: float, certified: bool = False
                              ) -> DiscreteTransferFunction:
    """``gamma*ts / (1 - z^-1)``."""
    if not ts > 0:
        raise ValueError(f"sampling period must be positive, got {ts}")
    if certified and gamma < 0:
        raise ValueError("integral gain must be non-negative for a passive controller")
    return DiscreteTransferFunction([gamma * ts], [1.0, -1.0], ts)


def _as_discrete_ss(sys: LinearSystem) -> StateSpace:
    if isinstance(sys, DiscreteTransferFunction):
        return sys.to_state_space()
    if not sys.is_discrete:
        raise ValueError("simulate a discretized model; continuous simulation is not supported")
    return sys


def simulate_lti(sys: LinearSystem, u: SampledSignal) -> SampledSignal:
    """Zero-initial-state response of a discrete system to ``u``."""
    if isinstance(sys, DiscreteTransferFunction):
        if not _same_ts(sys.ts, u.ts):
            raise TimebaseError(f"system ts={sys.ts} differs from signal ts={u.ts}")
        return u.with_values(kernels.tf_filter(sys.num, sys.den, u.values))
    ss = _as_discrete_ss(sys)
    if not _same_ts(ss.ts, u.ts):
        raise TimebaseError(f"system ts={ss.ts} differs from signal ts={u.ts}")
    return u.with_values(kernels.ss_filter(ss.a_mat, ss.b_vec[:, 0], ss.c_vec[0], ss.d,
                                           u.values))


def fir_freq_response(g: Sequence[float], theta: Union[float, np.ndarray]):
    """``sum_k g_k exp(-j k theta)``; scalar in, scalar out."""
    g = np.asarray(g, dtype=float)
    th = np.asarray(theta, dtype=float)
    if not np.all(np.isfinite(th)):
        raise ValueError("theta must be finite")
    out = np.exp(-1j * np.multiply.outer(th, np.arange(g.size))) @ g
    return complex(out) if th.ndim == 0 else out


def impulse(n: int, ts: float) -> SampledSignal:
    v = np.zeros(n)
    v[0] = 1.0
    return SampledSignal(v, ts)


def step_signal(n: int, ts: float) -> SampledSignal:
    if n < 1:
        raise ValueError("signal length must be at least 1")
    return SampledSignal(np.ones(n), ts)


def sine_probe(omegas: Sequence[float], n: int, ts: float) -> SampledSignal:
    """Sum of unit sinusoids ``sum_i sin(omega_i * ts * t)`` for ``t = 0..n-1``."""
    omegas = np.asarray(omegas, dtype=float).reshape(-1)
    if omegas.size == 0:
        raise ValueError("frequency list is empty")
    if n < 1:
        raise ValueError("signal length must be at least 1")
    t = np.arange(n)
    return SampledSignal(np.sin(np.outer(t * ts, omegas)).sum(axis=1), ts)


def feedback_loop(p: DiscreteTransferFunction, c: DiscreteTransferFunction
                  ) -> DiscreteTransferFunction:
    """Complementary sensitivity ``PC / (1 + PC)`` as a transfer function."""
    if not _same_ts(p.ts, c.ts):
        raise TimebaseError(f"plant ts={p.ts} differs from controller ts={c.ts}")
    num = np.convolve(p.num, c.num)
    den = np.polyadd(np.convolve(p.den, c.den)[::-1], num[::-1])[::-1]
    den = np.concatenate([den, np.zeros(max(0, num.size - den.size))])
    if abs(den[0]) <= 1e-12 * max(1.0, np.max(np.abs(den))):
        raise ValueError("closed loop is ill-posed: 1 + P(inf) C(inf) = 0")
    return DiscreteTransferFunction(num, den, p.ts)


def h2_matching_distance(mr: LinearSystem, p: LinearSystem, c, horizon: int) -> float:
    """Truncated impulse-response energy of ``M_r - PC/(1+PC)``.

    ``c`` is an :class:`~passive_ifir.passivity.IFIRController` or a
    :class:`DiscreteTransferFunction`.
    """
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    mr_tf = mr if isinstance(mr, DiscreteTransferFunction) else \
        DiscreteTransferFunction.from_state_space(mr)
    p_tf = p if isinstance(p, DiscreteTransferFunction) else \
        DiscreteTransferFunction.from_state_space(p)
    c_tf = c if isinstance(c, DiscreteTransferFunction) else c.to_transfer_function()
    loop = feedback_loop(p_tf, c_tf)
    delta = impulse(horizon, mr_tf.ts)
    h = simulate_lti(mr_tf, delta).values - simulate_lti(loop, delta).values
    return float(np.sqrt(np.sum(h * h)))
