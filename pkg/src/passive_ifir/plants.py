"""Example plants, reference models, probe signals and closed-loop simulation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Tuple, Union

import numpy as np

from passive_ifir import kernels
from passive_ifir.lti import (DiscreteTransferFunction, SampledSignal, StateSpace,
                              TimebaseError, _same_ts, c2d_zoh, sine_probe, simulate_lti,
                              step_signal)
from passive_ifir.passivity import IFIRController

DEFAULT_TS = 0.05
PROBE_OMEGAS = np.linspace(0.5, 10.0, 10)
PROBE_SAMPLES = 2001
PID_GAINS_MR1 = (0.8051, 4.4090, 0.0068)
PID_GAINS_MR2 = (2.6142, 10.2330, 0.0232)
RK4_SUBSTEPS = 10


@dataclass(frozen=True)
class TwoCartParams:
    """Two carts joined by a spring-damper, force on cart 1, output ``v1``."""

    m1: float = 3.0
    m2: float = 0.5
    k12: float = 1.0
    c12: float = 1.05
    c: float = 0.5
    piecewise: bool = False
    threshold: float = 0.5
    slope_small: float = 1.0
    slope_large: float = 2.0

    def __post_init__(self) -> None:
        for name in ("m1", "m2", "c12", "c", "threshold"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")

    def as_tuple(self) -> tuple:
        return (self.m1, self.m2, self.k12, self.c12, self.c, self.threshold,
                self.slope_small, self.slope_large, self.piecewise)

    def spring_force(self, delta: float) -> float:
        return kernels.spring_force(delta, self.k12, self.threshold, self.slope_small,
                                    self.slope_large, self.piecewise)

    def storage(self, state: np.ndarray) -> float:
        """Kinetic plus spring energy."""
        v1, v2, dl = state
        if self.piecewise:
            a = abs(dl)
            thr = self.threshold
            if a <= thr:
                spring = 0.5 * self.slope_small * a * a
            else:
                spring = (0.5 * self.slope_small * thr * thr + self.slope_small * thr * (a - thr)
                          + 0.5 * self.slope_large * (a - thr) ** 2)
        else:
            spring = 0.5 * self.k12 * dl * dl
        return 0.5 * self.m1 * v1 * v1 + 0.5 * self.m2 * v2 * v2 + spring


CARTS = TwoCartParams()
CARTS_NL = TwoCartParams(piecewise=True)


@dataclass(frozen=True)
class NonlinearPlant:
    """Continuous-time plant ``x' = f(x, u)``, ``y = h(x)`` started from rest."""

    state_dim: int
    derivative: Callable[[np.ndarray, float], np.ndarray]
    output: Callable[[np.ndarray], float]
    params: Optional[TwoCartParams] = None

    def simulate(self, u: SampledSignal, substeps: int = RK4_SUBSTEPS) -> SampledSignal:
        """Open-loop response with the input held between samples."""
        if self.params is not None:
            y = kernels.two_cart_open_loop(self.params.as_tuple(), u.values, u.ts, substeps)
            return u.with_values(y)
        x = np.zeros(self.state_dim)
        out = np.empty(len(u))
        for t, ut in enumerate(u.values):
            out[t] = self.output(x)
            x = _rk4_hold(self.derivative, x, ut, u.ts / substeps, substeps)
        return u.with_values(out)


def _rk4_hold(f, x, u, h, substeps):
    for _ in range(substeps):
        k1 = f(x, u)
        k2 = f(x + 0.5 * h * k1, u)
        k3 = f(x + 0.5 * h * k2, u)
        k4 = f(x + h * k3, u)
        x = x + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return x


def target_filter(q: int) -> StateSpace:
    """``1 / (0.5 s + 1)^q``."""
    if q not in (1, 2, 3):
        raise ValueError(f"target index must be 1, 2 or 3, got {q}")
    den = np.poly1d([1.0])
    for _ in range(q):
        den = den * np.poly1d([0.5, 1.0])
    return StateSpace.from_continuous_tf([1.0], den.coeffs)


def _probe_lag() -> np.poly1d:
    return np.poly1d([0.2, 1.0])


def _sampled_step(sys: StateSpace, n: int, ts: float) -> SampledSignal:
    # a unit step is piecewise constant, so the ZOH model samples it exactly
    return simulate_lti(c2d_zoh(sys, ts), step_signal(n, ts))


def filtered_step_probe(n: int, ts: float = DEFAULT_TS) -> SampledSignal:
    """Samples of the unit step response of ``1/(0.2 s + 1)``."""
    return _sampled_step(StateSpace.from_continuous_tf([1.0], _probe_lag().coeffs), n, ts)


def _fitting_cascade(q: int) -> StateSpace:
    den = np.poly1d([1.0])
    for _ in range(q):
        den = den * np.poly1d([0.5, 1.0])
    return StateSpace.from_continuous_tf([1.0], (den * _probe_lag()).coeffs)


def fitting_data(q: int, n: int = 401, ts: float = DEFAULT_TS
                 ) -> Tuple[SampledSignal, SampledSignal]:
    """``(e, u)`` with ``u`` the exact sampled output of ``C_q`` driven by the probe."""
    target_filter(q)
    return filtered_step_probe(n, ts), _sampled_step(_fitting_cascade(q), n, ts)


def fitting_target_response(q: int, theta: np.ndarray, ts: float = DEFAULT_TS) -> np.ndarray:
    """Frequency response of the discrete map from sampled probe to sampled ``u``."""
    probe = c2d_zoh(StateSpace.from_continuous_tf([1.0], _probe_lag().coeffs), ts)
    cascade = c2d_zoh(_fitting_cascade(q), ts)
    return cascade.freq_response(theta) / probe.freq_response(theta)


def two_cart(params: TwoCartParams = CARTS) -> Union[StateSpace, NonlinearPlant]:
    """States ``(v1, v2, delta)``; force input on cart 1; output ``v1``."""
    p = params
    if not p.piecewise:
        a = np.array([
            [-(p.c12 + p.c) / p.m1, p.c12 / p.m1, -p.k12 / p.m1],
            [p.c12 / p.m2, -(p.c12 + p.c) / p.m2, p.k12 / p.m2],
            [1.0, -1.0, 0.0],
        ])
        return StateSpace(a, [1.0 / p.m1, 0.0, 0.0], [1.0, 0.0, 0.0], 0.0)

    def derivative(x: np.ndarray, u: float) -> np.ndarray:
        v1, v2, dl = x
        fk = p.spring_force(dl)
        fd = p.c12 * (v1 - v2)
        return np.array([(u - fk - fd - p.c * v1) / p.m1, (fk + fd - p.c * v2) / p.m2, v1 - v2])

    return NonlinearPlant(3, derivative, lambda x: float(x[0]), p)


def reference_model(T: float, zeta: float = 1.0) -> StateSpace:
    """``(1 + 0.1 s) / (1 + 2 zeta T s + T^2 s^2)``."""
    if not (T > 0 and zeta > 0):
        raise ValueError("time constant and damping must be positive")
    return StateSpace.from_continuous_tf([0.1, 1.0], [T * T, 2 * zeta * T, 1.0])


def probe_signal(n: int = PROBE_SAMPLES, ts: float = DEFAULT_TS) -> SampledSignal:
    return sine_probe(PROBE_OMEGAS, n, ts)


def pid_controller(kp: float, kd: float, ki: float, ts: float,
                   swap_roles: bool = False) -> DiscreteTransferFunction:
    """``Kp + Kd Ts/(1 - z^-1) + Ki (z - 1)/(z Ts)`` with the gain roles as written.

    ``swap_roles=True`` exchanges the integral and derivative gains, giving the
    textbook ``Kp + Ki Ts/(1 - z^-1) + Kd (1 - z^-1)/Ts``.
    """
    if min(kp, kd, ki) < 0:
        raise ValueError("PID gains must be non-negative")
    if not ts > 0:
        raise ValueError("sampling period must be positive")
    k_int, k_diff = (ki, kd) if swap_roles else (kd, ki)
    diff = np.array([1.0, -2.0, 1.0]) * (k_diff / ts)
    num = diff + np.array([kp + k_int * ts, -kp, 0.0])
    return DiscreteTransferFunction(num, [1.0, -1.0], ts)


Controller = Union[IFIRController, DiscreteTransferFunction]
Plant = Union[StateSpace, DiscreteTransferFunction, NonlinearPlant]


def _controller_tf(controller: Controller) -> DiscreteTransferFunction:
    if isinstance(controller, IFIRController):
        return controller.to_transfer_function()
    return controller


def closed_loop_sim(plant: Plant, controller: Controller, r: SampledSignal,
                    substeps: int = RK4_SUBSTEPS) -> Tuple[SampledSignal, SampledSignal]:
    """Unity negative feedback ``u = C (r - y)``; returns ``(y, u)`` from rest."""
    ctf = _controller_tf(controller)
    if not _same_ts(ctf.ts, r.ts):
        raise TimebaseError(f"controller ts={ctf.ts} differs from reference ts={r.ts}")
    if isinstance(plant, NonlinearPlant):
        if plant.params is not None:
            y, u = kernels.two_cart_closed_loop(plant.params.as_tuple(), ctf.num, ctf.den,
                                                r.values, r.ts, substeps)
        else:
            y, u = _closed_loop_generic(plant, ctf, r, substeps)
        return r.with_values(y), r.with_values(u)
    if isinstance(plant, DiscreteTransferFunction):
        plant = plant.to_state_space()
    if not plant.is_discrete:
        raise ValueError("discretize the plant before closing the loop")
    if not _same_ts(plant.ts, r.ts):
        raise TimebaseError(f"plant ts={plant.ts} differs from reference ts={r.ts}")
    if plant.d != 0 and ctf.feedthrough != 0:
        raise ValueError("algebraic loop: plant and controller both have direct feedthrough")
    y, u = kernels.closed_loop_linear(plant.a_mat, plant.b_vec[:, 0], plant.c_vec[0],
                                      plant.d, ctf.num, ctf.den, r.values)
    return r.with_values(y), r.with_values(u)


def _closed_loop_generic(plant: NonlinearPlant, ctf: DiscreteTransferFunction,
                         r: SampledSignal, substeps: int) -> Tuple[np.ndarray, np.ndarray]:
    bn = ctf.num / ctf.den[0]
    an = ctf.den / ctf.den[0]
    n = len(r)
    x = np.zeros(plant.state_dim)
    y, u, e = np.zeros(n), np.zeros(n), np.zeros(n)
    h = r.ts / substeps
    for t in range(n):
        y[t] = plant.output(x)
        e[t] = r.values[t] - y[t]
        acc = sum(bn[k] * e[t - k] for k in range(min(bn.size, t + 1)))
        acc -= sum(an[k] * u[t - k] for k in range(1, min(an.size, t + 1)))
        u[t] = acc
        x = _rk4_hold(plant.derivative, x, u[t], h, substeps)
    return y, u


def plant_response(plant: Plant, u: SampledSignal) -> SampledSignal:
    """Open-loop output from rest; continuous linear plants are ZOH-discretized at ``u.ts``."""
    if isinstance(plant, NonlinearPlant):
        return plant.simulate(u)
    if isinstance(plant, StateSpace) and not plant.is_discrete:
        plant = c2d_zoh(plant, u.ts)
    return simulate_lti(plant, u)


def rms(values: np.ndarray) -> float:
    values = np.asarray(values, dtype=float)
    return float(np.sqrt(np.mean(values * values)))
