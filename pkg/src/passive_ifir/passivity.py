"""Passivity constraints for iFIR controllers and passivity verification.

Unknowns are always laid out as ``[g_0 .. g_{m-1}, gamma, X]`` where ``X`` is
the upper triangle (row-major) of the symmetric KYP certificate; ``X`` is
empty for the Toeplitz and sampled positive-realness formulations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigvals_banded

from passive_ifir.lti import DiscreteTransferFunction, fir_freq_response
from passive_ifir.solver import AffinePSD

PASSIVE_TOL = 1e-6
KYP_DELTA = 1e-9
MIN_GRID = 1000


@dataclass(frozen=True)
class IFIRController:
    """``gamma*ts/(1 - z^-1) + sum_k g_k z^-k``."""

    gamma: float
    g: np.ndarray
    ts: float

    def __post_init__(self) -> None:
        g = np.array(self.g, dtype=float).reshape(-1)
        if g.size == 0:
            raise ValueError("FIR part needs at least one coefficient")
        if not (np.all(np.isfinite(g)) and math.isfinite(self.gamma)):
            raise ValueError("controller parameters must be finite")
        if not self.ts > 0:
            raise ValueError(f"sampling period must be positive, got {self.ts}")
        g.setflags(write=False)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "gamma", float(self.gamma))

    @property
    def m(self) -> int:
        return self.g.size

    def to_transfer_function(self) -> DiscreteTransferFunction:
        # (gamma*ts + (1 - z^-1) G(z)) / (1 - z^-1)
        num = np.concatenate([self.g, [0.0]]) - np.concatenate([[0.0], self.g])
        num[0] += self.gamma * self.ts
        return DiscreteTransferFunction(num, [1.0, -1.0], self.ts)

    def fir_response(self, theta) -> np.ndarray:
        return fir_freq_response(self.g, theta)

    def margin(self, grid_points: int = 100_000) -> float:
        return passivity_margin(self.g, grid_points)

    def is_passive(self, grid_points: int = 100_000, tol: float = PASSIVE_TOL) -> bool:
        return self.gamma >= 0 and self.margin(grid_points) >= -tol


def n_cert_vars(m: int) -> int:
    """Number of entries in the upper triangle of the ``(m-1) x (m-1)`` certificate."""
    p = m - 1
    return p * (p + 1) // 2


def split_unknowns(x: np.ndarray, m: int) -> Tuple[np.ndarray, float, np.ndarray]:
    """Return ``(g, gamma, X)`` with ``X`` rebuilt as a symmetric matrix."""
    x = np.asarray(x, dtype=float)
    g = x[:m]
    gamma = float(x[m])
    p = m - 1
    X = np.zeros((p, p))
    if x.size > m + 1:
        iu = np.triu_indices(p)
        X[iu] = x[m + 1:m + 1 + iu[0].size]
        X = X + np.triu(X, 1).T
    return g, gamma, X


@dataclass
class PassivityConstraintSet:
    """Linear inequalities ``ineq_matrix @ x >= ineq_bounds`` plus PSD blocks."""

    method: str
    m: int
    n_vars: int
    ineq_matrix: sp.csr_matrix
    ineq_bounds: np.ndarray
    ineq_labels: List[str]
    psd_blocks: List[AffinePSD] = field(default_factory=list)
    params: Dict[str, float] = field(default_factory=dict)
    decay: Optional[Tuple[float, float]] = None

    @property
    def n_ineqs(self) -> int:
        return self.ineq_bounds.size

    def counts(self) -> Dict[str, int]:
        return {
            "unknowns": self.n_vars,
            "linear": self.n_ineqs,
            "psd_blocks": len(self.psd_blocks),
            "psd_sizes": sum(b.size for b in self.psd_blocks),
        }


class _Rows:
    def __init__(self, n_vars: int):
        self.n_vars = n_vars
        self.rows, self.cols, self.vals = [], [], []
        self.bounds: List[float] = []
        self.labels: List[str] = []

    def add(self, coeffs: Dict[int, float], bound: float, label: str) -> None:
        r = len(self.bounds)
        for c, v in coeffs.items():
            self.rows.append(r)
            self.cols.append(c)
            self.vals.append(v)
        self.bounds.append(bound)
        self.labels.append(label)

    def add_dense(self, idx: np.ndarray, coeffs: np.ndarray, bound: float, label: str) -> None:
        self.add(dict(zip(idx.tolist(), coeffs.tolist())), bound, label)

    def build(self):
        mat = sp.csr_matrix((self.vals, (self.rows, self.cols)),
                            shape=(len(self.bounds), self.n_vars))
        return mat, np.array(self.bounds, dtype=float), self.labels


def _check_decay(rho0: float, rho: float) -> None:
    if not rho0 > 0:
        raise ValueError(f"rho0 must be positive, got {rho0}")
    if not 0 < rho <= 1:
        raise ValueError(f"rho must lie in (0, 1], got {rho}")


def _decay_rows(rows: _Rows, m: int, rho0: float, rho: float) -> None:
    for k in range(m):
        bound = rho0 * rho ** k
        rows.add({k: 1.0}, -bound, f"g{k} >= -rho0*rho^{k}")
        rows.add({k: -1.0}, -bound, f"g{k} <= rho0*rho^{k}")


def toeplitz_matrix(g: Sequence[float], n: int) -> np.ndarray:
    """Lower-triangular banded Toeplitz matrix mapping n inputs to n FIR outputs."""
    g = np.asarray(g, dtype=float).reshape(-1)
    m = g.size
    if n < m:
        raise ValueError(f"Toeplitz order n={n} must be at least m={m}")
    out = np.zeros((n, n))
    for k in range(m):
        out += np.diag(np.full(n - k, g[k]), -k)
    return out


def kyp_realization(m: int) -> Tuple[np.ndarray, np.ndarray]:
    """Shift-register ``(A_c, B_c)`` of the FIR part; ``C_c = g[m-1:0:-1]``, ``D_c = g_0``."""
    if m < 2:
        raise ValueError("KYP realization needs m >= 2")
    p = m - 1
    return np.eye(p, k=1), np.eye(p)[:, -1]


def kyp_block_matrix(g: Sequence[float], X: np.ndarray) -> np.ndarray:
    """Evaluate the discrete positive-real LMI block for given ``g`` and ``X``."""
    g = np.asarray(g, dtype=float)
    A, B = kyp_realization(g.size)
    B = B[:, None]
    C = g[:0:-1][None, :]
    D = g[0]
    top = np.hstack([X - A.T @ X @ A, C.T - A.T @ X @ B])
    bottom = np.hstack([C - B.T @ X @ A, [[2 * D - (B.T @ X @ B).item()]]])
    return np.vstack([top, bottom])


def kyp_constraints(m: int, delta: float = KYP_DELTA) -> PassivityConstraintSet:
    if m < 2:
        raise ValueError("KYP formulation needs m >= 2; use posreal for a single coefficient")
    p = m - 1
    nx = n_cert_vars(m)
    n_vars = m + 1 + nx
    base = m + 1
    index = np.zeros((p, p), dtype=int)
    iu = np.triu_indices(p)
    index[iu] = base + np.arange(nx)
    index = np.maximum(index, index.T)

    rows = _Rows(n_vars)
    rows.add({m: 1.0}, 0.0, "gamma >= 0")
    rows.add({0: 2.0}, 0.0, "2*g0 >= 0")
    mat, bounds, labels = rows.build()

    # X - delta*I >= 0
    ii, jj = np.meshgrid(np.arange(p), np.arange(p), indexing="ij")
    x_op = sp.csr_matrix((np.ones(p * p), ((ii * p + jj).ravel(), index.ravel())),
                         shape=(p * p, n_vars))
    x_block = AffinePSD(-delta * np.eye(p), x_op, "X - delta*I")

    s = m
    r, c, v = [], [], []

    def put(i, j, col, val):
        r.append(i * s + j)
        c.append(col)
        v.append(val)
        if i != j:
            r.append(j * s + i)
            c.append(col)
            v.append(val)

    for a in range(p):
        for b in range(a, p):
            put(a, b, index[a, b], 1.0)
            if a >= 1:
                put(a, b, index[a - 1, b - 1], -1.0)
        put(a, p, m - 1 - a, 1.0)
        if a >= 1:
            put(a, p, index[a - 1, p - 1], -1.0)
    put(p, p, 0, 2.0)
    put(p, p, index[p - 1, p - 1], -1.0)
    lmi_op = sp.coo_matrix((v, (r, c)), shape=(s * s, n_vars)).tocsr()
    lmi_block = AffinePSD(np.zeros((s, s)), lmi_op, "KYP LMI")
    return PassivityConstraintSet("kyp", m, n_vars, mat, bounds, labels,
                                  [x_block, lmi_block], {"delta": delta})


def finite_toeplitz_constraints(m: int, n: int, epsilon: float, rho0: float, rho: float
                                ) -> PassivityConstraintSet:
    if m < 1:
        raise ValueError("FIR order must be at least 1")
    if n < m:
        raise ValueError(f"Toeplitz order n={n} must be at least m={m}")
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    _check_decay(rho0, rho)
    n_vars = m + 1
    rows = _Rows(n_vars)
    rows.add({m: 1.0}, 0.0, "gamma >= 0")
    _decay_rows(rows, m, rho0, rho)
    mat, bounds, labels = rows.build()

    r, c, v = [], [], []
    for i in range(n):
        for j in range(max(0, i - m + 1), min(n, i + m)):
            k = abs(i - j)
            r.append(i * n + j)
            c.append(k)
            v.append(2.0 if k == 0 else 1.0)
    op = sp.csr_matrix((v, (r, c)), shape=(n * n, n_vars))
    block = AffinePSD(-epsilon * np.eye(n), op, f"Toeplitz n={n}")
    return PassivityConstraintSet("toeplitz", m, n_vars, mat, bounds, labels, [block],
                                  {"n": n, "epsilon": epsilon, "rho0": rho0, "rho": rho},
                                  (rho0, rho))


def epsilon_bound(rho0: float, rho: float, m: int, M: int) -> float:
    """Largest variation of ``2 Re G`` between adjacent frequency samples."""
    _check_decay(rho0, rho)
    if M < 2:
        raise ValueError(f"number of frequency intervals must be at least 2, got {M}")
    if m < 1:
        raise ValueError("FIR order must be at least 1")
    geometric = float(m) if rho == 1 else (1 - rho ** m) / (1 - rho)
    return math.pi * rho0 * geometric * (m - 1) / (2 * M)


def posreal_constraints(m: int, M: int, rho0: float, rho: float,
                        epsilon: Optional[float] = None) -> PassivityConstraintSet:
    """Sampled positive-realness rows ``2 sum_k g_k cos(k pi q / M) >= epsilon``."""
    eps_auto = epsilon_bound(rho0, rho, m, M)
    if epsilon is not None and epsilon < 0:
        raise ValueError(f"epsilon override must be non-negative, got {epsilon}")
    eps = eps_auto if epsilon is None else float(epsilon)
    n_vars = m + 1
    rows = _Rows(n_vars)
    rows.add({m: 1.0}, 0.0, "gamma >= 0")
    _decay_rows(rows, m, rho0, rho)
    k = np.arange(m)
    for q in range(M + 1):
        rows.add_dense(k, 2.0 * np.cos(k * math.pi * q / M), eps, f"2 Re G(q={q}/{M}) >= eps")
    mat, bounds, labels = rows.build()
    return PassivityConstraintSet("posreal", m, n_vars, mat, bounds, labels, [],
                                  {"M": M, "epsilon": eps, "rho0": rho0, "rho": rho,
                                   "auto_epsilon": float(epsilon is None)},
                                  (rho0, rho))


def real_part_twice(g: Sequence[float], theta: np.ndarray, chunk: int = 8192) -> np.ndarray:
    """``G(e^{j theta}) + G(e^{-j theta}) = 2 sum_k g_k cos(k theta)``."""
    g = np.asarray(g, dtype=float)
    theta = np.asarray(theta, dtype=float).reshape(-1)
    k = np.arange(g.size)
    out = np.empty(theta.size)
    for s in range(0, theta.size, chunk):
        out[s:s + chunk] = 2.0 * (np.cos(np.outer(theta[s:s + chunk], k)) @ g)
    return out


def passivity_margin(g: Sequence[float], grid_points: int = 100_000) -> float:
    """Minimum of ``2 Re G`` over ``grid_points`` uniform samples of ``[0, pi]``."""
    g = np.asarray(g, dtype=float)
    if g.size == 0:
        raise ValueError("empty coefficient list")
    if grid_points < MIN_GRID:
        raise ValueError(f"grid must have at least {MIN_GRID} points")
    theta = np.linspace(0.0, math.pi, grid_points)
    return float(np.min(real_part_twice(g, theta)))


def toeplitz_min_eig(g: Sequence[float], n: int) -> float:
    """Smallest eigenvalue of ``phi_n(g) + phi_n(g)^T`` (banded solver)."""
    g = np.asarray(g, dtype=float).reshape(-1)
    m = g.size
    if n < m:
        raise ValueError(f"Toeplitz order n={n} must be at least m={m}")
    band = np.zeros((m, n))
    band[0, :] = 2.0 * g[0]
    for k in range(1, m):
        band[k, :n - k] = g[k]
    return float(eigvals_banded(band, lower=True, select="i", select_range=(0, 0))[0])


def lipschitz_bound_check(g: Sequence[float], theta: float, delta: float,
                          atol: float = 0.0) -> bool:
    """Whether ``|f(theta+delta) - f(theta)| <= (m-1)|delta| sum|g_k|`` holds."""
    g = np.asarray(g, dtype=float)
    k = np.arange(g.size)
    lhs = abs(np.dot(g, np.cos(k * (theta + delta))) - np.dot(g, np.cos(k * theta)))
    return bool(lhs <= (g.size - 1) * abs(delta) * np.sum(np.abs(g)) + atol)
