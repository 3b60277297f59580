"""Least squares under linear inequalities and affine PSD constraints.

The solver is an ADMM operator splitting in the style of OSQP: the
regularized least-squares step is solved with a cached factorization, linear
inequalities are projected onto half-lines, and every PSD block is projected
onto the semidefinite cone by clipping negative eigenvalues. PSD blocks are
handled in ``svec`` coordinates (off-diagonals scaled by ``sqrt(2)``) so that
the projection is Euclidean.
"""

from __future__ import annotations

import itertools
import logging
import time
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

log = logging.getLogger(__name__)

SQRT2 = np.sqrt(2.0)
DENSE_LIMIT = 2500


class NumericFailure(FloatingPointError):
    """The iteration produced non-finite values."""


class UnsupportedProblem(ValueError):
    """The oracle was given a problem outside its class."""


@dataclass
class AffinePSD:
    """Affine matrix map ``x -> f0 + mat(op @ x)`` required to be PSD.

    ``op`` has one row per entry of the ``s x s`` matrix in row-major order,
    so row ``i*s + j`` holds the coefficients of entry ``(i, j)``.
    """

    f0: np.ndarray
    op: sp.csr_matrix
    name: str = ""

    def __post_init__(self) -> None:
        self.f0 = np.atleast_2d(np.asarray(self.f0, dtype=float))
        s = self.f0.shape[0]
        if self.f0.shape != (s, s):
            raise ValueError("constant term must be square")
        if not np.allclose(self.f0, self.f0.T, atol=0, rtol=0):
            raise ValueError("constant term must be symmetric")
        self.op = sp.csr_matrix(self.op, dtype=float)
        if self.op.shape[0] != s * s:
            raise ValueError(f"operator must have {s * s} rows, got {self.op.shape[0]}")
        perm = np.arange(s * s).reshape(s, s).T.reshape(-1)
        if (self.op - self.op[perm]).count_nonzero():
            raise ValueError("affine map is not symmetric")

    @property
    def size(self) -> int:
        return self.f0.shape[0]

    @property
    def n_vars(self) -> int:
        return self.op.shape[1]

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        s = self.size
        return self.f0 + (self.op @ np.asarray(x, dtype=float)).reshape(s, s)

    def min_eig(self, x: np.ndarray) -> float:
        return float(np.linalg.eigvalsh(self.evaluate(x))[0])

    @classmethod
    def from_matrices(cls, f0: np.ndarray, mats: Sequence[np.ndarray], name: str = ""
                      ) -> "AffinePSD":
        f0 = np.atleast_2d(np.asarray(f0, dtype=float))
        cols = [np.asarray(f, dtype=float).reshape(-1) for f in mats]
        op = sp.csr_matrix(np.column_stack(cols)) if cols else \
            sp.csr_matrix((f0.size, 0))
        return cls(f0, op, name)

    def svec_op(self):
        """``(S, c)`` with ``svec(F(x)) = S @ x + c`` over the lower triangle."""
        s = self.size
        rows, cols = np.tril_indices(s)
        weight = np.where(rows == cols, 1.0, SQRT2)
        idx = rows * s + cols
        S = sp.diags(weight) @ self.op[idx]
        c = weight * self.f0[rows, cols]
        return sp.csr_matrix(S), c


def svec_to_mat(v: np.ndarray, s: int) -> np.ndarray:
    rows, cols = np.tril_indices(s)
    out = np.zeros((s, s))
    vals = np.where(rows == cols, v, v / SQRT2)
    out[rows, cols] = vals
    out[cols, rows] = vals
    return out


def mat_to_svec(mat: np.ndarray) -> np.ndarray:
    rows, cols = np.tril_indices(mat.shape[0])
    return np.where(rows == cols, 1.0, SQRT2) * mat[rows, cols]


def project_psd(mat: np.ndarray) -> np.ndarray:
    """Nearest PSD matrix in Frobenius norm."""
    w, v = np.linalg.eigh(0.5 * (mat + mat.T))
    w = np.maximum(w, 0.0)
    return (v * w) @ v.T


@dataclass
class ConstrainedLSProblem:
    """Minimize ``||design_matrix @ x[:p] - target||^2`` subject to
    ``ineq_matrix @ x >= ineq_bounds`` and every PSD block.

    ``design_matrix`` may have fewer columns ``p`` than there are unknowns
    (``n_vars``); the remaining unknowns do not enter the objective.
    """

    design_matrix: np.ndarray
    target: np.ndarray
    ineq_matrix: Optional[sp.spmatrix] = None
    ineq_bounds: Optional[np.ndarray] = None
    psd_blocks: List[AffinePSD] = field(default_factory=list)
    n_vars: Optional[int] = None
    ineq_labels: Optional[List[str]] = None

    def __post_init__(self) -> None:
        self.design_matrix = np.atleast_2d(np.asarray(self.design_matrix, dtype=float))
        self.target = np.asarray(self.target, dtype=float).reshape(-1)
        n, p = self.design_matrix.shape
        if not (np.all(np.isfinite(self.design_matrix)) and np.all(np.isfinite(self.target))):
            raise ValueError("design matrix and target must be finite")
        if self.target.shape[0] != n:
            raise ValueError("target length does not match design matrix rows")
        if self.n_vars is None:
            self.n_vars = p
        if self.n_vars < p:
            raise ValueError("n_vars smaller than design matrix width")
        if self.ineq_matrix is None:
            self.ineq_matrix = sp.csr_matrix((0, self.n_vars))
            self.ineq_bounds = np.zeros(0)
        self.ineq_matrix = sp.csr_matrix(self.ineq_matrix, dtype=float)
        self.ineq_bounds = np.asarray(self.ineq_bounds, dtype=float).reshape(-1)
        if not np.all(np.isfinite(self.ineq_bounds)):
            raise ValueError("inequality bounds must be finite")
        if self.ineq_matrix.shape != (self.ineq_bounds.shape[0], self.n_vars):
            raise ValueError("inequality matrix/bounds dimensions are inconsistent")
        for blk in self.psd_blocks:
            if blk.n_vars != self.n_vars:
                raise ValueError(f"PSD block {blk.name!r} has {blk.n_vars} unknowns, "
                                 f"expected {self.n_vars}")
        if self.ineq_labels is not None and len(self.ineq_labels) != self.n_ineqs:
            raise ValueError("one label per inequality row is required")

    @property
    def n_ineqs(self) -> int:
        return self.ineq_bounds.shape[0]

    @property
    def n_objective_vars(self) -> int:
        return self.design_matrix.shape[1]

    @property
    def is_unconstrained(self) -> bool:
        return self.n_ineqs == 0 and not self.psd_blocks

    def objective(self, x: np.ndarray) -> float:
        r = self.design_matrix @ x[:self.n_objective_vars] - self.target
        return float(r @ r)


@dataclass
class SolverOptions:
    abs_tol: float = 1e-8
    rel_tol: float = 1e-8
    max_iters: int = 200_000
    seed: int = 0
    rho: float = 0.1
    sigma: float = 1e-6
    alpha: float = 1.6
    adapt_every: int = 100
    check_every: int = 10
    scaling_iters: int = 15
    time_limit: Optional[float] = None
    anderson: int = 10


@dataclass
class Solution:
    x: np.ndarray
    objective: float
    status: str
    primal_residual: float
    dual_residual: float
    iterations: int
    solve_time: float = 0.0
    primal_tol: float = 0.0
    dual_tol: float = 0.0

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


class _Scaled:
    """Equilibrated problem data shared by the ADMM iterations."""

    def __init__(self, problem: ConstrainedLSProblem, scaling_iters: int):
        d = problem.n_vars
        p = problem.n_objective_vars
        dm = problem.design_matrix
        Pp = dm.T @ dm
        q = np.zeros(d)
        q[:p] = -(dm.T @ problem.target)

        blocks = [problem.ineq_matrix]
        offsets = [np.zeros(problem.n_ineqs)]
        self.cones = [("lin", 0, problem.n_ineqs, problem.ineq_bounds.copy())]
        start = problem.n_ineqs
        for blk in problem.psd_blocks:
            S, c = blk.svec_op()
            blocks.append(S)
            offsets.append(c)
            self.cones.append(("psd", start, start + S.shape[0], blk.size))
            start += S.shape[0]
        A = sp.vstack(blocks, format="csc") if blocks else sp.csc_matrix((0, d))
        psd_offset = np.concatenate(offsets)

        Pp_scaled = Pp.copy()
        var_scale = np.ones(d)
        row_scale = np.ones(A.shape[0])
        As = A.copy()
        for _ in range(scaling_iters):
            col_norm = np.zeros(d)
            col_norm[:p] = np.max(np.abs(Pp_scaled), axis=0) if p else 0.0
            if As.shape[0]:
                col_norm = np.maximum(col_norm, abs(As).max(axis=0).toarray().ravel())
            col_norm = np.where(col_norm < 1e-8, 1.0, col_norm)
            dv = 1.0 / np.sqrt(np.clip(col_norm, 1e-4, 1e4))
            if As.shape[0]:
                rn = abs(As).max(axis=1).toarray().ravel()
                rn = np.where(rn < 1e-8, 1.0, rn)
                for kind, a, b, _ in self.cones:
                    if kind == "psd" and b > a:
                        rn[a:b] = np.max(rn[a:b])
                er = 1.0 / np.sqrt(np.clip(rn, 1e-4, 1e4))
            else:
                er = np.ones(0)
            Pp_scaled = dv[:p, None] * Pp_scaled * dv[None, :p]
            As = sp.diags(er) @ As @ sp.diags(dv)
            var_scale *= dv
            row_scale *= er
        q_scaled = var_scale * q
        if p:
            avg = np.mean(np.max(np.abs(Pp_scaled), axis=0))
        else:
            avg = 0.0
        cost = 1.0 / max(avg, np.max(np.abs(q_scaled)) if d else 0.0, 1e-6)
        cost = min(cost, 1e6)

        self.d = d
        self.p = p
        self.cost = cost
        self.var_scale = var_scale
        self.row_scale = row_scale
        self.A_raw = A
        self.A = sp.csc_matrix(As)
        self.At = sp.csc_matrix(As.T)
        self.Pp = cost * Pp_scaled
        self.q = cost * q_scaled
        # cone data in scaled coordinates: z_lin >= row_scale*bound,
        # z_psd + row_scale*offset in S+
        self.shift = row_scale * psd_offset
        self.lin_bound = np.zeros(0)
        for kind, a, b, data in self.cones:
            if kind == "lin":
                self.lin_bound = row_scale[a:b] * data

    def P_times(self, x: np.ndarray) -> np.ndarray:
        out = np.zeros_like(x)
        out[:self.p] = self.Pp @ x[:self.p]
        return out

    def project(self, v: np.ndarray) -> np.ndarray:
        out = v.copy()
        for kind, a, b, data in self.cones:
            if kind == "lin":
                out[a:b] = np.maximum(v[a:b], self.lin_bound)
            else:
                shift = self.shift[a:b]
                mat = svec_to_mat(v[a:b] + shift, data)
                out[a:b] = mat_to_svec(project_psd(mat)) - shift
        return out


class _KKT:
    def __init__(self, sc: _Scaled, rho: float, sigma: float):
        d, p = sc.d, sc.p
        AtA = (sc.At @ sc.A)
        if d <= DENSE_LIMIT:
            K = np.asarray(rho * AtA.todense()) if AtA.shape[0] else np.zeros((d, d))
            K[:p, :p] += sc.Pp
            K[np.diag_indices(d)] += sigma
            self._cho = sla.cho_factor(K, check_finite=False)
            self._lu = None
        else:
            Pfull = sp.bmat([[sp.csc_matrix(sc.Pp), None],
                             [None, sp.csc_matrix((d - p, d - p))]], format="csc")
            K = (Pfull + rho * AtA + sigma * sp.identity(d, format="csc")).tocsc()
            self._lu = spla.splu(K, permc_spec="COLAMD")
            self._cho = None

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        if self._cho is not None:
            return sla.cho_solve(self._cho, rhs, check_finite=False)
        return self._lu.solve(rhs)


class _Anderson:
    """Type-II Anderson acceleration with a residual-norm safeguard."""

    def __init__(self, memory: int, safeguard: float = 1.0, reg: float = 1e-10):
        self.memory = memory
        self.safeguard = safeguard
        self.reg = reg
        self.reset()

    def reset(self) -> None:
        self.dG: List[np.ndarray] = []
        self.dF: List[np.ndarray] = []
        self.prev = None
        self.pending = None

    def step(self, w: np.ndarray, fw: np.ndarray) -> np.ndarray:
        g = fw - w
        gnorm = float(np.linalg.norm(g))
        if self.pending is not None:
            # previous output was extrapolated; reject it if it made things worse
            ref_norm, fallback = self.pending
            self.pending = None
            if gnorm > self.safeguard * ref_norm:
                self.dG.clear()
                self.dF.clear()
                self.prev = None
                return fallback
        if self.prev is not None:
            g_prev, f_prev = self.prev
            self.dG.append(g - g_prev)
            self.dF.append(fw - f_prev)
            if len(self.dG) > self.memory:
                self.dG.pop(0)
                self.dF.pop(0)
        self.prev = (g, fw)
        if not self.dG:
            return fw
        G = np.column_stack(self.dG)
        lhs = G.T @ G
        lhs[np.diag_indices_from(lhs)] += self.reg * max(1.0, float(np.trace(lhs)))
        try:
            coef = np.linalg.solve(lhs, G.T @ g)
        except np.linalg.LinAlgError:
            return fw
        w_acc = fw - np.column_stack(self.dF) @ coef
        if not np.all(np.isfinite(w_acc)):
            return fw
        self.pending = (gnorm, fw)
        return w_acc


def _unconstrained(problem: ConstrainedLSProblem, started: float) -> Solution:
    x = np.zeros(problem.n_vars)
    sol, *_ = np.linalg.lstsq(problem.design_matrix, problem.target, rcond=None)
    x[:problem.n_objective_vars] = sol
    grad = problem.design_matrix.T @ (problem.design_matrix @ sol - problem.target)
    dual = float(np.max(np.abs(grad))) if grad.size else 0.0
    return Solution(x, problem.objective(x), "optimal", 0.0, dual, 0,
                    time.perf_counter() - started)


def variable_bounds(problem: ConstrainedLSProblem) -> Tuple[np.ndarray, np.ndarray]:
    """Lower/upper bounds implied by single-variable inequality rows."""
    lo = np.full(problem.n_vars, -np.inf)
    hi = np.full(problem.n_vars, np.inf)
    A = problem.ineq_matrix
    for i in np.flatnonzero(np.diff(A.indptr) == 1):
        j = A.indices[A.indptr[i]]
        a = A.data[A.indptr[i]]
        if a > 0:
            lo[j] = max(lo[j], problem.ineq_bounds[i] / a)
        elif a < 0:
            hi[j] = min(hi[j], problem.ineq_bounds[i] / a)
    return lo, hi


def _clip_to_bounds(problem: ConstrainedLSProblem, x: np.ndarray) -> np.ndarray:
    # simple bounds are projected exactly; ADMM leaves residual-sized violations
    if not problem.n_ineqs:
        return x
    lo, hi = variable_bounds(problem)
    ok = lo <= hi
    return np.where(ok, np.clip(x, np.where(ok, lo, -np.inf), np.where(ok, hi, np.inf)), x)


def solve(problem: ConstrainedLSProblem, options: Optional[SolverOptions] = None,
          **overrides) -> Solution:
    """Solve ``problem``; keyword overrides are applied on top of ``options``.

    Never raises on non-convergence: the best iterate is returned with
    ``status="max_iters"``. Raises :class:`NumericFailure` on NaN/inf.
    """
    opts = options or SolverOptions()
    for key, value in overrides.items():
        if not hasattr(opts, key):
            raise TypeError(f"unknown solver option {key!r}")
        opts = SolverOptions(**{**opts.__dict__, key: value})
    started = time.perf_counter()
    if problem.is_unconstrained:
        return _unconstrained(problem, started)

    sc = _Scaled(problem, opts.scaling_iters)
    d, n_rows = sc.d, sc.A.shape[0]
    rho, sigma, alpha = opts.rho, opts.sigma, opts.alpha
    kkt = _KKT(sc, rho, sigma)

    x = np.zeros(d)
    z = sc.project(np.zeros(n_rows))
    y = np.zeros(n_rows)

    def admm_step(x, z, y):
        rhs = sigma * x - sc.q + sc.At @ (rho * z - y)
        x_tilde = kkt.solve(rhs)
        z_tilde = sc.A @ x_tilde
        x_new = alpha * x_tilde + (1.0 - alpha) * x
        z_relax = alpha * z_tilde + (1.0 - alpha) * z
        z_new = sc.project(z_relax + y / rho)
        y_new = y + rho * (z_relax - z_new)
        return x_new, z_new, y_new

    def pack(x, z, y):
        return np.concatenate([x, z, y / rho])

    def unpack(w):
        return w[:d], w[d:d + n_rows], rho * w[d + n_rows:]

    accel = _Anderson(opts.anderson) if opts.anderson > 0 else None
    inv_row = 1.0 / sc.row_scale
    inv_var = 1.0 / sc.var_scale
    best = None
    status = "max_iters"
    prim = dual = np.inf
    eps_p = eps_d = 0.0
    it = 0
    for it in range(1, opts.max_iters + 1):
        x_new, z_new, y_new = admm_step(x, z, y)
        if accel is not None:
            w = pack(x, z, y)
            fw = pack(x_new, z_new, y_new)
            w_acc = accel.step(w, fw)
            x, z, y = unpack(w_acc)
        else:
            x, z, y = x_new, z_new, y_new

        check = it % opts.check_every == 0 or it == opts.max_iters
        adapt = it % opts.adapt_every == 0
        if not (check or adapt):
            continue
        if accel is not None:
            # residuals are evaluated on a plain (unaccelerated) iterate
            x, z, y = x_new, z_new, y_new
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise NumericFailure(f"non-finite iterate at iteration {it}")
        Ax = sc.A @ x
        Px = sc.P_times(x)
        Aty = sc.At @ y
        prim = float(np.max(np.abs(inv_row * (Ax - z)))) if n_rows else 0.0
        dual = float(np.max(np.abs(inv_var * (Px + sc.q + Aty)))) / sc.cost
        norm_p = max(np.max(np.abs(inv_row * Ax)), np.max(np.abs(inv_row * z)))
        norm_d = max(np.max(np.abs(inv_var * Px)), np.max(np.abs(inv_var * Aty)),
                     np.max(np.abs(inv_var * sc.q))) / sc.cost
        eps_p = opts.abs_tol + opts.rel_tol * norm_p
        eps_d = opts.abs_tol + opts.rel_tol * norm_d
        score = max(prim / eps_p, dual / eps_d)
        if best is None or score < best[0]:
            best = (score, x.copy(), prim, dual, eps_p, eps_d)
        if prim <= eps_p and dual <= eps_d:
            status = "optimal"
            break
        if opts.time_limit is not None and time.perf_counter() - started > opts.time_limit:
            break
        if adapt:
            # compare residuals in the scaled space, each relative to its own size
            sp_res = np.max(np.abs(Ax - z)) / max(np.max(np.abs(Ax)), np.max(np.abs(z)), 1e-12)
            sd_res = np.max(np.abs(Px + sc.q + Aty)) / max(
                np.max(np.abs(Px)), np.max(np.abs(Aty)), np.max(np.abs(sc.q)), 1e-12)
            new_rho = rho
            if sp_res > 10.0 * sd_res:
                new_rho = min(rho * 2.0, 1e4)
            elif sd_res > 10.0 * sp_res:
                new_rho = max(rho / 2.0, 1e-4)
            if new_rho != rho:
                log.debug("iter %d: rho %.3g -> %.3g (prim %.2e, dual %.2e)", it, rho, new_rho,
                          sp_res, sd_res)
                rho = new_rho
                kkt = _KKT(sc, rho, sigma)
                if accel is not None:
                    accel.reset()

    if status == "optimal":
        x_out, p_out, d_out, ep, ed = x, prim, dual, eps_p, eps_d
    else:
        _, x_out, p_out, d_out, ep, ed = best
        log.warning("solver stopped after %d iterations (primal %.3g, dual %.3g)",
                    it, p_out, d_out)
    x_un = _clip_to_bounds(problem, sc.var_scale * x_out)
    return Solution(x_un, problem.objective(x_un), status, float(p_out), float(d_out), it,
                    time.perf_counter() - started, float(ep), float(ed))


@dataclass
class SolutionReport:
    objective: float
    ineq_violations: np.ndarray
    psd_min_eigs: List[float]
    tol: float
    ineq_labels: Optional[List[str]] = None
    psd_names: List[str] = field(default_factory=list)

    @property
    def max_violation(self) -> float:
        return float(np.max(self.ineq_violations)) if self.ineq_violations.size else 0.0

    @property
    def failed_rows(self) -> List[tuple]:
        bad = np.flatnonzero(self.ineq_violations > self.tol)
        labels = self.ineq_labels or [f"row {i}" for i in range(self.ineq_violations.size)]
        return [(int(i), labels[i], float(self.ineq_violations[i])) for i in bad]

    @property
    def failed_blocks(self) -> List[tuple]:
        return [(name, eig) for name, eig in zip(self.psd_names, self.psd_min_eigs)
                if eig < -self.tol]

    @property
    def passed(self) -> bool:
        return not self.failed_rows and not self.failed_blocks

    def summary(self) -> str:
        lines = [f"objective            {self.objective:.10g}",
                 f"max ineq violation   {self.max_violation:.3e}"]
        for name, eig in zip(self.psd_names, self.psd_min_eigs):
            lines.append(f"min eig [{name}]".ljust(21) + f"{eig:.3e}")
        lines.append(f"constraints          {'pass' if self.passed else 'FAIL'} (tol {self.tol:g})")
        return "\n".join(lines)


def check_solution(problem: ConstrainedLSProblem, x: np.ndarray, tol: float = 1e-6
                   ) -> SolutionReport:
    """Recompute objective and constraint satisfaction directly from ``x``."""
    x = np.asarray(x, dtype=float)
    if x.shape != (problem.n_vars,):
        raise ValueError(f"expected {problem.n_vars} unknowns, got {x.shape}")
    viol = problem.ineq_bounds - problem.ineq_matrix @ x
    eigs = [blk.min_eig(x) for blk in problem.psd_blocks]
    names = [blk.name or f"block {i}" for i, blk in enumerate(problem.psd_blocks)]
    return SolutionReport(problem.objective(x), np.asarray(viol), eigs, tol,
                          problem.ineq_labels, names)


def _symmetrizer(s: int) -> sp.csr_matrix:
    eye = sp.identity(s * s, format="csr")
    perm = np.arange(s * s).reshape(s, s).T.reshape(-1)
    return 0.5 * (eye + eye[perm])


def oracle_solve_small(problem: ConstrainedLSProblem) -> Solution:
    """Exact solution for tiny problems, independent of :func:`solve`.

    Supported: at most three unknowns with only linear inequalities (active-set
    enumeration), or the nearest-PSD problem ``min ||x - b||^2`` subject to
    ``F0 + sym(mat(x)) >= 0`` with an identity design matrix.
    """
    d = problem.n_vars
    dm = problem.design_matrix
    if not problem.psd_blocks:
        if d > 3:
            raise UnsupportedProblem("enumeration oracle supports at most 3 unknowns")
        return _enumerate_active_sets(problem)
    if len(problem.psd_blocks) != 1 or problem.n_ineqs:
        raise UnsupportedProblem("PSD oracle handles exactly one block and no inequalities")
    blk = problem.psd_blocks[0]
    s = blk.size
    if d != s * s or dm.shape != (d, d) or not np.array_equal(dm, np.eye(d)):
        raise UnsupportedProblem("PSD oracle needs an identity design over vec(X)")
    if (blk.op - _symmetrizer(s)).count_nonzero():
        raise UnsupportedProblem("PSD oracle needs the symmetrizing map")
    b = problem.target.reshape(s, s)
    sym = 0.5 * (b + b.T)
    skew = b - sym
    x = (skew + project_psd(sym + blk.f0) - blk.f0).reshape(-1)
    return Solution(x, problem.objective(x), "optimal", 0.0, 0.0, 0)


def _enumerate_active_sets(problem: ConstrainedLSProblem) -> Solution:
    G = problem.ineq_matrix.toarray()
    h = problem.ineq_bounds
    d = problem.n_vars
    p = problem.n_objective_vars
    D = np.zeros((problem.design_matrix.shape[0], d))
    D[:, :p] = problem.design_matrix
    H = D.T @ D
    f = D.T @ problem.target
    best_x, best_obj = None, np.inf
    feas_tol = 1e-10 * max(1.0, np.max(np.abs(h)) if h.size else 1.0)
    for size in range(0, min(d, G.shape[0]) + 1):
        for active in itertools.combinations(range(G.shape[0]), size):
            Ga = G[list(active)]
            kkt = np.block([[H, Ga.T], [Ga, np.zeros((size, size))]])
            rhs = np.concatenate([f, h[list(active)]])
            sol, *_ = np.linalg.lstsq(kkt, rhs, rcond=None)
            x = sol[:d]
            if not np.allclose(kkt @ sol, rhs, atol=1e-9 * max(1.0, np.max(np.abs(rhs)))):
                continue
            if G.shape[0] and np.min(G @ x - h) < -feas_tol:
                continue
            obj = problem.objective(x)
            if best_x is None or obj < best_obj - 1e-14 * max(1.0, abs(best_obj)):
                best_x, best_obj = x, obj
    if best_x is None:
        raise UnsupportedProblem("no feasible active set: problem is infeasible")
    return Solution(best_x, best_obj, "optimal", 0.0, 0.0, 0)
