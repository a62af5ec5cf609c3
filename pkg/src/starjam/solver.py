"""First-order solvers for the surrogate subproblems and the lifted mode relaxation.

``solve`` maximizes a smooth concave objective over convex inequality
constraints with a log-barrier outer loop and a Barzilai-Borwein-seeded
gradient-ascent/backtracking inner loop. Constraints active at the start are
handled with a hair's-width shift so the expansion point is always usable as
a strictly feasible barrier start; the shift stays far inside the feasibility
tolerance. The solver is deterministic and guarantees the returned point is
never worse than the start.

``solve_sdr`` maximizes the concave relaxed mode-selection objective over the
set of unit-diagonal PSD matrices by projected gradient ascent, projecting
with a Dykstra alternation between the PSD cone (eigenvalue clamping) and the
unit-diagonal affine set, and honoring the interference cap through a barrier
term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SolverOptions",
    "Solution",
    "InfeasibleStartError",
    "SolverNumericsError",
    "SdrInfeasibleError",
    "solve",
    "project_psd",
    "solve_sdr",
]

LOG2 = math.log(2.0)
SHIFT_SLACK = 1e-10   # strictness pad added to active constraints at the start
MIN_STEP = 1e-18


class InfeasibleStartError(ValueError):
    """Start point violates a constraint beyond the feasibility tolerance."""


class SolverNumericsError(RuntimeError):
    """An oracle returned a non-finite value at an accepted iterate."""


class SdrInfeasibleError(RuntimeError):
    """No unit-diagonal PSD matrix satisfies the interference cap."""


@dataclass(frozen=True)
class SolverOptions:
    """Tolerances and step rule for the barrier solver.

    ``max_iters`` caps the total accepted inner steps across barrier stages;
    ``barrier_mu`` is the factor the barrier weight 1/t shrinks by per stage.
    """

    max_iters: int = 2000
    tol_obj: float = 1e-7
    tol_feas: float = 1e-8
    barrier_mu: float = 0.2
    step_shrink: float = 0.5
    armijo: float = 1e-4
    barrier_t0: float = 10.0
    trace_path: str | None = None

    def __post_init__(self):
        if min(self.tol_obj, self.tol_feas) <= 0:
            raise ValueError("tolerances must be positive")
        if not 0.0 < self.step_shrink < 1.0:
            raise ValueError("step_shrink must lie in (0, 1)")
        if not 0.0 < self.barrier_mu < 1.0:
            raise ValueError("barrier_mu must lie in (0, 1)")


@dataclass
class Solution:
    x: np.ndarray
    objective: float
    feas_violation: float
    iters: int
    converged: bool


def _eval_constraints(problem, x):
    vals, jacs = [], []
    for g in problem.constraints:
        v, j = g(x)
        vals.append(np.atleast_1d(v))
        jacs.append(np.atleast_2d(j))
    if not vals:
        return np.zeros(0), np.zeros((0, x.shape[0]))
    return np.concatenate(vals), np.vstack(jacs)


def solve(problem, x0: np.ndarray | None = None, opts: SolverOptions | None = None) -> Solution:
    """Maximize ``problem.objective`` subject to ``problem.constraints`` <= 0.

    ``x0`` defaults to the problem's embedded expansion point and must be
    feasible within ``tol_feas``. The returned objective is never below the
    start's (the start itself is returned if no ascent was found).
    """
    opts = opts or SolverOptions()
    x0 = np.asarray(problem.x0 if x0 is None else x0, dtype=float).copy()
    vals0, _ = _eval_constraints(problem, x0)
    if vals0.size and float(vals0.max()) > opts.tol_feas:
        raise InfeasibleStartError(
            f"{problem.block}: start violates constraints by {vals0.max():.3e}")
    f0, g0 = problem.objective(x0)
    if not (math.isfinite(f0) and np.all(np.isfinite(g0))):
        raise SolverNumericsError(f"{problem.block}: non-finite objective at start")

    shifts = np.maximum(vals0, 0.0) + SHIFT_SLACK

    def barrier_parts(x, t):
        """Objective, constraints and derived barrier quantities at x.

        Returns (F, gradF, diag_curvature, f) or (-inf, None, None, None)
        when x lies outside the shifted-feasible domain. The diagonal
        curvature sum_i J_ij^2 / (t s_i^2) is the exact barrier Hessian
        diagonal and preconditions the ascent direction so steps near active
        constraints scale with their slack instead of exploding.
        """
        if not problem.constraints:
            f, gf = problem.objective(x)
            if not (math.isfinite(f) and np.all(np.isfinite(gf))):
                return -np.inf, None, None, None, None
            return f, gf, np.zeros_like(x), f, gf
        # constraints first: the objective is only defined strictly inside
        # the shifted-feasible set (builders put domain floors there)
        vals, jac = _eval_constraints(problem, x)
        slack = shifts - vals
        if np.any(slack <= 0.0) or not np.all(np.isfinite(slack)):
            return -np.inf, None, None, None, None
        f, gf = problem.objective(x)
        if not (math.isfinite(f) and np.all(np.isfinite(gf))):
            return -np.inf, None, None, None, None
        lam = 1.0 / (t * slack)
        val = f + np.log(slack).sum() / t
        grad = gf - jac.T @ lam
        curv = (jac * jac).T @ (lam / slack)
        return val, grad, curv, f, gf

    trace_rows = []
    n_con = max(len(shifts), 1)
    t = opts.barrier_t0
    x = x0
    iters = 0
    h_obj = 1.0  # running curvature estimate of the smooth objective part
    while iters < opts.max_iters:
        fb, gb, hb, f_raw, gf = barrier_parts(x, t)
        if gb is None:
            raise SolverNumericsError(f"{problem.block}: iterate left the barrier domain")
        stalls = 0
        while iters < opts.max_iters:
            d = gb / (hb + h_obj)
            slope = float(gb @ d)
            if slope <= opts.tol_obj * (1.0 + abs(fb)):
                break
            accepted = False
            s = 1.0
            while s >= MIN_STEP:
                x_try = x + s * d
                f_try, g_try, h_try, _, gf_try = barrier_parts(x_try, t)
                if math.isfinite(f_try) and f_try >= fb + opts.armijo * s * slope:
                    accepted = True
                    break
                s *= opts.step_shrink
            if not accepted:
                break
            dx = x_try - x
            dgf = gf_try - gf
            x, f_prev, fb, gb, hb, gf = x_try, fb, f_try, g_try, h_try, gf_try
            iters += 1
            # secant curvature of the concave objective seeds the preconditioner
            denom = float(dx @ dx)
            if denom > 0.0:
                bb = -float(dx @ dgf) / denom
                if math.isfinite(bb) and bb > 0.0:
                    h_obj = min(max(bb, 1e-12), 1e12)
            if opts.trace_path:
                vals, _ = _eval_constraints(problem, x)
                trace_rows.append((iters, fb, float(vals.max()) if vals.size else 0.0))
            stalls = stalls + 1 if abs(fb - f_prev) <= opts.tol_obj * (1.0 + abs(fb)) else 0
            if stalls >= 3:
                break
        if n_con / t <= opts.tol_obj * (1.0 + abs(f_raw)):
            break
        t /= opts.barrier_mu

    if opts.trace_path:
        with open(opts.trace_path, "w", encoding="utf-8") as f:
            f.write("iteration,objective,max_violation\n")
            for row in trace_rows:
                f.write(f"{row[0]},{row[1]:.12g},{row[2]:.12g}\n")

    f_final, _ = problem.objective(x)
    if f_final < f0:  # ascent guarantee: never return worse than the start
        x, f_final = x0, f0
    vals, _ = _eval_constraints(problem, x)
    viol = float(vals.max()) if vals.size else 0.0
    return Solution(x=x, objective=float(f_final), feas_violation=viol,
                    iters=iters, converged=viol <= opts.tol_feas)


def _psd_clamp(sh: np.ndarray) -> np.ndarray:
    """Eigenvalue clamp of an already-Hermitian matrix (hot path, unchecked)."""
    evals, evecs = np.linalg.eigh(sh)
    if evals[0] >= 0.0:
        return sh
    clipped = np.clip(evals, 0.0, None)
    out = (evecs * clipped) @ evecs.conj().T
    return 0.5 * (out + out.conj().T)


def project_psd(s: np.ndarray) -> np.ndarray:
    """Nearest (Frobenius) positive semidefinite matrix: clamp negative eigenvalues."""
    s = np.asarray(s)
    scale = max(float(np.abs(s).max()), 1e-300)
    if not np.allclose(s, s.conj().T, atol=1e-10 * scale):
        raise ValueError("matrix must be Hermitian")
    return _psd_clamp(0.5 * (s + s.conj().T))


def _project_elliptope(x: np.ndarray, max_rounds: int = 60, tol: float = 1e-9
                       ) -> tuple[np.ndarray, float]:
    """Dykstra alternation between the PSD cone and the unit-diagonal set.

    Returns the final iterate and a residual bound: after the diagonal reset
    of a PSD matrix ``a``, the eigenvalues move by at most
    max|diag(a) - 1| (Weyl), so that deviation bounds both the diagonal and
    the negative-eigenvalue error of the returned point. Callers must treat
    a residual above their tolerance as an infeasible point, not a
    projection.
    """
    y = x.copy()
    p = np.zeros_like(x)
    resid = np.inf
    for _ in range(max_rounds):
        a = _psd_clamp(y + p)
        p = y + p - a
        y = a.copy()
        np.fill_diagonal(y, 1.0)
        resid = float(np.abs(np.diag(a) - 1.0).max())
        if resid <= tol:
            break
    return y, resid


def solve_sdr(sdr, opts: SolverOptions | None = None,
              x_init: np.ndarray | None = None) -> np.ndarray:
    """Maximize the relaxed mode-selection objective over unit-diagonal PSD
    matrices under the interference cap; returns the relaxed matrix.

    ``x_init`` (unit-diagonal, PSD, cap-feasible) seeds the ascent; the
    identity is tried when it is omitted or infeasible. Raises
    :class:`SdrInfeasibleError` when no feasible start exists.
    """
    opts = opts or SolverOptions()
    sys = sdr.sys
    a = sdr.constants.bob_numerator
    b = sdr.constants.eve_numerator
    slope_den = 1.0 + a / sdr.tau_bar
    slope = (-a / sdr.tau_bar**2) / (slope_den * LOG2)
    intercept = math.log2(slope_den) - slope * sdr.tau_bar

    def quarter_trace(pi, x):
        return 0.25 * float((pi * x).sum())

    def si_watts(x):
        return sys.p_bob * (quarter_trace(sdr.pi1p, x) + sdr.q1p)

    def eve_watts(x):
        return sys.p_bob * (quarter_trace(sdr.pi2p, x) + sdr.q2p)

    def cap_watts(x):
        return sys.p_bob * (quarter_trace(sdr.pi3p, x) + sdr.q3p)

    def objective(x):
        rho = max(eve_watts(x), 0.0) + sys.noise_eve
        val = intercept + slope * (si_watts(x) + sys.noise_rx)
        val -= math.log1p(b / rho) / LOG2
        coeff = b / ((rho * rho + b * rho) * LOG2)
        grad = (slope * 0.25 * sys.p_bob) * sdr.pi1p + (coeff * 0.25 * sys.p_bob) * sdr.pi2p
        return val, grad

    dim = sdr.pi1p.shape[0]
    candidates = []
    if x_init is not None:
        candidates.append(np.asarray(x_init, dtype=float))
    candidates.append(np.eye(dim))
    x = None
    for cand in candidates:
        if cap_watts(cand) <= sys.p_si_max * (1.0 + 1e-9):
            x = cand.copy()
            break
    if x is None:
        raise SdrInfeasibleError("interference cap unsatisfiable at every provided start")

    cap = sys.p_si_max + max(0.0, cap_watts(x) - sys.p_si_max) + SHIFT_SLACK * sys.p_si_max

    def penalized(x_mat, t):
        margin = cap - cap_watts(x_mat)
        if margin <= 0.0:
            return -np.inf
        val, _ = objective(x_mat)
        return val + math.log(margin / sys.p_si_max) / t

    feas_tol = 1e-8

    def penalized_grad(x_mat, t):
        _, g_obj = objective(x_mat)
        margin = cap - cap_watts(x_mat)
        return g_obj - (0.25 * sys.p_bob / (t * margin)) * sdr.pi3p

    t = opts.barrier_t0
    iters = 0
    budget = opts.max_iters
    while iters < budget:
        f_pen = penalized(x, t)
        grad = penalized_grad(x, t)
        step = 1.0 / (1.0 + float(np.linalg.norm(grad)))
        stalls = 0
        while iters < budget:
            accepted = False
            s = step
            while s >= MIN_STEP:
                x_try, resid = _project_elliptope(x + s * grad, tol=min(1e-9, feas_tol))
                f_try = penalized(x_try, t)
                if (resid <= feas_tol and math.isfinite(f_try)
                        and f_try > f_pen + opts.armijo * s * 1e-12):
                    accepted = True
                    break
                s *= opts.step_shrink
            if not accepted:
                break
            iters += 1
            stalls = stalls + 1 if abs(f_try - f_pen) <= opts.tol_obj * (1.0 + abs(f_try)) else 0
            x, f_pen = x_try, f_try
            grad = penalized_grad(x, t)
            step = min(s / opts.step_shrink, 1e6)
            if stalls >= 2:
                break
        if 1.0 / t <= opts.tol_obj:
            break
        t /= opts.barrier_mu

    x, _ = _project_elliptope(x, max_rounds=600, tol=1e-9)
    np.fill_diagonal(x, 1.0)
    return 0.5 * (x + x.T)
