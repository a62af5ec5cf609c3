"""Binary reflect/refract mode selection via semidefinite lifting and rounding.

The mode vector enters the secrecy objective through three real quadratics
(loop interference after receive combining, jamming power at Eve, and total
received interference for the cap). Substituting signs b = 2a - 1 and lifting
x = [b; 1] to X = x x^T turns each quadratic into an affine function
value = (1/4) Tr(Pi' X) + q' of a unit-diagonal PSD matrix. The relaxation is
solved by :func:`starjam.solver.solve_sdr`; this module builds the lift,
rounds the relaxed solution with sign patterns of Gaussian samples drawn with
the relaxed covariance, and provides an exhaustive search oracle for small
surfaces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channels import ChannelSet
from .system import Beamformers, MsRisConfig, SystemParams, link_metrics
from .surrogates import (SubproblemConstants, eve_trace_parts, si_trace_parts,
                         subproblem_constants, trace_to_hadamard)

__all__ = [
    "SdrProblem",
    "ModeContext",
    "lift_mode_problem",
    "gaussian_randomize",
    "exhaustive_mode_search",
    "mode_objective_batch",
]

LOG2 = math.log(2.0)
CAP_TOL = 1e-9  # relative tolerance on the interference cap for candidates
EXHAUSTIVE_MAX_ELEMENTS = 16


@dataclass(frozen=True)
class ModeContext:
    """Everything needed to score a candidate mode vector exactly."""

    ch: ChannelSet
    bf: Beamformers
    mu: np.ndarray
    nu: np.ndarray


@dataclass(frozen=True)
class SdrProblem:
    """Lifted mode-selection data: three (L+1)x(L+1) real symmetric matrices
    with block layout [[Pi, g], [g^T, 0]] and their constants, so that
    (1/4) Tr(Pi_i' x x^T) + q_i' reproduces the i-th physical quadratic at
    every binary mode vector (x = [2a - 1; 1])."""

    pi1p: np.ndarray
    pi2p: np.ndarray
    pi3p: np.ndarray
    q1p: float
    q2p: float
    q3p: float
    sys: SystemParams
    constants: SubproblemConstants
    tau_bar: float
    context: ModeContext

    @property
    def n_elements(self) -> int:
        return self.pi1p.shape[0] - 1

    def lifted_value(self, which: int, b: np.ndarray) -> float:
        """Evaluate form ``which`` (1, 2 or 3) at a sign vector b."""
        pi = {1: self.pi1p, 2: self.pi2p, 3: self.pi3p}[which]
        q = {1: self.q1p, 2: self.q2p, 3: self.q3p}[which]
        x = np.concatenate([np.asarray(b, dtype=float), [1.0]])
        return 0.25 * float(x @ pi @ x) + q


def _lift_form(pi_c: np.ndarray, z: np.ndarray, q: float, sign: float
               ) -> tuple[np.ndarray, float]:
    """Lift a^T pi a + sign*2Re{a^T z} + q through a = (1 + b)/2, x = [b; 1].

    Returns the real symmetric bordered matrix and the constant q' with
    value(b) = (1/4) x^T Pi' x + q'.
    """
    l_dim = pi_c.shape[0]
    pi_r = pi_c.real
    pi_r = 0.5 * (pi_r + pi_r.T)
    g = np.real(2.0 * sign * z + pi_c @ np.ones(l_dim))
    qp = 0.25 * float(pi_c.sum().real) + sign * float(z.sum().real) + q
    out = np.zeros((l_dim + 1, l_dim + 1))
    out[:l_dim, :l_dim] = pi_r
    out[:l_dim, l_dim] = g
    out[l_dim, :l_dim] = g
    return out, qp


def lift_mode_problem(ch: ChannelSet, bf: Beamformers, ms: MsRisConfig,
                      sys: SystemParams) -> SdrProblem:
    """Build the semidefinite lift of the mode-selection problem at fixed
    beamformers and phase banks; the tangent expansion is taken at the
    incumbent mode's interference-plus-noise power."""
    l_dim = ch.dims[0]
    if ms.n_elements != l_dim:
        raise ValueError("surface size mismatch between config and channels")
    refl_ph = np.exp(1j * ms.mu)
    refr_ph = np.exp(1j * ms.nu)
    tw = ch.h_ti @ bf.w

    # loop-interference and cap forms over the mode diagonal: fold the phase
    # banks into the w-side factors, leaving the binary diagonal as variable
    x1, y1, z1, q1 = si_trace_parts(ch, bf.w, bf.r)
    x3, y3, z3, q3 = si_trace_parts(ch, bf.w, None)
    phase_outer = np.outer(refl_ph, np.conj(refl_ph))
    f1 = trace_to_hadamard(x1, y1 * phase_outer, z1 * refl_ph[:, None], q1)
    f3 = trace_to_hadamard(x3, y3 * phase_outer, z3 * refl_ph[:, None], q3)

    # Eve jamming form over (1 - a): expanded in a with negative linear sign
    x2, y2 = eve_trace_parts(ch, bf.w)
    tv = refr_ph * tw
    yt = np.outer(tv, np.conj(tv))
    c_e = np.vdot(tv, ch.h_ie)                 # tv^H h_ie
    z2 = c_e * np.outer(tv, np.conj(ch.h_ie))  # (T' y2 T'^H)(h_ie h_ie^H)
    q2 = abs(np.vdot(ch.h_ie, tv)) ** 2
    f2 = trace_to_hadamard(x2, yt)

    pi1p, q1p = _lift_form(f1.pi, f1.z, f1.q, +1.0)
    pi2p, q2p = _lift_form(f2.pi, np.diag(z2).copy(), q2, -1.0)
    pi3p, q3p = _lift_form(f3.pi, f3.z, f3.q, +1.0)

    metrics = link_metrics(ch, ms, bf, sys)
    return SdrProblem(
        pi1p=pi1p, pi2p=pi2p, pi3p=pi3p, q1p=q1p, q2p=q2p, q3p=q3p,
        sys=sys, constants=subproblem_constants(ch, bf.r, sys),
        tau_bar=metrics.p_si + sys.noise_rx,
        context=ModeContext(ch=ch, bf=bf, mu=ms.mu.copy(), nu=ms.nu.copy()),
    )


def mode_objective_batch(sdr: SdrProblem, modes: np.ndarray
                         ) -> tuple[np.ndarray, np.ndarray]:
    """Exact signed secrecy rate and cap power for a (K, L) batch of binary
    mode vectors, vectorized through the effective-channel amplitudes."""
    ctx = sdr.context
    sys = sdr.sys
    ch, bf = ctx.ch, ctx.bf
    tw = ch.h_ti @ bf.w
    refl = np.exp(1j * ctx.mu) * tw
    refr = np.exp(1j * ctx.nu) * tw
    r_rows = bf.r @ ch.h_ir.conj().T            # (L,) = r h_ir^H
    c0 = bf.r @ ch.h_tr @ bf.w
    s_vec = r_rows * refl
    t_vec = np.conj(ch.h_ie) * refr
    u0 = ch.h_tr @ bf.w                         # (N,)
    u_mat = ch.h_ir.conj().T * refl[None, :]    # (N, L)

    a = np.asarray(modes, dtype=float)
    si = sys.p_bob * np.abs(c0 + a @ s_vec) ** 2
    jam = sys.p_bob * np.abs((1.0 - a) @ t_vec) ** 2
    cap = sys.p_bob * np.sum(np.abs(u0[None, :] + a @ u_mat.T) ** 2, axis=1)
    sig_bob = sdr.constants.bob_numerator
    sig_eve = sdr.constants.eve_numerator
    r_bob = np.log1p(sig_bob / (si + sys.noise_rx)) / LOG2
    r_eve = np.log1p(sig_eve / (jam + sys.noise_eve)) / LOG2
    return r_bob - r_eve, cap


def _lifted_scores(sdr: SdrProblem, modes: np.ndarray, swap: bool) -> np.ndarray:
    """Secrecy scores through the lifted forms; ``swap`` exchanges the roles
    of the interference and jamming forms (diagnostic only)."""
    b = 2.0 * np.asarray(modes, dtype=float) - 1.0
    x = np.concatenate([b, np.ones((b.shape[0], 1))], axis=1)
    v1 = 0.25 * np.einsum("ki,ij,kj->k", x, sdr.pi1p, x) + sdr.q1p
    v2 = 0.25 * np.einsum("ki,ij,kj->k", x, sdr.pi2p, x) + sdr.q2p
    si, jam = (v2, v1) if swap else (v1, v2)
    sys = sdr.sys
    r_bob = np.log1p(sdr.constants.bob_numerator
                     / (sys.p_bob * np.clip(si, 0.0, None) + sys.noise_rx)) / LOG2
    r_eve = np.log1p(sdr.constants.eve_numerator
                     / (sys.p_bob * np.clip(jam, 0.0, None) + sys.noise_eve)) / LOG2
    return r_bob - r_eve


def _best_feasible(sdr: SdrProblem, modes: np.ndarray, scoring: str
                   ) -> tuple[np.ndarray | None, float]:
    c_raw, cap = mode_objective_batch(sdr, modes)
    feasible = cap <= sdr.sys.p_si_max * (1.0 + CAP_TOL)
    if not np.any(feasible):
        return None, -np.inf
    if scoring == "exact":
        scores = c_raw
    elif scoring in ("lifted", "lifted_swapped"):
        scores = _lifted_scores(sdr, modes, swap=scoring == "lifted_swapped")
    else:
        raise ValueError(f"unknown scoring {scoring!r}")
    scores = np.where(feasible, scores, -np.inf)
    best = int(np.argmax(scores))
    return modes[best].astype(float), float(c_raw[best])


def gaussian_randomize(x_relaxed: np.ndarray, sdr: SdrProblem, g_samples: int,
                       rng: np.random.Generator, incumbent: np.ndarray | None = None,
                       workers: int = 1, scoring: str = "exact") -> np.ndarray:
    """Round the relaxed lift by signing Gaussian samples with covariance
    ``x_relaxed`` and keeping the best cap-feasible candidate.

    Candidates are scored with the exact secrecy objective by default (the
    ``lifted``/``lifted_swapped`` scorings exist for diagnostics only). When
    an ``incumbent`` mode vector is supplied the result never scores below
    it; when no candidate is feasible the incumbent is returned. Sample
    streams are indexed by draw, so results do not depend on ``workers``.
    """
    if g_samples < 1:
        raise ValueError("at least one randomization sample is required")
    x_relaxed = np.asarray(x_relaxed, dtype=float)
    dim = sdr.n_elements + 1
    if x_relaxed.shape != (dim, dim):
        raise ValueError("relaxed solution has the wrong dimension")
    evals, evecs = np.linalg.eigh(0.5 * (x_relaxed + x_relaxed.T))
    if evals[0] < -1e-6:
        raise ValueError("relaxed solution is not positive semidefinite")
    factor = evecs * np.sqrt(np.clip(evals, 0.0, None))
    draws = factor @ rng.standard_normal((dim, g_samples))
    signs = np.where(draws >= 0.0, 1.0, -1.0)
    signs = signs * signs[-1:, :]                 # global flip: last entry +1
    modes = 0.5 * (signs[:-1, :].T + 1.0)         # (G, L) binary candidates
    modes = np.unique(modes, axis=0)

    if workers > 1:
        chunks = np.array_split(modes, workers)
        results = [_best_feasible(sdr, c, scoring) for c in chunks if c.size]
        best_a, best_c = None, -np.inf
        for cand, c_val in results:
            if cand is not None and c_val > best_c:
                best_a, best_c = cand, c_val
    else:
        best_a, best_c = _best_feasible(sdr, modes, scoring)

    if incumbent is not None:
        inc = np.asarray(incumbent, dtype=float)
        inc_c, inc_cap = mode_objective_batch(sdr, inc[None, :])
        if best_a is None or (inc_cap[0] <= sdr.sys.p_si_max * (1.0 + CAP_TOL)
                              and inc_c[0] >= best_c):
            return inc
    if best_a is None:
        raise ValueError("no feasible rounding candidate and no incumbent supplied")
    return best_a


def exhaustive_mode_search(sdr: SdrProblem) -> np.ndarray:
    """Enumerate every binary mode vector (lexicographic order), drop the ones
    violating the interference cap, and return the exact-objective argmax.
    Rejects surfaces above 16 elements."""
    l_dim = sdr.n_elements
    if l_dim > EXHAUSTIVE_MAX_ELEMENTS:
        raise ValueError(f"exhaustive search limited to {EXHAUSTIVE_MAX_ELEMENTS} elements")
    count = 1 << l_dim
    shifts = l_dim - 1 - np.arange(l_dim)
    modes = (np.arange(count)[:, None] >> shifts[None, :]) & 1
    c_raw, cap = mode_objective_batch(sdr, modes)
    feasible = cap <= sdr.sys.p_si_max * (1.0 + CAP_TOL)
    if not np.any(feasible):
        raise ValueError("no binary mode satisfies the interference cap")
    scores = np.where(feasible, c_raw, -np.inf)
    return modes[int(np.argmax(scores))].astype(float)
