"""Convexification toolbox and the five smooth-concave surrogate subproblems.

Each block of the alternating optimizer maximizes a concave surrogate of the
signed secrecy rate built around the current iterate: the Bob-side log term is
replaced by its tangent in the interference-plus-noise power, the Eve-side
log term keeps its exact (convex) shape but its interior power is replaced by
the affine lower bound of the corresponding Hermitian quadratic, and the
surface quadratics are reduced from trace form to Hadamard-product quadratic
forms over the per-element coefficient vectors. Every surrogate is tangent to
the true objective at the expansion point and lower-bounds it everywhere on
the feasible set.

Problems are emitted as solver-agnostic :class:`ConvexProblem` descriptions:
a realified variable vector, one smooth concave objective oracle, and a list
of convex constraint-block oracles in ``value <= 0`` form with Jacobians.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .channels import ChannelSet
from .system import Beamformers, EsRisConfig, MsRisConfig, SystemParams, effective_channels, link_metrics

__all__ = [
    "QuadraticForm",
    "AffineBound",
    "LogRatioBound",
    "SubproblemConstants",
    "ConvexProblem",
    "InfeasibleExpansionError",
    "realify",
    "complexify",
    "taylor_log_tangent",
    "quad_linearize",
    "log_frac_lower",
    "trace_to_hadamard",
    "si_trace_parts",
    "eve_trace_parts",
    "build_w_problem",
    "build_r_problem",
    "build_es_problem",
    "build_ms_phase_problem",
    "dump_problem",
]

LOG2 = math.log(2.0)
POWER_FLOOR = 1e-15       # watts; floors degenerate expansion slacks
EVE_DOMAIN_EPS = 1e-6     # linearized Eve power kept above this noise fraction
SIGNAL_DOMAIN_EPS = 1e-9  # signal slack kept above this fraction of its expansion
EXPANSION_FEAS_TOL = 1e-8


class InfeasibleExpansionError(ValueError):
    """Expansion point violates a subproblem constraint beyond tolerance."""


def realify(z: np.ndarray) -> np.ndarray:
    """Stack a complex vector as [real; imag]."""
    z = np.asarray(z, dtype=complex)
    return np.concatenate([z.real, z.imag])


def complexify(x: np.ndarray) -> np.ndarray:
    """Inverse of :func:`realify`."""
    k = x.shape[0] // 2
    return x[:k] + 1j * x[k:]


@dataclass(frozen=True)
class QuadraticForm:
    """Hermitian quadratic value(x) = x^H pi x + 2 Re{x^T z} + q (real)."""

    pi: np.ndarray
    z: np.ndarray
    q: float

    def value(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=complex)
        return float((np.vdot(x, self.pi @ x) + 2.0 * (x @ self.z)).real + self.q)

    def cgrad(self, x: np.ndarray) -> np.ndarray:
        """Complex cogradient: d(value)/d[Re x] + j d(value)/d[Im x]."""
        return 2.0 * (self.pi @ np.asarray(x, dtype=complex) + np.conj(self.z))

    @property
    def dim(self) -> int:
        return self.pi.shape[0]


@dataclass(frozen=True)
class AffineBound:
    """Affine minorant value(x) = 2 Re{x^H vec} - const of a PSD quadratic."""

    vec: np.ndarray
    const: float

    def value(self, x: np.ndarray) -> float:
        return 2.0 * float(np.vdot(x, self.vec).real) - self.const

    def cgrad(self, x: np.ndarray) -> np.ndarray:
        return 2.0 * self.vec + 0.0 * np.asarray(x)


def taylor_log_tangent(a: float, tau_bar: float) -> tuple[float, float]:
    """Tangent of tau -> log2(1 + a/tau) at tau_bar, as (slope, intercept).

    The map is convex on tau > 0, so the tangent lower-bounds it everywhere
    and touches it at tau_bar.
    """
    if tau_bar <= 0:
        raise ValueError(f"expansion point tau_bar must be positive, got {tau_bar}")
    if a < 0:
        raise ValueError("numerator must be non-negative")
    p = 1.0 + a / tau_bar
    q = -a / tau_bar**2
    slope = q / (p * LOG2)
    intercept = math.log2(p) - slope * tau_bar
    return slope, intercept


def quad_linearize(m: np.ndarray, x_bar: np.ndarray) -> AffineBound:
    """Affine lower bound of x^H m x around x_bar for Hermitian PSD m:
    2 Re{x^H m x_bar} - x_bar^H m x_bar, tight at x_bar."""
    m = np.asarray(m, dtype=complex)
    scale = max(float(np.abs(m).max()), 1e-300)
    if not np.allclose(m, m.conj().T, atol=1e-12 * scale):
        raise ValueError("matrix must be Hermitian")
    x_bar = np.asarray(x_bar, dtype=complex)
    vec = m @ x_bar
    return AffineBound(vec=vec, const=float(np.vdot(x_bar, vec).real))


@dataclass(frozen=True)
class LogRatioBound:
    """Joint-concave minorant of (psi, tau) -> log2(1 + psi/tau).

    bound(psi, tau) = log2(1 + rho) + rho / ((1 + rho) ln2)
                      * (2 - psi_bar/psi - tau/tau_bar),   rho = psi_bar/tau_bar;
    tight at (psi_bar, tau_bar) and valid on the positive orthant.
    """

    psi_bar: float
    tau_bar: float

    @property
    def coeff(self) -> float:
        rho = self.psi_bar / self.tau_bar
        return rho / ((1.0 + rho) * LOG2)

    def value(self, psi: float, tau: float) -> float:
        rho = self.psi_bar / self.tau_bar
        return math.log2(1.0 + rho) + self.coeff * (2.0 - self.psi_bar / psi - tau / self.tau_bar)

    def partials(self, psi: float, tau: float) -> tuple[float, float]:
        return self.coeff * self.psi_bar / psi**2, -self.coeff / self.tau_bar


def log_frac_lower(psi_bar: float, tau_bar: float) -> LogRatioBound:
    """Concave lower bound of log2(1 + psi/tau) anchored at (psi_bar, tau_bar)."""
    if psi_bar <= 0 or tau_bar <= 0:
        raise ValueError("expansion point must be strictly positive")
    return LogRatioBound(psi_bar=psi_bar, tau_bar=tau_bar)


def trace_to_hadamard(x: np.ndarray, y: np.ndarray, z: np.ndarray | None = None,
                      q: float = 0.0) -> QuadraticForm:
    """Reduce Tr(D^H x D y) + Tr(D z) + Tr(D^H z^H) + q with D = diag(d) to a
    quadratic form in d: d^H (x . y^T) d + 2 Re{d^T diag(z)} + q.

    The transpose on y is what makes the identity hold entrywise
    (Tr(D^H x D y) = sum_ij conj(d_i) x_ij y_ji d_j); the result is
    Hermitian-symmetrized before use.
    """
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    if x.shape != y.shape or x.shape[0] != x.shape[1]:
        raise ValueError("factors must be square and conformable")
    pi = x * y.T
    pi = 0.5 * (pi + pi.conj().T)
    if z is None:
        zd = np.zeros(x.shape[0], dtype=complex)
    else:
        z = np.asarray(z, dtype=complex)
        if z.shape != x.shape:
            raise ValueError("linear factor dimension mismatch")
        zd = np.diag(z).copy()
    return QuadraticForm(pi=pi, z=zd, q=float(q))


@dataclass(frozen=True)
class SubproblemConstants:
    """Fixed link-budget numerators (watts): Bob-side signal power through the
    current receive beamformer and Eve-side signal power."""

    bob_numerator: float
    eve_numerator: float

    def __post_init__(self):
        if self.bob_numerator < 0 or self.eve_numerator < 0:
            raise ValueError("numerators must be non-negative")


def subproblem_constants(ch: ChannelSet, r: np.ndarray, sys: SystemParams) -> SubproblemConstants:
    a = sys.p_alice * abs(np.asarray(r) @ ch.h_ar.conj()) ** 2
    b = sys.p_alice * abs(ch.h_ae) ** 2
    return SubproblemConstants(bob_numerator=float(a), eve_numerator=float(b))


@dataclass
class ConvexProblem:
    """Solver-agnostic description of one smooth concave maximization.

    ``objective(x) -> (value, grad)`` is concave over the feasible set;
    ``constraints`` is a list of block oracles ``g(x) -> (vals, jac)`` with
    the convention vals <= 0 on the feasible set (vals shape (m,), jac shape
    (m, dim)). ``x0`` embeds the expansion point with its slacks at their
    tight values and is feasible by construction.
    """

    dim: int
    objective: Callable[[np.ndarray], tuple[float, np.ndarray]]
    constraints: list[Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]]
    x0: np.ndarray
    block: str
    to_physical: Callable[[np.ndarray], Any]
    from_physical: Callable[[Any], np.ndarray]
    expansion: dict = field(default_factory=dict)

    def constraint_values(self, x: np.ndarray) -> np.ndarray:
        if not self.constraints:
            return np.zeros(0)
        return np.concatenate([g(x)[0] for g in self.constraints])

    def max_violation(self, x: np.ndarray) -> float:
        vals = self.constraint_values(x)
        return float(vals.max()) if vals.size else 0.0


def _check_expansion_feasible(problem: ConvexProblem) -> ConvexProblem:
    viol = problem.max_violation(problem.x0)
    if viol > EXPANSION_FEAS_TOL:
        raise InfeasibleExpansionError(
            f"{problem.block}: expansion point violates constraints by {viol:.3e}")
    return problem


def _eve_log_term(b: float, rho: float) -> float:
    """log2(1 + b/rho), the Eve-rate shape shared by several objectives."""
    return math.log1p(b / rho) / LOG2


def _eve_log_coeff(b: float, rho: float) -> float:
    """d/d rho of -log2(1 + b/rho) (non-negative for rho > 0)."""
    return b / ((rho * rho + b * rho) * LOG2)


# ---------------------------------------------------------------------------
# trace-form factor extraction shared by the surface subproblems
# ---------------------------------------------------------------------------

def si_trace_parts(ch: ChannelSet, w: np.ndarray, r: np.ndarray | None
                   ) -> tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    """Factor the loop-interference quadratic over the reflect coefficients.

    With projector P = r^H r (or identity when ``r`` is None, giving the
    total received SI used by the power cap), returns (x, y, z, q) such that
    w^H loop(d)^H P loop(d) w = Tr(D^H x D y) + Tr(D z) + Tr(D^H z^H) + q
    for loop(d) = h_tr + h_ir^H diag(d) h_ti.
    """
    tw = ch.h_ti @ w                       # (L,)
    direct = ch.h_tr @ w                   # (N,)
    if r is None:
        x = ch.h_ir @ ch.h_ir.conj().T     # (L, L)
        yv = ch.h_ir @ direct              # (L,)
        q = float(np.vdot(direct, direct).real)
    else:
        rv = np.asarray(r, dtype=complex)
        s = ch.h_ir @ np.conj(rv)          # (L,) = h_ir r^H
        x = np.outer(s, np.conj(s))
        yv = s * (rv @ direct)             # h_ir r^H (r direct)
        q = abs(rv @ direct) ** 2
    y = np.outer(tw, np.conj(tw))
    z = np.outer(tw, np.conj(yv))
    return x, y, z, q


def eve_trace_parts(ch: ChannelSet, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Factors (x, y) of the Eve jamming quadratic over refract coefficients:
    |eve(d) w|^2 = Tr(D^H x D y) with x = h_ie h_ie^H, y = (h_ti w)(h_ti w)^H."""
    tw = ch.h_ti @ w
    return np.outer(ch.h_ie, np.conj(ch.h_ie)), np.outer(tw, np.conj(tw))


# ---------------------------------------------------------------------------
# transmit beamformer subproblem
# ---------------------------------------------------------------------------

def build_w_problem(ch: ChannelSet, ris, bf_bar: Beamformers, sys: SystemParams,
                    slack_bar: float | None = None) -> ConvexProblem:
    """Surrogate over the transmit beamformer w at fixed surface and r.

    Variables: realified w plus the explicit interference slack t (in units
    of the Bob noise power). The Eve-rate slack pair is eliminated at its
    tight value, with the Eve power replaced by its affine minorant.
    """
    loop, eve = effective_channels(ch, ris)
    r = bf_bar.r
    w_bar = bf_bar.w
    m_dim = w_bar.shape[0]
    consts = subproblem_constants(ch, r, sys)
    a, b = consts.bob_numerator, consts.eve_numerator

    rh = r @ loop                                    # (M,) row r @ loop
    m_si = np.outer(rh.conj(), rh) * sys.p_bob       # P_B loop^H r^H r loop
    m_th = loop.conj().T @ loop * sys.p_bob          # P_B loop^H loop
    m_eve = np.outer(eve.conj(), eve) * sys.p_bob    # P_B eve^H eve

    def si_watts(w):
        return float(np.vdot(w, m_si @ w).real)

    tau_bar = slack_bar if slack_bar is not None else si_watts(w_bar) + sys.noise_rx
    tau_bar = max(tau_bar, POWER_FLOOR)
    slope, intercept = taylor_log_tangent(a, tau_bar)

    eve_lin = quad_linearize(m_eve, w_bar)           # minorant of P_B |eve w|^2
    g_eve = realify(eve_lin.cgrad(w_bar))            # constant cogradient
    noise = sys.noise_rx

    def rho_of(w):
        return eve_lin.value(w) + sys.noise_eve

    def objective(x):
        w = complexify(x[:2 * m_dim])
        t = x[-1]
        val = intercept + slope * (t * noise)
        rho = rho_of(w)
        val -= _eve_log_term(b, rho)
        grad = np.zeros_like(x)
        grad[:2 * m_dim] = _eve_log_coeff(b, rho) * g_eve
        grad[-1] = slope * noise
        return val, grad

    def c_tau(x):
        w = complexify(x[:2 * m_dim])
        val = (si_watts(w) + noise) / noise - x[-1]
        jac = np.zeros((1, x.shape[0]))
        jac[0, :2 * m_dim] = realify(2.0 * (m_si @ w)) / noise
        jac[0, -1] = -1.0
        return np.array([val]), jac

    def c_power(x):
        w = x[:2 * m_dim]
        jac = np.zeros((1, x.shape[0]))
        jac[0, :2 * m_dim] = 2.0 * w
        return np.array([float(w @ w) - 1.0]), jac

    def c_threshold(x):
        w = complexify(x[:2 * m_dim])
        val = float(np.vdot(w, m_th @ w).real) / sys.p_si_max - 1.0
        jac = np.zeros((1, x.shape[0]))
        jac[0, :2 * m_dim] = realify(2.0 * (m_th @ w)) / sys.p_si_max
        return np.array([val]), jac

    def c_domain(x):
        w = complexify(x[:2 * m_dim])
        val = (EVE_DOMAIN_EPS * sys.noise_eve - rho_of(w)) / sys.noise_eve
        jac = np.zeros((1, x.shape[0]))
        jac[0, :2 * m_dim] = -g_eve / sys.noise_eve
        return np.array([val]), jac

    def from_physical(w):
        w = np.asarray(w, dtype=complex)
        return np.concatenate([realify(w), [(si_watts(w) + noise) / noise]])

    problem = ConvexProblem(
        dim=2 * m_dim + 1,
        objective=objective,
        constraints=[c_tau, c_power, c_threshold, c_domain],
        x0=from_physical(w_bar),
        block="transmit_beamformer",
        to_physical=lambda x: complexify(x[:2 * m_dim]),
        from_physical=from_physical,
        expansion={"tau_bar": tau_bar, "constants": consts, "w_bar": w_bar},
    )
    return _check_expansion_feasible(problem)


# ---------------------------------------------------------------------------
# receive beamformer subproblem
# ---------------------------------------------------------------------------

def build_r_problem(ch: ChannelSet, ris, bf_bar: Beamformers, sys: SystemParams,
                    slack_bar: tuple[float, float] | None = None) -> ConvexProblem:
    """Surrogate over the receive beamformer r at fixed surface and w.

    Variables: realified r plus the signal slack p (units of its expansion
    value) and interference slack t (units of the Bob noise power). The Eve
    rate is a constant in this block. The Bob log ratio is replaced by its
    joint-concave minorant; the signal quadratic is linearized around r_bar.
    """
    loop, _ = effective_channels(ch, ris)
    r_bar = np.asarray(bf_bar.r, dtype=complex)
    n_dim = r_bar.shape[0]
    r_eve_const = link_metrics(ch, ris, bf_bar, sys).r_eve

    m_ar = np.outer(ch.h_ar, ch.h_ar.conj())   # |v^T conj(h_ar)|^2 = v^H m_ar v
    s = loop @ bf_bar.w
    m_si = np.outer(np.conj(s), s) * sys.p_bob  # |r s|^2 P_B as v^H m v over v = r

    def sig_watts(v):
        return sys.p_alice * float(np.vdot(v, m_ar @ v).real)

    def si_watts(v):
        return float(np.vdot(v, m_si @ v).real)

    if slack_bar is not None:
        psi_bar, tau_bar = slack_bar
    else:
        psi_bar, tau_bar = sig_watts(r_bar), si_watts(r_bar) + sys.noise_rx
    psi_bar = max(psi_bar, POWER_FLOOR)
    tau_bar = max(tau_bar, POWER_FLOOR)
    bound = log_frac_lower(psi_bar, tau_bar)

    sig_lin = quad_linearize(m_ar * sys.p_alice, r_bar)
    g_sig = realify(sig_lin.cgrad(r_bar))      # constant cogradient of the minorant
    noise = sys.noise_rx

    def objective(x):
        p, t = x[-2], x[-1]
        val = bound.value(p * psi_bar, t * noise) - r_eve_const
        dp, dt = bound.partials(p * psi_bar, t * noise)
        grad = np.zeros_like(x)
        grad[-2] = dp * psi_bar
        grad[-1] = dt * noise
        return val, grad

    def c_signal(x):
        v = complexify(x[:2 * n_dim])
        val = x[-2] - sig_lin.value(v) / psi_bar
        jac = np.zeros((1, x.shape[0]))
        jac[0, :2 * n_dim] = -g_sig / psi_bar
        jac[0, -2] = 1.0
        return np.array([val]), jac

    def c_tau(x):
        v = complexify(x[:2 * n_dim])
        val = (si_watts(v) + noise) / noise - x[-1]
        jac = np.zeros((1, x.shape[0]))
        jac[0, :2 * n_dim] = realify(2.0 * (m_si @ v)) / noise
        jac[0, -1] = -1.0
        return np.array([val]), jac

    def c_power(x):
        v = x[:2 * n_dim]
        jac = np.zeros((1, x.shape[0]))
        jac[0, :2 * n_dim] = 2.0 * v
        return np.array([float(v @ v) - 1.0]), jac

    def c_floor(x):
        jac = np.zeros((1, x.shape[0]))
        jac[0, -2] = -1.0
        return np.array([SIGNAL_DOMAIN_EPS - x[-2]]), jac

    def from_physical(v):
        v = np.asarray(v, dtype=complex)
        p = max(sig_lin.value(v), SIGNAL_DOMAIN_EPS * psi_bar) / psi_bar
        t = (si_watts(v) + noise) / noise
        return np.concatenate([realify(v), [p, t]])

    problem = ConvexProblem(
        dim=2 * n_dim + 2,
        objective=objective,
        constraints=[c_signal, c_tau, c_power, c_floor],
        x0=from_physical(r_bar),
        block="receive_beamformer",
        to_physical=lambda x: complexify(x[:2 * n_dim]),
        from_physical=from_physical,
        expansion={"psi_bar": psi_bar, "tau_bar": tau_bar, "r_bar": r_bar,
                   "r_eve_const": r_eve_const},
    )
    return _check_expansion_feasible(problem)


# ---------------------------------------------------------------------------
# surface coefficient subproblems (energy splitting and mode-switching phases)
# ---------------------------------------------------------------------------

def _surface_problem(ch: ChannelSet, bf: Beamformers, sys: SystemParams,
                     mu_bar: np.ndarray, nu_bar: np.ndarray,
                     mode_flags: np.ndarray | None, block: str,
                     slack_bar: float | None) -> ConvexProblem:
    """Shared assembly of the two surface subproblems over (mu, nu) in C^2L.

    ``mode_flags`` folds a fixed binary reflect/refract split into the
    quadratic factors (mode-switching phases); None gives the energy-splitting
    problem with the coupled per-element power constraint.
    """
    l_dim = ch.dims[0]
    w, r = bf.w, bf.r
    consts = subproblem_constants(ch, r, sys)
    a, b = consts.bob_numerator, consts.eve_numerator

    x1, y1, z1, q1 = si_trace_parts(ch, w, r)
    x3, y3, z3, q3 = si_trace_parts(ch, w, None)
    x2, y2 = eve_trace_parts(ch, w)
    if mode_flags is not None:
        refl = np.asarray(mode_flags, dtype=float)
        refr = 1.0 - refl
        x1 = x1 * np.outer(refl, refl)
        z1 = z1 * refl[None, :]
        x3 = x3 * np.outer(refl, refl)
        z3 = z3 * refl[None, :]
        x2 = x2 * np.outer(refr, refr)

    f_si = trace_to_hadamard(x1, y1, z1, q1)       # watts / p_bob, over mu
    f_th = trace_to_hadamard(x3, y3, z3, q3)
    f_eve = trace_to_hadamard(x2, y2)              # over nu
    noise = sys.noise_rx

    def si_watts(mu):
        return sys.p_bob * f_si.value(mu)

    tau_bar = slack_bar if slack_bar is not None else si_watts(mu_bar) + noise
    tau_bar = max(tau_bar, POWER_FLOOR)
    slope, intercept = taylor_log_tangent(a, tau_bar)

    eve_lin = quad_linearize(f_eve.pi * sys.p_bob, nu_bar)
    g_eve = realify(eve_lin.cgrad(nu_bar))

    def rho_of(nu):
        return eve_lin.value(nu) + sys.noise_eve

    def split(x):
        return complexify(x[:2 * l_dim]), complexify(x[2 * l_dim:])

    def objective(x):
        mu, nu = split(x)
        rho = rho_of(nu)
        val = intercept + slope * (si_watts(mu) + noise) - _eve_log_term(b, rho)
        grad = np.empty_like(x)
        grad[:2 * l_dim] = slope * sys.p_bob * realify(f_si.cgrad(mu))
        grad[2 * l_dim:] = _eve_log_coeff(b, rho) * g_eve
        return val, grad

    idx = np.arange(l_dim)

    def c_elements(x):
        # energy splitting: coupled |mu_l|^2 + |nu_l|^2 <= 1 per element
        xr = x.reshape(4, l_dim)
        vals = (xr**2).sum(axis=0) - 1.0
        jac = np.zeros((l_dim, x.shape[0]))
        for kblk in range(4):
            jac[idx, kblk * l_dim + idx] = 2.0 * xr[kblk]
        return vals, jac

    def c_mu_modulus(x):
        xr = x.reshape(4, l_dim)
        vals = xr[0]**2 + xr[1]**2 - 1.0
        jac = np.zeros((l_dim, x.shape[0]))
        jac[idx, idx] = 2.0 * xr[0]
        jac[idx, l_dim + idx] = 2.0 * xr[1]
        return vals, jac

    def c_nu_modulus(x):
        xr = x.reshape(4, l_dim)
        vals = xr[2]**2 + xr[3]**2 - 1.0
        jac = np.zeros((l_dim, x.shape[0]))
        jac[idx, 2 * l_dim + idx] = 2.0 * xr[2]
        jac[idx, 3 * l_dim + idx] = 2.0 * xr[3]
        return vals, jac

    def c_threshold(x):
        mu, _ = split(x)
        val = sys.p_bob * f_th.value(mu) / sys.p_si_max - 1.0
        jac = np.zeros((1, x.shape[0]))
        jac[0, :2 * l_dim] = (sys.p_bob / sys.p_si_max) * realify(f_th.cgrad(mu))
        return np.array([val]), jac

    def c_domain(x):
        _, nu = split(x)
        val = (EVE_DOMAIN_EPS * sys.noise_eve - rho_of(nu)) / sys.noise_eve
        jac = np.zeros((1, x.shape[0]))
        jac[0, 2 * l_dim:] = -g_eve / sys.noise_eve
        return np.array([val]), jac

    if mode_flags is None:
        amp_constraints = [c_elements]
    else:
        amp_constraints = [c_mu_modulus, c_nu_modulus]

    def from_physical(phys):
        mu, nu = phys
        return np.concatenate([realify(np.asarray(mu, dtype=complex)),
                               realify(np.asarray(nu, dtype=complex))])

    problem = ConvexProblem(
        dim=4 * l_dim,
        objective=objective,
        constraints=amp_constraints + [c_threshold, c_domain],
        x0=from_physical((mu_bar, nu_bar)),
        block=block,
        to_physical=split,
        from_physical=from_physical,
        expansion={"tau_bar": tau_bar, "constants": consts,
                   "mu_bar": mu_bar, "nu_bar": nu_bar,
                   "si_form": f_si, "threshold_form": f_th, "eve_form": f_eve},
    )
    return _check_expansion_feasible(problem)


def build_es_problem(ch: ChannelSet, bf: Beamformers, es_bar: EsRisConfig,
                     sys: SystemParams, slack_bar: float | None = None) -> ConvexProblem:
    """Surrogate over the energy-splitting coefficient pair (mu, nu) at fixed
    beamformers, with the coupled per-element power constraint."""
    return _surface_problem(ch, bf, sys, es_bar.reflect_coeffs(), es_bar.refract_coeffs(),
                            None, "es_coefficients", slack_bar)


def build_ms_phase_problem(ch: ChannelSet, bf: Beamformers, ms_bar: MsRisConfig,
                           sys: SystemParams, slack_bar: float | None = None) -> ConvexProblem:
    """Surrogate over the mode-switching phase banks at a fixed binary mode
    split, with the relaxed per-bank unit-modulus constraints."""
    mu_bar = np.exp(1j * ms_bar.mu)
    nu_bar = np.exp(1j * ms_bar.nu)
    return _surface_problem(ch, bf, sys, mu_bar, nu_bar, ms_bar.a,
                            "ms_phases", slack_bar)


def dump_problem(problem: ConvexProblem, path) -> None:
    """Debug dump: block tag, dimensions, expansion scalars, start vector."""
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"block {problem.block}\n")
        f.write(f"dim {problem.dim}\n")
        f.write(f"n_constraint_blocks {len(problem.constraints)}\n")
        for key, val in problem.expansion.items():
            if isinstance(val, (int, float)):
                f.write(f"{key} {val:.17g}\n")
        f.write("x0 " + " ".join(f"{v:.17g}" for v in problem.x0) + "\n")
