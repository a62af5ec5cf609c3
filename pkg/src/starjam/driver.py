"""Alternating block optimization of the secrecy capacity, plus baselines.

One outer iteration solves the transmit-beamformer surrogate, the surface
coefficient surrogate (amplitudes+phases for energy splitting, phases then
the lifted mode selection for mode switching), and the receive-beamformer
surrogate, in that order, each built at the current iterate. Every block's
candidate is safeguarded: it replaces the incumbent only if it is feasible
and does not decrease the exact signed secrecy rate, which makes the accepted
trajectory monotone by construction. The loop exits when the relative change
of the reported capacity falls below the configured threshold.

Also provides the two reference schemes: receive-only operation (no jamming)
and conventional-cancellation full-duplex jamming with residual
self-interference proportional to the jamming power.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .channels import ChannelSet
from .system import (Beamformers, EsRisConfig, LinkMetrics, MsRisConfig, SystemParams,
                     effective_channels, feasibility, link_metrics)
from .surrogates import (InfeasibleExpansionError, build_es_problem,
                         build_ms_phase_problem, build_r_problem, build_w_problem)
from .solver import (InfeasibleStartError, SdrInfeasibleError, SolverNumericsError,
                     SolverOptions, solve, solve_sdr)
from .modes import exhaustive_mode_search, gaussian_randomize, lift_mode_problem

__all__ = [
    "AoOptions",
    "AoState",
    "AoTrace",
    "BlockRecord",
    "IterationRecord",
    "InitializationError",
    "initialize",
    "optimize",
    "baseline_woj",
    "baseline_wij",
    "trace_csv_header",
    "trace_csv_rows",
]

LOG2 = math.log(2.0)
MAX_INIT_HALVINGS = 60
_SOLVER_ERRORS = (InfeasibleExpansionError, InfeasibleStartError,
                  SolverNumericsError, SdrInfeasibleError)


class InitializationError(RuntimeError):
    """No feasible starting point found (pathological channel)."""


@dataclass(frozen=True)
class AoOptions:
    """Outer-loop controls.

    ``delta`` is the relative capacity-change convergence threshold;
    ``n_randomizations`` the number of rounding samples for mode selection;
    ``safeguard`` keeps the incumbent whenever a block candidate would lower
    the exact objective or break feasibility.
    """

    delta: float = 1e-5
    max_outer_iters: int = 100
    init_strategy: str = "matched_filter"
    solver_opts: SolverOptions = field(default_factory=SolverOptions)
    sdr_solver_opts: SolverOptions = field(default_factory=lambda: SolverOptions(max_iters=200))
    n_randomizations: int = 1000
    safeguard: bool = True
    exhaustive_modes_up_to: int = 0  # use exact mode search for L <= this

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if self.max_outer_iters < 1:
            raise ValueError("max_outer_iters must be at least 1")
        if self.init_strategy not in ("matched_filter", "random_phase"):
            raise ValueError(f"unknown init_strategy {self.init_strategy!r}")


@dataclass
class AoState:
    bf: Beamformers
    ris: EsRisConfig | MsRisConfig
    metrics: LinkMetrics


@dataclass
class BlockRecord:
    name: str
    c_raw_after: float
    accepted: bool
    note: str = ""


@dataclass
class IterationRecord:
    iteration: int
    c_raw_before: float
    blocks: list[BlockRecord]
    p_si: float
    feas_margin: float


@dataclass
class AoTrace:
    records: list[IterationRecord]
    n_iterations: int
    converged: bool
    stalled: bool = False

    def c_raw_path(self) -> np.ndarray:
        """Accepted signed-rate value after each block, in execution order."""
        vals = []
        for rec in self.records:
            for blk in rec.blocks:
                if blk.accepted:
                    vals.append(blk.c_raw_after)
        return np.array(vals)


def _unit(v: np.ndarray) -> np.ndarray:
    nrm = float(np.linalg.norm(v))
    if nrm == 0.0:
        out = np.zeros_like(v)
        out[0] = 1.0
        return out
    return v / nrm


def _clip_ball(v: np.ndarray) -> np.ndarray:
    """Project onto the closed unit ball (scrubs solver feasibility slack)."""
    nrm = float(np.linalg.norm(v))
    return v / nrm if nrm > 1.0 else v


def _es_from_relaxed(mu_c: np.ndarray, nu_c: np.ndarray) -> EsRisConfig:
    """Exact-project relaxed coefficients onto the split-power constraint set."""
    total = np.sqrt(np.abs(mu_c) ** 2 + np.abs(nu_c) ** 2)
    scale = np.where(total > 1.0, 1.0 / np.maximum(total, 1e-300), 1.0)
    return EsRisConfig.from_complex(mu_c * scale, nu_c * scale)


def initialize(mode: str, ch: ChannelSet, sys: SystemParams,
               rng: np.random.Generator, opts: AoOptions | None = None) -> AoState:
    """Feasible starting point: matched-filter (or random) receive beamformer,
    balanced-split (ES) or random-mode (MS) surface with random phases, and a
    random transmit direction halved until the interference cap holds."""
    opts = opts or AoOptions()
    l_dim, m_dim, n_dim = ch.dims
    matched = opts.init_strategy == "matched_filter"
    if matched:
        r0 = _unit(ch.h_ar.copy())
    else:
        r0 = _unit(rng.standard_normal(n_dim) + 1j * rng.standard_normal(n_dim))

    mu0 = rng.uniform(0.0, 2.0 * np.pi, l_dim)
    nu0 = rng.uniform(0.0, 2.0 * np.pi, l_dim)
    a0 = rng.integers(0, 2, l_dim)
    if mode == "es":
        ris = EsRisConfig(u=np.full(l_dim, 1.0 / math.sqrt(2.0)),
                          v=np.full(l_dim, 1.0 / math.sqrt(2.0)), mu=mu0, nu=nu0)
    elif mode == "ms":
        ris = MsRisConfig(a=a0, mu=mu0, nu=nu0)
    else:
        raise ValueError(f"unknown mode {mode!r}")

    w0 = _unit(rng.standard_normal(m_dim) + 1j * rng.standard_normal(m_dim))
    loop, _ = effective_channels(ch, ris)
    # Power backoff alone parks the jammer at negligible power, where every
    # Eve-side linearization is flat and the alternation cannot leave the
    # no-jamming point; project the draw onto the loop null space first so
    # the start carries full jamming power at zero interference when the
    # antenna surplus provides one.
    if m_dim > n_dim:
        _, svals, vh = np.linalg.svd(loop)
        rank = int(np.sum(svals > max(float(svals.max(initial=0.0)), 1e-300) * 1e-12))
        if rank < m_dim:
            basis = vh[rank:, :].conj().T
            w_null = basis @ (basis.conj().T @ w0)
            if float(np.linalg.norm(w_null)) > 1e-9:
                w0 = _unit(w_null)
    for _ in range(MAX_INIT_HALVINGS):
        if sys.p_bob * float(np.linalg.norm(loop @ w0) ** 2) <= sys.p_si_max:
            break
        w0 = 0.5 * w0
    else:
        raise InitializationError("interference cap unreachable by power backoff")

    if matched:
        # Matched refract phases: the Eve-side quadratic is rank one, so its
        # linearization is flat around a bank orthogonal to the jamming
        # cascade and the alternation cannot build jamming from such a start.
        # Aligning each element to the through-path cascade is the refract
        # analogue of the matched receive filter.
        cascade = np.conj(ch.h_ie) * (ch.h_ti @ w0)
        nu_matched = np.mod(-np.angle(cascade), 2.0 * np.pi)
        if mode == "es":
            ris = EsRisConfig(u=ris.u, v=ris.v, mu=ris.mu, nu=nu_matched)
        else:
            ris = MsRisConfig(a=ris.a, mu=ris.mu, nu=nu_matched)

    bf = Beamformers(w=w0, r=r0)
    state = AoState(bf=bf, ris=ris, metrics=link_metrics(ch, ris, bf, sys))
    report = feasibility(ch, ris, bf, sys)
    if not report.ok:
        raise InitializationError(f"initial state infeasible by {report.worst_violation:.3e}")
    return state


def _try_accept(state: AoState, candidate: AoState, ch: ChannelSet,
                sys: SystemParams, safeguard: bool) -> tuple[AoState, bool, str]:
    report = feasibility(ch, candidate.ris, candidate.bf, sys)
    if not report.ok:
        return state, False, f"infeasible ({report.worst_violation:.2e})"
    if safeguard and candidate.metrics.c_raw < state.metrics.c_raw:
        return state, False, "objective decreased"
    return candidate, True, ""


def _w_block(state, ch, sys, opts):
    problem = build_w_problem(ch, state.ris, state.bf, sys)
    sol = solve(problem, opts=opts.solver_opts)
    w_new = _clip_ball(problem.to_physical(sol.x))
    bf = Beamformers(w=w_new, r=state.bf.r)
    return AoState(bf=bf, ris=state.ris, metrics=link_metrics(ch, state.ris, bf, sys))


def _r_block(state, ch, sys, opts):
    problem = build_r_problem(ch, state.ris, state.bf, sys)
    sol = solve(problem, opts=opts.solver_opts)
    r_new = _clip_ball(problem.to_physical(sol.x))
    bf = Beamformers(w=state.bf.w, r=r_new)
    return AoState(bf=bf, ris=state.ris, metrics=link_metrics(ch, state.ris, bf, sys))


def _es_block(state, ch, sys, opts):
    problem = build_es_problem(ch, state.bf, state.ris, sys)
    sol = solve(problem, opts=opts.solver_opts)
    mu_c, nu_c = problem.to_physical(sol.x)
    ris = _es_from_relaxed(mu_c, nu_c)
    return AoState(bf=state.bf, ris=ris, metrics=link_metrics(ch, ris, state.bf, sys))


def _ms_phase_block(state, ch, sys, opts):
    problem = build_ms_phase_problem(ch, state.bf, state.ris, sys)
    sol = solve(problem, opts=opts.solver_opts)
    mu_c, nu_c = problem.to_physical(sol.x)
    # Restoring unit modulus on the reflect bank can break an interference
    # null the relaxed solution kept by shrinking |mu|; the refract bank never
    # touches the loop channel, so a refract-only update is always safe.
    # Offer the full update first and fall back to the refract-only one.
    full = MsRisConfig(a=state.ris.a.copy(), mu=np.angle(mu_c), nu=np.angle(nu_c))
    refr_only = MsRisConfig(a=state.ris.a.copy(), mu=state.ris.mu.copy(),
                            nu=np.angle(nu_c))
    m_full = link_metrics(ch, full, state.bf, sys)
    m_refr = link_metrics(ch, refr_only, state.bf, sys)
    if m_full.c_raw >= m_refr.c_raw and feasibility(ch, full, state.bf, sys).ok:
        return AoState(bf=state.bf, ris=full, metrics=m_full)
    return AoState(bf=state.bf, ris=refr_only, metrics=m_refr)


def _mode_block(state, ch, sys, opts, rng):
    sdr = lift_mode_problem(ch, state.bf, state.ris, sys)
    incumbent = state.ris.a.copy()
    if 0 < ch.dims[0] <= opts.exhaustive_modes_up_to:
        a_new = exhaustive_mode_search(sdr)
    else:
        x_inc = np.concatenate([2.0 * incumbent - 1.0, [1.0]])
        relaxed = solve_sdr(sdr, opts=opts.sdr_solver_opts, x_init=np.outer(x_inc, x_inc))
        a_new = gaussian_randomize(relaxed, sdr, opts.n_randomizations, rng,
                                   incumbent=incumbent)
    ris = MsRisConfig(a=a_new, mu=state.ris.mu.copy(), nu=state.ris.nu.copy())
    return AoState(bf=state.bf, ris=ris, metrics=link_metrics(ch, ris, state.bf, sys))


def optimize(mode: str, ch: ChannelSet, sys: SystemParams,
             opts: AoOptions | None = None,
             rng: np.random.Generator | None = None) -> tuple[AoState, AoTrace]:
    """Run the full alternating optimization for ``mode`` in {"es", "ms"}."""
    opts = opts or AoOptions()
    rng = rng if rng is not None else np.random.default_rng(0)
    state = initialize(mode, ch, sys, rng, opts)

    if mode == "es":
        blocks = [("transmit", _w_block), ("surface", _es_block), ("receive", _r_block)]
    else:
        blocks = [("transmit", _w_block), ("surface", _ms_phase_block),
                  ("mode", _mode_block), ("receive", _r_block)]

    records: list[IterationRecord] = []
    converged = False
    stalled = False
    reject_streak = 0
    for k in range(opts.max_outer_iters):
        c_before_raw = state.metrics.c_raw
        block_recs: list[BlockRecord] = []
        any_accepted = False
        for name, fn in blocks:
            try:
                if fn is _mode_block:
                    candidate = fn(state, ch, sys, opts, rng)
                else:
                    candidate = fn(state, ch, sys, opts)
            except _SOLVER_ERRORS as exc:
                block_recs.append(BlockRecord(name=name, c_raw_after=state.metrics.c_raw,
                                              accepted=False, note=str(exc)))
                continue
            state, accepted, note = _try_accept(state, candidate, ch, sys, opts.safeguard)
            any_accepted = any_accepted or accepted
            block_recs.append(BlockRecord(name=name, c_raw_after=state.metrics.c_raw,
                                          accepted=accepted, note=note))
        report = feasibility(ch, state.ris, state.bf, sys)
        records.append(IterationRecord(
            iteration=k, c_raw_before=c_before_raw, blocks=block_recs,
            p_si=state.metrics.p_si, feas_margin=report.worst_violation))
        reject_streak = 0 if any_accepted else reject_streak + 1
        # relative change of the optimization objective (the unclamped rate
        # difference); the max() guard covers non-positive incumbents
        rel = abs(state.metrics.c_raw - c_before_raw) / max(c_before_raw, 1e-9)
        if rel <= opts.delta:
            converged = True
            break
        if reject_streak >= 3:
            stalled = True
            break

    trace = AoTrace(records=records, n_iterations=len(records),
                    converged=converged, stalled=stalled)
    return state, trace


def baseline_woj(ch: ChannelSet, sys: SystemParams) -> LinkMetrics:
    """Receive-only reference: matched-filter combining, jammer silent."""
    gain = float(np.linalg.norm(ch.h_ar) ** 2)
    r_bob = math.log1p(sys.p_alice * gain / sys.noise_rx) / LOG2
    r_eve = math.log1p(sys.p_alice * abs(ch.h_ae) ** 2 / sys.noise_eve) / LOG2
    c_raw = r_bob - r_eve
    return LinkMetrics(r_bob=r_bob, r_eve=r_eve, c=max(c_raw, 0.0), c_raw=c_raw,
                       p_si=0.0, p_jam=0.0)


def baseline_wij(ch: ChannelSet, h_be: np.ndarray, sys: SystemParams,
                 rsi_factor: float) -> LinkMetrics:
    """Conventional-cancellation full-duplex jamming reference.

    The jammer beams straight at Eve over the direct channel ``h_be`` and the
    receiver keeps a residual self-interference of ``rsi_factor`` times the
    jamming power.
    """
    if rsi_factor < 0:
        raise ValueError("rsi_factor must be non-negative")
    h_be = np.asarray(h_be, dtype=complex)
    be_gain = float(np.linalg.norm(h_be) ** 2)
    p_si = rsi_factor * sys.p_bob
    p_jam = sys.p_bob * be_gain
    gain = float(np.linalg.norm(ch.h_ar) ** 2)
    r_bob = math.log1p(sys.p_alice * gain / (p_si + sys.noise_rx)) / LOG2
    r_eve = math.log1p(sys.p_alice * abs(ch.h_ae) ** 2 / (p_jam + sys.noise_eve)) / LOG2
    c_raw = r_bob - r_eve
    return LinkMetrics(r_bob=r_bob, r_eve=r_eve, c=max(c_raw, 0.0), c_raw=c_raw,
                       p_si=p_si, p_jam=p_jam)


def trace_csv_header() -> str:
    return "iteration,c_raw_before,c_raw_after,p_si,feas_margin," \
           "accepted_blocks,rejected_blocks"


def trace_csv_rows(trace: AoTrace) -> list[str]:
    rows = []
    for rec in trace.records:
        c_after = rec.blocks[-1].c_raw_after if rec.blocks else rec.c_raw_before
        acc = ";".join(b.name for b in rec.blocks if b.accepted)
        rej = ";".join(b.name for b in rec.blocks if not b.accepted)
        rows.append(f"{rec.iteration},{rec.c_raw_before:.9g},{c_after:.9g},"
                    f"{rec.p_si:.9g},{rec.feas_margin:.9g},{acc},{rej}")
    return rows
