"""Surface configurations, beamformers, and the physical link quantities.

Evaluates, for a given channel realization, surface configuration and
beamformer pair: the effective loop and Eve channels, the residual
self-interference power, the jamming power delivered at Eve, both data rates
and the secrecy capacity, plus a feasibility report against the power and
self-interference constraints. Everything here is pure and side-effect free.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channels import ChannelSet, watts_to_dbm

__all__ = [
    "SystemParams",
    "EsRisConfig",
    "MsRisConfig",
    "Beamformers",
    "LinkMetrics",
    "FeasibilityReport",
    "effective_channels",
    "link_metrics",
    "feasibility",
    "metrics_csv_header",
    "metrics_csv_row",
]

LOG2 = math.log(2.0)
FEAS_TOL = 1e-9  # absolute on unit-scale constraints, relative on the SI cap


@dataclass(frozen=True)
class SystemParams:
    """Transmit powers, noise floors and the receive-side SI power cap (watts).

    Noise powers and the SI cap must be strictly positive; the transmit powers
    may be zero (degenerate no-signal / no-jamming limits used in tests).
    """

    p_alice: float
    p_bob: float
    noise_rx: float
    noise_eve: float
    p_si_max: float

    def __post_init__(self):
        if self.p_alice < 0 or self.p_bob < 0:
            raise ValueError("transmit powers must be non-negative")
        if min(self.noise_rx, self.noise_eve, self.p_si_max) <= 0:
            raise ValueError("noise powers and SI cap must be strictly positive")


def _wrap_phase(phi: np.ndarray) -> np.ndarray:
    return np.mod(np.asarray(phi, dtype=float), 2.0 * np.pi)


@dataclass
class EsRisConfig:
    """Energy-splitting surface: per-element reflect/refract amplitudes and phases.

    Invariants: 0 <= u, v <= 1 and u^2 + v^2 <= 1 per element (within 1e-9);
    phases are stored wrapped to [0, 2*pi).
    """

    u: np.ndarray
    v: np.ndarray
    mu: np.ndarray
    nu: np.ndarray

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=float)
        self.v = np.asarray(self.v, dtype=float)
        self.mu = _wrap_phase(self.mu)
        self.nu = _wrap_phase(self.nu)
        if not (self.u.shape == self.v.shape == self.mu.shape == self.nu.shape):
            raise ValueError("amplitude/phase vectors must share one length")
        if np.any(self.u < -FEAS_TOL) or np.any(self.v < -FEAS_TOL):
            raise ValueError("amplitudes must be non-negative")
        if np.any(self.u > 1 + FEAS_TOL) or np.any(self.v > 1 + FEAS_TOL):
            raise ValueError("amplitudes must not exceed 1")
        if np.any(self.u**2 + self.v**2 > 1 + FEAS_TOL):
            raise ValueError("per-element power split u^2 + v^2 exceeds 1")

    @property
    def n_elements(self) -> int:
        return self.u.shape[0]

    def reflect_coeffs(self) -> np.ndarray:
        """(L,) complex diagonal of the reflect matrix."""
        return self.u * np.exp(1j * self.mu)

    def refract_coeffs(self) -> np.ndarray:
        """(L,) complex diagonal of the refract matrix."""
        return self.v * np.exp(1j * self.nu)

    @classmethod
    def from_complex(cls, mu_c: np.ndarray, nu_c: np.ndarray) -> "EsRisConfig":
        """Build from the complex per-element coefficient vectors."""
        return cls(u=np.abs(mu_c), v=np.abs(nu_c),
                   mu=np.angle(mu_c), nu=np.angle(nu_c))


@dataclass
class MsRisConfig:
    """Mode-switching surface: binary reflect flags plus both phase banks.

    ``a[l] = 1`` means element l reflects, ``a[l] = 0`` means it refracts;
    the implied refract flag is 1 - a[l].
    """

    a: np.ndarray
    mu: np.ndarray
    nu: np.ndarray

    def __post_init__(self):
        self.a = np.asarray(self.a)
        if not np.all(np.isin(self.a, (0, 1))):
            raise ValueError("mode flags must be binary")
        self.a = self.a.astype(float)
        self.mu = _wrap_phase(self.mu)
        self.nu = _wrap_phase(self.nu)
        if not (self.a.shape == self.mu.shape == self.nu.shape):
            raise ValueError("mode/phase vectors must share one length")

    @property
    def n_elements(self) -> int:
        return self.a.shape[0]

    def reflect_coeffs(self) -> np.ndarray:
        return self.a * np.exp(1j * self.mu)

    def refract_coeffs(self) -> np.ndarray:
        return (1.0 - self.a) * np.exp(1j * self.nu)


RisConfig = EsRisConfig | MsRisConfig


@dataclass
class Beamformers:
    """Transmit vector w (M,) and receive row r (N,), each within unit power."""

    w: np.ndarray
    r: np.ndarray

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=complex)
        self.r = np.asarray(self.r, dtype=complex)
        if float(np.vdot(self.w, self.w).real) > 1 + 1e-9:
            raise ValueError("transmit beamformer power exceeds unit budget")
        if float(np.vdot(self.r, self.r).real) > 1 + 1e-9:
            raise ValueError("receive beamformer power exceeds unit budget")


@dataclass(frozen=True)
class LinkMetrics:
    """Rates (bps/Hz) and powers (watts) of one evaluated operating point.

    ``c_raw`` is the signed rate difference used inside the optimizer;
    ``c`` is the reported secrecy capacity max(c_raw, 0).
    """

    r_bob: float
    r_eve: float
    c: float
    c_raw: float
    p_si: float
    p_jam: float


def effective_channels(ch: ChannelSet, ris: RisConfig) -> tuple[np.ndarray, np.ndarray]:
    """Effective loop channel (N, M) and effective Bob->Eve row (M,).

    loop = h_tr + h_ir^H diag(reflect) h_ti;  eve = h_ie^H diag(refract) h_ti.
    """
    l, m, n = ch.dims
    if ris.n_elements != l:
        raise ValueError(f"surface size mismatch: config {ris.n_elements}, channels {l}")
    refl = ris.reflect_coeffs()
    refr = ris.refract_coeffs()
    loop = ch.h_tr + ch.h_ir.conj().T @ (refl[:, None] * ch.h_ti)
    eve = (ch.h_ie.conj() * refr) @ ch.h_ti
    return loop, eve


def link_metrics(ch: ChannelSet, ris: RisConfig, bf: Beamformers,
                 sys: SystemParams) -> LinkMetrics:
    """Evaluate SI power, jamming power, both rates and the secrecy capacity."""
    loop, eve = effective_channels(ch, ris)
    p_si = sys.p_bob * abs(bf.r @ loop @ bf.w) ** 2
    p_jam = sys.p_bob * abs(eve @ bf.w) ** 2
    sig_bob = sys.p_alice * abs(bf.r @ ch.h_ar.conj()) ** 2
    sig_eve = sys.p_alice * abs(ch.h_ae) ** 2
    r_bob = math.log1p(sig_bob / (p_si + sys.noise_rx)) / LOG2
    r_eve = math.log1p(sig_eve / (p_jam + sys.noise_eve)) / LOG2
    c_raw = r_bob - r_eve
    return LinkMetrics(r_bob=r_bob, r_eve=r_eve, c=max(c_raw, 0.0), c_raw=c_raw,
                       p_si=p_si, p_jam=p_jam)


@dataclass(frozen=True)
class FeasibilityReport:
    """Constraint check of one operating point.

    ``worst_violation`` is the largest normalized violation across all
    constraint groups (the SI cap is measured relative to its threshold, the
    unit-scale constraints absolutely); <= 0 means fully feasible.
    """

    ris_ok: bool
    power_ok: bool
    si_ok: bool
    worst_violation: float

    @property
    def ok(self) -> bool:
        return self.ris_ok and self.power_ok and self.si_ok


def feasibility(ch: ChannelSet, ris: RisConfig, bf: Beamformers,
                sys: SystemParams) -> FeasibilityReport:
    """Check the surface, beamformer-power and SI-cap constraints."""
    if isinstance(ris, EsRisConfig):
        ris_viol = max(
            float(np.max(ris.u**2 + ris.v**2 - 1.0)),
            float(np.max(-ris.u)), float(np.max(-ris.v)),
            float(np.max(ris.u - 1.0)), float(np.max(ris.v - 1.0)),
        )
    else:
        ris_viol = float(np.max(np.abs(ris.a * (1.0 - ris.a))))  # binariness
    pow_viol = max(float(np.vdot(bf.w, bf.w).real) - 1.0,
                   float(np.vdot(bf.r, bf.r).real) - 1.0)
    loop, _ = effective_channels(ch, ris)
    si_total = sys.p_bob * float(np.linalg.norm(loop @ bf.w) ** 2)
    si_viol = (si_total - sys.p_si_max) / sys.p_si_max
    return FeasibilityReport(
        ris_ok=ris_viol <= FEAS_TOL,
        power_ok=pow_viol <= FEAS_TOL,
        si_ok=si_viol <= FEAS_TOL,
        worst_violation=max(ris_viol, pow_viol, si_viol),
    )


def metrics_csv_header() -> str:
    return "seed,mode,L,M,N,P_B_dbm,R_r,R_e,C,P_si_dbm,P_j_dbm"


def metrics_csv_row(m: LinkMetrics, seed: int, mode: str, l_ris: int, m_tx: int,
                    n_rx: int, p_bob_dbm: float) -> str:
    """One CSV row (9 significant digits, powers in dBm)."""
    vals = [f"{m.r_bob:.9g}", f"{m.r_eve:.9g}", f"{m.c:.9g}",
            f"{watts_to_dbm(m.p_si):.9g}", f"{watts_to_dbm(m.p_jam):.9g}"]
    return f"{seed},{mode},{l_ris},{m_tx},{n_rx},{p_bob_dbm:.9g}," + ",".join(vals)
