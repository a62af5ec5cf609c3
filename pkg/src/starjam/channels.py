"""Geometry-driven channel synthesis for the STAR-RIS full-duplex jamming link.

All links are generated from explicit 3-D node positions. The Bob-side links
through the surface (tx->surface, surface->rx) are deterministic line-of-sight
with Friis-type 1/r amplitude; the tx->rx loop channel and the surface->Eve
link are Rician mixtures of a geometric LOS phasor and a unit-variance complex
Gaussian scatter term; the Alice links are pure Rayleigh with power-law loss.
Randomness always flows through an explicitly passed ``numpy.random.Generator``
so that identical seeds give bit-identical channel sets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Geometry",
    "ChannelParams",
    "ChannelSet",
    "dbm_to_watts",
    "watts_to_dbm",
    "gen_channels",
    "rayleigh_link",
    "perturb_csi",
    "save_channel_set",
    "load_channel_set",
]

_DBM_FLOOR_W = 1e-30  # watts_to_dbm clamp so zero power prints as -270 dBm


def dbm_to_watts(p_dbm: float) -> float:
    """Convert a power from dBm to watts: 10^((p_dbm - 30)/10)."""
    if not math.isfinite(p_dbm):
        raise ValueError(f"power in dBm must be finite, got {p_dbm}")
    return 10.0 ** ((p_dbm - 30.0) / 10.0)


def watts_to_dbm(p_watts: float) -> float:
    """Convert watts to dBm; powers below 1e-30 W clamp to -270 dBm."""
    return 10.0 * math.log10(max(p_watts, _DBM_FLOOR_W)) + 30.0


@dataclass(frozen=True)
class Geometry:
    """Node positions and array layouts.

    Bob's transmit/receive antennas sit on a line along ``antenna_axis``
    starting from their respective first-element positions; the surface is a
    near-square grid spanned by ``ris_axis_cols`` x ``ris_axis_rows`` starting
    from ``pos_ris_first``. All coordinates in metres.
    """

    pos_alice: np.ndarray
    pos_eve: np.ndarray
    pos_bob_tx_first: np.ndarray
    pos_bob_rx_first: np.ndarray
    pos_ris_first: np.ndarray
    element_spacing: float
    m_tx: int
    n_rx: int
    l_ris: int
    antenna_axis: np.ndarray = field(default_factory=lambda: np.array([0.0, 1.0, 0.0]))
    ris_axis_cols: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0]))
    ris_axis_rows: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))

    def __post_init__(self):
        for name in ("pos_alice", "pos_eve", "pos_bob_tx_first", "pos_bob_rx_first",
                     "pos_ris_first", "antenna_axis", "ris_axis_cols", "ris_axis_rows"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if self.element_spacing <= 0:
            raise ValueError("element_spacing must be positive")
        if min(self.m_tx, self.n_rx, self.l_ris) < 1:
            raise ValueError("antenna/element counts must be >= 1")

    def tx_positions(self) -> np.ndarray:
        """(M, 3) positions of Bob's transmit antennas."""
        steps = np.arange(self.m_tx)[:, None] * self.element_spacing
        return self.pos_bob_tx_first[None, :] + steps * self.antenna_axis[None, :]

    def rx_positions(self) -> np.ndarray:
        """(N, 3) positions of Bob's receive antennas."""
        steps = np.arange(self.n_rx)[:, None] * self.element_spacing
        return self.pos_bob_rx_first[None, :] + steps * self.antenna_axis[None, :]

    def ris_positions(self) -> np.ndarray:
        """(L, 3) surface element positions on a near-square grid.

        Square counts give an exact sqrt(L) x sqrt(L) grid; otherwise elements
        fill ceil(sqrt(L)) columns row-major.
        """
        ncols = math.ceil(math.sqrt(self.l_ris))
        idx = np.arange(self.l_ris)
        rows = (idx // ncols)[:, None] * self.element_spacing
        cols = (idx % ncols)[:, None] * self.element_spacing
        return (self.pos_ris_first[None, :]
                + cols * self.ris_axis_cols[None, :]
                + rows * self.ris_axis_rows[None, :])


@dataclass(frozen=True)
class ChannelParams:
    """Carrier and fading parameters shared by all generated links.

    ``gain_model`` selects the Bob-antenna gain pattern: ``isotropic_unit``
    (G = 1 everywhere, the default since no pattern is otherwise pinned down)
    or ``cosine`` (G = 2 cos(theta) on the front hemisphere of the +x
    boresight, 0 behind) for sensitivity studies.
    """

    wavelength: float = 0.05
    rician_k: float = 3.0
    rician_pathloss_exp: float = 2.5
    rayleigh_pathloss_exp: float = 4.0
    rayleigh_var: float = 1.0
    gain_model: str = "isotropic_unit"

    def __post_init__(self):
        if self.wavelength <= 0:
            raise ValueError("wavelength must be positive")
        if self.rician_k < 0:
            raise ValueError("rician_k must be non-negative")
        if not 2.0 <= self.rician_pathloss_exp <= 6.0:
            raise ValueError("rician_pathloss_exp must lie in [2, 6]")
        if not 2.0 <= self.rayleigh_pathloss_exp <= 6.0:
            raise ValueError("rayleigh_pathloss_exp must lie in [2, 6]")
        if self.rayleigh_var <= 0:
            raise ValueError("rayleigh_var must be positive")
        if self.gain_model not in ("isotropic_unit", "cosine"):
            raise ValueError(f"unknown gain_model {self.gain_model!r}")


_BORESIGHT = np.array([1.0, 0.0, 0.0])  # cosine-gain boresight for Bob arrays


def _antenna_gain(params: ChannelParams, from_pos: np.ndarray, to_pos: np.ndarray) -> np.ndarray:
    """Gain of the antenna at ``from_pos`` toward ``to_pos`` (broadcasting).

    Angles are measured in the evaluating antenna's own frame against the +x
    boresight; under the isotropic model they are irrelevant and G is 1.
    """
    if params.gain_model == "isotropic_unit":
        shape = np.broadcast_shapes(from_pos.shape[:-1], to_pos.shape[:-1])
        return np.ones(shape)
    d = to_pos - from_pos
    r = np.linalg.norm(d, axis=-1)
    cos_theta = np.einsum("...i,i->...", d, _BORESIGHT) / np.maximum(r, 1e-300)
    return np.where(cos_theta > 0.0, 2.0 * cos_theta, 0.0)


def _pairwise_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """(len(a), len(b)) distances between two position sets; rejects overlap."""
    d = np.linalg.norm(a[:, None, :] - b[None, :, :], axis=-1)
    if np.any(d <= 0.0):
        raise ValueError("co-located nodes: zero distance in geometry")
    return d


def _complex_normal(rng: np.random.Generator, shape, var: float = 1.0) -> np.ndarray:
    """Circularly-symmetric complex Gaussian with E|x|^2 = var."""
    scale = math.sqrt(var / 2.0)
    return rng.normal(scale=scale, size=shape) + 1j * rng.normal(scale=scale, size=shape)


@dataclass
class ChannelSet:
    """One realization of all six link channels.

    h_tr : (N, M) Bob tx -> Bob rx loop channel (Rician)
    h_ir : (L, N) surface -> Bob rx (deterministic LOS)
    h_ti : (L, M) Bob tx -> surface (deterministic LOS)
    h_ie : (L,)   surface -> Eve (Rician)
    h_ar : (N,)   Alice -> Bob rx row (Rayleigh)
    h_ae : complex Alice -> Eve (Rayleigh)
    """

    h_tr: np.ndarray
    h_ir: np.ndarray
    h_ti: np.ndarray
    h_ie: np.ndarray
    h_ar: np.ndarray
    h_ae: complex

    def __post_init__(self):
        for name in ("h_tr", "h_ir", "h_ti", "h_ie", "h_ar"):
            arr = np.asarray(getattr(self, name), dtype=complex)
            setattr(self, name, arr)
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"non-finite entries in {name}")
        if not np.isfinite(self.h_ae):
            raise ValueError("non-finite h_ae")
        n, m = self.h_tr.shape
        l = self.h_ti.shape[0]
        if self.h_ir.shape != (l, n) or self.h_ti.shape != (l, m):
            raise ValueError("surface link dimensions inconsistent")
        if self.h_ie.shape != (l,) or self.h_ar.shape != (n,):
            raise ValueError("vector link dimensions inconsistent")

    @property
    def dims(self) -> tuple[int, int, int]:
        """(L, M, N)."""
        return self.h_ti.shape[0], self.h_tr.shape[1], self.h_tr.shape[0]


def rayleigh_link(src_positions: np.ndarray, dst_pos: np.ndarray, alpha: float,
                  var: float, rng: np.random.Generator) -> np.ndarray:
    """Rayleigh-faded coefficients h_k = g_k / sqrt(r_k^alpha), g ~ CN(0, var)."""
    src = np.atleast_2d(np.asarray(src_positions, dtype=float))
    r = np.linalg.norm(src - np.asarray(dst_pos, dtype=float)[None, :], axis=-1)
    if np.any(r <= 0.0):
        raise ValueError("co-located nodes: zero distance in geometry")
    return _complex_normal(rng, r.shape, var) / np.sqrt(r ** alpha)


def gen_channels(geom: Geometry, params: ChannelParams, rng: np.random.Generator) -> ChannelSet:
    """Generate one ChannelSet from geometry and fading parameters.

    The generator is split into four named child streams (loop-channel
    scatter, surface->Eve scatter, Alice->Bob, Alice->Eve) so realizations of
    links that do not depend on the surface size stay identical when only L
    changes; this keeps sweeps over L paired on the direct links.
    """
    rng_tr, rng_ie, rng_ar, rng_ae = rng.spawn(4)
    lam = params.wavelength
    kap = params.rician_pathloss_exp
    k_fac = params.rician_k
    los_w = math.sqrt(k_fac / (k_fac + 1.0))
    nlos_w = math.sqrt(1.0 / (k_fac + 1.0))

    tx = geom.tx_positions()
    rx = geom.rx_positions()
    ris = geom.ris_positions()

    # Bob tx -> Bob rx loop: Rician with r^(kappa/2) loss and antenna gains.
    d_mn = _pairwise_distances(rx, tx)  # (N, M), indexed [rx, tx]
    g_t = _antenna_gain(params, tx[None, :, :], rx[:, None, :])  # tx antenna toward rx
    g_r = _antenna_gain(params, rx[:, None, :], tx[None, :, :])  # rx antenna toward tx
    amp = lam * np.sqrt(g_t * g_r) / (4.0 * np.pi * d_mn ** (kap / 2.0))
    los = np.exp(-2j * np.pi * d_mn / lam)
    h_tr = amp * (los_w * los + nlos_w * _complex_normal(rng_tr, d_mn.shape))

    # Surface <-> Bob: deterministic LOS with 1/r amplitude.
    d_ln = _pairwise_distances(ris, rx)  # (L, N)
    g_rx = _antenna_gain(params, rx[None, :, :], ris[:, None, :])
    h_ir = lam * np.sqrt(g_rx) / (4.0 * np.pi * d_ln) * np.exp(-2j * np.pi * d_ln / lam)

    d_lm = _pairwise_distances(ris, tx)  # (L, M)
    g_tx = _antenna_gain(params, tx[None, :, :], ris[:, None, :])
    h_ti = lam * np.sqrt(g_tx) / (4.0 * np.pi * d_lm) * np.exp(-2j * np.pi * d_lm / lam)

    # Surface -> Eve: Rician, no antenna gain factor.
    d_le = _pairwise_distances(ris, geom.pos_eve[None, :])[:, 0]  # (L,)
    amp_e = lam / (4.0 * np.pi * d_le ** (kap / 2.0))
    h_ie = amp_e * (los_w * np.exp(-2j * np.pi * d_le / lam)
                    + nlos_w * _complex_normal(rng_ie, d_le.shape))

    # Alice links: Rayleigh with power-law loss.
    h_ar = rayleigh_link(rx, geom.pos_alice, params.rayleigh_pathloss_exp,
                         params.rayleigh_var, rng_ar)
    h_ae = complex(rayleigh_link(geom.pos_eve[None, :], geom.pos_alice,
                                 params.rayleigh_pathloss_exp, params.rayleigh_var,
                                 rng_ae)[0])

    return ChannelSet(h_tr=h_tr, h_ir=h_ir, h_ti=h_ti, h_ie=h_ie, h_ar=h_ar, h_ae=h_ae)


def perturb_csi(h_ie: np.ndarray, eps: float, rng: np.random.Generator,
                error_variance: str = "magnitude") -> np.ndarray:
    """Mix the surface->Eve channel with an estimation-error term.

    Returns sqrt(1 - eps) * h_ie + sqrt(eps) * e where e_l is complex Gaussian
    with per-element variance |h_ie[l]| under the default ``magnitude``
    convention, or |h_ie[l]|^2 under ``power`` (sensitivity switch).
    """
    if not 0.0 <= eps <= 1.0:
        raise ValueError(f"eps must lie in [0, 1], got {eps}")
    if error_variance not in ("magnitude", "power"):
        raise ValueError(f"unknown error_variance {error_variance!r}")
    h_ie = np.asarray(h_ie, dtype=complex)
    mag = np.abs(h_ie)
    var = mag if error_variance == "magnitude" else mag ** 2
    err = _complex_normal(rng, h_ie.shape) * np.sqrt(var)
    return math.sqrt(1.0 - eps) * h_ie + math.sqrt(eps) * err


# -- portable text dump (re/im pairs, row-major) for cross-run regression --

_FIELDS = ("h_tr", "h_ir", "h_ti", "h_ie", "h_ar", "h_ae")


def save_channel_set(path, ch: ChannelSet) -> None:
    """Write a ChannelSet as structured text: one block per field with a
    dimension header line, complex entries as re/im pairs in row-major order."""
    with open(path, "w", encoding="utf-8") as f:
        for name in _FIELDS:
            arr = np.atleast_2d(np.asarray(getattr(ch, name), dtype=complex))
            f.write(f"{name} {arr.shape[0]} {arr.shape[1]}\n")
            for row in arr:
                parts = [f"{v.real:.17g} {v.imag:.17g}" for v in row]
                f.write(" ".join(parts) + "\n")


def load_channel_set(path) -> ChannelSet:
    """Inverse of :func:`save_channel_set`."""
    blocks: dict[str, np.ndarray] = {}
    with open(path, "r", encoding="utf-8") as f:
        lines = [ln.strip() for ln in f if ln.strip()]
    i = 0
    while i < len(lines):
        name, nrows, ncols = lines[i].split()
        nrows, ncols = int(nrows), int(ncols)
        rows = []
        for r in range(nrows):
            vals = [float(t) for t in lines[i + 1 + r].split()]
            if len(vals) != 2 * ncols:
                raise ValueError(f"malformed row in block {name!r}")
            re = np.array(vals[0::2])
            im = np.array(vals[1::2])
            rows.append(re + 1j * im)
        blocks[name] = np.array(rows)
        i += 1 + nrows
    missing = [n for n in _FIELDS if n not in blocks]
    if missing:
        raise ValueError(f"channel dump missing fields: {missing}")
    return ChannelSet(
        h_tr=blocks["h_tr"],
        h_ir=blocks["h_ir"],
        h_ti=blocks["h_ti"],
        h_ie=blocks["h_ie"][0],
        h_ar=blocks["h_ar"][0],
        h_ae=complex(blocks["h_ae"][0, 0]),
    )
