"""Reproducible experiment harness: config parsing, sweeps, CSV persistence.

A run is described by an :class:`ExperimentConfig` (defaults reproduce the
reference scenario: 6 GHz carrier, Bob arrays at the origin area, Alice and
Eve ~20 m away, 10 dBm transmit powers, -80 dBm noise floors, -60 dBm
interference cap). Sweeps iterate a single scenario knob (surface size,
surface distance, jamming power) or record per-iteration convergence traces.

Determinism contract: every random stream is derived from
(master_seed, sweep index, trial index, purpose), so reruns are byte
identical, adding trials never changes earlier rows, and all modes of one
(sweep value, trial) cell share the same channel realization.
"""

from __future__ import annotations

import configparser
import dataclasses
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .channels import (ChannelParams, ChannelSet, Geometry, dbm_to_watts, gen_channels,
                       perturb_csi, rayleigh_link, watts_to_dbm)
from .system import SystemParams, link_metrics
from .driver import AoOptions, baseline_wij, baseline_woj, optimize
from .solver import SolverOptions

__all__ = [
    "ScenarioConfig",
    "ExperimentConfig",
    "ConfigError",
    "ResultRecord",
    "default_config",
    "validate_config",
    "run_experiment",
    "run_cell",
]

SWEEP_KINDS = ("convergence", "sweep_l", "sweep_distance", "sweep_power", "single")
MODES = ("es", "ms", "woj", "wij")
DESK_MAX_L = 100
DESK_MAX_TRIALS = 50

_DEFAULT_SWEEPS = {
    "convergence": [16.0, 36.0],
    "sweep_l": [16.0, 36.0, 64.0],
    "sweep_distance": [0.1, 0.2, 0.3, 0.4, 0.5],
    "sweep_power": [0.0, 10.0, 20.0, 30.0, 40.0],
    "single": [0.0],
}


class ConfigError(ValueError):
    """Invalid experiment configuration; message lists every offending field."""


@dataclass
class ScenarioConfig:
    """Geometry, fading and power parameters of one scenario (reference defaults)."""

    pos_alice: tuple = (10.0, -17.0, 1.5)
    pos_eve: tuple = (20.0, 0.0, 1.5)
    pos_bob_tx: tuple = (0.0, 0.0, 5.0)
    pos_bob_rx: tuple = (0.0, 0.1, 5.0)
    pos_ris: tuple = (0.2, 0.0, 5.0)
    element_spacing: float = 0.025
    m_tx: int = 4
    n_rx: int = 2
    l_ris: int = 36
    wavelength: float = 0.05
    rician_k: float = 3.0
    rician_pathloss_exp: float = 2.5
    rayleigh_pathloss_exp: float = 4.0
    rayleigh_var: float = 1.0
    gain_model: str = "isotropic_unit"
    p_alice_dbm: float = 10.0
    p_bob_dbm: float = 10.0
    noise_dbm: float = -80.0
    p_si_max_dbm: float = -60.0
    rsi_db: float = -110.0

    def geometry(self, l_ris: int | None = None, ris_x: float | None = None) -> Geometry:
        pos_ris = list(self.pos_ris)
        if ris_x is not None:
            pos_ris[0] = self.pos_bob_tx[0] + ris_x
        return Geometry(
            pos_alice=np.array(self.pos_alice), pos_eve=np.array(self.pos_eve),
            pos_bob_tx_first=np.array(self.pos_bob_tx),
            pos_bob_rx_first=np.array(self.pos_bob_rx),
            pos_ris_first=np.array(pos_ris), element_spacing=self.element_spacing,
            m_tx=self.m_tx, n_rx=self.n_rx,
            l_ris=int(l_ris if l_ris is not None else self.l_ris),
        )

    def channel_params(self) -> ChannelParams:
        return ChannelParams(
            wavelength=self.wavelength, rician_k=self.rician_k,
            rician_pathloss_exp=self.rician_pathloss_exp,
            rayleigh_pathloss_exp=self.rayleigh_pathloss_exp,
            rayleigh_var=self.rayleigh_var, gain_model=self.gain_model,
        )

    def system_params(self, p_bob_dbm: float | None = None) -> SystemParams:
        noise = dbm_to_watts(self.noise_dbm)
        return SystemParams(
            p_alice=dbm_to_watts(self.p_alice_dbm),
            p_bob=dbm_to_watts(p_bob_dbm if p_bob_dbm is not None else self.p_bob_dbm),
            noise_rx=noise, noise_eve=noise,
            p_si_max=dbm_to_watts(self.p_si_max_dbm),
        )


@dataclass
class ExperimentConfig:
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    sweep: str = "sweep_l"
    sweep_values: list = field(default_factory=list)
    modes: list = field(default_factory=lambda: ["es", "ms", "woj"])
    trials: int = 20
    master_seed: int = 0
    imperfect_csi_eps: float | None = None
    output_dir: str = "results"
    delta: float = 1e-5
    max_outer_iters: int = 100
    n_randomizations: int = 1000
    workers: int = 1
    full_scale: bool = False

    def __post_init__(self):
        if not self.sweep_values:
            self.sweep_values = list(_DEFAULT_SWEEPS[self.sweep])

    def validate(self) -> None:
        errors = []
        if self.sweep not in SWEEP_KINDS:
            errors.append(f"sweep: unknown kind {self.sweep!r}, expected one of {SWEEP_KINDS}")
        for m in self.modes:
            if m not in MODES:
                errors.append(f"modes: unknown mode {m!r}, expected subset of {MODES}")
        if self.trials < 1:
            errors.append(f"trials: must be >= 1, got {self.trials}")
        if not self.sweep_values:
            errors.append("sweep_values: must be non-empty")
        if self.imperfect_csi_eps is not None and not 0.0 <= self.imperfect_csi_eps <= 1.0:
            errors.append(f"imperfect_csi_eps: must lie in [0, 1], got {self.imperfect_csi_eps}")
        if self.delta <= 0:
            errors.append(f"delta: must be positive, got {self.delta}")
        if not self.full_scale:
            if self.trials > DESK_MAX_TRIALS:
                errors.append(f"trials: {self.trials} exceeds the desk-scale cap "
                              f"{DESK_MAX_TRIALS} (pass full_scale to lift)")
            if self.sweep == "sweep_l" and max(self.sweep_values) > DESK_MAX_L:
                errors.append(f"sweep_values: surface size above the desk-scale cap "
                              f"{DESK_MAX_L} (pass full_scale to lift)")
        if errors:
            raise ConfigError("; ".join(errors))


def default_config() -> ExperimentConfig:
    return ExperimentConfig()


_SECTION_FIELDS = {
    "scenario": {f.name: f for f in dataclasses.fields(ScenarioConfig)},
    "run": {f.name: f for f in dataclasses.fields(ExperimentConfig)
            if f.name not in ("scenario", "sweep_values", "modes")},
}
_RUN_LISTS = ("sweep_values", "modes")


def _parse_value(name: str, text: str, target_type):
    if target_type is float:
        return float(text)
    if target_type is int:
        return int(text)
    if target_type is bool:
        if text.lower() in ("true", "1", "yes", "on"):
            return True
        if text.lower() in ("false", "0", "no", "off"):
            return False
        raise ValueError(f"expected a boolean, got {text!r}")
    if target_type is tuple:
        return tuple(float(t) for t in text.replace(",", " ").split())
    return text


def validate_config(raw_text: str) -> tuple[ExperimentConfig, list[str]]:
    """Parse the sectioned key=value config format.

    Unknown sections or keys are hard errors (typo protection); missing keys
    take the reference defaults. Returns the config plus one log line per
    defaulted field so runs record exactly what they used.
    """
    parser = configparser.ConfigParser()
    try:
        parser.read_string(raw_text)
    except configparser.Error as exc:
        raise ConfigError(f"config parse failure: {exc}") from exc

    errors: list[str] = []
    scenario_kwargs: dict = {}
    run_kwargs: dict = {}
    for section in parser.sections():
        if section not in ("scenario", "run"):
            errors.append(f"[{section}]: unknown section")
            continue
        known = _SECTION_FIELDS[section]
        for key, text in parser[section].items():
            if section == "run" and key in _RUN_LISTS:
                try:
                    if key == "sweep_values":
                        run_kwargs[key] = [float(t) for t in text.replace(",", " ").split()]
                    else:
                        run_kwargs[key] = [t.strip() for t in text.replace(",", " ").split()]
                except ValueError as exc:
                    errors.append(f"[run] {key}: {exc}")
                continue
            if key not in known:
                errors.append(f"[{section}] {key}: unknown key")
                continue
            fld = known[key]
            base_type = fld.type if isinstance(fld.type, type) else None
            if base_type is None:
                default = getattr(ScenarioConfig() if section == "scenario"
                                  else ExperimentConfig(), key)
                base_type = type(default) if default is not None else float
            try:
                value = _parse_value(key, text, base_type)
            except ValueError as exc:
                errors.append(f"[{section}] {key}: {exc}")
                continue
            (scenario_kwargs if section == "scenario" else run_kwargs)[key] = value
    if errors:
        raise ConfigError("; ".join(errors))

    cfg = ExperimentConfig(scenario=ScenarioConfig(**scenario_kwargs), **run_kwargs)
    cfg.validate()

    defaulted = []
    base_sc, base_run = ScenarioConfig(), ExperimentConfig()
    for name in _SECTION_FIELDS["scenario"]:
        if name not in scenario_kwargs:
            defaulted.append(f"scenario.{name} defaulted to {getattr(base_sc, name)!r}")
    for name in _SECTION_FIELDS["run"]:
        if name not in run_kwargs:
            defaulted.append(f"run.{name} defaulted to {getattr(base_run, name)!r}")
    return cfg, defaulted


@dataclass
class ResultRecord:
    """One evaluated (mode, sweep value, trial) cell."""

    sweep_value: float
    mode: str
    trial: int
    seed: int
    l_ris: int
    m_tx: int
    n_rx: int
    p_bob_dbm: float
    r_bob: float
    r_eve: float
    c: float
    p_si: float
    p_jam: float
    n_iterations: int
    converged: bool
    wall_time_s: float

    def csv_row(self) -> str:
        # wall time is intentionally absent: raw CSVs are byte-reproducible
        cols = [f"{self.sweep_value:.9g}", self.mode, str(self.trial), str(self.seed),
                str(self.l_ris), str(self.m_tx), str(self.n_rx),
                f"{self.p_bob_dbm:.9g}", f"{self.r_bob:.9g}", f"{self.r_eve:.9g}",
                f"{self.c:.9g}", f"{watts_to_dbm(self.p_si):.9g}",
                f"{watts_to_dbm(self.p_jam):.9g}", str(self.n_iterations),
                str(int(self.converged))]
        return ",".join(cols)


RAW_HEADER = ("sweep_value,mode,trial,seed,L,M,N,P_B_dbm,R_r,R_e,C,"
              "P_si_dbm,P_j_dbm,N_k,converged")
AGG_HEADER = ("sweep_value,mode,n_trials,C_mean,C_std,R_r_mean,R_e_mean,"
              "P_si_dbm_median,P_j_dbm_median,N_k_mean")
TRACE_HEADER = "sweep_value,mode,trial,iteration,c_raw,c,p_si_dbm,accepted_blocks"


def _cell_rngs(master_seed: int, sweep_idx: int, trial: int):
    """Independent derived streams for one cell: channels, optimizer, extras."""
    ss = np.random.SeedSequence([int(master_seed), int(sweep_idx), int(trial)])
    kids = ss.spawn(4)
    return tuple(np.random.default_rng(k) for k in kids)


def _cell_scenario(cfg: ExperimentConfig, sweep_value: float):
    """Geometry/system knobs for one sweep point."""
    sc = cfg.scenario
    if cfg.sweep in ("convergence", "sweep_l"):
        return sc.geometry(l_ris=int(sweep_value)), sc.system_params()
    if cfg.sweep == "sweep_distance":
        return sc.geometry(ris_x=float(sweep_value)), sc.system_params()
    if cfg.sweep == "sweep_power":
        return sc.geometry(), sc.system_params(p_bob_dbm=float(sweep_value))
    return sc.geometry(), sc.system_params()


def run_cell(cfg: ExperimentConfig, sweep_idx: int, mode: str, trial: int
             ) -> tuple[ResultRecord, list[str]]:
    """Evaluate one (sweep value, mode, trial) cell; returns the record plus
    per-iteration trace lines (empty unless a convergence run)."""
    sweep_value = float(cfg.sweep_values[sweep_idx])
    geom, sysp = _cell_scenario(cfg, sweep_value)
    rng_ch, rng_opt, rng_csi, rng_wij = _cell_rngs(cfg.master_seed, sweep_idx, trial)
    params = cfg.scenario.channel_params()
    ch = gen_channels(geom, params, rng_ch)
    seed_label = int(np.random.SeedSequence(
        [cfg.master_seed, sweep_idx, trial]).generate_state(1)[0] % 2**31)

    started = time.perf_counter()
    trace_lines: list[str] = []
    n_iter = 0
    converged = True
    if mode in ("es", "ms"):
        ch_opt = ch
        if cfg.imperfect_csi_eps is not None:
            est = perturb_csi(ch.h_ie, cfg.imperfect_csi_eps, rng_csi)
            ch_opt = ChannelSet(h_tr=ch.h_tr, h_ir=ch.h_ir, h_ti=ch.h_ti,
                                h_ie=est, h_ar=ch.h_ar, h_ae=ch.h_ae)
        opts = AoOptions(delta=cfg.delta, max_outer_iters=cfg.max_outer_iters,
                         n_randomizations=cfg.n_randomizations)
        state, trace = optimize(mode, ch_opt, sysp, opts=opts, rng=rng_opt)
        # estimation error affects the design only; report on the true channel
        metrics = link_metrics(ch, state.ris, state.bf, sysp)
        n_iter = trace.n_iterations
        converged = trace.converged
        if cfg.sweep == "convergence":
            for rec in trace.records:
                c_after = rec.blocks[-1].c_raw_after if rec.blocks else rec.c_raw_before
                acc = ";".join(b.name for b in rec.blocks if b.accepted)
                trace_lines.append(
                    f"{sweep_value:.9g},{mode},{trial},{rec.iteration},"
                    f"{c_after:.9g},{max(c_after, 0.0):.9g},"
                    f"{watts_to_dbm(rec.p_si):.9g},{acc}")
    elif mode == "woj":
        metrics = baseline_woj(ch, sysp)
    elif mode == "wij":
        h_be = rayleigh_link(geom.tx_positions(), geom.pos_eve,
                             params.rayleigh_pathloss_exp, params.rayleigh_var, rng_wij)
        metrics = baseline_wij(ch, h_be, sysp, 10.0 ** (cfg.scenario.rsi_db / 10.0))
    else:
        raise ConfigError(f"unknown mode {mode!r}")
    wall = time.perf_counter() - started

    record = ResultRecord(
        sweep_value=sweep_value, mode=mode, trial=trial, seed=seed_label,
        l_ris=geom.l_ris, m_tx=geom.m_tx, n_rx=geom.n_rx,
        p_bob_dbm=10.0 * math.log10(sysp.p_bob / 1e-3) if sysp.p_bob > 0 else -math.inf,
        r_bob=metrics.r_bob, r_eve=metrics.r_eve, c=metrics.c,
        p_si=metrics.p_si, p_jam=metrics.p_jam,
        n_iterations=n_iter, converged=converged, wall_time_s=wall,
    )
    return record, trace_lines


def _aggregate(records: list[ResultRecord]) -> list[str]:
    rows = []
    keys = sorted({(r.sweep_value, r.mode) for r in records},
                  key=lambda k: (k[0], MODES.index(k[1])))
    for sweep_value, mode in keys:
        grp = [r for r in records if r.sweep_value == sweep_value and r.mode == mode]
        c = np.array([r.c for r in grp])
        rows.append(
            f"{sweep_value:.9g},{mode},{len(grp)},{c.mean():.9g},{c.std(ddof=0):.9g},"
            f"{np.mean([r.r_bob for r in grp]):.9g},"
            f"{np.mean([r.r_eve for r in grp]):.9g},"
            f"{watts_to_dbm(float(np.median([r.p_si for r in grp]))):.9g},"
            f"{watts_to_dbm(float(np.median([r.p_jam for r in grp]))):.9g},"
            f"{np.mean([r.n_iterations for r in grp]):.9g}")
    return rows


def _run_cell_star(args):
    cfg_dict, sweep_idx, mode, trial = args
    cfg = ExperimentConfig(scenario=ScenarioConfig(**cfg_dict.pop("scenario")), **cfg_dict)
    return run_cell(cfg, sweep_idx, mode, trial)


def run_experiment(cfg: ExperimentConfig, log=print) -> dict:
    """Run all cells of the configured sweep and persist results.

    Writes ``raw.csv`` (one row per cell, byte-reproducible), ``aggregate.csv``
    (per sweep point and mode), ``trace.csv`` for convergence runs, and
    ``manifest.json`` (config echo, seeds, wall time). Returns the manifest.
    """
    cfg.validate()
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    cells = [(i, mode, trial)
             for i in range(len(cfg.sweep_values))
             for mode in cfg.modes
             for trial in range(cfg.trials)]
    started = time.perf_counter()
    results: dict[tuple, tuple[ResultRecord, list[str]]] = {}
    if cfg.workers > 1:
        cfg_dict = dataclasses.asdict(cfg)
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            for cell, res in zip(cells, pool.map(
                    _run_cell_star,
                    [(dict(cfg_dict, scenario=dict(cfg_dict["scenario"])), *c) for c in cells])):
                results[cell] = res
    else:
        for cell in cells:
            results[cell] = run_cell(cfg, *cell)
            log(f"done sweep={cfg.sweep_values[cell[0]]:g} mode={cell[1]} trial={cell[2]} "
                f"C={results[cell][0].c:.4g}")

    records = [results[c][0] for c in cells]  # deterministic cell order
    raw_path = out / "raw.csv"
    with raw_path.open("w", encoding="utf-8") as f:
        f.write(RAW_HEADER + "\n")
        for rec in records:
            f.write(rec.csv_row() + "\n")
    agg_path = out / "aggregate.csv"
    with agg_path.open("w", encoding="utf-8") as f:
        f.write(AGG_HEADER + "\n")
        for row in _aggregate(records):
            f.write(row + "\n")
    trace_path = None
    if cfg.sweep == "convergence":
        trace_path = out / "trace.csv"
        with trace_path.open("w", encoding="utf-8") as f:
            f.write(TRACE_HEADER + "\n")
            for cell in cells:
                for line in results[cell][1]:
                    f.write(line + "\n")

    manifest = {
        "config": dataclasses.asdict(cfg),
        "n_cells": len(cells),
        "wall_time_s": time.perf_counter() - started,
        "outputs": {"raw": str(raw_path), "aggregate": str(agg_path),
                    "trace": str(trace_path) if trace_path else None},
    }
    with (out / "manifest.json").open("w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
    return manifest
