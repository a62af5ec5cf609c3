"""Secrecy-capacity optimization for a STAR-RIS assisted full-duplex jamming link."""

from .channels import (ChannelParams, ChannelSet, Geometry, dbm_to_watts, gen_channels,
                       load_channel_set, perturb_csi, rayleigh_link, save_channel_set,
                       watts_to_dbm)
from .system import (Beamformers, EsRisConfig, FeasibilityReport, LinkMetrics,
                     MsRisConfig, SystemParams, effective_channels, feasibility,
                     link_metrics, metrics_csv_header, metrics_csv_row)
from .surrogates import (AffineBound, ConvexProblem, LogRatioBound, QuadraticForm,
                         SubproblemConstants, build_es_problem, build_ms_phase_problem,
                         build_r_problem, build_w_problem, complexify, dump_problem,
                         log_frac_lower, quad_linearize, realify, taylor_log_tangent,
                         trace_to_hadamard)
from .solver import (SdrInfeasibleError, Solution, SolverOptions, project_psd, solve,
                     solve_sdr)
from .modes import (SdrProblem, exhaustive_mode_search, gaussian_randomize,
                    lift_mode_problem, mode_objective_batch)
from .driver import (AoOptions, AoState, AoTrace, baseline_wij, baseline_woj,
                     initialize, optimize, trace_csv_header, trace_csv_rows)

__version__ = "0.1.0"
