"""Simulation and cost optimization of quantum repeater chains."""
__version__ = "0.1.0"

from .analytics import (
    TARGETS_A,
    TARGETS_B,
    Targets,
    expected_link_time,
    fidelity_from_qber,
    max_distance_rate_only,
    max_distance_swap_asap,
    purification_waiting_time,
    qber_from_fidelity,
    secret_key_rate,
    swap_chain_fidelity,
)
from .hardware import BASELINE, Genome, HardwareParams, Strategy, derived_state_efficiency, genome_to_params
from .optimizer import OptimizerConfig, RepeaterChainOptimizer, ga_run, hill_climb, total_cost
from .quantum import BellKind, bell_coefficients, bell_state, fidelity
from .simulation import ChainConfig, estimate_metrics, run_realization

__all__ = [name for name in dir() if not name.startswith("_")]
