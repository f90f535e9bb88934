"""Estimation-induced outage capacity for channels known through a noisy estimate."""

from .dmc import (
    ConvergenceError,
    Dmc,
    InfeasibleError,
    InputCost,
    InputDistribution,
    bec,
    bsc,
    capacity_cost,
    channel_capacity,
    compound_capacity,
    kl_divergence,
    mutual_information,
)
from .feedback import LloydMaxQuantizer, decode, encode, lloyd_max_train
from .outage import (
    ConfidenceSet,
    PosteriorGrid,
    brute_force_outage,
    confidence_set_for_values,
    estimation_induced_outage_capacity,
    outage_value_fixed_input,
)
from .power import GainDistribution, PowerPolicy, WaterFilling, policy_value, waterfill
from .ricean import (
    RiceanChannel,
    StatePosterior,
    TrainingConfig,
    gamma_percentile,
    marcum_q1,
    ml_estimate,
    outage_capacity_closed_form,
    posterior_of,
    sample_state,
)
from .sim import Scenario, SweepResult, run_point, run_sweep, snr_for_rate

__version__ = "0.1.0"
