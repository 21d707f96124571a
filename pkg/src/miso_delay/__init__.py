"""Delay-violation analysis of the zero-forcing multiuser MISO downlink.

Analytic Mellin-domain delay bounds under round-robin superframe
scheduling, the optimal trade-off between multiplexing and beamforming
gain, and a Monte Carlo queue simulator that validates the bounds.
"""

from .channel_model import (
    DofAssignment,
    EffectiveGain,
    Scheme,
    dof_assignment,
    gain_pdf,
    sample_gain,
    service_bits,
    zfbf_gain_oracle,
    zfbf_gain_samples,
)
from .queue_sim import SimResult, empirical_pv, simulate
from .scheduling import (
    MixtureComponent,
    SchedulePlan,
    ServiceMixture,
    SystemConfig,
    build_schedule,
    draw_assignment,
    feasible_t_super,
    group_split,
    service_mixture,
)
from .snc_analysis import (
    DelayBoundResult,
    SweepRow,
    delay_bound,
    expected_service_rate,
    log_kernel,
    log_mellin_arrival,
    log_mellin_service,
    log_mellin_service_component,
    log_mellin_service_component_oracle,
    optimize_s,
    sweep_superframe,
)
from .special_functions import (
    LogValue,
    NumericalError,
    integrate_semi_infinite,
    ln_gamma,
    upper_incomplete_gamma,
)

__version__ = "0.1.0"
