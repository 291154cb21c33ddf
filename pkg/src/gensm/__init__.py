"""Spectral-efficiency analysis and analog precoder design for GenSM-aided mmWave MIMO."""

__version__ = "0.1.0"

from .baselines import baseline_rate, waterfilling_capacity
from .channel import ChannelMatrix, PathSet, sample_channel, steering_vector, substream
from .errors import (
    ConfigError,
    DegenerateCovarianceError,
    DimensionError,
    GensmError,
    NumericalDomainError,
    NumericalError,
    RankDeficientError,
)
from .model import (
    AgcTable,
    PhaseVector,
    SystemConfig,
    TransmissionModel,
    agc_table_for,
    build_precoder_matrix,
    compute_num_agcs,
    covariance_set,
    effective_covariance,
    enumerate_agcs,
)
from .precoder import OptimizerOptions, OptimizerTrace, gradient_full, gradient_reduced, optimize
from .rate import (
    RateReport,
    apm_mi,
    rate_closed_form,
    rate_true_mc,
    spatial_mi_lower_bound,
    spatial_mi_monte_carlo,
)
