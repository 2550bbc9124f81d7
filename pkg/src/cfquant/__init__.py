"""Link-level simulator for cell-free massive MIMO uplinks whose access
points forward uniformly quantized baseband samples over a fronthaul.

The package models the quantizer through its Bussgang linearization,
estimates channels with per-coefficient LMMSE scaling of pilot
correlations, detects data with an MMSE receiver that accounts for the
quantization distortion, and runs Monte Carlo campaigns producing
empirical CDFs of normalized estimation MSE and per-user SINR.
"""

from .quantizer import (
    BussgangFactors,
    FlatObjectiveWarning,
    UniformQuantizer,
    bussgang_alpha,
    bussgang_factors,
    distortion_power,
    optimal_step,
    power_gain_gamma,
    quantize,
    quantize_complex,
    sdnr,
)
from .channel import (
    NetworkGeometry,
    NoiseModel,
    PathLossModel,
    draw_geometry,
    draw_small_scale,
    large_scale_gains,
    noise_variance,
    path_loss,
    received_variance,
)
from .estimation import (
    ChannelEstimate,
    PilotBook,
    correlate_all,
    estimate_channel,
    estimate_from_pilots,
    estimation_mse,
    lmmse_coefficient,
    make_pilot_book,
    pilot_correlate,
    pilot_mse_at_coefficient,
    simulate_pilot_phase,
)
from .detection import (
    DetectionResult,
    detect,
    distortion_covariance,
    error_covariance,
    error_covariance_for_weights,
    jensen_bound_diagonals,
    mmse_weights,
    per_user_sinr,
    simulate_uplink,
)
from .simulation import (
    CdfSeries,
    SimulationConfig,
    run_nmse_campaign,
    run_sinr_campaign,
    validate_closed_forms,
    write_cdf_csv,
)

__version__ = "0.1.0"
