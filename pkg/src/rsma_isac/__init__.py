"""Link-level simulator for a joint communications and sensing downlink.

Two users share an OFDM downlink through rate-splitting (a jointly decoded
common stream plus private streams) while the same waveform serves a
monostatic ranging radar. Four precoder parameters trade sum throughput
against sensing energy; sweeping them produces performance regions and
Pareto boundaries.
"""

from .calibration import (
    RfImpairment,
    anchor_channels,
    apply_phase_correction,
    estimate_phase_correction,
    zero_impairment,
)
from .core import (
    ArrayGeometry,
    ChannelSet,
    ConfigError,
    DegenerateChannelError,
    RngStream,
    ScenarioConfig,
    generate_channels,
    scenario_preset,
    steering_vector,
)
from .precoders import (
    CASE_TAGS,
    FAMILIES,
    DegenerateDirectionError,
    ParameterPoint,
    PrecoderSet,
    RankDeficientChannelError,
    build_precoders,
    classify_special_case,
    common_direction,
    private_directions,
)
from .radar import (
    RadarObservation,
    RangeProfile,
    TxGrid,
    UndefinedProfileError,
    ZeroInformationError,
    background_subtract,
    bins_to_meters,
    broadside_gain,
    crb,
    expected_broadside_gain,
    expected_steered_power,
    fisher_information,
    radar_return,
    range_profile,
    sensing_symbols,
    snr_rad_closed_form,
    steered_projection,
    synthesize_tx,
    two_stage_capture,
    write_range_profile_csv,
)
from .region import (
    SCHEMES,
    BoundaryRow,
    IsacPoint,
    RegionResult,
    SkippedPoint,
    SweepSpec,
    boundary_params,
    enumerate_grid,
    frontier_points,
    grid_axis,
    pareto_frontier,
    pareto_indices,
    round_sig,
    scheme_frontier,
    scheme_points,
    sweep,
    write_boundary_params_csv,
    write_points_csv,
)
from .throughput import (
    DEFAULT_BANDWIDTH,
    MCS_TABLE,
    EffectiveBandwidth,
    McsLevel,
    ThroughputReport,
    effective_bandwidth,
    max_mcs,
    sinr_common,
    sinr_private,
    spectral_efficiency,
    throughput,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
