"""SINR evaluation and MCS-limited throughput for the two-user downlink.

The common stream must be decoded by both users before SIC removes it, so
its rate is set by the weaker user, and a common stream that fails even the
lowest MCS at either user takes the whole sum throughput down with it.
Private streams fail individually. All SINRs are evaluated on the true
channels; estimates only ever enter precoder construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .core import ChannelSet, ConfigError, ScenarioConfig
from .precoders import PrecoderSet


@dataclass(frozen=True)
class EffectiveBandwidth:
    """Nominal bandwidth discounted by cyclic prefix and guard subcarriers."""

    total_hz: float
    cp_samples: int
    data_subcarriers: int
    value_hz: float


def effective_bandwidth(
    total_hz: float, n_subcarriers: int, cp_samples: int, data_subcarriers: int
) -> EffectiveBandwidth:
    """Bandwidth actually carrying data: total · N_c/(N_c+cp) · data/N_c."""
    if total_hz <= 0 or n_subcarriers <= 0 or data_subcarriers <= 0:
        raise ConfigError("bandwidth, subcarrier and data counts must be positive")
    if cp_samples < 0:
        raise ConfigError("cp_samples must be nonnegative")
    if data_subcarriers > n_subcarriers:
        raise ConfigError("data_subcarriers cannot exceed n_subcarriers")
    value = (
        total_hz
        * (n_subcarriers / (n_subcarriers + cp_samples))
        * (data_subcarriers / n_subcarriers)
    )
    return EffectiveBandwidth(total_hz, cp_samples, data_subcarriers, value)


# 100 MHz OFDM with a 1/4 cyclic prefix and 468 of 512 subcarriers carrying
# data: the link budget every throughput number in this package assumes
# unless a caller passes its own bandwidth.
DEFAULT_BANDWIDTH = effective_bandwidth(100e6, 512, 128, 468)


@dataclass(frozen=True)
class McsLevel:
    """One modulation-and-coding choice: index, bits/symbol, code rate."""

    index: int
    modulation: str
    bits_per_symbol: int
    code_rate: Fraction

    @property
    def bit_density(self) -> Fraction:
        """Information bits per subcarrier use, m·r."""
        return self.bits_per_symbol * self.code_rate

    def data_rate_bps(self, bandwidth_hz: float = DEFAULT_BANDWIDTH.value_hz) -> float:
        return bandwidth_hz * float(self.bit_density)


_MCS_ROWS = (
    (0, "BPSK", 1, Fraction(1, 2)),
    (1, "BPSK", 1, Fraction(3, 4)),
    (2, "QPSK", 2, Fraction(1, 2)),
    (3, "QPSK", 2, Fraction(3, 4)),
    (4, "16QAM", 4, Fraction(1, 2)),
    (5, "16QAM", 4, Fraction(3, 4)),
    (6, "64QAM", 6, Fraction(2, 3)),
    (7, "64QAM", 6, Fraction(3, 4)),
    (8, "256QAM", 8, Fraction(3, 4)),
    (9, "256QAM", 8, Fraction(5, 6)),
)

MCS_TABLE: tuple[McsLevel, ...] = tuple(McsLevel(*row) for row in _MCS_ROWS)


def max_mcs(avg_spectral_efficiency: float) -> McsLevel | None:
    """Highest MCS whose bit density is strictly below the efficiency.

    Strictly: a stream whose averaged spectral efficiency exactly equals
    m·r cannot carry that level, and an efficiency below 0.5 bits/s/Hz
    cannot carry anything.
    """
    if avg_spectral_efficiency < 0:
        raise ValueError("spectral efficiency cannot be negative")
    eff = Fraction(avg_spectral_efficiency)
    for level in reversed(MCS_TABLE):
        if level.bit_density < eff:
            return level
    return None


def spectral_efficiency(sinr: np.ndarray, gap_db: float = 0.0) -> float:
    """Subcarrier-averaged log2(1 + SINR/gap) with the gap given in dB.

    The gap models the shortfall of practical coding from capacity; it
    scales every SINR down before averaging.
    """
    gap = 10.0 ** (gap_db / 10.0)
    return float(np.mean(np.log2(1.0 + np.asarray(sinr) / gap)))


def _project(h: np.ndarray, p: np.ndarray) -> np.ndarray:
    """|h^H p|² per subcarrier for (N_c, N_T) grids."""
    return np.abs(np.einsum("kt,kt->k", np.conj(h), p)) ** 2


def _check_ue(ue: int) -> int:
    if ue not in (1, 2):
        raise ValueError(f"ue must be 1 or 2, got {ue}")
    return ue - 1


def sinr_common(
    channels: ChannelSet, pset: PrecoderSet, ue: int, noise_power: float
) -> np.ndarray:
    """Common-stream SINR at one user, per subcarrier.

    Both private streams interfere (SIC has not run yet); the sensing
    stream does not, because its symbols are known at the users and
    subtracted before decoding.
    """
    i = _check_ue(ue)
    h = channels.true_channels[i]
    num = _project(h, pset.p_c)
    den = _project(h, pset.p_1) + _project(h, pset.p_2) + noise_power
    return num / den


def sinr_private(
    channels: ChannelSet, pset: PrecoderSet, ue: int, noise_power: float
) -> np.ndarray:
    """Private-stream SINR at one user after the common stream is removed."""
    i = _check_ue(ue)
    h = channels.true_channels[i]
    own = (pset.p_1, pset.p_2)[i]
    other = (pset.p_2, pset.p_1)[i]
    num = _project(h, own)
    den = _project(h, other) + noise_power
    return num / den


@dataclass(frozen=True)
class ThroughputReport:
    """Stream and sum throughputs with the MCS levels that produced them."""

    t_common: float
    t_private: tuple[float, float]
    t_sum: float
    mcs_chosen: tuple[McsLevel | None, McsLevel | None, McsLevel | None]
    collapsed: bool


def throughput(
    channels: ChannelSet,
    pset: PrecoderSet,
    cfg: ScenarioConfig,
    bandwidth_hz: float = DEFAULT_BANDWIDTH.value_hz,
) -> ThroughputReport:
    """MCS-limited sum throughput of one precoder set on one channel draw.

    The common stream is decodable only if both users support at least
    MCS 0 for it; otherwise the whole report collapses to zero. Points
    with no common-stream power at all (pure SDMA, or sensing only) skip
    the collapse rule and simply add the surviving private streams.
    """
    sigma2 = cfg.noise_power_comms
    gap = cfg.shannon_gap_db
    common_power = float(np.sum(np.abs(pset.p_c) ** 2))

    def private_rates() -> tuple[tuple[float, float], list[McsLevel | None]]:
        rates = []
        levels: list[McsLevel | None] = []
        for ue in (1, 2):
            eff = spectral_efficiency(sinr_private(channels, pset, ue, sigma2), gap)
            level = max_mcs(eff)
            levels.append(level)
            rates.append(level.data_rate_bps(bandwidth_hz) if level else 0.0)
        return (rates[0], rates[1]), levels

    if common_power == 0.0:
        (t1, t2), levels = private_rates()
        return ThroughputReport(
            t_common=0.0,
            t_private=(t1, t2),
            t_sum=t1 + t2,
            mcs_chosen=(None, levels[0], levels[1]),
            collapsed=False,
        )

    eff_c = min(
        spectral_efficiency(sinr_common(channels, pset, ue, sigma2), gap)
        for ue in (1, 2)
    )
    mcs_c = max_mcs(eff_c)
    if mcs_c is None:
        return ThroughputReport(
            t_common=0.0,
            t_private=(0.0, 0.0),
            t_sum=0.0,
            mcs_chosen=(None, None, None),
            collapsed=True,
        )
    t_c = mcs_c.data_rate_bps(bandwidth_hz)
    (t1, t2), levels = private_rates()
    return ThroughputReport(
        t_common=t_c,
        t_private=(t1, t2),
        t_sum=t_c + t1 + t2,
        mcs_chosen=(mcs_c, levels[0], levels[1]),
        collapsed=False,
    )
