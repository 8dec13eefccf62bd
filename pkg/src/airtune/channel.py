"""SNR-to-PHY-rate and SNR-to-BER mapping plus the per-MPDU frame error model."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Per-stream rate rungs (min_snr_db, rate_mbps): 4 streams at 20 dB give
# ~1.5 Gbps aggregate on-air capacity.
DEFAULT_RATE_TABLE = ((0.0, 65.0), (5.0, 130.0), (10.0, 195.0), (15.0, 260.0), (20.0, 390.0))

# Table-mode BER: noisy at 3 dB, near-ideal at 20 dB.
DEFAULT_BER_TABLE = ((3.0, 2e-5), (10.0, 1e-6), (20.0, 1e-8))


@dataclass(frozen=True)
class ChannelProfile:
    """Immutable channel description; shared freely across simulations.

    Exactly one BER model is active: `ber_exp = (c1, c2)` selects the
    exponential approximation, otherwise `ber_table` interpolation is used.
    """

    snr_db: float
    rate_table: tuple = DEFAULT_RATE_TABLE
    ber_table: tuple | None = DEFAULT_BER_TABLE
    ber_exp: tuple | None = None

    def __post_init__(self):
        if len(self.rate_table) == 0:
            raise ValueError("rate_table must have at least one rung")
        snrs = [s for s, _ in self.rate_table]
        rates = [r for _, r in self.rate_table]
        if any(b <= a for a, b in zip(snrs, snrs[1:])) or any(
            b <= a for a, b in zip(rates, rates[1:])
        ):
            raise ValueError("rate_table rungs must be strictly increasing in snr and rate")
        if any(r <= 0 for r in rates):
            raise ValueError("phy rates must be positive")
        if self.ber_exp is not None:
            c1, c2 = self.ber_exp
            if c1 < 0 or c2 < 0:
                raise ValueError("ber_exp coefficients must be non-negative")
        elif self.ber_table is not None:
            if len(self.ber_table) == 0:
                raise ValueError("ber_table must have at least one point")
            tsnrs = [s for s, _ in self.ber_table]
            if any(b <= a for a, b in zip(tsnrs, tsnrs[1:])):
                raise ValueError("ber_table snr points must be strictly increasing")
            if any(not 0.0 <= b <= 1.0 for _, b in self.ber_table):
                raise ValueError("ber values must lie in [0, 1]")
        else:
            raise ValueError("one of ber_table or ber_exp is required")


def phy_rate(profile: ChannelProfile) -> float:
    """Per-stream PHY rate in Mbps: highest rung at or below snr_db (clamped low)."""
    rate = profile.rate_table[0][1]
    for min_snr, rung_rate in profile.rate_table:
        if profile.snr_db >= min_snr:
            rate = rung_rate
        else:
            break
    return float(rate)


def ber(profile: ChannelProfile) -> float:
    """Bit error probability at the profile's SNR."""
    if profile.ber_exp is not None:
        c1, c2 = profile.ber_exp
        snr_lin = 10.0 ** (profile.snr_db / 10.0)
        return float(min(max(c1 * math.exp(-c2 * snr_lin), 0.0), 0.5))
    snrs = np.array([s for s, _ in profile.ber_table], dtype=np.float64)
    bers = np.array([b for _, b in profile.ber_table], dtype=np.float64)
    # Linear interpolation in log-BER; np.interp clamps outside the table.
    log_b = np.log(np.maximum(bers, 1e-300))
    value = math.exp(float(np.interp(profile.snr_db, snrs, log_b)))
    return float(min(max(value, 0.0), 1.0))


def mpdu_error_prob(len_bytes: float, bit_error_rate: float) -> float:
    """Frame error probability for independent bit errors: 1 - (1-ber)^(8*len)."""
    if len_bytes < 0:
        raise ValueError("length must be >= 0 bytes")
    if not 0.0 <= bit_error_rate <= 1.0:
        raise ValueError("ber must lie in [0, 1]")
    if len_bytes == 0 or bit_error_rate == 0.0:
        return 0.0
    if bit_error_rate >= 1.0:
        return 1.0
    return float(-math.expm1(8.0 * len_bytes * math.log1p(-bit_error_rate)))
