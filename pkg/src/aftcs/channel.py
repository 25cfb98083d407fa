"""Log-distance path loss with log-normal shadowing and an SNR -> packet error map.

The bit error curve is the average DBPSK error rate over Rayleigh fading,
``0.5 / (1 + snr)``. It falls one decade per 10 dB, which keeps the packet
error rate graded across the -100/-80/-70 dBm noise floors instead of
switching from zero to one inside a couple of dB. Bits fail independently, so
``per = 1 - (1 - ber) ** (8 * frame_bytes)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass
class ChannelState:
    noise_floor: float  # dBm
    path_loss_exponent: float = 2.4
    shadowing_sigma: float = 4.0  # dB
    distance: dict[int, float] = field(default_factory=dict)  # sensor -> m
    rng_seed: int = 0
    tx_power: float = 0.0  # dBm
    reference_loss: float = 43.0  # dB at 1 m
    ideal_noise_floor: float = -100.0

    def __post_init__(self):
        if self.noise_floor < self.ideal_noise_floor:
            raise ValueError("noise floor below the ideal floor")


def path_loss_db(distance: float, exponent: float, reference_loss: float) -> float:
    if distance <= 0:
        raise ValueError(f"distance must be positive, got {distance}")
    return reference_loss + 10 * exponent * math.log10(distance)


def snr_db(ch: ChannelState, sensor: int, shadowing_db: float = 0.0) -> float:
    d = ch.distance.get(sensor, 1.0)
    return ch.tx_power - (path_loss_db(d, ch.path_loss_exponent, ch.reference_loss) + shadowing_db) - ch.noise_floor


def bit_error_rate(snr: float) -> float:
    return 0.5 / (1.0 + 10 ** (snr / 10))


def packet_error_probability(ch: ChannelState, sensor: int, frame_bytes: int, shadowing_db: float = 0.0) -> float:
    return per_at_snr(snr_db(ch, sensor, shadowing_db), frame_bytes)


def per_at_snr(snr: float, frame_bytes: int) -> float:
    if frame_bytes <= 0:
        return 0.0
    ber = 0.5 / (1.0 + 10 ** (snr / 10))
    # log1p keeps precision when ber is ~1e-7
    return -math.expm1(8 * frame_bytes * math.log1p(-ber))


def mean_packet_error(ch: ChannelState, sensor: int, frame_bytes: int, points: int = 64) -> float:
    """Packet error averaged over the shadowing distribution (Gauss-Hermite)."""
    x, w = np.polynomial.hermite_e.hermegauss(points)
    vals = [packet_error_probability(ch, sensor, frame_bytes, ch.shadowing_sigma * xi) for xi in x]
    return float(np.dot(w, vals) / w.sum())
