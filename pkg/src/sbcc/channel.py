"""BPSK over AWGN, with LLR output and an ideal feedback event type."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["snr_to_sigma2", "NoiseModel", "FeedbackEvent", "transmit"]


def snr_to_sigma2(snr_db: float, reference: str = "es", rate: float = 1.0) -> float:
    """Noise variance per dimension for unit-energy BPSK.

    ``reference`` selects whether ``snr_db`` is Es/N0 ("es") or Eb/N0
    ("eb"); with "eb" the symbol SNR is Es/N0 = rate * Eb/N0.  Returns
    sigma^2 = 1 / (2 * Es/N0).
    """
    if reference not in ("es", "eb"):
        raise ValueError(f"unknown SNR reference {reference!r}")
    es_lin = 10.0 ** (snr_db / 10.0)
    if reference == "eb":
        if not 0.0 < rate <= 1.0:
            raise ValueError("code rate must be in (0, 1] for Eb/N0 reference")
        es_lin *= rate
    return 1.0 / (2.0 * es_lin)


@dataclass(frozen=True)
class NoiseModel:
    """AWGN with variance ``sigma2``; ``sigma2 == 0`` means noiseless."""

    sigma2: float
    cap: float = 20.0

    @classmethod
    def from_snr(cls, snr_db: float, reference: str = "es", rate: float = 1.0,
                 cap: float = 20.0) -> "NoiseModel":
        return cls(snr_to_sigma2(snr_db, reference, rate), cap)

    @classmethod
    def noiseless(cls, cap: float = 20.0) -> "NoiseModel":
        return cls(0.0, cap)


def transmit(bits: np.ndarray, noise: NoiseModel, rng: np.random.Generator) -> np.ndarray:
    """Map bits to BPSK (0 -> +1, 1 -> -1), add noise, return channel LLRs.

    LLRs are 2y/sigma^2 clipped to +-cap; in the noiseless case the LLR is
    exactly +-cap with the sign of the transmitted symbol.
    """
    b = np.asarray(bits)
    x = 1.0 - 2.0 * b.astype(np.float64)
    if noise.sigma2 == 0.0:
        return noise.cap * x
    y = x + rng.normal(0.0, np.sqrt(noise.sigma2), size=b.shape)
    return np.clip(2.0 * y / noise.sigma2, -noise.cap, noise.cap)


@dataclass(frozen=True)
class FeedbackEvent:
    """Ideal (instant, error-free) receiver-to-transmitter notification.

    ``kind`` is "resync" or "retransmit"; ``position`` is the target block
    index at which the event fired; ``blocks`` is the number of blocks
    retransmitted (0 for resync).
    """

    kind: str
    position: int
    blocks: int = 0
