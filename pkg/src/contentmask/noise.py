"""Speech-shaped, temporally modulated noise maskers.

The published ICRA maskers cannot be shipped, so a masker is either loaded
from a user-supplied WAV file or synthesized from a seed.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import signal

from .audio import Waveform, read_wav
from .errors import ContractError

TARGET_RMS = 0.1
SPEECH_TILT_CORNER_HZ = 500.0
HIGHPASS_HZ = 80.0
ENVELOPE_CUTOFF_HZ = 4.0
ENVELOPE_DEPTH = 0.5  # std of the log-envelope


class SourceKind(str, Enum):
    EXTERNAL_FILE = "external_file"
    SYNTHESIZED = "synthesized"


@dataclass(frozen=True, eq=False)
class NoiseSource:
    kind: SourceKind
    waveform: Waveform
    seed: int | None = None

    def __post_init__(self):
        if len(self.waveform) == 0:
            raise ContractError("masker waveform is empty")


def load_masker(data: bytes) -> NoiseSource:
    return NoiseSource(SourceKind.EXTERNAL_FILE, read_wav(data))


def _shaping_sos(sample_rate_hz: int) -> np.ndarray:
    # first-order low-pass = -6 dB/octave above the corner, plus rumble high-pass
    tilt = signal.butter(1, SPEECH_TILT_CORNER_HZ, "lowpass", fs=sample_rate_hz, output="sos")
    hp = signal.butter(1, HIGHPASS_HZ, "highpass", fs=sample_rate_hz, output="sos")
    return np.vstack([hp, tilt])


def _envelope_sos(sample_rate_hz: int) -> np.ndarray:
    return signal.butter(2, ENVELOPE_CUTOFF_HZ, "lowpass", fs=sample_rate_hz, output="sos")


def synthesize_masker(duration_s: float, sample_rate_hz: int, seed: int) -> NoiseSource:
    """Seeded speech-shaped noise with a slow (< 8 Hz) random amplitude envelope."""
    if not duration_s > 0:
        raise ContractError(f"masker duration must be positive, got {duration_s}")
    if sample_rate_hz <= 2 * SPEECH_TILT_CORNER_HZ:
        raise ContractError(f"sample rate {sample_rate_hz} too low for the shaping filter")
    n = max(1, int(round(duration_s * sample_rate_hz)))
    rng = np.random.default_rng(seed)
    carrier = signal.sosfilt(_shaping_sos(sample_rate_hz), rng.standard_normal(n))

    slow = signal.sosfilt(_envelope_sos(sample_rate_hz), rng.standard_normal(n))
    sd = slow.std()
    if sd > 0:
        slow /= sd
    envelope = np.exp(ENVELOPE_DEPTH * slow)

    x = carrier * envelope
    # rare envelope peaks clip; a second pass restores the target level
    for _ in range(2):
        level = np.sqrt(np.mean(x ** 2))
        if level > 0:
            x = np.clip(x * (TARGET_RMS / level), -1.0, 1.0)
    return NoiseSource(SourceKind.SYNTHESIZED, Waveform(x, sample_rate_hz), seed)


def cut_segment(src: NoiseSource, n_samples: int, offset: int = 0) -> np.ndarray:
    """Exactly ``n_samples`` of masker, starting at ``offset`` and tiling as needed."""
    if n_samples < 1:
        raise ContractError("n_samples must be >= 1")
    x = src.waveform.samples
    if offset:
        x = np.roll(x, -(offset % len(x)))
    return np.resize(x, n_samples)


def random_offset(src: NoiseSource, seed: int) -> int:
    """Seed-controlled start offset into the masker, for the non-default mode."""
    return int(np.random.default_rng(seed).integers(len(src.waveform)))


def rms(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=np.float64)
    return float(np.sqrt(np.mean(x ** 2))) if x.size else 0.0


def match_rms(segment: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Scale ``segment`` to the RMS of ``reference``; result clipped to [-1, 1]."""
    seg_rms = rms(segment)
    if seg_rms == 0.0:
        return np.array(segment, dtype=np.float64)
    return np.clip(segment * (rms(reference) / seg_rms), -1.0, 1.0)
