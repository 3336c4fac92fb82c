"""16-bit PCM mono WAV I/O and second-to-sample conversions."""
from __future__ import annotations

import io
import math
import wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ContractError, WavFormatError

FULL_SCALE = 32768.0
MAX_SAMPLE = 1.0 - 2.0 ** -15
# forced-alignment end times may overshoot the audio by a few samples
DURATION_SLACK_S = 1e-3


@dataclass(frozen=True, eq=False)
class Waveform:
    samples: np.ndarray
    sample_rate_hz: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ContractError("waveform must be mono (1-D)")
        if int(self.sample_rate_hz) <= 0:
            raise ContractError(f"sample rate must be positive, got {self.sample_rate_hz}")
        if not np.all(np.isfinite(samples)):
            raise ContractError("waveform contains non-finite samples")
        if samples.size and np.max(np.abs(samples)) > 1.0:
            raise ContractError("waveform samples outside [-1, 1]")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate_hz", int(self.sample_rate_hz))

    def __len__(self):
        return self.samples.shape[0]

    @property
    def duration_s(self) -> float:
        return len(self) / self.sample_rate_hz


@dataclass(frozen=True)
class SampleSpan:
    start_idx: int
    end_idx: int  # exclusive

    def __post_init__(self):
        if not 0 <= self.start_idx < self.end_idx:
            raise ContractError(f"invalid sample span [{self.start_idx}, {self.end_idx})")

    def __len__(self):
        return self.end_idx - self.start_idx

    def check_within(self, n: int):
        if self.end_idx > n:
            raise ContractError(f"span [{self.start_idx}, {self.end_idx}) exceeds length {n}")


def read_wav(data: bytes) -> Waveform:
    """Decode 16-bit PCM mono WAV bytes; samples are scaled by 1/32768."""
    try:
        with wave.open(io.BytesIO(data), "rb") as wf:
            channels = wf.getnchannels()
            width = wf.getsampwidth()
            rate = wf.getframerate()
            n_frames = wf.getnframes()
            raw = wf.readframes(n_frames)
    except (wave.Error, EOFError) as e:
        raise WavFormatError(f"unsupported or corrupt WAV (PCM required): {e}") from None
    if channels != 1:
        raise WavFormatError(f"expected mono audio, got {channels} channels")
    if width != 2:
        raise WavFormatError(f"expected 16-bit samples, got {8 * width}-bit")
    if len(raw) != 2 * n_frames:
        raise WavFormatError(
            f"truncated data chunk: header declares {n_frames} frames, found {len(raw) // 2}"
        )
    pcm = np.frombuffer(raw, dtype="<i2")
    return Waveform(pcm.astype(np.float64) / FULL_SCALE, rate)


def quantize(samples: np.ndarray) -> np.ndarray:
    """Clamp to [-1, 1 - 2**-15] and round half away from zero to int16."""
    x = np.clip(np.asarray(samples, dtype=np.float64), -1.0, MAX_SAMPLE) * FULL_SCALE
    return (np.sign(x) * np.floor(np.abs(x) + 0.5)).astype("<i2")


def write_wav(w: Waveform) -> bytes:
    buf = io.BytesIO()
    with wave.open(buf, "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(w.sample_rate_hz)
        wf.writeframes(quantize(w.samples).tobytes())
    return buf.getvalue()


def wav_data_chunk(data: bytes) -> bytes:
    """Raw bytes of the ``data`` chunk, for bit-exactness comparisons."""
    pos = 12
    while pos + 8 <= len(data):
        cid = data[pos : pos + 4]
        size = int.from_bytes(data[pos + 4 : pos + 8], "little")
        if cid == b"data":
            return data[pos + 8 : pos + 8 + size]
        pos += 8 + size + (size & 1)
    raise WavFormatError("no data chunk")


def load_wav(path) -> Waveform:
    return read_wav(Path(path).read_bytes())


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def span_from_seconds(w: Waveform, start_s: float, end_s: float) -> SampleSpan:
    """Nearest-sample span for ``[start_s, end_s)``, clamped to the buffer."""
    if not 0 <= start_s < end_s:
        raise ContractError(f"invalid time span ({start_s}, {end_s})")
    if end_s > w.duration_s + DURATION_SLACK_S:
        raise ContractError(
            f"span end {end_s:.6f}s beyond waveform duration {w.duration_s:.6f}s"
        )
    n = len(w)
    start = min(_round_half_up(start_s * w.sample_rate_hz), n)
    end = min(_round_half_up(end_s * w.sample_rate_hz), n)
    if end <= start:
        # sub-sample spans still cover one sample
        if start >= n:
            start = n - 1
        end = start + 1
    return SampleSpan(start, end)
