import io
import wave

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from contentmask.audio import (
    SampleSpan,
    Waveform,
    read_wav,
    span_from_seconds,
    wav_data_chunk,
    write_wav,
)
from contentmask.errors import ContractError, WavFormatError

PCM_FIXTURES = ["tone_16k.wav", "noise_8k.wav", "extremes_16k.wav", "masker_16k.wav"]


def stdlib_frames(data: bytes) -> bytes:
    with wave.open(io.BytesIO(data)) as wf:
        return wf.readframes(wf.getnframes())


def test_read_header(fixtures_dir):
    w = read_wav((fixtures_dir / "tone_16k.wav").read_bytes())
    assert len(w) == 16000
    assert w.sample_rate_hz == 16000
    assert w.duration_s == 1.0


def test_read_scaling(fixtures_dir):
    w = read_wav((fixtures_dir / "extremes_16k.wav").read_bytes())
    assert w.samples[:7].tolist() == [-1.0, -32767 / 32768, -1 / 32768, 0.0, 1 / 32768, 32766 / 32768, 32767 / 32768]


@pytest.mark.parametrize("name", PCM_FIXTURES)
def test_data_chunk_roundtrip(fixtures_dir, name):
    raw = (fixtures_dir / name).read_bytes()
    again = write_wav(read_wav(raw))
    assert wav_data_chunk(again) == wav_data_chunk(raw)
    assert stdlib_frames(again) == stdlib_frames(raw)


@pytest.mark.parametrize("name,match", [
    ("stereo_16k.wav", "mono"),
    ("float_16k.wav", "PCM"),
    ("truncated_16k.wav", "truncated"),
])
def test_rejects(fixtures_dir, name, match):
    with pytest.raises(WavFormatError, match=match):
        read_wav((fixtures_dir / name).read_bytes())


def test_rejects_8bit():
    buf = io.BytesIO()
    with wave.open(buf, "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(1)
        wf.setframerate(8000)
        wf.writeframes(bytes(10))
    with pytest.raises(WavFormatError, match="16-bit"):
        read_wav(buf.getvalue())


def test_rejects_garbage():
    with pytest.raises(WavFormatError):
        read_wav(b"not a wav file at all")


def test_zero_waveform_data_chunk():
    data = write_wav(Waveform(np.zeros(100), 16000))
    chunk = wav_data_chunk(data)
    assert len(chunk) == 200 and chunk == bytes(200)


def test_clamp_and_rounding():
    x = np.array([1.0, -1.0, 2.0 ** -16, -(2.0 ** -16), 1.5 / 32768, -1.5 / 32768, 0.49 / 32768])
    pcm = np.frombuffer(wav_data_chunk(write_wav(Waveform(x, 8000))), dtype="<i2")
    # half-away-from-zero: 0.5 -> 1, -0.5 -> -1, 1.5 -> 2
    assert pcm.tolist() == [32767, -32768, 1, -1, 2, -2, 0]


@given(st.lists(st.floats(-1.0, 1.0), min_size=1, max_size=300))
def test_quantization_within_one_step(values):
    w = Waveform(np.array(values), 16000)
    back = read_wav(write_wav(w))
    assert len(back) == len(w)
    assert np.max(np.abs(back.samples - w.samples)) <= 1.0 / 32768 + 1e-15


def test_waveform_invariants():
    with pytest.raises(ContractError):
        Waveform(np.array([0.0, np.nan]), 16000)
    with pytest.raises(ContractError):
        Waveform(np.zeros(3), 0)
    with pytest.raises(ContractError):
        Waveform(np.array([1.5]), 16000)


def test_span_examples():
    w = Waveform(np.zeros(32000), 16000)
    assert span_from_seconds(w, 0.4, 0.9) == SampleSpan(6400, 14400)
    assert span_from_seconds(w, 0.0, w.duration_s) == SampleSpan(0, 32000)


def test_span_errors():
    w = Waveform(np.zeros(16000), 16000)
    with pytest.raises(ContractError):
        span_from_seconds(w, 0.5, 0.4)
    with pytest.raises(ContractError):
        span_from_seconds(w, 0.5, 1.5)
    with pytest.raises(ContractError):
        span_from_seconds(w, -0.1, 0.4)


def test_span_tolerates_alignment_overshoot():
    w = Waveform(np.zeros(16000), 16000)
    assert span_from_seconds(w, 0.5, 1.0005).end_idx == 16000


def test_subsample_span_widened():
    w = Waveform(np.zeros(16000), 16000)
    s = span_from_seconds(w, 0.10000, 0.10001)
    assert len(s) == 1


@given(st.integers(8000, 48000), st.floats(0.0, 2.0), st.floats(0.001, 2.0))
def test_span_length_property(rate, start, length):
    w = Waveform(np.zeros(int(rate * 4.5)), rate)
    s = span_from_seconds(w, start, start + length)
    assert abs(len(s) - length * rate) <= 1.0 + 1e-6


@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_span_monotone(a, b):
    w = Waveform(np.zeros(16000 * 3), 16000)
    lo, hi = sorted((a, b))
    assert span_from_seconds(w, lo, 2.0).start_idx <= span_from_seconds(w, hi, 2.0).start_idx
