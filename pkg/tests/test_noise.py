import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from contentmask.audio import Waveform, read_wav
from contentmask.errors import ContractError, WavFormatError
from contentmask.noise import (
    NoiseSource,
    SourceKind,
    cut_segment,
    load_masker,
    match_rms,
    random_offset,
    rms,
    synthesize_masker,
)


def spectral_centroid(x, rate):
    power = np.abs(np.fft.rfft(x)) ** 2
    freqs = np.fft.rfftfreq(len(x), 1 / rate)
    return float((freqs * power).sum() / power.sum())


def modulation_peak_hz(x, rate, env_rate=100):
    """Peak of the amplitude-envelope spectrum (DC excluded)."""
    hop = rate // env_rate
    frames = np.abs(x[: len(x) // hop * hop]).reshape(-1, hop).mean(axis=1)
    frames = frames - frames.mean()
    spec = np.abs(np.fft.rfft(frames)) ** 2
    freqs = np.fft.rfftfreq(len(frames), 1 / env_rate)
    spec[0] = 0.0
    return float(freqs[np.argmax(spec)])


def src_from(samples, rate=16000):
    return NoiseSource(SourceKind.EXTERNAL_FILE, Waveform(np.asarray(samples, float), rate))


def test_load_masker(fixtures_dir):
    raw = (fixtures_dir / "masker_16k.wav").read_bytes()
    src = load_masker(raw)
    assert src.kind is SourceKind.EXTERNAL_FILE
    np.testing.assert_array_equal(src.waveform.samples, read_wav(raw).samples)
    # identity oracle: full-length cut reproduces the file
    np.testing.assert_array_equal(cut_segment(src, len(src.waveform)), read_wav(raw).samples)


def test_load_masker_stereo(fixtures_dir):
    with pytest.raises(WavFormatError):
        load_masker((fixtures_dir / "stereo_16k.wav").read_bytes())


def test_synth_deterministic():
    a = synthesize_masker(1.0, 16000, 7)
    b = synthesize_masker(1.0, 16000, 7)
    np.testing.assert_array_equal(a.waveform.samples, b.waveform.samples)
    assert a.kind is SourceKind.SYNTHESIZED and a.seed == 7


def test_synth_seed_changes_output():
    a = synthesize_masker(1.0, 16000, 1)
    b = synthesize_masker(1.0, 16000, 2)
    assert not np.array_equal(a.waveform.samples, b.waveform.samples)


def test_synth_rejects_nonpositive_duration():
    with pytest.raises(ContractError):
        synthesize_masker(0.0, 16000, 1)


@pytest.mark.parametrize("seed", [0, 1, 2, 12345])
def test_synth_spectral_shape(seed):
    src = synthesize_masker(10.0, 16000, seed)
    x = src.waveform.samples
    assert len(x) == 160000
    assert abs(rms(x) - 0.1) < 1e-3
    assert spectral_centroid(x, 16000) < 1500.0
    assert modulation_peak_hz(x, 16000) < 8.0


def test_oracle_sanity_white_noise():
    # the analysis oracle must reject unshaped, unmodulated noise
    x = np.random.default_rng(0).normal(0, 0.1, 160000)
    assert spectral_centroid(x, 16000) > 3000.0


def test_cut_tiling():
    src = src_from(np.arange(100) / 1000)
    seg = cut_segment(src, 250)
    assert len(seg) == 250
    np.testing.assert_array_equal(seg, np.concatenate([np.arange(100), np.arange(100), np.arange(50)]) / 1000)


def test_cut_edges():
    src = src_from(np.arange(100) / 1000)
    assert cut_segment(src, 1).tolist() == [0.0]
    np.testing.assert_array_equal(cut_segment(src, 100), src.waveform.samples)
    with pytest.raises(ContractError):
        cut_segment(src, 0)


def test_cut_offset():
    src = src_from(np.arange(10) / 100)
    assert (cut_segment(src, 4, offset=8) * 100).round().tolist() == [8, 9, 0, 1]
    off = random_offset(src, 42)
    assert 0 <= off < 10 and off == random_offset(src, 42)


@given(st.integers(1, 5000), st.integers(1, 300))
def test_cut_length_property(n, m):
    src = src_from(np.linspace(-0.5, 0.5, m))
    assert len(cut_segment(src, n)) == n


def test_match_rms():
    seg = np.array([0.1, -0.1, 0.1, -0.1])
    ref = np.array([0.3, -0.3, 0.3, -0.3])
    np.testing.assert_allclose(match_rms(seg, ref), ref)
    np.testing.assert_array_equal(match_rms(np.zeros(4), ref), np.zeros(4))
