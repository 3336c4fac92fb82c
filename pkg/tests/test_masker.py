import json

import numpy as np
import pytest

from contentmask.alignment import MaskTarget
from contentmask.audio import Waveform, span_from_seconds
from contentmask.errors import ContractError
from contentmask.masker import (
    CodeSequence,
    MaskSpec,
    MaskType,
    mask_codes,
    mask_waveform,
    span_to_codes,
)
from contentmask.noise import NoiseSource, SourceKind, synthesize_masker


def target(start_s, end_s):
    return MaskTarget(0, 1, (start_s, end_s))


def codes_spec(mask_type, start, end, rate=250.0, **kw):
    return MaskSpec(mask_type, target(start / rate, end / rate), **kw)


# --- span_to_codes ----------------------------------------------------------


def test_code_rate_anchor():
    assert span_to_codes((0.0, 1.2)) == (0, 300)


def test_span_to_codes_examples():
    assert span_to_codes((0.4, 0.9), 250.0) == (100, 225)
    assert span_to_codes((0.5, 0.5), 250.0) == (125, 126)
    assert span_to_codes((0.5, 0.5001), 250.0) == (125, 126)


def test_span_to_codes_rejects_inverted():
    with pytest.raises(ContractError):
        span_to_codes((0.9, 0.4))


# --- code domain ------------------------------------------------------------


def seq(codes, size=10):
    return CodeSequence(np.array(codes), size)


def test_code_noise_example():
    out, man = mask_codes(seq([5, 6, 7, 8]), codes_spec("noise", 1, 3), noise_codes=seq([9, 9]))
    assert out.codes.tolist() == [5, 9, 9, 8]
    assert man.span_codes == [1, 3] and man.domain == "codes"


def test_code_delete_example():
    out, man = mask_codes(seq([5, 6, 7, 8]), codes_spec("delete", 1, 3))
    assert out.codes.tolist() == [5, 8]
    assert man.output_length == 2 and man.input_length == 4


def test_code_reverse_example():
    out, _ = mask_codes(seq([5, 6, 7, 8]), codes_spec("reverse", 1, 3))
    assert out.codes.tolist() == [5, 7, 6, 8]


def test_code_noise_tiles_and_truncates():
    out, _ = mask_codes(seq([0] * 8), codes_spec("noise", 1, 6), noise_codes=seq([1, 2]))
    assert out.codes.tolist() == [0, 1, 2, 1, 2, 1, 0, 0]
    out, _ = mask_codes(seq([0] * 8), codes_spec("noise", 1, 3), noise_codes=seq([1, 2, 3, 4]))
    assert out.codes.tolist() == [0, 1, 2, 0, 0, 0, 0, 0]


def test_code_noise_offset():
    out, _ = mask_codes(seq([0] * 5), codes_spec("noise", 1, 4, noise_offset=1), noise_codes=seq([1, 2, 3]))
    assert out.codes.tolist() == [0, 2, 3, 1, 0]


def test_code_errors():
    with pytest.raises(ContractError, match="codebook"):
        mask_codes(seq([1, 2, 3]), codes_spec("noise", 0, 2), noise_codes=seq([1], size=20))
    with pytest.raises(ContractError, match="noise codes"):
        mask_codes(seq([1, 2, 3]), codes_spec("noise", 0, 2))
    with pytest.raises(ContractError, match="exceeds"):
        mask_codes(seq([1, 2, 3]), codes_spec("reverse", 1, 6))


def test_code_tail_rounding_slack():
    out, man = mask_codes(seq([1, 2, 3, 4]), codes_spec("delete", 2, 5))
    assert out.codes.tolist() == [1, 2] and man.span_codes == [2, 4]


def test_code_sequence_validation():
    with pytest.raises(ContractError):
        CodeSequence(np.array([0, 10]), 10)
    with pytest.raises(ContractError):
        CodeSequence(np.array([-1]), 10)
    with pytest.raises(ContractError):
        CodeSequence(np.array([1]), 10, code_rate_hz=0)


def test_code_sequence_json():
    c = CodeSequence(np.array([3, 1, 4, 1, 5]), 16, 250.0)
    d = json.loads(c.to_json())
    assert d == {"codebook_size": 16, "code_rate_hz": 250.0, "codes": [3, 1, 4, 1, 5]}
    back = CodeSequence.from_json(c.to_json())
    assert back.codes.tolist() == c.codes.tolist() and back.codebook_size == 16
    with pytest.raises(ContractError):
        CodeSequence.from_json('{"codes": [1]}')


# --- waveform domain --------------------------------------------------------


def wave_of(values, rate=10):
    return Waveform(np.asarray(values, dtype=float), rate)


def test_wave_reverse_example():
    w = wave_of([0.1, 0.2, 0.3, 0.4, 0.5])
    out, man = mask_waveform(w, MaskSpec("reverse", target(0.1, 0.4)))
    assert out.samples.tolist() == [0.1, 0.4, 0.3, 0.2, 0.5]
    assert man.span_samples == [1, 4]


def test_wave_delete_example():
    w = wave_of([0.1, 0.2, 0.3, 0.4, 0.5])
    out, _ = mask_waveform(w, MaskSpec("delete", target(0.1, 0.4)))
    assert out.samples.tolist() == [0.1, 0.5]


def test_wave_noise_fixture():
    rng = np.random.default_rng(3)
    w = Waveform(rng.uniform(-0.1, 0.1, 16000), 16000)
    src = synthesize_masker(0.5, 16000, 11)
    out, man = mask_waveform(w, MaskSpec("noise", target(0.25, 0.6), src, seed=11))
    start, end = man.span_samples
    assert (start, end) == (4000, 9600)
    assert len(out) == len(w)
    np.testing.assert_array_equal(out.samples[:start], w.samples[:start])
    np.testing.assert_array_equal(out.samples[end:], w.samples[end:])
    seg = out.samples[start:end]
    np.testing.assert_allclose(np.sqrt(np.mean(seg ** 2)), np.sqrt(np.mean(w.samples[start:end] ** 2)))
    assert man.seed == 11


def test_wave_noise_without_rms_match_is_raw_masker():
    w = Waveform(np.full(100, 0.01), 100)
    src = NoiseSource(SourceKind.EXTERNAL_FILE, Waveform(np.linspace(-0.5, 0.5, 30), 100))
    out, _ = mask_waveform(w, MaskSpec("noise", target(0.1, 0.5), src, rms_match=False))
    np.testing.assert_array_equal(out.samples[10:50], np.resize(src.waveform.samples, 40))


def test_wave_errors():
    w = wave_of(np.zeros(10))
    with pytest.raises(ContractError, match="noise source"):
        mask_waveform(w, MaskSpec("noise", target(0.1, 0.4)))
    with pytest.raises(ContractError):
        mask_waveform(w, MaskSpec("reverse", target(0.1, 5.0)))
    other_rate = NoiseSource(SourceKind.EXTERNAL_FILE, Waveform(np.zeros(10), 8000))
    with pytest.raises(ContractError, match="rate"):
        mask_waveform(w, MaskSpec("noise", target(0.1, 0.4), other_rate))


def test_noise_source_forbidden_for_other_types():
    src = synthesize_masker(0.1, 16000, 0)
    with pytest.raises(ContractError):
        MaskSpec(MaskType.DELETE, target(0.1, 0.2), src)


def test_manifest_spans_consistent():
    w = Waveform(np.zeros(48000), 16000)
    _, man = mask_waveform(w, MaskSpec("reverse", target(0.4123, 1.7771), position="middle"))
    s0, s1 = man.span_samples
    c0, c1 = man.span_codes
    assert abs(s0 / 16000 * 250 - c0) <= 1 and abs(s1 / 16000 * 250 - c1) <= 1
    assert span_from_seconds(w, 0.4123, 1.7771).start_idx == s0
    d = json.loads(man.to_json())
    assert d["position"] == "middle" and d["tool_version"]
