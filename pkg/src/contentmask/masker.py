"""Noise, deletion and reversal masks over waveforms and VQ code sequences."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from enum import Enum

import numpy as np

from . import __version__
from .alignment import MaskTarget
from .audio import Waveform, span_from_seconds
from .errors import ContractError
from .noise import NoiseSource, cut_segment, match_rms

DEFAULT_CODE_RATE_HZ = 250.0  # 300 codes per 1.2 s


class MaskType(str, Enum):
    NOISE = "noise"
    DELETE = "delete"
    REVERSE = "reverse"


class Domain(str, Enum):
    WAVE = "wave"
    CODES = "codes"


@dataclass(frozen=True, eq=False)
class CodeSequence:
    codes: np.ndarray
    codebook_size: int
    code_rate_hz: float = DEFAULT_CODE_RATE_HZ

    def __post_init__(self):
        codes = np.asarray(self.codes)
        if codes.ndim != 1:
            raise ContractError("code sequence must be 1-D")
        if codes.size and not np.issubdtype(codes.dtype, np.integer):
            if not np.all(codes == np.round(codes)):
                raise ContractError("codes must be integers")
        codes = codes.astype(np.int64)
        if self.codebook_size < 1:
            raise ContractError("codebook_size must be positive")
        if not self.code_rate_hz > 0:
            raise ContractError("code_rate_hz must be positive")
        if codes.size and (codes.min() < 0 or codes.max() >= self.codebook_size):
            raise ContractError(f"codes outside [0, {self.codebook_size})")
        object.__setattr__(self, "codes", codes)

    def __len__(self):
        return self.codes.shape[0]

    @property
    def duration_s(self) -> float:
        return len(self) / self.code_rate_hz

    def to_json(self) -> str:
        return json.dumps(
            {
                "codebook_size": self.codebook_size,
                "code_rate_hz": self.code_rate_hz,
                "codes": self.codes.tolist(),
            }
        )

    @classmethod
    def from_json(cls, text: str | bytes) -> "CodeSequence":
        d = json.loads(text)
        try:
            return cls(
                np.asarray(d["codes"], dtype=np.int64).reshape(-1),
                int(d["codebook_size"]),
                float(d.get("code_rate_hz", DEFAULT_CODE_RATE_HZ)),
            )
        except KeyError as e:
            raise ContractError(f"code sequence JSON missing field {e}") from None


@dataclass(frozen=True, eq=False)
class MaskSpec:
    mask_type: MaskType
    target: MaskTarget
    noise_source: NoiseSource | None = None
    position: str = "explicit"
    rms_match: bool = True
    noise_offset: int = 0
    seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "mask_type", MaskType(self.mask_type))
        if self.noise_source is not None and self.mask_type is not MaskType.NOISE:
            raise ContractError(f"{self.mask_type.value} mask takes no noise source")


@dataclass(frozen=True)
class MaskManifest:
    utterance_id: str
    domain: str
    mask_type: str
    position: str
    word_indices: list
    span_s: list
    span_samples: list | None
    span_codes: list | None
    sample_rate_hz: int | None
    code_rate_hz: float | None
    input_length: int
    output_length: int
    tool_version: str = __version__
    seed: int | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def span_to_codes(span_s: tuple[float, float], code_rate_hz: float = DEFAULT_CODE_RATE_HZ) -> tuple[int, int]:
    """Code index range ``[start, end)`` for a time span; never shorter than one code."""
    start_s, end_s = span_s
    if start_s < 0 or end_s < start_s:
        raise ContractError(f"invalid time span {span_s}")
    start = _round_half_up(start_s * code_rate_hz)
    end = _round_half_up(end_s * code_rate_hz)
    return start, max(end, start + 1)


def _apply(x: np.ndarray, start: int, end: int, mask_type: MaskType, fill=None) -> np.ndarray:
    if mask_type is MaskType.DELETE:
        return np.concatenate([x[:start], x[end:]])
    out = x.copy()
    if mask_type is MaskType.REVERSE:
        out[start:end] = x[start:end][::-1]
    else:
        out[start:end] = fill
    return out


def _span_list(span_s):
    return [round(span_s[0], 6), round(span_s[1], 6)]


def mask_waveform(
    w: Waveform,
    spec: MaskSpec,
    utterance_id: str = "",
    code_rate_hz: float = DEFAULT_CODE_RATE_HZ,
) -> tuple[Waveform, MaskManifest]:
    """Mask the target span of a waveform.

    Noise replaces the span with an equal-length masker cut (RMS-matched to
    the replaced speech unless ``spec.rms_match`` is false), delete splices
    it out, reverse plays it backwards. Samples outside the span are copied
    unchanged.
    """
    span = span_from_seconds(w, *spec.target.span_s)
    start, end = span.start_idx, span.end_idx
    fill = None
    if spec.mask_type is MaskType.NOISE:
        if spec.noise_source is None:
            raise ContractError("noise mask requires a noise source")
        if spec.noise_source.waveform.sample_rate_hz != w.sample_rate_hz:
            raise ContractError(
                f"masker rate {spec.noise_source.waveform.sample_rate_hz} Hz does not match "
                f"waveform rate {w.sample_rate_hz} Hz"
            )
        fill = cut_segment(spec.noise_source, len(span), spec.noise_offset)
        if spec.rms_match:
            fill = match_rms(fill, w.samples[start:end])
    out = Waveform(_apply(w.samples, start, end, spec.mask_type, fill), w.sample_rate_hz)
    manifest = MaskManifest(
        utterance_id=utterance_id,
        domain=Domain.WAVE.value,
        mask_type=spec.mask_type.value,
        position=spec.position,
        word_indices=list(spec.target.word_indices),
        span_s=_span_list(spec.target.span_s),
        span_samples=[start, end],
        span_codes=list(span_to_codes(spec.target.span_s, code_rate_hz)),
        sample_rate_hz=w.sample_rate_hz,
        code_rate_hz=code_rate_hz,
        input_length=len(w),
        output_length=len(out),
        seed=spec.seed,
    )
    return out, manifest


def mask_codes(
    c: CodeSequence,
    spec: MaskSpec,
    noise_codes: CodeSequence | None = None,
    utterance_id: str = "",
) -> tuple[CodeSequence, MaskManifest]:
    """Mask the target span of a VQ code sequence.

    The noise mask swaps in ``noise_codes`` (codes of a noise-only encoding),
    tiled or truncated to the span length from ``spec.noise_offset``.
    """
    start, end = span_to_codes(spec.target.span_s, c.code_rate_hz)
    if end > len(c):
        # one code of rounding slack at the tail of the utterance
        if end - len(c) > 1 or start >= len(c):
            raise ContractError(f"code span [{start}, {end}) exceeds sequence of {len(c)} codes")
        end = len(c)
    fill = None
    if spec.mask_type is MaskType.NOISE:
        if noise_codes is None or len(noise_codes) == 0:
            raise ContractError("noise mask requires noise codes")
        if noise_codes.codebook_size != c.codebook_size:
            raise ContractError(
                f"codebook size mismatch: {noise_codes.codebook_size} vs {c.codebook_size}"
            )
        src = noise_codes.codes
        if spec.noise_offset:
            src = np.roll(src, -(spec.noise_offset % len(src)))
        fill = np.resize(src, end - start)
    out = CodeSequence(_apply(c.codes, start, end, spec.mask_type, fill), c.codebook_size, c.code_rate_hz)
    manifest = MaskManifest(
        utterance_id=utterance_id,
        domain=Domain.CODES.value,
        mask_type=spec.mask_type.value,
        position=spec.position,
        word_indices=list(spec.target.word_indices),
        span_s=_span_list(spec.target.span_s),
        span_samples=None,
        span_codes=[start, end],
        sample_rate_hz=None,
        code_rate_hz=c.code_rate_hz,
        input_length=len(c),
        output_length=len(out),
        seed=spec.seed,
    )
    return out, manifest

