"""Forced-alignment word tiers: TextGrid parsing, JSON round-trip and target selection.

Only the long (verbose) Praat TextGrid format is read. MFA writes one
IntervalTier named ``words`` (or ``<speaker> - words``) next to a phone tier;
the phone tier is ignored.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

from .errors import (
    ContractError,
    SelectionError,
    TextGridParseError,
    TextGridStructureError,
)

SIL = "SIL"
OVERLAP_TOLERANCE_S = 1e-3


class Position(str, Enum):
    START = "start"
    MIDDLE = "middle"
    END = "end"


@dataclass(frozen=True)
class WordInterval:
    label: str
    start_s: float
    end_s: float
    is_sil: bool = False

    def __post_init__(self):
        if not self.label:
            raise ContractError("interval label must be non-empty")
        if self.start_s < 0:
            raise ContractError(f"negative start time {self.start_s}")
        if not self.end_s > self.start_s:
            raise ContractError(
                f"interval {self.label!r} has end {self.end_s} <= start {self.start_s}"
            )

    @property
    def duration_s(self) -> float:
        return self.end_s - self.start_s


@dataclass(frozen=True)
class AlignedUtterance:
    utterance_id: str
    speaker_id: str
    words: tuple[WordInterval, ...]
    total_duration_s: float

    def __post_init__(self):
        object.__setattr__(self, "words", tuple(self.words))
        for prev, cur in zip(self.words, self.words[1:]):
            if cur.start_s < prev.start_s:
                raise ContractError("intervals must be sorted by start time")
            if prev.end_s > cur.start_s + OVERLAP_TOLERANCE_S:
                raise ContractError(
                    f"intervals {prev.label!r} and {cur.label!r} overlap"
                )
        if self.words and self.total_duration_s < self.words[-1].end_s - OVERLAP_TOLERANCE_S:
            raise ContractError("total duration shorter than last interval")

    @property
    def content_words(self) -> list[WordInterval]:
        """The non-silence intervals, in order."""
        return [w for w in self.words if not w.is_sil]

    def speech_bounds(self) -> tuple[float, float] | None:
        """(first word start, last word end) ignoring silence, or None."""
        content = self.content_words
        if not content:
            return None
        return content[0].start_s, content[-1].end_s


@dataclass(frozen=True)
class MaskTarget:
    """Contiguous run of non-silence words ``[first, stop)`` and its time span."""

    first: int
    stop: int
    span_s: tuple[float, float]

    def __post_init__(self):
        if not 0 <= self.first < self.stop:
            raise ContractError(f"empty or negative word range [{self.first}, {self.stop})")
        if not self.span_s[1] > self.span_s[0]:
            raise ContractError(f"degenerate span {self.span_s}")

    @property
    def word_indices(self) -> range:
        return range(self.first, self.stop)

    def __len__(self):
        return self.stop - self.first

    def to_dict(self) -> dict:
        return {
            "word_indices": list(self.word_indices),
            "span_s": [round(self.span_s[0], 6), round(self.span_s[1], 6)],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MaskTarget":
        idx = sorted(int(i) for i in d["word_indices"])
        if not idx or idx != list(range(idx[0], idx[-1] + 1)):
            raise ContractError(f"word indices must be contiguous, got {idx}")
        return cls(idx[0], idx[-1] + 1, (float(d["span_s"][0]), float(d["span_s"][1])))


# ---------------------------------------------------------------------------
# TextGrid parsing

_KV = re.compile(r'^\s*([A-Za-z][\w ]*?)\s*=\s*(.*?)\s*$')
_ITEM = re.compile(r'^\s*item\s*\[\s*(\d*)\s*\]\s*:\s*$')
_INTERVAL = re.compile(r'^\s*intervals\s*\[\s*(\d+)\s*\]\s*:?\s*$')
_POINT = re.compile(r'^\s*points\s*\[\s*(\d+)\s*\]\s*:?\s*$')
_SIZE = re.compile(r'^\s*(intervals|points)\s*:\s*size\s*=\s*(\d+)\s*$')
_EXISTS = re.compile(r'^\s*tiers\?\s*<exists>\s*$')


def _parse_string(raw: str, line: int) -> str:
    if len(raw) < 2 or raw[0] != '"' or raw[-1] != '"':
        raise TextGridParseError(f"expected quoted string, got {raw!r}", line)
    body = raw[1:-1]
    # Praat escapes a literal quote by doubling it
    if re.search(r'(?<!")"(?!")', body.replace('""', '')):
        raise TextGridParseError(f"unbalanced quote in {raw!r}", line)
    return body.replace('""', '"')


def _parse_number(raw: str, line: int) -> float:
    try:
        return float(raw)
    except ValueError:
        raise TextGridParseError(f"expected number, got {raw!r}", line) from None


@dataclass
class _Tier:
    cls: str = ""
    name: str = ""
    xmin: float | None = None
    xmax: float | None = None
    intervals: list = field(default_factory=list)  # [xmin, xmax, text, line]


def _read_tiers(text: str) -> tuple[float | None, list[_Tier]]:
    lines = text.splitlines()
    meaningful = [(i + 1, ln) for i, ln in enumerate(lines) if ln.strip()]
    if len(meaningful) < 2:
        raise TextGridParseError("file too short to be a TextGrid", len(lines) or 1)
    (l1, first), (l2, second) = meaningful[0], meaningful[1]
    m = _KV.match(first.lstrip("﻿"))
    if not m or m.group(1) != "File type" or _parse_string(m.group(2), l1) != "ooTextFile":
        raise TextGridParseError('expected File type = "ooTextFile"', l1)
    m = _KV.match(second)
    if not m or m.group(1) != "Object class" or _parse_string(m.group(2), l2) != "TextGrid":
        raise TextGridParseError('expected Object class = "TextGrid"', l2)

    file_xmax = None
    tiers: list[_Tier] = []
    tier: _Tier | None = None
    current: list | None = None  # interval under construction
    for lineno, ln in meaningful[2:]:
        if _ITEM.match(ln):
            if _ITEM.match(ln).group(1):
                tier = _Tier()
                tiers.append(tier)
                current = None
            continue
        if _EXISTS.match(ln) or _SIZE.match(ln):
            continue
        if _INTERVAL.match(ln):
            if tier is None:
                raise TextGridParseError("interval outside of a tier", lineno)
            current = [None, None, None, lineno]
            tier.intervals.append(current)
            continue
        if _POINT.match(ln):
            current = None
            continue
        m = _KV.match(ln)
        if not m:
            raise TextGridParseError(f"unrecognised line {ln.strip()!r}", lineno)
        key, raw = m.group(1), m.group(2)
        if tier is None:
            if key == "xmax":
                file_xmax = _parse_number(raw, lineno)
            elif key not in ("xmin", "size"):
                raise TextGridParseError(f"unexpected key {key!r} in header", lineno)
            continue
        if current is not None:
            if key == "xmin":
                current[0] = _parse_number(raw, lineno)
            elif key == "xmax":
                current[1] = _parse_number(raw, lineno)
            elif key == "text":
                current[2] = _parse_string(raw, lineno)
            elif key in ("number", "mark"):
                pass  # point tier fields; tier is skipped later
            else:
                raise TextGridParseError(f"unexpected key {key!r} in interval", lineno)
            continue
        if key == "class":
            tier.cls = _parse_string(raw, lineno)
        elif key == "name":
            tier.name = _parse_string(raw, lineno)
        elif key == "xmin":
            tier.xmin = _parse_number(raw, lineno)
        elif key == "xmax":
            tier.xmax = _parse_number(raw, lineno)
        elif key in ("number", "mark"):
            pass
        else:
            raise TextGridParseError(f"unexpected key {key!r} in tier", lineno)

    for t in tiers:
        for xmin, xmax, label, lineno in t.intervals:
            if xmin is None or xmax is None or label is None:
                raise TextGridParseError("interval missing xmin, xmax or text", lineno)
    return file_xmax, tiers


def _is_word_tier(name: str) -> bool:
    name = name.strip().lower()
    return name in ("words", "word") or name.endswith("- words")


def parse_textgrid(
    data: bytes | str,
    utterance_id: str = "",
    speaker_id: str = "",
    sil_token: str = SIL,
) -> AlignedUtterance:
    """Parse a long-format TextGrid and return its word tier.

    Empty interval labels (newer MFA releases leave silences blank) are
    relabelled with ``sil_token``.
    """
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    file_xmax, tiers = _read_tiers(text)
    word_tiers = [t for t in tiers if t.cls == "IntervalTier" and _is_word_tier(t.name)]
    if not word_tiers:
        names = [t.name for t in tiers]
        raise TextGridStructureError(f"no word tier found (tiers: {names})")
    tier = word_tiers[0]
    if not tier.intervals:
        raise TextGridStructureError(f"word tier {tier.name!r} has no intervals")

    words = []
    for xmin, xmax, label, lineno in sorted(tier.intervals, key=lambda iv: iv[0]):
        label = label.strip() or sil_token
        try:
            words.append(WordInterval(label, xmin, xmax, label == sil_token))
        except ContractError as e:
            raise TextGridParseError(str(e), lineno) from None
    total = max(v for v in (file_xmax, tier.xmax, words[-1].end_s) if v is not None)
    try:
        return AlignedUtterance(utterance_id, speaker_id, tuple(words), total)
    except ContractError as e:
        raise TextGridStructureError(str(e)) from None


def read_textgrid(path, speaker_id: str | None = None, sil_token: str = SIL) -> AlignedUtterance:
    """Read a TextGrid file; ids default to the VCTK-style ``<speaker>_<n>`` stem."""
    path = Path(path)
    utt_id = path.stem
    if speaker_id is None:
        speaker_id = utt_id.split("_", 1)[0]
    return parse_textgrid(path.read_bytes(), utt_id, speaker_id, sil_token)


def _fmt(x: float) -> str:
    return format(x, ".15g")


def serialize_textgrid(utt: AlignedUtterance, tier_name: str = "words") -> str:
    """Write ``utt`` as a single-tier long-format TextGrid."""

    def q(s):
        return '"' + s.replace('"', '""') + '"'

    out = [
        'File type = "ooTextFile"',
        'Object class = "TextGrid"',
        "",
        "xmin = 0 ",
        f"xmax = {_fmt(utt.total_duration_s)} ",
        "tiers? <exists> ",
        "size = 1 ",
        "item []: ",
        "    item [1]:",
        '        class = "IntervalTier" ',
        f"        name = {q(tier_name)} ",
        "        xmin = 0 ",
        f"        xmax = {_fmt(utt.total_duration_s)} ",
        f"        intervals: size = {len(utt.words)} ",
    ]
    for i, w in enumerate(utt.words, 1):
        out += [
            f"        intervals [{i}]:",
            f"            xmin = {_fmt(w.start_s)} ",
            f"            xmax = {_fmt(w.end_s)} ",
            f"            text = {q(w.label)} ",
        ]
    return "\n".join(out) + "\n"


def utterance_to_dict(utt: AlignedUtterance) -> dict:
    return {
        "utterance_id": utt.utterance_id,
        "speaker_id": utt.speaker_id,
        "total_duration_s": round(utt.total_duration_s, 6),
        "intervals": [
            {
                "label": w.label,
                "start_s": round(w.start_s, 6),
                "end_s": round(w.end_s, 6),
                "is_sil": w.is_sil,
            }
            for w in utt.words
        ],
    }


def utterance_from_dict(d: dict) -> AlignedUtterance:
    words = tuple(
        WordInterval(iv["label"], float(iv["start_s"]), float(iv["end_s"]), bool(iv["is_sil"]))
        for iv in d["intervals"]
    )
    return AlignedUtterance(d["utterance_id"], d["speaker_id"], words, float(d["total_duration_s"]))


def utterance_to_json(utt: AlignedUtterance) -> str:
    return json.dumps(utterance_to_dict(utt), indent=2)


# ---------------------------------------------------------------------------
# Target selection


def target_from_indices(utt: AlignedUtterance, first: int, stop: int) -> MaskTarget:
    """Build a target from an explicit ``[first, stop)`` range over non-silence words."""
    content = utt.content_words
    if not 0 <= first < stop <= len(content):
        raise ContractError(
            f"word range [{first}, {stop}) outside 0..{len(content)} non-silence words"
        )
    return MaskTarget(first, stop, (content[first].start_s, content[stop - 1].end_s))


def select_target(utt: AlignedUtterance, position: Position | str, n_words: int = 1) -> MaskTarget:
    """Pick ``n_words`` consecutive non-silence words at the start, middle or end.

    The middle run is centred on word ``(k - 1) // 2`` of the ``k`` content
    words; for even ``n_words`` the extra word goes to the right.
    """
    position = Position(position)
    if n_words < 1:
        raise ContractError("n_words must be >= 1")
    k = len(utt.content_words)
    if k < n_words:
        raise SelectionError(
            f"{utt.utterance_id or 'utterance'} has {k} non-silence words, need {n_words}"
        )
    if position is Position.START:
        first = 0
    elif position is Position.END:
        first = k - n_words
    else:
        first = (k - 1) // 2 - (n_words - 1) // 2
        first = min(max(first, 0), k - n_words)
    return target_from_indices(utt, first, first + n_words)


def masked_reference(transcript: Sequence[str], target: MaskTarget) -> list[str]:
    """Drop the targeted tokens from a transcript aligned 1:1 with content words."""
    if target.stop > len(transcript):
        raise ContractError(
            f"target range [{target.first}, {target.stop}) exceeds transcript of "
            f"{len(transcript)} tokens"
        )
    return list(transcript[: target.first]) + list(transcript[target.stop :])


def transcript_tokens(utt: AlignedUtterance) -> list[str]:
    """Word labels of the non-silence intervals."""
    return [w.label for w in utt.content_words]


def iter_textgrids(directory, sil_token: str = SIL) -> Iterable[AlignedUtterance]:
    for path in sorted(Path(directory).glob("*.TextGrid")):
        yield read_textgrid(path, sil_token=sil_token)
