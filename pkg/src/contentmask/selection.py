"""Corpus filtering by word count, speaking rate and code-sequence length."""
from __future__ import annotations

import csv
import io
from collections import defaultdict
from dataclasses import dataclass
from enum import Enum
from typing import Iterable

from .alignment import AlignedUtterance
from .errors import ContractError
from .masker import CodeSequence

CSV_FIELDS = ["utterance_id", "speaker_id", "n_words", "duration_s", "rate_wps", "n_codes"]


class DurationMode(str, Enum):
    TOTAL = "total"  # full audio length, leading/trailing silence included
    SPEECH = "speech"  # first word start to last word end


@dataclass(frozen=True)
class UtteranceStats:
    utterance_id: str
    speaker_id: str
    n_words_nonsil: int
    duration_s: float
    speaking_rate_wps: float
    n_codes: int | None = None


@dataclass(frozen=True)
class Criteria:
    max_rate_wps: float = 5.0  # strict <
    min_codes: int = 300  # strict >
    min_words: int = 7  # >=
    per_speaker_rate: bool = False

    def __post_init__(self):
        if self.max_rate_wps <= 0 or self.min_codes < 0 or self.min_words < 1:
            raise ContractError("selection thresholds must be positive")


def compute_stats(
    utt: AlignedUtterance,
    codes: CodeSequence | None = None,
    duration_mode: DurationMode | str = DurationMode.TOTAL,
) -> UtteranceStats:
    if not utt.words:
        raise ContractError("utterance has no intervals")
    n_words = len(utt.content_words)
    if DurationMode(duration_mode) is DurationMode.SPEECH and n_words:
        start, end = utt.speech_bounds()
        duration = end - start
    else:
        duration = utt.total_duration_s
    if not duration > 0:
        raise ContractError(f"{utt.utterance_id}: zero duration")
    return UtteranceStats(
        utt.utterance_id,
        utt.speaker_id,
        n_words,
        duration,
        n_words / duration,
        None if codes is None else len(codes),
    )


def speaker_average_rates(stats: Iterable[UtteranceStats]) -> dict[str, float]:
    """Mean per-utterance speaking rate for each speaker."""
    acc = defaultdict(list)
    for s in stats:
        acc[s.speaker_id].append(s.speaking_rate_wps)
    return {spk: sum(v) / len(v) for spk, v in acc.items()}


def filter_eligible(stats: list[UtteranceStats], criteria: Criteria = Criteria()) -> list[UtteranceStats]:
    """Keep utterances with rate < max, codes > min and words >= min.

    With ``criteria.per_speaker_rate`` the rate test applies to the speaker's
    average rate instead of each utterance's own. Utterances without a code
    count fail the code-length test.
    """
    rates = speaker_average_rates(stats) if criteria.per_speaker_rate else None
    seen = set()
    kept = []
    for s in stats:
        if s.utterance_id in seen:
            continue
        seen.add(s.utterance_id)
        rate = rates[s.speaker_id] if rates is not None else s.speaking_rate_wps
        if (
            rate < criteria.max_rate_wps
            and s.n_codes is not None
            and s.n_codes > criteria.min_codes
            and s.n_words_nonsil >= criteria.min_words
        ):
            kept.append(s)
    return kept


def stats_to_csv(stats: Iterable[UtteranceStats]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for s in stats:
        w.writerow([
            s.utterance_id,
            s.speaker_id,
            s.n_words_nonsil,
            f"{s.duration_s:.6f}",
            f"{s.speaking_rate_wps:.6f}",
            "" if s.n_codes is None else s.n_codes,
        ])
    return buf.getvalue()


def stats_from_csv(text: str) -> list[UtteranceStats]:
    out = []
    for row in csv.DictReader(io.StringIO(text)):
        out.append(UtteranceStats(
            row["utterance_id"],
            row["speaker_id"],
            int(row["n_words"]),
            float(row["duration_s"]),
            float(row["rate_wps"]),
            int(row["n_codes"]) if row["n_codes"] else None,
        ))
    return out

