"""ASR scoring: WER with failure filtering, paired t-test and log-domain KDE."""
from __future__ import annotations

import csv
import io
import json
import math
import re
import unicodedata
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from numba import njit
from scipy.integrate import trapezoid
from scipy.special import betainc

from .errors import ContractError

MAX_EXTRA_CHARS = 30
ALPHA = 0.05
KDE_GRID_SIZE = 512
# log-domain bandwidth used when every value is identical (Silverman gives 0)
DEGENERATE_LOG_BANDWIDTH = 0.05

PAIR_CSV_FIELDS = [
    "utterance_id", "n_ref", "substitutions", "deletions", "insertions",
    "wer", "ref_chars", "hyp_chars", "filtered",
]


# ---------------------------------------------------------------------------
# Normalization

_PUNCT_EDGE = re.compile(r"^'+|'+$")


def normalize_text(text: str, lowercase: bool = True, strip_punct: bool = True) -> list[str]:
    """Tokenize a transcript: lowercase, drop punctuation, split on whitespace.

    Apostrophes inside words survive ("don't"); everything else in the
    Unicode P* categories becomes a space.
    """
    if lowercase:
        text = text.lower()
    if strip_punct:
        text = "".join(
            " " if unicodedata.category(ch).startswith("P") and ch != "'" else ch for ch in text
        )
        tokens = [_PUNCT_EDGE.sub("", t) for t in text.split()]
        return [t for t in tokens if t]
    return text.split()


@dataclass(frozen=True)
class TranscriptPair:
    utterance_id: str
    reference: tuple[str, ...]
    hypothesis: tuple[str, ...]
    raw_reference_chars: int
    raw_hypothesis_chars: int

    @classmethod
    def from_strings(cls, utterance_id: str, reference: str, hypothesis: str, **norm) -> "TranscriptPair":
        # character counts are taken before normalization, whitespace included
        return cls(
            utterance_id,
            tuple(normalize_text(reference, **norm)),
            tuple(normalize_text(hypothesis, **norm)),
            len(reference),
            len(hypothesis),
        )


# ---------------------------------------------------------------------------
# Edit distance


@njit(cache=True)
def _edit_ops(ref, hyp):
    n = ref.shape[0]
    m = hyp.shape[0]
    d = np.empty((n + 1, m + 1), np.int64)
    for i in range(n + 1):
        d[i, 0] = i
    for j in range(m + 1):
        d[0, j] = j
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            best = d[i - 1, j - 1] + (ref[i - 1] != hyp[j - 1])
            ins = d[i, j - 1] + 1
            if ins < best:
                best = ins
            dele = d[i - 1, j] + 1
            if dele < best:
                best = dele
            d[i, j] = best
    # backtrace: substitution/match, then insertion, then deletion
    i = n
    j = m
    subs = 0
    dels = 0
    inss = 0
    while i > 0 or j > 0:
        if i > 0 and j > 0 and d[i, j] == d[i - 1, j - 1] + (ref[i - 1] != hyp[j - 1]):
            if ref[i - 1] != hyp[j - 1]:
                subs += 1
            i -= 1
            j -= 1
        elif j > 0 and d[i, j] == d[i, j - 1] + 1:
            inss += 1
            j -= 1
        else:
            dels += 1
            i -= 1
    return subs, dels, inss


def edit_ops(ref: Sequence[str], hyp: Sequence[str]) -> tuple[int, int, int]:
    """(substitutions, deletions, insertions) of a minimal unit-cost alignment."""
    vocab: dict = {}
    r = np.array([vocab.setdefault(t, len(vocab)) for t in ref], dtype=np.int64)
    h = np.array([vocab.setdefault(t, len(vocab)) for t in hyp], dtype=np.int64)
    s, d, i = _edit_ops(r, h)
    return int(s), int(d), int(i)


def edit_distance(ref: Sequence[str], hyp: Sequence[str]) -> int:
    return sum(edit_ops(ref, hyp))


# ---------------------------------------------------------------------------
# WER


@dataclass(frozen=True)
class WerResult:
    utterance_id: str
    substitutions: int
    deletions: int
    insertions: int
    n_ref: int
    wer: float
    filtered: bool = False
    ref_chars: int = 0
    hyp_chars: int = 0

    @property
    def errors(self) -> int:
        return self.substitutions + self.deletions + self.insertions


def failure_filter(pair: TranscriptPair, max_extra_chars: int = MAX_EXTRA_CHARS) -> bool:
    """True when the hypothesis runs away: more than ``max_extra_chars`` longer than the reference."""
    return pair.raw_hypothesis_chars - pair.raw_reference_chars > max_extra_chars


def wer(pair: TranscriptPair, max_extra_chars: int = MAX_EXTRA_CHARS) -> WerResult:
    n_ref = len(pair.reference)
    if n_ref == 0:
        raise ContractError(f"{pair.utterance_id}: empty reference")
    s, d, i = edit_ops(pair.reference, pair.hypothesis)
    return WerResult(
        pair.utterance_id, s, d, i, n_ref, (s + d + i) / n_ref,
        failure_filter(pair, max_extra_chars),
        pair.raw_reference_chars, pair.raw_hypothesis_chars,
    )


def mean_wer(results: Iterable[WerResult]) -> tuple[float | None, int, int]:
    """Mean per-utterance WER over unfiltered results: (mean or None, n_used, n_excluded)."""
    kept = []
    excluded = 0
    for r in results:
        if r.filtered:
            excluded += 1
        else:
            kept.append(r.wer)
    return (sum(kept) / len(kept) if kept else None), len(kept), excluded


def read_transcripts_jsonl(text: str, **norm) -> list[TranscriptPair]:
    pairs = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            d = json.loads(line)
            pairs.append(TranscriptPair.from_strings(
                str(d["utterance_id"]), d["reference"], d["hypothesis"], **norm
            ))
        except (json.JSONDecodeError, KeyError, TypeError) as e:
            raise ContractError(f"transcripts line {lineno}: {e}") from None
    return pairs


def results_to_csv(results: Iterable[WerResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(PAIR_CSV_FIELDS)
    for r in results:
        w.writerow([
            r.utterance_id, r.n_ref, r.substitutions, r.deletions, r.insertions,
            f"{r.wer:.6f}", r.ref_chars, r.hyp_chars, int(r.filtered),
        ])
    return buf.getvalue()


def results_from_csv(text: str) -> list[WerResult]:
    out = []
    for row in csv.DictReader(io.StringIO(text)):
        out.append(WerResult(
            row["utterance_id"], int(row["substitutions"]), int(row["deletions"]),
            int(row["insertions"]), int(row["n_ref"]), float(row["wer"]),
            row["filtered"] in ("1", "true", "True"),
            int(row["ref_chars"]), int(row["hyp_chars"]),
        ))
    return out


# ---------------------------------------------------------------------------
# Paired t-test


@dataclass(frozen=True)
class PairedTestResult:
    t_statistic: float
    dof: int
    p_value: float
    significant: bool
    n_pairs: int
    mean_difference: float


def paired_t_test(a: Sequence[float], b: Sequence[float], alpha: float = ALPHA) -> PairedTestResult:
    """Two-sided paired t-test on ``a - b``.

    Zero variance with zero mean difference reports t = 0, p = 1; zero
    variance with a nonzero mean reports an infinite t and p = 0.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ContractError("paired samples must be 1-D and of equal length")
    n = a.shape[0]
    if n < 2:
        raise ContractError("paired t-test needs at least two pairs")
    d = a - b
    mean = float(d.mean())
    sd = float(d.std(ddof=1))
    dof = n - 1
    if sd == 0.0:
        if mean == 0.0:
            return PairedTestResult(0.0, dof, 1.0, False, n, 0.0)
        return PairedTestResult(math.copysign(math.inf, mean), dof, 0.0, True, n, mean)
    t = mean / (sd / math.sqrt(n))
    # two-sided tail of Student's t via the regularized incomplete beta
    p = float(betainc(dof / 2.0, 0.5, dof / (dof + t * t)))
    p = min(max(p, 0.0), 1.0)
    return PairedTestResult(t, dof, p, p < alpha, n, mean)


def paired_by_utterance(
    a: Iterable[WerResult], b: Iterable[WerResult]
) -> tuple[list[str], list[float], list[float]]:
    """Align two result sets on utterance id, dropping ids filtered or missing in either."""
    bmap = {r.utterance_id: r for r in b}
    ids, xa, xb = [], [], []
    for r in sorted(a, key=lambda r: r.utterance_id):
        other = bmap.get(r.utterance_id)
        if other is None or r.filtered or other.filtered:
            continue
        ids.append(r.utterance_id)
        xa.append(r.wer)
        xb.append(other.wer)
    return ids, xa, xb


# ---------------------------------------------------------------------------
# KDE


@dataclass(frozen=True, eq=False)
class KdeCurve:
    grid: np.ndarray
    density: np.ndarray
    bandwidth: float  # in log-WER units
    zero_fraction: float  # share of inputs <= 0, left out of the log-domain fit
    n_values: int

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# bandwidth={self.bandwidth:.9g} zero_fraction={self.zero_fraction:.6f} n={self.n_values}\n")
        buf.write("grid,density\n")
        for g, f in zip(self.grid, self.density):
            buf.write(f"{g:.9g},{f:.9g}\n")
        return buf.getvalue()


def silverman_bandwidth(y: np.ndarray) -> float:
    sd = float(np.std(y, ddof=1))
    q75, q25 = np.percentile(y, [75, 25])
    spread = min(sd, float(q75 - q25) / 1.34)
    if spread == 0.0:
        spread = sd
    if spread == 0.0:
        return DEGENERATE_LOG_BANDWIDTH
    return 0.9 * spread * len(y) ** -0.2


def kde_log_wer(values: Sequence[float], grid_size: int = KDE_GRID_SIZE) -> KdeCurve:
    """Gaussian KDE of log(WER), mapped back to WER with f(w) = g(log w) / w.

    The grid is log-spaced over [min / 2, 2 * max] of the positive values and
    the mapped curve is renormalized to unit trapezoidal area on that grid.
    """
    x = np.asarray(values, dtype=np.float64)
    if x.ndim != 1 or not np.all(np.isfinite(x)):
        raise ContractError("KDE input must be a finite 1-D sequence")
    pos = x[x > 0]
    if pos.size < 2:
        raise ContractError(f"KDE needs at least 2 positive values, got {pos.size}")
    if grid_size < 2:
        raise ContractError("grid_size must be >= 2")
    y = np.sort(np.log(pos))
    h = silverman_bandwidth(y)
    grid = np.geomspace(pos.min() / 2.0, pos.max() * 2.0, grid_size)
    z = (np.log(grid)[:, None] - y[None, :]) / h
    f_log = np.exp(-0.5 * z * z).sum(axis=1) / (y.size * h * math.sqrt(2.0 * math.pi))
    density = f_log / grid
    area = trapezoid(density, grid)
    if area > 0:
        density = density / area
    return KdeCurve(grid, density, h, float((x <= 0).sum()) / x.size, int(x.size))
