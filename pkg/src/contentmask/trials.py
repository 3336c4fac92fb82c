"""Speaker-verification trials: enumeration, cosine scoring and EER."""
from __future__ import annotations

import csv
import io
import itertools
import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ContractError


@dataclass(frozen=True, eq=False)
class Embedding:
    utterance_id: str
    speaker_id: str
    vector: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vector, dtype=np.float64)
        if v.ndim != 1 or v.size == 0:
            raise ContractError(f"{self.utterance_id}: embedding must be a non-empty vector")
        if not np.all(np.isfinite(v)):
            raise ContractError(f"{self.utterance_id}: embedding has non-finite entries")
        if not np.any(v):
            raise ContractError(f"{self.utterance_id}: zero-norm embedding")
        object.__setattr__(self, "vector", v)


@dataclass(frozen=True)
class Trial:
    enroll_id: str
    test_id: str
    is_target: bool

    def __post_init__(self):
        if self.enroll_id == self.test_id:
            raise ContractError(f"trial compares {self.enroll_id} with itself")


@dataclass(frozen=True)
class EerResult:
    eer: float
    threshold: float
    n_target: int
    n_nontarget: int

    def to_json(self) -> str:
        return json.dumps(
            {"eer": self.eer, "threshold": self.threshold,
             "n_target": self.n_target, "n_nontarget": self.n_nontarget},
            indent=2, sort_keys=True,
        ) + "\n"


def enumerate_trials(utterances: Sequence[Embedding], ordered: bool = False) -> list[Trial]:
    """Every pair of distinct utterances, labelled target when the speakers match.

    By default each unordered pair appears once, with the lexicographically
    smaller id as enrollment: n(n-1)/2 trials. ``ordered=True`` emits both
    directions, n(n-1) trials, for cross-set protocols where the enrollment
    side (clean) and test side (masked) of a pair are different recordings.
    """
    ids = [u.utterance_id for u in utterances]
    if len(set(ids)) != len(ids):
        dup = sorted({i for i in ids if ids.count(i) > 1})
        raise ContractError(f"duplicate utterance ids: {dup}")
    if len(ids) < 2:
        raise ContractError("need at least two utterances")
    speaker = {u.utterance_id: u.speaker_id for u in utterances}
    order = sorted(ids)
    pairs = itertools.permutations(order, 2) if ordered else itertools.combinations(order, 2)
    return [Trial(e, t, speaker[e] == speaker[t]) for e, t in pairs]


def cosine_score(a: Embedding, b: Embedding) -> float:
    if a.vector.shape != b.vector.shape:
        raise ContractError(
            f"embedding dimension mismatch: {a.vector.shape[0]} vs {b.vector.shape[0]}"
        )
    s = float(a.vector @ b.vector / (np.linalg.norm(a.vector) * np.linalg.norm(b.vector)))
    return min(1.0, max(-1.0, s))


def score_trials(
    trials: Iterable[Trial], enroll: dict[str, Embedding], test: dict[str, Embedding]
) -> list[tuple[Trial, float]]:
    out = []
    for tr in trials:
        try:
            e, t = enroll[tr.enroll_id], test[tr.test_id]
        except KeyError as err:
            raise ContractError(f"no embedding for utterance {err}") from None
        out.append((tr, cosine_score(e, t)))
    return out


def eer(scores: Sequence[tuple[float, bool]]) -> EerResult:
    """Equal error rate from (score, is_target) pairs.

    Thresholds are swept over the midpoints between consecutive distinct
    scores (plus one below the minimum and one above the maximum). With
    FRR(t) = share of targets below t and FAR(t) = share of non-targets at or
    above t, the EER is where the linear interpolation between the two
    bracketing thresholds makes FRR equal FAR.
    """
    s = np.asarray([float(x) for x, _ in scores], dtype=np.float64)
    lab = np.asarray([bool(y) for _, y in scores], dtype=bool)
    n_t = int(lab.sum())
    n_n = int(lab.size - n_t)
    if n_t == 0 or n_n == 0:
        raise ContractError("EER needs both target and non-target scores")
    if not np.all(np.isfinite(s)):
        raise ContractError("scores must be finite")

    uniq, inv = np.unique(s, return_inverse=True)
    tgt_at = np.bincount(inv[lab], minlength=uniq.size)
    non_at = np.bincount(inv[~lab], minlength=uniq.size)
    # state k: threshold between uniq[k-1] and uniq[k]
    frr = np.concatenate([[0], np.cumsum(tgt_at)]) / n_t
    far = 1.0 - np.concatenate([[0], np.cumsum(non_at)]) / n_n
    step = float(np.diff(uniq).min()) if uniq.size > 1 else 1.0
    thr = np.concatenate([[uniq[0] - step], (uniq[:-1] + uniq[1:]) / 2, [uniq[-1] + step]])

    diff = frr - far  # -1 at k=0, +1 at the last state, non-decreasing
    k = int(np.argmax(diff >= 0))
    if diff[k] == 0:
        return EerResult(float(frr[k]), float(thr[k]), n_t, n_n)
    lo = k - 1
    w = -diff[lo] / (diff[k] - diff[lo])
    rate = frr[lo] + w * (frr[k] - frr[lo])
    return EerResult(float(rate), float(thr[lo] + w * (thr[k] - thr[lo])), n_t, n_n)


# ---------------------------------------------------------------------------
# File formats


def read_embeddings_jsonl(text: str) -> list[Embedding]:
    out = []
    dim = None
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            d = json.loads(line)
            e = Embedding(str(d["utterance_id"]), str(d["speaker_id"]), d["vector"])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as err:
            raise ContractError(f"embeddings line {lineno}: {err}") from None
        if dim is None:
            dim = e.vector.size
        elif e.vector.size != dim:
            raise ContractError(f"embeddings line {lineno}: dimension {e.vector.size} != {dim}")
        out.append(e)
    return out


def embeddings_to_jsonl(embs: Iterable[Embedding]) -> str:
    return "".join(
        json.dumps({"utterance_id": e.utterance_id, "speaker_id": e.speaker_id,
                    "vector": [round(float(v), 8) for v in e.vector]}) + "\n"
        for e in embs
    )


def trials_to_csv(trials: Iterable[Trial]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["enroll_id", "test_id", "label"])
    for t in trials:
        w.writerow([t.enroll_id, t.test_id, int(t.is_target)])
    return buf.getvalue()


def trials_from_csv(text: str) -> list[Trial]:
    return [
        Trial(r["enroll_id"], r["test_id"], r["label"] in ("1", "target", "true", "True"))
        for r in csv.DictReader(io.StringIO(text))
    ]


def scores_to_csv(scored: Iterable[tuple[Trial, float]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["enroll_id", "test_id", "label", "score"])
    for t, s in scored:
        w.writerow([t.enroll_id, t.test_id, int(t.is_target), f"{s:.9f}"])
    return buf.getvalue()


def scores_from_csv(text: str) -> list[tuple[float, bool]]:
    return [
        (float(r["score"]), r["label"] in ("1", "target", "true", "True"))
        for r in csv.DictReader(io.StringIO(text))
    ]
