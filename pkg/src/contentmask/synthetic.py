"""Synthetic desk-scale corpus and stand-ins for the external neural stages.

Nothing here models real ASR or speaker-embedding behaviour. The generated
tones, TextGrids and random code sequences exercise the masking grid, and
the simulated transcripts and embeddings exercise scoring and reporting, so
the whole pipeline can run end to end without Whisper, ECAPA or a vocoder.
"""
from __future__ import annotations

import json
import zlib
from pathlib import Path

import numpy as np

from . import alignment, audio, pipeline, reports
from .alignment import AlignedUtterance, Position, WordInterval
from .fileio import atomic_write, derive_seed
from .masker import CodeSequence, MaskType
from .trials import Embedding, embeddings_to_jsonl

SAMPLE_RATE_HZ = 16000
CODEBOOK_SIZE = 256
EMBEDDING_DIM = 32

VOCAB = (
    "please call stella ask her to bring these things with from the store six "
    "spoons of fresh snow peas five thick slabs blue cheese and maybe snack for "
    "brother bob we also need small plastic snake big toy frog kids she can scoop "
    "into three red bags will go meet wednesday at train station"
).split()

# per-token error probabilities of the simulated recognisers
_COND_ERR = {"original": 0.03, "vqvae": 0.25}
_TYPE_ERR = {None: 0.0, MaskType.NOISE: 0.05, MaskType.DELETE: 0.03, MaskType.REVERSE: 0.12}
_POS_ERR = {None: 0.0, Position.START: 0.0, Position.MIDDLE: 0.04, Position.END: -0.01}
SYSTEMS = {"sim-small": 1.6, "sim-large": 1.0}

# embedding noise scales of the simulated speaker encoder
_COND_SIGMA = {"original": 0.15, "vqvae": 0.9}
_TYPE_SIGMA = {None: 0.0, MaskType.NOISE: 0.2, MaskType.DELETE: 0.1, MaskType.REVERSE: 0.25}
_POS_SIGMA = {None: 0.0, Position.START: 0.0, Position.MIDDLE: 0.1, Position.END: 0.0}


def _word_tone(word: str, f0: float, n: int, rate: int) -> np.ndarray:
    t = np.arange(n) / rate
    ratio = 1.0 + (zlib.crc32(word.encode()) % 7) * 0.2
    x = np.sin(2 * np.pi * f0 * ratio * t) + 0.4 * np.sin(4 * np.pi * f0 * ratio * t)
    return 0.2 * x * np.hanning(n)


def make_utterance(uid: str, speaker: str, f0: float, n_words: int, rng) -> tuple[AlignedUtterance, np.ndarray]:
    rate = SAMPLE_RATE_HZ
    words, chunks = [], []
    t = 0

    def add(label, dur_s):
        nonlocal t
        n = int(round(dur_s * rate))
        if label == alignment.SIL:
            chunks.append(rng.normal(0.0, 1e-3, n))
        else:
            chunks.append(_word_tone(label, f0, n, rate))
        words.append(WordInterval(label, t / rate, (t + n) / rate, label == alignment.SIL))
        t += n

    add(alignment.SIL, rng.uniform(0.15, 0.35))
    for k in range(n_words):
        add(str(rng.choice(VOCAB)), rng.uniform(0.28, 0.45))
        if k < n_words - 1 and rng.random() < 0.3:
            add(alignment.SIL, rng.uniform(0.08, 0.2))
    add(alignment.SIL, rng.uniform(0.2, 0.4))
    samples = np.clip(np.concatenate(chunks), -1.0, 1.0)
    return AlignedUtterance(uid, speaker, tuple(words), t / rate), samples


def make_corpus(out_dir, seed: int = 0, n_speakers: int = 9, utts_per_speaker: int = 4) -> Path:
    """Write ``audio/``, ``textgrids/``, ``codes/`` and ``noise_codes.json`` under ``out_dir``.

    Every speaker gets ``utts_per_speaker`` eligible utterances of 7-10 words;
    the first speaker also gets one 6-word utterance that selection drops.
    """
    out = Path(out_dir)
    rng = np.random.default_rng(derive_seed(seed, "corpus"))
    for s in range(n_speakers):
        spk = f"s{s + 1:02d}"
        f0 = rng.uniform(100, 250)
        plan = [int(rng.integers(7, 11)) for _ in range(utts_per_speaker)]
        if s == 0:
            plan.append(6)
        for k, n_words in enumerate(plan, 1):
            uid = f"{spk}_{k:03d}"
            utt, samples = make_utterance(uid, spk, f0, n_words, rng)
            atomic_write(out / "textgrids" / f"{uid}.TextGrid", alignment.serialize_textgrid(utt))
            atomic_write(out / "audio" / f"{uid}.wav", audio.write_wav(audio.Waveform(samples, SAMPLE_RATE_HZ)))
            n_codes = int(round(utt.total_duration_s * 250.0))
            codes = CodeSequence(rng.integers(0, CODEBOOK_SIZE, n_codes), CODEBOOK_SIZE)
            atomic_write(out / "codes" / f"{uid}.json", codes.to_json())
    noise_codes = CodeSequence(rng.integers(0, CODEBOOK_SIZE, 500), CODEBOOK_SIZE)
    atomic_write(out / "noise_codes.json", noise_codes.to_json())
    return out


def simulate_hypothesis(reference: list[str], error_rate: float, runaway_p: float, rng) -> str:
    """Corrupt a reference with random substitutions, deletions and insertions.

    With probability ``runaway_p`` a word is repeated six times at the end,
    mimicking the looping failures that the length filter targets.
    """
    out = []
    for tok in reference:
        u = rng.random()
        if u < error_rate / 3:
            out.append(str(rng.choice(VOCAB)))
        elif u < 2 * error_rate / 3:
            continue
        elif u < error_rate:
            out.extend([tok, str(rng.choice(VOCAB))])
        else:
            out.append(tok)
    if rng.random() < runaway_p:
        out.extend([str(rng.choice(VOCAB))] * 6)
    return " ".join(out)


def _read_refs(path: Path) -> list[dict]:
    return [json.loads(line) for line in path.read_text().splitlines() if line.strip()]


def simulate_asr(run_dir, external_dir, seed: int, grid_cells) -> None:
    """Write ``asr/{system}/{condition}/...jsonl`` transcripts for every cell."""
    run_dir, external_dir = Path(run_dir), Path(external_dir)
    unmasked = _read_refs(run_dir / "references" / "unmasked.jsonl")
    for system, scale in SYSTEMS.items():
        for domain, cond in reports.CONDITION_FOR_DOMAIN.items():
            cells = [(None, None, unmasked, Path(cond) / "none.jsonl")]
            for mt, pos in grid_cells:
                refs = _read_refs(run_dir / "masked" / pipeline.cell_dir(Path(), domain, mt, pos) / "references.jsonl")
                cells.append((mt, pos, refs, Path(cond) / mt.value / f"{pos.value}.jsonl"))
            for mt, pos, refs, rel in cells:
                err = min(0.9, max(0.0, scale * (_COND_ERR[cond] + _TYPE_ERR[mt] + _POS_ERR[pos])))
                runaway = 0.06 if mt in (MaskType.NOISE, MaskType.REVERSE) else 0.01
                lines = []
                for r in refs:
                    rng = np.random.default_rng(derive_seed(seed, "asr", system, str(rel), r["utterance_id"]))
                    hyp = simulate_hypothesis(r["reference"].split(), err, runaway, rng)
                    lines.append(json.dumps({"utterance_id": r["utterance_id"],
                                             "reference": r["reference"], "hypothesis": hyp}) + "\n")
                atomic_write(external_dir / "asr" / system / rel, "".join(lines))


def simulate_embeddings(run_dir, external_dir, seed: int, grid_cells) -> None:
    """Write clean enrollment embeddings and per-cell test embeddings."""
    run_dir, external_dir = Path(run_dir), Path(external_dir)
    ids = [r["utterance_id"] for r in _read_refs(run_dir / "references" / "unmasked.jsonl")]
    speakers = sorted({u.split("_", 1)[0] for u in ids})
    centroid = {
        s: np.random.default_rng(derive_seed(seed, "spk", s)).normal(0.0, 0.5, EMBEDDING_DIM)
        for s in speakers
    }
    session = {
        u: np.random.default_rng(derive_seed(seed, "utt", u)).normal(0.0, 0.3, EMBEDDING_DIM)
        for u in ids
    }

    def emb_set(label, sigma):
        out = []
        for u in ids:
            spk = u.split("_", 1)[0]
            rng = np.random.default_rng(derive_seed(seed, "emb", label, u))
            out.append(Embedding(u, spk, centroid[spk] + session[u] + rng.normal(0.0, sigma, EMBEDDING_DIM)))
        return out

    emb_dir = external_dir / "embeddings"
    atomic_write(emb_dir / "enroll.jsonl", embeddings_to_jsonl(emb_set("enroll", 0.05)))
    for domain, cond in reports.CONDITION_FOR_DOMAIN.items():
        cells = [(None, None, Path(cond) / "none.jsonl")]
        cells += [(mt, pos, Path(cond) / mt.value / f"{pos.value}.jsonl") for mt, pos in grid_cells]
        for mt, pos, rel in cells:
            sigma = _COND_SIGMA[cond] + _TYPE_SIGMA[mt] + _POS_SIGMA[pos]
            atomic_write(emb_dir / rel, embeddings_to_jsonl(emb_set(str(rel), sigma)))


def run_demo(out_dir, seed: int = 0, kde_system: str = "sim-large") -> dict:
    """Synthetic corpus -> full mask grid -> simulated ASR/ASV -> tables and KDE plots."""
    out = Path(out_dir)
    corpus = make_corpus(out / "corpus", seed)
    cfg = pipeline.ExperimentConfig(
        textgrid_dir=corpus / "textgrids",
        audio_dir=corpus / "audio",
        codes_dir=corpus / "codes",
        noise_codes=corpus / "noise_codes.json",
        output_dir=out / "run",
        seed=seed,
    )
    grid = pipeline.run_mask_grid(cfg)
    cells = [(mt, pos) for mt in cfg.mask_types for pos in cfg.positions]
    external = out / "external"
    simulate_asr(cfg.output_dir, external, seed, cells)
    simulate_embeddings(cfg.output_dir, external, seed, cells)

    results = out / "results"
    for path in sorted((external / "asr").rglob("*.jsonl")):
        rel = path.relative_to(external / "asr").with_suffix(".csv")
        pipeline.eval_wer_file(path, results / "wer" / rel)
    emb = external / "embeddings"
    for path in sorted(emb.rglob("*.jsonl")):
        if path.name == "enroll.jsonl":
            continue
        rel = path.relative_to(emb).with_suffix(".csv")
        pipeline.eval_asv_files(emb / "enroll.jsonl", path, results / "scores" / rel,
                                eer_out=(results / "eer" / rel).with_suffix(".json"))

    report_dir = out / "reports"
    tables = pipeline.write_reports(results, report_dir)
    for domain, cond in reports.CONDITION_FOR_DOMAIN.items():
        inputs = {
            f"{mt.value}/{pos.value}": results / "wer" / kde_system / cond / mt.value / f"{pos.value}.csv"
            for mt, pos in cells
        }
        pipeline.write_kde(inputs, report_dir / f"kde_{cond}.svg", report_dir / f"kde_{cond}",
                           title=f"{kde_system}, {cond} speech, masked")
    return {"grid": grid, "tables": tables}
