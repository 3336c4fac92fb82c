"""Experiment configuration and the mask-grid driver."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from . import alignment, audio, masker, metrics, noise, reports, selection
from . import trials as trials_mod
from .alignment import AlignedUtterance, Position
from .errors import ConfigError, ContentMaskError
from .fileio import atomic_write, derive_seed
from .masker import CodeSequence, Domain, MaskSpec, MaskType
from .metrics import normalize_text

log = logging.getLogger(__name__)

MASKER_SYNTH_DURATION_S = 10.0


@dataclass
class ExperimentConfig:
    textgrid_dir: Path | None = None
    audio_dir: Path | None = None
    codes_dir: Path | None = None
    transcripts: Path | None = None  # JSONL {utterance_id, text}; default: TextGrid labels
    noise_codes: Path | None = None
    masker_file: Path | None = None
    masker_seed: int | None = None
    output_dir: Path = Path("out")
    seed: int = 0
    mask_types: list[MaskType] = field(default_factory=lambda: list(MaskType))
    positions: list[Position] = field(default_factory=lambda: list(Position))
    domains: list[Domain] = field(default_factory=lambda: list(Domain))
    n_words: int = 1
    rms_match: bool = True
    random_noise_offset: bool = False
    sil_token: str = alignment.SIL
    code_rate_hz: float = masker.DEFAULT_CODE_RATE_HZ
    apply_selection: bool = True
    max_rate_wps: float = 5.0
    min_codes: int = 300
    min_words: int = 7
    per_speaker_rate: bool = False
    duration_mode: selection.DurationMode = selection.DurationMode.TOTAL

    def validate(self) -> "ExperimentConfig":
        if self.textgrid_dir is None:
            raise ConfigError("textgrid_dir is required")
        if not (self.mask_types and self.positions and self.domains):
            raise ConfigError("mask grid is empty")
        if Domain.WAVE in self.domains and self.audio_dir is None:
            raise ConfigError("wave domain needs audio_dir")
        if Domain.CODES in self.domains and self.codes_dir is None:
            raise ConfigError("codes domain needs codes_dir")
        if Domain.CODES in self.domains and MaskType.NOISE in self.mask_types and self.noise_codes is None:
            raise ConfigError("code-domain noise masks need noise_codes")
        for name in ("textgrid_dir", "audio_dir", "codes_dir", "transcripts", "noise_codes", "masker_file"):
            p = getattr(self, name)
            if p is not None and not Path(p).exists():
                raise ConfigError(f"{name}: {p} does not exist")
        if self.n_words < 1:
            raise ConfigError("n_words must be >= 1")
        return self

    @property
    def criteria(self) -> selection.Criteria:
        return selection.Criteria(self.max_rate_wps, self.min_codes, self.min_words, self.per_speaker_rate)


_PATH_KEYS = {"textgrid_dir", "audio_dir", "codes_dir", "transcripts", "noise_codes", "masker_file", "output_dir"}
_LIST_KEYS = {"mask_types": MaskType, "positions": Position, "domains": Domain}


def _coerce(key: str, value):
    if value is None:
        return None
    if key in _PATH_KEYS:
        return Path(value)
    if key in _LIST_KEYS:
        if isinstance(value, str):
            value = [v.strip() for v in value.split(",") if v.strip()]
        try:
            return [_LIST_KEYS[key](v) for v in value]
        except ValueError as e:
            raise ConfigError(f"{key}: {e}") from None
    if key == "duration_mode":
        return selection.DurationMode(value)
    if key in ("rms_match", "random_noise_offset", "apply_selection", "per_speaker_rate"):
        if isinstance(value, str):
            return value.lower() in ("1", "true", "yes", "on")
        return bool(value)
    if key in ("seed", "masker_seed", "n_words", "min_codes", "min_words"):
        return int(value)
    if key in ("code_rate_hz", "max_rate_wps"):
        return float(value)
    return value


def parse_config_text(text: str) -> dict:
    """Parse ``key = value`` lines (``#`` comments, optional quotes, JSON lists)."""
    known = {f.name for f in fields(ExperimentConfig)}
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line or (line.startswith("[") and line.endswith("]")):
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in known:
            raise ConfigError(f"config line {lineno}: unknown key {key!r}")
        try:
            value = json.loads(value)
        except json.JSONDecodeError:
            pass  # bare word
        try:
            out[key] = _coerce(key, value)
        except (ValueError, TypeError) as e:
            raise ConfigError(f"config line {lineno}: {key}: {e}") from None
    return out


def build_config(config_file=None, **overrides) -> ExperimentConfig:
    """Config file values, then non-None ``overrides`` on top."""
    values = parse_config_text(Path(config_file).read_text()) if config_file else {}
    for key, value in overrides.items():
        if value is not None:
            try:
                values[key] = _coerce(key, value)
            except (ValueError, TypeError) as e:
                raise ConfigError(f"{key}: {e}") from None
    return replace(ExperimentConfig(), **values)


# ---------------------------------------------------------------------------
# Corpus loading


@dataclass
class Corpus:
    utterances: dict[str, AlignedUtterance]
    transcripts: dict[str, list[str]]
    codes: dict[str, CodeSequence]


def _read_transcripts(path: Path) -> dict[str, list[str]]:
    out = {}
    for line in path.read_text().splitlines():
        if line.strip():
            d = json.loads(line)
            out[str(d["utterance_id"])] = normalize_text(d["text"])
    return out


def load_corpus(cfg: ExperimentConfig) -> Corpus:
    utts = {u.utterance_id: u for u in alignment.iter_textgrids(cfg.textgrid_dir, cfg.sil_token)}
    if not utts:
        raise ConfigError(f"no .TextGrid files in {cfg.textgrid_dir}")
    if cfg.transcripts:
        transcripts = _read_transcripts(cfg.transcripts)
    else:
        transcripts = {uid: [w.lower() for w in alignment.transcript_tokens(u)] for uid, u in utts.items()}
    codes = {}
    if cfg.codes_dir is not None:
        for uid in utts:
            p = Path(cfg.codes_dir) / f"{uid}.json"
            if p.exists():
                codes[uid] = CodeSequence.from_json(p.read_text())
    return Corpus(utts, transcripts, codes)


def corpus_stats(corpus: Corpus, cfg: ExperimentConfig) -> list[selection.UtteranceStats]:
    """Stats per utterance; without a code file the count is estimated from duration."""
    out = []
    for uid in sorted(corpus.utterances):
        utt = corpus.utterances[uid]
        st = selection.compute_stats(utt, corpus.codes.get(uid), cfg.duration_mode)
        if st.n_codes is None:
            st = replace(st, n_codes=int(utt.total_duration_s * cfg.code_rate_hz))
        out.append(st)
    return out


# ---------------------------------------------------------------------------
# Grid driver


@dataclass
class GridResult:
    manifests: list[masker.MaskManifest]
    failures: list[tuple[str, str, str]]  # (utterance_id, cell, message)
    eligible: list[str]

    @property
    def exit_code(self) -> int:
        return 1 if self.failures else 0


def cell_dir(root: Path, domain, mask_type, position) -> Path:
    return Path(root) / Domain(domain).value / MaskType(mask_type).value / Position(position).value


def _noise_source(cfg: ExperimentConfig, sample_rate_hz: int, cache: dict) -> noise.NoiseSource:
    if sample_rate_hz not in cache:
        if cfg.masker_file is not None:
            cache[sample_rate_hz] = noise.load_masker(Path(cfg.masker_file).read_bytes())
        else:
            seed = cfg.masker_seed if cfg.masker_seed is not None else derive_seed(cfg.seed, "masker")
            cache[sample_rate_hz] = noise.synthesize_masker(MASKER_SYNTH_DURATION_S, sample_rate_hz, seed)
    return cache[sample_rate_hz]


def run_mask_grid(cfg: ExperimentConfig) -> GridResult:
    """Mask every eligible utterance under every (domain, type, position) cell.

    Writes ``masked/{domain}/{type}/{position}/`` (masked audio or codes plus a
    ``references.jsonl`` of masked reference transcripts), one manifest per
    item under ``manifests/``, and ``reports/selection.csv``.
    """
    cfg.validate()
    out = Path(cfg.output_dir)
    corpus = load_corpus(cfg)
    stats = corpus_stats(corpus, cfg)
    atomic_write(out / "reports" / "selection.csv", selection.stats_to_csv(stats))
    if cfg.apply_selection:
        eligible = [s.utterance_id for s in selection.filter_eligible(stats, cfg.criteria)]
    else:
        eligible = [s.utterance_id for s in stats]
    if not eligible:
        raise ConfigError("no utterance passes the selection criteria")

    atomic_write(
        out / "references" / "unmasked.jsonl",
        "".join(json.dumps({"utterance_id": uid, "reference": " ".join(corpus.transcripts[uid])}) + "\n"
                for uid in eligible),
    )

    noise_codes = CodeSequence.from_json(Path(cfg.noise_codes).read_text()) if cfg.noise_codes else None
    sources: dict[int, noise.NoiseSource] = {}
    manifests, failures = [], []
    references: dict[Path, list[str]] = {}

    for domain in cfg.domains:
        for uid in eligible:
            utt = corpus.utterances[uid]
            try:
                if domain is Domain.WAVE:
                    item = audio.load_wav(Path(cfg.audio_dir) / f"{uid}.wav")
                else:
                    if uid not in corpus.codes:
                        raise ContentMaskError(f"no code file for {uid}")
                    item = corpus.codes[uid]
                tokens = corpus.transcripts.get(uid)
                if tokens is None or len(tokens) != len(utt.content_words):
                    raise ContentMaskError(
                        f"transcript does not match the {len(utt.content_words)} aligned words"
                    )
            except (ContentMaskError, OSError, ValueError) as e:
                for mt in cfg.mask_types:
                    for pos in cfg.positions:
                        failures.append((uid, f"{domain.value}/{mt.value}/{pos.value}", str(e)))
                continue
            for mt in cfg.mask_types:
                for pos in cfg.positions:
                    cell = cell_dir(Path(), domain, mt, pos)
                    try:
                        target = alignment.select_target(utt, pos, cfg.n_words)
                        ref = alignment.masked_reference(tokens, target)
                        src = None
                        offset = 0
                        if mt is MaskType.NOISE and domain is Domain.WAVE:
                            src = _noise_source(cfg, item.sample_rate_hz, sources)
                        if mt is MaskType.NOISE and cfg.random_noise_offset:
                            n = len(src.waveform) if src is not None else len(noise_codes)
                            offset = int(derive_seed(cfg.seed, "offset", uid, domain.value, pos.value) % n)
                        spec = MaskSpec(
                            mt, target, src, pos.value, cfg.rms_match, offset,
                            cfg.seed if mt is MaskType.NOISE else None,
                        )
                        if domain is Domain.WAVE:
                            masked, manifest = masker.mask_waveform(item, spec, uid, cfg.code_rate_hz)
                            payload, suffix = audio.write_wav(masked), ".wav"
                        else:
                            masked, manifest = masker.mask_codes(item, spec, noise_codes, uid)
                            payload, suffix = masked.to_json(), ".json"
                    except (ContentMaskError, ValueError) as e:
                        failures.append((uid, str(cell), str(e)))
                        log.warning("%s %s: %s", uid, cell, e)
                        continue
                    atomic_write(out / "masked" / cell / f"{uid}{suffix}", payload)
                    atomic_write(out / "manifests" / cell / f"{uid}.json", manifest.to_json())
                    references.setdefault(cell, []).append(
                        json.dumps({"utterance_id": uid, "reference": " ".join(ref)}) + "\n"
                    )
                    manifests.append(manifest)

    for cell, lines in sorted(references.items()):
        atomic_write(out / "masked" / cell / "references.jsonl", "".join(lines))
    if failures:
        atomic_write(
            out / "reports" / "mask_failures.csv",
            "utterance_id,cell,error\n" + "".join(
                f"{u},{c},{json.dumps(m)}\n" for u, c, m in sorted(failures)
            ),
        )
    return GridResult(manifests, failures, eligible)


# ---------------------------------------------------------------------------
# Evaluation stages (file in, file out)


def eval_wer_file(transcripts_path, out_csv, max_extra_chars: int = metrics.MAX_EXTRA_CHARS, **norm):
    """Score a transcripts JSONL into a per-pair CSV; returns the results."""
    pairs = metrics.read_transcripts_jsonl(Path(transcripts_path).read_text(), **norm)
    results = [metrics.wer(p, max_extra_chars) for p in sorted(pairs, key=lambda p: p.utterance_id)]
    atomic_write(out_csv, metrics.results_to_csv(results))
    return results


def eval_asv_files(
    enroll_path,
    test_path,
    scores_out,
    trials_path=None,
    trials_out=None,
    eer_out=None,
    ordered: bool = False,
) -> trials_mod.EerResult:
    """Score trials between an enrollment and a test embedding set, then compute EER.

    Without a trials file, trials are enumerated over the enrollment set.
    """
    enroll = trials_mod.read_embeddings_jsonl(Path(enroll_path).read_text())
    test = trials_mod.read_embeddings_jsonl(Path(test_path).read_text())
    if trials_path is not None:
        tr = trials_mod.trials_from_csv(Path(trials_path).read_text())
    else:
        tr = trials_mod.enumerate_trials(enroll, ordered=ordered)
    if trials_out is not None:
        atomic_write(trials_out, trials_mod.trials_to_csv(tr))
    scored = trials_mod.score_trials(
        tr, {e.utterance_id: e for e in enroll}, {e.utterance_id: e for e in test}
    )
    atomic_write(scores_out, trials_mod.scores_to_csv(scored))
    result = trials_mod.eer([(s, t.is_target) for t, s in scored])
    if eer_out is not None:
        atomic_write(eer_out, result.to_json())
    return result


def write_reports(results_dir, out_dir, systems=None) -> dict[str, reports.ReportTable]:
    """Write the WER and EER tables (CSV and Markdown) that have inputs present."""
    out_dir = Path(out_dir)
    tables = {}
    if reports.discover_systems(results_dir) or systems:
        detail, pooled = reports.report_wer(results_dir, systems)
        tables["wer_detail"] = detail
        tables["wer"] = pooled
    if (Path(results_dir) / "scores").exists():
        tables["eer"] = reports.report_eer(results_dir)
    for name, table in tables.items():
        atomic_write(out_dir / f"table_{name}.csv", table.to_csv())
        atomic_write(out_dir / f"table_{name}.md", table.to_markdown())
    return tables


def write_kde(inputs: dict[str, Path], out_svg, out_csv_dir=None, title: str = "",
              grid_size: int = metrics.KDE_GRID_SIZE) -> dict[str, metrics.KdeCurve]:
    """KDE of unfiltered per-utterance WER for each labelled per-pair CSV, plotted together."""
    from .plots import kde_svg

    curves = {}
    for label, path in inputs.items():
        results = metrics.results_from_csv(Path(path).read_text())
        values = [r.wer for r in results if not r.filtered]
        try:
            curves[label] = metrics.kde_log_wer(values, grid_size)
        except ContentMaskError as e:
            log.warning("KDE skipped for %s: %s", label, e)
            continue
        if out_csv_dir is not None:
            atomic_write(Path(out_csv_dir) / (label.replace("/", "_") + ".csv"), curves[label].to_csv())
    atomic_write(out_svg, kde_svg(curves, title))
    return curves
