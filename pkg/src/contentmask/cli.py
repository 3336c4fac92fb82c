"""Command-line entry point.

Each subcommand reads and writes files, so the external neural steps
(re-synthesis, ASR, embedding extraction) can run between stages.

Exit codes: 0 success, 1 partial failure, 2 configuration error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__, alignment, metrics, pipeline, selection
from .errors import ConfigError, ContentMaskError
from .fileio import atomic_write
from .masker import Domain, MaskType

EXIT_OK, EXIT_PARTIAL, EXIT_CONFIG = 0, 1, 2


def _add_selection_args(p):
    p.add_argument("--max-rate", type=float, help="speaking-rate bound, words/s (strict <; default 5)")
    p.add_argument("--min-codes", type=int, help="code-count bound (strict >; default 300)")
    p.add_argument("--min-words", type=int, help="non-silence word bound (>=; default 7)")
    p.add_argument("--per-speaker", action="store_const", const=True,
                   help="test the speaker's average rate instead of each utterance's")
    p.add_argument("--duration-mode", choices=[m.value for m in selection.DurationMode],
                   help="duration used for the speaking rate")
    p.add_argument("--sil-token", help="silence label in the word tier (default SIL)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="contentmask", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("select", help="compute utterance stats and apply the eligibility criteria")
    p.add_argument("--config")
    p.add_argument("--textgrid-dir")
    p.add_argument("--codes-dir")
    _add_selection_args(p)
    p.add_argument("--out", required=True, help="stats CSV")
    p.add_argument("--eligible-out", help="write eligible utterance ids, one per line")

    p = sub.add_parser("mask", help="mask utterances over a (type x position x domain) grid")
    p.add_argument("--config", help="key = value config file; flags override it")
    p.add_argument("--type", dest="mask_types", action="append",
                   choices=[t.value for t in MaskType], help="repeatable; default all")
    p.add_argument("--position", dest="positions", action="append",
                   choices=[q.value for q in alignment.Position], help="repeatable; default all")
    p.add_argument("--domain", dest="domains", action="append",
                   choices=[d.value for d in Domain], help="repeatable; default all")
    p.add_argument("--textgrid-dir")
    p.add_argument("--audio-dir")
    p.add_argument("--codes-dir")
    p.add_argument("--transcripts", help="JSONL {utterance_id, text}; default TextGrid labels")
    p.add_argument("--noise-codes", help="code-sequence JSON of a noise-only encoding")
    p.add_argument("--masker-file", help="16-bit mono WAV noise masker")
    p.add_argument("--masker-seed", type=int, help="seed of the synthesized masker")
    p.add_argument("--n-words", type=int)
    p.add_argument("--no-rms-match", dest="rms_match", action="store_const", const=False)
    p.add_argument("--random-noise-offset", action="store_const", const=True)
    p.add_argument("--no-selection", dest="apply_selection", action="store_const", const=False)
    p.add_argument("--code-rate", dest="code_rate_hz", type=float)
    _add_selection_args(p)
    p.add_argument("--out-dir", dest="output_dir")
    p.add_argument("--seed", type=int)

    p = sub.add_parser("eval-wer", help="score ASR transcripts into a per-pair WER CSV")
    p.add_argument("--transcripts", required=True, help="JSONL {utterance_id, reference, hypothesis}")
    p.add_argument("--out", required=True)
    p.add_argument("--max-extra-chars", type=int, default=metrics.MAX_EXTRA_CHARS)
    p.add_argument("--keep-case", action="store_true")
    p.add_argument("--keep-punct", action="store_true")

    p = sub.add_parser("ttest", help="paired t-test between two per-pair WER CSVs")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--alpha", type=float, default=metrics.ALPHA)
    p.add_argument("--out", help="JSON result")

    p = sub.add_parser("eval-asv", help="cosine-score trials and compute EER")
    p.add_argument("--enroll", required=True, help="enrollment embeddings JSONL")
    p.add_argument("--test", required=True, help="test embeddings JSONL")
    p.add_argument("--trials", help="trials CSV; default: enumerate over the enrollment set")
    p.add_argument("--ordered", action="store_true", help="enumerate both directions of each pair")
    p.add_argument("--trials-out")
    p.add_argument("--scores-out", required=True)
    p.add_argument("--eer-out")

    p = sub.add_parser("kde", help="log-domain KDE of per-utterance WER, as CSV and SVG")
    p.add_argument("inputs", nargs="+", metavar="LABEL=CSV")
    p.add_argument("--svg", required=True)
    p.add_argument("--csv-dir")
    p.add_argument("--title", default="")
    p.add_argument("--grid-size", type=int, default=metrics.KDE_GRID_SIZE)

    p = sub.add_parser("report", help="WER and EER tables from a results directory")
    p.add_argument("--results-dir", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--system", dest="systems", action="append")

    p = sub.add_parser("demo", help="run the whole pipeline on a generated synthetic corpus")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=0)

    return parser


def _config_from_args(args) -> pipeline.ExperimentConfig:
    keys = [
        "textgrid_dir", "audio_dir", "codes_dir", "transcripts", "noise_codes", "masker_file",
        "masker_seed", "output_dir", "seed", "mask_types", "positions", "domains", "n_words",
        "rms_match", "random_noise_offset", "apply_selection", "code_rate_hz", "sil_token",
        "duration_mode",
    ]
    overrides = {k: getattr(args, k, None) for k in keys}
    overrides.update(
        max_rate_wps=args.max_rate, min_codes=args.min_codes, min_words=args.min_words,
        per_speaker_rate=args.per_speaker,
    )
    return pipeline.build_config(args.config, **overrides)


def cmd_select(args) -> int:
    cfg = _config_from_args(args)
    if cfg.textgrid_dir is None:
        raise ConfigError("--textgrid-dir is required")
    cfg.domains = []
    corpus = pipeline.load_corpus(cfg)
    stats = pipeline.corpus_stats(corpus, cfg)
    atomic_write(args.out, selection.stats_to_csv(stats))
    kept = selection.filter_eligible(stats, cfg.criteria)
    if args.eligible_out:
        atomic_write(args.eligible_out, "".join(s.utterance_id + "\n" for s in kept))
    print(f"{len(kept)}/{len(stats)} utterances eligible")
    return EXIT_OK


def cmd_mask(args) -> int:
    cfg = _config_from_args(args)
    result = pipeline.run_mask_grid(cfg)
    print(f"{len(result.manifests)} masked items, {len(result.failures)} failures "
          f"({len(result.eligible)} eligible utterances)")
    return result.exit_code


def cmd_eval_wer(args) -> int:
    results = pipeline.eval_wer_file(
        args.transcripts, args.out, args.max_extra_chars,
        lowercase=not args.keep_case, strip_punct=not args.keep_punct,
    )
    mean, n, excluded = metrics.mean_wer(results)
    shown = "n/a" if mean is None else f"{100 * mean:.2f}%"
    print(f"WER {shown} over {n} pairs ({excluded} excluded)")
    return EXIT_OK


def cmd_ttest(args) -> int:
    a = metrics.results_from_csv(Path(args.a).read_text())
    b = metrics.results_from_csv(Path(args.b).read_text())
    ids, xa, xb = metrics.paired_by_utterance(a, b)
    res = metrics.paired_t_test(xa, xb, args.alpha)
    payload = {
        "n_pairs": res.n_pairs, "dof": res.dof, "t_statistic": res.t_statistic,
        "p_value": res.p_value, "significant": res.significant,
        "mean_difference": res.mean_difference, "alpha": args.alpha,
    }
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if args.out:
        atomic_write(args.out, text)
    print(text, end="")
    return EXIT_OK


def cmd_eval_asv(args) -> int:
    res = pipeline.eval_asv_files(
        args.enroll, args.test, args.scores_out, args.trials, args.trials_out,
        args.eer_out, args.ordered,
    )
    print(f"EER {100 * res.eer:.2f}% ({res.n_target} target, {res.n_nontarget} non-target trials)")
    return EXIT_OK


def cmd_kde(args) -> int:
    inputs = {}
    for item in args.inputs:
        label, sep, path = item.partition("=")
        if not sep:
            label, path = Path(item).stem, item
        inputs[label] = Path(path)
    curves = pipeline.write_kde(inputs, args.svg, args.csv_dir, args.title, args.grid_size)
    print(f"{len(curves)}/{len(inputs)} curves written to {args.svg}")
    return EXIT_OK if len(curves) == len(inputs) else EXIT_PARTIAL


def cmd_report(args) -> int:
    tables = pipeline.write_reports(args.results_dir, args.out_dir, args.systems)
    if not tables:
        raise ConfigError(f"no results under {args.results_dir}")
    for t in tables.values():
        print(t.to_markdown())
    return EXIT_OK


def cmd_demo(args) -> int:
    from .synthetic import run_demo

    out = run_demo(args.out_dir, args.seed)
    for t in out["tables"].values():
        print(t.to_markdown())
    return out["grid"].exit_code


COMMANDS = {
    "select": cmd_select,
    "mask": cmd_mask,
    "eval-wer": cmd_eval_wer,
    "ttest": cmd_ttest,
    "eval-asv": cmd_eval_asv,
    "kde": cmd_kde,
    "report": cmd_report,
    "demo": cmd_demo,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (ContentMaskError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PARTIAL


if __name__ == "__main__":
    sys.exit(main())
