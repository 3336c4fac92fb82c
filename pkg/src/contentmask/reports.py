"""WER and EER tables over a results directory.

Layout read here::

    wer/{system}/{condition}/none.csv                  unmasked baseline
    wer/{system}/{condition}/{type}/{position}.csv     per-pair WER CSVs
    scores/{condition}/none.csv
    scores/{condition}/{type}/{position}.csv           trial score CSVs

``condition`` is ``original`` for waveform masking and ``vqvae`` for
code-domain masking followed by external re-synthesis.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .alignment import Position
from .errors import ContentMaskError
from .masker import Domain, MaskType
from .metrics import WerResult, mean_wer, results_from_csv
from .trials import eer, scores_from_csv

CONDITION_FOR_DOMAIN = {Domain.WAVE: "original", Domain.CODES: "vqvae"}
CONDITIONS = ("original", "vqvae")
TYPE_LABELS = {MaskType.NOISE: "Noise", MaskType.DELETE: "Deletion", MaskType.REVERSE: "Reversal"}
NONE = "none"


@dataclass
class Cell:
    value: float | None  # percent
    n: int = 0
    excluded: int = 0
    note: str = ""

    def text(self) -> str:
        return "n/a" if self.value is None else f"{self.value:.2f}"


@dataclass
class ReportTable:
    title: str
    row_labels: list[str]
    col_labels: list[str]
    cells: dict[tuple[str, str], Cell] = field(default_factory=dict)

    def cell(self, row: str, col: str) -> Cell:
        return self.cells[(row, col)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["row", "column", "value_pct", "n", "excluded", "note"])
        for r in self.row_labels:
            for c in self.col_labels:
                cell = self.cells[(r, c)]
                w.writerow([r, c, "" if cell.value is None else f"{cell.value:.6f}",
                            cell.n, cell.excluded, cell.note])
        return buf.getvalue()

    def to_markdown(self) -> str:
        lines = [f"### {self.title}", "",
                 "| | " + " | ".join(self.col_labels) + " |",
                 "|---|" + "---|" * len(self.col_labels)]
        for r in self.row_labels:
            parts = []
            for c in self.col_labels:
                cell = self.cells[(r, c)]
                t = cell.text()
                if cell.excluded:
                    t += f" ({cell.excluded} excl.)"
                parts.append(t)
            lines.append(f"| {r} | " + " | ".join(parts) + " |")
        return "\n".join(lines) + "\n"


def _grid_cols(types, positions) -> list[tuple[MaskType, Position]]:
    return [(t, p) for p in positions for t in types]


def _col_label(t: MaskType, p: Position) -> str:
    return f"{p.value.capitalize()}/{TYPE_LABELS[t]}"


def _load_wer(path: Path) -> list[WerResult] | None:
    return results_from_csv(path.read_text()) if path.exists() else None


def _wer_cell(results: list[WerResult] | None) -> Cell:
    if results is None:
        return Cell(None, note="missing")
    mean, n, excluded = mean_wer(results)
    if mean is None:
        return Cell(None, 0, excluded, "all filtered" if excluded else "empty")
    return Cell(100.0 * mean, n, excluded)


def discover_systems(results_dir) -> list[str]:
    root = Path(results_dir) / "wer"
    return sorted(p.name for p in root.iterdir() if p.is_dir()) if root.exists() else []


def report_wer(
    results_dir,
    systems: Sequence[str] | None = None,
    conditions: Sequence[str] = CONDITIONS,
    types: Sequence[MaskType] = tuple(MaskType),
    positions: Sequence[Position] = tuple(Position),
) -> tuple[ReportTable, ReportTable]:
    """Per-cell table and a positions-pooled table laid out like the ASR results table.

    Cell values are mean per-utterance WER% over pairs that survive the
    failure filter; pooled columns average over all positions' pairs.
    """
    root = Path(results_dir) / "wer"
    systems = list(systems) if systems is not None else discover_systems(results_dir)
    if not systems:
        raise ContentMaskError(f"no WER results under {root}")
    rows = [f"{s}/{c}" for s in systems for c in conditions]
    grid = _grid_cols(types, positions)
    detail = ReportTable("WER% per mask cell", rows, [NONE] + [_col_label(t, p) for t, p in grid])
    pooled = ReportTable("WER% by mask type", rows, [NONE] + [TYPE_LABELS[t] for t in types])
    for s in systems:
        for c in conditions:
            row = f"{s}/{c}"
            base = _load_wer(root / s / c / f"{NONE}.csv")
            detail.cells[(row, NONE)] = pooled.cells[(row, NONE)] = _wer_cell(base)
            by_type: dict[MaskType, list[WerResult] | None] = {}
            for t, p in grid:
                res = _load_wer(root / s / c / t.value / f"{p.value}.csv")
                detail.cells[(row, _col_label(t, p))] = _wer_cell(res)
                if res is not None:
                    by_type.setdefault(t, []).extend(res)
            for t in types:
                pooled.cells[(row, TYPE_LABELS[t])] = _wer_cell(by_type.get(t))
    return detail, pooled


def _eer_cell(path: Path) -> Cell:
    if not path.exists():
        return Cell(None, note="missing")
    scores = scores_from_csv(path.read_text())
    try:
        res = eer(scores)
    except ContentMaskError as e:
        return Cell(None, len(scores), note=str(e))
    return Cell(100.0 * res.eer, len(scores))


def report_eer(
    results_dir,
    conditions: Sequence[str] = CONDITIONS,
    types: Sequence[MaskType] = tuple(MaskType),
    positions: Sequence[Position] = tuple(Position),
) -> ReportTable:
    """EER% per condition: an unmasked column then one per (position, type)."""
    root = Path(results_dir) / "scores"
    grid = _grid_cols(types, positions)
    table = ReportTable("EER% (clean enrollment, masked test)", list(conditions),
                        [NONE] + [_col_label(t, p) for t, p in grid])
    for c in conditions:
        table.cells[(c, NONE)] = _eer_cell(root / c / f"{NONE}.csv")
        for t, p in grid:
            table.cells[(c, _col_label(t, p))] = _eer_cell(root / c / t.value / f"{p.value}.csv")
    return table
