"""SVG line plots of WER density curves."""
from __future__ import annotations

import io
from typing import Mapping

import matplotlib

matplotlib.use("Agg")
from matplotlib.figure import Figure  # noqa: E402

from .metrics import KdeCurve  # noqa: E402

_STYLES = {"start": "-", "middle": "--", "end": ":"}


def kde_svg(curves: Mapping[str, KdeCurve], title: str = "", xmax: float | None = None) -> bytes:
    """Render labelled curves (WER% on x) to deterministic SVG bytes.

    Labels of the form ``type/position`` get one colour per type and one
    line style per position.
    """
    with matplotlib.rc_context({"svg.hashsalt": "contentmask", "svg.fonttype": "none"}):
        fig = Figure(figsize=(6.5, 4.0))
        ax = fig.add_subplot()
        colours = {}
        for label, curve in curves.items():
            kind, _, pos = label.partition("/")
            colour = colours.setdefault(kind, f"C{len(colours)}")
            ax.plot(100 * curve.grid, curve.density / 100, _STYLES.get(pos, "-"),
                    color=colour, label=label, linewidth=1.2)
        ax.set_xlabel("WER (%)")
        ax.set_ylabel("density")
        if xmax is not None:
            ax.set_xlim(0, xmax)
        else:
            ax.set_xlim(left=0)
        if title:
            ax.set_title(title)
        if curves:
            ax.legend(fontsize=7, ncol=3)
        fig.tight_layout()
        buf = io.BytesIO()
        fig.savefig(buf, format="svg", metadata={"Date": None})
    return buf.getvalue()
