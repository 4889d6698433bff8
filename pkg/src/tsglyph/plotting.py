"""Shared matplotlib setup with byte-stable SVG output."""

from __future__ import annotations

from contextlib import contextmanager
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

STYLE = {
    "figure.figsize": (7.0, 3.0),
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "svg.hashsalt": "tsglyph",
    "svg.fonttype": "path",
    "path.simplify": False,
}

SERIES_COLOR = "#1f3b73"
HIGHLIGHT_COLOR = "#e07b39"


@contextmanager
def figure(**kwargs):
    """Yield ``(fig, ax)`` under the package style; the figure is closed afterwards."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(**kwargs)
        try:
            yield fig, ax
        finally:
            plt.close(fig)


def save(fig, path) -> Path:
    """Write ``fig`` without timestamps so identical input gives identical bytes."""
    path = Path(path)
    fmt = path.suffix.lstrip(".") or "svg"
    meta = {"Date": None} if fmt in ("svg", "pdf") else None
    with plt.rc_context(STYLE):
        fig.savefig(path, format=fmt, metadata=meta, bbox_inches="tight")
    return path
