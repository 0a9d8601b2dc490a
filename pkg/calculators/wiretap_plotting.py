# This file contains the static SVG line plots written by the command-line front end.

import logging
from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

logger = logging.getLogger(__name__)


def plot_curves(
    path: str | Path,
    series: Mapping[str, tuple[Sequence[float], Sequence[float]]],
    *,
    xlabel: str,
    ylabel: str,
    title: str = "",
    logx: bool = False,
    logy: bool = False,
) -> Path:
    """Write one line per series to an SVG file. Non-positive values are dropped on log axes."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    try:
        for label, (xs, ys) in series.items():
            x, y = np.asarray(xs, dtype=float), np.asarray(ys, dtype=float)
            keep = np.isfinite(x) & np.isfinite(y)
            if logx:
                keep &= x > 0
            if logy:
                keep &= y > 0
            ax.plot(x[keep], y[keep], linewidth=1.8, label=label)
        if logx:
            ax.set_xscale("log")
        if logy:
            ax.set_yscale("log")
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        ax.grid(True, which="both", alpha=0.3)
        if len(series) > 1:
            ax.legend()
        fig.tight_layout()
        path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(path, format="svg")
    finally:
        plt.close(fig)
    logger.info("wrote plot %s", path)
    return path
