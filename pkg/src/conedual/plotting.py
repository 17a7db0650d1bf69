"""Render sweep results to image files.

Kept apart from the CSV emission so the library never drags matplotlib
in unless a figure was actually requested; the import happens inside
the function for the same reason.
"""

from __future__ import annotations

import math
from typing import Sequence

from .duality import SweepRow


def plot_sweep(rows: Sequence[SweepRow], path: str) -> None:
    """Draw the generator value and its relaxation over the grid."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    om, val, rel = [], [], []
    for row in rows:
        if row.status != "ok":
            continue
        om.append(float(row.omega.reshape(-1)[0]))
        val.append(row.value)
        rel.append(row.relaxed if math.isfinite(row.relaxed) else math.nan)
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.plot(om, val, "o-", label="F_alpha", color="tab:blue", ms=4)
    ax.plot(om, rel, "s--", label="F_alpha relaxed", color="tab:orange", ms=3)
    ax.set_xlabel("omega")
    ax.set_ylabel("value")
    ax.legend(loc="best")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
