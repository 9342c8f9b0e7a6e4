"""SVG heatmap of wavelet coherence with COI shading and phase arrows."""

from __future__ import annotations

import numpy as np

from .coherence import CoherenceField

MAX_COLUMNS = 800
ARROW_GRID = (24, 60)  # (scales, times) sampled for arrows


def coherence_svg(field: CoherenceField, path, title: str = "", bar_minutes: float = 5.0) -> None:
    """Render r2 (warm = high, cold = low), the significance contour, the COI
    and phase arrows where coherence is significant.

    Arrows are drawn at the phase angle with the period axis increasing
    upwards, so in-phase points right and anti-phase left.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    r2 = field.r2
    k, n = r2.shape
    step = max(1, int(np.ceil(n / MAX_COLUMNS)))
    cols = np.arange(0, n, step)
    periods = field.grid.periods * bar_minutes
    y = np.log2(periods)

    with matplotlib.rc_context({"svg.hashsalt": "wavecontagion", "svg.fonttype": "none",
                                 "savefig.dpi": 100}):
        fig, ax = plt.subplots(figsize=(10, 4.5))
        mesh = ax.pcolormesh(cols, y, r2[:, cols], cmap="jet", vmin=0.0, vmax=1.0,
                             shading="nearest", rasterized=True)
        if field.significant is not None:
            ax.contour(cols, y, field.significant[:, cols].astype(float), levels=[0.5],
                       colors="black", linewidths=1.2)
            ks = np.unique(np.linspace(0, k - 1, ARROW_GRID[0]).astype(int))
            us = np.unique(np.linspace(0, n - 1, ARROW_GRID[1]).astype(int))
            kk, uu = np.meshgrid(ks, us, indexing="ij")
            show = field.significant[kk, uu]
            ph = field.phase[kk, uu]
            ax.quiver(uu[show], y[kk[show]], np.cos(ph[show]), np.sin(ph[show]),
                      color="black", scale=45, width=0.0018, headwidth=4)
        coi = np.log2(np.maximum(field.coi * bar_minutes, periods[0]))
        ax.fill_between(np.arange(n), coi, y[-1], color="white", alpha=0.45, linewidth=0)
        ax.plot(np.arange(n), np.minimum(coi, y[-1]), color="black", linewidth=1.5)
        ticks = np.arange(np.ceil(y[0]), np.floor(y[-1]) + 1)
        ax.set_yticks(ticks)
        ax.set_yticklabels([f"{2**t:g}" for t in ticks])
        ax.set_ylim(y[0], y[-1])
        ax.set_xlim(0, n - 1)
        ax.set_xlabel("time index")
        ax.set_ylabel("period (minutes)")
        if title:
            ax.set_title(title)
        fig.colorbar(mesh, ax=ax, label="$R^2$")
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
        plt.close(fig)
