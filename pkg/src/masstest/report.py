"""Topographic-map rendering of significant (channel, freq, time) triples.

One panel per (frequency band, time window): every channel is drawn at
its layout position and channels carrying at least one significant
triple inside the band/window are highlighted. The same triples are
written to a CSV next to the figure so the display can be rebuilt with
any external plotting tool.

Figures are written through the Agg backend with a fixed SVG hash salt
and no embedded date, so byte-identical reruns stay byte-identical.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .pipeline import SignificanceSets

__all__ = ["FREQ_BANDS", "emit_topomap"]

# reporting granularity: the four classical bands, configurable per call
FREQ_BANDS = (
    ("theta", 4.0, 7.0),
    ("alpha", 8.0, 12.0),
    ("beta", 13.0, 30.0),
    ("gamma", 31.0, 45.0),
)


def _triples_with_p(result, alpha: float) -> list[tuple[tuple[int, int, int], float | None]]:
    if isinstance(result, SignificanceSets):
        p_by_id = {}
        for rec in result.steps:
            if rec.name == "timebins":
                p_by_id = dict(zip(rec.test_ids, rec.p_values))
        return [(tr, p_by_id.get(tr)) for tr in result.scft]
    arr = np.asarray(result)
    if arr.ndim != 3:
        raise ValueError("expected a SignificanceSets or a 3-D p tensor")
    out = []
    for idx in np.argwhere(arr <= alpha):
        tr = tuple(int(v) for v in idx)
        out.append((tr, float(arr[tr])))
    return out


def _band_rows(freq_axis: np.ndarray, bands) -> list[tuple[str, float, float]]:
    rows = [(name, lo, hi) for name, lo, hi in bands
            if np.any((freq_axis >= lo) & (freq_axis <= hi))]
    if not rows:
        rows = [("all", float(freq_axis[0]), float(freq_axis[-1]))]
    return rows


def emit_topomap(
    result,
    layout,
    out_path,
    freq_axis,
    time_axis,
    bands=FREQ_BANDS,
    n_time_windows: int = 4,
    alpha: float = 0.05,
) -> tuple[Path, Path]:
    """Render the topographic significance map and its CSV twin.

    ``result`` is a SignificanceSets or a (channels, freqs, times) p
    tensor thresholded at ``alpha``. Returns (figure_path, csv_path); the
    CSV holds one row per significant triple.
    """
    if layout is None:
        raise ValueError("a sensor layout is required for topographic maps")
    freq_axis = np.asarray(freq_axis, dtype=np.float64)
    time_axis = np.asarray(time_axis, dtype=np.float64)
    triples = _triples_with_p(result, alpha)
    positions = np.asarray(layout.positions, dtype=np.float64)
    n_channels = positions.shape[0]
    for (c, i, j), _ in triples:
        if not 0 <= c < n_channels:
            raise ValueError(f"channel {c} not covered by the {n_channels}-channel layout")
        if not (0 <= i < freq_axis.size and 0 <= j < time_axis.size):
            raise ValueError(f"triple ({c},{i},{j}) outside the freq/time axes")

    out_path = Path(out_path)
    csv_path = out_path.with_suffix(".csv")
    rows = _band_rows(freq_axis, bands)
    n_time_windows = max(1, min(n_time_windows, time_axis.size))
    edges = np.linspace(time_axis[0], time_axis[-1], n_time_windows + 1)

    fig, axes = plt.subplots(
        len(rows),
        n_time_windows,
        figsize=(2.4 * n_time_windows, 2.4 * len(rows)),
        squeeze=False,
    )
    for bi, (band_name, lo, hi) in enumerate(rows):
        for wi in range(n_time_windows):
            t0, t1 = edges[wi], edges[wi + 1]
            ax = axes[bi][wi]
            ax.scatter(positions[:, 0], positions[:, 1], s=18, c="0.8", edgecolors="0.5")
            hot = sorted(
                {
                    c
                    for (c, i, j), _ in triples
                    if lo <= freq_axis[i] <= hi and t0 <= time_axis[j] <= t1
                }
            )
            if hot:
                ax.scatter(
                    positions[hot, 0], positions[hot, 1], s=42, c="crimson", edgecolors="k"
                )
            ax.set_title(f"{band_name} {lo:g}-{hi:g} Hz\n{t0:.2f}-{t1:.2f} s", fontsize=8)
            ax.set_xticks([])
            ax.set_yticks([])
            ax.set_aspect("equal")
    fig.tight_layout()
    with matplotlib.rc_context({"svg.hashsalt": "masstest"}):
        fig.savefig(out_path, metadata={"Date": None} if out_path.suffix == ".svg" else None)
    plt.close(fig)

    with open(csv_path, "w", newline="") as fh:
        fh.write("channel,channel_name,freq_hz,time_s,p_value\n")
        names = getattr(layout, "channel_names", tuple(str(i) for i in range(n_channels)))
        for (c, i, j), p in sorted(triples):
            p_txt = "" if p is None else repr(float(p))
            fh.write(f"{c},{names[c]},{freq_axis[i]!r},{time_axis[j]!r},{p_txt}\n")
    return out_path, csv_path
