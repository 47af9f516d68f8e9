"""Static SVG/PNG line plots for sweep and figure reports (matplotlib, Agg backend)."""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

# fixed hash salt and no date stamp keep SVG output byte-stable across runs
matplotlib.rcParams["svg.hashsalt"] = "immse"


def line_plot(x: Sequence[float], series: Mapping[str, Sequence[float]], path: str | Path,
              xlabel: str, ylabel: str, title: str | None = None,
              styles: Mapping[str, str] | None = None) -> Path:
    path = Path(path)
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    for name, y in series.items():
        ax.plot(x, y, (styles or {}).get(name, "-"), label=name, linewidth=1.4, markersize=3)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    meta = {"Date": None} if path.suffix == ".svg" else {}
    fig.savefig(path, metadata=meta)
    plt.close(fig)
    return path


def figure1_plot(rows: Sequence[Mapping[str, float]], path: str | Path) -> Path:
    """Per-user and sum rates of the BPSK MAC against snr in dB, with the parallel reference."""
    x = [r["snr_db"] for r in rows]
    series = {
        "I1' (first decoded)": [r["i1_prime_bits"] for r in rows],
        "I2' (second decoded)": [r["i2_prime_bits"] for r in rows],
        "sum rate": [r["sum_bits"] for r in rows],
        "parallel channels": [r["parallel_sum_bits"] for r in rows],
    }
    styles = {"parallel channels": "--"}
    if all("joint_mc_bits" in r for r in rows):
        series["exact joint (MC)"] = [r["joint_mc_bits"] for r in rows]
        series["exact I(x1;y) (MC)"] = [r["i1_nc_mc_bits"] for r in rows]
        styles.update({"exact joint (MC)": "o", "exact I(x1;y) (MC)": "s"})
    return line_plot(x, series, path, "snr [dB]", "rate [bits/channel use]",
                     "Two-user BPSK MAC rates", styles)
