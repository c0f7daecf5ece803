"""Plot the CSV tables written by run_experiments.py.

Needs matplotlib (``pip install -e .[plots]``). Missing tables are skipped.

    python3 scripts/plot_results.py --results results --out figures
"""

import argparse
import csv
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def read_table(path: Path) -> dict[str, np.ndarray]:
    with path.open() as fh:
        rows = list(csv.DictReader(line for line in fh if not line.startswith("#")))
    out = {}
    for key in rows[0]:
        col = [r[key] for r in rows]
        try:
            out[key] = np.array([float(v) if v != "" else np.nan for v in col])
        except ValueError:
            out[key] = np.array(col)
    return out


def group_mean(t, by, value, mask=None):
    mask = np.ones(len(t[by]), bool) if mask is None else mask
    keys = np.unique(t[by][mask])
    return keys, np.array([np.nanmean(t[value][mask & (t[by] == k)]) for k in keys])


def plot_schedule(t, out):
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    for kind, col in (("TypeI", "peaks_strict"), ("TypeII", "peaks_plateau")):
        mask = t["kind"] == kind
        m, peaks = group_mean(t, "m", col, mask)
        _, ac = group_mean(t, "m", "lag1_autocorr", mask)
        axes[0].plot(m, peaks, label=kind)
        axes[1].plot(m, ac, label=kind)
    axes[0].set(xlabel="number of terms m", ylabel="mean local peaks", yscale="log")
    axes[1].set(xlabel="number of terms m", ylabel="mean lag-1 autocorrelation")
    axes[0].legend()
    fig.tight_layout()
    fig.savefig(out / "ruggedness_schedule.png", dpi=120)


def plot_nk(t, out):
    k, peaks = group_mean(t, "k", "peak_count")
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.plot(k, peaks, "ko")
    ax.set(xlabel="K", ylabel="mean local peaks", yscale="log")
    fig.savefig(out / "nk_peaks.png", dpi=120)


def plot_histograms(t, out, name):
    fig, ax = plt.subplots(figsize=(6, 4))
    for sigma in np.unique(t["sigma"]):
        mask = (t["sigma"] == sigma) if not np.isnan(sigma) else np.isnan(t["sigma"])
        mask &= t["replicate"] == 0
        ax.stairs(t["count"][mask], np.append(t["lo"][mask], t["hi"][mask][-1]), label=f"sigma={sigma:g}")
    ax.set(xlabel="fitness", ylabel="count")
    ax.legend()
    fig.savefig(out / f"{name}.png", dpi=120)


def plot_basins(t, out):
    fig, ax = plt.subplots(figsize=(6, 4))
    for family in np.unique(t["family"]):
        M, b = group_mean(t, "max_order", "basin_recursive", t["family"] == family)
        ax.plot(M, b, "o-", label=family)
    ax.set(xlabel="M", ylabel="basin of global maximum", yscale="log")
    ax.legend()
    fig.savefig(out / "basins.png", dpi=120)


def plot_generations(t, out, label, name, column="mean_by_max"):
    fig, ax = plt.subplots(figsize=(6, 4))
    for key in np.unique(t[label]):
        mask = t[label] == key
        ax.plot(t["generation"][mask], t[column][mask], label=f"{label}={key:g}")
    ax.set(xlabel="generation", ylabel=column)
    ax.legend(fontsize=7)
    fig.savefig(out / f"{name}.png", dpi=120)


def plot_spread(t, out):
    fig, ax = plt.subplots(figsize=(6, 4))
    for sigma in np.unique(t["sigma"]):
        mask = t["sigma"] == sigma
        ax.plot(t["max_order"][mask], t["peaks_std"][mask], "o-", label=f"sigma={sigma:g}")
    ax.set(xlabel="M", ylabel="std of peak count", yscale="log")
    ax.legend()
    fig.savefig(out / "sigma_spread.png", dpi=120)


PLOTS = {
    "fig1_nk_peaks_nk_peaks.csv": plot_nk,
    "fig4_ruggedness_schedule_schedule.csv": plot_schedule,
    "fig2_histograms_histogram.csv": lambda t, o: plot_histograms(t, o, "histograms"),
    "fig3_uniform_histograms_histogram.csv": lambda t, o: plot_histograms(t, o, "uniform_histograms"),
    "fig7_basins_basins.csv": plot_basins,
    "fig8_9_p_sweep_generations.csv": lambda t, o: plot_generations(t, o, "proportion", "p_sweep"),
    "fig10_11_m_sweep_generations.csv": lambda t, o: plot_generations(t, o, "max_order", "m_sweep"),
    "fig13_sigma_spread_summary.csv": plot_spread,
}


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--results", default="results")
    p.add_argument("--out", default="figures")
    args = p.parse_args(argv)
    results, out = Path(args.results), Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    drawn = 0
    for name, plot in PLOTS.items():
        path = results / name
        if path.exists():
            plot(read_table(path), out)
            plt.close("all")
            drawn += 1
    print(f"{drawn} figures written to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
