"""Matplotlib rendering of rate-study results (Agg backend, files only)."""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

STYLE = {
    "font.family": "serif",
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 150,
    "svg.hashsalt": "npmle-lab",  # stable ids in svg output
}


def figsize(scale=1.0):
    width = 5.5 * scale
    return width, width * (np.sqrt(5.0) - 1.0) / 2.0


def render_rate_figure(result, out_dir, formats=("png", "pdf")):
    """Mean Hellinger risk vs n on log-log axes with the fitted line and the phi_n overlay."""
    s = result.summary
    n = np.array([r["n"] for r in s], dtype=float)
    mean = np.array([r["mean_risk"] for r in s])
    se = np.array([r["stderr"] for r in s])
    phi = np.array([r["phi_n"] for r in s])
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=figsize())
        cells = [r for r in result.rows if r["status"] == "ok"]
        ax.scatter([r["n"] for r in cells], [r["risk"] for r in cells], s=6, color="0.7", label="per seed")
        ax.errorbar(n, mean, yerr=np.nan_to_num(se), fmt="o-", color="k", ms=3, lw=1, capsize=2, label="mean")
        if result.fit is not None:
            f = result.fit
            ax.plot(n, np.exp(f.intercept) * n**f.slope, "--", color="C0", lw=1,
                    label=f"fit slope {f.slope:.3f}")
        if np.all(np.isfinite(phi)):
            # overlay anchored at the first mean so only the shape is compared
            ax.plot(n, phi * mean[0] / phi[0], ":", color="C3", lw=1, label=r"$\phi_n$ (shape)")
        ax.set_xscale("log", base=2)
        ax.set_yscale("log")
        ax.set_xlabel("sample size $n$")
        ax.set_ylabel("Hellinger risk")
        ax.legend(frameon=False)
        fig.tight_layout()
        files = {}
        for ext in formats:
            path = Path(out_dir) / f"rate.{ext}"
            meta = {"CreationDate": None} if ext == "pdf" else ({"Software": None} if ext == "png" else None)
            fig.savefig(path, metadata=meta)
            files[f"figure_{ext}"] = str(path)
        plt.close(fig)
    return files
