"""Figures for the aggregate report.  Rendering is off-screen (Agg)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _finish(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    # fixed metadata keeps repeated renders byte-identical
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_spectrum(result: dict, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 5))
    for s in result["slices"]:
        ev = np.array(s["eigenvalues"]).reshape(-1, 2)
        ax.plot(ev[:, 0], ev[:, 1], ".", ms=2, color="0.6")
    ni = np.array([e["value"] for e in result["nonimaginary"]]).reshape(-1, 2)
    if ni.size:
        ax.plot(ni[:, 0], ni[:, 1], "o", mfc="none", color="C3",
                label=f"nonimaginary ({result['count']} of <= {2 * result['kappa']})")
        ax.legend(loc="upper right", fontsize=8)
    ax.axvline(0, color="k", lw=0.5)
    ax.set_xlabel(r"Re $\lambda$")
    ax.set_ylabel(r"Im $\lambda$")
    p = result["instance"]["p"]
    ax.set_title(f"slice spectra, p=({p[0]},{p[1]})")
    return _finish(fig, path)


def plot_evolution(result: dict, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    for tr in result["trials"]:
        if "times" in tr:
            ax.semilogy(tr["times"], tr["norms"], lw=1, label=f"trial {tr['trial']}: rate {tr['rate']:.4f}")
    s = result["spectral_abscissa"]
    if s > 0 and result["trials"] and "times" in result["trials"][0]:
        t = np.array(result["trials"][0]["times"])
        n0 = result["trials"][0]["norms"][-1]
        ax.semilogy(t, n0 * np.exp(s * (t - t[-1])), "k--", lw=0.8, label=f"max Re = {s:.4f}")
    ax.set_xlabel("t")
    ax.set_ylabel(r"$\|\omega(t)\|$")
    ax.legend(fontsize=8)
    return _finish(fig, path)


def plot_resolvent(result: dict, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    data = np.array(result["samples"], dtype=float).reshape(-1, 2)
    ax.semilogy(data[:, 0], data[:, 1], "o-", ms=3, label="box resolvent norm")
    a, norm = result["a"], result["op_norm"]
    mod = np.abs(data[:, 0] + 1j * a)
    far = mod > norm
    if far.any():
        ax.semilogy(data[far, 0], 1.0 / (mod[far] - norm), "k--", lw=0.8, label="Neumann bound")
    ax.set_xlabel(r"$\tau$")
    ax.set_ylabel(rf"$\|R({a:g}+i\tau, L)\|$")
    ax.legend(fontsize=8)
    return _finish(fig, path)


PLOTTERS = {"spectrum": plot_spectrum, "evolution": plot_evolution, "resolvent": plot_resolvent}
