"""SVG figures for scenario results. The CSV is the contract; these are a courtesy."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

plt.rcParams.update({
    "svg.hashsalt": "qfridge",
    "font.size": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "legend.fontsize": 8,
    "legend.frameon": False,
})

_LEVEL_COLORS = ("black", "tab:red", "darkcyan", "tab:blue")


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def _by_chi(result, x_name, y_name):
    chi = np.array(result.column("chi"), dtype=float)
    x = np.array(result.column(x_name), dtype=float)
    y = np.array(result.column(y_name), dtype=float)
    for c in dict.fromkeys(chi):
        sel = chi == c
        yield c, x[sel], y[sel]


def plot_relax(cfg, result, out: Path) -> list[Path]:
    fig, ax = plt.subplots(figsize=(5, 3.6))
    for c, x, y in _by_chi(result, "gamma_t", "p_cold_norm"):
        pos = x > 0
        ax.semilogx(x[pos], y[pos], label=f"$\\chi$ = {c:g}")
    ax.axhline(1.0, color="k", ls="-.", lw=0.8)
    ax.set_xlabel(r"$\Gamma_\downarrow t$")
    ax.set_ylabel(r"$P_C / 2P_0$")
    ax.set_title(f"relaxation from {cfg.init_label}")
    ax.legend()
    paths = [_save(fig, out / "relax_power.svg")]

    fig, ax = plt.subplots(figsize=(5, 3.6))
    styles = ("-.", "-", "--", ":")
    for i, c in enumerate(dict.fromkeys(result.column("chi"))):
        ls = styles[i % len(styles)]
        for k in range(4):
            _, x, y = next(t for t in _by_chi(result, "gamma_t", f"rho{k + 1}{k + 1}") if t[0] == c)
            pos = x > 0
            ax.semilogx(x[pos], y[pos], ls=ls, color=_LEVEL_COLORS[k],
                        label=f"$\\rho_{{{k + 1}{k + 1}}}$" if i == 0 else None)
    ax.set_xlabel(r"$\Gamma_\downarrow t$")
    ax.set_ylabel("population")
    ax.set_title(r"line style cycles with $\chi$")
    ax.legend()
    paths.append(_save(fig, out / "relax_populations.svg"))
    return paths


def plot_steady(cfg, result, out: Path) -> list[Path]:
    fig, ax = plt.subplots(figsize=(5, 3.6))
    for c, x, y in _by_chi(result, "q", "p_cold_norm"):
        ax.plot(x, y, marker="." if x.size < 60 else None, label=f"$\\chi$ = {c:g}")
    ax.set_xlabel("q")
    ax.set_ylabel(r"$P_C / 2P_0$")
    ax.legend()
    return [_save(fig, out / "steady_power.svg")]


def plot_drive(cfg, result, out: Path) -> list[Path]:
    fig, ax = plt.subplots(figsize=(5, 3.6))
    for c, x, y in _by_chi(result, "omega", "p_cold"):
        line, = ax.semilogx(x, -y, marker="o", ms=3, label=f"$\\chi$ = {c:g}")
        _, xl, yl = next(t for t in _by_chi(result, "omega", "p_cold_limit") if t[0] == c)
        ax.semilogx(xl, -yl, ls="--", lw=0.8, color=line.get_color())
    ax.axhline(0.0, color="k", lw=0.6)
    ax.set_xlabel(r"$\Omega$")
    ax.set_ylabel(r"cooling power $-\bar P_C$")
    ax.set_title("markers: cycle protocol; dashed: periodic limit")
    ax.legend()
    return [_save(fig, out / "drive_power.svg")]


def plot_spectrum(cfg, result, out: Path) -> list[Path]:
    w = np.array(result.column("w"), dtype=float)
    fig, ax = plt.subplots(figsize=(5, 3.6))
    ax.plot(w, result.column("s_cold"), label="cold")
    ax.plot(w, result.column("s_hot"), label="hot")
    ax.set_xlabel(r"$\hbar\omega / E_0$")
    ax.set_ylabel(r"$S(\omega)$ (arb.)")
    ax.legend()
    return [_save(fig, out / "spectrum.svg")]


def plot_rates(cfg, result, out: Path) -> list[Path]:
    paths = []
    chi = np.array(result.column("chi"), dtype=float)
    q = np.array(result.column("q"), dtype=float)
    matrix = np.array(result.column("matrix"))
    rate = np.array(result.column("rate"), dtype=float)
    q0 = q[0]
    chis = list(dict.fromkeys(chi))
    fig, axes = plt.subplots(1, len(chis), figsize=(2.6 * len(chis), 2.8), squeeze=False)
    for ax, c in zip(axes[0], chis):
        sel = (chi == c) & (q == q0) & (matrix == "total")
        m = rate[sel].reshape(4, 4).copy()
        np.fill_diagonal(m, 0.0)
        ax.imshow(m, cmap="Greys")
        ax.set_xticks(range(4), [f"{i}" for i in range(1, 5)])
        ax.set_yticks(range(4), [f"{i}" for i in range(1, 5)])
        ax.set_title(f"$\\chi$ = {c:g}")
        ax.grid(False)
    paths.append(_save(fig, out / "rates.svg"))
    return paths


_PLOTTERS = {
    "relax": plot_relax,
    "steady": plot_steady,
    "drive": plot_drive,
    "spectrum": plot_spectrum,
    "rates": plot_rates,
}


def plot_result(cfg, result, out: Path) -> list[Path]:
    return _PLOTTERS[cfg.scenario](cfg, result, Path(out))
