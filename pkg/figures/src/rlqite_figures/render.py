"""The six figure kinds, all strictly read-only over validated tables.

Vector output is byte-stable: a fixed svg.hashsalt replaces matplotlib's
per-process element ids and the creation date is stripped, so re-rendering
the same inputs reproduces the same file.
"""

import os
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .schema import SchemaError, load_table

_BASE_RC = {
    "svg.hashsalt": "rlqite-figures",
    "font.family": "DejaVu Sans",
    "figure.autolayout": True,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "legend.framealpha": 0.9,
}

STYLES = {
    "default": dict(_BASE_RC),
    "paper": {
        **_BASE_RC,
        "font.size": 9,
        "axes.labelsize": 10,
        "axes.titlesize": 10,
        "legend.fontsize": 8,
        "xtick.labelsize": 8,
        "ytick.labelsize": 8,
        "lines.linewidth": 1.4,
        "lines.markersize": 4,
        "axes.grid": False,
        "axes.spines.top": False,
        "axes.spines.right": False,
        "legend.frameon": False,
    },
}

# stable series order and colors across figures
_SCHEME_ORDER = ["standard", "randomized", "replay", "trained"]
_SCHEME_COLOR = {
    "standard": "C0",
    "randomized": "C1",
    "replay": "C2",
    "trained": "C3",
}


@dataclass(frozen=True)
class PlotJob:
    kind: str
    inputs: tuple
    out: str
    style: str = "default"


def _scheme_series(tables, y_column):
    """(scheme, betas, values) triples pooled over the input tables,
    sorted by beta within a scheme, schemes in stable order."""
    pooled = {}
    for table in tables:
        schemes = table.column("scheme", cast=str)
        betas = table.column("beta")
        values = table.column(y_column)
        for scheme, beta, value in zip(schemes, betas, values):
            pooled.setdefault(scheme, []).append((beta, value))
    order = [s for s in _SCHEME_ORDER if s in pooled]
    order += sorted(set(pooled) - set(order))
    out = []
    for scheme in order:
        pts = sorted(pooled[scheme])
        out.append((scheme, np.array([p[0] for p in pts]), np.array([p[1] for p in pts])))
    return out


def _ground_line(ax, tables, label="ground state"):
    for table in tables:
        if "e_gs" in table.manifest:
            ax.axhline(float(table.manifest["e_gs"]), color="black",
                       linestyle="--", linewidth=1.0, label=label)
            return


def _legend(ax):
    if ax.get_legend_handles_labels()[0]:
        ax.legend()


def _plot_scheme_panel(ax, tables, y_column, ylabel):
    for scheme, betas, values in _scheme_series(tables, y_column):
        ax.plot(betas, values, marker="o", color=_SCHEME_COLOR.get(scheme),
                label=scheme)
    ax.set_xlabel(r"$\beta$")
    ax.set_ylabel(ylabel)


def _beta_curves(tables):
    fig, (ax_e, ax_f) = plt.subplots(1, 2, figsize=(7.2, 2.9))
    _plot_scheme_panel(ax_e, tables, "E", "energy")
    _ground_line(ax_e, [t for t in tables if t.rows])
    _legend(ax_e)
    _plot_scheme_panel(ax_f, tables, "fidelity", "fidelity to ground state")
    return fig


def _sk_beta(tables):
    fig, (ax_e, ax_p) = plt.subplots(1, 2, figsize=(7.2, 2.9))
    _plot_scheme_panel(ax_e, tables, "E", "energy")
    _ground_line(ax_e, [t for t in tables if t.rows])
    _legend(ax_e)
    _plot_scheme_panel(ax_p, tables, "P_gs", "ground-state probability")
    ax_p.set_ylim(-0.05, 1.05)
    return fig


def _alg_error(tables):
    fig, ax = plt.subplots(figsize=(4.6, 3.0))
    for table in tables:
        if not table.rows:
            continue
        label = table.manifest.get("scheme", os.path.basename(table.path))
        ax.plot(table.column("k", cast=int), table.column("alg_error"),
                color=_SCHEME_COLOR.get(label), label=label)
    ax.set_xlabel("operation k")
    ax.set_ylabel("algorithmic error")
    _legend(ax)
    return fig


def _scaling(tables):
    # the inset is placed by hand, so keep this figure off autolayout
    fig, ax = plt.subplots(figsize=(4.8, 3.4))
    fig.set_layout_engine("none")
    fig.subplots_adjust(left=0.15, right=0.96, bottom=0.13, top=0.95)
    populated = [t for t in tables if t.rows]
    for first, table in zip([True] + [False] * len(populated), populated):
        n = table.column("N")
        ax.plot(n, table.column("E_std"), marker="o", color="C0",
                label="standard" if first else None)
        ax.plot(n, table.column("E_RL"), marker="s", color="C2",
                label="RL" if first else None)
    ax.set_xlabel("number of qubits N")
    ax.set_ylabel("energy")
    if populated:
        ax.legend(loc="lower left")
    inset = fig.add_axes([0.62, 0.62, 0.27, 0.25])
    for table in populated:
        inset.plot(table.column("N"), table.column("ratio"), marker="d",
                   color="C3")
    inset.set_ylabel(r"$E_{RL}/E_{std}$", fontsize=8)
    inset.tick_params(labelsize=7)
    return fig


def _learning_curve(tables):
    fig, ax = plt.subplots(figsize=(5.2, 3.2))
    ax_e = ax.twinx()
    populated = [t for t in tables if t.rows]
    many = len(populated) > 1
    for table in populated:
        suffix = f" ({os.path.basename(table.path)})" if many else ""
        iterations = table.column("iteration", cast=int)
        ax.plot(iterations, table.column("mean_reward"), color="C0",
                label="mean reward" + suffix)
        ax_e.plot(iterations, table.column("best_E"), color="C3",
                  label="best energy" + suffix)
    for key, color, label in (("e_std", "gray", "standard ordering"),
                              ("e_gs", "black", "ground state")):
        for table in populated:
            if key in table.manifest:
                ax_e.axhline(float(table.manifest[key]), color=color,
                             linestyle="--", linewidth=1.0, label=label)
                break
    ax.set_xlabel("iteration")
    ax.set_ylabel("mean reward")
    ax_e.set_ylabel("energy")
    handles = ax.get_legend_handles_labels()
    handles_e = ax_e.get_legend_handles_labels()
    if handles[0] or handles_e[0]:
        ax.legend(handles[0] + handles_e[0], handles[1] + handles_e[1],
                  loc="center right")
    return fig


def _hamming(tables):
    fig, ax = plt.subplots(figsize=(3.8, 3.4))
    table = tables[0]
    names = table.header[1:]
    if table.rows:
        matrix = np.array([[int(cell) for cell in row[1:]] for row in table.rows])
        image = ax.imshow(matrix, cmap="viridis")
        fig.colorbar(image, ax=ax, label="Hamming distance")
        threshold = matrix.max() / 2 if matrix.size else 0
        for i in range(matrix.shape[0]):
            for j in range(matrix.shape[1]):
                color = "white" if matrix[i, j] < threshold else "black"
                ax.text(j, i, str(matrix[i, j]), ha="center", va="center",
                        color=color, fontsize=8)
        ax.set_xticks(range(len(names)), names)
        ax.set_yticks(range(len(table.rows)), [row[0] for row in table.rows])
    ax.set_xlabel("protocol")
    return fig


# kind -> (schema the inputs must declare, renderer)
KINDS = {
    "beta-curves": ("run-summary", _beta_curves),
    "alg-error": ("qite-trace", _alg_error),
    "sk-beta": ("run-summary", _sk_beta),
    "scaling": ("scaling", _scaling),
    "learning-curve": ("learning-curve", _learning_curve),
    "hamming": ("hamming-matrix", _hamming),
}


def render(job: PlotJob) -> None:
    """Validate the job's inputs and write the figure to job.out."""
    if job.kind not in KINDS:
        raise SchemaError(f"unknown figure kind '{job.kind}'")
    if job.style not in STYLES:
        raise SchemaError(f"unknown style '{job.style}'")
    if not job.inputs:
        raise SchemaError("no input tables")
    schema, renderer = KINDS[job.kind]
    tables = [load_table(path, schema) for path in job.inputs]
    with plt.rc_context(STYLES[job.style]):
        fig = renderer(tables)
        try:
            if job.out.endswith(".svg"):
                fig.savefig(job.out, metadata={"Date": None})
            else:
                fig.savefig(job.out)
        finally:
            plt.close(fig)
