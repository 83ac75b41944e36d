"""Figure rendering for CLI reports.

Every renderer takes already-computed rows (the same data that lands in the
CSV) and writes a PNG next to it.  The CSV stays the contract; figures are a
convenience layer and can be disabled with --no-figures.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .terrain import HeightField


def render_terrain(field: HeightField, path: str) -> None:
    fig, ax = plt.subplots(figsize=(8, 3))
    extent = (
        field.origin[0],
        field.origin[0] + field.n_cols * field.cell_size,
        field.origin[1],
        field.origin[1] + field.n_rows * field.cell_size,
    )
    im = ax.imshow(field._grid, origin="lower", extent=extent, aspect="equal", cmap="terrain")
    fig.colorbar(im, ax=ax, label="height (m)")
    ax.set_xlabel("x (m)")
    ax.set_ylabel("y (m)")
    ax.set_title("block height field")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_run(rows, path: str) -> None:
    """rows: (cycle_index, v_f, v_l, beta, dx, dy)."""
    rows = np.asarray(rows, dtype=float)
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 5), sharex=True)
    ax1.plot(rows[:, 0], rows[:, 1], "o-", label="v_f")
    ax1.plot(rows[:, 0], rows[:, 2], "s--", label="v_l")
    ax1.set_ylabel("m / cycle")
    ax1.legend()
    ax2.plot(rows[:, 0], rows[:, 3], "o-", color="tab:green")
    ax2.set_ylim(0, 1.05)
    ax2.set_ylabel("contact ratio")
    ax2.set_xlabel("cycle")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_sweep(rows, path: str) -> None:
    """rows: (a_v_deg, terrain label, seed, v_f_bar, beta_bar, status)."""
    by_terrain: dict[str, dict[float, list[float]]] = {}
    for a_v, terrain, _seed, v_f, _beta, status in rows:
        if status != "ok":
            continue
        by_terrain.setdefault(str(terrain), {}).setdefault(float(a_v), []).append(float(v_f))
    fig, ax = plt.subplots(figsize=(6, 4))
    for label in sorted(by_terrain):
        pts = sorted(by_terrain[label].items())
        xs = [p[0] for p in pts]
        ys = [float(np.mean(p[1])) for p in pts]
        ax.plot(xs, ys, "o-", label=label)
    ax.set_xlabel("A_v (deg)")
    ax.set_ylabel("mean v_f (m / cycle)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_curve(rows, path: str) -> None:
    """rows: (update, mean_reward, surrogate, value_loss, entropy, sigma)."""
    rows = np.asarray(rows, dtype=float)
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 5), sharex=True)
    if rows.size:
        ax1.plot(rows[:, 0], rows[:, 1], color="tab:blue")
        ax2.plot(rows[:, 0], rows[:, 3], color="tab:orange", label="value loss")
        ax2.plot(rows[:, 0], rows[:, 4], color="tab:green", label="entropy")
    ax1.set_ylabel("mean reward")
    ax2.set_xlabel("update")
    ax2.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_eval(rows, path: str) -> None:
    """rows: (controller, sigma_cm, mean_v_f, ci95, mean_reward, mean_beta, runs)."""
    controllers = sorted({r[0] for r in rows})
    sigmas = sorted({float(r[1]) for r in rows})
    fig, ax = plt.subplots(figsize=(7, 4))
    width = 0.8 / max(len(controllers), 1)
    for k, ctrl in enumerate(controllers):
        xs, ys, errs = [], [], []
        for i, sg in enumerate(sigmas):
            for r in rows:
                if r[0] == ctrl and float(r[1]) == sg:
                    xs.append(i + k * width)
                    ys.append(float(r[2]))
                    errs.append(float(r[3]))
        ax.bar(xs, ys, width=width, yerr=errs, capsize=3, label=ctrl)
    ax.set_xticks([i + width * (len(controllers) - 1) / 2 for i in range(len(sigmas))])
    ax.set_xticklabels([f"{sg:g}" for sg in sigmas])
    ax.set_xlabel("sigma (cm)")
    ax.set_ylabel("mean v_f (m / cycle)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
