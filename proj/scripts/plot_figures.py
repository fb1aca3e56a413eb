"""Plot relarb_cli CSV output.

    python scripts/plot_figures.py OUT_DIR [--save DIR]

Looks for surface.csv, upath.csv and trajectories.csv in OUT_DIR and draws
whatever it finds: the u surface over (x1, x2), u along a path with a 2-SE
band, and the stored market-weight trajectories of the boundary experiment.
"""

import argparse
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd


def read(path):
    return pd.read_csv(path, comment="#")


def plot_surface(df, ax):
    grid = df.pivot(index="x2", columns="x1", values="u")
    x1, x2 = grid.columns.values, grid.index.values
    mesh = ax.pcolormesh(x1, x2, grid.values, shading="nearest")
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    ax.set_title("u(0, x)")
    ax.figure.colorbar(mesh, ax=ax)


def plot_upath(df, ax):
    ax.plot(df["t"], df["u"], lw=1)
    ax.fill_between(df["t"], df["u"] - 2 * df["std_err"], df["u"] + 2 * df["std_err"], alpha=0.3)
    ax.set_xlabel("t")
    ax.set_ylabel("u(T - t, X_t)")


def plot_trajectories(df, ax):
    for _, p in df.groupby("path_id"):
        ax.plot(p["t"], p["z1"], lw=0.7, color="tab:red" if p["hit"].iloc[0] else "tab:blue")
    ax.set_xlabel("t")
    ax.set_ylabel("market weight z1")


PLOTS = {
    "surface.csv": plot_surface,
    "upath.csv": plot_upath,
    "trajectories.csv": plot_trajectories,
}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("out_dir", type=Path)
    ap.add_argument("--save", type=Path, default=None, help="directory for PNGs (default: out_dir)")
    args = ap.parse_args()
    save = args.save or args.out_dir
    save.mkdir(parents=True, exist_ok=True)

    drawn = 0
    for name, draw in PLOTS.items():
        path = args.out_dir / name
        if not path.exists():
            continue
        fig, ax = plt.subplots(figsize=(6, 4.5))
        draw(read(path), ax)
        fig.tight_layout()
        fig.savefig(save / (path.stem + ".png"), dpi=120)
        plt.close(fig)
        drawn += 1
    if drawn == 0:
        raise SystemExit(f"no known CSV files in {args.out_dir}")


if __name__ == "__main__":
    main()
