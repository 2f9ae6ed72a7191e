#!/usr/bin/env python3
"""Render the (lambda, tau) validation-F1 surface from a tune result.

    cascadescan tune --corpus corpus.jsonl --out tune.json
    python scripts/plot_grid_surface.py tune.json --out surface.png
"""

import argparse
import json

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("tune_json")
    ap.add_argument("--out", default="surface.png")
    args = ap.parse_args()

    with open(args.tune_json, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    lambdas = doc["grid_lambdas"]
    taus = doc["grid_taus"]
    surface = np.array([[np.nan if v is None else v for v in row]
                        for row in doc["surface"]])

    fig, ax = plt.subplots(figsize=(7, 6))
    mesh = ax.pcolormesh(taus, lambdas, surface, shading="nearest",
                         vmin=0.0, vmax=1.0, cmap="viridis")
    fig.colorbar(mesh, ax=ax, label="mean inner-validation F1")
    ax.plot(doc["best_tau"], doc["best_lambda"], "r*", markersize=14,
            label=f"selected ({doc['best_lambda']}, {doc['best_tau']})")
    for lam, tau in doc.get("fold_points", []):
        ax.plot(tau, lam, "wx", markersize=8)
    ax.set_xlabel("tau (flagging threshold)")
    ax.set_ylabel("lambda (core-side weight)")
    ax.set_title("validation F1 over the (lambda, tau) lattice")
    ax.legend(loc="lower left")
    fig.tight_layout()
    fig.savefig(args.out, dpi=130)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
