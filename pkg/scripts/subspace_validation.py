"""Fidelity between the projected logical dynamics and the full model.

Scans detuning (normalized to the triple-point detuning) against time and
writes results/fidelity_surface.csv plus a JSON summary with the global
minimum and the truncation-doubling check.

Usage: python scripts/subspace_validation.py [--delta-count N] [--plot]
"""

import argparse
import json
import math
import pathlib

import numpy as np

import catlep as cl


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--outdir", default="results")
    parser.add_argument("--delta-count", type=int, default=21)
    parser.add_argument("--t-count", type=int, default=201)
    parser.add_argument("--t-max", type=float, default=20.0)
    parser.add_argument("--doubling", choices=("none", "ends_mid", "all"),
                        default="ends_mid")
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--plot", action="store_true")
    args = parser.parse_args()
    outdir = pathlib.Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    params = cl.SystemParams(kappa=6.48e-3, eps=6.94e-3, eps2_mag=0.93,
                             theta=1.5 * math.pi)
    result = cl.subspace_fidelity_scan(
        params,
        np.linspace(0.0, 1.0, args.delta_count),
        np.linspace(0.0, args.t_max, args.t_count),
        doubling=args.doubling,
        threads=args.threads,
    )

    lines = ["delta_norm,kappa2_t,fidelity"]
    for i, dn in enumerate(result.delta_norm):
        for k, t in enumerate(result.t_grid):
            lines.append(f"{dn!r},{t!r},{result.fidelity[i, k]!r}")
    surface = outdir / "fidelity_surface.csv"
    surface.write_text("\n".join(lines) + "\n")
    summary = {
        "min_fidelity": result.min_fidelity,
        "argmin": {"delta_norm": result.argmin[0], "kappa2_t": result.argmin[1]},
        "dim": result.dim,
        "dim_doubled_check": result.dim_doubled_check,
    }
    (outdir / "fidelity_summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(f"wrote {surface}")
    print(json.dumps(summary, indent=2, sort_keys=True))

    if args.plot:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fig, ax = plt.subplots(figsize=(5, 4))
        mesh = ax.pcolormesh(result.t_grid, result.delta_norm, result.fidelity,
                             shading="nearest", vmin=result.min_fidelity)
        fig.colorbar(mesh, ax=ax, label="fidelity")
        ax.set_xlabel("kappa2 t")
        ax.set_ylabel("detuning / reference")
        fig.tight_layout()
        fig.savefig(outdir / "fidelity_surface.png", dpi=160)
        print(f"wrote {outdir / 'fidelity_surface.png'}")


if __name__ == "__main__":
    main()
