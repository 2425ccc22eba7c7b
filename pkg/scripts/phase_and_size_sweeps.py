"""Sweep the triple-point coordinates against drive phase and cat size.

Writes results/sweep_theta.csv (phase sweep at fixed cat size, showing the
divergence and disappearance near theta = pi/2) and results/sweep_size.csv
(normalized coordinates against |eps2|/kappa2).

Usage: python scripts/phase_and_size_sweeps.py [--plot]
"""

import argparse
import math
import pathlib

import numpy as np

import catlep as cl

KAPPA = 6.48e-3
ALPHA0 = math.sqrt(2 * 0.93)
THETA0 = 1.5 * math.pi
HEADER = "sweep_var,eps_abs,delta_abs,eps_norm,delta_norm,exists"


def write_table(path, table):
    rows = zip(table["sweep_var"], table["eps_abs"], table["delta_abs"],
               table["eps_norm"], table["delta_norm"], table["exists"])
    lines = [HEADER]
    for var, ea, da, en, dn, ex in rows:
        lines.append(f"{var!r},{ea!r},{da!r},{en!r},{dn!r},"
                     f"{'true' if ex else 'false'}")
    path.write_text("\n".join(lines) + "\n")
    print(f"wrote {path}")


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--outdir", default="results")
    parser.add_argument("--plot", action="store_true")
    args = parser.parse_args()
    outdir = pathlib.Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    theta_grid = np.linspace(0.0, 2.0 * math.pi, 2001)
    theta_table = cl.lep3_sweep("theta", theta_grid, (ALPHA0, THETA0), KAPPA)
    write_table(outdir / "sweep_theta.csv", theta_table)

    size_grid = np.linspace(0.3, 2.0, 171)
    size_table = cl.lep3_sweep("eps2_ratio", size_grid, (ALPHA0, THETA0),
                               KAPPA)
    write_table(outdir / "sweep_size.csv", size_table)

    if args.plot:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
        ax1.semilogy(theta_grid / math.pi, theta_table["eps_norm"],
                     label="drive")
        ax1.semilogy(theta_grid / math.pi, theta_table["delta_norm"],
                     label="detuning")
        ax1.set_xlabel("phase / pi")
        ax1.set_ylabel("normalized coordinate")
        ax1.legend()
        ax2.plot(size_grid, size_table["eps_norm"], label="drive")
        ax2.plot(size_grid, size_table["delta_norm"], label="detuning")
        ax2.set_xlabel("|eps2| / kappa2")
        ax2.legend()
        fig.tight_layout()
        fig.savefig(outdir / "sweeps.png", dpi=160)
        print(f"wrote {outdir / 'sweeps.png'}")


if __name__ == "__main__":
    main()
