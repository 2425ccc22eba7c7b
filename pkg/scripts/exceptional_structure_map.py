"""Map the exceptional structure in the drive-detuning plane.

Writes plot-ready CSV files into results/: zero contours of the resultant
pair for several two-photon drive phases, plus normalized resultant-vector
trajectories and winding numbers for a loop enclosing the triple point and
a shifted loop that misses it.

Usage: python scripts/exceptional_structure_map.py [--plot]
"""

import argparse
import json
import math
import pathlib

import numpy as np

import catlep as cl

KAPPA = 6.48e-3
EPS2 = 0.93
THETA0 = 1.5 * math.pi
PHASES = {"theta_3pi2": THETA0, "theta_0": 0.0, "theta_pi2": 0.5 * math.pi,
          "theta_5pi4": 1.25 * math.pi}


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--outdir", default="results")
    parser.add_argument("--grid", type=int, default=401)
    parser.add_argument("--plot", action="store_true")
    args = parser.parse_args()
    outdir = pathlib.Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    base = cl.SystemParams(kappa=KAPPA, eps2_mag=EPS2, theta=THETA0)
    manifold = cl.derive_cat_manifold(base)
    eps_ref, delta_ref = cl.lep3_real_alpha(manifold, KAPPA)

    for label, theta in PHASES.items():
        params = cl.SystemParams(kappa=KAPPA, eps2_mag=EPS2, theta=theta)
        grid = cl.GridSpec(eps_range=(0.0, 2.0 * eps_ref), eps_count=args.grid,
                           delta_range=(0.0, 2.0 * delta_ref),
                           delta_count=args.grid)
        lines = ["contour_id,which,eps_norm,delta_norm"]
        for which in ("R1", "R2"):
            for cid, poly in enumerate(cl.zero_contours(grid, which, params)):
                for eps, delta in poly:
                    lines.append(f"{which}-{cid},{which},"
                                 f"{eps / eps_ref!r},{delta / delta_ref!r}")
        path = outdir / f"contours_{label}.csv"
        path.write_text("\n".join(lines) + "\n")
        print(f"wrote {path} ({len(lines) - 1} vertices)")

    loops = {
        "enclosing": cl.LoopSpec(center=(eps_ref, delta_ref),
                                 radii=(0.4 * eps_ref, 0.4 * delta_ref),
                                 samples=256),
        "shifted": cl.LoopSpec(center=(1.5 * eps_ref, delta_ref),
                               radii=(0.4 * eps_ref, 0.4 * delta_ref),
                               samples=256),
    }
    summary = {}
    for label, loop in loops.items():
        traj = cl.trajectory(loop, base)
        path = outdir / f"trajectory_{label}.csv"
        lines = ["phi,r1_normalized,r2_normalized"]
        lines += [f"{row[0]!r},{row[1]!r},{row[2]!r}" for row in traj]
        path.write_text("\n".join(lines) + "\n")
        result = cl.winding_number(loop, base)
        summary[label] = {"w": result.w, "confidence": result.confidence,
                          "samples_used": result.samples_used}
        print(f"wrote {path}; winding {result.w} ({result.confidence})")
    (outdir / "winding_summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n")

    if args.plot:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fig, axes = plt.subplots(1, len(PHASES), figsize=(16, 4), sharey=True)
        for ax, (label, theta) in zip(axes, PHASES.items()):
            params = cl.SystemParams(kappa=KAPPA, eps2_mag=EPS2, theta=theta)
            grid = cl.GridSpec(eps_range=(0.0, 2.0 * eps_ref),
                               eps_count=args.grid,
                               delta_range=(0.0, 2.0 * delta_ref),
                               delta_count=args.grid)
            for which, color in (("R1", "tab:blue"), ("R2", "tab:red")):
                for poly in cl.zero_contours(grid, which, params):
                    ax.plot(poly[:, 0] / eps_ref, poly[:, 1] / delta_ref,
                            color=color, lw=1)
            ax.set_title(label)
            ax.set_xlabel("drive / reference")
        axes[0].set_ylabel("detuning / reference")
        fig.tight_layout()
        fig.savefig(outdir / "contours.png", dpi=160)
        print(f"wrote {outdir / 'contours.png'}")


if __name__ == "__main__":
    main()
