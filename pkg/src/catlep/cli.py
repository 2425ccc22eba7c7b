"""Command-line surface: spectrum, contours, winding, lep3, sweep, validate, params.

All numeric flags are in units of kappa2 unless --absolute-hz is given, in
which case they are absolute frequencies (any consistent unit) normalized
internally.  Outputs are plot-ready CSV or JSON; identical configuration
and seed produce byte-identical files.

Exit codes: 0 success, 2 usage/validation error, 3 I/O error, 4 numerical
failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from dataclasses import dataclass

import numpy as np

from . import fock_engine
from .ep_locator import lep2_zero_drive, lep3_locus, lep3_sweep, reference_lep3, refine_lep3
from .logical_liouvillian import ConvergenceError, build_matrix, closed_form_spectrum
from .params import SystemParams, confinement_rate, derive_cat_manifold
from .resultant_topology import (
    GridSpec,
    LoopSpec,
    resultants,
    trajectory,
    winding_number,
    zero_contours,
)

DEFAULT_ALPHA0 = 1.36
DEFAULT_THETA0 = 1.5 * math.pi

_NORMALIZED_KEYS = ("kappa", "kappa2", "eps", "delta", "eps2_mag", "theta")
_ABSOLUTE_KEYS = ("kappa_hz", "kappa2_hz", "eps_hz", "delta_hz", "eps2_mag_hz",
                  "theta")


@dataclass(frozen=True)
class RunConfig:
    """Resolved run configuration: parameters, normalization reference, output."""

    params: SystemParams
    alpha0: float
    theta0: float
    out: str | None
    fmt: str
    seed: int
    threads: int


def _params_from_config(data: dict) -> SystemParams:
    mode = data.get("mode")
    if mode not in ("normalized", "absolute_hz"):
        raise ValueError("config must carry mode 'normalized' or 'absolute_hz'")
    if mode == "normalized":
        forbidden = [k for k in _ABSOLUTE_KEYS if k != "theta" and k in data]
        if forbidden:
            raise ValueError(f"normalized config cannot carry {forbidden}")
        fields = {k: data[k] for k in _NORMALIZED_KEYS if k in data}
        return SystemParams(**fields)
    forbidden = [k for k in _NORMALIZED_KEYS if k != "theta" and k in data]
    if forbidden:
        raise ValueError(f"absolute_hz config cannot carry {forbidden}")
    if "kappa2_hz" not in data:
        raise ValueError("absolute_hz config requires kappa2_hz")
    fields = {k: data[k] for k in _ABSOLUTE_KEYS if k in data}
    return SystemParams.from_absolute(**fields)


def _resolve_config(args) -> RunConfig:
    if args.config is not None:
        explicit = [f for f in ("kappa", "kappa2", "eps", "delta", "eps2", "theta")
                    if getattr(args, f, None) is not None]
        if explicit:
            raise ValueError(
                f"--config conflicts with parameter flags {explicit}; "
                "use one or the other"
            )
        with open(args.config) as fh:
            data = json.load(fh)
        params = _params_from_config(data)
        alpha0 = data.get("alpha0", DEFAULT_ALPHA0)
        theta0 = data.get("theta0", DEFAULT_THETA0)
        seed = data.get("seed", args.seed)
    else:
        values = {
            "kappa": args.kappa if args.kappa is not None else 6.48e-3,
            "kappa2": args.kappa2 if args.kappa2 is not None else 1.0,
            "eps": args.eps if args.eps is not None else 6.94e-3,
            "delta": args.delta if args.delta is not None else 0.0,
            "eps2_mag": args.eps2 if args.eps2 is not None else 0.93,
            "theta": args.theta if args.theta is not None else DEFAULT_THETA0,
        }
        if args.absolute_hz:
            params = SystemParams.from_absolute(
                kappa_hz=values["kappa"], kappa2_hz=values["kappa2"],
                eps_hz=values["eps"], delta_hz=values["delta"],
                eps2_mag_hz=values["eps2_mag"], theta=values["theta"])
        else:
            params = SystemParams(**values)
        alpha0 = args.alpha0
        theta0 = args.theta0
        seed = args.seed
    return RunConfig(params=params, alpha0=alpha0, theta0=theta0,
                     out=args.out, fmt=args.format, seed=seed,
                     threads=args.threads)


def _params_dict(params: SystemParams) -> dict:
    return {
        "kappa": float(params.kappa),
        "kappa2": float(params.kappa2),
        "eps": float(params.eps),
        "delta": float(params.delta),
        "eps2_mag": float(params.eps2_mag),
        "theta": float(params.theta),
    }


def _write_text(out: str | None, text: str):
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="\n") as fh:
            fh.write(text)


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _csv_text(header: list, rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for x in row:
            if isinstance(x, (bool, np.bool_)):
                cells.append("true" if x else "false")
            elif isinstance(x, (int, np.integer)):
                cells.append(str(int(x)))
            elif isinstance(x, str):
                cells.append(x)
            else:
                cells.append(repr(float(x)))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_spectrum(config: RunConfig) -> int:
    params = config.params
    manifold = derive_cat_manifold(params)
    spec = closed_form_spectrum(params, manifold)
    pair = resultants(spec)
    lio = build_matrix(params, manifold)
    trace_check = float(np.max(np.abs(lio.m[0] + lio.m[3])))
    conj_defect = 0.0
    ev = np.array(spec.e)
    for e in ev:
        conj_defect = max(conj_defect, float(np.min(np.abs(ev - np.conj(e)))))
    payload = {
        "params": _params_dict(params),
        "seed": config.seed,
        "eigenvalues": [[float(e.real), float(e.imag)] for e in ev],
        "q": spec.q,
        "m": spec.m_coef,
        "r1": pair.r1,
        "r2": pair.r2,
        "trace_check": trace_check,
        "conjugation_check": conj_defect,
    }
    if config.fmt == "json":
        _write_text(config.out, _json_text(payload))
    else:
        rows = [[f"E{k+1}", ev[k].real, ev[k].imag] for k in range(4)]
        rows += [["q", spec.q, 0.0], ["m", spec.m_coef, 0.0],
                 ["R1", pair.r1, 0.0], ["R2", pair.r2, 0.0]]
        _write_text(config.out, _csv_text(["quantity", "real", "imag"], rows))
    return 0


def cmd_contours(config: RunConfig, args) -> int:
    params = config.params
    eps_ref, delta_ref = reference_lep3(config.alpha0, config.theta0,
                                        params.kappa, params.kappa2)
    se = 1.0 if args.raw_units else eps_ref
    sd = 1.0 if args.raw_units else delta_ref
    grid = GridSpec(
        eps_range=(args.eps_min * se, args.eps_max * se),
        eps_count=args.eps_count,
        delta_range=(args.delta_min * sd, args.delta_max * sd),
        delta_count=args.delta_count,
    )
    rows = []
    for which in ("R1", "R2"):
        for cid, poly in enumerate(zero_contours(grid, which, params)):
            for eps, delta in poly:
                rows.append([f"{which}-{cid}", which, eps / se, delta / sd])
    if config.fmt == "json":
        payload = {
            "params": _params_dict(params),
            "normalized": not args.raw_units,
            "vertices": [
                {"contour_id": r[0], "which": r[1], "eps": float(r[2]),
                 "delta": float(r[3])} for r in rows
            ],
        }
        _write_text(config.out, _json_text(payload))
    else:
        _write_text(config.out,
                    _csv_text(["contour_id", "which", "eps", "delta"], rows))
    return 0


def cmd_winding(config: RunConfig, args) -> int:
    params = config.params
    eps_ref, delta_ref = reference_lep3(config.alpha0, config.theta0,
                                        params.kappa, params.kappa2)
    se = 1.0 if args.raw_units else eps_ref
    sd = 1.0 if args.raw_units else delta_ref
    loop = LoopSpec(
        center=(args.center_eps * se, args.center_delta * sd),
        radii=(args.radius_eps * se, args.radius_delta * sd),
        samples=args.samples,
    )
    result = winding_number(loop, params, orientation=args.orientation)
    payload = {
        "loop": {
            "center": [loop.center[0], loop.center[1]],
            "radii": [loop.radii[0], loop.radii[1]],
            "samples": loop.samples,
            "orientation": args.orientation,
        },
        "samples_used": result.samples_used,
        "w": result.w,
        "min_R_norm": result.min_r_norm,
        "confidence": result.confidence,
    }
    if config.fmt == "json":
        _write_text(config.out, _json_text(payload))
    else:
        traj = trajectory(loop, params, orientation=args.orientation)
        _write_text(config.out, _csv_text(["phi", "r1_normalized", "r2_normalized"],
                                          traj))
        sys.stderr.write(_json_text(payload))
    return 0


def cmd_lep3(config: RunConfig, args) -> int:
    params = config.params
    manifold = derive_cat_manifold(params)
    eps_ref, delta_ref = reference_lep3(config.alpha0, config.theta0,
                                        params.kappa, params.kappa2)
    locus = lep3_locus(manifold, params.theta, params.kappa)
    payload = {
        "params": _params_dict(params),
        "eps_abs": locus.eps_abs,
        "delta_abs": locus.delta_abs,
        "d_theta": locus.d_theta,
        "exists": locus.exists,
        "eps_norm": locus.eps_abs / eps_ref,
        "delta_norm": locus.delta_abs / delta_ref,
    }
    if args.refine:
        if not locus.exists:
            raise ConvergenceError("cannot refine: no exceptional point exists "
                                   "at these parameters")
        refined = refine_lep3((locus.eps_abs, locus.delta_abs), params)
        payload["refined"] = {
            "eps": float(refined.eps),
            "delta": float(refined.delta),
            "residual": refined.residual,
            "iterations": refined.iterations,
        }
    _write_text(config.out, _json_text(payload))
    return 0


def cmd_sweep(config: RunConfig, args) -> int:
    params = config.params
    values = np.linspace(args.start, args.stop, args.count)
    table = lep3_sweep(args.variable, values, (config.alpha0, config.theta0),
                       params.kappa, params.kappa2)
    rows = list(zip(table["sweep_var"], table["eps_abs"], table["delta_abs"],
                    table["eps_norm"], table["delta_norm"], table["exists"]))
    header = ["sweep_var", "eps_abs", "delta_abs", "eps_norm", "delta_norm",
              "exists"]
    if config.fmt == "json":
        payload = {
            "variable": args.variable,
            "rows": [
                {h: (bool(v) if h == "exists" else float(v))
                 for h, v in zip(header, row)}
                for row in rows
            ],
        }
        _write_text(config.out, _json_text(payload))
    else:
        _write_text(config.out, _csv_text(header, rows))
    return 0


def cmd_validate(config: RunConfig, args) -> int:
    params = config.params
    delta_norm = np.linspace(0.0, args.delta_max, args.delta_count)
    t_grid = np.linspace(0.0, args.t_max, args.t_count)
    result = fock_engine.subspace_fidelity_scan(
        params, delta_norm, t_grid, dim=args.dim,
        doubling=args.doubling, threads=config.threads,
    )
    summary = {
        "min_fidelity": result.min_fidelity,
        "argmin": {"delta_norm": result.argmin[0], "kappa2_t": result.argmin[1]},
        "dim": result.dim,
        "dim_doubled_check": result.dim_doubled_check,
    }
    rows = [
        [result.delta_norm[i], result.t_grid[k], result.fidelity[i, k]]
        for i in range(result.delta_norm.size)
        for k in range(result.t_grid.size)
    ]
    if config.fmt == "json":
        payload = dict(summary)
        payload["params"] = _params_dict(params)
        payload["table"] = [
            {"delta_norm": float(r[0]), "kappa2_t": float(r[1]),
             "fidelity": float(r[2])} for r in rows
        ]
        _write_text(config.out, _json_text(payload))
    else:
        _write_text(config.out,
                    _csv_text(["delta_norm", "kappa2_t", "fidelity"], rows))
        sys.stderr.write(_json_text(summary))
    return 0


def cmd_params(config: RunConfig) -> int:
    params = config.params
    manifold = derive_cat_manifold(params)
    eps_ref, delta_ref = reference_lep3(config.alpha0, config.theta0,
                                        params.kappa, params.kappa2)
    payload = {
        "params": _params_dict(params),
        "alpha": [manifold.alpha.real, manifold.alpha.imag],
        "alpha_mag": manifold.alpha_mag,
        "phi_alpha": manifold.phi_alpha,
        "p": manifold.p,
        "p_comb": {f"{j}{s}": v for (j, s), v in sorted(manifold.p_comb.items())},
        "confinement_rate": confinement_rate(params, manifold),
        "lep2_zero_drive_delta": lep2_zero_drive(params, manifold),
        "reference": {"alpha0": config.alpha0, "theta0": config.theta0,
                      "eps_ref": eps_ref, "delta_ref": delta_ref},
        "fock_dim": fock_engine.choose_dim(manifold.alpha_mag),
    }
    _write_text(config.out, _json_text(payload))
    return 0


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------

def _add_common(sub):
    sub.add_argument("--config", help="JSON config file (flat, with 'mode')")
    sub.add_argument("--out", help="output path (default: stdout)")
    sub.add_argument("--format", choices=("csv", "json"), default="json")
    sub.add_argument("--seed", type=int, default=12345)
    sub.add_argument("--threads", type=int, default=1)
    sub.add_argument("--kappa", type=float, help="single-photon loss rate")
    sub.add_argument("--kappa2", type=float, help="two-photon loss rate")
    sub.add_argument("--eps", type=float, help="single-photon drive strength")
    sub.add_argument("--delta", type=float, help="detuning")
    sub.add_argument("--eps2", type=float, help="two-photon drive magnitude")
    sub.add_argument("--theta", type=float, help="two-photon drive phase")
    sub.add_argument("--absolute-hz", action="store_true",
                     help="interpret rate flags as absolute frequencies")
    sub.add_argument("--alpha0", type=float, default=DEFAULT_ALPHA0,
                     help="normalization reference cat size")
    sub.add_argument("--theta0", type=float, default=DEFAULT_THETA0,
                     help="normalization reference phase")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="catlep",
        description="Liouvillian spectra, exceptional points and winding "
                    "topology of a dissipative cat qubit",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    sub = subs.add_parser("spectrum", help="eigenvalues, q, m, R1, R2 at one point")
    _add_common(sub)

    sub = subs.add_parser("contours", help="zero contours of R1 and R2")
    _add_common(sub)
    sub.add_argument("--eps-min", type=float, default=-2.0)
    sub.add_argument("--eps-max", type=float, default=2.0)
    sub.add_argument("--eps-count", type=int, default=401)
    sub.add_argument("--delta-min", type=float, default=-2.0)
    sub.add_argument("--delta-max", type=float, default=2.0)
    sub.add_argument("--delta-count", type=int, default=401)
    sub.add_argument("--raw-units", action="store_true",
                     help="grid in kappa2 units instead of reference units")

    sub = subs.add_parser("winding", help="winding number along a closed loop")
    _add_common(sub)
    sub.add_argument("--center-eps", type=float, default=1.0)
    sub.add_argument("--center-delta", type=float, default=1.0)
    sub.add_argument("--radius-eps", type=float, default=0.4)
    sub.add_argument("--radius-delta", type=float, default=0.4)
    sub.add_argument("--samples", type=int, default=64)
    sub.add_argument("--orientation", type=int, choices=(1, -1), default=1)
    sub.add_argument("--raw-units", action="store_true")

    sub = subs.add_parser("lep3", help="analytic third-order EP coordinates")
    _add_common(sub)
    sub.add_argument("--refine", action="store_true",
                     help="add Newton-refined point to the output")

    sub = subs.add_parser("sweep", help="EP coordinates along a parameter sweep")
    _add_common(sub)
    sub.add_argument("--variable", choices=("theta", "eps2_ratio"),
                     required=True)
    sub.add_argument("--start", type=float, required=True)
    sub.add_argument("--stop", type=float, required=True)
    sub.add_argument("--count", type=int, default=101)

    sub = subs.add_parser("validate",
                          help="fidelity of projected vs full dynamics")
    _add_common(sub)
    sub.add_argument("--delta-max", type=float, default=1.0)
    sub.add_argument("--delta-count", type=int, default=21)
    sub.add_argument("--t-max", type=float, default=20.0)
    sub.add_argument("--t-count", type=int, default=201)
    sub.add_argument("--dim", type=int, default=None)
    sub.add_argument("--doubling", choices=("none", "ends_mid", "all"),
                     default="none")

    sub = subs.add_parser("params", help="derived manifold quantities")
    _add_common(sub)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _resolve_config(args)
        if args.command == "spectrum":
            return cmd_spectrum(config)
        if args.command == "contours":
            return cmd_contours(config, args)
        if args.command == "winding":
            return cmd_winding(config, args)
        if args.command == "lep3":
            return cmd_lep3(config, args)
        if args.command == "sweep":
            return cmd_sweep(config, args)
        if args.command == "validate":
            return cmd_validate(config, args)
        if args.command == "params":
            return cmd_params(config)
        parser.error(f"unknown command {args.command}")
    except (ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    except (ConvergenceError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
