"""Resultant pair (R1, R2), winding numbers, and zero-level contours.

After factoring the steady-state eigenvalue out of the characteristic
polynomial, the remaining cubic has real coefficients, and two real
quantities classify its degeneracies::

    R1 = -(E2-E3)^2 (E2-E4)^2 (E3-E4)^2      (zero at a second-order EP)
    R2 = -8 (E2+E3-2E4)(E2+E4-2E3)(E3+E4-2E2) (zero with R1 at a third-order EP)

R1 > 0 exactly when the spectrum holds a complex-conjugate pair and R1 < 0
when all three nonzero eigenvalues are real.  The integer winding of the
vector (R1, R2) around the origin along a closed loop in the drive-detuning
plane counts enclosed third-order exceptional points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from skimage import measure

from .logical_liouvillian import ConvergenceError, Spectrum, closed_form_eigenvalues
from .params import SystemParams, derive_cat_manifold

# loop is considered to graze an exceptional structure when ||R|| drops
# below this fraction of its loop maximum
GRAZE_TOL = 1e-12


@dataclass(frozen=True)
class ResultantPair:
    """Real resultants and the imaginary residue discarded in forming them."""

    r1: float
    r2: float
    imag_residual: float


@dataclass(frozen=True)
class LoopSpec:
    """Ellipse eps = center[0] + radii[0] cos(phi), delta = center[1] + radii[1] sin(phi)."""

    center: tuple
    radii: tuple
    samples: int = 64

    def __post_init__(self):
        if not (self.radii[0] > 0 and self.radii[1] > 0):
            raise ValueError(f"loop radii must be positive, got {self.radii}")
        if self.samples < 16:
            raise ValueError(f"need at least 16 samples, got {self.samples}")

    def points(self, phi: np.ndarray, orientation: int = 1):
        phi = np.asarray(phi, dtype=float) * orientation
        eps = self.center[0] + self.radii[0] * np.cos(phi)
        delta = self.center[1] + self.radii[1] * np.sin(phi)
        return eps, delta


@dataclass(frozen=True)
class GridSpec:
    """Rectangular evaluation grid in the (eps, delta) plane."""

    eps_range: tuple
    eps_count: int
    delta_range: tuple
    delta_count: int

    def __post_init__(self):
        for lo, hi in (self.eps_range, self.delta_range):
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise ValueError("grid ranges must be finite")
        if self.eps_count < 2 or self.delta_count < 2:
            raise ValueError("grid counts must be at least 2")

    def axes(self):
        return (
            np.linspace(self.eps_range[0], self.eps_range[1], self.eps_count),
            np.linspace(self.delta_range[0], self.delta_range[1], self.delta_count),
        )


@dataclass(frozen=True)
class WindingResult:
    w: int
    confidence: str
    samples_used: int
    min_r_norm: float


def resultants(spectrum: Spectrum) -> ResultantPair:
    """Resultant pair from the three nonzero eigenvalues of a spectrum."""
    e2, e3, e4 = spectrum.e[1], spectrum.e[2], spectrum.e[3]
    r1 = -((e2 - e3) ** 2 * (e2 - e4) ** 2 * (e3 - e4) ** 2)
    r2 = -8.0 * (e2 + e3 - 2 * e4) * (e2 + e4 - 2 * e3) * (e3 + e4 - 2 * e2)
    return ResultantPair(
        r1=float(np.real(r1)),
        r2=float(np.real(r2)),
        imag_residual=float(max(abs(np.imag(r1)), abs(np.imag(r2)))),
    )


def resultant_components(eps, delta, *, kappa, sin_theta, alpha_mag, p):
    """Vectorized (R1, R2, imag_residual) over broadcastable eps/delta arrays."""
    ev = closed_form_eigenvalues(kappa, eps, delta, sin_theta, alpha_mag, p)
    e2, e3, e4 = ev[..., 1], ev[..., 2], ev[..., 3]
    r1 = -((e2 - e3) ** 2 * (e2 - e4) ** 2 * (e3 - e4) ** 2)
    r2 = -8.0 * (e2 + e3 - 2 * e4) * (e2 + e4 - 2 * e3) * (e3 + e4 - 2 * e2)
    imag_residual = np.maximum(np.abs(r1.imag), np.abs(r2.imag))
    return r1.real, r2.real, imag_residual


def resultants_at(params: SystemParams) -> ResultantPair:
    """Resultant pair at one parameter point (manifold derived internally)."""
    manifold = derive_cat_manifold(params)
    r1, r2, res = resultant_components(
        params.eps,
        params.delta,
        kappa=params.kappa,
        sin_theta=math.sin(params.theta),
        alpha_mag=manifold.alpha_mag,
        p=manifold.p,
    )
    return ResultantPair(r1=float(r1), r2=float(r2), imag_residual=float(res))


def _loop_resultants(loop: LoopSpec, params: SystemParams, samples: int,
                     orientation: int):
    manifold = derive_cat_manifold(params)
    phi = np.linspace(0.0, 2.0 * math.pi, samples, endpoint=False)
    eps, delta = loop.points(phi, orientation)
    r1, r2, _ = resultant_components(
        eps, delta,
        kappa=params.kappa,
        sin_theta=math.sin(params.theta),
        alpha_mag=manifold.alpha_mag,
        p=manifold.p,
    )
    norm = np.hypot(r1, r2)
    if norm.min() < GRAZE_TOL * norm.max():
        raise ConvergenceError(
            "loop grazes an exceptional structure: min ||R|| = "
            f"{norm.min():.3e} vs loop max {norm.max():.3e}"
        )
    return phi, r1, r2, norm


def _winding_estimate(r1, r2):
    """Unwrapped angle increment of (R1 + i R2) around a closed loop, / 2 pi."""
    ang = np.unwrap(np.angle(r1 + 1j * r2))
    closing = np.angle(np.exp(1j * (ang[0] - ang[-1])))  # wrap back to start
    return (ang[-1] + closing - ang[0]) / (2.0 * math.pi)


def winding_number(loop: LoopSpec, params: SystemParams, *, orientation: int = 1,
                   max_samples: int = 2**20) -> WindingResult:
    """Integer winding of the resultant vector along a closed parameter loop.

    The phase of R1 + i R2 is unwrapped over the sampled loop; the sample
    count doubles until two consecutive estimates round to the same integer
    with rounding residual below 0.05.  Confidence is ``exact`` when the
    initial sample count already agrees with its doubling, ``refined`` when
    further doubling was required.

    Raises
    ------
    ConvergenceError
        If the loop grazes a zero of ||R|| (relative floor 1e-12) or the
        sample count exceeds ``max_samples`` without stabilizing.
    """
    if orientation not in (1, -1):
        raise ValueError("orientation must be +1 (counterclockwise) or -1")
    samples = max(loop.samples, 16)
    _, r1, r2, norm = _loop_resultants(loop, params, samples, orientation)
    est_prev = _winding_estimate(r1, r2)
    doublings = 0
    while True:
        samples *= 2
        if samples > max_samples:
            raise ConvergenceError(
                f"winding did not stabilize within {max_samples} samples "
                f"(last estimate {est_prev:.4f})"
            )
        _, r1, r2, norm = _loop_resultants(loop, params, samples, orientation)
        est = _winding_estimate(r1, r2)
        w = round(est)
        if (round(est_prev) == w and abs(est - w) < 0.05
                and abs(est_prev - w) < 0.05):
            confidence = "exact" if doublings == 0 else "refined"
            return WindingResult(
                w=int(w),
                confidence=confidence,
                samples_used=samples,
                min_r_norm=float(norm.min() / norm.max()),
            )
        est_prev = est
        doublings += 1


def trajectory(loop: LoopSpec, params: SystemParams, *,
               orientation: int = 1) -> np.ndarray:
    """Normalized resultant-vector trajectory; rows (phi, R1/||R||, R2/||R||)."""
    phi, r1, r2, norm = _loop_resultants(loop, params, loop.samples, orientation)
    return np.column_stack([phi, r1 / norm, r2 / norm])


def zero_contours(grid: GridSpec, which: str, params: SystemParams) -> list:
    """Zero-level polylines of R1 or R2 on a rectangular grid.

    Marching squares with linear interpolation along cell edges (saddle
    cells disambiguated by the cell-mean sign); each polyline is an ordered
    ``(k, 2)`` array of (eps, delta) vertices, closed or ending on the grid
    boundary.  Empty list when the resultant does not change sign.
    """
    if which not in ("R1", "R2"):
        raise ValueError(f"which must be 'R1' or 'R2', got {which!r}")
    manifold = derive_cat_manifold(params)
    eps_ax, delta_ax = grid.axes()
    r1, r2, _ = resultant_components(
        eps_ax[:, None], delta_ax[None, :],
        kappa=params.kappa,
        sin_theta=math.sin(params.theta),
        alpha_mag=manifold.alpha_mag,
        p=manifold.p,
    )
    field = r1 if which == "R1" else r2
    raw = measure.find_contours(field, 0.0)
    d_eps = (grid.eps_range[1] - grid.eps_range[0]) / (grid.eps_count - 1)
    d_delta = (grid.delta_range[1] - grid.delta_range[0]) / (grid.delta_count - 1)
    polylines = []
    for contour in raw:
        poly = np.empty_like(contour)
        poly[:, 0] = grid.eps_range[0] + contour[:, 0] * d_eps
        poly[:, 1] = grid.delta_range[0] + contour[:, 1] * d_delta
        polylines.append(poly)
    return polylines
