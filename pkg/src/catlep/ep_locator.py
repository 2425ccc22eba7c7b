"""Analytic loci of second- and third-order Liouvillian exceptional points.

With the drive off, a pair of eigenvalues coalesces at |delta| = kappa/p2-,
independently of the two-photon drive phase.  With the drive on, triple
coalescence (both cubic invariants q and m vanishing) occurs on the locus

    eps^2   = (1+p^4)^3 kappa^2 |alpha|^2 / (54 p^2 D_theta)
    delta^2 = kappa^2 [ (1 + 148 p^4 + 726 p^8 + 148 p^12 + p^16)
              - 4 p^2 (1+p^4)(5 + 118 p^4 + 5 p^8) sin(theta) ]
              / (108 (p^4-1)^2 D_theta)

with D_theta = (1+p^4)^2 + 4 p^4 - 4 p^2 (1+p^4) sin(theta).  D_theta tends
to zero as p -> 1 at theta = pi/2, where the drive coordinate diverges and
the triple point disappears (the detuning expression turns negative first
at moderate cat sizes).

Because q and m are affine in (eps^2, delta^2), the locus is also the
solution of a 2x2 linear system; ``refine_lep3`` exploits this for an
optional extended-precision polish that places the returned point on the
locus far beyond double round-off.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np

from .logical_liouvillian import ConvergenceError, closed_form_spectrum
from .params import CatManifold, SystemParams, derive_cat_manifold
from .resultant_topology import resultant_components, resultants

# D_theta below this is treated as divergent (it multiplies a denominator)
D_THETA_FLOOR = 1e-12


@dataclass(frozen=True)
class Lep3Locus:
    """Analytic third-order exceptional point for one (|alpha|, theta, kappa).

    ``exists`` is False when D_theta is non-positive (divergent locus) or
    the squared-detuning expression is negative (no real solution); the
    corresponding coordinate is inf or nan.
    """

    eps_abs: float
    delta_abs: float
    d_theta: float
    exists: bool


@dataclass(frozen=True)
class RefinedLep3:
    """Output of refine_lep3.

    ``residual`` is max(|R1|/s1, |R2|/s2) with s1, s2 the resultant
    magnitudes' maxima over a probe ring of radius 0.4 x the coordinates
    (the scale of the standard encircling loop).  ``sector_flipped`` marks
    convergence into a different sign sector than the initial guess.
    """

    eps: float
    delta: float
    residual: float
    iterations: int
    sector_flipped: bool


def lep2_zero_drive(params: SystemParams, manifold: CatManifold) -> float:
    """|delta| at which the coherence eigenvalue pair coalesces when eps = 0.

    Returns kappa / p2-, which is independent of the two-photon drive phase.
    Rejects the infinite-cat limit p -> 1, where the value diverges.
    """
    p2m = manifold.p2_minus
    if p2m < 1e-15:
        raise ValueError("p -> 1 (infinite cat) makes the zero-drive pair "
                         "coalescence detuning divergent")
    return params.kappa / p2m


def d_theta(p: float, theta: float) -> float:
    """Denominator (1+p^4)^2 + 4p^4 - 4p^2(1+p^4) sin(theta) of the locus."""
    p4 = p**4
    return (1 + p4) ** 2 + 4 * p4 - 4 * p**2 * (1 + p4) * math.sin(theta)


def lep3_locus(manifold: CatManifold, theta: float, kappa: float) -> Lep3Locus:
    """Evaluate the analytic triple-coalescence locus.

    ``theta`` is a free argument (not taken from the manifold) so the phase
    can be swept at fixed cat size; only sin(theta) enters.
    """
    p = manifold.p
    dt = d_theta(p, theta)
    if dt <= D_THETA_FLOOR:
        return Lep3Locus(eps_abs=math.inf, delta_abs=math.nan,
                         d_theta=dt, exists=False)
    st = math.sin(theta)
    p4 = p**4
    eps_sq = (1 + p4) ** 3 * kappa**2 * manifold.alpha_mag**2 / (54 * p**2 * dt)
    bracket = (
        1 + 148 * p4 + 726 * p4**2 + 148 * p4**3 + p4**4
        - 4 * p**2 * (1 + p4) * (5 + 118 * p4 + 5 * p4**2) * st
    )
    delta_sq = kappa**2 * bracket / (108 * (p4 - 1) ** 2 * dt)
    if delta_sq < 0:
        return Lep3Locus(eps_abs=math.sqrt(eps_sq), delta_abs=math.nan,
                         d_theta=dt, exists=False)
    return Lep3Locus(eps_abs=math.sqrt(eps_sq), delta_abs=math.sqrt(delta_sq),
                     d_theta=dt, exists=True)


def lep3_real_alpha(manifold: CatManifold, kappa: float) -> tuple:
    """Simplified locus for the real-amplitude phase (theta = 3 pi / 2).

    |eps|   = sqrt(6) kappa |alpha| (p^4+1)^(3/2) / (18 p (p^2+1)^2)
    |delta| = sqrt(3) kappa (p^4+6p^2+1)^(3/2) / (18 (p^2-1) (p^2+1)^2)

    returned as absolute values.  Rejects p = 1 (detuning expression is
    singular there).
    """
    p = manifold.p
    if abs(p**2 - 1.0) < 1e-15:
        raise ValueError("p = 1 makes the real-amplitude locus singular")
    p2, p4 = p**2, p**4
    eps_abs = (math.sqrt(6.0) * kappa * manifold.alpha_mag * (p4 + 1) ** 1.5
               / (18.0 * p * (p2 + 1) ** 2))
    delta_abs = abs(
        math.sqrt(3.0) * kappa * (p4 + 6 * p2 + 1) ** 1.5
        / (18.0 * (p2 - 1) * (p2 + 1) ** 2)
    )
    return eps_abs, delta_abs


def reference_lep3(alpha0: float, theta0: float, kappa: float,
                   kappa2: float = 1.0) -> tuple:
    """(eps_ref, delta_ref): locus coordinates at the normalization reference."""
    ref_params = SystemParams(kappa=kappa, kappa2=kappa2,
                              eps2_mag=0.5 * kappa2 * alpha0**2, theta=theta0)
    locus = lep3_locus(derive_cat_manifold(ref_params), theta0, kappa)
    if not locus.exists:
        raise ValueError(f"no exceptional point exists at the reference "
                         f"(alpha0={alpha0}, theta0={theta0})")
    return locus.eps_abs, locus.delta_abs


def _probe_scales(eps0: float, delta0: float, params: SystemParams,
                  manifold: CatManifold) -> tuple:
    """Max |R1|, |R2| over a 0.4-radius probe ring (loop-scale normalization)."""
    phi = np.linspace(0.0, 2.0 * math.pi, 16, endpoint=False)
    r1, r2, _ = resultant_components(
        eps0 + 0.4 * abs(eps0) * np.cos(phi),
        delta0 + 0.4 * abs(delta0) * np.sin(phi),
        kappa=params.kappa,
        sin_theta=math.sin(params.theta),
        alpha_mag=manifold.alpha_mag,
        p=manifold.p,
    )
    s1 = max(np.abs(r1).max(), 1e-300)
    s2 = max(np.abs(r2).max(), 1e-300)
    return s1, s2


def _polish_exact(initial: tuple, params: SystemParams, dps: int = 50) -> tuple:
    """Solve q = 0, m = 0 exactly in extended precision.

    Both invariants are affine in (eps^2, delta^2); the manifold quantities
    are re-derived from the raw parameters at working precision, consistent
    with the extended-precision spectrum evaluation.  Returns (eps, delta)
    as mpmath floats carrying the full solution, signed like ``initial``.
    """
    with mpmath.workdps(dps):
        kappa = mpmath.mpf(float(params.kappa))
        aa = 2 * mpmath.mpf(float(params.eps2_mag)) / mpmath.mpf(float(params.kappa2))
        st = mpmath.sin(mpmath.mpf(float(params.theta)))
        p2 = mpmath.tanh(aa)
        p2p = 1 / p2 + p2
        p4p = 1 / p2**2 + p2**2
        p6p = 1 / p2**3 + p2**3
        pref_q = aa * kappa / 216
        q0 = pref_q * aa**2 * kappa**2 * (33 * p2p - p6p)
        qx = pref_q * aa * (72 * p4p - 576 * st * p2p + 1008)
        qy = pref_q * 36 * aa**2 * (p2p - p6p)
        m0 = -(aa**2) * kappa**2 * (p4p + 14) / 36
        mx = aa * (48 * p2p - 96 * st) / 36
        my = aa**2 * (12 * p4p - 24) / 36
        det = qx * my - qy * mx
        if det == 0:
            raise ConvergenceError("degenerate locus system in exact polish")
        x = (-q0 * my + qy * m0) / det
        y = (-qx * m0 + q0 * mx) / det
        if x < 0 or y < 0:
            raise ConvergenceError(
                f"no real exceptional point: eps^2 = {float(x):.3e}, "
                f"delta^2 = {float(y):.3e}"
            )
        eps = mpmath.sqrt(x) * (1 if initial[0] >= 0 else -1)
        delta = mpmath.sqrt(y) * (1 if initial[1] >= 0 else -1)
        return eps, delta


def refine_lep3(initial: tuple, params: SystemParams, *, max_iter: int = 100,
                exact_polish: bool = False) -> RefinedLep3:
    """Refine a triple-coalescence point by damped Newton on (R1, R2).

    Finite-difference Jacobian (relative step 1e-7), damping by halving with
    residual backtracking.  Residuals are normalized per component by the
    probe-ring scales, so the reported residual is meaningful across the
    many decades the resultants span.

    With ``exact_polish`` the converged point is replaced by the
    extended-precision solution of the underlying linear system; the
    returned coordinates then carry mpmath floats whose extra digits place
    the point on the locus far beyond double round-off.

    Raises
    ------
    ValueError
        For a non-finite initial guess (e.g. from a non-existent locus).
    ConvergenceError
        If the residual fails to reach tolerance within ``max_iter``
        iterations or the iteration leaves the search region.
    """
    eps0, delta0 = float(initial[0]), float(initial[1])
    if not (math.isfinite(eps0) and math.isfinite(delta0)):
        raise ValueError(f"initial guess must be finite, got {initial}")
    manifold = derive_cat_manifold(params)
    s1, s2 = _probe_scales(eps0, delta0, params, manifold)
    sin_th = math.sin(params.theta)

    def residual_vec(x):
        r1, r2, _ = resultant_components(
            x[0], x[1], kappa=params.kappa, sin_theta=sin_th,
            alpha_mag=manifold.alpha_mag, p=manifold.p)
        return np.array([float(r1) / s1, float(r2) / s2])

    x = np.array([eps0, delta0])
    scale0 = max(abs(eps0), abs(delta0))
    f = residual_vec(x)
    res = np.max(np.abs(f))
    iterations = 0
    tol = 1e-10
    for iterations in range(1, max_iter + 1):
        if res < tol:
            break
        if np.max(np.abs(x)) > 100.0 * scale0:
            raise ConvergenceError(
                f"iteration left the search region (|x| > 100x initial); "
                f"last residual {res:.3e}"
            )
        jac = np.empty((2, 2))
        for j in range(2):
            step = 1e-7 * max(abs(x[j]), scale0)
            xp = x.copy()
            xp[j] += step
            jac[:, j] = (residual_vec(xp) - f) / step
        try:
            direction = np.linalg.solve(jac, -f)
        except np.linalg.LinAlgError:
            direction = np.linalg.lstsq(jac, -f, rcond=None)[0]
        lam, improved = 1.0, False
        for _ in range(25):
            x_new = x + lam * direction
            f_new = residual_vec(x_new)
            res_new = np.max(np.abs(f_new))
            if res_new < res:
                x, f, res, improved = x_new, f_new, res_new, True
                break
            lam *= 0.5
        if not improved:
            break  # at the numerical floor for this precision
    else:
        iterations = max_iter
    if res >= tol:
        raise ConvergenceError(
            f"no convergence after {iterations} iterations; "
            f"last residual {res:.3e}"
        )
    eps_out, delta_out = x[0], x[1]
    if exact_polish:
        eps_out, delta_out = _polish_exact((eps_out, delta_out), params)
        spec = closed_form_spectrum(
            _with_drive(params, eps_out, delta_out), manifold)
        pair = resultants(spec)
        res = max(abs(pair.r1) / s1, abs(pair.r2) / s2)
    sector_flipped = (math.copysign(1, float(eps_out)) != math.copysign(1, eps0)
                      or math.copysign(1, float(delta_out)) != math.copysign(1, delta0))
    return RefinedLep3(eps=eps_out, delta=delta_out, residual=float(res),
                       iterations=iterations, sector_flipped=sector_flipped)


def _with_drive(params: SystemParams, eps, delta) -> SystemParams:
    """Copy of params with replaced drive and detuning (may carry mpf)."""
    return SystemParams(kappa=params.kappa, kappa2=params.kappa2,
                        eps=eps, delta=delta, eps2_mag=params.eps2_mag,
                        theta=params.theta)


def lep3_sweep(variable: str, values, reference: tuple, kappa: float,
               kappa2: float = 1.0) -> dict:
    """Locus coordinates along a sweep, normalized to a reference point.

    variable 'theta' sweeps the drive phase at the reference cat size;
    'eps2_ratio' sweeps |eps2|/kappa2 at the reference phase.  Returns a
    dict of aligned arrays: sweep_var, eps_abs, delta_abs, eps_norm,
    delta_norm, exists.
    """
    if variable not in ("theta", "eps2_ratio"):
        raise ValueError(f"unknown sweep variable {variable!r}")
    alpha0, theta0 = reference
    eps_ref, delta_ref = reference_lep3(alpha0, theta0, kappa, kappa2)
    ref_manifold = derive_cat_manifold(SystemParams(
        kappa=kappa, kappa2=kappa2, eps2_mag=0.5 * kappa2 * alpha0**2,
        theta=theta0))
    values = np.asarray(values, dtype=float)
    eps_abs = np.empty_like(values)
    delta_abs = np.empty_like(values)
    exists = np.empty(values.shape, dtype=bool)
    for i, v in enumerate(values):
        if variable == "theta":
            locus = lep3_locus(ref_manifold, v, kappa)
        else:
            if v <= 0:
                raise ValueError("eps2_ratio sweep values must be positive")
            manifold = derive_cat_manifold(SystemParams(
                kappa=kappa, kappa2=kappa2, eps2_mag=v * kappa2, theta=theta0))
            locus = lep3_locus(manifold, theta0, kappa)
        eps_abs[i] = locus.eps_abs
        delta_abs[i] = locus.delta_abs
        exists[i] = locus.exists
    return {
        "sweep_var": values,
        "eps_abs": eps_abs,
        "delta_abs": delta_abs,
        "eps_norm": eps_abs / eps_ref,
        "delta_norm": delta_abs / delta_ref,
        "exists": exists,
    }
