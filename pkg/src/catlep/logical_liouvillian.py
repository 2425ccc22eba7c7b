"""Projected 4x4 Liouvillian of the cat qubit and its spectrum.

Within the cat manifold the annihilation operator acts as
``a|C+> = alpha p |C->`` and ``a|C-> = (alpha/p) |C+>`` (p = N+/N- < 1),
which closes the master equation on the four operator-basis elements
``(|C+><C+|, |C+><C-|, |C-><C+|, |C-><C-|)``.  Density matrices are
vectorized row-major in that ordering.  The spectrum of the resulting 4x4
matrix is available in closed form: after removing the zero steady-state
eigenvalue, the remaining three are the roots of a depressed cubic
``t^3 + 3 m t - 2 q = 0`` shifted by ``-(2/3) kappa |alpha|^2 p2+``.

Two independent eigenvalue routes are provided: the closed form (Cardano)
and a characteristic-polynomial route (Faddeev-LeVerrier coefficients,
Durand-Kerner simultaneous root iteration, SVD null-space eigenvectors).
The closed form switches to extended precision when the cubic invariants
are cancellation-dominated, which keeps it meaningful arbitrarily close to
exceptional points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np
import scipy.linalg

from .params import CatManifold, SystemParams

# eigenvector-matrix condition number beyond which eigendecomposition-based
# propagation is abandoned for the matrix exponential (EP vicinity)
PROPAGATE_COND_LIMIT = 1e8

# singular values below this fraction of the largest count as kernel
# directions in steady_state
KERNEL_TOL = 1e-12

# relative size of a cubic invariant below its cancellation scale that
# triggers re-evaluation in extended precision
_PROMOTE_TOL = 1e-12

_OMEGA = complex(-0.5, 0.5 * math.sqrt(3.0))  # exp(2 pi i / 3)


class ConvergenceError(RuntimeError):
    """A numerical iteration failed to reach its tolerance."""


@dataclass(frozen=True)
class LogicalLiouvillian:
    """4x4 generator acting on vectorized logical density matrices."""

    m: np.ndarray
    params: SystemParams
    manifold: CatManifold


@dataclass(frozen=True)
class Spectrum:
    """Closed-form spectrum: eigenvalues, cube-root intermediates, invariants.

    ``e[0]`` is exactly 0 (steady state); ``e[1]`` is the real eigenvalue,
    ``e[2], e[3]`` the remaining pair (complex-conjugate or both real).
    """

    e: tuple
    eta_plus: complex
    eta_minus: complex
    q: float
    m_coef: float


@dataclass(frozen=True)
class NumericSpectrum:
    """Characteristic-polynomial spectrum with eigenvectors.

    ``min_eigvec_angle`` is the smallest pairwise angle between normalized
    right eigenvectors; it tends to 0 at an exceptional point.  ``defective``
    flags a numerically rank-deficient eigenvector matrix.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    min_eigvec_angle: float
    defective: bool


@dataclass(frozen=True)
class LogicalVector:
    """Vectorized 2x2 logical density matrix, ordering (++, +-, -+, --)."""

    v: np.ndarray

    @classmethod
    def from_rho(cls, rho: np.ndarray) -> "LogicalVector":
        rho = np.asarray(rho, dtype=complex)
        if rho.shape != (2, 2):
            raise ValueError(f"expected a 2x2 matrix, got shape {rho.shape}")
        return cls(v=rho.reshape(4).copy())

    def to_rho(self) -> np.ndarray:
        return self.v.reshape(2, 2).copy()

    def trace(self) -> complex:
        return self.v[0] + self.v[3]

    def hermiticity_defect(self) -> float:
        """Max deviation from encoding a Hermitian matrix."""
        return max(
            abs(self.v[1] - np.conj(self.v[2])),
            abs(np.imag(self.v[0])),
            abs(np.imag(self.v[3])),
        )


def build_matrix(params: SystemParams, manifold: CatManifold) -> LogicalLiouvillian:
    """Assemble the projected 4x4 Liouvillian.

    Only single-photon loss, single-photon drive and detuning survive the
    projection; the two-photon drive and loss annihilate manifold-supported
    states exactly.
    """
    kappa, eps, delta = params.kappa, params.eps, params.delta
    alpha, p = manifold.alpha, manifold.p
    aa = manifold.alpha_mag**2
    ac = np.conj(alpha)
    A = alpha * p + ac / p
    B = np.conj(A)
    p2m = manifold.p2_minus
    p2p = manifold.p2_plus
    m = np.array(
        [
            [-kappa * aa * p**2, 1j * eps * A, -1j * eps * B, kappa * aa / p**2],
            [1j * eps * B, 1j * delta * aa * p2m - 0.5 * kappa * aa * p2p,
             kappa * aa, -1j * eps * B],
            [-1j * eps * A, kappa * aa,
             -1j * delta * aa * p2m - 0.5 * kappa * aa * p2p, 1j * eps * A],
            [kappa * aa * p**2, -1j * eps * A, 1j * eps * B, -kappa * aa / p**2],
        ],
        dtype=complex,
    )
    return LogicalLiouvillian(m=m, params=params, manifold=manifold)


# --------------------------------------------------------------------------
# closed-form spectrum
# --------------------------------------------------------------------------

def cubic_invariants(kappa, eps, delta, sin_theta, alpha_mag, p):
    """Invariants (q, m) of the depressed cubic for the nonzero eigenvalues.

    All arguments broadcast; the phase of the two-photon drive enters only
    through ``sin_theta``.
    """
    aa = np.asarray(alpha_mag, dtype=float) ** 2
    p = np.asarray(p, dtype=float)
    p2 = p**2
    p2p = 1.0 / p2 + p2
    p4p = 1.0 / p2**2 + p2**2
    p6p = 1.0 / p2**3 + p2**3
    eps2_ = np.asarray(eps, dtype=float) ** 2
    del2 = np.asarray(delta, dtype=float) ** 2
    kappa = np.asarray(kappa, dtype=float)
    st = np.asarray(sin_theta, dtype=float)
    q = (aa * kappa / 216.0) * (
        -(aa**2) * (36.0 * del2 + kappa**2) * p6p
        + 72.0 * aa * eps2_ * p4p
        + (36.0 * aa**2 * del2 + 33.0 * aa**2 * kappa**2
           - 576.0 * eps2_ * aa * st) * p2p
        + 1008.0 * aa * eps2_
    )
    m = (1.0 / 36.0) * (
        aa**2 * (12.0 * del2 - kappa**2) * p4p
        + 48.0 * aa * eps2_ * p2p
        - 96.0 * eps2_ * aa * st
        - aa**2 * (24.0 * del2 + 14.0 * kappa**2)
    )
    return q, m


def _cubic_invariant_scales(kappa, eps, delta, sin_theta, alpha_mag, p):
    """Sum of absolute term magnitudes of q and m (cancellation scales)."""
    aa = np.asarray(alpha_mag, dtype=float) ** 2
    p = np.asarray(p, dtype=float)
    p2 = p**2
    p2p = 1.0 / p2 + p2
    p4p = 1.0 / p2**2 + p2**2
    p6p = 1.0 / p2**3 + p2**3
    eps2_ = np.asarray(eps, dtype=float) ** 2
    del2 = np.asarray(delta, dtype=float) ** 2
    kappa = np.asarray(kappa, dtype=float)
    ast = np.abs(np.asarray(sin_theta, dtype=float))
    q_scale = (aa * kappa / 216.0) * (
        aa**2 * (36.0 * del2 + kappa**2) * p6p
        + 72.0 * aa * eps2_ * p4p
        + (36.0 * aa**2 * del2 + 33.0 * aa**2 * kappa**2
           + 576.0 * eps2_ * aa * ast) * p2p
        + 1008.0 * aa * eps2_
    )
    m_scale = (1.0 / 36.0) * (
        aa**2 * (12.0 * del2 + kappa**2) * p4p
        + 48.0 * aa * eps2_ * p2p
        + 96.0 * eps2_ * aa * ast
        + aa**2 * (24.0 * del2 + 14.0 * kappa**2)
    )
    return q_scale, m_scale


def _depressed_cubic_roots(q, m):
    """Roots of t^3 + 3 m t - 2 q = 0, broadcast, ordered (real-most first).

    The Cardano pair eta+- is taken from the larger-magnitude of
    (q +- sqrt(q^2 + m^3)) to avoid cancellation; its partner is fixed by
    eta+ * eta- = -m.  Of the three equivalent branch labelings the one with
    the most nearly real first root is selected.
    """
    q = np.asarray(q, dtype=float)
    m = np.asarray(m, dtype=float)
    s = np.sqrt(q.astype(complex) ** 2 + m.astype(complex) ** 3)
    zp = q + s
    zm = q - s
    use_zp = np.abs(zp) >= np.abs(zm)
    primary = np.where(use_zp, zp, zm)
    eta_primary = primary ** (1.0 / 3.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        eta_other = np.where(
            np.abs(eta_primary) > 0.0, -m / np.where(eta_primary == 0, 1, eta_primary), 0.0
        )
    eta_p = np.where(use_zp, eta_primary, eta_other)
    eta_m = np.where(use_zp, eta_other, eta_primary)
    k = np.arange(3).reshape((3,) + (1,) * q.ndim)
    cand = _OMEGA**k * eta_p + _OMEGA ** (-k) * eta_m  # shape (3, ...)
    kstar = np.argmin(np.abs(cand.imag), axis=0)
    t = np.empty((3,) + q.shape, dtype=complex)
    for shift in range(3):
        t[shift] = np.take_along_axis(
            cand, ((kstar + shift) % 3)[None], axis=0
        )[0]
    return t, np.take_along_axis(
        _OMEGA**k * eta_p, kstar[None], axis=0
    )[0], np.take_along_axis(_OMEGA ** (-k) * eta_m, kstar[None], axis=0)[0]


def closed_form_eigenvalues(kappa, eps, delta, sin_theta, alpha_mag, p):
    """All four eigenvalues, broadcast; shape ``(..., 4)`` with E1 = 0 first."""
    q, m = cubic_invariants(kappa, eps, delta, sin_theta, alpha_mag, p)
    aa = np.asarray(alpha_mag, dtype=float) ** 2
    p = np.asarray(p, dtype=float)
    p2p = 1.0 / p**2 + p**2
    s0 = -(2.0 / 3.0) * np.asarray(kappa, dtype=float) * aa * p2p
    t, _, _ = _depressed_cubic_roots(q, m)
    out = np.empty(np.shape(q) + (4,), dtype=complex)
    out[..., 0] = 0.0
    for i in range(3):
        out[..., i + 1] = s0 + t[i]
    return out


def _spectrum_mp(params: SystemParams, dps: int = 40) -> Spectrum:
    """Closed-form spectrum in extended precision (cancellation-proof).

    The manifold quantities are re-derived from the raw parameters at full
    working precision so that q and m vanish genuinely, not merely to double
    round-off, at exceptional-point parameters carrying extra digits.
    """
    def as_mpf(x):
        return x if isinstance(x, mpmath.mpf) else mpmath.mpf(float(x))

    with mpmath.workdps(dps):
        kappa = as_mpf(params.kappa)
        eps = as_mpf(params.eps)
        delta = as_mpf(params.delta)
        aa = 2 * as_mpf(params.eps2_mag) / as_mpf(params.kappa2)
        st = mpmath.sin(as_mpf(params.theta))
        p2 = mpmath.tanh(aa)
        p2p = 1 / p2 + p2
        p4p = 1 / p2**2 + p2**2
        p6p = 1 / p2**3 + p2**3
        q = (aa * kappa / 216) * (
            -(aa**2) * (36 * delta**2 + kappa**2) * p6p
            + 72 * aa * eps**2 * p4p
            + (36 * aa**2 * delta**2 + 33 * aa**2 * kappa**2
               - 576 * eps**2 * aa * st) * p2p
            + 1008 * aa * eps**2
        )
        m = (
            aa**2 * (12 * delta**2 - kappa**2) * p4p
            + 48 * aa * eps**2 * p2p
            - 96 * eps**2 * aa * st
            - aa**2 * (24 * delta**2 + 14 * kappa**2)
        ) / 36
        s0 = -mpmath.mpf(2) / 3 * kappa * aa * p2p
        s = mpmath.sqrt(mpmath.mpc(q**2 + m**3))
        zp, zm = mpmath.mpc(q) + s, mpmath.mpc(q) - s
        use_zp = abs(zp) >= abs(zm)
        primary = zp if use_zp else zm
        eta_primary = mpmath.cbrt(primary)
        if abs(eta_primary) > 0:
            eta_other = -m / eta_primary
        else:
            eta_other = mpmath.mpc(0)
        eta_p = eta_primary if use_zp else eta_other
        eta_m = eta_other if use_zp else eta_primary
        omega = mpmath.exp(2j * mpmath.pi / 3)
        cand = [s0 + omega**k * eta_p + omega**-k * eta_m for k in range(3)]
        kstar = min(range(3), key=lambda k: abs(mpmath.im(cand[k])))
        roots = [cand[(kstar + shift) % 3] for shift in range(3)]
        return Spectrum(
            e=(0.0, complex(roots[0]), complex(roots[1]), complex(roots[2])),
            eta_plus=complex(omega**kstar * eta_p),
            eta_minus=complex(omega**-kstar * eta_m),
            q=float(q),
            m_coef=float(m),
        )


def closed_form_spectrum(params: SystemParams, manifold: CatManifold) -> Spectrum:
    """Closed-form spectrum of the projected Liouvillian at one point.

    When q or m is cancellation-dominated in double precision (the signature
    of an exceptional-point neighbourhood), or when the drive/detuning carry
    extended-precision values, the evaluation is redone with mpmath so the
    returned eigenvalues reflect the true near-degeneracy.
    """
    if isinstance(params.eps, mpmath.mpf) or isinstance(params.delta, mpmath.mpf):
        return _spectrum_mp(params)
    st = math.sin(params.theta)
    args = (params.kappa, params.eps, params.delta, st, manifold.alpha_mag, manifold.p)
    q, m = cubic_invariants(*args)
    q_scale, m_scale = _cubic_invariant_scales(*args)
    if abs(q) < _PROMOTE_TOL * q_scale or abs(m) < _PROMOTE_TOL * m_scale:
        return _spectrum_mp(params)
    aa = manifold.alpha_mag**2
    s0 = -(2.0 / 3.0) * params.kappa * aa * manifold.p2_plus
    t, eta_p, eta_m = _depressed_cubic_roots(q, m)
    return Spectrum(
        e=(0.0, complex(s0 + t[0]), complex(s0 + t[1]), complex(s0 + t[2])),
        eta_plus=complex(eta_p),
        eta_minus=complex(eta_m),
        q=float(q),
        m_coef=float(m),
    )


# --------------------------------------------------------------------------
# characteristic-polynomial route (independent of the closed form)
# --------------------------------------------------------------------------

def char_poly_coeffs(m: np.ndarray) -> np.ndarray:
    """Characteristic polynomial coefficients by Faddeev-LeVerrier.

    ``m`` may carry leading batch dimensions; returns ``(..., 5)`` monic
    coefficients, highest degree first.
    """
    m = np.asarray(m, dtype=complex)
    n = m.shape[-1]
    eye = np.eye(n, dtype=complex)
    coeffs = np.empty(m.shape[:-2] + (n + 1,), dtype=complex)
    coeffs[..., 0] = 1.0
    work = m.copy()
    for k in range(1, n + 1):
        c = -np.trace(work, axis1=-2, axis2=-1) / k
        coeffs[..., k] = c
        if k < n:
            work = m @ (work + c[..., None, None] * eye)
    return coeffs


def polynomial_roots(coeffs: np.ndarray, max_iter: int = 500,
                     tol: float = 1e-15) -> np.ndarray:
    """All roots of monic polynomials by Durand-Kerner simultaneous iteration.

    ``coeffs`` has shape ``(..., deg+1)``, highest degree first with leading
    coefficient 1; returns ``(..., deg)``.  Batched: every member of the
    batch iterates until the whole batch satisfies the update tolerance.
    """
    coeffs = np.asarray(coeffs, dtype=complex)
    deg = coeffs.shape[-1] - 1
    # scale roots to O(1): |root| <= 2 max_k |c_k|^(1/k); an (all but)
    # identically zero polynomial keeps unit scale so powers cannot underflow
    mags = np.abs(coeffs[..., 1:])
    powers = 1.0 / np.arange(1, deg + 1)
    scale = np.max(mags**powers, axis=-1)
    scale = np.where(scale < 1e-100, 1.0, scale)
    b = coeffs / scale[..., None] ** np.arange(deg + 1)
    seed = (0.4 + 0.9j) ** np.arange(1, deg + 1)
    z = np.broadcast_to(seed, b.shape[:-1] + (deg,)).copy()
    for _ in range(max_iter):
        pz = np.zeros_like(z)
        for k in range(deg + 1):
            pz = pz * z + b[..., k, None]
        diff = z[..., :, None] - z[..., None, :]
        idx = np.arange(deg)
        diff[..., idx, idx] = 1.0
        denom = np.prod(diff, axis=-1)
        denom = np.where(np.abs(denom) < 1e-300, 1e-300, denom)
        step = pz / denom
        z = z - step
        if np.max(np.abs(step)) < tol * max(1.0, np.max(np.abs(z))):
            break
    return z * scale[..., None]


def numeric_eigenvalues(m: np.ndarray) -> np.ndarray:
    """Eigenvalues of (batched) 4x4 generators via the characteristic polynomial.

    Trace conservation (rows 1 and 4 sum to zero) makes the determinant
    vanish identically, so the steady-state root is factored out exactly and
    Durand-Kerner runs on the remaining cubic; this keeps the exponentially
    small slow eigenvalue well-conditioned.  Returns ``(..., 4)`` with the
    zero eigenvalue first.
    """
    coeffs = char_poly_coeffs(m)
    cubic_roots = polynomial_roots(coeffs[..., :4])
    zero = np.zeros(cubic_roots.shape[:-1] + (1,), dtype=complex)
    return np.concatenate([zero, cubic_roots], axis=-1)


def numeric_spectrum(L: LogicalLiouvillian | np.ndarray) -> NumericSpectrum:
    """Eigenvalues and eigenvectors by a route independent of the closed form.

    Characteristic polynomial via Faddeev-LeVerrier, roots via Durand-Kerner
    (steady-state root deflated exactly), eigenvectors by SVD null-space
    extraction of ``L - E I``.
    """
    m = L.m if isinstance(L, LogicalLiouvillian) else np.asarray(L, dtype=complex)
    eigenvalues = numeric_eigenvalues(m)
    vecs = np.empty((4, 4), dtype=complex)
    for i, ev in enumerate(eigenvalues):
        _, _, vh = np.linalg.svd(m - ev * np.eye(4))
        vecs[:, i] = vh[-1].conj()
    min_angle = math.inf
    for i in range(4):
        for j in range(i + 1, 4):
            overlap = min(1.0, abs(np.vdot(vecs[:, i], vecs[:, j])))
            min_angle = min(min_angle, math.acos(overlap))
    sv = np.linalg.svd(vecs, compute_uv=False)
    defective = bool(sv[-1] < 1e-8 * sv[0])
    return NumericSpectrum(
        eigenvalues=eigenvalues,
        eigenvectors=vecs,
        min_eigvec_angle=min_angle,
        defective=defective,
    )


# --------------------------------------------------------------------------
# propagation and steady state
# --------------------------------------------------------------------------

def _check_initial_vector(v0: LogicalVector, tol: float = 1e-8):
    if v0.hermiticity_defect() > tol:
        raise ValueError("initial vector does not encode a Hermitian matrix")
    if abs(v0.trace() - 1.0) > tol:
        raise ValueError(f"initial vector must have unit trace, got {v0.trace()}")


def propagate_many(L: LogicalLiouvillian, v0: LogicalVector,
                   ts: np.ndarray) -> np.ndarray:
    """Propagated vectors at each time in ``ts``; shape ``(len(ts), 4)``.

    Uses the eigendecomposition ``V(t) = sum_k c_k exp(E_k t) V_k``; near an
    exceptional point (ill-conditioned eigenvector matrix) it falls back to
    the 4x4 matrix exponential, which stays valid at and beyond the EP.
    """
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    if np.any(ts < 0):
        raise ValueError("negative propagation times are not allowed")
    _check_initial_vector(v0)
    ns = numeric_spectrum(L)
    vecs = ns.eigenvectors
    sv = np.linalg.svd(vecs, compute_uv=False)
    cond = sv[0] / sv[-1] if sv[-1] > 0 else math.inf
    if ns.defective or cond > PROPAGATE_COND_LIMIT:
        return np.stack([scipy.linalg.expm(L.m * t) @ v0.v for t in ts])
    c = np.linalg.solve(vecs, v0.v)
    phases = np.exp(np.outer(ts, ns.eigenvalues))
    return (phases * c) @ vecs.T


def propagate(L: LogicalLiouvillian, v0: LogicalVector, t: float) -> LogicalVector:
    """State at time ``t >= 0`` from initial Hermitian unit-trace ``v0``."""
    return LogicalVector(v=propagate_many(L, v0, [t])[0])


def steady_state(L: LogicalLiouvillian) -> LogicalVector:
    """Unit-trace kernel vector of the 4x4 generator.

    Raises
    ------
    ConvergenceError
        If the numerical kernel has dimension > 1 (degenerate steady
        manifold) or the kernel vector is traceless.
    """
    u, s, vh = np.linalg.svd(L.m)
    kernel = s < KERNEL_TOL * max(s[0], 1e-300)
    if s[0] == 0.0:
        kernel = np.ones_like(kernel)
    if np.count_nonzero(kernel) > 1:
        raise ConvergenceError(
            f"degenerate kernel of dimension {np.count_nonzero(kernel)}"
        )
    v = vh[-1].conj()
    trace = v[0] + v[3]
    if abs(trace) < 1e-12:
        raise ConvergenceError("kernel vector is traceless; cannot normalize")
    return LogicalVector(v=v / trace)
