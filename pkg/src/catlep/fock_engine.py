"""Truncated Fock-space oracle: full master equation, states, fidelity.

This module is deliberately independent of the projected 4x4 description:
it builds the full vectorized generator in a truncated Fock basis, evolves
it with an adaptive embedded Runge-Kutta integrator, and supplies the cat /
coherent state constructors and the Uhlmann fidelity used to validate the
logical-subspace dynamics.

Vectorization is row-major, matching the 4x4 module: for operators A, B,
``vec(A rho B) = (A kron B^T) vec(rho)``.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.sparse
import scipy.sparse.linalg
from scipy.integrate import solve_ivp

from .ep_locator import lep3_locus
from .logical_liouvillian import (
    ConvergenceError,
    LogicalVector,
    build_matrix,
    propagate_many,
)
from .params import SystemParams, derive_cat_manifold

logger = logging.getLogger(__name__)

# coherent-state weight allowed beyond the truncation edge
TAIL_TOL = 1e-10
# extra levels on top of the tail-determined dimension, absorbing
# drive-induced leakage during dynamics
GUARD_LEVELS = 10
# hermiticity/trace repair larger than this fails an evolve run
MAX_CORRECTION = 1e-7
# eigenvalues of a density matrix below this are a genuine positivity
# violation; in [floor, 0) they are clamped as round-off
EIG_FLOOR = -1e-8


@dataclass(frozen=True)
class FockOperator:
    """Dense operator on the first ``dim`` Fock levels."""

    dim: int
    m: np.ndarray


@dataclass(frozen=True)
class DensityMatrix:
    dim: int
    rho: np.ndarray

    @classmethod
    def from_state_vector(cls, psi: np.ndarray) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(dim=psi.size, rho=np.outer(psi, psi.conj()))

    def validate(self, trace_tol: float = 1e-8, herm_tol: float = 1e-10,
                 eig_floor: float = EIG_FLOOR):
        """Raise ValueError unless Hermitian, unit trace and positive."""
        herm = np.max(np.abs(self.rho - self.rho.conj().T))
        if herm > herm_tol:
            raise ValueError(f"density matrix not Hermitian: defect {herm:.3e}")
        tr = np.trace(self.rho)
        if abs(tr - 1.0) > trace_tol:
            raise ValueError(f"density matrix trace {tr} is not 1")
        w = np.linalg.eigvalsh(0.5 * (self.rho + self.rho.conj().T))
        if w.min() < eig_floor:
            raise ValueError(f"density matrix has eigenvalue {w.min():.3e}")


@dataclass(frozen=True)
class FullLiouvillian:
    """Vectorized generator, assembled in coordinate form, stored CSR."""

    dim: int
    matrix: scipy.sparse.csr_matrix


def annihilation(dim: int) -> FockOperator:
    """Annihilation operator; the number operator a^dag a is diag(0..dim-1)."""
    if dim < 2:
        raise ValueError(f"dim must be at least 2, got {dim}")
    return FockOperator(dim=dim, m=np.diag(np.sqrt(np.arange(1.0, dim)), 1)
                        .astype(complex))


def _coherent_amplitudes(alpha: complex, dim: int) -> np.ndarray:
    c = np.empty(dim, dtype=complex)
    c[0] = 1.0
    for n in range(1, dim):
        c[n] = c[n - 1] * alpha / math.sqrt(n)
    return c * np.exp(-0.5 * abs(alpha) ** 2)


def coherent_tail(alpha_mag: float, dim: int) -> float:
    """Poisson weight of a coherent state beyond level dim-1."""
    c = _coherent_amplitudes(alpha_mag, dim)
    return max(0.0, 1.0 - float(np.sum(np.abs(c) ** 2)))


def choose_dim(alpha_mag: float, tail_tol: float = TAIL_TOL,
               guard: int = GUARD_LEVELS) -> int:
    """Smallest dimension with coherent tail below tail_tol, plus guard levels."""
    dim = max(2, int(math.ceil(abs(alpha_mag) ** 2)))
    while coherent_tail(alpha_mag, dim) >= tail_tol:
        dim += 1
        if dim > 10_000:
            raise ValueError(f"no reasonable truncation for |alpha| = {alpha_mag}")
    return dim + guard


def coherent_state(alpha: complex, dim: int) -> np.ndarray:
    """Normalized truncated coherent state.

    Raises
    ------
    ValueError
        If the truncation discards more than TAIL_TOL of the state weight;
        the message reports the measured tail mass.
    """
    c = _coherent_amplitudes(alpha, dim)
    tail = max(0.0, 1.0 - float(np.sum(np.abs(c) ** 2)))
    if tail >= TAIL_TOL:
        raise ValueError(
            f"dim {dim} insufficient for |alpha| = {abs(alpha):.3f}: "
            f"tail mass {tail:.3e}"
        )
    return c / np.linalg.norm(c)


def cat_state(alpha: complex, parity, dim: int) -> np.ndarray:
    """Normalized even (+) or odd (-) superposition of |alpha>, |-alpha>."""
    sign = {"+": 1, "-": -1, 1: 1, -1: -1}.get(parity)
    if sign is None:
        raise ValueError(f"parity must be '+'/'-' or +1/-1, got {parity!r}")
    v = coherent_state(alpha, dim) + sign * coherent_state(-alpha, dim)
    norm = np.linalg.norm(v)
    if norm < 1e-12:
        raise ValueError("cat state norm underflow (alpha too small)")
    return v / norm


def build_full_liouvillian(params: SystemParams, dim: int) -> FullLiouvillian:
    """Generator -i(H x I - I x H^T) + sum over jump operators a, a^2.

    H = delta a^dag a + (eps2 a^dag^2 + eps2* a^2) + eps (a + a^dag) with
    jump rates kappa and kappa2.  The assembled matrix is checked against
    the trace functional: vec(I)^T L must vanish.
    """
    a = scipy.sparse.diags(np.sqrt(np.arange(1.0, dim)), 1, dtype=complex,
                           format="csr")
    ad = a.conj().T.tocsr()
    eye = scipy.sparse.identity(dim, dtype=complex, format="csr")
    eps2 = params.eps2
    h = (params.delta * (ad @ a) + eps2 * (ad @ ad) + np.conj(eps2) * (a @ a)
         + params.eps * (a + ad))
    lio = -1j * (scipy.sparse.kron(h, eye) - scipy.sparse.kron(eye, h.T))
    for rate, op in ((params.kappa, a), (params.kappa2, a @ a)):
        gamma = math.sqrt(rate) * op
        gd = gamma.conj().T.tocsr()
        lio = lio + (
            scipy.sparse.kron(gamma, gamma.conj())
            - 0.5 * scipy.sparse.kron(gd @ gamma, eye)
            - 0.5 * scipy.sparse.kron(eye, gamma.T @ gamma.conj())
        )
    lio = lio.tocsr()
    trace_row = eye.toarray().reshape(-1) @ lio
    scale = max(1.0, np.abs(lio.data).max() if lio.nnz else 0.0)
    if np.max(np.abs(trace_row)) > 1e-10 * scale:
        raise RuntimeError(
            f"trace functional not annihilated: residual "
            f"{np.max(np.abs(trace_row)):.3e}"
        )
    return FullLiouvillian(dim=dim, matrix=lio)


def _repair(y: np.ndarray, dim: int, t: float) -> np.ndarray:
    """Re-Hermitize and renormalize one output state; corrections bounded."""
    rho = y.reshape(dim, dim)
    herm = 0.5 * (rho + rho.conj().T)
    herm_corr = np.max(np.abs(rho - herm))
    tr = float(np.trace(herm).real)
    trace_corr = abs(1.0 - tr)
    if herm_corr > MAX_CORRECTION or trace_corr > MAX_CORRECTION:
        raise RuntimeError(
            f"integrator drift at t={t:g}: hermiticity {herm_corr:.3e}, "
            f"trace {trace_corr:.3e} exceed {MAX_CORRECTION:g}"
        )
    logger.debug("t=%g repair: hermiticity %.2e, trace %.2e",
                 t, herm_corr, trace_corr)
    return herm / tr


def evolve(L: FullLiouvillian, rho0: DensityMatrix, t_grid,
           rel_tol: float = 1e-9, abs_tol: float = 1e-12) -> list:
    """Integrate the master equation, with dense output at ``t_grid``.

    Adaptive embedded Runge-Kutta (Dormand-Prince 5th order with 4th-order
    error estimate, PI step control) on the vectorized state.  Each output
    is re-Hermitized and trace-renormalized; corrections beyond 1e-7 fail
    the run rather than masking an integration problem.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size == 0:
        raise ValueError("t_grid must be a non-empty 1-d sequence")
    if t_grid[0] != 0.0 or np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be strictly ascending and start at 0")
    if rho0.dim != L.dim:
        raise ValueError(f"state dim {rho0.dim} != Liouvillian dim {L.dim}")
    rho0.validate()
    if t_grid.size == 1:
        return [rho0]
    matrix = L.matrix
    sol = solve_ivp(
        lambda t, y: matrix @ y,
        (0.0, float(t_grid[-1])),
        rho0.rho.reshape(-1),
        method="RK45",
        t_eval=t_grid,
        rtol=rel_tol,
        atol=abs_tol,
    )
    if not sol.success:
        raise ConvergenceError(
            f"integration failed at t = {sol.t[-1] if sol.t.size else 0}: "
            f"{sol.message}"
        )
    return [
        DensityMatrix(dim=L.dim, rho=_repair(sol.y[:, k], L.dim, t_grid[k]))
        for k in range(t_grid.size)
    ]


def steady_state_full(L: FullLiouvillian, rho0: DensityMatrix | None = None, *,
                      residual_tol: float = 1e-10, max_time: float = 1e4,
                      rel_tol: float = 1e-9, abs_tol: float = 1e-12
                      ) -> DensityMatrix:
    """Steady state: relax dynamically, then project onto the kernel.

    Integrates in growing chunks until ``||L vec(rho)||_1`` either drops
    below ``residual_tol`` or stops improving (the trajectory residual
    bottoms out at integrator accuracy, well above the tolerance), then
    performs one null-space projection by solving the generator with its
    first row replaced by the trace constraint.  The returned state must
    satisfy the residual tolerance; non-convergence beyond ``max_time``
    without reaching the plateau raises.
    """
    if rho0 is None:
        psi0 = np.zeros(L.dim)
        psi0[0] = 1.0
        rho0 = DensityMatrix.from_state_vector(psi0)
    rho = rho0
    residual = float(np.abs(L.matrix @ rho.rho.reshape(-1)).sum())
    t_done, chunk = 0.0, 10.0
    while residual >= residual_tol:
        if t_done >= max_time:
            raise ConvergenceError(
                f"steady state not reached by t = {max_time:g}; residual "
                f"{residual:.3e}"
            )
        rho = evolve(L, rho, [0.0, chunk], rel_tol, abs_tol)[-1]
        t_done += chunk
        chunk *= 1.5
        previous, residual = residual, float(
            np.abs(L.matrix @ rho.rho.reshape(-1)).sum())
        if residual > 0.3 * previous:
            break  # relaxed to the integrator floor; projection takes over
    system = L.matrix.tolil(copy=True)
    trace_row = np.zeros(L.dim * L.dim)
    trace_row[:: L.dim + 1] = 1.0
    system[0] = trace_row
    rhs = np.zeros(L.dim * L.dim, dtype=complex)
    rhs[0] = 1.0
    vec = scipy.sparse.linalg.spsolve(system.tocsc(), rhs)
    out = DensityMatrix(dim=L.dim, rho=_repair(vec, L.dim, math.inf))
    out.validate()
    final = float(np.abs(L.matrix @ out.rho.reshape(-1)).sum())
    if final >= residual_tol:
        raise ConvergenceError(
            f"kernel projection left residual {final:.3e} >= {residual_tol:g}"
        )
    return out


def hermitian_eigendecomposition(hmat: np.ndarray):
    """Eigenvalues (ascending) and orthonormal eigenvectors of a Hermitian matrix."""
    hmat = np.asarray(hmat, dtype=complex)
    defect = np.max(np.abs(hmat - hmat.conj().T))
    if defect > 1e-8 * max(1.0, float(np.max(np.abs(hmat)))):
        raise ValueError(f"matrix not Hermitian: defect {defect:.3e}")
    return np.linalg.eigh(0.5 * (hmat + hmat.conj().T))


def _psd_sqrt(rho: np.ndarray) -> np.ndarray:
    w, v = hermitian_eigendecomposition(rho)
    if w.min() < EIG_FLOOR:
        raise ValueError(f"negative eigenvalue {w.min():.3e} beyond round-off")
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T


def fidelity(rho1: DensityMatrix, rho2: DensityMatrix) -> float:
    """Uhlmann fidelity (Tr sqrt(sqrt(rho1) rho2 sqrt(rho1)))^2, in [0, 1]."""
    if rho1.dim != rho2.dim:
        raise ValueError(f"dimension mismatch: {rho1.dim} vs {rho2.dim}")
    s1 = _psd_sqrt(rho1.rho)
    inner = s1 @ rho2.rho @ s1
    w, _ = hermitian_eigendecomposition(0.5 * (inner + inner.conj().T))
    if w.min() < EIG_FLOOR:
        raise ValueError(f"negative eigenvalue {w.min():.3e} beyond round-off")
    f = float(np.sum(np.sqrt(np.clip(w, 0.0, None)))) ** 2
    return min(1.0, max(0.0, f))


def embed_logical(v: LogicalVector, alpha: complex, dim: int) -> DensityMatrix:
    """Expand a logical vector into the truncated Fock basis.

    rho = sum_jk v_jk |C_j><C_k| over j, k in {+, -}.
    """
    if v.hermiticity_defect() > 1e-7:
        raise ValueError("logical vector does not encode a Hermitian matrix")
    if abs(v.trace() - 1.0) > 1e-7:
        raise ValueError(f"logical vector trace {v.trace()} is not 1")
    cp = cat_state(alpha, +1, dim)
    cm = cat_state(alpha, -1, dim)
    rho = (v.v[0] * np.outer(cp, cp.conj()) + v.v[1] * np.outer(cp, cm.conj())
           + v.v[2] * np.outer(cm, cp.conj()) + v.v[3] * np.outer(cm, cm.conj()))
    return DensityMatrix(dim=dim, rho=0.5 * (rho + rho.conj().T))


@dataclass(frozen=True)
class SubspaceValidation:
    """Fidelity surface between full and projected dynamics."""

    delta_norm: np.ndarray
    t_grid: np.ndarray
    fidelity: np.ndarray  # shape (len(delta_norm), len(t_grid))
    min_fidelity: float
    argmin: tuple
    dim: int
    dim_doubled_check: float | None


def _fidelity_column(params: SystemParams, delta: float, t_grid: np.ndarray,
                     dim: int) -> np.ndarray:
    """Fidelity vs time between full and embedded projected dynamics."""
    manifold = derive_cat_manifold(params)
    params_d = SystemParams(kappa=params.kappa, kappa2=params.kappa2,
                            eps=params.eps, delta=delta,
                            eps2_mag=params.eps2_mag, theta=params.theta)
    v0 = LogicalVector(v=np.array([1.0, 0.0, 0.0, 0.0], dtype=complex))
    rho0 = embed_logical(v0, manifold.alpha, dim)
    full = evolve(build_full_liouvillian(params_d, dim), rho0, t_grid)
    logical = propagate_many(build_matrix(params_d, manifold), v0, t_grid)
    out = np.empty(t_grid.size)
    for k in range(t_grid.size):
        rho_l = embed_logical(LogicalVector(v=logical[k]), manifold.alpha, dim)
        out[k] = fidelity(full[k], rho_l)
    return out


def subspace_fidelity_scan(params: SystemParams, delta_norm, t_grid, *,
                           dim: int | None = None, delta_ref: float | None = None,
                           doubling: str | None = "none", threads: int = 1
                           ) -> SubspaceValidation:
    """Fidelity between full and projected dynamics over a (detuning, time) grid.

    ``delta_norm`` values are detunings in units of ``delta_ref`` (default:
    the analytic triple-point detuning of the params' own manifold and
    phase).  The initial state is the even cat.  ``doubling`` controls the
    truncation-convergence check: 'none', 'ends_mid' (first, middle and last
    detuning columns recomputed at twice the dimension) or 'all'.
    """
    manifold = derive_cat_manifold(params)
    if delta_ref is None:
        locus = lep3_locus(manifold, params.theta, params.kappa)
        if not locus.exists:
            raise ValueError("no triple point exists for these parameters; "
                             "pass delta_ref explicitly")
        delta_ref = locus.delta_abs
    if dim is None:
        dim = choose_dim(manifold.alpha_mag)
    delta_norm = np.asarray(delta_norm, dtype=float)
    t_grid = np.asarray(t_grid, dtype=float)
    deltas = delta_norm * delta_ref

    def run(dims, indices):
        cols = {}
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                futures = {
                    i: pool.submit(_fidelity_column, params, deltas[i], t_grid, dims)
                    for i in indices
                }
                for i, fut in futures.items():
                    cols[i] = fut.result()
        else:
            for i in indices:
                cols[i] = _fidelity_column(params, deltas[i], t_grid, dims)
        return cols

    base = run(dim, range(delta_norm.size))
    surface = np.vstack([base[i] for i in range(delta_norm.size)])
    flat_argmin = int(np.argmin(surface))
    i_min, k_min = divmod(flat_argmin, t_grid.size)
    doubled_check = None
    if doubling and doubling != "none":
        if doubling == "all":
            indices = list(range(delta_norm.size))
        elif doubling == "ends_mid":
            indices = sorted({0, delta_norm.size // 2, delta_norm.size - 1})
        else:
            raise ValueError(f"unknown doubling mode {doubling!r}")
        redone = run(2 * dim, indices)
        doubled_check = max(
            float(np.max(np.abs(redone[i] - base[i]))) for i in indices
        )
    return SubspaceValidation(
        delta_norm=delta_norm,
        t_grid=t_grid,
        fidelity=surface,
        min_fidelity=float(surface.min()),
        argmin=(float(delta_norm[i_min]), float(t_grid[k_min])),
        dim=dim,
        dim_doubled_check=doubled_check,
    )
