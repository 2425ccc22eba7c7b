"""Dimensionless system parameters and derived cat-manifold quantities.

All rates and drive strengths are expressed in units of the engineered
two-photon loss rate ``kappa2`` (canonical value 1).  The two-photon drive
``eps2 = |eps2| exp(-i theta)`` together with two-photon loss pins the
oscillator to the manifold spanned by the coherent states ``|+alpha>`` and
``|-alpha>``; everything downstream (logical Liouvillian, exceptional-point
loci, resultants) is parametrized by the quantities derived here.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import NamedTuple

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class SystemParams:
    """Dimensionless parameters of the driven-dissipative oscillator.

    Parameters
    ----------
    kappa : float
        Single-photon loss rate, in units of ``kappa2``.
    kappa2 : float
        Engineered two-photon loss rate.  Canonical value 1; kept explicit
        so absolute-unit inputs remain representable.
    eps : float
        Single-photon drive strength (taken real), in units of ``kappa2``.
    delta : float
        Detuning between the single-photon drive and the oscillator.
    eps2_mag : float
        Two-photon drive magnitude ``|eps2|``.
    theta : float
        Two-photon drive phase, ``eps2 = |eps2| exp(-i theta)``.  Stored
        reduced modulo 2*pi.
    """

    kappa: float = 0.0
    kappa2: float = 1.0
    eps: float = 0.0
    delta: float = 0.0
    eps2_mag: float = 0.0
    theta: float = 0.0

    def __post_init__(self):
        if not self.kappa2 > 0:
            raise ValueError(f"kappa2 must be positive, got {self.kappa2}")
        if self.kappa < 0:
            raise ValueError(f"kappa must be non-negative, got {self.kappa}")
        if self.eps < 0:
            raise ValueError(f"eps must be non-negative, got {self.eps}")
        if self.eps2_mag < 0:
            raise ValueError(f"eps2_mag must be non-negative, got {self.eps2_mag}")
        object.__setattr__(self, "theta", self.theta % TWO_PI)

    @classmethod
    def from_absolute(cls, *, kappa_hz, kappa2_hz, eps_hz=0.0, delta_hz=0.0,
                      eps2_mag_hz=0.0, theta=0.0) -> "SystemParams":
        """Build from absolute rates (any common frequency unit, e.g. Hz).

        Every rate is divided by ``kappa2_hz``; the stored ``kappa2`` is 1.
        """
        if not kappa2_hz > 0:
            raise ValueError("kappa2_hz must be positive")
        return cls(
            kappa=kappa_hz / kappa2_hz,
            kappa2=1.0,
            eps=eps_hz / kappa2_hz,
            delta=delta_hz / kappa2_hz,
            eps2_mag=eps2_mag_hz / kappa2_hz,
            theta=theta,
        )

    @property
    def eps2(self) -> complex:
        """Complex two-photon drive amplitude ``|eps2| exp(-i theta)``."""
        return self.eps2_mag * cmath.exp(-1j * self.theta)


@dataclass(frozen=True)
class CatManifold:
    """Derived cat-qubit quantities.

    ``alpha`` is the coherent amplitude pinned by the two-photon processes,
    ``p`` the ratio of even/odd cat normalization constants, and ``p_comb``
    the combinations ``p^{-j} +/- p^{j}`` (keys ``(j, '+')`` / ``(j, '-')``)
    that appear throughout the spectral formulas.
    """

    alpha: complex
    alpha_mag: float
    phi_alpha: float
    p: float
    p_comb: dict

    @property
    def p2_plus(self) -> float:
        return self.p_comb[(2, "+")]

    @property
    def p2_minus(self) -> float:
        return self.p_comb[(2, "-")]

    @property
    def p4_plus(self) -> float:
        return self.p_comb[(4, "+")]

    @property
    def p6_plus(self) -> float:
        return self.p_comb[(6, "+")]


def p_combination(p: float, j: int, sign: str) -> float:
    """Return ``p**(-j) + p**j`` for sign '+' or ``p**(-j) - p**j`` for '-'."""
    if not 0 < p <= 1:
        raise ValueError(f"p must lie in (0, 1], got {p}")
    if not (isinstance(j, int) and j > 0):
        raise ValueError(f"j must be a positive integer, got {j}")
    if sign == "+":
        return p ** (-j) + p**j
    if sign == "-":
        return p ** (-j) - p**j
    raise ValueError(f"sign must be '+' or '-', got {sign!r}")


def cat_norm_ratio(alpha_mag: float) -> float:
    """Normalization ratio p = N+/N- of the even/odd cat states.

    With N_pm = [2 (1 +/- exp(-2|alpha|^2))]^(-1/2) this reduces to
    p = sqrt(tanh(|alpha|^2)), strictly increasing from 0 to 1.
    """
    return math.sqrt(math.tanh(alpha_mag**2))


def derive_cat_manifold(params: SystemParams) -> CatManifold:
    """Derive the cat manifold (alpha, p, p-combinations) from the drives.

    The pinned amplitude satisfies ``alpha^2 = -2i eps2 / kappa2``; we take
    the branch with phase ``phi_alpha = 3*pi/4 - theta/2``, so that
    ``theta = 3*pi/2`` gives real positive alpha.

    Raises
    ------
    ValueError
        If ``eps2_mag == 0``: the manifold degenerates (alpha = 0) and the
        cat basis is undefined.
    """
    if params.eps2_mag == 0:
        raise ValueError("degenerate manifold: eps2_mag = 0 gives alpha = 0 "
                         "and an undefined cat basis")
    alpha_mag = math.sqrt(2.0 * params.eps2_mag / params.kappa2)
    phi_alpha = 0.75 * math.pi - 0.5 * params.theta
    alpha = alpha_mag * cmath.exp(1j * phi_alpha)
    p = cat_norm_ratio(alpha_mag)
    p_comb = {(j, s): p_combination(p, j, s) for j in (2, 4, 6) for s in "+-"}
    return CatManifold(alpha=alpha, alpha_mag=alpha_mag, phi_alpha=phi_alpha,
                       p=p, p_comb=p_comb)


def confinement_rate(params: SystemParams, manifold: CatManifold) -> float:
    """Exponential rate ``4 |alpha|^2 kappa2`` of confinement to the manifold."""
    return 4.0 * manifold.alpha_mag**2 * params.kappa2


class AdiabaticElimination(NamedTuple):
    eps2: complex
    kappa2: float
    regime_ok: bool


def adiabatic_elimination(g2: float, eps_d: complex, kappa_b: float,
                          alpha_mag_hint: float = 0.0) -> AdiabaticElimination:
    """Map the buffer-mode circuit parameters to effective drive and loss.

    A buffer mode at twice the oscillator frequency, driven with amplitude
    ``eps_d`` and decaying at ``kappa_b``, couples via ``g2 a^2 b^dagger +
    h.c.``.  Eliminating it adiabatically yields a two-photon drive
    ``eps2 = -2i g2 eps_d / kappa_b`` and a two-photon loss rate
    ``kappa2 = 4 g2^2 / kappa_b``.  ``regime_ok`` reports whether
    ``kappa_b >= 8 g2 |alpha|`` holds for the hinted cat size, the validity
    condition of the elimination.
    """
    if not g2 > 0:
        raise ValueError(f"g2 must be positive, got {g2}")
    if not kappa_b > 0:
        raise ValueError(f"kappa_b must be positive, got {kappa_b}")
    eps2 = -2j * g2 * eps_d / kappa_b
    kappa2 = 4.0 * g2**2 / kappa_b
    regime_ok = kappa_b >= 8.0 * g2 * alpha_mag_hint
    return AdiabaticElimination(eps2=eps2, kappa2=kappa2, regime_ok=regime_ok)
