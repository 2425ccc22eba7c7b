import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import catlep as cl
from conftest import CANONICAL_EPS2, THETA0


def test_manifold_at_canonical_point(canonical_manifold):
    man = canonical_manifold
    assert man.alpha_mag == pytest.approx(1.364, abs=1e-3)
    assert man.phi_alpha == pytest.approx(0.0, abs=1e-15)
    assert man.alpha.imag == pytest.approx(0.0, abs=1e-15)
    assert man.p == pytest.approx(0.9761, abs=1e-4)
    # frozen from the Fock-basis oracle <C-|a|C+>/alpha at dim 40
    assert man.p == pytest.approx(0.9760526848941493, abs=1e-12)


def test_manifold_purely_imaginary_at_half_pi():
    params = cl.SystemParams(eps2_mag=0.5, theta=0.5 * math.pi)
    man = cl.derive_cat_manifold(params)
    assert man.phi_alpha == pytest.approx(0.5 * math.pi)
    assert abs(man.alpha.real) < 1e-15 * man.alpha_mag
    assert man.alpha.imag == pytest.approx(man.alpha_mag)


def test_manifold_rejects_degenerate_drive():
    with pytest.raises(ValueError, match="degenerate"):
        cl.derive_cat_manifold(cl.SystemParams(eps2_mag=0.0))


def test_params_validation():
    with pytest.raises(ValueError):
        cl.SystemParams(kappa2=0.0)
    with pytest.raises(ValueError):
        cl.SystemParams(kappa=-1.0)
    with pytest.raises(ValueError):
        cl.SystemParams(eps=-0.1)
    assert cl.SystemParams(theta=2.5 * math.pi).theta == pytest.approx(0.5 * math.pi)


def test_from_absolute_reproduces_canonical_ratios():
    params = cl.SystemParams.from_absolute(
        kappa_hz=14e3, kappa2_hz=2.16e6, eps_hz=15e3, eps2_mag_hz=2e6,
        theta=THETA0)
    assert params.kappa == pytest.approx(6.48e-3, rel=2e-3)
    assert params.eps == pytest.approx(6.94e-3, rel=2e-3)
    assert params.eps2_mag == pytest.approx(0.93, rel=5e-3)
    assert params.kappa2 == 1.0


@pytest.mark.parametrize("p,j,sign,expected", [
    (1.0, 2, "+", 2.0),
    (1.0, 2, "-", 0.0),
])
def test_p_combination_symmetric_point(p, j, sign, expected):
    assert cl.p_combination(p, j, sign) == pytest.approx(expected, abs=1e-15)


def test_p_combination_canonical(canonical_manifold):
    val = cl.p_combination(canonical_manifold.p, 2, "-")
    assert val == pytest.approx(0.0970, abs=1e-4)
    with mpmath.workdps(40):
        hi = mpmath.mpf(canonical_manifold.p)
        exact = float(hi**-2 - hi**2)
    assert val == pytest.approx(exact, rel=1e-14)


def test_p_combination_rejects_bad_inputs():
    with pytest.raises(ValueError):
        cl.p_combination(0.0, 2, "+")
    with pytest.raises(ValueError):
        cl.p_combination(1.5, 2, "+")
    with pytest.raises(ValueError):
        cl.p_combination(0.5, 0, "+")
    with pytest.raises(ValueError):
        cl.p_combination(0.5, 2, "x")


def test_manifold_populates_all_combinations(canonical_manifold):
    man = canonical_manifold
    assert set(man.p_comb) == {(j, s) for j in (2, 4, 6) for s in "+-"}
    for (j, s), val in man.p_comb.items():
        assert val == pytest.approx(cl.p_combination(man.p, j, s), rel=1e-15)
    assert man.p2_plus >= 2.0
    assert man.p2_minus > 0.0


def test_confinement_rate_unit_values():
    params = cl.SystemParams(eps2_mag=0.5)  # |alpha| = 1
    man = cl.derive_cat_manifold(params)
    assert cl.confinement_rate(params, man) == pytest.approx(4.0, rel=1e-12)


def test_confinement_rate_canonical(canonical_params, canonical_manifold):
    rate = cl.confinement_rate(canonical_params, canonical_manifold)
    assert rate == pytest.approx(4.0 * 2.0 * CANONICAL_EPS2, rel=1e-12)  # 7.44


def test_adiabatic_elimination_examples():
    out = cl.adiabatic_elimination(1.0, 0.0, 4.0)
    assert out.eps2 == 0.0
    assert out.kappa2 == pytest.approx(1.0)

    out = cl.adiabatic_elimination(1.0, 1j, 2.0)
    assert out.eps2 == pytest.approx(1.0)
    assert out.kappa2 == pytest.approx(2.0)

    out = cl.adiabatic_elimination(1.0, 1j, 2.0, alpha_mag_hint=1.0)
    assert not out.regime_ok  # 2 < 8

    with pytest.raises(ValueError):
        cl.adiabatic_elimination(0.0, 1j, 2.0)
    with pytest.raises(ValueError):
        cl.adiabatic_elimination(1.0, 1j, -2.0)


@settings(max_examples=200)
@given(eps2=st.floats(1e-3, 10.0), kappa2=st.floats(1e-2, 10.0),
       theta=st.floats(0.0, 2.0 * math.pi, exclude_max=True))
def test_amplitude_identity(eps2, kappa2, theta):
    params = cl.SystemParams(kappa2=kappa2, eps2_mag=eps2, theta=theta)
    man = cl.derive_cat_manifold(params)
    assert man.alpha_mag**2 * kappa2 == pytest.approx(2.0 * eps2, rel=1e-12)
    assert abs(man.alpha) == pytest.approx(man.alpha_mag, rel=1e-12)


@settings(max_examples=200)
@given(theta=st.floats(-50.0, 50.0))
def test_phase_identity_modulo_pi(theta):
    params = cl.SystemParams(eps2_mag=1.0, theta=theta)
    man = cl.derive_cat_manifold(params)
    residue = (man.phi_alpha + theta / 2.0 - 0.75 * math.pi) / math.pi
    assert abs(residue - round(residue)) < 1e-9


@settings(max_examples=200)
@given(p=st.floats(1e-3, 1.0, exclude_max=True),
       j=st.sampled_from([2, 4, 6]))
def test_p_combination_bounds(p, j):
    assert cl.p_combination(p, j, "+") >= 2.0
    assert cl.p_combination(p, j, "-") > 0.0


def test_norm_ratio_strictly_increasing():
    grid = np.linspace(0.1, 4.0, 100)
    values = [cl.cat_norm_ratio(a) for a in grid]
    assert all(b > a for a, b in zip(values, values[1:]))
    assert all(0.0 < v < 1.0 for v in values)


@pytest.mark.parametrize("alpha_mag", [0.5, 1.0, 1.5, 2.0, 2.5, 3.0])
def test_norm_ratio_matches_fock_oracle(alpha_mag):
    dim = cl.choose_dim(alpha_mag)
    a = cl.annihilation(dim)
    cp = cl.cat_state(alpha_mag, "+", dim)
    cm = cl.cat_state(alpha_mag, "-", dim)
    oracle = np.vdot(cm, a.m @ cp) / alpha_mag
    assert abs(oracle.imag) < 1e-12
    assert oracle.real == pytest.approx(cl.cat_norm_ratio(alpha_mag), abs=1e-8)
