import math
from dataclasses import replace

import numpy as np
import pytest

import catlep as cl
from catlep.logical_liouvillian import ConvergenceError, Spectrum, numeric_eigenvalues
from conftest import draw_sweep, sweep_objects


def _spectrum_with(e2, e3, e4):
    return Spectrum(e=(0.0, e2, e3, e4), eta_plus=0.0, eta_minus=0.0,
                    q=0.0, m_coef=0.0)


def test_resultants_triple_coalescence_is_origin():
    pair = cl.resultants(_spectrum_with(-1.0, -1.0, -1.0))
    assert pair.r1 == 0.0
    assert pair.r2 == 0.0


def test_resultants_equally_spaced_triple():
    pair = cl.resultants(_spectrum_with(-1.0, -2.0, -3.0))
    assert pair.r1 == pytest.approx(-4.0)
    assert pair.r2 == pytest.approx(0.0, abs=1e-14)


def test_resultants_generic_triple():
    pair = cl.resultants(_spectrum_with(-1.0, -2.0, -4.0))
    assert pair.r1 == pytest.approx(-36.0)
    assert pair.r2 == pytest.approx(-160.0)


def test_resultants_at_hermitian_origin():
    pair = cl.resultants_at(cl.SystemParams(kappa=0.0, eps2_mag=0.93))
    assert pair.r1 == 0.0 and pair.r2 == 0.0


def test_resultants_at_zero_drive_pair_coalescence(canonical_params):
    params = replace(canonical_params, eps=0.0)
    manifold = cl.derive_cat_manifold(params)
    lep2 = cl.lep2_zero_drive(params, manifold)
    at_ep = cl.resultants_at(replace(params, delta=lep2))
    away = cl.resultants_at(replace(params, delta=1.3 * lep2))
    assert abs(at_ep.r1) < 1e-10 * abs(away.r1)


def test_resultants_reality_and_invariant_identities():
    draws = draw_sweep(1000, seed=3)
    _, alpha_mag, p = sweep_objects(draws)
    r1, r2, res = cl.resultant_components(
        draws["eps"], draws["delta"], kappa=draws["kappa"],
        sin_theta=np.sin(draws["theta"]), alpha_mag=alpha_mag, p=p)
    floor = 1e-30
    assert np.all(res <= 1e-8 * np.maximum(np.maximum(np.abs(r1), np.abs(r2)),
                                           floor))
    # the real pair reduces to the cubic invariants: R1 = 108(q^2+m^3),
    # R2 = 432 q (independent algebraic route)
    q, m = cl.cubic_invariants(draws["kappa"], draws["eps"], draws["delta"],
                               np.sin(draws["theta"]), alpha_mag, p)
    scale1 = np.abs(108 * (q**2 + m**3)) + floor
    scale2 = np.abs(432 * q) + floor
    assert np.max(np.abs(r1 - 108 * (q**2 + m**3)) / scale1) < 1e-6
    assert np.max(np.abs(r2 - 432 * q) / scale2) < 1e-6


def test_sign_semantics_classify_spectrum():
    draws = draw_sweep(2000, seed=5)
    mats, alpha_mag, p = sweep_objects(draws)
    r1, _, _ = cl.resultant_components(
        draws["eps"], draws["delta"], kappa=draws["kappa"],
        sin_theta=np.sin(draws["theta"]), alpha_mag=alpha_mag, p=p)
    ev = numeric_eigenvalues(mats)
    scale = np.abs(ev).max(axis=1)
    has_complex_pair = np.abs(ev.imag).max(axis=1) > 1e-8 * scale
    decisive = np.abs(r1) > 1e-6 * np.abs(r1).max()
    assert np.array_equal(r1[decisive] > 0, has_complex_pair[decisive])


def _standard_loop(reference_point, center_scale=(1.0, 1.0), samples=64):
    eps_ref, delta_ref = reference_point
    return cl.LoopSpec(
        center=(center_scale[0] * eps_ref, center_scale[1] * delta_ref),
        radii=(0.4 * eps_ref, 0.4 * delta_ref),
        samples=samples,
    )


def test_winding_encircling_triple_point(canonical_params, reference_point):
    result = cl.winding_number(_standard_loop(reference_point),
                               canonical_params)
    assert abs(result.w) == 1
    assert result.confidence == "exact"


def test_winding_shifted_loop_is_trivial(canonical_params, reference_point):
    result = cl.winding_number(_standard_loop(reference_point, (1.5, 1.0)),
                               canonical_params)
    assert result.w == 0


def test_winding_small_loop_off_ep(canonical_params, reference_point):
    eps_ref, delta_ref = reference_point
    loop = cl.LoopSpec(center=(1.4 * eps_ref, 0.6 * delta_ref),
                       radii=(1e-3 * eps_ref, 1e-3 * delta_ref))
    assert cl.winding_number(loop, canonical_params).w == 0


def test_winding_orientation_reversal(canonical_params, reference_point):
    loop = _standard_loop(reference_point)
    ccw = cl.winding_number(loop, canonical_params)
    cw = cl.winding_number(loop, canonical_params, orientation=-1)
    assert cw.w == -ccw.w


def test_winding_additivity(canonical_params, reference_point):
    eps_ref, delta_ref = reference_point
    around_ep = cl.winding_number(_standard_loop(reference_point),
                                  canonical_params)
    around_nothing = cl.winding_number(
        cl.LoopSpec(center=(1.8 * eps_ref, delta_ref),
                    radii=(0.15 * eps_ref, 0.3 * delta_ref)),
        canonical_params)
    merged = cl.winding_number(
        cl.LoopSpec(center=(1.4 * eps_ref, delta_ref),
                    radii=(0.9 * eps_ref, 0.5 * delta_ref)),
        canonical_params)
    assert around_nothing.w == 0
    assert merged.w == around_ep.w + around_nothing.w


def test_winding_rejects_grazing_loop(canonical_params, reference_point):
    eps_ref, delta_ref = reference_point
    loop = cl.LoopSpec(center=(1.4 * eps_ref, delta_ref),
                       radii=(0.4 * eps_ref, 0.25 * delta_ref))
    with pytest.raises(ConvergenceError, match="grazes"):
        cl.winding_number(loop, canonical_params)


def test_trajectory_normalized_and_closed(canonical_params, reference_point):
    loop = _standard_loop(reference_point, samples=256)
    traj = cl.trajectory(loop, canonical_params)
    norms = np.hypot(traj[:, 1], traj[:, 2])
    assert np.abs(norms - 1.0).max() < 1e-12
    # encircles the origin once
    ang = np.unwrap(np.arctan2(traj[:, 2], traj[:, 1]))
    assert round((ang[-1] - ang[0]) / (2 * math.pi)) in (-1, 1)
    shifted = cl.trajectory(_standard_loop(reference_point, (1.5, 1.0),
                                           samples=256), canonical_params)
    ang = np.unwrap(np.arctan2(shifted[:, 2], shifted[:, 1]))
    assert round((ang[-1] - ang[0]) / (2 * math.pi)) == 0


def _normalized_grid(reference_point, span=(0.0, 2.0), n=201):
    eps_ref, delta_ref = reference_point
    return cl.GridSpec(eps_range=(span[0] * eps_ref, span[1] * eps_ref),
                       eps_count=n,
                       delta_range=(span[0] * delta_ref, span[1] * delta_ref),
                       delta_count=n)


def _min_separation(polys_a, polys_b):
    best = math.inf
    where = None
    for a in polys_a:
        for b in polys_b:
            d2 = ((a[:, None, :] - b[None, :, :]) ** 2).sum(-1)
            i, j = np.unravel_index(np.argmin(d2), d2.shape)
            if d2[i, j] < best:
                best, where = d2[i, j], a[i]
    return math.sqrt(best), where


def test_contours_meet_at_triple_point(canonical_params, reference_point):
    eps_ref, delta_ref = reference_point
    grid = _normalized_grid(reference_point)
    params = replace(canonical_params, eps=0.0, delta=0.0)
    c1 = cl.zero_contours(grid, "R1", params)
    c2 = cl.zero_contours(grid, "R2", params)
    assert c1 and c2
    norm = lambda polys: [np.column_stack([p[:, 0] / eps_ref,
                                           p[:, 1] / delta_ref])
                          for p in polys]
    c1n, c2n = norm(c1), norm(c2)
    # the straight R2 = 0 line passes through the triple point; the R1 = 0
    # set is cuspidal there (branch width ~ d^(3/2)), so marching squares
    # tracks it only to within a few cells of the point
    dist_r2 = min(np.hypot(p[:, 0] - 1.0, p[:, 1] - 1.0).min() for p in c2n)
    assert dist_r2 < 0.01
    dist_r1 = min(np.hypot(p[:, 0] - 1.0, p[:, 1] - 1.0).min() for p in c1n)
    assert dist_r1 < 0.06
    separation, where = _min_separation(c1n, c2n)
    assert separation < 0.005
    assert np.hypot(where[0] - 1.0, where[1] - 1.0) < 0.1


def test_contours_disjoint_at_half_pi(canonical_params, reference_point):
    eps_ref, delta_ref = reference_point
    grid = _normalized_grid(reference_point)
    params = replace(canonical_params, eps=0.0, delta=0.0,
                     theta=0.5 * math.pi)
    c1 = cl.zero_contours(grid, "R1", params)
    c2 = cl.zero_contours(grid, "R2", params)
    assert c1 and c2
    norm = lambda polys: [np.column_stack([p[:, 0] / eps_ref,
                                           p[:, 1] / delta_ref])
                          for p in polys]
    separation, _ = _min_separation(norm(c1), norm(c2))
    assert separation > 0.03


def test_zero_drive_axis_crossing(canonical_params, canonical_manifold):
    params = replace(canonical_params, eps=0.0)
    lep2 = cl.lep2_zero_drive(params, canonical_manifold)
    deltas = np.linspace(0.8 * lep2, 1.2 * lep2, 4001)
    r1, _, _ = cl.resultant_components(
        0.0, deltas, kappa=params.kappa, sin_theta=math.sin(params.theta),
        alpha_mag=canonical_manifold.alpha_mag, p=canonical_manifold.p)
    signs = np.sign(r1)
    crossings = np.nonzero(np.diff(signs))[0]
    assert crossings.size == 1
    crossing_delta = deltas[crossings[0]]
    assert crossing_delta == pytest.approx(lep2, rel=1e-3)


def test_drive_splits_pair_coalescence(canonical_params, canonical_manifold,
                                       reference_point):
    # one zero of R1 on the drive-free axis becomes two once the drive is on
    eps_ref, _ = reference_point
    params = replace(canonical_params, eps=0.0)
    lep2 = cl.lep2_zero_drive(params, canonical_manifold)
    eps_grid = np.linspace(0.0, 2.0 * eps_ref, 4001)[1:]
    for delta_factor in (1.02, 1.05):
        r1, _, _ = cl.resultant_components(
            eps_grid, delta_factor * lep2, kappa=params.kappa,
            sin_theta=math.sin(params.theta),
            alpha_mag=canonical_manifold.alpha_mag, p=canonical_manifold.p)
        crossings = np.count_nonzero(np.diff(np.sign(r1)))
        assert crossings == 2

    # the same topology through the contour extractor: the extracted R1 = 0
    # polylines cross a fixed-detuning slice twice once the drive is on, and
    # meet the drive-free axis once
    grid = cl.GridSpec(eps_range=(0.0, 2.0 * eps_ref), eps_count=301,
                       delta_range=(0.9 * lep2, 1.1 * lep2), delta_count=301)
    polylines = cl.zero_contours(grid, "R1", params)
    assert polylines
    slice_delta = 1.05 * lep2
    slice_crossings = sum(
        int(np.count_nonzero(np.diff(np.sign(poly[:, 1] - slice_delta))))
        for poly in polylines)
    assert slice_crossings == 2
    axis_hits = sum(int(np.count_nonzero(poly[:, 0] < 1e-12 * eps_ref))
                    for poly in polylines)
    assert axis_hits == 1


def test_contours_meet_near_tilted_phase(canonical_params, reference_point):
    # at theta = 5 pi / 4 the families meet near normalized (1.08, 1)
    eps_ref, delta_ref = reference_point
    grid = _normalized_grid(reference_point)
    params = replace(canonical_params, eps=0.0, delta=0.0,
                     theta=1.25 * math.pi)
    norm = lambda polys: [np.column_stack([p[:, 0] / eps_ref,
                                           p[:, 1] / delta_ref])
                          for p in polys]
    c1 = norm(cl.zero_contours(grid, "R1", params))
    c2 = norm(cl.zero_contours(grid, "R2", params))
    separation, where = _min_separation(c1, c2)
    assert separation < 0.005
    assert np.hypot(where[0] - 1.0824, where[1] - 1.0) < 0.12


def test_loop_and_grid_validation():
    with pytest.raises(ValueError):
        cl.LoopSpec(center=(1.0, 1.0), radii=(0.0, 1.0))
    with pytest.raises(ValueError):
        cl.LoopSpec(center=(1.0, 1.0), radii=(1.0, 1.0), samples=8)
    with pytest.raises(ValueError):
        cl.GridSpec(eps_range=(0.0, 1.0), eps_count=1,
                    delta_range=(0.0, 1.0), delta_count=10)
    with pytest.raises(ValueError):
        cl.GridSpec(eps_range=(0.0, math.inf), eps_count=10,
                    delta_range=(0.0, 1.0), delta_count=10)
    with pytest.raises(ValueError):
        cl.zero_contours(
            cl.GridSpec(eps_range=(0.0, 1.0), eps_count=5,
                        delta_range=(0.0, 1.0), delta_count=5),
            "R3", cl.SystemParams(eps2_mag=0.5))
