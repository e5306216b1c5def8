import logging
import math
from dataclasses import replace

import numpy as np
import pytest
import scipy.linalg

from rieszlab.contrib.pipeline.cli import wave_demo_config
from rieszlab.contrib.pipeline.config import build_system
from rieszlab.contrib.pipeline.pipeline import run_pipeline
from rieszlab.core.errors import (EmptyStableTail, InvalidParameter, PoleOnCircle, SizeMismatch,
                                  UnavailableTailBound, Uncontrollable)
from rieszlab.core.executor import ScanPoolExecutor
from rieszlab.core.modal import audit_assumptions
from rieszlab.core.operators import h_tail_bound
from rieszlab.core.stability import (check_nonresonance, continuous_margin, default_axis_grid, design_feedback,
                                     discrete_margin, estimate_tau_star, exterior_minimum, gamma_constants,
                                     split_spectrum, strip_bound_m1, verify_mode_bound)
from rieszlab.core.structs import MarginOptions, SampledOperator, SectorParams, TailData, TruncatedSystem, Verdict

from tests.oracles import random_exterior_points, random_system


SECTOR = SectorParams(1.0, 1.0, 1.0)


def modes(*triples, sector=SECTOR, **kwargs):
    return TruncatedSystem.from_modes(list(triples), sector, **kwargs)


@pytest.fixture
def placed_unstable():
    """lambda = 1, b = 1, f = -2: the continuous loop has its pole at -1 and Delta(tau) = 2 - e^tau."""
    return modes((1.0, 1.0, -2.0))


def test_split_spectrum():
    split = split_spectrum(modes((1 + 1j, 0.0), (-1.0, 0.0)))
    assert split.unstable_indices == (0, )
    assert split.bad_region_indices == (0, )
    assert split.stable_indices == (1, )


def test_split_spectrum_bad_region(sector_a1):
    split = split_spectrum(modes((-0.01 + 10j, 0.0), (-1 - 10j, 0.0), sector=sector_a1))
    assert split.unstable_indices == ()
    assert split.bad_region_indices == (0, )
    assert split.stable_indices == (1, )


def test_split_spectrum_polynomial_family(sector_family):
    split = split_spectrum(sector_family)
    assert split.bad_region_indices == ()
    assert len(split.stable_indices) == 100


def test_strip_bound_m1():
    assert strip_bound_m1() == pytest.approx(1.0)


def test_gamma_constants_single_mode():
    sys = modes((-1.0, 1.0))
    constants = gamma_constants(sys, 1.0, c1=1.0)
    assert constants.kappa == pytest.approx(1.0)
    assert constants.m1 == pytest.approx(1.0)
    assert constants.upsilon2 == pytest.approx(math.e)
    assert constants.upsilon1 == pytest.approx(max(2.0 / (1.0 - math.exp(-1.0)), math.e))
    assert constants.upsilon0 == pytest.approx(math.e)
    assert constants.alpha_tilde == 1.0


def test_gamma_constants_scaling():
    base = gamma_constants(modes((-1.0, 1.0)), 1.0)
    doubled = gamma_constants(modes((-2.0, 1.0)), 1.0)
    assert doubled.kappa == pytest.approx(2.0 * base.kappa)
    # the first branch 2 / ((1 - e^-1) kappa) halves and drops below e M1 / omega
    assert doubled.upsilon1 == pytest.approx(max(1.0 / (1.0 - math.exp(-1.0)), math.e))
    steeper = gamma_constants(modes((-1.0, 1.0)), 1.0, alpha_tilde=3.0)
    assert steeper.upsilon2 == pytest.approx(base.upsilon2)


def test_gamma_constants_bad_region_distance():
    sys = modes((-0.5, 1.0), (-2.0, 1.0), sector=SectorParams(1.0, 1.0, 1.0))
    constants = gamma_constants(sys, 1.0)
    assert constants.c1 == pytest.approx(1.0 - math.exp(-0.5))
    assert constants.kappa == pytest.approx(2.0)
    assert constants.kappa_all == pytest.approx(0.5)


def test_gamma_constants_errors():
    with pytest.raises(InvalidParameter):
        gamma_constants(modes((-1.0, 1.0), sector=SectorParams(2.0, 1.0, 1.0)), 1.0, alpha_tilde=1.0)
    with pytest.raises(InvalidParameter):
        gamma_constants(modes((-1.0, 1.0)), 0.0)
    with pytest.raises(EmptyStableTail):
        gamma_constants(modes((-0.5, 1.0)), 1.0)


@pytest.mark.parametrize('tau', [0.05, 1.0, 7.0])
def test_verify_mode_bound_polynomial_family(sector_family, rng, tau):
    constants = gamma_constants(sector_family, tau)
    theta = 2.0 * np.pi * rng.random(5000)
    z = np.concatenate([np.exp(1j * theta), random_exterior_points(rng, 5000, 1.0, 3.0)])
    assert verify_mode_bound(sector_family, tau, z, constants) <= 1e-12


def test_verify_mode_bound_on_case_boundary(rng):
    # lambda = -omega exactly
    sys = modes((-1.0, 1.0), (-3.0 + 1j, 1.0))
    for tau in (0.3, 1.0, 4.0):
        constants = gamma_constants(sys, tau)
        z = np.exp(2j * np.pi * rng.random(2000))
        assert verify_mode_bound(sys, tau, z, constants) <= 1e-12


def test_verify_mode_bound_ignores_feedback(sector_family, rng):
    constants = gamma_constants(sector_family, 0.5)
    z = np.exp(2j * np.pi * rng.random(1000))
    with_f = sector_family.with_feedback(rng.standard_normal(100))
    assert verify_mode_bound(with_f, 0.5, z, constants) == verify_mode_bound(sector_family, 0.5, z, constants)


def test_verify_mode_bound_rejects_interior_points(sector_family):
    constants = gamma_constants(sector_family, 0.5)
    with pytest.raises(InvalidParameter):
        verify_mode_bound(sector_family, 0.5, [0.5], constants)


@pytest.mark.parametrize('seed', range(20))
def test_verify_mode_bound_random_systems(seed):
    rng = np.random.default_rng(seed)
    sys = random_system(rng, int(rng.integers(20, 51)))
    audit = audit_assumptions(sys)
    assert audit.verdict_per_assumption['A1'] is Verdict.PASS
    assert audit.verdict_per_assumption['A2'] is Verdict.PASS
    tau = rng.uniform(0.05, 5.0)
    constants = gamma_constants(sys, tau)
    # at least 10^4 (mode, z) pairs per system
    z = np.concatenate([np.exp(2j * np.pi * rng.random(250)), random_exterior_points(rng, 250)])
    assert verify_mode_bound(sys, tau, z, constants) <= 1e-12


def test_continuous_margin_without_feedback(sector_family):
    report = continuous_margin(sector_family)
    assert report.eps_c == 1.0
    assert report.grids_used['virtual_infinity'] is True
    assert report.truncation_only


def test_continuous_margin_closed_loop_pole_at_origin():
    # |1 - G(i w)|^2 = w^2 / (1 + w^2) vanishes at w = 0
    report = continuous_margin(modes((-1.0, 1.0, 1.0)))
    assert report.eps_c == pytest.approx(0.0, abs=1e-12)


def test_continuous_margin_negative_coupling():
    # |1 - G(i w)| = |i w + 2| / |i w + 1| decreases to 1 as w grows
    report = continuous_margin(modes((-1.0, 1.0, -1.0)))
    assert report.eps_c == 1.0


def test_continuous_margin_subtracts_tail():
    sys = modes((-1.0, 0.0), tails=TailData(0.0, 0.0, 0.0, 0.0, 0.25, 0.25))
    report = continuous_margin(sys)
    assert report.eps_c == pytest.approx(0.75)
    assert report.tail_bound_c == pytest.approx(0.25)
    assert not report.truncation_only


def test_continuous_margin_unknown_tail():
    sys = modes((-1.0, 0.0), tails=TailData(b_re_sq=1.0))
    with pytest.raises(UnavailableTailBound):
        continuous_margin(sys, strict=True)
    report = continuous_margin(sys)
    assert report.truncation_only
    assert report.tail_bound_c == 0.0


def test_continuous_margin_half_plane_points():
    sys = modes((-1.0, 1.0, 1.0))
    report = continuous_margin(sys, axis_grid=[5.0], half_plane_points=[0.5, [1.0, 1.0]])
    assert report.grids_used['half_plane_points'] == 2
    # at lambda = 0.5, |1 - 1/1.5| = 1/3
    assert report.eps_c == pytest.approx(1.0 / 3.0)
    with pytest.raises(InvalidParameter):
        continuous_margin(sys, half_plane_points=[-0.5])


def test_default_axis_grid_contains_frequencies(sector_family):
    grid = default_axis_grid(sector_family, points=401)
    assert 0.0 in grid
    assert np.all(np.isin(sector_family.eigenvalues.imag, grid))
    assert grid.max() == pytest.approx(1000.0)


def test_discrete_margin_without_feedback(sector_family):
    op = SampledOperator.from_system(sector_family, 0.2)
    report = discrete_margin(op, sys=sector_family)
    assert report.eps_d == pytest.approx(1.0)
    assert report.winding_number == 0
    assert report.exterior_zeros == 0


def test_discrete_margin_deadbeat(deadbeat_op, deadbeat_system):
    report = discrete_margin(deadbeat_op, 256, sys=deadbeat_system)
    assert report.eps_d == pytest.approx(2.0 / 3.0, rel=1e-12)
    assert report.exterior_zeros == 0
    assert report.tail_bound_d == 0.0
    assert report.grids_used['circle_nodes'] >= 512
    assert report.grids_used['initial_nodes'] == 256


def test_discrete_margin_without_system_is_truncation_only(deadbeat_op):
    report = discrete_margin(deadbeat_op)
    assert report.truncation_only
    assert report.eps_d == pytest.approx(2.0 / 3.0, rel=1e-12)


def test_discrete_margin_counts_exterior_zeros(placed_unstable):
    stable = discrete_margin(SampledOperator.from_system(placed_unstable, 0.5), sys=placed_unstable)
    assert stable.winding_number == 1
    assert stable.exterior_zeros == 0
    assert stable.eps_d == pytest.approx((3.0 - math.exp(0.5)) / (1.0 + math.exp(0.5)), rel=1e-9)
    # 2 - e^1.5 lies outside the unit disk
    unstable = discrete_margin(SampledOperator.from_system(placed_unstable, 1.5), sys=placed_unstable)
    assert unstable.winding_number == 0
    assert unstable.exterior_zeros == 1


def test_discrete_margin_counts_uncoupled_exterior_mode():
    op = SampledOperator(tau=0.5, diag=[math.exp(0.5), 0.5], s_vec=[1.0, 0.5], f_vec=[0.0, -1.0])
    assert discrete_margin(op).exterior_zeros == 1


def test_discrete_margin_subtracts_tail(deadbeat_op, deadbeat_system):
    sys = replace(deadbeat_system, tails=TailData(1e-4, 1e-4, 0.0, 0.0, 0.0, 0.0), tails_supplied=True)
    constants = gamma_constants(sys, deadbeat_op.tau)
    report = discrete_margin(deadbeat_op, sys=sys)
    assert report.tail_bound_d == pytest.approx(constants.upsilon1 * 1e-4)
    assert report.tail_bound_d == h_tail_bound(sys, deadbeat_op.tau, constants)
    assert report.eps_d == pytest.approx(2.0 / 3.0 - constants.upsilon1 * 1e-4, rel=1e-10)
    assert not report.truncation_only


def test_discrete_margin_unknown_tail(deadbeat_op, deadbeat_system):
    sys = replace(deadbeat_system, tails=TailData(b_l2_sq=1.0), tails_supplied=True)
    with pytest.raises(UnavailableTailBound):
        discrete_margin(deadbeat_op, sys=sys, strict=True)
    report = discrete_margin(deadbeat_op, sys=sys)
    assert report.truncation_only
    assert report.tail_bound_d == 0.0


def test_discrete_margin_errors(deadbeat_op):
    with pytest.raises(InvalidParameter):
        discrete_margin(deadbeat_op, 128)
    on_circle = SampledOperator(tau=1.0, diag=[1.0, 0.5], s_vec=[1.0, 1.0], f_vec=[0.0, 0.0])
    with pytest.raises(PoleOnCircle):
        discrete_margin(on_circle)


def test_discrete_margin_refinement_cap(placed_unstable):
    opts = MarginOptions(circle_nodes=256, refine_tolerance=0.0, node_cap=1024)
    report = discrete_margin(SampledOperator.from_system(placed_unstable, 0.5), opts=opts)
    assert report.grids_used['circle_nodes'] == 1024


def test_exterior_minimum_respects_margin(deadbeat_op):
    # |1 - H(z)| = |z| / |z - 0.5| >= 2/3 for |z| >= 1
    eps_d = discrete_margin(deadbeat_op).eps_d
    assert exterior_minimum(deadbeat_op, samples=20000) >= eps_d - 1e-9


def test_discrete_margin_refinement_is_monotone(rng):
    op = SampledOperator.from_system(random_system(rng, 40, feedback_scale=1.0), 0.5)
    minima = [discrete_margin(op, opts=MarginOptions(circle_nodes=n, node_cap=n)).eps_d
              for n in (256, 512, 1024, 2048, 4096)]
    # each grid contains the previous one
    assert all(fine <= coarse + 1e-15 for coarse, fine in zip(minima, minima[1:]))


@pytest.fixture(scope='module')
def wave_demo():
    cfg = wave_demo_config()
    sys = build_system(cfg)
    report = run_pipeline(cfg, ('audit', 'tau_star'))
    return sys, report.tau_star


def test_wave_demo_tau_star(wave_demo):
    _, tau_star = wave_demo
    assert tau_star.tau_star_estimate == pytest.approx(0.2)
    assert [row.passed for row in tau_star.curve[:5]] == [True, True, True, True, False]


@pytest.mark.parametrize('fraction', [0.25, 0.5])
def test_wave_demo_margin_below_tau_star(wave_demo, fraction):
    sys, tau_star = wave_demo
    op = SampledOperator.from_system(sys, fraction * tau_star.tau_star_estimate)
    margin = discrete_margin(op, sys=sys)
    assert margin.eps_d >= tau_star.eps_d_floor
    assert margin.exterior_zeros == 0
    assert check_nonresonance(sys, op.tau)
    assert exterior_minimum(op, 100000) >= margin.eps_d - 1e-3


def test_wave_demo_exterior_minimum_on_certified_grid(wave_demo):
    sys, tau_star = wave_demo
    for row in tau_star.curve:
        if not row.passed:
            break
        op = SampledOperator.from_system(sys, row.tau)
        assert exterior_minimum(op, 100000) >= row.eps_d - 1e-3


def test_check_nonresonance():
    pair = modes((1 + 1j, 1.0), (1 - 1j, 1.0))
    assert check_nonresonance(pair, math.pi) is False
    assert check_nonresonance(pair, 1.0) is True
    assert check_nonresonance(modes((1 + 1j, 1.0), (-1.0, 1.0)), math.pi) is True
    assert check_nonresonance(modes((-1.0, 1.0)), 1.0) is True


def test_design_feedback_single_mode():
    f = design_feedback(modes((1.0, 1.0)), [-1.0])
    np.testing.assert_allclose(f, [-2.0], rtol=1e-12)


def test_design_feedback_two_modes():
    sys = modes((1.0, 1.0), (2.0, 1.0))
    f = design_feedback(sys, [-1.0, -2.0])
    np.testing.assert_allclose(f, [6.0, -12.0], rtol=1e-10)
    closed = np.diag(sys.eigenvalues) + np.outer(sys.b, f)
    np.testing.assert_allclose(np.sort(np.linalg.eigvals(closed).real), [-2.0, -1.0], rtol=1e-9)


def test_design_feedback_aligned_with_unstable_indices():
    sys = modes((-1.0 + 3j, 1.0), (0.5, 2.0), (-2.0, 1.0), (1.0 + 1j, 1.0 - 1j))
    targets = [-1.0, -3.0]
    f_plus = design_feedback(sys, targets)
    idx = list(split_spectrum(sys).unstable_indices)
    assert idx == [1, 3]
    block = np.diag(sys.eigenvalues[idx]) + np.outer(sys.b[idx], f_plus)
    achieved = np.linalg.eigvals(block)
    for t in targets:
        assert np.min(np.abs(achieved - t)) < 1e-9


def test_design_feedback_without_unstable_modes(sector_family):
    assert design_feedback(sector_family, []).shape == (0, )


def test_design_feedback_errors():
    sys = modes((1.0, 1.0), (2.0, 1.0))
    with pytest.raises(SizeMismatch):
        design_feedback(sys, [-1.0])
    with pytest.raises(InvalidParameter):
        design_feedback(sys, [-1.0, 0.5])
    with pytest.raises(InvalidParameter):
        design_feedback(sys, [-1.0, -1.0])
    with pytest.raises(Uncontrollable):
        design_feedback(modes((1.0, 0.0), (2.0, 1.0)), [-1.0, -2.0])


def test_design_feedback_warns_on_placement_mismatch(caplog, monkeypatch):
    sys = modes((1.0, 1.0), (2.0, 1.0))
    with caplog.at_level(logging.WARNING, logger='rieszlab.core.stability'):
        design_feedback(sys, [-1.0, -2.0])
    assert 'PlacementMismatch' not in caplog.text

    monkeypatch.setattr(scipy.linalg, 'eigvals', lambda a: np.array([-1.0 + 1e-6, -2.0]))
    with caplog.at_level(logging.WARNING, logger='rieszlab.core.stability'):
        f = design_feedback(sys, [-1.0, -2.0])
    assert 'PlacementMismatch' in caplog.text
    np.testing.assert_allclose(f, [6.0, -12.0], rtol=1e-10)


def test_tau_star_without_feedback(sector_family):
    report = estimate_tau_star(sector_family, [0.1, 0.2, 0.5])
    assert report.tau_star_estimate == 0.5
    assert report.eps_c == 1.0
    assert report.eps_d_floor == 0.5
    assert all(row.passed for row in report.curve)


def test_tau_star_deadbeat(deadbeat_system):
    report = estimate_tau_star(deadbeat_system, [math.log(2.0)], eps_d_floor=0.5)
    assert report.tau_star_estimate == pytest.approx(math.log(2.0))
    assert report.eps_d == pytest.approx(2.0 / 3.0, rel=1e-12)


def test_tau_star_stops_at_floor(placed_unstable):
    grid = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7]
    report = estimate_tau_star(placed_unstable, grid)
    # eps_d(tau) = (3 - e^tau) / (1 + e^tau) crosses the floor eps_c / 2 = 0.5 at ln(5/3)
    assert report.eps_c == pytest.approx(1.0)
    assert report.tau_star_estimate == 0.5
    assert [row.passed for row in report.curve] == [True] * 5 + [False] * 2
    for row in report.curve:
        assert row.eps_d == pytest.approx((3.0 - math.exp(row.tau)) / (1.0 + math.exp(row.tau)), rel=1e-9)
    with ScanPoolExecutor(max_workers=3) as executor:
        threaded = estimate_tau_star(placed_unstable, grid, executor=executor)
    assert threaded.curve == report.curve


def test_tau_star_handles_pole_on_circle():
    sys = modes((1j * math.pi, 0.0), (-2.0, 1.0))
    report = estimate_tau_star(sys, [1.0])
    assert math.isnan(report.curve[0].eps_d)
    assert report.tau_star_estimate is None


def test_tau_star_grid_validation(sector_family):
    with pytest.raises(InvalidParameter):
        estimate_tau_star(sector_family, [0.2, 0.1])
    with pytest.raises(InvalidParameter):
        estimate_tau_star(sector_family, [0.0, 0.1])
