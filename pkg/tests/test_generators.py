import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from rieszlab.contrib.pipeline.generators import (MODELED_SPECTRUM_NOTE, CouplingLaw, generate_explicit,
                                                  generate_synthetic, generate_wave, initial_state)
from rieszlab.core.errors import DivergentCoupling, InvalidParameter
from rieszlab.core.modal import audit_assumptions, dnorm
from rieszlab.core.structs import SectorParams, TailData


def test_coupling_law():
    assert_allclose(CouplingLaw(2.0, 1.5).coefficients(np.array([1.0, 4.0])), [2.0, 0.25])
    assert CouplingLaw() == (1.0, 2.0)
    with pytest.raises(InvalidParameter):
        CouplingLaw(float('nan'), 2.0)


def test_synthetic_family():
    sys = generate_synthetic(2.0, 1.0, 3, CouplingLaw(1.0, 2.0), beta=1.0, gamma=1.0)
    assert_allclose(sys.eigenvalues, [-1.0 + 1.0j, -0.25 + 2.0j, -1.0 / 9.0 + 3.0j])
    assert_allclose(sys.b, [1.0, 0.25, 1.0 / 9.0])
    assert_allclose(sys.f, 0.0)
    assert sys.sector == SectorParams(2.0, 1.0, 1.0)
    assert not sys.truncation_only
    # integral-test bounds with |lambda_n|^2 <= 2 n^2 and 1 / |Re lambda_n| = n^2
    assert_allclose(sys.tails, TailData(1.0 / 81.0, 0.0, 2.0 / 3.0, 0.0, 1.0 / 3.0, 0.0))
    report = audit_assumptions(sys)
    assert report.passed
    assert report.a1_count_in_bad_region == 0
    assert report.a2_min_axis_distance == pytest.approx(1.0 / 9.0)


def test_synthetic_tail_bounds_dominate_the_discarded_sums():
    N = 10
    sys = generate_synthetic(2.0, 1.0, N, CouplingLaw(1.0, 2.1), beta=0.0, gamma=2.0)
    assert sys.tails.b_l2_sq == pytest.approx(N ** -3.2 / 3.2)
    assert sys.tails.b_beta_sq == pytest.approx(sys.tails.b_l2_sq)
    n = np.arange(N + 1, 10 ** 6, dtype=float)
    assert np.sum(n ** -4.2) < sys.tails.b_l2_sq
    assert np.sum(n ** -4.2 * n ** 2) < sys.tails.b_re_sq


def test_synthetic_rejects_divergent_couplings():
    with pytest.raises(DivergentCoupling):
        generate_synthetic(2.0, 1.0, 5, CouplingLaw(1.0, 1.0), beta=1.0, gamma=1.0)
    with pytest.raises(DivergentCoupling):
        generate_synthetic(2.0, 1.0, 5, CouplingLaw(1.0, 3.0), CouplingLaw(1.0, 1.2), beta=1.0, gamma=1.0)


def test_synthetic_audits_itself():
    # beta + gamma < alpha
    with pytest.raises(InvalidParameter):
        generate_synthetic(2.0, 1.0, 5, CouplingLaw(1.0, 2.0), beta=0.5, gamma=0.5)
    with pytest.raises(InvalidParameter):
        generate_synthetic(0.0, 1.0, 5, None)
    with pytest.raises(InvalidParameter):
        generate_synthetic(2.0, 1.0, 0, None)


def test_wave_single_pair():
    sys = generate_wave(1, b0_coeffs=[1.0], beta=1.0, gamma=1.0)
    lam = -1.0 / math.pi ** 2 + 1j * math.pi
    assert_allclose(sys.eigenvalues, [lam, lam.conjugate()])
    assert_allclose(sys.b, [1.0 / math.sqrt(2.0)] * 2)
    assert_allclose(sys.f, 0.0)
    assert sys.tails.b_l2_sq == 0.0


def test_wave_spectrum_is_conjugate_symmetric():
    N = 6
    sys = generate_wave(N, b_law=CouplingLaw(1.0, 2.0), beta=1.0, gamma=1.0)
    assert sys.n_modes == 2 * N
    assert_allclose(sys.eigenvalues[1::2], np.conj(sys.eigenvalues[0::2]))
    assert_allclose(sys.b[0::2], sys.b[1::2])
    report = audit_assumptions(sys)
    assert report.passed
    assert report.a2_min_axis_distance == pytest.approx(1.0 / (N * math.pi) ** 2)
    assert 'modeled spectrum' in MODELED_SPECTRUM_NOTE


def test_wave_extra_coefficients_become_tails():
    sys = generate_wave(1, b0_coeffs=[1.0, 0.5, 0.25], beta=1.0, gamma=1.0)
    assert sys.n_modes == 2
    assert sys.tails.b_l2_sq == pytest.approx(0.3125)
    # 1 / |Re lambda_n| = (n pi)^2
    assert sys.tails.b_re_sq == pytest.approx(0.25 * 4.0 * math.pi ** 2 + 0.0625 * 9.0 * math.pi ** 2)


def test_wave_with_unstable_modes_and_feedback():
    sys = generate_wave(2, b0_coeffs=[1.0, 1.0], beta=1.0, gamma=1.0, unstable_modes=[(1.0, 1.0), (0.5, 2.0)],
                        f2_scale=0.5, f2_q=2.0)
    assert sys.n_modes == 6
    assert_allclose(sys.eigenvalues[:2], [1.0, 0.5])
    assert_allclose(sys.b[:2], [1.0, 2.0])
    assert_allclose(sys.f, [0.0, 0.0, 0.5, 0.5, 0.125, 0.125])
    # two modes per pair
    assert sys.tails.f_l2_sq == pytest.approx(2.0 * 0.25 * 2.0 ** -3 / 3.0)
    assert audit_assumptions(sys).a1_count_in_bad_region == 2


def test_wave_rejects_stable_unstable_modes():
    with pytest.raises(InvalidParameter):
        generate_wave(2, b0_coeffs=[1.0], beta=1.0, gamma=1.0, unstable_modes=[(-1.0, 1.0)])
    with pytest.raises(InvalidParameter):
        generate_wave(0)


def test_explicit_family():
    sys = generate_explicit([(-1.0, 1.0, 0.5), (-2.0 + 1.0j, 0.0, 1.0)], SectorParams(1.0, 1.0, 1.0))
    assert sys.n_modes == 2
    assert sys.truncation_only
    assert_allclose(sys.f, [0.5, 1.0])
    sys = generate_explicit([(-1.0, 1.0, 0.5)], SectorParams(1.0, 1.0, 1.0), tails=TailData.zero())
    assert not sys.truncation_only


def test_initial_state(sector_family, deadbeat_system):
    assert_allclose(initial_state(deadbeat_system, 0.5), [1.0])
    x0 = initial_state(sector_family, 1.0)
    n = np.arange(1, 101, dtype=float)
    assert_allclose(x0, np.abs(sector_family.eigenvalues) ** -1.0 * n ** -0.51)
    assert dnorm(x0, 1.0, sector_family) == pytest.approx(math.sqrt(np.sum(n ** -1.02)))
    with pytest.raises(InvalidParameter):
        initial_state(sector_family, 1.0, epsilon=0.0)
