"""stability.py

Numerical certificates for the sampled-data stability hypotheses: the continuous margin inf |1 - G| over the
closed right half-plane, the discrete margin inf |1 - H_tau| outside the unit disk, the mode-wise bound
constants, non-resonance of the unstable eigenvalues, finite-part pole placement and an empirical tau*.
"""
import functools
import logging
import math
from typing import Iterable, Optional, Sequence

import numpy as np
import scipy.linalg

from rieszlab.core.errors import (EmptyStableTail, InvalidParameter, PoleOnCircle, SizeMismatch,
                                  UnavailableTailBound, Uncontrollable)
from rieszlab.core.executor import ScanExecutorBase, SerialScanExecutor
from rieszlab.core.modal import sector_masks
from rieszlab.core.operators import POLE_RTOL, h_tail_bound, transfer_G_values, transfer_H_values
from rieszlab.core.structs import (BoundConstants, MarginOptions, MarginReport, SampledOperator, SpectrumSplit,
                                   TauScanRow, TruncatedSystem, as_complex_array)


logger = logging.getLogger('rieszlab.core.stability')

NUDGE = 1e-9
RESONANCE_RTOL = 1e-9
CONDITION_WARNING = 1e8
PLACEMENT_ATOL = 1e-8
ON_CIRCLE_ATOL = 1e-12


def split_spectrum(sys: TruncatedSystem) -> SpectrumSplit:
    """Index partition into unstable, bad-region and stable-tail modes.

    In modal coordinates the spectral projection onto the unstable part is coordinate selection.
    """
    on_axis, bad = sector_masks(sys.eigenvalues, sys.sector)
    bad_region = on_axis | bad
    return SpectrumSplit(
        unstable_indices=np.flatnonzero(sys.eigenvalues.real > 0),
        bad_region_indices=np.flatnonzero(bad_region),
        stable_indices=np.flatnonzero(~bad_region)
    )


@functools.lru_cache(maxsize=None)
def strip_bound_m1(points: int = 2001) -> float:
    """sup |(1 - e^lambda) / lambda| over -1 <= Re lambda <= 0, |Im lambda| <= pi.

    Shifting Im lambda by multiples of 2 pi only decreases the modulus, so this rectangle bounds the whole strip.
    """
    re = np.linspace(-1.0, 0.0, points)
    best = 1.0  # limit value at lambda = 0
    for im in np.linspace(-np.pi, np.pi, points):
        lam = re + 1j * im
        lam = lam[lam != 0]
        if lam.size:
            best = max(best, float(np.max(np.abs(np.expm1(lam) / lam))))
    return best


def bad_region_circle_distance(sys: TruncatedSystem, tau: float) -> Optional[float]:
    """c1 = min over bad-region modes of the distance from e^(tau lambda_n) to the unit circle."""
    indices = list(split_spectrum(sys).bad_region_indices)
    if not indices:
        return None
    moduli = np.exp(tau * sys.eigenvalues[indices].real)
    return float(np.min(np.abs(moduli - 1.0)))


def gamma_constants(sys: TruncatedSystem, tau: float, alpha_tilde: Optional[float] = None,
                    c1: Optional[float] = None) -> BoundConstants:
    alpha, upsilon, omega = sys.sector
    if alpha_tilde is None:
        alpha_tilde = max(alpha, sys.beta + sys.gamma)
    if alpha_tilde < alpha:
        raise InvalidParameter('alpha_tilde=%r must not be below alpha=%r' % (alpha_tilde, alpha))
    if not tau > 0:
        raise InvalidParameter('sampling period must be positive, got %r' % (tau, ))
    stable = list(split_spectrum(sys).stable_indices)
    if not stable:
        raise EmptyStableTail('no modes lie in the stable sector, kappa is undefined')
    kappa = float(np.min(np.abs(sys.eigenvalues[stable])))
    kappa_all = float(np.min(np.abs(sys.eigenvalues)))
    m1 = strip_bound_m1()
    upsilon1 = max(2.0 / ((1.0 - math.exp(-1.0)) * kappa), math.e * m1 / omega)
    upsilon2 = math.e * m1 / (upsilon * kappa ** (alpha_tilde - alpha))
    if c1 is None:
        c1 = bad_region_circle_distance(sys, tau)
    kappa_pow = kappa_all ** alpha
    terms = [
        math.inf if kappa_pow == 0 else 1.0 / ((1.0 - math.exp(-1.0)) * kappa_pow),
        math.inf if kappa_pow == 0 else math.e / (tau * omega * kappa_pow),
        math.e / (tau * upsilon),
    ]
    if c1 is not None:
        terms.append(math.inf if c1 * kappa_pow == 0 else 1.0 / (c1 * kappa_pow))
    constants = BoundConstants(
        kappa=kappa,
        m1=m1,
        upsilon1=upsilon1,
        upsilon2=upsilon2,
        upsilon0=max(terms),
        alpha_tilde=float(alpha_tilde),
        c1=c1,
        kappa_all=kappa_all,
        tau=float(tau)
    )
    logger.debug('BoundConstants %r' % (constants, ))
    return constants


def verify_mode_bound(sys: TruncatedSystem, tau: float, z_samples, constants: BoundConstants) -> float:
    """Largest value of |(1 - e^(tau lambda_n)) / (z - e^(tau lambda_n))| / |lambda_n| - max(U1, U2 |lambda_n|^a).

    Evaluated over the stable-tail modes and all z samples; a certified system gives a value <= 0.
    """
    z = np.atleast_1d(np.asarray(z_samples, dtype=complex))
    if np.any(np.abs(z) < 1.0 - ON_CIRCLE_ATOL):
        raise InvalidParameter('z samples must lie on or outside the unit circle')
    stable = list(split_spectrum(sys).stable_indices)
    if not stable:
        raise EmptyStableTail('no modes lie in the stable sector')
    lam = sys.eigenvalues[stable]
    d = np.exp(tau * lam)
    modulus = np.abs(lam)
    rhs = np.maximum(constants.upsilon1, constants.upsilon2 * modulus ** constants.alpha_tilde)
    worst = -math.inf
    for start in range(0, z.shape[0], 1024):
        chunk = z[start:start + 1024]
        lhs = np.abs((1.0 - d)[None, :] / (chunk[:, None] - d[None, :])) / modulus[None, :]
        worst = max(worst, float(np.max(lhs - rhs[None, :])))
    if worst > 0:
        logger.error('ModeBoundViolated tau=%r violation=%r' % (tau, worst))
    return worst


def default_axis_grid(sys: TruncatedSystem, points: int = 4001) -> np.ndarray:
    top = max(10.0, 10.0 * float(np.max(np.abs(sys.eigenvalues.imag), initial=0.0)))
    w = np.logspace(-4, math.log10(top), points // 2)
    return np.unique(np.concatenate([-w, [0.0], w, sys.eigenvalues.imag]))


def _avoid_poles(points: np.ndarray, poles: np.ndarray, threshold: float = 1e3 * POLE_RTOL) -> np.ndarray:
    """Moves evaluation points off the poles by nudges of NUDGE along the imaginary direction."""
    points = points.copy()
    scale = 1.0 + np.abs(poles)
    moved = 0
    for attempt in range(1, 17):
        close = np.zeros(points.shape[0], dtype=bool)
        for start in range(0, points.shape[0], 2048):
            chunk = points[start:start + 2048]
            close[start:start + 2048] = np.any(
                np.abs(chunk[:, None] - poles[None, :]) < threshold * scale[None, :], axis=1)
        if not close.any():
            break
        moved += int(close.sum())
        points[close] += 1j * NUDGE * attempt * (-1) ** attempt
    if moved:
        logger.info('RegridAroundPole moved=%d' % moved)
    return points


def continuous_margin(sys: TruncatedSystem, axis_grid: Optional[Sequence[float]] = None,
                      half_plane_points: Iterable = (), *, strict: bool = False) -> MarginReport:
    """eps_c = min over i*axis_grid and half-plane points of |1 - G(lambda)| - tail bound.

    G vanishes as |lambda| grows, so the value 1 is included as a virtual point at infinity.
    """
    if axis_grid is None:
        axis_grid = default_axis_grid(sys)
    axis = np.asarray(axis_grid, dtype=float)
    extra = as_complex_array(list(half_plane_points))
    if extra.size and np.any(extra.real < 0):
        raise InvalidParameter('half-plane points must satisfy Re lambda >= 0')
    points = _avoid_poles(np.concatenate([1j * axis, extra]), sys.eigenvalues)
    tail = sys.tails.g_bound()
    truncation_only = sys.truncation_only
    if tail is None:
        if strict:
            raise UnavailableTailBound('no tail bound for G is known for system %r' % (sys.label, ))
        logger.warning('UnavailableTailBound label=%r margin=truncation-only' % (sys.label, ))
        tail, truncation_only = 0.0, True
    values = np.abs(1.0 - transfer_G_values(points, sys)) - tail
    eps_c = min(float(np.min(values)) if values.size else math.inf, 1.0)
    logger.info('ContinuousMargin label=%r eps_c=%r tail=%r points=%d' % (sys.label, eps_c, tail, points.size))
    return MarginReport(
        eps_c=eps_c,
        tail_bound_c=tail,
        truncation_only=truncation_only,
        grids_used={'axis_points': int(axis.size), 'half_plane_points': int(extra.size), 'virtual_infinity': True}
    )


def _circle_scan(op: SampledOperator, nodes: int):
    theta = 2.0 * np.pi * np.arange(nodes) / nodes
    values = 1.0 - transfer_H_values(op, np.exp(1j * theta))
    phase = np.unwrap(np.angle(np.append(values, values[0])))
    winding = int(round((phase[-1] - phase[0]) / (2.0 * np.pi)))
    return float(np.min(np.abs(values))), winding


def discrete_margin(op: SampledOperator, circle_nodes: Optional[int] = None, *,
                    sys: Optional[TruncatedSystem] = None, constants: Optional[BoundConstants] = None,
                    opts: Optional[MarginOptions] = None, strict: bool = False) -> MarginReport:
    """eps_d = min over the unit circle of |1 - H_tau(z)| - tail bound, refined by node doubling.

    The winding number of 1 - H_tau along the circle gives, with the count of exterior poles, the number of
    closed-loop eigenvalues outside the unit disk.
    """
    if opts is None:
        opts = MarginOptions()
    if circle_nodes is None:
        circle_nodes = opts.circle_nodes
    if circle_nodes < 256:
        raise InvalidParameter('at least 256 circle nodes are required, got %r' % (circle_nodes, ))
    on_circle = np.flatnonzero(np.abs(np.abs(op.diag) - 1.0) < ON_CIRCLE_ATOL)
    if on_circle.size:
        raise PoleOnCircle('e^(tau lambda_n) lies on the unit circle at indices %r' % (on_circle.tolist(), ))

    nodes = circle_nodes
    current, winding = _circle_scan(op, nodes)
    while nodes < opts.node_cap:
        nodes *= 2
        refined, winding = _circle_scan(op, nodes)
        change = current - refined
        current = refined
        if abs(change) < opts.refine_tolerance:
            break
    else:
        logger.warning('CircleRefinementCapped tau=%r nodes=%d' % (op.tau, nodes))

    tail, truncation_only = 0.0, True
    if sys is not None:
        truncation_only = sys.truncation_only
        bound = h_tail_bound(sys, op.tau, constants)
        if math.isinf(bound):
            if strict:
                raise UnavailableTailBound('no tail bound for H is known for system %r' % (sys.label, ))
            logger.warning('UnavailableTailBound label=%r margin=truncation-only' % (sys.label, ))
            truncation_only = True
        else:
            tail = bound
    # det(zI - Delta) = prod(z - d_n) (1 - H(z)), so uncoupled exterior modes count as well
    exterior_poles = int(np.sum(np.abs(op.diag) > 1.0))
    eps_d = current - tail
    logger.info('DiscreteMargin tau=%r eps_d=%r tail=%r nodes=%d winding=%d' % (
        op.tau, eps_d, tail, nodes, winding))
    return MarginReport(
        eps_d=eps_d,
        tau=op.tau,
        tail_bound_d=tail,
        winding_number=winding,
        exterior_zeros=exterior_poles - winding,
        truncation_only=truncation_only,
        grids_used={'circle_nodes': nodes, 'initial_nodes': circle_nodes}
    )


def exterior_minimum(op: SampledOperator, samples: int = 100000, seed: int = 0, radius: float = 2.0) -> float:
    """Minimum of |1 - H_tau(z)| over random z with 1 < |z| <= radius."""
    rng = np.random.default_rng(seed)
    rho = 1.0 + (radius - 1.0) * (1.0 - rng.random(samples))
    theta = 2.0 * np.pi * rng.random(samples)
    values = np.abs(1.0 - transfer_H_values(op, rho * np.exp(1j * theta)))
    return float(np.min(values))


def check_nonresonance(sys: TruncatedSystem, tau: float) -> bool:
    """True iff tau (lambda_n - lambda_m) avoids 2 pi i Z minus {0} for all unstable pairs."""
    unstable = sys.eigenvalues[sys.eigenvalues.real > 0]
    if unstable.size < 2:
        return True
    upper = np.triu_indices(unstable.size, k=1)
    diffs = tau * (unstable[:, None] - unstable[None, :])[upper]
    max_gap = float(np.max(np.abs(diffs))) / tau
    tol = RESONANCE_RTOL * (1.0 + tau * max_gap)
    reach = int(math.ceil(tau * max_gap / (2.0 * math.pi))) + 1
    shifts = 2j * np.pi * np.array([ell for ell in range(-reach, reach + 1) if ell != 0])
    resonant = np.abs(diffs[:, None] - shifts[None, :]) <= tol
    if resonant.any():
        logger.info('Resonance tau=%r pairs=%d' % (tau, int(np.any(resonant, axis=1).sum())))
        return False
    return True


def design_feedback(sys: TruncatedSystem, target_poles: Sequence) -> np.ndarray:
    """Feedback on the unstable modes placing the eigenvalues of diag(lambda) + b f^T at the targets.

    With g_j = b_j f_j the characteristic polynomial is prod(s - lambda_j) (1 - sum g_j / (s - lambda_j)), so
    the targets are roots exactly when g solves the Cauchy system sum_j g_j / (t_k - lambda_j) = 1.
    Returned coefficients are aligned with split_spectrum(sys).unstable_indices.
    """
    indices = list(split_spectrum(sys).unstable_indices)
    targets = as_complex_array(list(target_poles))
    if targets.size != len(indices):
        raise SizeMismatch('%d target poles given for %d unstable modes' % (targets.size, len(indices)))
    if not indices:
        return np.zeros(0, dtype=complex)
    if np.any(targets.real >= 0):
        raise InvalidParameter('target poles must have negative real parts')
    if np.unique(targets).size != targets.size:
        raise InvalidParameter('target poles must be distinct')
    lam = sys.eigenvalues[indices]
    b = sys.b[indices]
    if np.any(b == 0):
        raise Uncontrollable('b vanishes on unstable modes %r' % ([i for i, bi in zip(indices, b) if bi == 0], ))
    gaps = targets[:, None] - lam[None, :]
    if np.any(gaps == 0):
        raise InvalidParameter('a target pole coincides with an open-loop eigenvalue')
    cauchy = 1.0 / gaps
    condition = float(np.linalg.cond(cauchy))
    if condition > CONDITION_WARNING:
        logger.warning('IllConditionedPlacement condition=%r modes=%d' % (condition, len(indices)))
    g = scipy.linalg.solve(cauchy, np.ones(len(indices), dtype=complex))
    f_plus = g / b

    closed = np.diag(lam) + np.outer(b, f_plus)
    achieved = scipy.linalg.eigvals(closed)
    mismatch = max(float(np.min(np.abs(achieved - t))) for t in targets)
    if mismatch > PLACEMENT_ATOL:
        logger.warning('PlacementMismatch mismatch=%r condition=%r modes=%d' % (mismatch, condition, len(indices)))
    if not np.all(achieved.real < 0):
        logger.warning('PlacementNotHurwitz achieved=%r' % (achieved.tolist(), ))
    logger.info('FeedbackDesigned modes=%d condition=%r mismatch=%r' % (len(indices), condition, mismatch))
    return f_plus


def _tau_row(sys: TruncatedSystem, tau: float, floor: float, opts: MarginOptions) -> TauScanRow:
    op = SampledOperator.from_system(sys, tau)
    nonresonant = check_nonresonance(sys, tau)
    try:
        margin = discrete_margin(op, sys=sys, opts=opts)
    except PoleOnCircle:
        logger.warning('PoleOnCircle tau=%r' % (tau, ))
        return TauScanRow(tau, math.nan, nonresonant, None, False)
    passed = margin.eps_d >= floor and margin.eps_d > 0 and nonresonant and margin.exterior_zeros == 0
    return TauScanRow(tau, margin.eps_d, nonresonant, margin.exterior_zeros, passed)


def estimate_tau_star(sys: TruncatedSystem, tau_grid: Sequence[float], eps_d_floor: Optional[float] = None, *,
                      opts: Optional[MarginOptions] = None, axis_grid: Optional[Sequence[float]] = None,
                      executor: Optional[ScanExecutorBase] = None) -> MarginReport:
    """Largest prefix of an ascending tau grid on which the discrete margin is certified.

    The floor defaults to eps_c / 2.
    """
    taus = [float(t) for t in tau_grid]
    if any(t <= 0 for t in taus) or any(b <= a for a, b in zip(taus, taus[1:])):
        raise InvalidParameter('tau grid must be positive and strictly ascending')
    if opts is None:
        opts = MarginOptions()
    if executor is None:
        executor = SerialScanExecutor()
    continuous = continuous_margin(sys, axis_grid)
    floor = continuous.eps_c / 2.0 if eps_d_floor is None else float(eps_d_floor)
    if continuous.eps_c <= 0:
        logger.warning('ContinuousMarginNotCertified eps_c=%r' % (continuous.eps_c, ))

    rows = executor.map(lambda tau: _tau_row(sys, tau, floor, opts), taus)
    tau_star, last = None, None
    for row in rows:
        if not row.passed:
            break
        tau_star, last = row.tau, row
    logger.info('TauStarEstimate label=%r tau_star=%r floor=%r grid=%d' % (sys.label, tau_star, floor, len(taus)))
    return MarginReport(
        eps_c=continuous.eps_c,
        eps_d=None if last is None else last.eps_d,
        tau=tau_star,
        nonresonant=None if last is None else last.nonresonant,
        tau_star_estimate=tau_star,
        tail_bound_c=continuous.tail_bound_c,
        eps_d_floor=floor,
        truncation_only=continuous.truncation_only,
        curve=list(rows),
        grids_used={'tau_points': len(taus), 'circle_nodes': opts.circle_nodes,
                    **{'continuous_' + k: v for k, v in continuous.grids_used.items()}}
    )
