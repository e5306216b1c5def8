"""decay.py

Continuous-time simulation of the sampled-data loop under zero-order hold and least-squares decay fits of the
resulting norms.
"""
import logging
import math
from typing import Optional, Tuple

import numpy as np

from rieszlab.core.errors import InsufficientData, InvalidParameter, ZeroNorms
from rieszlab.core.operators import delta_orbit, orbit_norms
from rieszlab.core.structs import (DecayFit, DecayModel, EquivalenceReport, SampledOperator, Trajectory,
                                   TruncatedSystem, as_state, input_integral)


logger = logging.getLogger('rieszlab.core.decay')

MIN_FIT_POINTS = 30
MAX_FIT_POINTS = 2000
DECAY_THRESHOLD = 0.01
EQUIVALENCE_TOLERANCE = 0.02


def within_hypotheses(sys: TruncatedSystem, delta: float) -> bool:
    """0 < delta <= alpha / 2 and (delta <= 1 or beta >= alpha)."""
    alpha = sys.sector.alpha
    return 0 < delta <= alpha / 2.0 and (delta <= 1.0 or sys.beta >= alpha)


def simulate_closed_loop(sys: TruncatedSystem, tau: float, x0, t_end: float, substeps: int = 1, *,
                         delta: Optional[float] = None, state_stride: Optional[int] = None) -> Trajectory:
    """Exact zero-order-hold trajectory: x(k tau + s) = T(s) x(k tau) + S(s) F x(k tau).

    Norms are returned at substeps points per sampling interval plus the final sample K tau. Sample states are
    kept every state_stride steps when it is given. delta labels the smoothness class of x0.
    """
    if not tau > 0:
        raise InvalidParameter('sampling period must be positive, got %r' % (tau, ))
    if substeps < 1:
        raise InvalidParameter('substeps must be at least 1, got %r' % (substeps, ))
    if t_end < tau:
        raise InvalidParameter('t_end=%r is shorter than one sampling period %r' % (t_end, tau))
    x0 = as_state(x0, sys.n_modes)
    steps = int(math.floor(t_end / tau * (1.0 + 1e-12)))
    op = SampledOperator.from_system(sys, tau)

    offsets = tau * np.arange(1, substeps) / substeps
    free = np.exp(offsets[:, None] * sys.eigenvalues[None, :])
    forced = sys.b[None, :] * np.stack([input_integral(s, sys.eigenvalues) for s in offsets]) if substeps > 1 \
        else np.zeros((0, sys.n_modes), dtype=complex)

    norms = np.empty(steps * substeps + 1, dtype=float)
    kept_times, kept_states = [], []
    for step in delta_orbit(op, x0, steps, keep_states=True):
        base = step.k * substeps
        norms[base] = step.norm
        if state_stride is not None and step.k % state_stride == 0:
            kept_times.append(step.k * tau)
            kept_states.append(step.state)
        if step.k == steps:
            break
        if substeps > 1:
            u = np.dot(step.state, op.f_vec)
            norms[base + 1:base + substeps] = np.linalg.norm(free * step.state[None, :] + forced * u, axis=1)
    times = np.concatenate([(k * tau + np.concatenate([[0.0], offsets])) for k in range(steps)] + [[steps * tau]])

    inside = None if delta is None else within_hypotheses(sys, delta)
    if inside is False:
        logger.warning('OutsideDecayHypotheses label=%r delta=%r alpha=%r beta=%r' % (
            sys.label, delta, sys.sector.alpha, sys.beta))
    logger.info('SimulatedClosedLoop label=%r tau=%r steps=%d substeps=%d final_norm=%r' % (
        sys.label, tau, steps, substeps, norms[-1]))
    return Trajectory(
        times=times,
        norms=norms,
        x0_delta_class=delta,
        within_hypotheses=inside,
        tau=tau,
        state_times=np.array(kept_times) if state_stride is not None else None,
        states=np.array(kept_states) if state_stride is not None else None
    )


def _default_window(times: np.ndarray, window_fraction: float) -> Tuple[float, float]:
    lo, hi = math.log(times[0]), math.log(times[-1])
    return math.exp(hi - window_fraction * (hi - lo)), float(times[-1])


def _log_uniform(times: np.ndarray, max_points: int) -> np.ndarray:
    if times.shape[0] <= max_points:
        return np.arange(times.shape[0])
    targets = np.logspace(math.log10(times[0]), math.log10(times[-1]), max_points)
    indices = np.clip(np.searchsorted(times, targets), 0, times.shape[0] - 1)
    return np.unique(indices)


def fit_decay(traj: Trajectory, model: DecayModel = DecayModel.PURE_POWER, window_fraction: float = 0.5, *,
              window: Optional[Tuple[float, float]] = None, exponent: Optional[float] = None,
              max_points: int = MAX_FIT_POINTS) -> DecayFit:
    """Least squares fit of log ||x(t)|| in log time.

    PURE_POWER fits log A - p log t. POWER_SQRT_LOG fits log A - p log t + (1/2) log log t with p fixed at 1/2
    unless an exponent is given. A fixed exponent leaves only the amplitude free.
    """
    model = DecayModel(model)
    if not 0 < window_fraction <= 1:
        raise InvalidParameter('window fraction must lie in (0, 1], got %r' % (window_fraction, ))
    lower = 1.0 if model is DecayModel.POWER_SQRT_LOG else 0.0
    support = traj.times > lower
    times, norms = traj.times[support], traj.norms[support]
    if times.shape[0] == 0:
        raise InsufficientData('no trajectory points with t > %r' % (lower, ))
    if window is None:
        window = _default_window(times, window_fraction)
    t_lo, t_hi = float(window[0]), float(window[1])
    if t_lo > t_hi or t_lo < times[0] * (1 - 1e-12) or t_hi > times[-1] * (1 + 1e-12):
        raise InvalidParameter('fit window %r lies outside the trajectory support [%r, %r]' % (
            window, times[0], times[-1]))
    in_window = (times >= t_lo * (1 - 1e-12)) & (times <= t_hi * (1 + 1e-12))
    times, norms = times[in_window], norms[in_window]
    positive = norms > 0
    excluded = int(np.sum(~positive))
    if int(np.sum(positive)) < MIN_FIT_POINTS:
        if excluded and times.shape[0] >= MIN_FIT_POINTS:
            raise ZeroNorms('%d zero norms leave %d points in the fit window' % (excluded, int(positive.sum())),
                            excluded)
        raise InsufficientData('%d points in the fit window, %d required' % (int(positive.sum()), MIN_FIT_POINTS))
    times, norms = times[positive], norms[positive]
    chosen = _log_uniform(times, max_points)
    log_t, log_n = np.log(times[chosen]), np.log(norms[chosen])

    correction = 0.5 * np.log(log_t) if model is DecayModel.POWER_SQRT_LOG else np.zeros_like(log_t)
    if exponent is None and model is DecayModel.POWER_SQRT_LOG:
        exponent = 0.5
    if exponent is None:
        slope, log_amp = np.polyfit(log_t, log_n, 1)
        p = -float(slope)
    else:
        p = float(exponent)
        log_amp = float(np.mean(log_n + p * log_t - correction))
    residual = log_n - (log_amp - p * log_t + correction)
    rms = float(np.sqrt(np.mean(residual ** 2)))
    fit = DecayFit(
        model=model,
        exponent=p,
        amplitude=float(math.exp(log_amp)),
        fit_window=(float(times[chosen][0]), float(times[chosen][-1])),
        rms_residual=rms,
        points=int(chosen.shape[0]),
        excluded_points=excluded,
        decaying=p > DECAY_THRESHOLD
    )
    logger.info('DecayFit model=%s exponent=%r rms=%r points=%d excluded=%d' % (
        model.value, p, rms, fit.points, excluded))
    return fit


def orbit_decay_fit(op: SampledOperator, x0, K: int, model: DecayModel = DecayModel.PURE_POWER,
                    window_fraction: float = 0.5, **kwargs) -> DecayFit:
    """Fits ||Delta(tau)^k x0|| against k = 1..K."""
    norms = orbit_norms(op, x0, K)
    steps = Trajectory(times=np.arange(1, K + 1, dtype=float), norms=norms[1:], tau=op.tau)
    return fit_decay(steps, model, window_fraction, **kwargs)


def equivalence_check(sys: TruncatedSystem, tau: float, x0, K: int, *, substeps: int = 1,
                      model: DecayModel = DecayModel.PURE_POWER, window_fraction: float = 0.5,
                      window: Optional[Tuple[float, float]] = None,
                      tolerance: float = EQUIVALENCE_TOLERANCE) -> EquivalenceReport:
    """Compares the decay exponent of ||x(k tau)|| against k with that of ||x(t)|| against t.

    The sampled fit uses the continuous fit window divided by tau, so both cover the same stretch of time.
    """
    traj = simulate_closed_loop(sys, tau, x0, K * tau, substeps)
    if window is not None:
        window = (window[0], min(window[1], float(traj.times[-1])))
    continuous = fit_decay(traj, model, window_fraction, window=window)
    samples = traj.times[::substeps] / tau
    sampled_traj = Trajectory(times=samples[1:], norms=traj.norms[::substeps][1:], tau=tau)
    t_lo, t_hi = continuous.fit_window
    lower = 1.0 if DecayModel(model) is DecayModel.POWER_SQRT_LOG else 0.0
    k_lo = max(float(sampled_traj.times[sampled_traj.times > lower][0]), t_lo / tau)
    k_hi = min(float(sampled_traj.times[-1]), t_hi / tau)
    sampled = fit_decay(sampled_traj, model, window=(k_lo, k_hi))
    gap = abs(sampled.exponent - continuous.exponent)
    agree = gap <= tolerance
    log = logger.info if agree else logger.warning
    log('EquivalenceCheck tau=%r sampled=%r continuous=%r gap=%r agree=%s' % (
        tau, sampled.exponent, continuous.exponent, gap, agree))
    return EquivalenceReport(sampled_fit=sampled, continuous_fit=continuous, exponent_gap=gap, agree=agree,
                             tolerance=tolerance)
