"""operators.py

Exact modal-coordinate action of T(t), S(tau), F and Delta(tau) = T(tau) + S(tau)F. Delta(tau) is diagonal plus
rank one, so applications, orbits and resolvents (via Sherman-Morrison-Woodbury) all cost O(N).
"""
import logging
import math
from typing import Iterator, NamedTuple, Optional, Tuple

import numpy as np

from rieszlab.core.errors import InvalidParameter, NegativeTime, PoleHit, SingularFeedbackDenominator
from rieszlab.core.structs import (BoundConstants, ComplexLike, SampledOperator, TruncatedSystem, Types,
                                   as_complex, as_state, input_integral)


logger = logging.getLogger('rieszlab.core.operators')

POLE_RTOL = 1e-14
DENOMINATOR_ATOL = 1e-12
# Evaluation points per block in batched resolvent and transfer evaluations.
CHUNK_SIZE = 2048


def _check_poles(points: np.ndarray, poles: np.ndarray):
    points = np.atleast_1d(points)
    hits = np.abs(points[:, None] - poles[None, :]) < POLE_RTOL * (1.0 + np.abs(poles))[None, :]
    if hits.any():
        row, col = np.argwhere(hits)[0]
        raise PoleHit(int(col), complex(poles[col]), complex(points[row]))


def _chunks(points: np.ndarray, chunk_size: int = CHUNK_SIZE) -> Iterator[np.ndarray]:
    for start in range(0, points.shape[0], chunk_size):
        yield points[start:start + chunk_size]


def apply_semigroup(t: float, x, sys: TruncatedSystem) -> Types.T_STATE_VEC:
    if t < 0:
        raise NegativeTime('semigroup time must be nonnegative, got %r' % (t, ))
    x = as_state(x, sys.n_modes)
    return np.exp(t * sys.eigenvalues) * x


def apply_input_map(tau: float, u: ComplexLike, sys: TruncatedSystem) -> Types.T_STATE_VEC:
    """S(tau)u, the state reached from rest under the constant input u."""
    if not tau > 0:
        raise InvalidParameter('sampling period must be positive, got %r' % (tau, ))
    return sys.b * input_integral(tau, sys.eigenvalues) * as_complex(u)


def apply_feedback(x, sys: TruncatedSystem) -> complex:
    # f_n already stores <phi_n, f>, so no conjugation.
    x = as_state(x, sys.n_modes)
    return complex(np.dot(x, sys.f))


def apply_delta(op: SampledOperator, x) -> Types.T_STATE_VEC:
    x = as_state(x, op.n_modes)
    return op.diag * x + op.s_vec * np.dot(x, op.f_vec)


class OrbitStep(NamedTuple):
    k: int
    norm: float
    state: Optional[np.ndarray]


def delta_orbit(op: SampledOperator, x0, K: int, keep_states: bool = False,
                state_stride: int = 1) -> Iterator[OrbitStep]:
    """Streams x_k = Delta(tau)^k x0 for k = 0..K.

    Norms are emitted for every k; states only when keep_states is set, every state_stride steps. Memory stays
    O(N) regardless of K.
    """
    if K < 1:
        raise InvalidParameter('orbit length must be positive, got %r' % (K, ))
    x = as_state(x0, op.n_modes).copy()
    buf = np.empty_like(x)
    for k in range(K + 1):
        keep = keep_states and k % state_stride == 0
        yield OrbitStep(k, float(np.linalg.norm(x)), x.copy() if keep else None)
        if k == K:
            return
        u = np.dot(x, op.f_vec)
        np.multiply(op.diag, x, out=buf)
        buf += op.s_vec * u
        x, buf = buf, x


def orbit_norms(op: SampledOperator, x0, K: int) -> np.ndarray:
    return np.fromiter((step.norm for step in delta_orbit(op, x0, K)), dtype=float, count=K + 1)


def _pole_sum(points, poles: np.ndarray, weights: np.ndarray) -> np.ndarray:
    points = np.atleast_1d(np.asarray(points, dtype=complex))
    values = np.zeros(points.shape[0], dtype=complex)
    for start in range(0, points.shape[0], CHUNK_SIZE):
        chunk = points[start:start + CHUNK_SIZE]
        _check_poles(chunk, poles)
        values[start:start + CHUNK_SIZE] = np.sum(weights[None, :] / (chunk[:, None] - poles[None, :]), axis=1)
    return values


def transfer_G_values(points, sys: TruncatedSystem) -> np.ndarray:
    """Truncated G(lambda) = sum b_n f_n / (lambda - lambda_n) at every point."""
    return _pole_sum(points, sys.eigenvalues, sys.b * sys.f)


def transfer_G(lam: ComplexLike, sys: TruncatedSystem) -> Tuple[complex, float]:
    """G(lambda) on the truncation and a bound on the discarded tail, valid for Re lambda >= 0.

    The tail bound uses |lambda - lambda_n| >= |Re lambda_n| and Cauchy-Schwarz. It is 0.0 when the system
    carries no tail data (truncation-only systems) and infinite off the closed right half-plane.
    """
    lam = as_complex(lam)
    value = complex(transfer_G_values(np.array([lam]), sys)[0])
    if lam.real < 0:
        return value, math.inf
    tail = sys.tails.g_bound()
    return value, math.inf if tail is None else tail


def transfer_H_values(op: SampledOperator, points) -> np.ndarray:
    """Truncated H_tau(z) = F (zI - T(tau))^{-1} S(tau) at every point."""
    return _pole_sum(points, op.diag, op.f_vec * op.s_vec)


def h_tail_bound(sys: TruncatedSystem, tau: float, constants: Optional[BoundConstants] = None) -> float:
    """Bound on the discarded part of H_tau(z) for |z| >= 1."""
    if sys.tails.h_vanishes:
        return 0.0
    if constants is None:
        # Deferred: the constants live with the stability certificates.
        from rieszlab.core.stability import gamma_constants
        constants = gamma_constants(sys, tau)
    tail = sys.tails.h_bound(constants.upsilon1, constants.upsilon2)
    return math.inf if tail is None else tail


def transfer_H(op: SampledOperator, z: ComplexLike, sys: TruncatedSystem,
               constants: Optional[BoundConstants] = None) -> Tuple[complex, float]:
    z = as_complex(z)
    value = complex(transfer_H_values(op, np.array([z]))[0])
    if sys.tails.h_vanishes:
        return value, 0.0
    if abs(z) < 1:
        return value, math.inf
    return value, h_tail_bound(sys, op.tau, constants)


def resolvent_T(op: SampledOperator, z: ComplexLike, x) -> Types.T_STATE_VEC:
    z = as_complex(z)
    x = as_state(x, op.n_modes)
    _check_poles(np.array([z]), op.diag)
    return x / (z - op.diag)


def resolvent_delta(op: SampledOperator, z: ComplexLike, x) -> Types.T_STATE_VEC:
    """(zI - Delta(tau))^{-1} x by the Sherman-Morrison-Woodbury formula."""
    z = as_complex(z)
    x = as_state(x, op.n_modes)
    _check_poles(np.array([z]), op.diag)
    gap = z - op.diag
    rt_x = x / gap
    rt_s = op.s_vec / gap
    denominator = 1.0 - np.dot(op.f_vec, rt_s)
    if abs(denominator) <= DENOMINATOR_ATOL:
        raise SingularFeedbackDenominator(z, complex(denominator))
    return rt_x + rt_s * (np.dot(op.f_vec, rt_x) / denominator)


def iter_resolvent_delta(op: SampledOperator, points, x,
                         chunk_size: int = CHUNK_SIZE) -> Iterator[Tuple[np.ndarray, np.ndarray]]:
    """Yields (points, resolvent rows) block by block, one row of length N per point."""
    points = np.atleast_1d(np.asarray(points, dtype=complex))
    x = as_state(x, op.n_modes)
    for chunk in _chunks(points, chunk_size):
        _check_poles(chunk, op.diag)
        gap = chunk[:, None] - op.diag[None, :]
        rt_x = x[None, :] / gap
        rt_s = op.s_vec[None, :] / gap
        denominator = 1.0 - rt_s @ op.f_vec
        singular = np.abs(denominator) <= DENOMINATOR_ATOL
        if singular.any():
            i = int(np.flatnonzero(singular)[0])
            raise SingularFeedbackDenominator(complex(chunk[i]), complex(denominator[i]))
        yield chunk, rt_x + rt_s * ((rt_x @ op.f_vec) / denominator)[:, None]


def resolvent_delta_batch(op: SampledOperator, points, x) -> np.ndarray:
    blocks = [rows for _, rows in iter_resolvent_delta(op, points, x)]
    if not blocks:
        return np.zeros((0, op.n_modes), dtype=complex)
    return np.concatenate(blocks, axis=0)


def resolvent_closed_loop(lam: ComplexLike, x, sys: TruncatedSystem) -> Types.T_STATE_VEC:
    """(lambda I - A - BF)^{-1} x by the Sherman-Morrison-Woodbury formula in continuous time."""
    lam = as_complex(lam)
    x = as_state(x, sys.n_modes)
    _check_poles(np.array([lam]), sys.eigenvalues)
    gap = lam - sys.eigenvalues
    r_x = x / gap
    r_b = sys.b / gap
    denominator = 1.0 - np.dot(sys.f, r_b)
    if abs(denominator) <= DENOMINATOR_ATOL:
        raise SingularFeedbackDenominator(lam, complex(denominator))
    return r_x + r_b * (np.dot(sys.f, r_x) / denominator)


def spectral_radius_estimate(op: SampledOperator, iterations: int = 400, seed: int = 0) -> float:
    """Power iteration on Delta(tau).

    The estimate is the geometric mean growth over the second half of the iterations, which also settles when
    several eigenvalues share the dominant modulus.
    """
    if op.n_modes == 0:
        return 0.0
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(op.n_modes) + 1j * rng.standard_normal(op.n_modes)
    x /= np.linalg.norm(x)
    log_growth = []
    for _ in range(iterations):
        y = apply_delta(op, x)
        norm = float(np.linalg.norm(y))
        if norm == 0.0:
            return 0.0
        log_growth.append(math.log(norm))
        x = y / norm
    tail = log_growth[len(log_growth) // 2:]
    estimate = math.exp(sum(tail) / len(tail))
    logger.debug('SpectralRadiusEstimate tau=%r estimate=%r iterations=%d' % (op.tau, estimate, iterations))
    return estimate
