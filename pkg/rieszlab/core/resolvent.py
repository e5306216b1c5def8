"""resolvent.py

Circle integrals of ||R(r e^(i theta), Delta(tau)) x||^2 by the trapezoid rule, the scaled scans that turn them
into strong and polynomial stability criteria as r decreases to 1, the Parseval identity against orbit sums and
the contour formula for powers of Delta(tau).
"""
import logging
import math
from typing import List, Optional, Sequence, Union

import numpy as np

from rieszlab.core.errors import InvalidParameter, SeriesDivergence
from rieszlab.core.executor import AsyncScanPoolExecutor, ScanExecutorBase, SerialScanExecutor
from rieszlab.core.operators import delta_orbit, iter_resolvent_delta, spectral_radius_estimate
from rieszlab.core.structs import (RawScaling, ResolventScanOptions, SampledOperator, ScalingFn, ScanResult,
                                   ScanRow, Types, as_state)


logger = logging.getLogger('rieszlab.core.resolvent')

R_FLOOR = 1.0 + 1e-6
RADIUS_MARGIN = 0.01
SERIES_TOLERANCE = 1e-12
MAX_SERIES_TERMS = 10 ** 7
GROWTH_LIMIT = 1e8


def _circle(r: float, nodes: int) -> np.ndarray:
    return r * np.exp(2j * np.pi * np.arange(nodes) / nodes)


def circle_integral(op: SampledOperator, r: float, x, nodes: int = 4096, adjoint: bool = False) -> float:
    """Trapezoid approximation of the integral of ||R(r e^(i theta), Delta)x||^2 over [0, 2 pi]."""
    if not r > 1:
        raise InvalidParameter('circle radius must exceed 1, got %r' % (r, ))
    if nodes < 1:
        raise InvalidParameter('node count must be positive, got %r' % (nodes, ))
    target = op.adjoint() if adjoint else op
    x = as_state(x, op.n_modes)
    total = 0.0
    # blocks arrive in ascending theta, so the sum order is fixed
    for _, rows in iter_resolvent_delta(target, _circle(r, nodes), x):
        total += float(np.sum(np.abs(rows) ** 2))
    return 2.0 * np.pi * total / nodes


def row_nodes(r: float, nodes: int, max_nodes: int) -> int:
    """Node count for radius r: at least 16 / (r - 1), rounded up to a power of two and capped."""
    wanted = max(nodes, int(math.ceil(16.0 / (r - 1.0))))
    return min(max_nodes, 1 << (wanted - 1).bit_length())


def _check_r_sequence(r_sequence: Sequence[float]) -> List[float]:
    rs = [float(r) for r in r_sequence]
    if not rs:
        raise InvalidParameter('r sequence is empty')
    if any(b >= a for a, b in zip(rs, rs[1:])):
        raise InvalidParameter('r sequence must be strictly descending')
    if rs[-1] < R_FLOOR:
        raise InvalidParameter('r sequence must stay at or above %r, got %r' % (R_FLOOR, rs[-1]))
    return rs


def _scan_result(rows: List[ScanRow], scale, tolerance: float) -> ScanResult:
    usable = [row for row in rows if row.scaled_value > 0]
    slope = None
    if len(usable) >= 2:
        slope = float(np.polyfit(np.log([row.r - 1.0 for row in usable]),
                                 np.log([row.scaled_value for row in usable]), 1)[0])
    vanishing = rows[-1].scaled_value < tolerance and (slope is None or slope > 0)
    logger.info('ScaledScan kind=%s rows=%d last=%r slope=%r vanishing=%s' % (
        scale.kind.value, len(rows), rows[-1].scaled_value, slope, vanishing))
    return ScanResult(rows=rows, slope=slope, vanishing=vanishing, scale=scale)


class _RowTask:

    def __init__(self, op: SampledOperator, x, scale, nodes: int, max_nodes: int, adjoint: bool):
        self.op = op
        self.x = x
        self.scale = scale
        self.nodes = nodes
        self.max_nodes = max_nodes
        self.adjoint = adjoint

    def __call__(self, r: float) -> ScanRow:
        nodes = row_nodes(r, self.nodes, self.max_nodes)
        raw = circle_integral(self.op, r, self.x, nodes, self.adjoint)
        return ScanRow(r=r, raw_integral=raw, scaled_value=self.scale(r) * raw, nodes=nodes, adjoint=self.adjoint)


def scaled_scan(op: SampledOperator, x, scale: Union[ScalingFn, RawScaling],
                r_sequence: Optional[Sequence[float]] = None, nodes: Optional[int] = None, *,
                adjoint: bool = False, opts: Optional[ResolventScanOptions] = None,
                executor: Optional[ScanExecutorBase] = None) -> ScanResult:
    """One ScanRow per radius plus the log-log slope of scaled_value against r - 1.

    The limit is read as vanishing when the last scaled value is below the tolerance and the slope is positive.
    """
    opts = opts or ResolventScanOptions()
    rs = _check_r_sequence(opts.r_sequence() if r_sequence is None else r_sequence)
    task = _RowTask(op, as_state(x, op.n_modes), scale, nodes or opts.nodes, opts.max_nodes, adjoint)
    executor = executor or SerialScanExecutor()
    return _scan_result(executor.map(task, rs), scale, opts.tolerance)


async def scaled_scan_async(op: SampledOperator, x, scale: Union[ScalingFn, RawScaling],
                            executor: AsyncScanPoolExecutor, r_sequence: Optional[Sequence[float]] = None,
                            nodes: Optional[int] = None, *, adjoint: bool = False,
                            opts: Optional[ResolventScanOptions] = None) -> ScanResult:
    opts = opts or ResolventScanOptions()
    rs = _check_r_sequence(opts.r_sequence() if r_sequence is None else r_sequence)
    task = _RowTask(op, as_state(x, op.n_modes), scale, nodes or opts.nodes, opts.max_nodes, adjoint)
    rows = await executor.map(task, rs)
    return _scan_result(rows, scale, opts.tolerance)


def orbit_series(op: SampledOperator, r: float, x, K_max: Optional[int] = None) -> float:
    """sum_k ||Delta^k x||^2 / r^(2(k+1)), truncated at K_max or once the geometric tail drops below 1e-12."""
    x = as_state(x, op.n_modes)
    x0_norm = float(np.linalg.norm(x))
    if x0_norm == 0.0:
        return 0.0
    ratio = None
    if K_max is None:
        ratio = ((spectral_radius_estimate(op) + RADIUS_MARGIN) / r) ** 2
    total = 0.0
    steps = K_max if K_max is not None else MAX_SERIES_TERMS
    log_r = math.log(r)
    for step in delta_orbit(op, x, steps):
        if step.norm > GROWTH_LIMIT * x0_norm * math.exp(step.k * log_r):
            raise SeriesDivergence('orbit norm %r at k=%d outgrows r^k for r=%r' % (step.norm, step.k, r))
        term = step.norm ** 2 * math.exp(-2.0 * (step.k + 1) * log_r)
        total += term
        if ratio is not None and ratio < 1 and term * ratio / (1.0 - ratio) < SERIES_TOLERANCE:
            logger.debug('OrbitSeriesConverged r=%r terms=%d' % (r, step.k + 1))
            break
    return total


def parseval_check(op: SampledOperator, r: float, x, nodes: int = 8192, K_max: Optional[int] = None) -> float:
    """|quadrature / (2 pi) - sum_{k <= K_max} ||Delta^k x||^2 r^(-2(k+1))|."""
    rho = spectral_radius_estimate(op)
    if r <= rho + RADIUS_MARGIN:
        raise SeriesDivergence('r=%r does not exceed the spectral radius estimate %r by %r' % (r, rho, RADIUS_MARGIN))
    quadrature = circle_integral(op, r, x, nodes) / (2.0 * np.pi)
    series = orbit_series(op, r, x, K_max)
    residual = abs(quadrature - series)
    logger.info('ParsevalCheck r=%r nodes=%d residual=%r' % (r, nodes, residual))
    return residual


def contour_power(op: SampledOperator, x, k: int, r: float = 1.5, nodes: int = 4096) -> Types.T_STATE_VEC:
    """Delta^k x from (r^(k+1) / 2 pi) times the integral of e^(i theta (k+1)) R(r e^(i theta), Delta)x.

    The circle must enclose the spectrum of Delta(tau).
    """
    if k < 0:
        raise InvalidParameter('power must be nonnegative, got %r' % (k, ))
    if not r > 0:
        raise InvalidParameter('circle radius must be positive, got %r' % (r, ))
    x = as_state(x, op.n_modes)
    result = np.zeros(op.n_modes, dtype=complex)
    for points, rows in iter_resolvent_delta(op, _circle(r, nodes), x):
        result += (points ** (k + 1)) @ rows
    return result / nodes
