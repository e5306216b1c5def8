"""modal.py

Sector geometry of the eigenvalues, D^delta graph norms and the audit of the standing assumptions
on a truncated modal family.
"""
import logging
from typing import Tuple

import numpy as np

from rieszlab.core.errors import EmptySystem, UnstableMode
from rieszlab.core.structs import (AssumptionReport, ComplexLike, SectorClass, SectorParams, TruncatedSystem,
                                   Types, Verdict, as_complex, as_state)


logger = logging.getLogger('rieszlab.core.modal')

# Points on the boundary of the sector count as inside it; generated families sit exactly there.
BOUNDARY_RTOL = 1e-12


def sector_masks(eigenvalues, sector: SectorParams) -> Tuple[np.ndarray, np.ndarray]:
    """Returns (on_axis, bad_region) boolean masks over the eigenvalues."""
    lam = np.asarray(eigenvalues, dtype=complex)
    re, im = lam.real, lam.imag
    on_axis = re == 0.0
    nonreal = im != 0.0
    with np.errstate(divide='ignore', invalid='ignore'):
        bound = np.where(nonreal, -sector.upsilon / np.abs(im) ** sector.alpha, -np.inf)
        in_omega = nonreal & (re <= bound + BOUNDARY_RTOL * np.abs(bound))
    stable = ~on_axis & ((re <= -sector.omega) | in_omega)
    return on_axis, ~on_axis & ~stable


def classify_eigenvalue(lam: ComplexLike, sector: SectorParams) -> SectorClass:
    on_axis, bad = sector_masks(np.array([as_complex(lam)]), sector)
    if on_axis[0]:
        return SectorClass.ON_AXIS
    if bad[0]:
        return SectorClass.BAD_REGION
    return SectorClass.STABLE_SECTOR


def _a4_branch(sys: TruncatedSystem) -> Tuple[Verdict, str]:
    total = sys.beta + sys.gamma
    if float(sys.beta).is_integer() and float(sys.gamma).is_integer() and total >= sys.sector.alpha:
        return Verdict.PASS, 'integer'
    if total > sys.sector.alpha:
        return Verdict.PASS, 'strict'
    return Verdict.FAIL, None


def audit_assumptions(sys: TruncatedSystem) -> AssumptionReport:
    if sys.n_modes == 0:
        raise EmptySystem('cannot audit a system without modes')
    on_axis, bad = sector_masks(sys.eigenvalues, sys.sector)
    # Axis eigenvalues lie in C_{-omega} and outside the sector as well.
    exceptional = on_axis | bad
    a1_indices = tuple(int(i) for i in np.flatnonzero(exceptional))
    a2_min = float(np.min(np.abs(sys.eigenvalues.real)))

    modulus = np.abs(sys.eigenvalues)
    beta_sq = float(np.sum(modulus ** (2 * sys.beta) * np.abs(sys.b) ** 2)) + sys.tail_b_norm_sq
    gamma_sq = float(np.sum(modulus ** (2 * sys.gamma) * np.abs(sys.f) ** 2)) + sys.tail_f_norm_sq
    a4_verdict, branch = _a4_branch(sys)
    if not (np.isfinite(beta_sq) and np.isfinite(gamma_sq)):
        a4_verdict = Verdict.FAIL

    # The exceptional set must leave a stable tail behind it on the truncation.
    a1_verdict = Verdict.PASS if len(a1_indices) < sys.n_modes and not exceptional[-1] else Verdict.FAIL
    verdicts = {
        'A1': a1_verdict,
        'A2': Verdict.PASS if a2_min > 0 else Verdict.FAIL,
        'A3': Verdict.UNKNOWN,
        'A4': a4_verdict,
    }
    if sys.truncation_only:
        logger.warning('TruncationOnlyAudit label=%r modes=%d' % (sys.label, sys.n_modes))
    logger.info('Audit label=%r a1_count=%d a2_min=%r a4_branch=%r verdicts=%r' % (
        sys.label, len(a1_indices), a2_min, branch, {k: v.value for k, v in verdicts.items()}))
    return AssumptionReport(
        a1_count_in_bad_region=len(a1_indices),
        a1_indices=a1_indices,
        a2_min_axis_distance=a2_min,
        a4_beta_norm=float(np.sqrt(beta_sq)),
        a4_gamma_norm=float(np.sqrt(gamma_sq)),
        a4_branch=branch,
        verdict_per_assumption=verdicts,
        truncation_only=sys.truncation_only
    )


def dnorm(x, delta: float, sys: TruncatedSystem) -> float:
    """sqrt(sum |lambda_n|^(2 delta) |x_n|^2)."""
    x = as_state(x, sys.n_modes)
    weights = np.abs(sys.eigenvalues) ** (2.0 * delta)
    return float(np.sqrt(np.sum(weights * np.abs(x) ** 2)))


def fractional_apply(x, delta: float, sys: TruncatedSystem) -> Types.T_STATE_VEC:
    """Applies (-A)^(-delta) coefficient-wise with the principal branch of the power."""
    x = as_state(x, sys.n_modes)
    unstable = np.flatnonzero(sys.eigenvalues.real >= 0)
    if unstable.size:
        raise UnstableMode('fractional powers need Re lambda_n < 0, violated at indices %r'
                           % (unstable.tolist(), ))
    return np.power(-sys.eigenvalues, -delta) * x
