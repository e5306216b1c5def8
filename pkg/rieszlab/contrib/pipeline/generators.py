"""generators.py

Modal families: the synthetic polynomially stable family, the damped-wave stand-in and explicit mode lists.
Generated families carry closed-form bounds on the coefficient sums beyond the truncation and must pass their own
audit.
"""
import logging
import math
from collections import namedtuple
from typing import Optional, Sequence, Tuple

import numpy as np

from rieszlab.core.errors import DivergentCoupling, InvalidParameter
from rieszlab.core.modal import audit_assumptions
from rieszlab.core.structs import (ComplexLike, ModeTriple, SectorParams, TailData, TruncatedSystem, Types,
                                   Verdict, as_complex)


logger = logging.getLogger('rieszlab.contrib.pipeline.generators')

MODELED_SPECTRUM_NOTE = ('modeled spectrum: lambda_{+-n} = -upsilon / (n pi)^alpha +- i n pi stands in for the '
                         'perturbed wave operator, which has no closed-form spectrum')


class CouplingLaw(namedtuple('CouplingLaw', ['amplitude', 'q'])):
    """Coefficient rule c_n = amplitude * n^(-q)."""

    __slots__ = ()

    def __new__(cls, amplitude: float = 1.0, q: float = 2.0):
        args = (float(amplitude), float(q))
        if not all(math.isfinite(a) for a in args):
            raise InvalidParameter('coupling law parameters must be finite, got %r' % (args, ))
        return super().__new__(CouplingLaw, *args)

    def coefficients(self, n: np.ndarray) -> np.ndarray:
        return self.amplitude * n ** (-self.q)


def _power_tail(amp_sq: float, exponent: float, N: int, scale: float = 1.0) -> float:
    """scale * amp_sq * sum_{n > N} n^exponent, bounded by the integral test; requires exponent < -1."""
    if amp_sq == 0.0:
        return 0.0
    return scale * amp_sq * N ** (exponent + 1.0) / (-exponent - 1.0)


def _law_tails(law: Optional[CouplingLaw], exponent: float, N: int, alpha: float, modulus_factor: float,
               re_scale: float, name: str) -> Tuple[float, float, Optional[float]]:
    """Tail bounds (l2, D^exponent, 1/|Re lambda|).

    Assumes |lambda_n| <= modulus_factor * n and 1 / |Re lambda_n| = re_scale * n^alpha.
    """
    if law is None or law.amplitude == 0.0:
        return 0.0, 0.0, 0.0
    amp_sq, q = law.amplitude ** 2, law.q
    if 2.0 * q - 2.0 * exponent <= 1.0:
        raise DivergentCoupling('%s law n^-%r diverges in D^%r: 2q - 2*%r = %r <= 1' % (
            name, q, exponent, exponent, 2.0 * q - 2.0 * exponent))
    l2 = _power_tail(amp_sq, -2.0 * q, N)
    weighted = _power_tail(amp_sq, 2.0 * exponent - 2.0 * q, N, modulus_factor ** (2.0 * exponent))
    re_weighted = None
    if 2.0 * q - alpha > 1.0:
        re_weighted = _power_tail(amp_sq, alpha - 2.0 * q, N, re_scale)
    return l2, weighted, re_weighted


def _self_audit(sys: TruncatedSystem) -> TruncatedSystem:
    report = audit_assumptions(sys)
    if not report.passed:
        failed = sorted(k for k, v in report.verdict_per_assumption.items() if v is Verdict.FAIL)
        raise InvalidParameter('generated family %r fails its own audit: %s' % (sys.label, ', '.join(failed)))
    return sys


def generate_synthetic(alpha: float, upsilon_scale: float, N: int, b_law: Optional[CouplingLaw],
                       f_law: Optional[CouplingLaw] = None, *, beta: float = 0.0, gamma: float = 0.0,
                       omega: float = 1.0, label: str = 'synthetic_polynomial') -> TruncatedSystem:
    """lambda_n = -upsilon_scale / n^alpha + i n for n = 1..N with power-law couplings.

    The eigenvalues sit on the boundary of the sector with Upsilon = upsilon_scale.
    """
    if not alpha > 0:
        raise InvalidParameter('alpha must be positive, got %r' % (alpha, ))
    if N < 1:
        raise InvalidParameter('at least one mode is required, got N=%r' % (N, ))
    sector = SectorParams(alpha, upsilon_scale, omega)
    n = np.arange(1, N + 1, dtype=float)
    eigenvalues = -upsilon_scale / n ** alpha + 1j * n
    # |lambda_n|^2 = s^2 / n^(2 alpha) + n^2 <= (1 + s^2) n^2
    modulus_factor = math.sqrt(1.0 + upsilon_scale ** 2)
    b_tails = _law_tails(b_law, beta, N, alpha, modulus_factor, 1.0 / upsilon_scale, 'b')
    f_tails = _law_tails(f_law, gamma, N, alpha, modulus_factor, 1.0 / upsilon_scale, 'f')
    sys = TruncatedSystem(
        eigenvalues=eigenvalues,
        b=np.zeros(N) if b_law is None else b_law.coefficients(n),
        f=np.zeros(N) if f_law is None else f_law.coefficients(n),
        sector=sector,
        beta=beta,
        gamma=gamma,
        tails=TailData(b_tails[0], f_tails[0], b_tails[1], f_tails[1], b_tails[2], f_tails[2]),
        tails_supplied=True,
        label=label
    )
    logger.info('GeneratedSynthetic N=%d alpha=%r scale=%r tails=%r' % (N, alpha, upsilon_scale, sys.tails))
    return _self_audit(sys)


def wave_eigenvalues(n: np.ndarray, upsilon: float, alpha: float) -> np.ndarray:
    return -upsilon / (n * np.pi) ** alpha + 1j * n * np.pi


def _interleave(values: np.ndarray, conjugate_values: np.ndarray) -> np.ndarray:
    out = np.empty(2 * values.shape[0], dtype=complex)
    out[0::2] = values
    out[1::2] = conjugate_values
    return out


def generate_wave(N_pairs: int, upsilon: float = 1.0, alpha: float = 2.0, b0_coeffs: Optional[Sequence] = None, *,
                  b_law: Optional[CouplingLaw] = None, beta: float = 0.0, gamma: float = 0.0, omega: float = 1.0,
                  unstable_modes: Sequence[Tuple[ComplexLike, ComplexLike]] = (), f2_scale: float = 0.0,
                  f2_q: float = 2.0, label: str = 'wave_perturbed') -> TruncatedSystem:
    """Conjugate pairs lambda_{+-n} = -upsilon / (n pi)^alpha +- i n pi, n = 1..N_pairs.

    The input profile enters through its sine coefficients b0_n (explicit numbers, or b_law when b0_coeffs is
    omitted); the pair n receives b0_n / sqrt(2) on both modes. Explicit coefficients beyond N_pairs become exact
    tails, shorter lists are padded with zeros. unstable_modes are (lambda, b) pairs placed before the wave modes.
    The stable-part feedback is f2_scale * n^(-f2_q) on both modes of pair n; unstable modes start with f = 0.
    """
    if N_pairs < 1:
        raise InvalidParameter('at least one mode pair is required, got %r' % (N_pairs, ))
    sector = SectorParams(alpha, upsilon, omega)
    n = np.arange(1, N_pairs + 1, dtype=float)
    lam = wave_eigenvalues(n, upsilon, alpha)
    # |lambda_n|^2 <= (n pi)^2 c_w with c_w = 1 + upsilon^2 / pi^(2 alpha + 2)
    modulus_factor = math.pi * math.sqrt(1.0 + upsilon ** 2 / math.pi ** (2.0 * alpha + 2.0))
    re_scale = math.pi ** alpha / upsilon

    if b0_coeffs is not None:
        coeffs = np.array([as_complex(c) for c in b0_coeffs], dtype=complex)
        b0 = np.zeros(N_pairs, dtype=complex)
        b0[:min(N_pairs, coeffs.shape[0])] = coeffs[:N_pairs]
        extra = coeffs[N_pairs:]
        extra_lam = wave_eigenvalues(np.arange(N_pairs + 1, N_pairs + 1 + extra.shape[0], dtype=float), upsilon,
                                     alpha)
        extra_sq = np.abs(extra) ** 2
        b_tails = (float(np.sum(extra_sq)),
                   float(np.sum(np.abs(extra_lam) ** (2.0 * beta) * extra_sq)),
                   float(np.sum(extra_sq / np.abs(extra_lam.real))))
    else:
        b0 = np.zeros(N_pairs) if b_law is None else b_law.coefficients(n)
        b_tails = _law_tails(b_law, beta, N_pairs, alpha, modulus_factor, re_scale, 'b0')
    f2_law = CouplingLaw(f2_scale, f2_q) if f2_scale else None
    # two modes per pair, each with |c_n|^2 = f2_scale^2 n^(-2q)
    f_tails = tuple(None if t is None else 2.0 * t for t in
                    _law_tails(f2_law, gamma, N_pairs, alpha, modulus_factor, re_scale, 'f2'))
    f2 = np.zeros(N_pairs) if f2_law is None else f2_law.coefficients(n)

    unstable = [ModeTriple(lam_u, b_u) for lam_u, b_u in unstable_modes]
    if any(m.lam.real <= 0 for m in unstable):
        raise InvalidParameter('unstable modes must have positive real parts')
    sys = TruncatedSystem(
        eigenvalues=np.concatenate([[m.lam for m in unstable], _interleave(lam, np.conj(lam))]),
        b=np.concatenate([[m.b_coeff for m in unstable], _interleave(b0, b0) / math.sqrt(2.0)]),
        f=np.concatenate([np.zeros(len(unstable)), _interleave(f2, f2)]),
        sector=sector,
        beta=beta,
        gamma=gamma,
        tails=TailData(b_tails[0], f_tails[0], b_tails[1], f_tails[1], b_tails[2], f_tails[2]),
        tails_supplied=True,
        label=label
    )
    logger.info('GeneratedWave pairs=%d unstable=%d alpha=%r upsilon=%r' % (
        N_pairs, len(unstable), alpha, upsilon))
    return _self_audit(sys)


def generate_explicit(modes: Sequence, sector: SectorParams, beta: float = 0.0, gamma: float = 0.0,
                      tails: Optional[TailData] = None, label: str = 'explicit') -> TruncatedSystem:
    sys = TruncatedSystem.from_modes(modes, sector, beta, gamma, tails, label)
    logger.info('GeneratedExplicit modes=%d tails_supplied=%s' % (sys.n_modes, sys.tails_supplied))
    return sys


def initial_state(sys: TruncatedSystem, delta: float, epsilon: float = 0.01) -> Types.T_STATE_VEC:
    """x0_n = |lambda_n|^(-delta) n^(-1/2 - epsilon), which lies in D^delta for every epsilon > 0."""
    if not epsilon > 0:
        raise InvalidParameter('epsilon must be positive, got %r' % (epsilon, ))
    n = np.arange(1, sys.n_modes + 1, dtype=float)
    return (np.abs(sys.eigenvalues) ** (-delta) * n ** (-0.5 - epsilon)).astype(complex)
