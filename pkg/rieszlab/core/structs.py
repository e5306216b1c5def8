import enum
import math
from collections import namedtuple
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from rieszlab.core.errors import InvalidParameter, LengthMismatch


ComplexLike = Union[complex, float, int, Sequence[float]]

T_STATE_VEC = np.ndarray
T_INDICES = Tuple[int, ...]


class Types:
    T_STATE_VEC = T_STATE_VEC
    T_INDICES = T_INDICES
    T_COMPLEX = ComplexLike


def as_complex(value: ComplexLike) -> complex:
    """Coerces scalars and [re, im] pairs to complex."""
    if isinstance(value, (list, tuple)):
        re, im = value
        return complex(re, im)
    return complex(value)


def as_complex_array(values) -> np.ndarray:
    return np.array([as_complex(v) for v in values], dtype=complex)


def as_state(x, n_modes: Optional[int] = None) -> T_STATE_VEC:
    """Returns the modal coefficients of a state as a 1-D complex array."""
    arr = np.asarray(x, dtype=complex)
    if arr.ndim != 1:
        raise LengthMismatch('a state is a 1-D coefficient sequence, got shape %r' % (arr.shape, ))
    if n_modes is not None and arr.shape[0] != n_modes:
        raise LengthMismatch('state has %d coefficients, system has %d modes' % (arr.shape[0], n_modes))
    return arr


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=complex)
    arr.setflags(write=False)
    return arr


class SectorClass(enum.Enum):
    BAD_REGION = 'bad_region'
    STABLE_SECTOR = 'stable_sector'
    ON_AXIS = 'on_axis'


class Verdict(enum.Enum):
    PASS = 'pass'
    FAIL = 'fail'
    UNKNOWN = 'unknown'


class ModeTriple(namedtuple('ModeTriple', ['lam', 'b_coeff', 'f_coeff'])):
    """One modal channel. Behaves like a tuple with named attributes. Arguments are coerced to complex."""

    __slots__ = ()

    def __new__(cls, lam: ComplexLike, b_coeff: ComplexLike = 0j, f_coeff: ComplexLike = 0j):
        args = (as_complex(lam), as_complex(b_coeff), as_complex(f_coeff))
        if not all(math.isfinite(a.real) and math.isfinite(a.imag) for a in args):
            raise InvalidParameter('mode coefficients must be finite, got %r' % (args, ))
        return super().__new__(ModeTriple, *args)


class SectorParams(namedtuple('SectorParams', ['alpha', 'upsilon', 'omega'])):

    __slots__ = ()

    def __new__(cls, alpha: float, upsilon: float, omega: float):
        args = (float(alpha), float(upsilon), float(omega))
        if not all(a > 0 and math.isfinite(a) for a in args):
            raise InvalidParameter('sector parameters must be strictly positive, got %r' % (args, ))
        return super().__new__(SectorParams, *args)


class TailData(namedtuple('TailData', ['b_l2_sq', 'f_l2_sq', 'b_beta_sq', 'f_gamma_sq', 'b_re_sq', 'f_re_sq'])):
    """Bounds on the sums discarded by truncation.

    b_l2_sq / f_l2_sq bound sum |b_n|^2 / |f_n|^2, b_beta_sq / f_gamma_sq bound the D^beta / D_*^gamma tails
    and b_re_sq / f_re_sq bound sum |b_n|^2 / |Re lambda_n|. None means no bound is known.
    """

    __slots__ = ()

    def __new__(cls, b_l2_sq: Optional[float] = None, f_l2_sq: Optional[float] = None,
                b_beta_sq: Optional[float] = None, f_gamma_sq: Optional[float] = None,
                b_re_sq: Optional[float] = None, f_re_sq: Optional[float] = None):
        args = tuple(None if v is None else float(v) for v in
                     (b_l2_sq, f_l2_sq, b_beta_sq, f_gamma_sq, b_re_sq, f_re_sq))
        if any(v is not None and (v < 0 or not math.isfinite(v)) for v in args):
            raise InvalidParameter('tail sums must be finite and nonnegative, got %r' % (args, ))
        return super().__new__(TailData, *args)

    @staticmethod
    def zero() -> 'TailData':
        return TailData(0.0, 0.0, 0.0, 0.0, 0.0, 0.0)

    def with_f(self, f_l2_sq: Optional[float], f_gamma_sq: Optional[float], f_re_sq: Optional[float]) -> 'TailData':
        return self._replace(f_l2_sq=f_l2_sq, f_gamma_sq=f_gamma_sq, f_re_sq=f_re_sq)

    @staticmethod
    def _product(a: Optional[float], b: Optional[float]) -> Optional[float]:
        # An exactly zero factor kills the term even when the other one is unknown.
        if a == 0.0 or b == 0.0:
            return 0.0
        if a is None or b is None:
            return None
        return math.sqrt(a) * math.sqrt(b)

    def g_bound(self) -> Optional[float]:
        """Bound on the discarded part of G(lambda) for Re lambda >= 0."""
        return self._product(self.b_re_sq, self.f_re_sq)

    def h_bound(self, upsilon1: float, upsilon2: float) -> Optional[float]:
        """Bound on the discarded part of H_tau(z) for |z| >= 1."""
        first = self._product(self.b_l2_sq, self.f_l2_sq)
        second = self._product(self.b_beta_sq, self.f_gamma_sq)
        if first is None or second is None:
            return None
        return upsilon1 * first + upsilon2 * second

    @property
    def h_vanishes(self) -> bool:
        return self.h_bound(1.0, 1.0) == 0.0


@dataclass(frozen=True, eq=False)
class TruncatedSystem:
    """A finite modal family lambda_n, b_n, f_n together with its sector and coupling data."""

    eigenvalues: np.ndarray
    b: np.ndarray
    f: np.ndarray
    sector: SectorParams
    beta: float = 0.0
    gamma: float = 0.0
    tails: TailData = field(default_factory=TailData.zero)
    tails_supplied: bool = False
    label: str = ''

    def __post_init__(self):
        eigenvalues, b, f = (_frozen(v) for v in (self.eigenvalues, self.b, self.f))
        if eigenvalues.ndim != 1 or b.shape != eigenvalues.shape or f.shape != eigenvalues.shape:
            raise LengthMismatch('eigenvalues, b and f must be 1-D sequences of equal length, got %r %r %r'
                                 % (eigenvalues.shape, b.shape, f.shape))
        for name, arr in (('eigenvalues', eigenvalues), ('b', b), ('f', f)):
            if not np.all(np.isfinite(arr)):
                raise InvalidParameter('%s must be finite' % name)
        if np.unique(eigenvalues).shape[0] != eigenvalues.shape[0]:
            raise InvalidParameter('eigenvalues must be distinct (simple spectrum)')
        if self.beta < 0 or self.gamma < 0:
            raise InvalidParameter('coupling exponents must be nonnegative, got beta=%r gamma=%r'
                                   % (self.beta, self.gamma))
        object.__setattr__(self, 'eigenvalues', eigenvalues)
        object.__setattr__(self, 'b', b)
        object.__setattr__(self, 'f', f)
        object.__setattr__(self, 'beta', float(self.beta))
        object.__setattr__(self, 'gamma', float(self.gamma))

    @classmethod
    def from_modes(cls, modes: Sequence[ModeTriple], sector: SectorParams, beta: float = 0.0, gamma: float = 0.0,
                   tails: Optional[TailData] = None, label: str = '') -> 'TruncatedSystem':
        modes = [m if isinstance(m, ModeTriple) else ModeTriple(*m) for m in modes]
        return cls(
            eigenvalues=np.array([m.lam for m in modes], dtype=complex),
            b=np.array([m.b_coeff for m in modes], dtype=complex),
            f=np.array([m.f_coeff for m in modes], dtype=complex),
            sector=sector,
            beta=beta,
            gamma=gamma,
            tails=TailData.zero() if tails is None else tails,
            tails_supplied=tails is not None,
            label=label
        )

    @property
    def n_modes(self) -> int:
        return self.eigenvalues.shape[0]

    @property
    def modes(self) -> List[ModeTriple]:
        return [ModeTriple(lam, b, f) for lam, b, f in zip(self.eigenvalues, self.b, self.f)]

    @property
    def tail_b_norm_sq(self) -> float:
        return self.tails.b_beta_sq or 0.0

    @property
    def tail_f_norm_sq(self) -> float:
        return self.tails.f_gamma_sq or 0.0

    @property
    def truncation_only(self) -> bool:
        return not self.tails_supplied

    def with_feedback(self, f, f_tails: Optional[Tuple[Optional[float], Optional[float], Optional[float]]] = None
                      ) -> 'TruncatedSystem':
        """Returns a copy with new feedback coefficients.

        f_tails is (f_l2_sq, f_gamma_sq, f_re_sq) for the discarded part of f; omitted means f vanishes beyond
        the truncation.
        """
        f = as_state(f, self.n_modes)
        tails = self.tails.with_f(*(f_tails if f_tails is not None else (0.0, 0.0, 0.0)))
        return replace(self, f=f, tails=tails)


@dataclass(frozen=True, eq=False)
class SampledOperator:
    """Delta(tau) = T(tau) + S(tau)F in modal coordinates: diag(d) + s f^T."""

    tau: float
    diag: np.ndarray
    s_vec: np.ndarray
    f_vec: np.ndarray

    def __post_init__(self):
        if not self.tau > 0:
            raise InvalidParameter('sampling period must be positive, got %r' % (self.tau, ))
        diag, s_vec, f_vec = (_frozen(v) for v in (self.diag, self.s_vec, self.f_vec))
        if diag.ndim != 1 or s_vec.shape != diag.shape or f_vec.shape != diag.shape:
            raise LengthMismatch('diag, s_vec and f_vec must have equal length')
        object.__setattr__(self, 'tau', float(self.tau))
        object.__setattr__(self, 'diag', diag)
        object.__setattr__(self, 's_vec', s_vec)
        object.__setattr__(self, 'f_vec', f_vec)

    @classmethod
    def from_system(cls, sys: TruncatedSystem, tau: float) -> 'SampledOperator':
        if not tau > 0:
            raise InvalidParameter('sampling period must be positive, got %r' % (tau, ))
        return cls(
            tau=tau,
            diag=np.exp(tau * sys.eigenvalues),
            s_vec=sys.b * input_integral(tau, sys.eigenvalues),
            f_vec=sys.f
        )

    @property
    def n_modes(self) -> int:
        return self.diag.shape[0]

    def adjoint(self) -> 'SampledOperator':
        """Delta(tau)^* = diag(conj d) + conj(f) conj(s)^T, expressed with the same data layout."""
        return SampledOperator(self.tau, np.conj(self.diag), np.conj(self.f_vec), np.conj(self.s_vec))


def input_integral(t: float, eigenvalues: np.ndarray) -> np.ndarray:
    """Integral of exp(s lambda) over [0, t], with the limit value t at lambda = 0."""
    lam = np.asarray(eigenvalues, dtype=complex)
    nonzero = lam != 0
    safe = np.where(nonzero, lam, 1.0)
    return np.where(nonzero, np.expm1(t * lam) / safe, t)


@dataclass(frozen=True)
class AssumptionReport:
    a1_count_in_bad_region: int
    a1_indices: T_INDICES
    a2_min_axis_distance: float
    a4_beta_norm: float
    a4_gamma_norm: float
    a4_branch: Optional[str]
    verdict_per_assumption: Dict[str, Verdict]
    truncation_only: bool

    @property
    def passed(self) -> bool:
        return all(self.verdict_per_assumption[k] is Verdict.PASS for k in ('A1', 'A2', 'A4'))


class SpectrumSplit(namedtuple('SpectrumSplit', ['unstable_indices', 'bad_region_indices', 'stable_indices'])):

    __slots__ = ()

    def __new__(cls, unstable_indices: Sequence[int], bad_region_indices: Sequence[int],
                stable_indices: Sequence[int]):
        args = tuple(tuple(int(i) for i in idx) for idx in (unstable_indices, bad_region_indices, stable_indices))
        return super().__new__(SpectrumSplit, *args)


class BoundConstants(namedtuple('BoundConstants', [
    'kappa', 'm1', 'upsilon1', 'upsilon2', 'upsilon0', 'alpha_tilde', 'c1', 'kappa_all', 'tau'
])):

    __slots__ = ()


class TauScanRow(namedtuple('TauScanRow', ['tau', 'eps_d', 'nonresonant', 'exterior_zeros', 'passed'])):

    __slots__ = ()


@dataclass
class MarginReport:
    eps_c: Optional[float] = None
    eps_d: Optional[float] = None
    tau: Optional[float] = None
    nonresonant: Optional[bool] = None
    tau_star_estimate: Optional[float] = None
    tail_bound_c: Optional[float] = None
    tail_bound_d: Optional[float] = None
    winding_number: Optional[int] = None
    exterior_zeros: Optional[int] = None
    eps_d_floor: Optional[float] = None
    truncation_only: bool = False
    curve: List[TauScanRow] = field(default_factory=list)
    grids_used: Dict[str, object] = field(default_factory=dict)


class ScalingKind(enum.Enum):
    POWER = 'power'
    LOG = 'log'
    RAW = 'raw'


class ScalingFn(namedtuple('ScalingFn', ['delta', 'kind'])):
    """Lambda_delta(r): (r-1)^(1-2 delta) for delta < 1/2 and 1/|log(r-1)| at delta = 1/2."""

    __slots__ = ()

    def __new__(cls, delta: float):
        delta = float(delta)
        if not 0 < delta <= 0.5 + 1e-12:
            raise InvalidParameter('scaling exponent must lie in (0, 1/2], got %r' % (delta, ))
        kind = ScalingKind.LOG if abs(delta - 0.5) <= 1e-12 else ScalingKind.POWER
        return super().__new__(ScalingFn, delta, kind)

    def __call__(self, r: float) -> float:
        if self.kind is ScalingKind.LOG:
            return 1.0 / abs(math.log(r - 1.0))
        return (r - 1.0) ** (1.0 - 2.0 * self.delta)


class RawScaling(namedtuple('RawScaling', ['kind'])):
    """The factor (r - 1) of the strong-stability criterion."""

    __slots__ = ()

    def __new__(cls):
        return super().__new__(RawScaling, ScalingKind.RAW)

    @property
    def delta(self) -> Optional[float]:
        return None

    def __call__(self, r: float) -> float:
        return r - 1.0


class ScanRow(namedtuple('ScanRow', ['r', 'raw_integral', 'scaled_value', 'nodes', 'adjoint'])):

    __slots__ = ()


@dataclass(frozen=True)
class ScanResult:
    rows: List[ScanRow]
    slope: Optional[float]
    vanishing: bool
    scale: Union[ScalingFn, RawScaling]


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    norms: np.ndarray
    x0_delta_class: Optional[float] = None
    within_hypotheses: Optional[bool] = None
    tau: Optional[float] = None
    state_times: Optional[np.ndarray] = None
    states: Optional[np.ndarray] = None

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        norms = np.asarray(self.norms, dtype=float)
        if times.shape != norms.shape or times.ndim != 1:
            raise LengthMismatch('times and norms must be 1-D sequences of equal length')
        if times.shape[0] > 1 and not np.all(np.diff(times) > 0):
            raise InvalidParameter('trajectory times must be strictly ascending')
        if not np.all(np.isfinite(norms)):
            raise InvalidParameter('trajectory norms must be finite')
        object.__setattr__(self, 'times', times)
        object.__setattr__(self, 'norms', norms)


class DecayModel(enum.Enum):
    PURE_POWER = 'power'
    POWER_SQRT_LOG = 'powerlog'


class DecayFit(namedtuple('DecayFit', [
    'model', 'exponent', 'amplitude', 'fit_window', 'rms_residual', 'points', 'excluded_points', 'decaying'
])):

    __slots__ = ()


@dataclass(frozen=True)
class EquivalenceReport:
    sampled_fit: DecayFit
    continuous_fit: DecayFit
    exponent_gap: float
    agree: bool
    tolerance: float


@dataclass
class ResolventScanOptions:
    r_count: int = 18
    nodes: int = 4096
    max_nodes: int = 65536
    tolerance: float = 1e-3

    def r_sequence(self) -> List[float]:
        return [1.0 + 2.0 ** (-j) for j in range(1, self.r_count + 1)]


@dataclass
class MarginOptions:
    circle_nodes: int = 1024
    refine_tolerance: float = 1e-4
    node_cap: int = 2 ** 20
