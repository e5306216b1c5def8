"""config.py

Run configuration: a JSON document with the sections generator, sector, coupling, feedback, sampling,
simulation, scans and output. Complex numbers are written as [re, im] pairs.
"""
import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Dict, List, Optional, Union

import numpy as np

from rieszlab.core.errors import ConfigError, RieszLabError
from rieszlab.core.stability import design_feedback, split_spectrum
from rieszlab.core.structs import SectorParams, TailData, TruncatedSystem, as_complex
from rieszlab.contrib.pipeline.generators import (CouplingLaw, generate_explicit, generate_synthetic,
                                                  generate_wave)


logger = logging.getLogger('rieszlab.contrib.pipeline.config')

GENERATOR_KINDS = ('explicit', 'synthetic_polynomial', 'wave_perturbed')
FEEDBACK_SOURCES = ('none', 'given', 'designed')


def _pair(value) -> List[float]:
    z = as_complex(value)
    return [float(z.real), float(z.imag)]


def _pairs(values) -> List[List[float]]:
    return [_pair(v) for v in values]


def _optional_float(value) -> Optional[float]:
    return None if value is None else float(value)


def _law(value) -> Optional[Dict[str, float]]:
    if value is None:
        return None
    law = CouplingLaw(**value)
    return {'amplitude': law.amplitude, 'q': law.q}


def _modes(values) -> List[List[List[float]]]:
    out = []
    for mode in values:
        if len(mode) not in (2, 3):
            raise ConfigError('explicit modes are [lambda, b] or [lambda, b, f], got %r' % (mode, ))
        out.append(_pairs(list(mode) + [0.0] * (3 - len(mode))))
    return out


def _tails(value) -> Optional[Dict[str, Optional[float]]]:
    if value is None:
        return None
    return TailData(**value)._asdict()


def _range_or_list(value) -> List[float]:
    """Either a list of values or {"start": a, "stop": b, "count": n} for a linear grid."""
    if isinstance(value, dict):
        return [float(v) for v in np.linspace(float(value['start']), float(value['stop']), int(value['count']))]
    return [float(v) for v in value]


def _window(value) -> Optional[List[float]]:
    """[t_lo, t_hi] with 0 < t_lo < t_hi, or None for the default last part of the log-time span."""
    if value is None:
        return None
    t_lo, t_hi = (float(v) for v in value)
    if not 0 < t_lo < t_hi:
        raise ConfigError('fit window must satisfy 0 < t_lo < t_hi, got %r' % (value, ))
    return [t_lo, t_hi]


def _coerced(coerce, default=None, factory=None):
    if factory is not None:
        return field(default_factory=factory, metadata={'coerce': coerce})
    return field(default=default, metadata={'coerce': coerce})


@dataclass
class GeneratorConfig:
    kind: str = _coerced(str, 'synthetic_polynomial')
    n_modes: int = _coerced(int, 200)
    b_law: Optional[Dict[str, float]] = _coerced(_law, factory=lambda: {'amplitude': 1.0, 'q': 2.5})
    f_law: Optional[Dict[str, float]] = _coerced(_law, None)
    modes: List = _coerced(_modes, factory=list)
    tails: Optional[Dict[str, Optional[float]]] = _coerced(_tails, None)
    b0_coeffs: Optional[List] = _coerced(lambda v: None if v is None else _pairs(v), None)
    unstable_modes: List = _coerced(lambda v: [_pairs(m) for m in v], factory=list)
    f2_scale: float = _coerced(float, 0.0)
    f2_q: float = _coerced(float, 2.0)


@dataclass
class SectorConfig:
    alpha: float = _coerced(float, 2.0)
    upsilon: float = _coerced(float, 1.0)
    omega: float = _coerced(float, 1.0)


@dataclass
class CouplingConfig:
    beta: float = _coerced(float, 1.0)
    gamma: float = _coerced(float, 1.0)


@dataclass
class FeedbackConfig:
    source: str = _coerced(str, 'none')
    f: List = _coerced(_pairs, factory=list)
    target_poles: List = _coerced(_pairs, factory=list)


@dataclass
class SamplingConfig:
    tau: float = _coerced(float, 0.1)
    tau_grid: List[float] = _coerced(_range_or_list, factory=lambda: [0.05 * k for k in range(1, 11)])
    eps_d_floor: Optional[float] = _coerced(_optional_float, None)
    circle_nodes: int = _coerced(int, 1024)
    axis_points: int = _coerced(int, 4001)


@dataclass
class SimulationConfig:
    t_end: float = _coerced(float, 100.0)
    substeps: int = _coerced(int, 1)
    delta: float = _coerced(float, 1.0)
    epsilon: float = _coerced(float, 0.01)
    model: str = _coerced(str, 'power')
    window_fraction: float = _coerced(float, 0.5)
    fit_window: Optional[List[float]] = _coerced(_window, None)
    state_stride: Optional[int] = _coerced(lambda v: None if v is None else int(v), None)


@dataclass
class ScanConfig:
    delta: float = _coerced(float, 0.5)
    r_count: int = _coerced(int, 12)
    nodes: int = _coerced(int, 4096)
    max_nodes: int = _coerced(int, 65536)
    tolerance: float = _coerced(float, 1e-3)
    adjoint: bool = _coerced(bool, False)


@dataclass
class OutputConfig:
    directory: Optional[str] = _coerced(lambda v: None if v is None else str(v), None)
    seed: int = _coerced(int, 0)
    workers: int = _coerced(int, 1)


@dataclass
class SystemConfig:
    generator: GeneratorConfig = field(default_factory=GeneratorConfig)
    sector: SectorConfig = field(default_factory=SectorConfig)
    coupling: CouplingConfig = field(default_factory=CouplingConfig)
    feedback: FeedbackConfig = field(default_factory=FeedbackConfig)
    sampling: SamplingConfig = field(default_factory=SamplingConfig)
    simulation: SimulationConfig = field(default_factory=SimulationConfig)
    scans: ScanConfig = field(default_factory=ScanConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def validate(self) -> 'SystemConfig':
        if self.generator.kind not in GENERATOR_KINDS:
            raise ConfigError('generator.kind must be one of %r, got %r' % (GENERATOR_KINDS, self.generator.kind))
        if self.feedback.source not in FEEDBACK_SOURCES:
            raise ConfigError('feedback.source must be one of %r, got %r' % (FEEDBACK_SOURCES, self.feedback.source))
        if self.generator.kind == 'explicit' and not self.generator.modes:
            raise ConfigError('the explicit generator needs a non-empty generator.modes list')
        if self.generator.kind != 'explicit' and self.generator.n_modes < 1:
            raise ConfigError('generator.n_modes must be positive')
        if self.simulation.model not in ('power', 'powerlog'):
            raise ConfigError('simulation.model must be power or powerlog, got %r' % (self.simulation.model, ))
        window = self.simulation.fit_window
        if window is not None and window[1] > self.simulation.t_end:
            raise ConfigError('simulation.fit_window ends at %r, after t_end=%r' % (window[1], self.simulation.t_end))
        return self


def _section(cls, data: Any, name: str):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError('section %r must be an object, got %r' % (name, type(data).__name__))
    known = {f.name: f for f in fields(cls)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigError('unknown keys in section %r: %s' % (name, ', '.join(unknown)))
    kwargs = {}
    for key, value in data.items():
        try:
            kwargs[key] = known[key].metadata['coerce'](value)
        except ConfigError:
            raise
        except (TypeError, ValueError, KeyError, RieszLabError) as e:
            raise ConfigError('invalid value for %s.%s: %s' % (name, key, e)) from e
    return cls(**kwargs)


def parse_config(source: Union[str, bytes, Dict[str, Any]]) -> SystemConfig:
    """Parses a JSON document (or an already decoded dict) into a fully defaulted SystemConfig."""
    if isinstance(source, (str, bytes)):
        try:
            source = json.loads(source)
        except json.JSONDecodeError as e:
            raise ConfigError('configuration is not valid JSON: %s' % e) from e
    if not isinstance(source, dict):
        raise ConfigError('configuration must be a JSON object')
    sections = {f.name: f.type for f in fields(SystemConfig)}
    unknown = sorted(set(source) - set(sections))
    if unknown:
        raise ConfigError('unknown top-level keys: %s' % ', '.join(unknown))
    return SystemConfig(**{
        name: _section(section_cls, source.get(name), name) for name, section_cls in sections.items()
    }).validate()


def load_config(path: str) -> SystemConfig:
    with open(path, 'rb') as f:
        return parse_config(f.read())


def dump_config(cfg: SystemConfig) -> str:
    return json.dumps(asdict(cfg), sort_keys=True, indent=2)


def config_hash(cfg: SystemConfig) -> str:
    return hashlib.sha256(dump_config(cfg).encode()).hexdigest()


def _generate(cfg: SystemConfig) -> TruncatedSystem:
    gen, sec, cpl = cfg.generator, cfg.sector, cfg.coupling
    b_law = None if gen.b_law is None else CouplingLaw(**gen.b_law)
    if gen.kind == 'synthetic_polynomial':
        f_law = None if gen.f_law is None else CouplingLaw(**gen.f_law)
        return generate_synthetic(sec.alpha, sec.upsilon, gen.n_modes, b_law, f_law, beta=cpl.beta,
                                  gamma=cpl.gamma, omega=sec.omega)
    if gen.kind == 'wave_perturbed':
        return generate_wave(gen.n_modes, sec.upsilon, sec.alpha, gen.b0_coeffs, b_law=b_law, beta=cpl.beta,
                             gamma=cpl.gamma, omega=sec.omega, unstable_modes=gen.unstable_modes,
                             f2_scale=gen.f2_scale, f2_q=gen.f2_q)
    tails = None if gen.tails is None else TailData(**gen.tails)
    return generate_explicit(gen.modes, SectorParams(sec.alpha, sec.upsilon, sec.omega), cpl.beta, cpl.gamma,
                             tails)


def build_system(cfg: SystemConfig) -> TruncatedSystem:
    """Generates the modal family and resolves the feedback source."""
    sys = _generate(cfg)
    fb = cfg.feedback
    if fb.source == 'given':
        if len(fb.f) != sys.n_modes:
            raise ConfigError('feedback.f has %d entries, the system has %d modes' % (len(fb.f), sys.n_modes))
        return sys.with_feedback([as_complex(v) for v in fb.f])
    if fb.source == 'designed':
        f_plus = design_feedback(sys, [as_complex(v) for v in fb.target_poles])
        f = np.array(sys.f)
        f[list(split_spectrum(sys).unstable_indices)] = f_plus
        # only finitely many coefficients change, so the tail bounds of f carry over
        tails = sys.tails
        return sys.with_feedback(f, (tails.f_l2_sq, tails.f_gamma_sq, tails.f_re_sq))
    return sys
