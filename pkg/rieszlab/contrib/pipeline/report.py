"""report.py

RunReport and its serialization: one canonical JSON report plus CSV tables for the margin curve, the resolvent
scan, the trajectory and the decay fits.
"""
import csv
import enum
import json
import logging
import math
import os
import platform
from dataclasses import dataclass, field, fields, is_dataclass
from typing import Any, Dict, List, Optional

import numpy as np
import scipy

import rieszlab
from rieszlab.core.structs import (AssumptionReport, DecayFit, EquivalenceReport, MarginReport, ScanResult,
                                   Trajectory)


logger = logging.getLogger('rieszlab.contrib.pipeline.report')

REPORT_FILE = 'report.json'
MARGINS_FILE = 'margins.csv'
SCAN_FILE = 'scan.csv'
TRAJECTORY_FILE = 'trajectory.csv'
FITS_FILE = 'fits.csv'


def versions() -> Dict[str, str]:
    return {
        'rieszlab': rieszlab.__version__,
        'numpy': np.__version__,
        'scipy': scipy.__version__,
        'python': platform.python_version(),
    }


@dataclass
class RunReport:
    config_hash: str
    seed: int
    label: str = ''
    versions: Dict[str, str] = field(default_factory=versions)
    assumptions: Optional[AssumptionReport] = None
    continuous_margin: Optional[MarginReport] = None
    discrete_margin: Optional[MarginReport] = None
    tau_star: Optional[MarginReport] = None
    scan: Optional[ScanResult] = None
    trajectory: Optional[Trajectory] = None
    fits: List[DecayFit] = field(default_factory=list)
    equivalence: Optional[EquivalenceReport] = None
    stopped_at: Optional[str] = None
    error: Optional[str] = None
    notes: List[str] = field(default_factory=list)

    @property
    def certified(self) -> bool:
        """True when no stage stopped the run and every certificate that was computed passed."""
        if self.stopped_at is not None:
            return False
        checks = []
        if self.assumptions is not None:
            checks.append(self.assumptions.passed)
        if self.continuous_margin is not None:
            checks.append(self.continuous_margin.eps_c > 0)
        if self.discrete_margin is not None:
            checks.append(self.discrete_margin.eps_d > 0 and self.discrete_margin.exterior_zeros == 0)
        if self.tau_star is not None:
            checks.append(self.tau_star.tau_star_estimate is not None)
        return all(checks)


class RecordFactory:
    """Converts result objects into plain JSON-compatible records."""

    @staticmethod
    def number(value: float) -> Any:
        value = float(value)
        if math.isfinite(value):
            return value
        return 'nan' if math.isnan(value) else ('inf' if value > 0 else '-inf')

    @staticmethod
    def record(obj: Any) -> Any:
        if obj is None or isinstance(obj, (bool, str)):
            return obj
        if isinstance(obj, enum.Enum):
            return obj.value
        if isinstance(obj, (int, np.integer)):
            return int(obj)
        if isinstance(obj, (float, np.floating)):
            return RecordFactory.number(obj)
        if isinstance(obj, (complex, np.complexfloating)):
            return [RecordFactory.number(obj.real), RecordFactory.number(obj.imag)]
        if isinstance(obj, np.ndarray):
            return [RecordFactory.record(v) for v in obj.tolist()]
        if hasattr(obj, '_asdict'):
            return {k: RecordFactory.record(v) for k, v in obj._asdict().items()}
        if is_dataclass(obj):
            return {f.name: RecordFactory.record(getattr(obj, f.name)) for f in fields(obj)}
        if isinstance(obj, dict):
            return {str(k): RecordFactory.record(v) for k, v in obj.items()}
        if isinstance(obj, (list, tuple)):
            return [RecordFactory.record(v) for v in obj]
        raise TypeError('cannot serialize %r' % (type(obj).__name__, ))

    @staticmethod
    def report(report: RunReport) -> Dict[str, Any]:
        # the trajectory goes to its own table
        record = {f.name: RecordFactory.record(getattr(report, f.name)) for f in fields(report)
                  if f.name != 'trajectory'}
        record['certified'] = report.certified
        if report.trajectory is not None:
            record['trajectory_summary'] = {
                'points': int(report.trajectory.times.shape[0]),
                't_end': RecordFactory.number(report.trajectory.times[-1]),
                'final_norm': RecordFactory.number(report.trajectory.norms[-1]),
                'x0_delta_class': report.trajectory.x0_delta_class,
                'within_hypotheses': report.trajectory.within_hypotheses,
                'tau': report.trajectory.tau,
            }
        return record


def dump_report(report: RunReport) -> str:
    return json.dumps(RecordFactory.report(report), sort_keys=True, indent=2)


def _write_rows(path: str, header: List[str], rows):
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) if isinstance(v, float) else v for v in row])


def write_margins_csv(path: str, margin: MarginReport):
    nodes = margin.grids_used.get('circle_nodes')
    _write_rows(path, ['tau', 'eps_d', 'nonresonant', 'exterior_zeros', 'passed', 'circle_nodes'], (
        (row.tau, row.eps_d, row.nonresonant, row.exterior_zeros, row.passed, nodes) for row in margin.curve))


def write_scan_csv(path: str, scan: ScanResult):
    delta = scan.scale.delta
    _write_rows(path, ['r', 'raw', 'scaled', 'nodes', 'adjoint', 'scaling', 'delta'], (
        (row.r, row.raw_integral, row.scaled_value, row.nodes, row.adjoint, scan.scale.kind.value, delta)
        for row in scan.rows))


def write_trajectory_csv(path: str, traj: Trajectory):
    _write_rows(path, ['t', 'norm', 'tau'], ((float(t), float(n), traj.tau) for t, n in zip(traj.times, traj.norms)))


def write_fits_csv(path: str, fits: List[DecayFit]):
    _write_rows(path, ['model', 'exponent', 'amplitude', 'residual', 't_lo', 't_hi', 'points', 'decaying'], (
        (fit.model.value, fit.exponent, fit.amplitude, fit.rms_residual, fit.fit_window[0], fit.fit_window[1],
         fit.points, fit.decaying) for fit in fits))


def read_trajectory_csv(path: str) -> Trajectory:
    with open(path, newline='') as f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None or not {'t', 'norm'} <= set(reader.fieldnames):
            raise ValueError('%s lacks the t and norm columns' % path)
        rows = list(reader)
    tau = rows[0].get('tau') if rows else None
    return Trajectory(
        times=np.array([float(r['t']) for r in rows]),
        norms=np.array([float(r['norm']) for r in rows]),
        tau=float(tau) if tau not in (None, '', 'None') else None
    )


def write_report(report: RunReport, directory: str) -> List[str]:
    """Writes the report and every table it has data for. Returns the written paths."""
    os.makedirs(directory, exist_ok=True)
    written = []

    def target(name):
        path = os.path.join(directory, name)
        written.append(path)
        return path

    with open(target(REPORT_FILE), 'w') as f:
        f.write(dump_report(report))
    if report.tau_star is not None and report.tau_star.curve:
        write_margins_csv(target(MARGINS_FILE), report.tau_star)
    if report.scan is not None:
        write_scan_csv(target(SCAN_FILE), report.scan)
    if report.trajectory is not None:
        write_trajectory_csv(target(TRAJECTORY_FILE), report.trajectory)
    if report.fits:
        write_fits_csv(target(FITS_FILE), report.fits)
    logger.info('WroteReport directory=%r files=%d' % (directory, len(written)))
    return written
