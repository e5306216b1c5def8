"""cli.py

Command line surface. Every command returns an exit code: 0 when the certificates it computes pass, 2 when one
of them fails and 1 on any error.
"""
import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from typing import List, Optional, Sequence

from rieszlab.core.decay import fit_decay
from rieszlab.core.errors import RieszLabError, UsageError
from rieszlab.core.structs import DecayModel
from rieszlab.contrib.pipeline.config import (CouplingConfig, FeedbackConfig, GeneratorConfig, SamplingConfig,
                                              ScanConfig, SectorConfig, SimulationConfig, SystemConfig, load_config)
from rieszlab.contrib.pipeline.pipeline import run_pipeline
from rieszlab.contrib.pipeline.report import (FITS_FILE, RecordFactory, RunReport, dump_report,
                                              read_trajectory_csv, write_fits_csv, write_report)


logger = logging.getLogger('rieszlab.contrib.pipeline')

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_FAILED = 2


def parse_tau_grid(text: str) -> List[float]:
    """'a:b:n' is n equally spaced values from a to b; a comma separated list is taken as is."""
    try:
        if ':' in text:
            start, stop, count = text.split(':')
            count = int(count)
            if count < 1:
                raise ValueError('count must be positive')
            if count == 1:
                return [float(start)]
            step = (float(stop) - float(start)) / (count - 1)
            return [float(start) + k * step for k in range(count)]
        return [float(v) for v in text.split(',')]
    except ValueError as e:
        raise argparse.ArgumentTypeError('invalid tau grid %r: %s' % (text, e))


def wave_demo_config(pairs: int = 100) -> SystemConfig:
    """Damped wave stand-in with two unstable modes stabilised by pole placement on the finite part."""
    return SystemConfig(
        generator=GeneratorConfig(kind='wave_perturbed', n_modes=pairs, b_law={'amplitude': 1.0, 'q': 2.5},
                                  unstable_modes=[[[0.5, 0.0], [1.0, 0.0]], [[1.0, 0.0], [1.0, 0.0]]]),
        sector=SectorConfig(alpha=2.0, upsilon=1.0, omega=1.0),
        coupling=CouplingConfig(beta=1.0, gamma=1.0),
        feedback=FeedbackConfig(source='designed', target_poles=[[-1.0, 0.0], [-2.0, 0.0]]),
        sampling=SamplingConfig(tau=0.1, tau_grid=[0.05 * k for k in range(1, 21)]),
        simulation=SimulationConfig(t_end=1e4, substeps=1, delta=1.0, model='powerlog', fit_window=[1e2, 1e4]),
        scans=ScanConfig(delta=0.5)
    ).validate()


def _override(cfg: SystemConfig, args: argparse.Namespace) -> SystemConfig:
    """Applies command line flags on top of the configuration file."""
    sampling, simulation, scans, output = cfg.sampling, cfg.simulation, cfg.scans, cfg.output
    if getattr(args, 'tau', None) is not None:
        sampling = replace(sampling, tau=args.tau)
    if getattr(args, 'tau_grid', None) is not None:
        sampling = replace(sampling, tau_grid=args.tau_grid)
    if getattr(args, 'tend', None) is not None:
        simulation = replace(simulation, t_end=args.tend)
    if getattr(args, 'substeps', None) is not None:
        simulation = replace(simulation, substeps=args.substeps)
    if getattr(args, 'delta', None) is not None:
        scans = replace(scans, delta=args.delta)
    if args.workers is not None:
        output = replace(output, workers=args.workers)
    return replace(cfg, sampling=sampling, simulation=simulation, scans=scans, output=output).validate()


def _emit(report: RunReport, out: Optional[str]):
    if out is None:
        print(dump_report(report))


def _finish(report: RunReport, passed: bool, out: Optional[str]) -> int:
    _emit(report, out)
    logger.info('CommandFinished label=%r passed=%s stopped_at=%r' % (report.label, passed, report.stopped_at))
    return EXIT_OK if passed else EXIT_FAILED


def cmd_audit(cfg: SystemConfig, args) -> int:
    report = run_pipeline(cfg, ('audit', ), out=args.out)
    return _finish(report, report.assumptions.passed, args.out)


def cmd_margins(cfg: SystemConfig, args) -> int:
    report = run_pipeline(cfg, ('audit', 'margins', 'tau_star'), out=args.out)
    return _finish(report, report.certified, args.out)


def cmd_tau_star(cfg: SystemConfig, args) -> int:
    report = run_pipeline(cfg, ('audit', 'tau_star'), out=args.out)
    passed = report.stopped_at is None and report.tau_star.tau_star_estimate is not None
    return _finish(report, passed, args.out)


def cmd_simulate(cfg: SystemConfig, args) -> int:
    report = run_pipeline(cfg, ('audit', 'simulate', 'fit'), out=args.out)
    return _finish(report, report.stopped_at is None, args.out)


def cmd_resolvent_scan(cfg: SystemConfig, args) -> int:
    report = run_pipeline(cfg, ('audit', 'margins', 'scan'), out=args.out)
    passed = report.stopped_at is None and report.scan is not None and report.scan.vanishing
    return _finish(report, passed, args.out)


def cmd_fit(args) -> int:
    traj = read_trajectory_csv(args.trajectory)
    fit = fit_decay(traj, DecayModel(args.model), args.window_fraction)
    if args.out is not None:
        os.makedirs(args.out, exist_ok=True)
        write_fits_csv(os.path.join(args.out, FITS_FILE), [fit])
    print(json.dumps(RecordFactory.record(fit), sort_keys=True, indent=2))
    return EXIT_OK if fit.decaying else EXIT_FAILED


def cmd_wave_demo(args) -> int:
    """tau* on the default grid first, then the full run at half of it."""
    cfg = wave_demo_config(args.pairs)
    if args.workers is not None:
        cfg = replace(cfg, output=replace(cfg.output, workers=args.workers))
    preliminary = run_pipeline(cfg, ('audit', 'tau_star'))
    tau_star = None if preliminary.tau_star is None else preliminary.tau_star.tau_star_estimate
    if tau_star is None:
        logger.warning('WaveDemoNoTauStar stopped_at=%r' % (preliminary.stopped_at, ))
        return _finish(preliminary, False, None)
    cfg = replace(cfg, sampling=replace(cfg.sampling, tau=tau_star / 2.0))
    report = run_pipeline(cfg)
    report.notes.append('sampling period set to half of the estimated tau*=%r' % tau_star)
    if args.out is not None:
        write_report(report, args.out)
    return _finish(report, report.certified, args.out)


class CommandParser(argparse.ArgumentParser):
    """Raises UsageError on a bad command line so that it maps to EXIT_ERROR rather than argparse's status 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError('%s: %s' % (self.prog, message))


def build_parser() -> argparse.ArgumentParser:
    parser = CommandParser(prog='rieszlab', description='Sampled-data stability lab for modal systems.')
    parser.add_argument('--out', default=None, help='directory for the report and CSV tables')
    parser.add_argument('--workers', type=int, default=None, help='worker threads for tau and r scans')
    commands = parser.add_subparsers(dest='command', required=True)

    audit = commands.add_parser('audit', help='check the spectral and coupling assumptions')
    audit.add_argument('config')

    margins = commands.add_parser('margins', help='continuous and discrete margins over a tau grid')
    margins.add_argument('config')
    margins.add_argument('--tau-grid', type=parse_tau_grid, default=None)
    margins.add_argument('--tau', type=float, default=None)

    tau_star = commands.add_parser('tau-star', help='estimate the largest certified sampling period')
    tau_star.add_argument('config')
    tau_star.add_argument('--tau-grid', type=parse_tau_grid, default=None)

    simulate = commands.add_parser('simulate', help='simulate the sampled-data loop and fit decay laws')
    simulate.add_argument('config')
    simulate.add_argument('--tau', type=float, default=None)
    simulate.add_argument('--tend', type=float, default=None)
    simulate.add_argument('--substeps', type=int, default=None)

    scan = commands.add_parser('resolvent-scan', help='scaled resolvent circle integrals as r decreases to 1')
    scan.add_argument('config')
    scan.add_argument('--tau', type=float, default=None)
    scan.add_argument('--delta', type=float, default=None)

    fit = commands.add_parser('fit', help='fit a decay law to a trajectory table')
    fit.add_argument('trajectory')
    fit.add_argument('--model', choices=[m.value for m in DecayModel], default=DecayModel.PURE_POWER.value)
    fit.add_argument('--window-fraction', type=float, default=0.5)

    wave = commands.add_parser('wave-demo', help='end-to-end run on the damped wave family')
    wave.add_argument('--pairs', type=int, default=100)
    return parser


COMMANDS = {
    'audit': cmd_audit,
    'margins': cmd_margins,
    'tau-star': cmd_tau_star,
    'simulate': cmd_simulate,
    'resolvent-scan': cmd_resolvent_scan,
}


def main(argv: Optional[Sequence[str]] = None, *, default_out: Optional[str] = None,
         default_workers: Optional[int] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        logger.error('UsageError %s' % (e, ))
        return EXIT_ERROR
    if args.out is None:
        args.out = default_out
    if args.workers is None:
        args.workers = default_workers
    try:
        if args.command == 'fit':
            return cmd_fit(args)
        if args.command == 'wave-demo':
            return cmd_wave_demo(args)
        cfg = _override(load_config(args.config), args)
        return COMMANDS[args.command](cfg, args)
    except (RieszLabError, OSError, ValueError) as e:
        logger.error('CommandFailed command=%s' % args.command, exc_info=e)
        return EXIT_ERROR
