"""pipeline.py

Runs the stages build, audit, margins, tau_star, scan, simulate, fit and equivalence in order and collects the
results in a RunReport.
"""
import logging
from typing import Iterable, Optional

from rieszlab.core.decay import equivalence_check, fit_decay, simulate_closed_loop
from rieszlab.core.errors import RieszLabError, StageError
from rieszlab.core.executor import ScanExecutorBase, ScanPoolExecutor, SerialScanExecutor
from rieszlab.core.modal import audit_assumptions
from rieszlab.core.resolvent import scaled_scan
from rieszlab.core.stability import (continuous_margin, default_axis_grid, discrete_margin, estimate_tau_star,
                                     exterior_minimum)
from rieszlab.core.structs import (DecayModel, MarginOptions, ResolventScanOptions, SampledOperator, ScalingFn,
                                   TruncatedSystem)
from rieszlab.contrib.pipeline.config import SystemConfig, build_system, config_hash
from rieszlab.contrib.pipeline.generators import MODELED_SPECTRUM_NOTE, initial_state
from rieszlab.contrib.pipeline.report import RunReport, write_report


logger = logging.getLogger('rieszlab.contrib.pipeline')

STAGES = ('build', 'audit', 'margins', 'tau_star', 'scan', 'simulate', 'fit', 'equivalence')
EXTERIOR_SAMPLES = 10000


class Pipeline:
    """Holds the configuration, the generated system and the report while the stages run."""

    def __init__(self, cfg: SystemConfig, executor: Optional[ScanExecutorBase] = None):
        self.cfg = cfg
        self.report = RunReport(config_hash=config_hash(cfg), seed=cfg.output.seed)
        self.sys: Optional[TruncatedSystem] = None
        self._owns_executor = executor is None
        if executor is None:
            workers = cfg.output.workers
            executor = ScanPoolExecutor(max_workers=workers) if workers > 1 else SerialScanExecutor()
        self._executor = executor

    def close(self):
        if self._owns_executor:
            self._executor.close()

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.close()

    @property
    def _margin_options(self) -> MarginOptions:
        return MarginOptions(circle_nodes=self.cfg.sampling.circle_nodes)

    def _axis_grid(self):
        return default_axis_grid(self.sys, self.cfg.sampling.axis_points)

    def stage_build(self) -> bool:
        self.sys = build_system(self.cfg)
        self.report.label = self.sys.label
        if self.cfg.generator.kind == 'wave_perturbed':
            self.report.notes.append(MODELED_SPECTRUM_NOTE)
        return True

    def stage_audit(self) -> bool:
        self.report.assumptions = audit_assumptions(self.sys)
        return self.report.assumptions.passed

    def stage_margins(self) -> bool:
        self.report.continuous_margin = continuous_margin(self.sys, self._axis_grid())
        op = SampledOperator.from_system(self.sys, self.cfg.sampling.tau)
        margin = discrete_margin(op, sys=self.sys, opts=self._margin_options)
        margin.grids_used['exterior_minimum'] = exterior_minimum(op, EXTERIOR_SAMPLES, self.cfg.output.seed)
        margin.grids_used['exterior_samples'] = EXTERIOR_SAMPLES
        self.report.discrete_margin = margin
        return True

    def stage_tau_star(self) -> bool:
        self.report.tau_star = estimate_tau_star(
            self.sys, self.cfg.sampling.tau_grid, self.cfg.sampling.eps_d_floor, opts=self._margin_options,
            axis_grid=self._axis_grid(), executor=self._executor)
        return True

    def _loop_certified(self) -> bool:
        margin = self.report.discrete_margin
        return margin is not None and margin.eps_d > 0 and margin.exterior_zeros == 0

    def _x0(self):
        return initial_state(self.sys, self.cfg.simulation.delta, self.cfg.simulation.epsilon)

    def _fit_window(self, t_last: float):
        window = self.cfg.simulation.fit_window
        if window is None:
            return None
        return window[0], min(window[1], float(t_last))

    def stage_scan(self) -> bool:
        if not self._loop_certified():
            self.report.notes.append('resolvent scan skipped: discrete margin not certified at tau=%r'
                                     % self.cfg.sampling.tau)
            return True
        scans = self.cfg.scans
        opts = ResolventScanOptions(r_count=scans.r_count, nodes=scans.nodes, max_nodes=scans.max_nodes,
                                    tolerance=scans.tolerance)
        op = SampledOperator.from_system(self.sys, self.cfg.sampling.tau)
        self.report.scan = scaled_scan(op, self._x0(), ScalingFn(scans.delta), adjoint=scans.adjoint, opts=opts,
                                       executor=self._executor)
        return True

    def stage_simulate(self) -> bool:
        sim = self.cfg.simulation
        self.report.trajectory = simulate_closed_loop(self.sys, self.cfg.sampling.tau, self._x0(), sim.t_end,
                                                      sim.substeps, delta=sim.delta, state_stride=sim.state_stride)
        return True

    def stage_fit(self) -> bool:
        if self.report.trajectory is None:
            self.report.notes.append('decay fits skipped: no trajectory was simulated')
            return True
        primary = DecayModel(self.cfg.simulation.model)
        models = [primary] + [m for m in DecayModel if m is not primary]
        self.report.fits = [fit_decay(self.report.trajectory, m, self.cfg.simulation.window_fraction,
                                      window=self._fit_window(self.report.trajectory.times[-1])) for m in models]
        return True

    def stage_equivalence(self) -> bool:
        sim, tau = self.cfg.simulation, self.cfg.sampling.tau
        steps = int(sim.t_end / tau)
        self.report.equivalence = equivalence_check(self.sys, tau, self._x0(), steps, substeps=sim.substeps,
                                                    model=DecayModel(sim.model),
                                                    window_fraction=sim.window_fraction,
                                                    window=self._fit_window(steps * tau))
        return True

    def run(self, stages: Iterable[str] = STAGES) -> RunReport:
        """Runs the requested stages in canonical order. A stage returning False stops the run."""
        requested = set(stages)
        for stage in STAGES:
            if stage != 'build' and stage not in requested:
                continue
            logger.info('RunningStage stage=%s' % stage)
            try:
                proceed = getattr(self, 'stage_' + stage)()
            except RieszLabError as e:
                self.report.stopped_at = stage
                self.report.error = str(e)
                logger.error('StageFailed stage=%s' % stage, exc_info=e)
                raise StageError(stage, e) from e
            if not proceed:
                self.report.stopped_at = stage
                logger.warning('PipelineStopped stage=%s' % stage)
                break
        return self.report


def run_pipeline(cfg: SystemConfig, stages: Iterable[str] = STAGES, *, out: Optional[str] = None,
                 executor: Optional[ScanExecutorBase] = None) -> RunReport:
    """Runs the pipeline and writes the report to out (or the configured output directory) when one is set.

    A failing stage raises StageError after the partial report has been written.
    """
    directory = out or cfg.output.directory
    with Pipeline(cfg, executor) as pipeline:
        try:
            report = pipeline.run(stages)
        finally:
            if directory:
                write_report(pipeline.report, directory)
    return report
