__version__ = '0.1.0'

from .core.structs import (
    AssumptionReport,
    BoundConstants,
    DecayFit,
    DecayModel,
    EquivalenceReport,
    MarginOptions,
    MarginReport,
    ModeTriple,
    RawScaling,
    ResolventScanOptions,
    SampledOperator,
    ScalingFn,
    ScanResult,
    ScanRow,
    SectorClass,
    SectorParams,
    SpectrumSplit,
    TailData,
    TauScanRow,
    Trajectory,
    TruncatedSystem,
    Verdict
)

from .core.modal import (
    audit_assumptions,
    classify_eigenvalue,
    dnorm,
    fractional_apply
)

from .core.operators import (
    apply_delta,
    apply_feedback,
    apply_input_map,
    apply_semigroup,
    delta_orbit,
    resolvent_closed_loop,
    resolvent_delta,
    resolvent_delta_batch,
    resolvent_T,
    spectral_radius_estimate,
    transfer_G,
    transfer_H
)

from .core.stability import (
    check_nonresonance,
    continuous_margin,
    design_feedback,
    discrete_margin,
    estimate_tau_star,
    exterior_minimum,
    gamma_constants,
    split_spectrum,
    verify_mode_bound
)

from .core.resolvent import (
    circle_integral,
    contour_power,
    parseval_check,
    scaled_scan,
    scaled_scan_async
)

from .core.decay import (
    equivalence_check,
    fit_decay,
    orbit_decay_fit,
    simulate_closed_loop
)

from .core.executor import (
    AsyncScanPoolExecutor,
    ScanPoolExecutor,
    SerialScanExecutor
)
