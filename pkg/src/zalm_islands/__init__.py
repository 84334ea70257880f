"""Islands-based ZALM entanglement source: metrics, sampling, verification.

The package has four layers plus a CLI:

- ``model``: shared parameter and herald vocabulary
- ``analytics``: closed-form metrics (heralding probabilities, delivered
  Bell projections, fidelity/fraction/purity, rates, solvers)
- ``fock_oracle``: independent truncated-Fock-space rebuild of the same
  physics, used to verify every closed form
- ``montecarlo``: pulse-level sampler for the heralding layer
- ``sweeps`` / ``cli``: deterministic CSV tables and the command line
"""

__version__ = "0.1.0"

from .model import (
    BellClass,
    BellDiagonal,
    CutoffTooSmallError,
    DegenerateStateError,
    HeraldEvent,
    HeraldMode,
    HeraldPattern,
    HeraldTruth,
    MetricBundle,
    ModeNotFoundError,
    ParameterValidationError,
    Sign,
    SourceParams,
    UnachievableTargetError,
    ZalmError,
    classify_herald,
    validate_params,
)
from .analytics import (
    GaussianBlocks,
    bell_diagonal_state,
    bose_einstein_pmf,
    bsm_bell_fraction,
    bsm_bell_singlet_prob,
    bsm_loadable_prob,
    build_gaussian_blocks,
    chf_conditional_signal,
    chf_delivered_signal,
    herald_any_prob,
    herald_prob_island,
    islands_required,
    metric_bundle,
    pair_rate,
    prop_bell_probs,
    prop_bell_total,
    prop_loadable_prob,
    purity,
    solve_gain,
    true_herald_prob,
)
from .fock_oracle import (
    BellOracleMetrics,
    FockDensity,
    FockKet,
    PolarizationBlock,
    apply_beam_splitter_5050,
    apply_loss,
    bell_metrics,
    build_polarization_block,
    build_tmsv,
    chf_anti_normal,
    conditional_signal_state,
    pnr_probs,
    propagate_signals,
    thermal_state,
)
from .montecarlo import (
    DetectorCounts,
    MCEstimate,
    SelectionPolicy,
    enumerate_heralds,
    estimate_pair_rate,
    estimate_true_herald_prob,
    sample_pulse,
    select_herald,
)
from .sweeps import (
    FIGURE_IDS,
    FigureTable,
    SweepSpec,
    custom_table,
    figure_table,
    write_all_figures,
    write_table,
)

__all__ = [name for name in dir() if not name.startswith("_")]
