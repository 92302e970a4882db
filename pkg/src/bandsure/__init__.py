"""Banded covariance estimation with Sure-tuned bandwidth selection."""

from ._accel import get_backend, set_backend
from .bandwidth import (
    SelectionResult,
    SureConstants,
    cv_select,
    select,
    select_sure,
    select_taper,
    sure_constants,
    sure_f,
    sure_op,
)
from .datagen import RngSpec, make_rng, mvn_sample, standard_normals
from .estimators import (
    PopulationModel,
    banding_estimator,
    power_law_sigma,
    sample_cov,
    tapering_estimator,
)
from .harness import ScenarioSpec, SimulationReport, emit_report, read_report, run_scenario
from .matcore import (
    NotPositiveDefiniteError,
    OpNormConvergenceError,
    SymMatrix,
    band,
    block,
    block_compress,
    cholesky,
    frob_norm,
    max_abs_row_sum,
    op_norm,
)

__version__ = "0.1.0"
