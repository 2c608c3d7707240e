"""Element-wise sparsification of dense square matrices."""

from .analysis import (
    BernsteinParams,
    ExperimentReport,
    MomentDiagnostics,
    bernstein_tail,
    exact_second_moment,
    lemma4_sample_size,
    measure_error,
    random_test_matrix,
    run_experiment,
    verify_zero_mean,
)
from .matrix import (
    NonConvergenceWarning,
    PowerIterationConfig,
    as_matrix,
    frobenius_norm,
    power_iteration,
    spectral_norm,
    stable_rank,
)
from .select import SelectorBank, SelectorState, one_pass_sparsify, run_select, selector_step
from .sparsifier import (
    SamplingPlan,
    SparseSketch,
    build_plan,
    sample_size,
    sparsify,
    sparsify_relative,
    threshold_zero,
)

__version__ = "0.1.0"
