"""accperc: accessibility percolation on regular n-ary trees.

A simulation and verification toolkit for the random model in which every
non-root vertex of a regular n-ary tree of height h carries an i.i.d.
uniform label and one asks for a root-to-leaf path with strictly increasing
labels.  The package provides exact small-instance oracles, a lazy
hash-stream Monte Carlo sampler that scales to large trees, closed-form
moment computations and tail bounds, reproducible sweep experiments, and a
verification suite tying them all together.
"""

from .errors import ConfigError, QuadratureError, SizeExceededError
from .model import (
    LabelVector,
    ModelParams,
    PathAddress,
    RegimeParams,
    fork_depth,
    in_floor_region,
    in_increasing,
    in_ramp_region,
    ramp_threshold,
)
from .oracle import (
    CountReport,
    ForkSpectrum,
    LabelledTree,
    count_by_predicates,
    count_pairs_with_fork,
    count_report,
    estimate_exist_prob_bruteforce,
    exact_joint_fork_prob,
    numeric_joint_ramp_prob,
    path_count_sample,
    sample_full_tree,
    tree_size,
)
from .sampler import (
    LevelConfig,
    LevelCounts,
    TrialConfig,
    coupled_exists_batch,
    count_batch,
    exists_batch,
    level_counts_batch,
    simulate_count_capped,
    simulate_exists,
    simulate_exists_coupled,
    simulate_level_counts,
)
from .moments import (
    ExpectedPaths,
    MomentReport,
    RegimeClassification,
    chernoff_bound,
    classify_regime,
    expected_paths,
    fork_moment_upper,
    fork_sum_atanh_bound,
    level_shortfall_bound,
    moment_report,
    ordered_floors_prob,
    ordered_floors_quadrature,
    paley_zygmund_lower,
    paley_zygmund_lower_log,
    restricted_mean_lower,
    second_moment_upper,
    stirling_ratio,
)
from .stats import StreamingStats, TrialEstimate, wilson_interval
from .experiments import (
    CoupledSweep,
    SweepConfig,
    SweepRow,
    read_results,
    run_coupled_sweep,
    run_level_experiment,
    run_regime_sweep,
    run_sweep,
    write_results,
)
from .verification import CheckResult, run_verification_suite, suite_passed

__version__ = "0.1.0"
