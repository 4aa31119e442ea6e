"""zetaopt: a zeta-scaled hybrid optimizer, a reference Adam baseline,
a minimal float64 MLP core, synthetic datasets with label-noise
injection, and a CLI harness that runs the two-optimizer comparison
protocol at desk scale.
"""

from .config import ConfigError, DataSpec, ExperimentConfig
from .data import (
    BatchPlan,
    Dataset,
    inject_label_noise,
    iterate_batches,
    load_csv_dataset,
    make_blobs,
    make_spirals,
    train_test_split,
)
from .harness import (
    ComparisonSummary,
    MetricsRecord,
    RunSummary,
    run_comparison,
    run_experiment,
    write_metrics_csv,
)
from .nn_core import (
    LossConfig,
    MlpConfig,
    ParamEntry,
    ParamSet,
    entropy_regularized_loss,
    finite_diff_check,
    mlp_backward,
    mlp_forward,
    mlp_init,
    softmax,
)
from .optim import (
    AdamHyperParams,
    AdamState,
    StepDiagnostics,
    ZetaHyperParams,
    ZetaState,
    adam_step,
    centralize_gradients,
    clip_gradients,
    cosine_boost,
    lr_schedule,
    s_schedule,
    update_damping,
    zeta_step_phase1,
    zeta_step_phase2,
)
from .zeta_special import ZetaConvergenceError, ZetaDomainError, ZetaEvalConfig, zeta

__version__ = "0.1.0"
