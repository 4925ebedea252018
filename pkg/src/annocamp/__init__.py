"""Budget-optimal planning, simulation and evaluation of multi-label
video annotation campaigns."""

from .costmodel import (
    DEFAULT_TIME_MODEL,
    HitBudget,
    TimeModel,
    TimingObservation,
    campaign_cost,
    fit_time_model,
    iteration_time,
    scale_base_for_duration,
    task_time,
    videos_per_hit,
)
from .evaluate import (
    LabelMatrix,
    Metrics,
    TemporalSegment,
    agreement_rate,
    aggregate,
    analytic_union,
    expected_recall,
    metrics,
    recall_vs_duration,
    temporal_iou,
    truth_matrix,
)
from .planner import BudgetConstraint, Plan, enumerate_plans, marginal_value, optimize
from .taxonomy import (
    Label,
    QuestionGroup,
    SubsetPlan,
    Taxonomy,
    expand_answer,
    load_taxonomy,
    partition_questions,
    singleton_taxonomy,
)
from .workersim import (
    DEFAULT_ANCHORS,
    AccuracyAnchor,
    AnnotationEvent,
    ModifierSet,
    VideoTruth,
    Worker,
    WorkerBehavior,
    apply_modifiers,
    calibrate,
    default_behavior,
    fit_hard_mixture,
    make_random_truth,
    sample_worker_pool,
    simulate_task,
)

__version__ = "0.1.0"
