"""Marked temporal point processes: Hawkes priors, exact thinning simulation,
likelihoods, and event-sequence forecasting metrics."""

__version__ = "0.1.0"

from .core import (
    ConstantBase,
    DimensionError,
    EventSequence,
    ExpDecayKernel,
    GammaBase,
    HawkesModel,
    MarkedEvent,
    OrderingError,
    ParseError,
    RayleighKernel,
    SinusoidalBase,
    ValidationError,
    ZeroKernel,
    conditional_intensity,
    eval_base,
    eval_kernel,
    intensity_upper_bound,
    kernel_sup,
    total_intensity,
)
from .datagen import (
    DatasetBundle,
    GenerationPlan,
    ModelEntry,
    PlanRow,
    PriorConfig,
    PRIOR_LIBRARY,
    desk_plan,
    generate,
    paper_plan,
    prior_config,
    read_bundle,
    sample_model,
    sample_prefactors,
    write_bundle,
)
from .likelihood import (
    FitResult,
    NormalizationState,
    PiecewiseIntensity,
    UnsupportedRegionError,
    collection_nll,
    denormalize_intensity,
    eval_piecewise,
    fit_exponential_hawkes,
    integrated_intensity_exact,
    integrated_intensity_mc,
    nll,
    normalize,
    scale_collection,
)
from .metrics import (
    MetricsReport,
    OtdCosts,
    accuracy,
    evaluate_forecasts,
    otd,
    rmse_dt,
    rmse_events,
    smape_dt,
)
from .rng import Stream, split
from .simulate import (
    DivergenceError,
    SimConfig,
    StarvationError,
    forecast,
    predict_next,
    simulate,
)
