"""Flow-guided nanodevice localization toolkit."""

from ._flowloc import (
    EvalDataset,
    Hyperparams,
    Profile,
    ProfileSet,
    RawDataset,
    SimulationConfig,
    TrainedModel,
    ValidationError,
    VascularGraph,
    __version__,
    checkpoint_from_json,
    checkpoint_to_json,
    estimate_visit_probabilities,
    featurize,
    fit_gmm,
    generate_benchmark,
    point_error,
    predict_region,
    radius_scale,
    simulate,
    train,
    transform_dataset,
)

__all__ = [
    "EvalDataset",
    "Hyperparams",
    "Profile",
    "ProfileSet",
    "RawDataset",
    "SimulationConfig",
    "TrainedModel",
    "ValidationError",
    "VascularGraph",
    "__version__",
    "checkpoint_from_json",
    "checkpoint_to_json",
    "estimate_visit_probabilities",
    "featurize",
    "fit_gmm",
    "generate_benchmark",
    "point_error",
    "predict_region",
    "radius_scale",
    "simulate",
    "train",
    "transform_dataset",
]
