"""gearlens: edge-filter bank plus a retrained softmax head for gear inspection."""

from .classifier import (
    CLASS_NAMES,
    Probabilities,
    SoftmaxHead,
    TrainConfig,
    TrainingTrace,
    classify,
    evaluate,
    load_model,
    predict,
    save_model,
    train,
)
from .dataset import (
    DatasetSplit,
    Label,
    LabeledImage,
    SplitRatios,
    ingest_directory,
    read_manifest,
    split_dataset,
    write_manifest,
)
from .features import ExtractorConfig, FeatureVector, extract_features
from .filters import (
    BorderPolicy,
    GaussianSpec,
    IntensityMapping,
    Kernel,
    ResponsePlane,
    apply_filter_bank,
    convolve,
    gaussian_blur,
    make_gaussian_kernels,
    named_kernel,
    response_to_gray,
)
from .imagecore import GrayImage, RgbImage, load_pnm, rgb_to_gray, save_pnm
from .inspection import Decision, InspectionReport, format_report, inspect
from .synthgear import Crack, GearSpec, MissingTooth, generate_dataset, render_gear

__all__ = [
    "BorderPolicy",
    "CLASS_NAMES",
    "Crack",
    "DatasetSplit",
    "Decision",
    "ExtractorConfig",
    "FeatureVector",
    "GaussianSpec",
    "GearSpec",
    "GrayImage",
    "InspectionReport",
    "IntensityMapping",
    "Kernel",
    "Label",
    "LabeledImage",
    "MissingTooth",
    "Probabilities",
    "ResponsePlane",
    "RgbImage",
    "SoftmaxHead",
    "SplitRatios",
    "TrainConfig",
    "TrainingTrace",
    "apply_filter_bank",
    "classify",
    "convolve",
    "evaluate",
    "extract_features",
    "format_report",
    "gaussian_blur",
    "generate_dataset",
    "ingest_directory",
    "inspect",
    "load_model",
    "load_pnm",
    "make_gaussian_kernels",
    "named_kernel",
    "predict",
    "read_manifest",
    "render_gear",
    "response_to_gray",
    "rgb_to_gray",
    "save_model",
    "save_pnm",
    "split_dataset",
    "train",
    "write_manifest",
]
