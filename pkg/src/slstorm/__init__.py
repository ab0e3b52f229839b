"""Sparse/low-rank background removal for STORM image stacks.

A small unsupervised two-convolution network estimates the slowly varying
fluorescence background of a frame stack; subtracting it leaves the
sparse emitter signal. A classical robust-PCA solver, the median and
rolling-ball baselines, a synthetic ground-truth generator, emitter
localization, and evaluation metrics round out the pipeline.
"""

__version__ = "0.1.0"

from .core import (FlatMatrix, ImageStack, NormalizationRecord, denormalize,
                   flatten, normalize, unflatten)
from .linalg import ThinSVD, nuclear_norm, soft_threshold, svt, thin_svd_small_k
from .rpca import RpcaConfig, RpcaResult, rpca_ialm
from .slnet import (ConvLayer, DecompositionResult, Hyperparams, SLNetModel,
                    TrainReport, backward, decompose, forward, kaiming_init,
                    loss, train)
from .baselines import RollingBallConfig, median_subtract, rolling_ball, rolling_ball_stack
from .synth import BackgroundBlob, GroundTruth, SynthConfig, generate
from .localize import (Localization, LocalizationTable, detect, fit_gaussian,
                       localize_stack, render)
from .metrics import (FwhmResult, LocalizationErrorResult, SquirrelScores,
                      fwhm_profile, localization_error, sparsity, squirrel_scores)
from .io import (load_model, read_config, read_locs_csv, read_tiff, read_truth_csv,
                 save_model, write_config, write_locs_csv, write_tiff, write_truth_csv)
from .errors import (ConfigError, CsvFormatError, NumericalError, TiffError,
                     TiffFormatError, TiffUnsupportedError, WeightsChecksumError,
                     WeightsFileError, WeightsVersionError)

__all__ = [
    "BackgroundBlob", "ConfigError", "ConvLayer", "CsvFormatError",
    "DecompositionResult", "FlatMatrix", "FwhmResult", "GroundTruth",
    "Hyperparams", "ImageStack", "Localization", "LocalizationErrorResult",
    "LocalizationTable", "NormalizationRecord", "NumericalError",
    "RollingBallConfig", "RpcaConfig", "RpcaResult", "SLNetModel",
    "SquirrelScores", "SynthConfig", "ThinSVD", "TiffError", "TiffFormatError",
    "TiffUnsupportedError", "TrainReport", "WeightsChecksumError",
    "WeightsFileError", "WeightsVersionError", "backward", "decompose",
    "denormalize", "detect", "fit_gaussian", "flatten", "forward", "generate",
    "kaiming_init", "load_model", "localization_error", "localize_stack",
    "loss", "median_subtract", "normalize", "nuclear_norm", "read_config",
    "read_locs_csv", "read_tiff", "read_truth_csv", "render", "rolling_ball",
    "rolling_ball_stack", "rpca_ialm", "save_model", "soft_threshold",
    "sparsity", "squirrel_scores", "svt", "thin_svd_small_k", "train",
    "unflatten", "write_config", "write_locs_csv", "write_tiff",
    "write_truth_csv", "fwhm_profile",
]
