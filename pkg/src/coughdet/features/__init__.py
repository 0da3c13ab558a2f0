"""Per-frame descriptor bank: spectral, noise and prosody features plus derivatives."""

from coughdet.features.extract import (
    append_derivatives,
    base_features,
    delta,
    extract_feature_matrix,
    extract_from_frames,
)
from coughdet.features.matrix import FeatureMatrix, FeatureFormatError, concat, read_csv, read_fmx, write_csv, write_fmx
from coughdet.features.noise import compute_noise_measures
from coughdet.features.prosody import compute_prosody
from coughdet.features.registry import ALL_NAMES, BASE_NAMES, N_FEATURES, REGISTRY_VERSION
from coughdet.features.spectral import compute_mfcc, compute_spectral_shape

__all__ = [
    "ALL_NAMES", "BASE_NAMES", "N_FEATURES", "REGISTRY_VERSION",
    "FeatureMatrix", "FeatureFormatError", "concat", "read_csv", "read_fmx", "write_csv", "write_fmx",
    "append_derivatives", "base_features", "delta", "extract_feature_matrix", "extract_from_frames",
    "compute_mfcc", "compute_spectral_shape", "compute_noise_measures", "compute_prosody",
]
