"""Frozen column order of the 105-dimensional descriptor bank.

Changing the order or names requires bumping ``REGISTRY_VERSION``.
"""

from coughdet.features.noise import NOISE_NAMES
from coughdet.features.spectral import N_MFCC

REGISTRY_VERSION = 1

MFCC_NAMES = tuple(f"mfcc_{i}" for i in range(N_MFCC))
SHAPE_NAMES = ("spectral_centroid", "spectral_spread", "spectral_decrease", "spectral_variation", "spectral_flux")
PROSODY_FEATURES = ("f0", "loudness", "energy_rms", "energy_log", "energy_teager", "energy_band_0_4k")

BASE_NAMES = MFCC_NAMES + SHAPE_NAMES + NOISE_NAMES + PROSODY_FEATURES
DELTA_NAMES = tuple(f"d_{n}" for n in BASE_NAMES)
DELTA2_NAMES = tuple(f"dd_{n}" for n in BASE_NAMES)
ALL_NAMES = BASE_NAMES + DELTA_NAMES + DELTA2_NAMES

N_BASE = len(BASE_NAMES)
N_FEATURES = len(ALL_NAMES)

assert N_BASE == 35 and N_FEATURES == 105
