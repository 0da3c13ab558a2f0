"""Spectral-content descriptors: MFCCs and spectral shape.

Every function accepts a single magnitude spectrum (1-D) or a stack of them
(2-D, one row per frame) and returns matching leading dimensions.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.fft import dct

SAMPLE_RATE = 16000
N_MEL = 26
N_MFCC = 13
LOG_FLOOR = 1e-10


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=float) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=float) / 2595.0) - 1.0)


def bin_frequencies(n_bins: int, sample_rate: int = SAMPLE_RATE) -> np.ndarray:
    """Centre frequency (Hz) of each one-sided FFT bin."""
    fft_size = 2 * (n_bins - 1)
    return np.arange(n_bins) * sample_rate / fft_size


@lru_cache(maxsize=8)
def mel_filterbank(n_bins: int, n_filters: int = N_MEL, sample_rate: int = SAMPLE_RATE,
                   fmin: float = 0.0, fmax: float = 8000.0) -> np.ndarray:
    """Triangular filters on the HTK Mel scale, shape (n_filters, n_bins).

    Triangles are evaluated at the exact bin frequencies (peak height 1, no
    area normalisation).
    """
    edges = mel_to_hz(np.linspace(hz_to_mel(fmin), hz_to_mel(fmax), n_filters + 2))
    freqs = bin_frequencies(n_bins, sample_rate)
    lower, centre, upper = edges[:-2, None], edges[1:-1, None], edges[2:, None]
    rising = (freqs[None, :] - lower) / (centre - lower)
    falling = (upper - freqs[None, :]) / (upper - centre)
    fb = np.maximum(0.0, np.minimum(rising, falling))
    fb.flags.writeable = False
    return fb


def mel_energies(spectrum: np.ndarray) -> np.ndarray:
    """Power (squared magnitude) collected by each Mel filter."""
    spectrum = np.asarray(spectrum, dtype=float)
    fb = mel_filterbank(spectrum.shape[-1])
    return (spectrum ** 2) @ fb.T


def compute_mfcc(spectrum: np.ndarray) -> np.ndarray:
    """13 cepstral coefficients c0..c12 (c0 included).

    Log Mel energies use a floor of 1e-10, then an orthonormal DCT-II.
    """
    log_e = np.log(np.maximum(mel_energies(spectrum), LOG_FLOOR))
    return dct(log_e, type=2, norm="ortho", axis=-1)[..., :N_MFCC]


def _normalised(a: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(a, axis=-1, keepdims=True)
    return np.divide(a, norm, out=np.zeros_like(a), where=norm > 0)


def compute_spectral_shape(current: np.ndarray, previous: np.ndarray | None = None) -> np.ndarray:
    """Centroid, spread, decrease, variation and flux of a magnitude spectrum.

    Args:
        current: magnitude spectrum, 1-D or (n_frames, n_bins).
        previous: spectrum of the preceding frame, same shape as ``current``,
            or None for a first frame (variation and flux are then 0).

    Returns:
        Array with trailing dimension 5, in the order above. Centroid and
        spread are in Hz; flux is the Euclidean distance between the two
        spectra after each is scaled to unit norm.
    """
    a = np.asarray(current, dtype=float)
    freqs = bin_frequencies(a.shape[-1])
    total = a.sum(axis=-1)
    safe = np.where(total > 0, total, 1.0)

    centroid = np.where(total > 0, (a * freqs).sum(axis=-1) / safe, 0.0)
    dev = freqs - centroid[..., None]
    spread = np.where(total > 0, np.sqrt((a * dev ** 2).sum(axis=-1) / safe), 0.0)

    k = np.arange(1, a.shape[-1])
    upper = a[..., 1:].sum(axis=-1)
    num = ((a[..., 1:] - a[..., :1]) / k).sum(axis=-1)
    decrease = np.where(upper > 0, num / np.where(upper > 0, upper, 1.0), 0.0)

    if previous is None:
        variation = np.zeros_like(centroid)
        flux = np.zeros_like(centroid)
    else:
        b = np.asarray(previous, dtype=float)
        ua, ub = _normalised(a), _normalised(b)
        both = (np.linalg.norm(a, axis=-1) > 0) & (np.linalg.norm(b, axis=-1) > 0)
        variation = np.where(both, 1.0 - (ua * ub).sum(axis=-1), 0.0)
        flux = np.linalg.norm(ua - ub, axis=-1)
    return np.stack([centroid, spread, decrease, variation, flux], axis=-1)


def spectral_shape_sequence(spectra: np.ndarray) -> np.ndarray:
    """Spectral shape for consecutive frames; the first frame has no predecessor."""
    spectra = np.asarray(spectra, dtype=float)
    previous = np.vstack([spectra[:1], spectra[:-1]])
    out = compute_spectral_shape(spectra, previous)
    out[0, 3:] = 0.0
    return out
