"""Energy, loudness and F0 descriptors.

F0 uses a normalised cross-correlation over an 80 ms neighbourhood centred on
the analysis frame, searched between 70 and 400 Hz. Frames whose best
normalised peak falls below the voicing threshold report f0 = 0.
"""

from __future__ import annotations

import numpy as np

from coughdet.features.spectral import LOG_FLOOR, SAMPLE_RATE, bin_frequencies, mel_energies

F0_MIN_HZ = 70.0
F0_MAX_HZ = 400.0
VOICING_THRESHOLD = 0.35
NEIGHBOURHOOD_S = 0.040
LOUDNESS_EXPONENT = 0.23
LOW_BAND_HZ = 4000.0
# Earliest lag whose peak reaches this fraction of the best one wins (octave guard).
OCTAVE_RATIO = 0.9

PROSODY_NAMES = ("energy_rms", "energy_log", "energy_teager", "energy_band_0_4k", "loudness", "f0", "voicing")

MIN_LAG = int(np.floor(SAMPLE_RATE / F0_MAX_HZ))
MAX_LAG = int(np.ceil(SAMPLE_RATE / F0_MIN_HZ))


def neighbourhoods(samples: np.ndarray, centres: np.ndarray, half_width: int) -> np.ndarray:
    """Slices ``[c - half_width, c + half_width)`` around each centre, zero-padded at the edges."""
    padded = np.concatenate([np.zeros(half_width), np.asarray(samples, dtype=float), np.zeros(half_width)])
    idx = np.asarray(centres)[:, None] + np.arange(2 * half_width)[None, :]
    return padded[idx]


def nccf(segments: np.ndarray, max_lag: int = MAX_LAG) -> np.ndarray:
    """Normalised cross-correlation for lags 0..max_lag, shape (n, max_lag + 1).

    A fixed reference window (the first ``len - max_lag`` samples) is
    correlated against the same-length window starting ``lag`` samples later.
    """
    segments = np.atleast_2d(np.asarray(segments, dtype=float))
    length = segments.shape[1]
    width = length - max_lag
    n_fft = 1 << int(np.ceil(np.log2(length + width)))
    ref = segments[:, :width]
    spec = np.fft.rfft(segments, n=n_fft, axis=1) * np.conj(np.fft.rfft(ref, n=n_fft, axis=1))
    num = np.fft.irfft(spec, n=n_fft, axis=1)[:, :max_lag + 1]
    csum = np.concatenate([np.zeros((len(segments), 1)), np.cumsum(segments ** 2, axis=1)], axis=1)
    lags = np.arange(max_lag + 1)
    e_lag = csum[:, lags + width] - csum[:, lags]
    e_ref = e_lag[:, :1]
    denom = np.sqrt(np.maximum(e_ref * e_lag, 0.0))
    return np.divide(num, denom, out=np.zeros_like(num), where=denom > LOG_FLOOR)


def _pick_period(corr: np.ndarray) -> tuple[float, float]:
    """Return (fractional lag, peak value) for one NCCF row, or (0, peak) if unvoiced."""
    lags = np.arange(MIN_LAG, MAX_LAG)
    r = corr[lags]
    is_peak = (r > corr[lags - 1]) & (r >= corr[lags + 1])
    if not is_peak.any():
        return 0.0, 0.0
    peak_lags = lags[is_peak]
    best = corr[peak_lags].max()
    if best < VOICING_THRESHOLD:
        return 0.0, float(best)
    lag = int(peak_lags[np.argmax(corr[peak_lags] >= OCTAVE_RATIO * best)])
    a, b, c = corr[lag - 1], corr[lag], corr[lag + 1]
    curvature = a - 2 * b + c
    shift = 0.5 * (a - c) / curvature if curvature < 0 else 0.0
    return lag + shift, float(b)


def estimate_f0(segments: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """F0 in Hz (0 when unvoiced) and voicing strength in [0, 1] per segment."""
    corr = nccf(segments)
    f0 = np.zeros(len(corr))
    voicing = np.zeros(len(corr))
    for i, row in enumerate(corr):
        lag, strength = _pick_period(row)
        voicing[i] = np.clip(strength, 0.0, 1.0)
        if lag > 0:
            f0[i] = SAMPLE_RATE / lag
    return f0, voicing


def energy_measures(frames: np.ndarray, spectra: np.ndarray) -> np.ndarray:
    """RMS, log energy, mean Teager energy, 0-4 kHz spectral energy, Mel loudness."""
    frames = np.atleast_2d(np.asarray(frames, dtype=float))
    spectra = np.atleast_2d(np.asarray(spectra, dtype=float))
    power = (frames ** 2).sum(axis=1)
    rms = np.sqrt(power / frames.shape[1])
    log_energy = np.log(power + LOG_FLOOR)
    teager = (frames[:, 1:-1] ** 2 - frames[:, :-2] * frames[:, 2:]).mean(axis=1)
    low = bin_frequencies(spectra.shape[1]) <= LOW_BAND_HZ
    band = (spectra[:, low] ** 2).sum(axis=1)
    loudness = (mel_energies(spectra) ** LOUDNESS_EXPONENT).sum(axis=1)
    return np.column_stack([rms, log_energy, teager, band, loudness])


def compute_prosody(frame: np.ndarray, spectrum: np.ndarray, neighbourhood: np.ndarray) -> np.ndarray:
    """Seven prosody values ordered as ``PROSODY_NAMES``.

    ``neighbourhood`` is +-40 ms of raw (unwindowed) 16 kHz audio around the
    frame centre. Inputs may be single frames (1-D) or stacks (2-D).
    """
    single = np.asarray(frame).ndim == 1
    energies = energy_measures(frame, spectrum)
    f0, voicing = estimate_f0(np.atleast_2d(neighbourhood))
    out = np.column_stack([energies, f0, voicing])
    return out[0] if single else out
