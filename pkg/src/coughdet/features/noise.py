"""Noise descriptors: cepstral HNR, CPP, band flatness, ZCR and chirp group delay."""

from __future__ import annotations

import numpy as np

from coughdet.features.spectral import LOG_FLOOR, SAMPLE_RATE, bin_frequencies

HNR_BANDS_HZ = (500.0, 1500.0, 2500.0, 3500.0)
FLATNESS_BANDS_HZ = ((250.0, 500.0), (500.0, 1000.0), (1000.0, 2000.0), (2000.0, 4000.0))
# Cepstral analyses need quefrencies up to 1/50 s = 320 samples, beyond the
# 256 reachable with the 512-point analysis FFT.
CEPSTRUM_FFT = 1024
QUEFRENCY_MIN = SAMPLE_RATE // 500
QUEFRENCY_MAX = SAMPLE_RATE // 50
CHIRP_RADIUS = 0.99
CHIRP_FFT = 1024
SILENCE_ENERGY = 1e-12

NOISE_NAMES = (
    "hnr_05", "hnr_15", "hnr_25", "hnr_35", "cpp",
    "flatness_0250_0500", "flatness_0500_1000", "flatness_1000_2000", "flatness_2000_4000",
    "zcr", "chirp_gd",
)


def _as_2d(x):
    x = np.asarray(x, dtype=float)
    return (x[None, :], True) if x.ndim == 1 else (x, False)


def real_cepstrum(frames: np.ndarray, n_fft: int = CEPSTRUM_FFT) -> tuple[np.ndarray, np.ndarray]:
    """Return (log10 magnitude spectrum, real cepstrum) of windowed frames."""
    mag = np.abs(np.fft.rfft(frames, n=n_fft, axis=-1))
    log_mag = np.log10(np.maximum(mag, LOG_FLOOR))
    return log_mag, np.fft.irfft(log_mag, n=n_fft, axis=-1)


def _rahmonic_bounds(ceps: np.ndarray, centre: int, half: int) -> tuple[int, int]:
    """Extent of the cepstral peak near ``centre``, bounded by the nearest local minima."""
    lo, hi = max(centre - half, 1), min(centre + half, len(ceps) // 2)
    if hi <= lo:
        return lo, lo
    seg = np.abs(ceps[lo:hi + 1])
    peak = lo + int(np.argmax(seg))
    left = peak
    while left > lo and abs(ceps[left - 1]) < abs(ceps[left]):
        left -= 1
    right = peak
    while right < hi and abs(ceps[right + 1]) < abs(ceps[right]):
        right += 1
    return left, right


def _frame_hnr(log_mag: np.ndarray, ceps: np.ndarray, n_fft: int) -> np.ndarray:
    search = ceps[QUEFRENCY_MIN:QUEFRENCY_MAX + 1]
    period = QUEFRENCY_MIN + int(np.argmax(search))

    # Comb-lifter: remove every rahmonic of the dominant period.
    liftered = ceps.copy()
    half = max(period // 2, 1)
    k = 1
    while k * period + half <= n_fft // 2:
        left, right = _rahmonic_bounds(ceps, k * period, half)
        liftered[left:right + 1] = 0.0
        liftered[n_fft - right:n_fft - left + 1] = 0.0
        k += 1
    noise = np.real(np.fft.rfft(liftered, n=n_fft))
    harmonic = log_mag - noise

    # Lower the noise floor onto the valleys between harmonics.
    spacing = n_fft / period
    f = spacing
    n_bins = len(log_mag)
    while f < n_bins - 1:
        start, stop = int(np.ceil(f - spacing)), int(round(f))
        if stop > start:
            noise[start:stop + 1] -= abs(np.min(harmonic[start:stop + 1]))
        f += spacing
    harmonic = log_mag - noise

    freqs = np.arange(n_bins) * SAMPLE_RATE / n_fft
    out = np.empty(len(HNR_BANDS_HZ))
    for i, band in enumerate(HNR_BANDS_HZ):
        mask = freqs <= band
        out[i] = 20.0 * np.mean(harmonic[mask])
    return out


def compute_hnr(frames: np.ndarray) -> np.ndarray:
    """Cepstral harmonic-to-noise ratio (dB) for bands [0, 0.5/1.5/2.5/3.5 kHz]."""
    frames, single = _as_2d(frames)
    log_mag, ceps = real_cepstrum(frames)
    out = np.zeros((frames.shape[0], len(HNR_BANDS_HZ)))
    energy = (frames ** 2).sum(axis=1)
    for i in np.flatnonzero(energy > SILENCE_ENERGY):
        out[i] = _frame_hnr(log_mag[i], ceps[i], CEPSTRUM_FFT)
    return out[0] if single else out


def compute_cpp(frames: np.ndarray) -> np.ndarray:
    """Cepstral peak prominence (dB) above a straight-line fit of the cepstrum.

    Peak search and regression both use quefrencies 1/500 s to 1/50 s.
    """
    frames, single = _as_2d(frames)
    _, ceps = real_cepstrum(frames)
    q = np.arange(QUEFRENCY_MIN, QUEFRENCY_MAX + 1)
    c_db = 20.0 * np.log10(np.maximum(np.abs(ceps[:, q]), LOG_FLOOR))
    slope, intercept = np.polyfit(q, c_db.T, 1)
    peak = np.argmax(c_db, axis=1)
    rows = np.arange(len(frames))
    cpp = c_db[rows, peak] - (slope * q[peak] + intercept)
    cpp[(frames ** 2).sum(axis=1) <= SILENCE_ENERGY] = 0.0
    return cpp[0] if single else cpp


def compute_flatness(spectrum: np.ndarray) -> np.ndarray:
    """Geometric / arithmetic mean of magnitudes in each of the four bands."""
    spectra, single = _as_2d(spectrum)
    freqs = bin_frequencies(spectra.shape[1])
    out = np.empty((spectra.shape[0], len(FLATNESS_BANDS_HZ)))
    for j, (lo, hi) in enumerate(FLATNESS_BANDS_HZ):
        band = spectra[:, (freqs >= lo) & (freqs <= hi)]
        arith = band.mean(axis=1)
        geo = np.exp(np.log(np.maximum(band, LOG_FLOOR)).mean(axis=1))
        ratio = np.divide(geo, arith, out=np.ones_like(arith), where=arith > 0)
        out[:, j] = np.clip(ratio, 0.0, 1.0)
    return out[0] if single else out


def compute_zcr(frames: np.ndarray) -> np.ndarray:
    """Sign changes between consecutive samples divided by (frame_length - 1)."""
    frames, single = _as_2d(frames)
    changes = (frames[:, 1:] * frames[:, :-1] < 0).sum(axis=1)
    zcr = changes / (frames.shape[1] - 1)
    return zcr[0] if single else zcr


def compute_chirp_group_delay(frames: np.ndarray, radius: float = CHIRP_RADIUS) -> np.ndarray:
    """Mean group delay (samples) of the z-transform on the circle |z| = radius."""
    frames, single = _as_2d(frames)
    n = np.arange(frames.shape[1])
    weighted = frames * radius ** (-n)
    x = np.fft.rfft(weighted, n=CHIRP_FFT, axis=1)
    y = np.fft.rfft(weighted * n, n=CHIRP_FFT, axis=1)
    power = np.abs(x) ** 2
    gd = (x.real * y.real + x.imag * y.imag) / np.maximum(power, LOG_FLOOR ** 2)
    out = gd.mean(axis=1)
    out[(frames ** 2).sum(axis=1) <= SILENCE_ENERGY] = 0.0
    return out[0] if single else out


def compute_noise_measures(frame: np.ndarray, spectrum: np.ndarray) -> np.ndarray:
    """All eleven noise measures, ordered as ``NOISE_NAMES``."""
    frames, single = _as_2d(frame)
    spectra, _ = _as_2d(spectrum)
    out = np.column_stack([
        compute_hnr(frames),
        compute_cpp(frames),
        compute_flatness(spectra),
        compute_zcr(frames),
        compute_chirp_group_delay(frames),
    ])
    return out[0] if single else out
