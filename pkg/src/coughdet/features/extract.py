"""Assemble the 35 base descriptors per frame and append their derivatives."""

from __future__ import annotations

import numpy as np

from coughdet.features.matrix import FeatureMatrix
from coughdet.features.noise import compute_noise_measures
from coughdet.features.prosody import NEIGHBOURHOOD_S, estimate_f0, energy_measures, neighbourhoods
from coughdet.features.registry import ALL_NAMES, BASE_NAMES, N_BASE
from coughdet.features.spectral import compute_mfcc, spectral_shape_sequence
from coughdet.frontend import AudioBuffer, FrameSequence, frame_signal, magnitude_spectrum, resample_to_16k
from coughdet.labels import LabelError, LabelTrack

CHUNK = 2048


def base_features(frames: FrameSequence, samples: np.ndarray) -> np.ndarray:
    """Base descriptor block, shape (n_frames, 35), columns in registry order.

    ``samples`` is the 16 kHz signal the frames were cut from; F0 reads a
    +-40 ms neighbourhood of it around every frame centre.
    """
    if frames.spectra is None:
        magnitude_spectrum(frames)
    x, spectra = frames.frames, frames.spectra
    mfcc = compute_mfcc(spectra)
    shape = spectral_shape_sequence(spectra)
    noise = compute_noise_measures(x, spectra)
    energy = energy_measures(x, spectra)  # rms, log, teager, band, loudness

    half = int(round(NEIGHBOURHOOD_S * frames.sample_rate))
    centres = np.arange(len(frames)) * frames.hop + frames.frame_length // 2
    f0 = np.empty(len(frames))
    for start in range(0, len(frames), CHUNK):
        seg = neighbourhoods(samples, centres[start:start + CHUNK], half)
        f0[start:start + CHUNK] = estimate_f0(seg)[0]

    out = np.column_stack([mfcc, shape, noise, f0, energy[:, 4], energy[:, :4]])
    assert out.shape[1] == N_BASE
    return out


def delta(x: np.ndarray) -> np.ndarray:
    """Central difference (x[t+1] - x[t-1]) / 2 along rows, replicating edge rows."""
    x = np.asarray(x, dtype=float)
    padded = np.concatenate([x[:1], x, x[-1:]], axis=0)
    return (padded[2:] - padded[:-2]) / 2.0


def append_derivatives(matrix: FeatureMatrix) -> FeatureMatrix:
    """Extend the 35 base columns to [base | delta | delta-delta]."""
    if matrix.names != BASE_NAMES:
        raise ValueError("append_derivatives expects exactly the 35 base registry columns in order")
    d1 = delta(matrix.values)
    d2 = delta(d1)
    return FeatureMatrix(np.hstack([matrix.values, d1, d2]), matrix.labels, ALL_NAMES, matrix.groups)


def extract_from_frames(frames: FrameSequence, samples: np.ndarray, labels: np.ndarray) -> FeatureMatrix:
    base = FeatureMatrix(base_features(frames, samples), labels, BASE_NAMES)
    return append_derivatives(base)


def extract_feature_matrix(audio: AudioBuffer, labels: LabelTrack | None = None) -> FeatureMatrix:
    """One 105-column row per frame, labelled 1 when the frame centre lies in a cough segment."""
    audio = resample_to_16k(audio)
    labels = labels or LabelTrack()
    for start, end in labels.segments:
        if end > audio.duration + 1e-9:
            raise LabelError(
                f"segment [{start}, {end}) extends past the end of the audio ({audio.duration:.3f} s)"
            )
    frames = magnitude_spectrum(frame_signal(audio))
    y = labels.frame_labels(frames.center_times)
    return extract_from_frames(frames, audio.samples, y)
