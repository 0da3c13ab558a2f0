"""Audio ingestion, resampling and the 25 ms / 10 ms analysis grid."""

from __future__ import annotations

import wave
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import signal

TARGET_RATE = 16000
SUPPORTED_RATES = (16000, 32000, 44100, 48000)
FRAME_MS = 25
HOP_MS = 10
FFT_SIZE = 512

# Kaiser-windowed sinc prototype for the polyphase resampler.
KAISER_BETA = 8.0
TAPS_PER_PHASE = 64


class AudioError(ValueError):
    """Raised for unusable audio input (bad rate, too short, bad WAV)."""


@dataclass(frozen=True)
class AudioBuffer:
    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim == 2:
            samples = samples.mean(axis=1)
        if samples.ndim != 1:
            raise AudioError("samples must be a 1-D (mono) or 2-D (frames x channels) array")
        if int(self.sample_rate) <= 0:
            raise AudioError(f"sample rate must be positive, got {self.sample_rate}")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


@dataclass
class FrameSequence:
    """Windowed frames of one recording and, once computed, their magnitude spectra.

    ``frames`` has shape (n_frames, frame_length); ``spectra`` has shape
    (n_frames, fft_size // 2 + 1) or is None before :func:`magnitude_spectrum`.
    """

    frames: np.ndarray
    frame_length: int
    hop: int
    sample_rate: int = TARGET_RATE
    fft_size: int = FFT_SIZE
    spectra: np.ndarray | None = field(default=None, repr=False)

    def __len__(self) -> int:
        return self.frames.shape[0]

    @property
    def start_times(self) -> np.ndarray:
        return np.arange(len(self)) * self.hop / self.sample_rate

    @property
    def center_times(self) -> np.ndarray:
        return (np.arange(len(self)) * self.hop + self.frame_length / 2) / self.sample_rate


def read_wav(path: str | Path) -> AudioBuffer:
    """Read a 16-bit PCM WAV file; stereo is averaged to mono."""
    try:
        with wave.open(str(path), "rb") as wf:
            n_channels = wf.getnchannels()
            width = wf.getsampwidth()
            rate = wf.getframerate()
            raw = wf.readframes(wf.getnframes())
    except (wave.Error, EOFError) as exc:
        raise AudioError(f"{path}: not a readable PCM WAV file ({exc})") from exc
    if width != 2:
        raise AudioError(f"{path}: expected 16-bit PCM, got {8 * width}-bit samples")
    data = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0
    if n_channels > 1:
        data = data.reshape(-1, n_channels).mean(axis=1)
    return AudioBuffer(data, rate)


def write_wav(path: str | Path, audio: AudioBuffer) -> None:
    """Write mono 16-bit PCM; samples outside [-1, 1) are clipped."""
    pcm = np.clip(np.round(audio.samples * 32768.0), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(audio.sample_rate)
        wf.writeframes(pcm.tobytes())


def _resampling_filter(up: int, down: int) -> np.ndarray:
    n_taps = TAPS_PER_PHASE * up
    cutoff = 1.0 / max(up, down)  # relative to Nyquist of the upsampled stream
    return signal.firwin(n_taps, cutoff, window=("kaiser", KAISER_BETA)) * up


def resample_to_16k(audio: AudioBuffer) -> AudioBuffer:
    """Bring audio to 16 kHz with a Kaiser-windowed sinc polyphase filter."""
    rate = audio.sample_rate
    if rate not in SUPPORTED_RATES:
        raise AudioError(
            f"unsupported sample rate {rate} Hz (supported: {', '.join(map(str, SUPPORTED_RATES))})"
        )
    if rate == TARGET_RATE:
        return audio
    g = np.gcd(rate, TARGET_RATE)
    up, down = TARGET_RATE // g, rate // g
    out = signal.resample_poly(audio.samples, up, down, window=_resampling_filter(up, down))
    return AudioBuffer(out, TARGET_RATE)


def hanning(length: int) -> np.ndarray:
    """Symmetric Hanning window 0.5 * (1 - cos(2 pi n / (L - 1)))."""
    n = np.arange((length + 1) // 2)
    half = 0.5 * (1.0 - np.cos(2.0 * np.pi * n / (length - 1)))
    # mirror the first half so w[n] == w[L-1-n] holds bit for bit
    return np.concatenate([half, half[:length // 2][::-1]])


def frame_count(n_samples: int, frame_length: int, hop: int) -> int:
    if n_samples < frame_length:
        return 0
    return (n_samples - frame_length) // hop + 1


def frame_signal(audio: AudioBuffer) -> FrameSequence:
    """Cut a 16 kHz signal into left-aligned Hanning-windowed frames.

    Trailing samples that do not fill a whole frame are dropped.
    """
    if audio.sample_rate != TARGET_RATE:
        raise AudioError(f"framing expects {TARGET_RATE} Hz audio, got {audio.sample_rate} Hz")
    frame_length = TARGET_RATE * FRAME_MS // 1000
    hop = TARGET_RATE * HOP_MS // 1000
    n = frame_count(len(audio.samples), frame_length, hop)
    if n == 0:
        raise AudioError(
            f"audio has {len(audio.samples)} samples, shorter than one {frame_length}-sample frame"
        )
    idx = np.arange(n)[:, None] * hop + np.arange(frame_length)[None, :]
    frames = audio.samples[idx] * hanning(frame_length)
    return FrameSequence(frames=frames, frame_length=frame_length, hop=hop, sample_rate=TARGET_RATE)


def magnitude_spectrum(frames: FrameSequence) -> FrameSequence:
    """Fill ``frames.spectra`` with zero-padded FFT magnitudes (not power)."""
    frames.spectra = np.abs(np.fft.rfft(frames.frames, n=frames.fft_size, axis=1))
    return frames


def analyze(audio: AudioBuffer) -> FrameSequence:
    """Resample, frame and transform in one call."""
    return magnitude_spectrum(frame_signal(resample_to_16k(audio)))
