"""Synthetic labelled recordings for exercising the pipeline.

A pseudo-cough is a 30-150 ms noise burst emphasised in 2-8 kHz under a
sharp-attack decaying envelope, optionally followed by a 50-150 ms voiced
tail at 150-300 Hz. Distractors are steady tones, babble-like voiced and
filtered noise (talking), low-frequency knocks, laughter, breath hiss and
silence, all over a background noise floor set by ``snr_db``. This is a
test harness, not a physiological model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal

from coughdet.frontend import AudioBuffer, TARGET_RATE
from coughdet.labels import LabelTrack

SR = TARGET_RATE


@dataclass(frozen=True)
class SynthSpec:
    duration: float = 60.0
    coughs_per_minute: float = 20.0
    talk_per_minute: float = 10.0
    tones_per_minute: float = 6.0
    knocks_per_minute: float = 10.0
    laughs_per_minute: float = 8.0
    breaths_per_minute: float = 15.0
    snr_db: float = 10.0
    seed: int = 0


def _bandpass(x: np.ndarray, lo: float, hi: float, order: int = 4) -> np.ndarray:
    sos = signal.butter(order, [lo, hi], btype="bandpass", fs=SR, output="sos")
    return signal.sosfilt(sos, x)


def _harmonic(rng, f0: float, n: int, n_harmonics: int = 12, jitter: float = 0.01) -> np.ndarray:
    t = np.arange(n) / SR
    drift = f0 * (1.0 + jitter * np.cumsum(rng.standard_normal(n)) / np.sqrt(n))
    phase = 2 * np.pi * np.cumsum(drift) / SR
    out = np.zeros(n)
    for h in range(1, n_harmonics + 1):
        if h * f0 >= SR / 2 - 500:
            break
        out += np.sin(h * phase + rng.uniform(0, 2 * np.pi)) / h
    return out / (np.max(np.abs(out)) + 1e-12)


def cough(rng) -> np.ndarray:
    burst_n = int(rng.uniform(0.030, 0.150) * SR)
    noise = _bandpass(rng.standard_normal(burst_n + 256), 2000.0, 7900.0)[256:]
    noise += 0.3 * _bandpass(rng.standard_normal(burst_n + 256), 300.0, 2000.0)[256:]
    t = np.arange(burst_n) / SR
    attack = np.minimum(t / 0.005, 1.0)
    env = attack * np.exp(-t / (burst_n / SR / 1.5))
    burst = noise * env / (np.std(noise) + 1e-12)
    if rng.random() < 0.7:
        tail_n = int(rng.uniform(0.050, 0.150) * SR)
        tt = np.arange(tail_n) / SR
        voiced = _harmonic(rng, rng.uniform(150.0, 300.0), tail_n)
        tail_env = env[-1] + (0.5 - env[-1]) * np.minimum(tt / 0.01, 1.0)
        tail_env *= np.exp(-tt / (tail_n / SR))
        breath = 0.3 * _bandpass(rng.standard_normal(tail_n + 256), 1000.0, 6000.0)[256:]
        burst = np.concatenate([burst, (voiced + breath / (np.std(breath) + 1e-12) * 0.3) * tail_env])
    return burst / (np.max(np.abs(burst)) + 1e-12)


def talk(rng) -> np.ndarray:
    n = int(rng.uniform(0.5, 2.0) * SR)
    t = np.arange(n) / SR
    f0 = rng.uniform(100.0, 250.0) * (1 + 0.1 * np.sin(2 * np.pi * rng.uniform(0.5, 2) * t))
    phase = 2 * np.pi * np.cumsum(f0) / SR
    voiced = sum(np.sin(h * phase) / h for h in range(1, 20) if h * 250 < SR / 2)
    voiced = _bandpass(voiced, 80.0, 3500.0, order=2)
    syllables = 0.5 * (1 - np.cos(2 * np.pi * rng.uniform(3.0, 6.0) * t)) ** 2
    fric = _bandpass(rng.standard_normal(n), 3000.0, 7000.0) * (syllables < 0.2) * 0.4
    out = voiced / (np.std(voiced) + 1e-12) * syllables + fric / (np.std(fric) + 1e-12) * 0.3
    return out / (np.max(np.abs(out)) + 1e-12)


def tone(rng) -> np.ndarray:
    n = int(rng.uniform(0.2, 1.0) * SR)
    t = np.arange(n) / SR
    f = rng.uniform(200.0, 2000.0)
    out = np.sin(2 * np.pi * f * t) + 0.3 * np.sin(4 * np.pi * f * t)
    fade = np.minimum(1.0, np.minimum(t, t[-1] - t) / 0.01)
    return out * fade / 1.3


def knock(rng) -> np.ndarray:
    n = int(rng.uniform(0.020, 0.080) * SR)
    t = np.arange(n) / SR
    noise = _bandpass(rng.standard_normal(n + 256), 80.0, 1500.0)[256:]
    out = noise * np.exp(-t / 0.015)
    return out / (np.max(np.abs(out)) + 1e-12)


def laugh(rng) -> np.ndarray:
    """3-6 short breathy voiced pulses, a voiced/noisy mix close to a cough tail."""
    parts = []
    f0 = rng.uniform(200.0, 350.0)
    for _ in range(int(rng.integers(3, 7))):
        n = int(rng.uniform(0.080, 0.150) * SR)
        t = np.arange(n) / SR
        voiced = _harmonic(rng, f0 * rng.uniform(0.9, 1.1), n)
        breath = _bandpass(rng.standard_normal(n + 256), 1000.0, 5000.0)[256:]
        pulse = voiced + 0.6 * breath / (np.std(breath) + 1e-12) * np.std(voiced)
        parts.append(pulse * np.abs(np.sin(np.pi * t / t[-1])) ** 0.5)
        parts.append(np.zeros(int(rng.uniform(0.060, 0.120) * SR)))
    out = np.concatenate(parts)
    return out / (np.max(np.abs(out)) + 1e-12)


def breath(rng) -> np.ndarray:
    """Slow-onset broadband hiss sharing the cough burst's high-frequency emphasis."""
    n = int(rng.uniform(0.3, 1.0) * SR)
    t = np.arange(n) / SR
    noise = _bandpass(rng.standard_normal(n + 256), 1500.0, 7500.0)[256:]
    env = np.sin(np.pi * t / t[-1]) ** 2
    out = noise * env
    return out / (np.max(np.abs(out)) + 1e-12)


def _place(rng, total: int, occupied: np.ndarray, length: int, tries: int = 50) -> int | None:
    for _ in range(tries):
        start = int(rng.integers(0, max(total - length, 1)))
        if not occupied[max(start - SR // 20, 0):start + length + SR // 20].any():
            return start
    return None


def synth_dataset(spec: SynthSpec | None = None, **overrides) -> tuple[AudioBuffer, LabelTrack]:
    """Generate one 16 kHz recording and its cough annotations, deterministically from ``seed``."""
    spec = spec or SynthSpec()
    if overrides:
        spec = SynthSpec(**{**spec.__dict__, **overrides})
    if spec.duration <= 0:
        raise ValueError(f"duration must be positive, got {spec.duration}")
    rng = np.random.default_rng(spec.seed)
    total = int(round(spec.duration * SR))
    x = np.zeros(total)
    occupied = np.zeros(total, dtype=bool)
    minutes = spec.duration / 60.0
    segments = []

    plan = [
        ("cough", cough, spec.coughs_per_minute, (0.3, 1.0)),
        ("talk", talk, spec.talk_per_minute, (0.3, 1.0)),
        ("tone", tone, spec.tones_per_minute, (0.1, 0.4)),
        ("knock", knock, spec.knocks_per_minute, (0.2, 0.8)),
        ("laugh", laugh, spec.laughs_per_minute, (0.3, 1.0)),
        ("breath", breath, spec.breaths_per_minute, (0.3, 1.0)),
    ]
    for kind, make, rate, (amp_lo, amp_hi) in plan:
        count = int(rng.poisson(rate * minutes)) if rate > 0 else 0
        for _ in range(count):
            event = make(rng) * rng.uniform(amp_lo, amp_hi)
            start = _place(rng, total, occupied, len(event))
            if start is None:
                continue
            end = min(start + len(event), total)
            x[start:end] += event[:end - start]
            occupied[start:end] = True
            if kind == "cough":
                segments.append((start / SR, end / SR))

    event_rms = 0.1
    noise = _bandpass(rng.standard_normal(total), 50.0, 7900.0, order=2)
    noise *= event_rms * 10 ** (-spec.snr_db / 20.0) / (np.std(noise) + 1e-12)
    x = np.clip(x + noise, -1.0, 1.0 - 2 ** -15)
    return AudioBuffer(x, SR), LabelTrack.from_segments(segments, recording_id=f"synth-{spec.seed}")
