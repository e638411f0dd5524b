"""WAV ingestion and export for the pipeline.

Supports linear PCM containers with 16-bit integer or 32-bit float samples;
rate and channel count come from the header. Integer samples are normalised
to [-1, 1] on load.
"""

from __future__ import annotations

import os

import numpy as np
from scipy.io import wavfile

from .timeline import AudioBuffer

_INT16_SCALE = 32768.0


def load_wav(path: str | os.PathLike) -> AudioBuffer:
    rate, data = wavfile.read(path)
    if data.dtype == np.int16:
        samples = data.astype(np.float64) / _INT16_SCALE
    elif data.dtype == np.float32 or data.dtype == np.float64:
        samples = data.astype(np.float64)
    else:
        raise ValueError(
            f"unsupported WAV sample format {data.dtype}; expected 16-bit PCM or 32-bit float"
        )
    channels = 1 if samples.ndim == 1 else samples.shape[1]
    return AudioBuffer(samples.reshape(-1), int(rate), channels)


def save_wav(path: str | os.PathLike, audio: AudioBuffer, *, float_samples: bool = True) -> None:
    data = audio.frames() if audio.channels > 1 else audio.samples
    if float_samples:
        wavfile.write(path, audio.sample_rate_hz, data.astype(np.float32))
    else:
        clipped = np.clip(data, -1.0, 1.0 - 1.0 / _INT16_SCALE)
        wavfile.write(path, audio.sample_rate_hz, (clipped * _INT16_SCALE).astype(np.int16))
