"""Acoustic pressure, Welch spectra and sound pressure level."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import InsufficientSamples, ValidationError
from .io.trace import MicrophoneTrace

P_REF = 2e-5  # Pa, airborne reference
WINDOWS = ("hann", "boxcar")


def acoustic_pressure(data, rho0: float):
    """``p = rho0 * dpsi/dt`` for a trace or an array of potential rates."""
    if not rho0 > 0:
        raise ValidationError(f"density must be positive, got {rho0}")
    if isinstance(data, MicrophoneTrace):
        return replace(data, values=rho0 * data.values, quantity="acouPressure")
    return rho0 * np.asarray(data, dtype=float)


def window(kind: str, n: int) -> np.ndarray:
    """Periodic window of length ``n``."""
    if kind == "hann":
        return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)
    if kind == "boxcar":
        return np.ones(n)
    raise ValidationError(f"unknown window {kind!r}; expected one of {WINDOWS}")


@dataclass
class Spectrum:
    """Single-sided spectrum on ``0 .. 1/(2 dt)``.

    ``scaling`` is ``"density"`` (values are an ASD in unit/sqrt(Hz)) or
    ``"amplitude"`` (values are peak amplitudes per bin).
    """

    frequency: np.ndarray
    values: np.ndarray
    scaling: str
    window: str
    segment: int
    overlap: float
    segments: int

    @property
    def resolution(self) -> float:
        return float(self.frequency[1] - self.frequency[0])

    @property
    def psd(self) -> np.ndarray:
        if self.scaling != "density":
            raise ValidationError("PSD is only defined for density scaling")
        return self.values**2

    def band_rms(self) -> np.ndarray:
        """RMS value carried by each bin."""
        if self.scaling == "density":
            return np.sqrt(self.psd * self.resolution)
        rms = self.values / np.sqrt(2.0)
        rms[0] = self.values[0]
        if self.segment % 2 == 0:
            rms[-1] = self.values[-1]
        return rms

    def spl(self) -> np.ndarray:
        return spl(self.band_rms())

    @property
    def peak_frequency(self) -> float:
        return float(self.frequency[int(np.argmax(self.values))])


def _check_lengths(n: int, segment: int):
    if segment < 8 or segment & (segment - 1):
        raise InsufficientSamples(f"segment length must be a power of two >= 8, got {segment}")
    if n < segment:
        raise InsufficientSamples(f"series has {n} samples, segment needs {segment}")


def default_segment(n: int) -> int:
    """Largest power of two not exceeding ``n``."""
    if n < 8:
        raise InsufficientSamples(f"need at least 8 samples, got {n}")
    return 1 << (int(n).bit_length() - 1)


def amplitude_spectral_density(
    series,
    dt: float,
    window_kind: str = "hann",
    segment: int | None = None,
    overlap: float = 0.5,
    scaling: str = "density",
) -> Spectrum:
    """Welch estimate, averaging periodograms of overlapping windowed segments.

    No detrending is applied.  Density scaling divides by ``fs * sum(w^2)``
    (power-correct window normalization); amplitude scaling uses
    ``2 |X| / sum(w)`` so a sinusoid on an exact bin reads its amplitude.
    DC and Nyquist bins are not doubled.
    """
    if isinstance(series, MicrophoneTrace):
        dt = series.dt if dt is None else dt
        series = series.values
    x = np.asarray(series, dtype=float)
    segment = default_segment(len(x)) if segment is None else int(segment)
    _check_lengths(len(x), segment)
    if not 0.0 <= overlap < 1.0:
        raise ValidationError(f"overlap must lie in [0, 1), got {overlap}")
    if scaling not in ("density", "amplitude"):
        raise ValidationError(f"unknown scaling {scaling!r}")
    w = window(window_kind, segment)
    step = segment - int(segment * overlap)
    starts = np.arange(0, len(x) - segment + 1, step)
    frames = np.stack([x[s : s + segment] * w for s in starts])
    X = np.fft.rfft(frames, axis=1)
    fs = 1.0 / dt
    freq = np.fft.rfftfreq(segment, dt)
    if scaling == "density":
        P = (np.abs(X) ** 2).mean(axis=0) / (fs * np.sum(w**2))
        P[1:] *= 2.0
        if segment % 2 == 0:
            P[-1] /= 2.0
        values = np.sqrt(P)
    else:
        A = np.abs(X).mean(axis=0) / np.sum(w)
        A[1:] *= 2.0
        if segment % 2 == 0:
            A[-1] /= 2.0
        values = A
    return Spectrum(freq, values, scaling, window_kind, segment, overlap, len(starts))


def spl(p_rms):
    """Sound pressure level in dB re 20 uPa; zero maps to ``-inf``."""
    if isinstance(p_rms, Spectrum):
        return p_rms.spl()
    p = np.asarray(p_rms, dtype=float)
    if np.any(p < 0):
        raise ValidationError("RMS pressure must be nonnegative")
    with np.errstate(divide="ignore"):
        out = 20.0 * np.log10(p / P_REF)
    return float(out) if out.ndim == 0 else out
