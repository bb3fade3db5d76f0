"""Multi-channel records, excitation synthesis and spectral estimation.

Everything downstream of the simulator works on :class:`MultiChannelRecord`
objects: immutable blocks of equally sampled channel data.  This module also
owns the deterministic seed derivation used across the workbench, the
band-limited excitation generator and the PSD/CSD estimators that feed the
frequency-domain identifiers.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "MultiChannelRecord",
    "SpectralEstimatorOptions",
    "SpectralMatrix",
    "derive_seed",
    "power_and_rms",
    "gaussian_white",
    "band_limited_force",
    "psd",
    "csd_matrix",
]

_WINDOWS = ("rectangular", "hann")


def derive_seed(*parts) -> int:
    """Derive a stable 64-bit child seed from an arbitrary tuple of parts.

    The derivation hashes the decimal/string form of every part, so it is
    independent of platform, process and interpreter hash randomization.
    Distinct part tuples give independent streams for all practical purposes.

    Parameters
    ----------
    *parts
        Integers or strings identifying the stream, e.g.
        ``(master_seed, "noise", beam_id, level_index, run_index)``.

    Returns
    -------
    int
        Seed in ``[0, 2**64)`` suitable for :func:`numpy.random.default_rng`.
    """
    if not parts:
        raise ValueError("derive_seed requires at least one part")
    token = "\x1f".join(str(p) for p in parts).encode("utf-8")
    digest = hashlib.sha256(token).digest()
    return int.from_bytes(digest[:8], "little")


def power_and_rms(samples) -> tuple[float, float]:
    """Return the mean-square power and RMS value of a 1-D sample array."""
    x = np.asarray(samples, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("samples must be a non-empty 1-D array")
    p = float(np.mean(x * x))
    return p, float(np.sqrt(p))


def gaussian_white(n_samples: int, seed: int) -> np.ndarray:
    """Draw ``n_samples`` of a standard normal stream for the given seed."""
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    rng = np.random.default_rng(seed)
    return rng.standard_normal(n_samples)


@dataclass(frozen=True)
class MultiChannelRecord:
    """Immutable block of equally sampled multi-channel data.

    Parameters
    ----------
    sample_rate : float
        Sampling rate in Hz.
    data : ndarray
        Channel data with shape ``(n_channels, n_samples)``.  The array is
        copied and marked read-only so records can be shared across workers.
    labels : tuple of str
        One label per channel (node ids for simulated beam records).
    """

    sample_rate: float
    data: np.ndarray
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        arr = np.array(self.data, dtype=float, order="C")
        if arr.ndim == 1:
            arr = arr[None, :]
        if arr.ndim != 2 or arr.shape[1] < 2:
            raise ValueError("data must be (n_channels, n_samples) with at least 2 samples")
        if not np.all(np.isfinite(arr)):
            raise ValueError("data must be finite")
        labels = tuple(self.labels) if self.labels else tuple(f"ch{i}" for i in range(arr.shape[0]))
        if len(labels) != arr.shape[0]:
            raise ValueError("label count does not match channel count")
        if len(set(labels)) != len(labels):
            raise ValueError("channel labels must be unique")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "labels", labels)

    @property
    def n_channels(self) -> int:
        return self.data.shape[0]

    @property
    def n_samples(self) -> int:
        return self.data.shape[1]

    @property
    def duration(self) -> float:
        """Record duration in seconds, ``(n_samples - 1) / sample_rate``."""
        return (self.n_samples - 1) / self.sample_rate

    def times(self) -> np.ndarray:
        return np.arange(self.n_samples) / self.sample_rate

    def channel(self, label: str) -> np.ndarray:
        try:
            idx = self.labels.index(label)
        except ValueError:
            raise KeyError(f"no channel labeled {label!r}") from None
        return self.data[idx]

    def with_data(self, data) -> "MultiChannelRecord":
        """Return a record with the same rate and labels but new data."""
        return MultiChannelRecord(self.sample_rate, data, self.labels)

    def rms_per_channel(self) -> np.ndarray:
        return np.sqrt(np.mean(self.data * self.data, axis=1))

    def to_csv(self, path) -> None:
        """Write ``time,<label>...`` CSV with full-precision doubles."""
        t = self.times()
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("time," + ",".join(self.labels) + "\n")
            cols = self.data
            for i in range(self.n_samples):
                row = [repr(float(t[i]))] + [repr(float(cols[j, i]))
                                             for j in range(self.n_channels)]
                fh.write(",".join(row) + "\n")

    @classmethod
    def from_csv(cls, path) -> "MultiChannelRecord":
        """Read a record written by :meth:`to_csv` (lossless for the data)."""
        with open(path, "r", encoding="utf-8") as fh:
            header = fh.readline().strip()
            cells = header.split(",")
            if len(cells) < 2 or cells[0] != "time":
                raise ValueError("record CSV must start with a 'time,<label>...' header")
            labels = tuple(cells[1:])
            raw = np.loadtxt(fh, delimiter=",", ndmin=2)
        if raw.shape[1] != len(labels) + 1:
            raise ValueError("record CSV column count does not match header")
        t = raw[:, 0]
        if t.size < 2:
            raise ValueError("record CSV must hold at least 2 samples")
        rate = (t.size - 1) / (t[-1] - t[0])
        # Integral sampling rates are recovered exactly.
        if abs(rate - round(rate)) < 1e-6 * rate:
            rate = float(round(rate))
        return cls(rate, raw[:, 1:].T, labels)

    def to_npz(self, path) -> None:
        np.savez(path, sample_rate=self.sample_rate, data=self.data,
                 labels=np.array(self.labels))

    @classmethod
    def from_npz(cls, path) -> "MultiChannelRecord":
        with np.load(path) as z:
            return cls(float(z["sample_rate"]), z["data"],
                       tuple(str(s) for s in z["labels"]))


def band_limited_force(duration: float, sample_rate: float, band: tuple[float, float],
                       rms_target: float, seed: int) -> np.ndarray:
    """Synthesize a band-limited random-phase force history.

    The signal is built in the frequency domain with unit-magnitude spectral
    lines inside ``band`` and uniformly random phases, inverted to the time
    domain and scaled to the exact target RMS.  Out-of-band content is zero by
    construction.

    Parameters
    ----------
    duration : float
        Length in seconds; the output has ``round(duration * sample_rate) + 1``
        samples to match the simulator grid.
    sample_rate : float
        Sampling rate in Hz.
    band : (float, float)
        Inclusive passband edges in Hz; must satisfy
        ``0 < lo < hi <= sample_rate / 2``.
    rms_target : float
        RMS value of the returned signal (must be positive).
    seed : int
        Seed for the phase stream.

    Returns
    -------
    ndarray
        Force samples, shape ``(n_samples,)``.
    """
    if duration <= 0 or sample_rate <= 0:
        raise ValueError("duration and sample_rate must be positive")
    lo, hi = band
    if not (0.0 <= lo < hi <= sample_rate / 2):
        raise ValueError("band must satisfy 0 <= lo < hi <= Nyquist")
    if rms_target <= 0:
        raise ValueError("rms_target must be positive")
    n = int(round(duration * sample_rate)) + 1
    freqs = np.fft.rfftfreq(n, 1.0 / sample_rate)
    # The DC line stays zero regardless of the band, so the force has zero mean.
    mask = (freqs >= lo) & (freqs <= hi) & (freqs > 0.0)
    if not np.any(mask):
        raise ValueError("band contains no spectral line for this duration")
    rng = np.random.default_rng(seed)
    spectrum = np.zeros(freqs.size, dtype=complex)
    phases = rng.uniform(0.0, 2.0 * np.pi, int(mask.sum()))
    spectrum[mask] = np.exp(1j * phases)
    x = np.fft.irfft(spectrum, n)
    x *= rms_target / np.sqrt(np.mean(x * x))
    return x


@dataclass(frozen=True)
class SpectralEstimatorOptions:
    """Settings for the Welch-type PSD/CSD estimators.

    The default is a single full-record rectangular segment, which keeps the
    native frequency resolution ``1 / duration`` of the record.  Requesting
    more segments trades resolution for variance.
    """

    window: str = "rectangular"
    segments: int = 1
    overlap: float = 0.0

    def __post_init__(self):
        if self.window not in _WINDOWS:
            raise ValueError(f"window must be one of {_WINDOWS}")
        if self.segments < 1:
            raise ValueError("segments must be >= 1")
        if not (0.0 <= self.overlap < 1.0):
            raise ValueError("overlap must lie in [0, 1)")


@dataclass(frozen=True)
class SpectralMatrix:
    """One-sided cross-spectral density matrix on a uniform frequency grid.

    Attributes
    ----------
    frequencies : ndarray
        Grid in Hz, spacing ``df``.
    values : ndarray
        Complex CSD tensor with shape ``(n_freqs, l, l)``; each frequency
        slice is Hermitian.
    df : float
        Grid spacing in Hz (the resolution of the estimate).
    """

    frequencies: np.ndarray
    values: np.ndarray
    df: float

    def __post_init__(self):
        f = np.asarray(self.frequencies, dtype=float)
        g = np.asarray(self.values, dtype=complex)
        if g.ndim != 3 or g.shape[1] != g.shape[2] or g.shape[0] != f.size:
            raise ValueError("values must have shape (n_freqs, l, l)")
        herm = np.max(np.abs(g - np.conj(np.transpose(g, (0, 2, 1)))))
        scale = max(np.max(np.abs(g)), 1.0)
        if herm > 1e-10 * scale:
            raise ValueError("spectral matrix is not Hermitian")
        f.setflags(write=False)
        g.setflags(write=False)
        object.__setattr__(self, "frequencies", f)
        object.__setattr__(self, "values", g)

    @property
    def n_channels(self) -> int:
        return self.values.shape[1]

    def diagonal(self) -> np.ndarray:
        """Auto-spectra, shape ``(n_channels, n_freqs)``, real."""
        return np.real(np.einsum("fii->if", self.values))


def _segment_plan(n_samples: int, options: SpectralEstimatorOptions) -> tuple[int, list[int]]:
    """Return (segment length, list of segment start indices)."""
    s = options.segments
    nseg = int(n_samples // (1 + (s - 1) * (1 - options.overlap)))
    if nseg < 16:
        raise ValueError("estimator options leave segments shorter than 16 samples")
    if s == 1:
        return n_samples, [0]
    step = (n_samples - nseg) // (s - 1)
    if step < 1:
        raise ValueError("too many segments for this record length")
    return nseg, [k * step for k in range(s)]


def _window(kind: str, n: int) -> np.ndarray:
    if kind == "hann":
        return np.hanning(n)
    return np.ones(n)


def _segment_ffts(record: MultiChannelRecord, options: SpectralEstimatorOptions):
    nseg, starts = _segment_plan(record.n_samples, options)
    w = _window(options.window, nseg)
    u = float(np.sum(w * w))
    segs = np.stack([record.data[:, s0:s0 + nseg] * w for s0 in starts])
    X = np.fft.rfft(segs, axis=-1)
    freqs = np.fft.rfftfreq(nseg, 1.0 / record.sample_rate)
    # One-sided density scaling; DC (and Nyquist for even lengths) not doubled.
    scale = np.full(freqs.size, 2.0 / (record.sample_rate * u))
    scale[0] = 1.0 / (record.sample_rate * u)
    if nseg % 2 == 0:
        scale[-1] = 1.0 / (record.sample_rate * u)
    df = record.sample_rate / nseg
    return freqs, X, scale, df


def psd(record: MultiChannelRecord,
        options: SpectralEstimatorOptions = SpectralEstimatorOptions()):
    """Estimate one-sided auto power spectral densities per channel.

    Returns
    -------
    frequencies : ndarray
        Grid in Hz.
    densities : ndarray
        Shape ``(n_channels, n_freqs)``; integrating each row against the
        grid recovers the corresponding channel power (exactly for the
        default single rectangular segment).
    """
    freqs, X, scale, _ = _segment_ffts(record, options)
    p = np.mean(np.abs(X) ** 2, axis=0) * scale
    return freqs, p


def csd_matrix(record: MultiChannelRecord,
               options: SpectralEstimatorOptions = SpectralEstimatorOptions()) -> SpectralMatrix:
    """Estimate the full one-sided cross-spectral density matrix.

    The diagonal equals :func:`psd` of the same record and options; each
    frequency slice is Hermitian by construction.
    """
    freqs, X, scale, df = _segment_ffts(record, options)
    # G[f, j, k] = E[X_j(f) conj(X_k(f))], averaged over segments.
    g = np.einsum("sjf,skf->fjk", X, np.conj(X)) / X.shape[0]
    g *= scale[:, None, None]
    g = 0.5 * (g + np.conj(np.transpose(g, (0, 2, 1))))
    return SpectralMatrix(freqs, g, df)
