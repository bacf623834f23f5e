"""LPCC speech front-end: WAV decoding, framing, LPC analysis, cepstra.

The pipeline is decode -> frame/window -> autocorrelate -> Levinson-Durbin
-> cepstral recursion, one 16-dim LPCC row per 30 ms frame at a 5 ms shift.
"""

from __future__ import annotations

import io
import struct
import wave
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, FormatError, NumericError

FEATURE_MAGIC = b"LPCC"
FEATURE_VERSION = 1


@dataclass(frozen=True)
class FrameParams:
    window_ms: float = 30.0
    shift_ms: float = 5.0
    lpc_order: int = 12
    cepstral_order: int = 16
    pre_emphasis: float = 0.0

    def __post_init__(self):
        if self.window_ms <= 0 or self.shift_ms <= 0:
            raise DataError("window_ms and shift_ms must be positive")
        if self.shift_ms > self.window_ms:
            raise DataError("shift_ms must not exceed window_ms")
        if self.lpc_order < 1 or self.cepstral_order < 1:
            raise DataError("lpc_order and cepstral_order must be >= 1")
        if not 0.0 <= self.pre_emphasis < 1.0:
            raise DataError("pre_emphasis must lie in [0, 1)")


@dataclass
class AudioClip:
    samples: np.ndarray
    sample_rate_hz: int

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1 or self.samples.size == 0:
            raise DataError("samples must be a nonempty 1-D sequence")
        if not np.all(np.isfinite(self.samples)):
            raise DataError("samples must be finite")
        if np.any(np.abs(self.samples) > 1.0):
            raise DataError("samples must lie in [-1, 1]")
        if self.sample_rate_hz <= 0:
            raise DataError("sample_rate_hz must be positive")


@dataclass
class FeatureSequence:
    """T x D matrix of cepstral frames plus provenance metadata."""

    frames: np.ndarray
    source_id: str = ""
    params: FrameParams | None = None
    degenerate_frames: int = 0

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=np.float64)
        if self.frames.ndim != 2 or self.frames.shape[0] < 1 or self.frames.shape[1] < 1:
            raise DataError("frames must be a T x D matrix with T, D >= 1")
        if not np.all(np.isfinite(self.frames)):
            raise DataError("frames must be finite")

    @property
    def T(self) -> int:
        return self.frames.shape[0]

    @property
    def dim(self) -> int:
        return self.frames.shape[1]


def decode_pcm16_wav(data: bytes) -> AudioClip:
    """Decode a mono 16-bit PCM RIFF/WAVE file into [-1, 1] samples."""
    try:
        with wave.open(io.BytesIO(data), "rb") as wf:
            n_channels = wf.getnchannels()
            sampwidth = wf.getsampwidth()
            rate = wf.getframerate()
            n_frames = wf.getnframes()
            raw = wf.readframes(n_frames)
    except (wave.Error, EOFError, struct.error) as exc:
        raise FormatError(f"malformed or non-PCM WAV file: {exc}") from exc
    if sampwidth != 2:
        raise FormatError(f"expected 16-bit samples, got {8 * sampwidth}-bit")
    if n_channels != 1:
        raise FormatError(f"expected mono audio, got {n_channels} channels")
    samples = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0
    if samples.size == 0:
        raise FormatError("WAV file contains no samples")
    return AudioClip(samples, rate)


def _frame_geometry(n_samples: int, rate: int, params: FrameParams) -> tuple[int, int, int]:
    win = int(round(params.window_ms * rate / 1000.0))
    shift = int(round(params.shift_ms * rate / 1000.0))
    if n_samples < win:
        raise DataError(f"clip of {n_samples} samples is shorter than one {win}-sample window")
    n_frames = (n_samples - win) // shift + 1
    return win, shift, n_frames


def frame_and_window(clip: AudioClip, params: FrameParams) -> np.ndarray:
    """Slice the clip into Hamming-windowed frames, one row per frame."""
    x = clip.samples
    if params.pre_emphasis > 0.0:
        x = np.concatenate(([x[0]], x[1:] - params.pre_emphasis * x[:-1]))
    win, shift, n_frames = _frame_geometry(x.size, clip.sample_rate_hz, params)
    idx = np.arange(win)[None, :] + shift * np.arange(n_frames)[:, None]
    window = 0.54 - 0.46 * np.cos(2.0 * np.pi * np.arange(win) / (win - 1))
    return x[idx] * window[None, :]


def autocorrelate(frame: np.ndarray, max_lag: int) -> np.ndarray:
    """Biased autocorrelation r_0 .. r_max_lag of one frame."""
    frame = np.asarray(frame, dtype=np.float64)
    n = frame.size
    if max_lag >= n:
        raise DataError(f"max_lag {max_lag} must be smaller than frame length {n}")
    full = np.correlate(frame, frame, mode="full")
    return full[n - 1 : n + max_lag]


def levinson_durbin(r: np.ndarray) -> tuple[np.ndarray, float]:
    """Solve the Toeplitz normal equations for A(z) = 1 + sum a_k z^-k.

    Returns (a_1..a_p, residual energy E_p). Raises NumericError when a
    reflection coefficient leaves the unit disc.
    """
    r = np.asarray(r, dtype=np.float64)
    p = r.size - 1
    if r[0] <= 0.0:
        raise NumericError("zero-energy frame: r_0 must be positive")
    a = np.zeros(p)
    energy = r[0]
    for i in range(1, p + 1):
        acc = r[i] + a[: i - 1] @ r[i - 1 : 0 : -1]
        k = -acc / energy
        if not np.isfinite(k) or abs(k) >= 1.0:
            raise NumericError(f"unstable frame: |k_{i}| = {abs(k):.6g} >= 1")
        a[: i - 1] = a[: i - 1] + k * a[: i - 1][::-1]
        a[i - 1] = k
        energy *= 1.0 - k * k
    return a, float(energy)


def lpc_to_lpcc(lpc: np.ndarray, cepstral_order: int) -> np.ndarray:
    """Cepstrum c_1..c_Q of 1/A(z) via the standard recursion (gain term dropped)."""
    a = np.asarray(lpc, dtype=np.float64)
    p = a.size
    if cepstral_order < 1:
        raise DataError("cepstral_order must be >= 1")
    c = np.zeros(cepstral_order)
    for m in range(1, cepstral_order + 1):
        acc = -a[m - 1] if m <= p else 0.0
        lo = max(1, m - p)
        for k in range(lo, m):
            acc -= (k / m) * c[k - 1] * a[m - k - 1]
        c[m - 1] = acc
    return c


SILENCE_THRESHOLD = 1e-12


def extract_features(clip: AudioClip, params: FrameParams | None = None,
                     source_id: str = "") -> FeatureSequence:
    """Full front-end: windowed frames -> LPC -> LPCC rows.

    Silent or numerically unstable frames become all-zero rows and are
    counted in the sequence metadata instead of aborting the utterance.
    """
    params = params or FrameParams()
    frames = frame_and_window(clip, params)
    out = np.zeros((frames.shape[0], params.cepstral_order))
    degenerate = 0
    for t, frame in enumerate(frames):
        r = autocorrelate(frame, params.lpc_order)
        if r[0] <= SILENCE_THRESHOLD:
            degenerate += 1
            continue
        try:
            a, _ = levinson_durbin(r)
        except NumericError:
            degenerate += 1
            continue
        out[t] = lpc_to_lpcc(a, params.cepstral_order)
    return FeatureSequence(out, source_id=source_id, params=params,
                           degenerate_frames=degenerate)


def save_features(seq: FeatureSequence, path) -> None:
    """Write the binary feature format: magic, version, T, D, row-major f64."""
    frames = np.ascontiguousarray(seq.frames, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(FEATURE_MAGIC)
        fh.write(struct.pack("<B", FEATURE_VERSION))
        fh.write(struct.pack("<II", seq.T, seq.dim))
        fh.write(frames.tobytes())


def load_features(path, source_id: str | None = None) -> FeatureSequence:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != FEATURE_MAGIC:
        raise FormatError(f"{path}: bad magic bytes")
    if len(data) < 13:
        raise FormatError(f"{path}: truncated header")
    version = data[4]
    if version != FEATURE_VERSION:
        raise FormatError(f"{path}: unsupported feature format version {version}")
    t, d = struct.unpack("<II", data[5:13])
    payload = data[13:]
    if len(payload) != 8 * t * d:
        raise FormatError(f"{path}: truncated payload")
    frames = np.frombuffer(payload, dtype="<f8").reshape(t, d).copy()
    return FeatureSequence(frames, source_id=source_id if source_id is not None else str(path))


def features_to_csv(seq: FeatureSequence) -> str:
    """One frame per line, full round-trip decimal precision."""
    lines = [",".join(repr(v) for v in row) for row in seq.frames.tolist()]
    return "\n".join(lines) + "\n"
