"""Parameterized link impairments standing in for physical experiments.

Frame-level modes (cable / distance / rssi) drop whole frames with a loss
probability taken from the measured regimes; the awgn mode perturbs audio
samples instead.  Every output is a pure function of (spec, seed, input).
The channel never composes frame-level and sample-level impairments in one
spec, which keeps loss attribution unambiguous in experiments.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from .modem import FULL_SCALE, AudioBuffer

MODES = ("cable", "distance", "rssi", "awgn")
SNR_INF = math.inf

# distance-mode anchor points published for the over-the-air runs:
# lossless at contact, ~15% median at 1 m, nothing above 1.1 m
_DISTANCE_CURVE = ((0.0, 0.0), (1.0, 0.15), (1.1, 1.0))
_DISTANCE_JITTER = 0.02

RSSI_FLOOR = -120.0
RSSI_DEAD = -90.0      # at or below: no frames at all
RSSI_CLEAN = -85.0     # from here up to -65 and beyond: no losses
RSSI_FLUX_RANGE = (0.02, 0.15)


class ChannelError(ValueError):
    pass


@dataclass(frozen=True)
class ChannelSpec:
    mode: str = "cable"
    distance_m: float = 0.0
    rssi_db: float = -70.0
    snr_db: float = SNR_INF
    seed: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ChannelError(f"unknown channel mode {self.mode!r}")
        if self.mode == "rssi" and not (RSSI_FLOOR <= self.rssi_db <= 0):
            raise ChannelError(f"rssi {self.rssi_db} outside [{RSSI_FLOOR}, 0]")
        if self.mode == "distance" and self.distance_m < 0:
            raise ChannelError("distance must be non-negative")

    @property
    def frame_level(self) -> bool:
        return self.mode in ("cable", "distance", "rssi")

    def describe(self) -> str:
        if self.mode == "cable":
            return "cable"
        if self.mode == "distance":
            return f"distance={self.distance_m}m"
        if self.mode == "rssi":
            return f"rssi={self.rssi_db}dB"
        return f"awgn={self.snr_db}dB"


def parse_channel_spec(text: str) -> ChannelSpec:
    """Grammar: comma-separated key=value pairs.

    Keys: mode (cable|distance|rssi|awgn), distance_m, rssi_db, snr_db, seed.
    Example: "mode=rssi,rssi_db=-88,seed=7".
    """
    kwargs: dict = {}
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise ChannelError(f"expected key=value, got {part!r}")
        key, value = (s.strip() for s in part.split("=", 1))
        if key == "mode":
            kwargs["mode"] = value
        elif key in ("distance_m", "rssi_db", "snr_db"):
            kwargs[key] = math.inf if value in ("inf", "+inf") else float(value)
        elif key == "seed":
            kwargs["seed"] = int(value)
        else:
            raise ChannelError(f"unknown channel key {key!r}")
    return ChannelSpec(**kwargs)


def _rng(spec: ChannelSpec, label: str) -> np.random.Generator:
    key = f"{spec.mode}|{spec.distance_m}|{spec.rssi_db}|{spec.snr_db}|{spec.seed}|{label}"
    digest = hashlib.sha256(key.encode()).digest()
    return np.random.default_rng(int.from_bytes(digest[:8], "big"))


def frame_loss_prob(spec: ChannelSpec) -> float:
    """Session loss probability for frame-level modes."""
    if not spec.frame_level:
        raise ChannelError("awgn operates on samples; use apply_awgn")
    if spec.mode == "cable":
        return 0.0
    if spec.mode == "distance":
        d = spec.distance_m
        pts = _DISTANCE_CURVE
        if d >= pts[-1][0]:
            return 1.0
        for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
            if d <= x1:
                return y0 + (y1 - y0) * (d - x0) / (x1 - x0)
        return 1.0
    # rssi regimes
    r = spec.rssi_db
    if r <= RSSI_DEAD:
        return 1.0
    if r < RSSI_CLEAN:  # fluctuating band: one draw per session
        lo, hi = RSSI_FLUX_RANGE
        return float(_rng(spec, "session").uniform(lo, hi))
    return 0.0


def drop_mask(spec: ChannelSpec, n: int) -> np.ndarray:
    """Boolean drop decisions for n frames; pure in (spec, seed, n)."""
    p = frame_loss_prob(spec)
    if p <= 0.0:
        return np.zeros(n, dtype=bool)
    if p >= 1.0:
        return np.ones(n, dtype=bool)
    rng = _rng(spec, "frames")
    if spec.mode == "distance":
        probs = np.clip(p + rng.normal(0.0, _DISTANCE_JITTER, n), 0.0, 1.0)
    else:
        probs = np.full(n, p)
    return rng.random(n) < probs


def apply_frames(spec: ChannelSpec, frames: list) -> list:
    """Independent per-frame drops; deterministic under (spec, seed)."""
    dropped = drop_mask(spec, len(frames))
    return [f for f, d in zip(frames, dropped) if not d]


def apply_awgn(spec: ChannelSpec, audio: AudioBuffer) -> AudioBuffer:
    """Add white Gaussian noise at snr_db relative to buffer signal power."""
    if spec.mode != "awgn":
        raise ChannelError("apply_awgn requires awgn mode")
    if math.isinf(spec.snr_db):
        return AudioBuffer(audio.samples.copy(), audio.sample_rate)
    x = audio.samples.astype(np.float64)
    sig_power = np.mean(x * x)
    noise_power = sig_power / (10 ** (spec.snr_db / 10))
    noise = _rng(spec, "awgn").normal(0.0, math.sqrt(noise_power), x.size)
    y = np.clip(np.round(x + noise), -FULL_SCALE - 1, FULL_SCALE)
    return AudioBuffer(y.astype(np.int16), audio.sample_rate)
