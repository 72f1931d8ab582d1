"""Seeded simulation of gated avalanche-detector channels.

A gate window clicks when the Poisson photon/dark-carrier count behind
it is nonzero: p = 1 - exp(-eta * (light + dark)).  An optional slow
sinusoidal modulation drives the click probability directly, standing
in for intensity or temperature drift.  Afterpulsing adds ``taps[d-1]``
to the click probability of the d-th gate after the most recent
avalanche, for d up to the tap list length.

Streams are reproducible: window i consumes exactly the i-th uniform
draw of a PCG64 generator seeded with SeedSequence([seed, channel_id]),
so a stream is fully determined by (model, n_windows, seed, channel_id)
regardless of chunking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .efficiency import ModulationProfile
from .errors import DomainError
from .extractor import DetectionStream

GENERATOR_TAG = "numpy-pcg64 seedseq=[seed,channel_id]"

_FAR_PAST = -(1 << 62)


@dataclass(frozen=True)
class SourceModel:
    """Physical parameters of one detector channel."""

    mean_photons: float = 0.0  # mean photons per pulse reaching the APD
    dark_rate: float = 0.0  # mean dark carriers per window
    efficiency: float = 1.0  # detection efficiency
    window: float = 2.5e-9  # gate width, seconds (informational)
    modulation: ModulationProfile | None = None
    afterpulse_taps: tuple[float, ...] = ()
    gate_frequency: float = 1e6  # Hz

    def __post_init__(self):
        object.__setattr__(self, "afterpulse_taps", tuple(self.afterpulse_taps))
        if self.mean_photons < 0 or self.dark_rate < 0:
            raise DomainError("photon and dark-carrier means must be >= 0")
        if not (0.0 <= self.efficiency <= 1.0):
            raise DomainError(f"efficiency must be in [0, 1], got {self.efficiency}")
        if not self.window > 0:
            raise DomainError(f"gate width must be > 0, got {self.window}")
        if not self.gate_frequency > 0:
            raise DomainError(f"gate frequency must be > 0, got {self.gate_frequency}")
        if any(t < 0 for t in self.afterpulse_taps):
            raise DomainError("afterpulse taps must be >= 0")
        max_tap = max(self.afterpulse_taps, default=0.0)
        if self.peak_probability() + max_tap > 1.0:
            raise DomainError(
                "click probability plus afterpulse tap exceeds 1; "
                "reduce intensity, modulation amplitude, or taps"
            )

    def base_probability(self) -> float:
        """Unmodulated click probability from light plus dark counts."""
        return 1.0 - math.exp(-self.efficiency * (self.mean_photons + self.dark_rate))

    def peak_probability(self) -> float:
        if self.modulation is not None:
            return self.modulation.base + self.modulation.amplitude
        return self.base_probability()

    @property
    def window_period(self) -> float:
        return 1.0 / self.gate_frequency


def click_probability(model: SourceModel, t: float = 0.0):
    """Click probability at time ``t`` (scalar or array)."""
    if model.modulation is not None:
        return np.clip(model.modulation.p_at(t), 0.0, 1.0)
    return model.base_probability()


def _resolve_afterpulses(
    clicks: np.ndarray,
    u: np.ndarray,
    p: np.ndarray | float,
    taps: tuple[float, ...],
    start_index: int,
    last_avalanche: int,
) -> int:
    """Add tap-induced clicks in place; returns the new last-avalanche index.

    Only windows with p <= u < p + max(taps) can change state, so the
    sequential pass touches a small candidate set.
    """
    max_tap = max(taps)
    depth = len(taps)
    candidates = np.nonzero((~clicks.astype(bool)) & (u < np.asarray(p) + max_tap))[0]
    # most recent unconditional click at or before i-1, local coordinates
    marks = np.where(clicks, np.arange(clicks.size, dtype=np.int64), _FAR_PAST)
    prev_click = np.concatenate(([_FAR_PAST], np.maximum.accumulate(marks)[:-1]))
    p_arr = p if isinstance(p, np.ndarray) else None
    last = last_avalanche
    for i in candidates:
        gi = start_index + int(i)
        prev = prev_click[i] + start_index if prev_click[i] != _FAR_PAST else _FAR_PAST
        ref = max(prev, last)
        d = gi - ref
        if 1 <= d <= depth:
            pi = p_arr[i] if p_arr is not None else p
            if u[i] < pi + taps[d - 1]:
                clicks[i] = 1
                last = gi
    tail = np.nonzero(clicks)[0]
    if tail.size:
        last = max(last, start_index + int(tail[-1]))
    return last


def iter_simulate(
    model: SourceModel,
    n_windows: int,
    seed: int,
    chunk_windows: int = 1 << 24,
    channel_id: int = 0,
    t0: float = 0.0,
) -> Iterator[np.ndarray]:
    """Yield the simulated stream in chunks of at most ``chunk_windows``.

    Chunk boundaries do not affect the generated windows; afterpulse
    state carries across both chunk and block boundaries.
    """
    if n_windows < 0:
        raise DomainError(f"n_windows must be >= 0, got {n_windows}")
    if chunk_windows < 1:
        raise DomainError(f"chunk_windows must be >= 1, got {chunk_windows}")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, channel_id])))
    taps = model.afterpulse_taps
    period = model.window_period
    constant_p = None if model.modulation is not None else model.base_probability()
    start = 0
    last_avalanche = _FAR_PAST
    while start < n_windows:
        count = min(chunk_windows, n_windows - start)
        u = rng.random(count)
        if constant_p is None:
            t = t0 + (start + np.arange(count, dtype=np.float64)) * period
            p = np.clip(model.modulation.p_at(t), 0.0, 1.0)
        else:
            p = constant_p
        clicks = (u < p).view(np.uint8)
        if taps:
            last_avalanche = _resolve_afterpulses(
                clicks, u, p, taps, start, last_avalanche
            )
        yield clicks
        start += count


def simulate(
    model: SourceModel,
    n_windows: int,
    seed: int,
    channel_id: int = 0,
    t0: float = 0.0,
) -> DetectionStream:
    """Simulate one channel in full; see :func:`iter_simulate`."""
    chunks = list(iter_simulate(model, n_windows, seed, channel_id=channel_id, t0=t0))
    windows = np.concatenate(chunks) if chunks else np.zeros(0, dtype=np.uint8)
    return DetectionStream(windows, channel_id=channel_id, window_period=model.window_period)


# ---------------------------------------------------------------------------
# scenario presets


@dataclass(frozen=True)
class ScenarioPreset:
    name: str
    channels: int
    light_on: bool
    description: str


SCENARIOS = {
    "a": ScenarioPreset("a", 1, True, "one modulated lit channel"),
    "b": ScenarioPreset("b", 2, True, "two modulated lit channels"),
    "c": ScenarioPreset("c", 2, False, "two dark-count-only channels"),
}

# Modulation of the lit scenarios.  The drive swings the click
# probability symmetrically about 1/2 over a 20 s period; the amplitude
# is the one consistent with the reference time-averaged yield of
# 0.3454 bits/window at block length 4.
LIT_MODULATION = ModulationProfile(
    base=0.5, amplitude=0.3, angular_frequency=0.1 * math.pi, duration=20.0
)

# Dark-carrier mean giving exactly p = 0.01 per window.
_DARK_RATE_1PCT = -math.log(0.99)


def preset(name: str) -> list[SourceModel]:
    """Source models for scenario ``a``, ``b``, or ``c``, one per channel."""
    if name not in SCENARIOS:
        raise DomainError(f"unknown scenario {name!r}; choose one of a, b, c")
    info = SCENARIOS[name]
    if info.light_on:
        model = SourceModel(
            mean_photons=math.log(1.98),  # light + dark together give p = 1/2 unmodulated
            dark_rate=_DARK_RATE_1PCT,
            efficiency=1.0,
            modulation=LIT_MODULATION,
            gate_frequency=1e6,
        )
    else:
        model = SourceModel(
            mean_photons=0.0,
            dark_rate=_DARK_RATE_1PCT,
            efficiency=1.0,
            modulation=None,
            gate_frequency=1e6,
        )
    return [model] * info.channels
