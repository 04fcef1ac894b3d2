"""Behavioral models for the three physical primitives.

Threshold-type memristor (internal state x in [0,1], linear resistance law),
single-NMOS pass switch (source-follower clamp on highs plus series
resistance), and a CMOS inverter treated as an ideal comparator.

The memristor obeys a threshold-type state equation: below the write
threshold the state is frozen exactly (reads never disturb); above it the
state moves at a rate proportional to the overdrive, shaped by a window
function, and is clamped to [0, 1] after every step.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import InvalidInputError


class WindowKind(str, enum.Enum):
    """State-motion window for the memristor ODE.

    RECTANGULAR_CLIP moves at full rate everywhere and relies on clamping,
    so full transitions complete exactly.  PARABOLIC softens the landing on
    the far rail (motion ~ 1 - x^2 towards x=1, 1 - (1-x)^2 towards x=0),
    so full transitions are asymptotic.
    """

    RECTANGULAR_CLIP = "rectangular-clip"
    PARABOLIC = "parabolic"


@dataclass(frozen=True)
class MemristorParams:
    r_on: float = 3_000.0
    r_off: float = 60_000.0
    v_write_threshold: float = 1.2
    rate_k: float = 125_000.0  # state units per (volt * second) of overdrive
    window_kind: WindowKind = WindowKind.RECTANGULAR_CLIP

    def __post_init__(self):
        if not (0.0 < self.r_on < self.r_off):
            raise InvalidInputError(
                f"need 0 < r_on < r_off, got r_on={self.r_on}, r_off={self.r_off}"
            )
        if self.v_write_threshold <= 0.0:
            raise InvalidInputError("v_write_threshold must be > 0")
        if self.rate_k <= 0.0:
            raise InvalidInputError("rate_k must be > 0")


@dataclass(frozen=True)
class MemristorState:
    """Normalized internal state; x = 1 means r_on, x = 0 means r_off."""

    x: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.x <= 1.0) or not math.isfinite(self.x):
            raise InvalidInputError(f"state x must lie in [0, 1], got {self.x}")


@dataclass(frozen=True)
class SwitchParams:
    r_on_series: float = 100.0
    r_off_series: float = 1e7
    v_tn: float = 0.4  # pass-transistor threshold drop on high levels
    gate_on_voltage: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.r_on_series < self.r_off_series):
            raise InvalidInputError("need 0 < r_on_series < r_off_series")
        if self.v_tn < 0.0:
            raise InvalidInputError("v_tn must be >= 0")


@dataclass(frozen=True)
class InverterParams:
    v_threshold: float
    v_dd: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.v_threshold < self.v_dd):
            raise InvalidInputError(
                f"need 0 < v_threshold < v_dd, got {self.v_threshold} vs {self.v_dd}"
            )


def memristor_resistance(state: MemristorState, params: MemristorParams) -> float:
    """Linear interpolation between the two calibrated endpoints."""
    return params.r_on * state.x + params.r_off * (1.0 - state.x)


def _window(x: float, direction: float, kind: WindowKind) -> float:
    if kind is WindowKind.RECTANGULAR_CLIP:
        return 1.0
    # parabolic: soft landing on the rail the state is moving towards
    if direction > 0.0:
        return 1.0 - x * x
    return 1.0 - (1.0 - x) * (1.0 - x)


def memristor_step(
    state: MemristorState, v: float, dt: float, params: MemristorParams
) -> MemristorState:
    """Advance the state by one explicit Euler step under voltage ``v``.

    At or below the write threshold the same state object is returned, so
    read stimuli leave the state bit-identical rather than approximately
    unchanged.
    """
    if not math.isfinite(v):
        raise InvalidInputError(f"non-finite voltage {v!r}")
    if not math.isfinite(dt) or dt <= 0.0:
        raise InvalidInputError(f"dt must be finite and > 0, got {dt!r}")
    if abs(v) <= params.v_write_threshold:
        return state
    sign = 1.0 if v > 0.0 else -1.0
    rate = params.rate_k * (abs(v) - params.v_write_threshold)
    dx = sign * rate * _window(state.x, sign, params.window_kind) * dt
    x = state.x + dx
    if x < 0.0:
        x = 0.0
    elif x > 1.0:
        x = 1.0
    return MemristorState(x)


def switch_pass(
    v_in: float, gate_v: float, params: SwitchParams
) -> tuple[float, float]:
    """Evaluate the single-transistor pass switch.

    Returns ``(v_effective, r_series)``.  With the gate driven (at least
    half the nominal on-voltage) the switch is ON: positive inputs are
    clamped at ``gate_v - v_tn`` (source-follower degradation) and the
    small on-resistance is in series.  Otherwise the switch is OFF and the
    large series resistance provides the isolation; the voltage itself is
    passed through unmodified.
    """
    if gate_v >= 0.5 * params.gate_on_voltage:
        if v_in >= 0.0:
            v_eff = min(v_in, gate_v - params.v_tn)
        else:
            v_eff = v_in  # NMOS passes low levels undegraded
        return v_eff, params.r_on_series
    return v_in, params.r_off_series


def inverter_eval(v_in: float, params: InverterParams) -> float:
    """Ideal comparator: v_dd below threshold, 0 at or above (tie-break low)."""
    return params.v_dd if v_in < params.v_threshold else 0.0


def calibrate_rate_k(
    params: MemristorParams | None = None,
    v_effective: float = 2.0,
    duration: float = 10e-6,
    steps: int = 100_000,
    tol: float = 1e-6,
) -> float:
    """Find the smallest rate constant completing a full 0 -> 1 transition.

    Bisects ``rate_k`` so that a constant ``v_effective`` pulse of the given
    duration just drives the state from 0 to 1 under a fine-step reference
    integration.  With the rectangular window the answer has the closed form
    1 / ((v_effective - v_th) * duration); the bisection exists so that the
    constant stays honest if the window or the ODE shape changes.
    """
    base = params or MemristorParams()
    if v_effective <= base.v_write_threshold:
        raise InvalidInputError("v_effective must exceed the write threshold")
    dt = duration / steps

    def final_x(rate: float) -> float:
        p = MemristorParams(
            r_on=base.r_on,
            r_off=base.r_off,
            v_write_threshold=base.v_write_threshold,
            rate_k=rate,
            window_kind=base.window_kind,
        )
        s = MemristorState(0.0)
        for _ in range(steps):
            s = memristor_step(s, v_effective, dt, p)
            if s.x >= 1.0:
                return 1.0
        return s.x

    lo, hi = 1.0, 1e9
    if final_x(hi) < 1.0:
        raise InvalidInputError("upper bisection bound does not complete a transition")
    while (hi - lo) / hi > tol:
        mid = 0.5 * (lo + hi)
        if final_x(mid) >= 1.0:
            hi = mid
        else:
            lo = mid
    return hi


DEFAULT_MEMRISTOR = MemristorParams()
DEFAULT_SWITCH = SwitchParams()
