"""Write operations: switch schedules and pulsed memristor programming.

Each control-memristor transition closes a dedicated pair of write
switches which isolates that memristor between the pulse source and
ground.  Transitions for both control memristors share one pulse interval
(single-cycle programming); memristors not named in a schedule see 0 V and
therefore drift by exactly zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .cell import CellConfig, ResLevel, Variant
from .devices import (
    DEFAULT_MEMRISTOR,
    DEFAULT_SWITCH,
    MemristorParams,
    MemristorState,
    SwitchParams,
    memristor_resistance,
    memristor_step,
    switch_pass,
)
from .errors import InvalidInputError, WriteError
from .solver import Waveform

V_SC_ON = 2.5
V_SC_OFF = 0.0

FULL_CELL_MEMRISTORS = ("R1", "R2", "R3", "R4", "Rc1", "Rc2")
REDUCED_CELL_MEMRISTORS = ("R3", "R4", "Rc2")

# switch pairs per (memristor, direction); "set" drives r_off -> r_on with
# positive polarity, "reset" the reverse through the alternate pair
_TRANSITION_SWITCHES = {
    ("Rc1", "set"): ("S_w4", "S_w7"),
    ("Rc1", "reset"): ("S_w5", "S_w6"),
    ("Rc2", "set"): ("S_w10", "S_w13"),
    ("Rc2", "reset"): ("S_w11", "S_w12"),
}


def cell_memristor_names(variant: Variant) -> tuple[str, ...]:
    return FULL_CELL_MEMRISTORS if variant is Variant.FULL else REDUCED_CELL_MEMRISTORS


def blank_cell_states(variant: Variant) -> dict[str, MemristorState]:
    """Factory state: every memristor at high resistance (x = 0)."""
    return {name: MemristorState(0.0) for name in cell_memristor_names(variant)}


def target_states(config: CellConfig) -> dict[str, float]:
    """Goal state per memristor for a configuration (fixed R1..R4 stay 0)."""
    goals = {name: 0.0 for name in cell_memristor_names(config.variant)}
    if config.rc1 is not None:
        goals["Rc1"] = 1.0 if config.rc1 is ResLevel.R_ON else 0.0
    goals["Rc2"] = 1.0 if config.rc2 is ResLevel.R_ON else 0.0
    return goals


@dataclass(frozen=True)
class SwitchEvent:
    switch_id: str
    gate_v: float
    t_start: float
    t_end: float

    def __post_init__(self):
        if not (self.t_start < self.t_end):
            raise InvalidInputError(
                f"switch {self.switch_id}: need t_start < t_end, got "
                f"[{self.t_start}, {self.t_end}]"
            )


@dataclass(frozen=True)
class ScheduledWrite:
    memristor: str
    polarity: float  # +1 set (towards r_on), -1 reset
    switches: tuple[str, str]


@dataclass
class SwitchSchedule:
    """Closed write switches and the shared pulse interval."""

    events: list[SwitchEvent] = field(default_factory=list)
    writes: list[ScheduledWrite] = field(default_factory=list)
    v_sc: float = V_SC_ON
    pulse: tuple[float, float] = (0.0, 0.0)

    @property
    def is_empty(self) -> bool:
        return not self.writes

    def csv_rows(self) -> list[str]:
        rows = ["switch,gate_v,t_start,t_end"]
        for ev in self.events:
            rows.append(f"{ev.switch_id},{ev.gate_v:.10g},{ev.t_start:.10g},{ev.t_end:.10g}")
        return rows


def minimum_switch_time(
    device_params: MemristorParams = DEFAULT_MEMRISTOR,
    switch_params: SwitchParams = DEFAULT_SWITCH,
    v_sc: float = V_SC_ON,
    dt: float = 1e-8,
    t_limit: float = 1e-3,
) -> float:
    """Time for a full 0 -> 1 transition on the write path at this pulse level."""
    v_eff, r_series = switch_pass(v_sc, v_sc, switch_params)
    state = MemristorState(0.0)
    t = 0.0
    while state.x < 1.0:
        if t >= t_limit:
            raise WriteError(f"no full transition within {t_limit} s at v_sc={v_sc}")
        r = memristor_resistance(state, device_params)
        v_m = v_eff * r / (r + 2.0 * r_series)
        state = memristor_step(state, v_m, dt, device_params)
        t += dt
    return t


def default_pulse_duration(
    device_params: MemristorParams = DEFAULT_MEMRISTOR,
    switch_params: SwitchParams = DEFAULT_SWITCH,
    v_sc: float = V_SC_ON,
    dt: float = 1e-8,
) -> float:
    """Twice the calibrated minimum full-switch time (safety margin)."""
    return 2.0 * minimum_switch_time(device_params, switch_params, v_sc, dt)


def write_schedule(
    target: CellConfig,
    current: dict[str, MemristorState],
    pulse_duration: float | None = None,
    device_params: MemristorParams = DEFAULT_MEMRISTOR,
    switch_params: SwitchParams = DEFAULT_SWITCH,
) -> SwitchSchedule:
    """Switch closures realizing ``target`` from the current cell states.

    Both control-memristor transitions share the same interval (parallel
    update); a memristor already at its target level produces no entries.
    """
    duration = pulse_duration or default_pulse_duration(device_params, switch_params)
    goals = target_states(target)
    writes: list[ScheduledWrite] = []
    events: list[SwitchEvent] = []
    for name in ("Rc1", "Rc2"):
        if name not in goals:
            continue
        goal = goals[name]
        level_now = 1.0 if current[name].x >= 0.5 else 0.0
        if level_now == goal:
            continue
        direction = "set" if goal == 1.0 else "reset"
        pair = _TRANSITION_SWITCHES[(name, direction)]
        polarity = 1.0 if direction == "set" else -1.0
        writes.append(ScheduledWrite(name, polarity, pair))
        for sw in pair:
            events.append(SwitchEvent(sw, V_SC_ON, 0.0, duration))
    pulse = (0.0, duration) if writes else (0.0, 0.0)
    return SwitchSchedule(events=events, writes=writes, v_sc=V_SC_ON, pulse=pulse)


@dataclass
class WriteOutcome:
    """Result of one programming pulse."""

    final_states: dict[str, MemristorState]
    drift: dict[str, float]  # |delta x| of memristors not in the schedule
    achieved: dict[str, float]  # final x per scheduled target
    goals: dict[str, float]
    waveform: Waveform
    pulse: tuple[float, float]


def _integrate_write_path(
    state: MemristorState,
    polarity: float,
    duration: float,
    device_params: MemristorParams,
    switch_params: SwitchParams,
    v_sc: float,
    dt: float,
    record: list[float] | None = None,
    record_v: list[float] | None = None,
) -> MemristorState:
    # closed pair: source -> switch -> memristor -> switch -> ground; the
    # clamped source and the two on-resistances form a divider with the
    # memristor, the same algebra the network solver produces for this path
    v_eff, r_series = switch_pass(v_sc, v_sc, switch_params)
    v_src = polarity * v_eff
    n = int(round(duration / dt))
    for _ in range(n):
        if record is not None:
            record.append(state.x)
        r = memristor_resistance(state, device_params)
        v_m = v_src * r / (r + 2.0 * r_series)
        if record_v is not None:
            record_v.append(v_m)
        state = memristor_step(state, v_m, dt, device_params)
    return state


def apply_write(
    states: dict[str, MemristorState],
    schedule: SwitchSchedule,
    device_params: MemristorParams = DEFAULT_MEMRISTOR,
    switch_params: SwitchParams = DEFAULT_SWITCH,
    pulse_duration: float | None = None,
    dt: float = 1e-8,
    tolerance: float = 0.01,
    record_waveform: bool = True,
) -> WriteOutcome:
    """Simulate one programming pulse and check every target lands on goal.

    Raises ``WriteError`` (reporting achieved states) if any scheduled
    memristor misses its goal by more than ``tolerance`` -- the signature of
    an insufficient pulse duration.
    """
    if dt <= 0.0 or not math.isfinite(dt):
        raise InvalidInputError(f"dt must be finite and > 0, got {dt!r}")
    duration = pulse_duration if pulse_duration is not None else (
        schedule.pulse[1] - schedule.pulse[0]
    )
    scheduled = {w.memristor: w for w in schedule.writes}
    finals: dict[str, MemristorState] = {}
    drift: dict[str, float] = {}
    achieved: dict[str, float] = {}
    goals: dict[str, float] = {}
    channels: dict[str, list[float]] = {}

    for name, state in states.items():
        w = scheduled.get(name)
        if w is None:
            finals[name] = state  # 0 V across it: bit-identical
            drift[name] = 0.0
            continue
        rec: list[float] | None = [] if record_waveform else None
        rec_v: list[float] | None = [] if record_waveform else None
        end = _integrate_write_path(
            state, w.polarity, duration, device_params, switch_params,
            schedule.v_sc, dt, rec, rec_v,
        )
        finals[name] = end
        achieved[name] = end.x
        goals[name] = 1.0 if w.polarity > 0 else 0.0
        if record_waveform:
            channels[f"x:{name}"] = rec
            channels[f"v:{name}"] = rec_v

    misses = {
        name: achieved[name]
        for name in achieved
        if abs(achieved[name] - goals[name]) > tolerance
    }
    if misses:
        raise WriteError(
            "insufficient pulse duration "
            f"({duration:.3g} s): targets missed tolerance {tolerance}: "
            + ", ".join(f"{n} reached x={x:.6f}" for n, x in sorted(misses.items())),
            achieved=achieved,
        )

    waveform = Waveform(dt=dt, channels=channels) if channels else Waveform(dt=dt, channels={})
    return WriteOutcome(
        final_states=finals,
        drift=drift,
        achieved=achieved,
        goals=goals,
        waveform=waveform,
        pulse=(0.0, duration),
    )


def program_cell(
    config: CellConfig,
    current: dict[str, MemristorState] | None = None,
    device_params: MemristorParams = DEFAULT_MEMRISTOR,
    switch_params: SwitchParams = DEFAULT_SWITCH,
    pulse_duration: float | None = None,
    dt: float = 1e-8,
    record_waveform: bool = False,
) -> tuple[SwitchSchedule, WriteOutcome]:
    """Schedule and apply the write bringing a cell to ``config``."""
    states = current if current is not None else blank_cell_states(config.variant)
    schedule = write_schedule(config, states, pulse_duration, device_params, switch_params)
    outcome = apply_write(
        states, schedule, device_params, switch_params,
        dt=dt, record_waveform=record_waveform,
    )
    return schedule, outcome
