"""Simulator and mapper for programmable memristive threshold-logic arrays."""

from .cell import (
    CalibratedParams,
    CalibrationBounds,
    CellConfig,
    DEFAULT_READ_CONTEXT,
    GateKind,
    ReadSwitchContext,
    ResLevel,
    Variant,
    calibrate,
    cell_read,
    cell_read_trace,
    configure,
    truth_table,
)
from .devices import (
    InverterParams,
    MemristorParams,
    MemristorState,
    SwitchParams,
    WindowKind,
    calibrate_rate_k,
    inverter_eval,
    memristor_resistance,
    memristor_step,
    switch_pass,
)
from .array import ArrayTopology, RoutingState, array_eval, build_array, threshold_block
from .mapper import (
    Mapping,
    Netlist,
    ProgramBundle,
    emit_program,
    parse_netlist,
    place_and_route,
    verify,
)
from .metrics import DEFAULT_UNIT_COSTS, CostReport, UnitCosts, area_report, power_report
from .programmer import (
    SwitchSchedule,
    WriteOutcome,
    apply_write,
    blank_cell_states,
    default_pulse_duration,
    minimum_switch_time,
    program_cell,
    write_schedule,
)
from .solver import (
    MemristorElement,
    PiecewiseConstantStimulus,
    ResistiveNetwork,
    Waveform,
    divider_eval,
    nodal_solve,
    transient_run,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
