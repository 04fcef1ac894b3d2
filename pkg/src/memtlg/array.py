"""Crossbar arrangement of cells: lines, routing switches, thresholding.

Each row carries two lines (one input pair); each cell column carries two
output-side lines.  A cell output reaches a column line through an output
switch, and a column line reaches a downstream row line through a routing
switch.  Every routed signal is restored by the producer cell's
thresholding block before it drives the consumer row line, so inter-stage
levels are rail-exact even with non-ideal switches; the raw (pre-threshold)
column voltage is kept for inspection.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from .cell import (
    CalibratedParams,
    CellConfig,
    DEFAULT_READ_CONTEXT,
    ReadSwitchContext,
    Variant,
    cell_read_trace,
)
from .devices import DEFAULT_MEMRISTOR, DEFAULT_SWITCH, MemristorParams, SwitchParams, switch_pass
from .errors import (
    ContentionError,
    InvalidInputError,
    RoutingCycleError,
    TopologyError,
)

RowLine = tuple[str, int, str]   # ("row", index, "a"|"b")
ColLine = tuple[str, int, int]   # ("col", column, side)
CellId = tuple[int, int]


def row_line(row: int, which: str) -> RowLine:
    return ("row", row, which)


def col_line(column: int, side: int) -> ColLine:
    return ("col", column, side)


def out_switch_id(r: int, c: int, side: int) -> str:
    return f"out:r{r}c{c}:s{side}"


def route_switch_id(column: int, side: int, row: int, which: str) -> str:
    return f"route:c{column}s{side}:r{row}{which}"


@dataclass(frozen=True)
class Switch:
    switch_id: str
    src: CellId | ColLine
    dst: ColLine | RowLine


@dataclass
class ArrayTopology:
    rows: int
    cols: int
    variant: Variant
    lines_per_row: int = 2
    lines_per_column: int = 2
    switches: dict[str, Switch] = field(default_factory=dict)

    @property
    def cells(self) -> list[CellId]:
        return [(r, c) for r in range(self.rows) for c in range(self.cols)]

    @property
    def row_lines(self) -> list[RowLine]:
        return [row_line(r, w) for r in range(self.rows) for w in ("a", "b")]

    @property
    def column_lines(self) -> list[ColLine]:
        return [col_line(c, s) for c in range(self.cols) for s in range(self.lines_per_column)]

    @property
    def block_count(self) -> int:
        return self.rows * self.cols  # one thresholding block per cell output


def build_array(rows: int, cols: int, variant: Variant | str = Variant.FULL) -> ArrayTopology:
    """Construct the grid with its full complement of routing switches."""
    if rows < 1 or cols < 1:
        raise InvalidInputError(f"array dimensions must be >= 1, got {rows}x{cols}")
    variant = Variant(variant)
    topo = ArrayTopology(rows=rows, cols=cols, variant=variant)
    for r in range(rows):
        for c in range(cols):
            for side in range(topo.lines_per_column):
                sid = out_switch_id(r, c, side)
                topo.switches[sid] = Switch(sid, (r, c), col_line(c, side))
    for c in range(cols):
        for side in range(topo.lines_per_column):
            for r in range(rows):
                for which in ("a", "b"):
                    sid = route_switch_id(c, side, r, which)
                    topo.switches[sid] = Switch(sid, col_line(c, side), row_line(r, which))
    return topo


@dataclass(frozen=True)
class RoutingState:
    closed: frozenset[str] = frozenset()

    def validate(self, topo: ArrayTopology) -> None:
        unknown = [s for s in self.closed if s not in topo.switches]
        if unknown:
            raise InvalidInputError(f"unknown switch ids: {sorted(unknown)}")


def threshold_block(v: float, cal: CalibratedParams) -> float:
    """Two cascaded inverters restoring a degraded level to a full rail."""
    return cal.v_dd if v > cal.v_th_block else 0.0


def dump_array(
    topo: ArrayTopology,
    routing: RoutingState | None = None,
    configs: Mapping[CellId, CellConfig] | None = None,
) -> str:
    """Structured text listing of cells, configurations and closed switches."""
    configs = configs or {}
    lines = [f"array {topo.rows}x{topo.cols} variant={topo.variant.value}"]
    for cell in topo.cells:
        cfg = configs.get(cell)
        if cfg is None:
            desc = "unconfigured"
        else:
            parts = [cfg.gate.value]
            if cfg.rc1 is not None:
                parts.append(f"rc1={cfg.rc1.value}")
            parts.append(f"rc2={cfg.rc2.value}")
            parts.append(f"vc={cfg.vc:g}")
            desc = " ".join(parts)
        lines.append(f"cell ({cell[0]},{cell[1]}): {desc}")
    closed = sorted(routing.closed) if routing else []
    lines.append(f"closed switches ({len(closed)}):")
    for sid in closed:
        sw = topo.switches[sid]
        lines.append(f"  {sid}: {sw.src} -> {sw.dst}")
    return "\n".join(lines) + "\n"


@dataclass
class ArrayEvalResult:
    column_pre: dict[ColLine, float]      # driven column lines, before restoration
    column_post: dict[ColLine, float]     # after the thresholding block
    row_line_voltages: dict[RowLine, float]
    cell_outputs: dict[CellId, float]
    worst_margin: float


def array_eval(
    topo: ArrayTopology,
    routing: RoutingState,
    configs: Mapping[CellId, CellConfig],
    inputs: Mapping[int, tuple[float, float]] | Mapping[RowLine, float],
    cal: CalibratedParams,
    nonideal: bool = True,
    read_context: ReadSwitchContext = DEFAULT_READ_CONTEXT,
    switch_params: SwitchParams = DEFAULT_SWITCH,
    device_params: MemristorParams = DEFAULT_MEMRISTOR,
) -> ArrayEvalResult:
    """Evaluate the programmed array for one input assignment.

    ``inputs`` maps either row index -> (a, b) or individual row lines to a
    voltage.  Cells evaluate in topological order of the routing; cyclic
    routing raises ``RoutingCycleError`` and a line with two closed drivers
    raises ``ContentionError``.
    """
    routing.validate(topo)

    # normalize primary inputs to per-line voltages
    line_inputs: dict[RowLine, float] = {}
    for key, val in inputs.items():
        if isinstance(key, int):
            a, b = val
            line_inputs[row_line(key, "a")] = a
            line_inputs[row_line(key, "b")] = b
        else:
            line_inputs[key] = val

    # drivers per line from closed switches
    col_driver: dict[ColLine, CellId] = {}
    row_driver: dict[RowLine, ColLine] = {}
    for sid in sorted(routing.closed):
        sw = topo.switches[sid]
        if isinstance(sw.src, tuple) and sw.src[0] == "col":
            dst = sw.dst
            if dst in row_driver or dst in line_inputs:
                raise ContentionError(f"row line {dst} driven twice (switch {sid})")
            row_driver[dst] = sw.src
        else:
            dst = sw.dst
            if dst in col_driver:
                raise ContentionError(
                    f"column line {dst} driven by cells {col_driver[dst]} and {sw.src}"
                )
            cell = sw.src
            if cell not in configs:
                raise TopologyError(f"switch {sid} routes unconfigured cell {cell}")
            col_driver[dst] = cell

    for dst, src_col in row_driver.items():
        if src_col not in col_driver:
            raise TopologyError(f"row line {dst} routed from undriven column line {src_col}")

    # dependency graph between cells through the routing
    deps: dict[CellId, set[CellId]] = {cell: set() for cell in configs}
    for dst, src_col in row_driver.items():
        consumer_row = dst[1]
        producer = col_driver[src_col]
        for (r, c) in configs:
            if r == consumer_row:
                deps[(r, c)].add(producer)

    order: list[CellId] = []
    ready = [cell for cell in sorted(deps) if not deps[cell]]
    remaining = {cell: set(d) for cell, d in deps.items() if deps[cell]}
    done: set[CellId] = set()
    while ready:
        cell = ready.pop(0)
        order.append(cell)
        done.add(cell)
        newly = []
        for other, needs in list(remaining.items()):
            needs.discard(cell)
            if not needs:
                newly.append(other)
                del remaining[other]
        ready.extend(sorted(newly))
    if remaining:
        cycle = sorted(remaining)
        raise RoutingCycleError(f"routing cycle through cells {cycle}", cycle=cycle)

    # evaluate in order
    row_volts: dict[RowLine, float] = dict(line_inputs)
    cell_out: dict[CellId, float] = {}
    col_pre: dict[ColLine, float] = {}
    col_post: dict[ColLine, float] = {}
    worst = float("inf")

    def line_value(line: RowLine) -> float:
        if line in row_volts:
            return row_volts[line]
        raise TopologyError(f"row line {line} has no driver (missing input or routing)")

    for cell in order:
        r, c = cell
        cfg = configs[cell]
        a = line_value(row_line(r, "a"))
        b = line_value(row_line(r, "b"))
        trace = cell_read_trace(
            cfg, a, b, cal,
            switches=read_context if nonideal else None,
            device_params=device_params,
        )
        cell_out[cell] = trace.out
        worst = min(worst, trace.margin)
        # drive this cell's column lines
        for line, driver in col_driver.items():
            if driver != cell:
                continue
            if nonideal:
                v_col, _ = switch_pass(trace.out, switch_params.gate_on_voltage, switch_params)
            else:
                v_col = trace.out
            col_pre[line] = v_col
            restored = threshold_block(v_col, cal)
            col_post[line] = restored
            worst = min(worst, abs(v_col - cal.v_th_block))
            # feed restored level to any consumer row lines
            for dst, src_col in row_driver.items():
                if src_col == line:
                    if nonideal:
                        v_row, _ = switch_pass(
                            v_col, switch_params.gate_on_voltage, switch_params
                        )
                        v_row = threshold_block(v_row, cal)
                    else:
                        v_row = restored
                    row_volts[dst] = v_row

    return ArrayEvalResult(
        column_pre=col_pre,
        column_post=col_post,
        row_line_voltages=row_volts,
        cell_outputs=cell_out,
        worst_margin=worst,
    )
