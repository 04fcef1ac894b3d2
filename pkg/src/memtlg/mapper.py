"""Compiler front half: netlist text -> placed, routed, programmable array.

Placement is greedy level-order: gates are grouped by their (unordered)
operand pair, each group claims one row whose two lines carry that pair,
and group members spread across the row's columns.  Signals produced by
gates reach consumer rows through one column line each; every such signal
is restored by a thresholding block before it drives a row line.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

from .array import (
    ArrayTopology,
    RoutingState,
    array_eval,
    build_array,
    col_line,
    out_switch_id,
    route_switch_id,
    row_line,
)
from .cell import (
    CalibratedParams,
    CellConfig,
    DEFAULT_READ_CONTEXT,
    GateKind,
    ReadSwitchContext,
    ResLevel,
    Variant,
    configure,
)
from .devices import DEFAULT_MEMRISTOR, DEFAULT_SWITCH, MemristorParams, SwitchParams
from .errors import (
    CapacityError,
    InvalidInputError,
    NetlistError,
    RoutingError,
    VerificationError,
)
from .programmer import (
    SwitchSchedule,
    apply_write,
    blank_cell_states,
    default_pulse_duration,
    write_schedule,
)

_NAME = r"[A-Za-z_][A-Za-z0-9_]*"
_RE_INPUT = re.compile(rf"^input\s+({_NAME})\s*$")
_RE_OUTPUT = re.compile(rf"^output\s+({_NAME})\s*$")
_RE_GATE = re.compile(
    rf"^({_NAME})\s*=\s*({_NAME})\s*\(\s*({_NAME})\s*,\s*({_NAME})\s*\)\s*$"
)


@dataclass(frozen=True)
class Gate:
    name: str
    kind: GateKind
    a: str
    b: str


@dataclass
class Netlist:
    inputs: list[str]
    outputs: list[str]
    gates: list[Gate]

    @property
    def gate_names(self) -> list[str]:
        return [g.name for g in self.gates]

    def evaluate(self, assignment: dict[str, int]) -> dict[str, int]:
        """Brute-force boolean evaluation (the verification oracle)."""
        values = dict(assignment)
        for g in self.gates:
            a, b = values[g.a], values[g.b]
            if g.kind is GateKind.NAND:
                v = 1 - (a & b)
            elif g.kind is GateKind.NOR:
                v = 1 - (a | b)
            else:
                v = 1 - (a ^ b)
            values[g.name] = v
        return {o: values[o] for o in self.outputs}


def parse_netlist(text: str) -> Netlist:
    """Parse the line-oriented netlist grammar.

    ``input <name>``, ``output <name>``, ``<name> = GATE(<op>, <op>)`` with
    GATE in {NAND, NOR, XNOR}; ``#`` starts a comment.  Operands must be
    declared inputs or earlier gates, which rules out cycles.
    """
    inputs: list[str] = []
    outputs: list[str] = []
    gates: list[Gate] = []
    declared: set[str] = set()

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _RE_INPUT.match(line)
        if m:
            name = m.group(1)
            if name in declared:
                raise NetlistError(f"duplicate name {name!r}", lineno, raw.find(name) + 1)
            declared.add(name)
            inputs.append(name)
            continue
        m = _RE_OUTPUT.match(line)
        if m:
            name = m.group(1)
            if name not in declared:
                raise NetlistError(
                    f"output {name!r} is not a declared signal", lineno, raw.find(name) + 1
                )
            outputs.append(name)
            continue
        m = _RE_GATE.match(line)
        if m:
            name, kind_s, op_a, op_b = m.groups()
            if name in declared:
                raise NetlistError(f"duplicate name {name!r}", lineno, raw.find(name) + 1)
            try:
                kind = GateKind(kind_s)
            except ValueError:
                raise NetlistError(
                    f"unknown gate kind {kind_s!r} (expected NAND, NOR or XNOR)",
                    lineno,
                    raw.find(kind_s) + 1,
                ) from None
            for op in (op_a, op_b):
                if op not in declared:
                    raise NetlistError(
                        f"operand {op!r} used before definition", lineno, raw.find(op) + 1
                    )
            declared.add(name)
            gates.append(Gate(name, kind, op_a, op_b))
            continue
        raise NetlistError(f"unrecognized statement {line!r}", lineno, 1)

    if not outputs:
        raise NetlistError("netlist declares no outputs", lineno if text else 1)
    return Netlist(inputs=inputs, outputs=outputs, gates=gates)


@dataclass
class Mapping:
    rows: int
    cols: int
    variant: Variant
    placements: dict[str, tuple[int, int]]           # gate -> cell
    row_pairs: dict[int, tuple[str, str]]            # row -> (line a, line b)
    cell_configs: dict[tuple[int, int], CellConfig]
    routing: RoutingState
    signal_lines: dict[str, tuple]                   # routed gate signal -> column line
    output_lines: dict[str, tuple]                   # primary output -> column line
    input_rows: dict[str, list[tuple[int, str]]]     # input name -> [(row, "a"|"b")]


def _gate_levels(netlist: Netlist) -> dict[str, int]:
    level = {name: 0 for name in netlist.inputs}
    for g in netlist.gates:
        level[g.name] = 1 + max(level[g.a], level[g.b])
    return level


def place_and_route(
    netlist: Netlist, rows: int, cols: int, variant: Variant | str = Variant.FULL
) -> Mapping:
    """Greedy level-order placement under the one-pair-per-row constraint."""
    variant = Variant(variant)
    if rows < 1 or cols < 1:
        raise InvalidInputError(f"array dimensions must be >= 1, got {rows}x{cols}")

    level = _gate_levels(netlist)
    groups: dict[tuple[str, str], list[Gate]] = {}
    group_order: list[tuple[str, str]] = []
    for g in netlist.gates:
        pair = tuple(sorted((g.a, g.b)))
        if pair not in groups:
            groups[pair] = []
            group_order.append(pair)
        groups[pair].append(g)

    # rows host groups ordered by (level, first appearance); level is well
    # defined per group because gates sharing operands share a level
    ordered = sorted(group_order, key=lambda p: (level[groups[p][0].name], group_order.index(p)))
    if len(ordered) > rows:
        overflow = groups[ordered[rows]][0].name
        raise CapacityError(
            f"{len(ordered)} distinct operand pairs exceed {rows} rows "
            f"(first unplaced gate: {overflow})",
            gate=overflow,
        )
    for pair in ordered:
        if len(groups[pair]) > cols:
            offender = groups[pair][cols].name
            raise CapacityError(
                f"{len(groups[pair])} gates share pair {pair}, array has {cols} columns "
                f"(first unplaced gate: {offender})",
                gate=offender,
            )

    consumed: set[str] = set(netlist.outputs)
    for g in netlist.gates:
        consumed.add(g.a)
        consumed.add(g.b)

    placements: dict[str, tuple[int, int]] = {}
    row_pairs: dict[int, tuple[str, str]] = {}
    cell_configs: dict[tuple[int, int], CellConfig] = {}
    line_budget: dict[int, int] = {}  # column -> lines already claimed (max 2)
    signal_lines: dict[str, tuple] = {}
    closed: set[str] = set()

    def claim_line(gate_name: str, r: int, c: int) -> tuple:
        side = line_budget.get(c, 0)
        line_budget[c] = side + 1
        closed.add(out_switch_id(r, c, side))
        return col_line(c, side)

    for r, pair in enumerate(ordered):
        row_pairs[r] = pair
        members = groups[pair]
        # gates whose outputs leave the cell need a column line; place them
        # in the columns that still have line capacity
        cols_free = sorted(range(cols), key=lambda c: (line_budget.get(c, 0), c))
        needing = [g for g in members if g.name in consumed]
        passive = [g for g in members if g.name not in consumed]
        used_cols: list[int] = []
        for g in needing:
            target = next(
                (c for c in cols_free if line_budget.get(c, 0) < 2 and c not in used_cols),
                None,
            )
            if target is None:
                raise RoutingError(
                    f"no column line available for routed gate {g.name!r}", gate=g.name
                )
            used_cols.append(target)
            placements[g.name] = (r, target)
            cell_configs[(r, target)] = configure(g.kind, variant)
            signal_lines[g.name] = claim_line(g.name, r, target)
        spare = [c for c in range(cols) if c not in used_cols]
        for g, c in zip(passive, spare):
            placements[g.name] = (r, c)
            cell_configs[(r, c)] = configure(g.kind, variant)

    # routing: feed each row line from its signal's source
    input_rows: dict[str, list[tuple[int, str]]] = {name: [] for name in netlist.inputs}
    for r, (sig_a, sig_b) in row_pairs.items():
        for which, sig in (("a", sig_a), ("b", sig_b)):
            if sig in input_rows:
                input_rows[sig].append((r, which))
                continue
            src = signal_lines.get(sig)
            if src is None:  # pragma: no cover - consumed set covers operands
                raise RoutingError(f"signal {sig!r} has no allocated line", gate=sig)
            producer_row = placements[sig][0]
            if producer_row >= r:
                raise RoutingError(
                    f"gate {sig!r} in row {producer_row} cannot feed row {r} "
                    "(feedback within or against row order)",
                    gate=sig,
                )
            closed.add(route_switch_id(src[1], src[2], r, which))

    output_lines = {o: signal_lines[o] for o in netlist.outputs if o in signal_lines}

    return Mapping(
        rows=rows,
        cols=cols,
        variant=variant,
        placements=placements,
        row_pairs=row_pairs,
        cell_configs=cell_configs,
        routing=RoutingState(frozenset(closed)),
        signal_lines=signal_lines,
        output_lines=output_lines,
        input_rows=input_rows,
    )


@dataclass
class ProgramBundle:
    mapping: Mapping
    schedules: dict[tuple[int, int], SwitchSchedule]
    pulse_duration: float


def emit_program(
    mapping: Mapping,
    device_params: MemristorParams = DEFAULT_MEMRISTOR,
    switch_params: SwitchParams = DEFAULT_SWITCH,
    pulse_duration: float | None = None,
) -> ProgramBundle:
    """One write schedule per placed cell, all sharing one pulse window."""
    duration = pulse_duration or default_pulse_duration(device_params, switch_params)
    schedules: dict[tuple[int, int], SwitchSchedule] = {}
    for cell, config in sorted(mapping.cell_configs.items()):
        blank = blank_cell_states(config.variant)
        schedules[cell] = write_schedule(
            config, blank, duration, device_params, switch_params
        )
    return ProgramBundle(mapping=mapping, schedules=schedules, pulse_duration=duration)


@dataclass
class VerifyReport:
    vectors: list[dict]
    mismatches: list[dict]
    noise_margin_v: float

    def to_json(self) -> str:
        return json.dumps(
            {
                "vectors": self.vectors,
                "mismatches": self.mismatches,
                "noise_margin_v": self.noise_margin_v,
            },
            indent=2,
            sort_keys=False,
        )


def _states_to_config(intended: CellConfig, states) -> CellConfig:
    """Rebuild the effective configuration from programmed states."""

    def level(x: float) -> ResLevel:
        return ResLevel.R_ON if x >= 0.5 else ResLevel.R_OFF

    rc1 = level(states["Rc1"].x) if intended.rc1 is not None else None
    return CellConfig(
        variant=intended.variant,
        gate=intended.gate,
        rc1=rc1,
        rc2=level(states["Rc2"].x),
        vc=intended.vc,
    )


def verify(
    bundle: ProgramBundle,
    netlist: Netlist,
    cal: CalibratedParams,
    device_params: MemristorParams = DEFAULT_MEMRISTOR,
    switch_params: SwitchParams = DEFAULT_SWITCH,
    nonideal: bool = True,
    read_context: ReadSwitchContext = DEFAULT_READ_CONTEXT,
    dt: float = 1e-8,
) -> VerifyReport:
    """Program a fresh array, evaluate every input vector, compare to oracle.

    Raises ``VerificationError`` (carrying the report and the first failing
    vector) on any mismatch.
    """
    n = len(netlist.inputs)
    if n > 16:
        raise InvalidInputError(f"verification supports at most 16 inputs, got {n}")

    mapping = bundle.mapping
    topo: ArrayTopology = build_array(mapping.rows, mapping.cols, mapping.variant)

    # program from blank and rebuild effective configs from the states
    effective: dict[tuple[int, int], CellConfig] = {}
    for cell, config in sorted(mapping.cell_configs.items()):
        states = blank_cell_states(config.variant)
        outcome = apply_write(
            states, bundle.schedules[cell], device_params, switch_params,
            dt=dt, record_waveform=False,
        )
        effective[cell] = _states_to_config(config, outcome.final_states)

    vectors: list[dict] = []
    mismatches: list[dict] = []
    worst = float("inf")
    for idx in range(2**n):
        bits = format(idx, f"0{n}b") if n else ""
        assignment = {name: int(bits[i]) for i, name in enumerate(netlist.inputs)}
        want = netlist.evaluate(assignment)

        line_inputs: dict = {}
        for name, positions in mapping.input_rows.items():
            for (r, which) in positions:
                line_inputs[row_line(r, which)] = float(assignment[name]) * cal.v_dd
        result = array_eval(
            topo,
            mapping.routing,
            effective,
            line_inputs,
            cal,
            nonideal=nonideal,
            read_context=read_context,
            switch_params=switch_params,
            device_params=device_params,
        )
        worst = min(worst, result.worst_margin)

        got: dict[str, int] = {}
        for out_name in netlist.outputs:
            line = mapping.output_lines.get(out_name)
            if line is None:  # primary output that is a primary input
                got[out_name] = assignment[out_name]
            else:
                got[out_name] = 1 if result.column_post[line] >= 0.5 * cal.v_dd else 0

        ok = got == want
        vectors.append({"vector": bits, "pass": ok, "got": got, "want": want})
        if not ok:
            mismatches.append({"vector": bits, "got": got, "want": want})

    report = VerifyReport(vectors=vectors, mismatches=mismatches, noise_margin_v=worst)
    if mismatches:
        raise VerificationError(
            f"{len(mismatches)} of {2**n} vectors mismatch "
            f"(first counterexample: {mismatches[0]['vector']})",
            counterexample=mismatches[0]["vector"],
            report=report,
        )
    return report
