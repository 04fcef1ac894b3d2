"""The programmable threshold-logic cell.

Reference topology
------------------

The cell is a two-stage resistive threshold network evaluated feedforward
(each comparator output acts as an ideal source for the next stage):

* stage 1: inputs A and B reach a summing node through fixed
  high-resistance branches (R1 = R2 = r_off); the control voltage Vc
  biases the node through the first control memristor Rc1 (full variant)
  or through a fixed r_off branch (reduced variant).  An inverting
  comparator with threshold ``v_th1`` produces the intermediate signal X.
* stage 2: A and B again sum through fixed branches (R3 = R4 = r_off),
  Vc biases through a fixed r_off branch, and X couples in through a
  calibrated conductance ``g_x`` in series with the second control
  memristor Rc2.  A second comparator with threshold ``v_th2`` drives the
  output.

Programming Rc1 high (NAND row) biases the first node so far up that X is
forced low for every input, which turns the second stage into a plain
threshold gate.  Programming Rc2 low (XNOR rows) strengthens the X
coupling enough to fold the second stage's response, which is what makes
the non-monotone gate realizable.  Routing the coupling *through* Rc2 is a
deliberate behavioral choice: wiring Vc through Rc2 instead (with X on a
plain parallel branch) admits no shared threshold assignment at all for
the three gates, at any coupling conductance in bounds -- the off-state
node levels of the NOR row and the on-state levels of the XNOR row end up
on incompatible sides of every candidate threshold.

The reduced variant keeps the (unprogrammable) first stage: a single
divider followed by one comparator is a linear threshold gate and can
never realize XNOR, so "reduced" here means reduced *programming* (one
programmable memristor, fewer write switches), not a shorter signal path.

Calibration fixes (v_th1, v_th2, g_x) jointly for all six configurations.
When the read switches are in the path their voltage drop shifts every
node level; the cell compensates the way the hardware does, by lowering
the comparator thresholds in that context (``v_th1_sw``, ``v_th2_sw``),
and the calibration derives those alongside the ideal-path values.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .devices import (
    DEFAULT_MEMRISTOR,
    InverterParams,
    MemristorParams,
    SwitchParams,
    inverter_eval,
    switch_pass,
)
from .errors import CalibrationError, InvalidInputError, NotCalibratedError
from .solver import divider_eval


class GateKind(str, enum.Enum):
    NAND = "NAND"
    NOR = "NOR"
    XNOR = "XNOR"


class Variant(str, enum.Enum):
    FULL = "full"
    REDUCED = "reduced"


class ResLevel(str, enum.Enum):
    R_ON = "r_on"
    R_OFF = "r_off"


GATE_TRUTH = {
    GateKind.NAND: (1, 1, 1, 0),
    GateKind.NOR: (1, 0, 0, 0),
    GateKind.XNOR: (1, 0, 0, 1),
}

INPUT_VECTORS = ((0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0))


@dataclass(frozen=True)
class CellConfig:
    variant: Variant
    gate: GateKind
    rc1: ResLevel | None  # absent for the reduced variant
    rc2: ResLevel
    vc: float

    def label(self) -> str:
        return f"{self.variant.value}/{self.gate.value}"


# configuration tables: (rc1, rc2, vc) for the full variant, (rc2, vc) reduced
_FULL_TABLE = {
    GateKind.NAND: (ResLevel.R_ON, ResLevel.R_OFF, 0.8),
    GateKind.NOR: (ResLevel.R_OFF, ResLevel.R_OFF, 0.8),
    GateKind.XNOR: (ResLevel.R_OFF, ResLevel.R_ON, 0.8),
}
_REDUCED_TABLE = {
    GateKind.NAND: (ResLevel.R_OFF, 1.0),
    GateKind.NOR: (ResLevel.R_OFF, 0.8),
    GateKind.XNOR: (ResLevel.R_ON, 0.8),
}


def configure(gate: GateKind | str, variant: Variant | str = Variant.FULL) -> CellConfig:
    """Look up the control-memristor states and Vc level for a gate."""
    gate = GateKind(gate)
    variant = Variant(variant)
    if variant is Variant.FULL:
        rc1, rc2, vc = _FULL_TABLE[gate]
        return CellConfig(variant, gate, rc1, rc2, vc)
    rc2, vc = _REDUCED_TABLE[gate]
    return CellConfig(variant, gate, None, rc2, vc)


def all_configs() -> list[CellConfig]:
    return [configure(g, v) for v in Variant for g in GateKind]


@dataclass(frozen=True)
class ReadSwitchContext:
    """Pass-switch parameters on the cell's read paths.

    The first-stage input pair is gated at 1.0 V, the second-stage pair at
    0.7 V; the second-stage transistors are low-threshold devices so both
    pairs clamp a full rail to the same degraded high (the read transistors
    are sized wide precisely to keep this drop small).  The coupling branch
    from the first comparator passes its own isolation switch.
    """

    stage1_switch: SwitchParams = SwitchParams(v_tn=0.35)
    stage1_gate_v: float = 1.0
    stage2_switch: SwitchParams = SwitchParams(v_tn=0.05)
    stage2_gate_v: float = 0.7
    coupling_switch: SwitchParams = SwitchParams(v_tn=0.35)
    coupling_gate_v: float = 1.0


DEFAULT_READ_CONTEXT = ReadSwitchContext()


@dataclass(frozen=True)
class CalibratedParams:
    """Shared comparator thresholds and coupling conductance.

    ``v_th1_sw``/``v_th2_sw`` are the lowered thresholds used when the read
    switches are in the path; ``noise_margin`` is the worst-case distance
    from any comparator input to its threshold over every configuration,
    input vector and context seen during calibration.
    """

    v_th1: float
    v_th2: float
    v_th1_sw: float
    v_th2_sw: float
    g_x: float
    v_th_block: float = 0.4
    noise_margin: float = 0.0
    v_dd: float = 1.0

    def as_dict(self) -> dict[str, float]:
        return {
            "v_th1": self.v_th1,
            "v_th2": self.v_th2,
            "v_th1_sw": self.v_th1_sw,
            "v_th2_sw": self.v_th2_sw,
            "g_x": self.g_x,
            "v_th_block": self.v_th_block,
            "noise_margin": self.noise_margin,
            "v_dd": self.v_dd,
        }


@dataclass(frozen=True)
class CellTopology:
    """Elaborated branch conductances for one configuration.

    ``g_in1``/``g_in2`` are the per-input branch conductances (series switch
    resistance folded in when a read context is present), ``g_vc1`` the
    stage-1 bias branch, ``g_vc2`` the fixed stage-2 bias branch and
    ``g_couple`` the comparator-to-stage-2 coupling (g_x in series with Rc2).
    """

    config: CellConfig
    g_in1: float
    g_vc1: float
    g_in2: float
    g_vc2: float
    g_couple: float
    context: ReadSwitchContext | None


def _level_resistance(level: ResLevel, params: MemristorParams) -> float:
    return params.r_on if level is ResLevel.R_ON else params.r_off


def build_cell_topology(
    config: CellConfig,
    g_x: float,
    device_params: MemristorParams = DEFAULT_MEMRISTOR,
    context: ReadSwitchContext | None = None,
) -> CellTopology:
    if g_x <= 0.0 or not math.isfinite(g_x):
        raise InvalidInputError(f"g_x must be finite and > 0, got {g_x!r}")
    r_off = device_params.r_off
    rs1 = context.stage1_switch.r_on_series if context else 0.0
    rs2 = context.stage2_switch.r_on_series if context else 0.0
    rsx = context.coupling_switch.r_on_series if context else 0.0
    rc1_r = _level_resistance(config.rc1, device_params) if config.rc1 else r_off
    rc2_r = _level_resistance(config.rc2, device_params)
    return CellTopology(
        config=config,
        g_in1=1.0 / (r_off + rs1),
        g_vc1=1.0 / rc1_r,
        g_in2=1.0 / (r_off + rs2),
        g_vc2=1.0 / r_off,
        g_couple=1.0 / (1.0 / g_x + rc2_r + rsx),
        context=context,
    )


@dataclass(frozen=True)
class CellReadTrace:
    """Intermediate node voltages of one read, for inspection and tests."""

    n1: float
    x: float
    n2: float
    out: float
    margin: float  # min comparator-input distance of this read


def _effective_input(v: float, gate_v: float, sw: SwitchParams | None) -> float:
    if sw is None:
        return v
    v_eff, _ = switch_pass(v, gate_v, sw)
    return v_eff


def cell_read_trace(
    config: CellConfig,
    a: float,
    b: float,
    cal: CalibratedParams,
    switches: ReadSwitchContext | None = None,
    device_params: MemristorParams = DEFAULT_MEMRISTOR,
) -> CellReadTrace:
    """Staged evaluation returning all intermediate node voltages."""
    if cal is None:
        raise NotCalibratedError("cell_read requires calibrated parameters")
    for name, v in (("a", a), ("b", b)):
        if not (0.0 <= v <= cal.v_dd) or not math.isfinite(v):
            raise InvalidInputError(f"input {name}={v!r} outside [0, {cal.v_dd}]")

    topo = build_cell_topology(config, cal.g_x, device_params, switches)
    v_th1 = cal.v_th1_sw if switches else cal.v_th1
    v_th2 = cal.v_th2_sw if switches else cal.v_th2

    ctx = switches
    a1 = _effective_input(a, ctx.stage1_gate_v if ctx else 0.0, ctx.stage1_switch if ctx else None)
    b1 = _effective_input(b, ctx.stage1_gate_v if ctx else 0.0, ctx.stage1_switch if ctx else None)
    n1 = divider_eval([(a1, topo.g_in1), (b1, topo.g_in1), (config.vc, topo.g_vc1)])
    x = inverter_eval(n1, InverterParams(v_th1, cal.v_dd))

    a2 = _effective_input(a, ctx.stage2_gate_v if ctx else 0.0, ctx.stage2_switch if ctx else None)
    b2 = _effective_input(b, ctx.stage2_gate_v if ctx else 0.0, ctx.stage2_switch if ctx else None)
    x_eff = _effective_input(x, ctx.coupling_gate_v if ctx else 0.0, ctx.coupling_switch if ctx else None)
    n2 = divider_eval(
        [(a2, topo.g_in2), (b2, topo.g_in2), (config.vc, topo.g_vc2), (x_eff, topo.g_couple)]
    )
    out = inverter_eval(n2, InverterParams(v_th2, cal.v_dd))
    margin = min(abs(n1 - v_th1), abs(n2 - v_th2))
    return CellReadTrace(n1=n1, x=x, n2=n2, out=out, margin=margin)


def cell_read(
    config: CellConfig,
    a: float,
    b: float,
    cal: CalibratedParams,
    switches: ReadSwitchContext | None = None,
    device_params: MemristorParams = DEFAULT_MEMRISTOR,
) -> float:
    """Cell output voltage for one input pair (pure; never mutates state)."""
    return cell_read_trace(config, a, b, cal, switches, device_params).out


def truth_table(
    config: CellConfig,
    cal: CalibratedParams,
    switches: ReadSwitchContext | None = None,
    device_params: MemristorParams = DEFAULT_MEMRISTOR,
) -> tuple[int, int, int, int]:
    """Thresholded outputs for inputs (00, 01, 10, 11)."""
    outs = []
    for a, b in INPUT_VECTORS:
        v = cell_read(config, a * cal.v_dd, b * cal.v_dd, cal, switches, device_params)
        outs.append(1 if v >= 0.5 * cal.v_dd else 0)
    return tuple(outs)


# --------------------------------------------------------------------------
# calibration


@dataclass(frozen=True)
class CalibrationBounds:
    v_th_lo: float = 0.05
    v_th_hi: float = 0.95
    g_x_lo: float | None = None  # defaults to 1/r_off
    g_x_hi: float | None = None  # defaults to 1/r_on


def _clamped_high(gate_v: float, sw: SwitchParams | None, v_dd: float) -> float:
    if sw is None:
        return v_dd
    v_eff, _ = switch_pass(v_dd, gate_v, sw)
    return v_eff


def _config_levels(
    config: CellConfig,
    g_x: float,
    device: MemristorParams,
    context: ReadSwitchContext | None,
    v_dd: float,
):
    """Stage-1 levels per input sum s=0,1,2 and stage-2 levels per (s, X)."""
    topo = build_cell_topology(config, g_x, device, context)
    hi1 = _clamped_high(context.stage1_gate_v, context.stage1_switch, v_dd) if context else v_dd
    hi2 = _clamped_high(context.stage2_gate_v, context.stage2_switch, v_dd) if context else v_dd
    hix = _clamped_high(context.coupling_gate_v, context.coupling_switch, v_dd) if context else v_dd

    s1 = []
    s2 = []
    for s in (0, 1, 2):
        a1 = hi1 if s >= 1 else 0.0
        b1 = hi1 if s >= 2 else 0.0
        s1.append(divider_eval([(a1, topo.g_in1), (b1, topo.g_in1), (config.vc, topo.g_vc1)]))
        a2 = hi2 if s >= 1 else 0.0
        b2 = hi2 if s >= 2 else 0.0
        per_x = []
        for xv in (0.0, hix):
            per_x.append(
                divider_eval(
                    [(a2, topo.g_in2), (b2, topo.g_in2), (config.vc, topo.g_vc2), (xv, topo.g_couple)]
                )
            )
        s2.append(tuple(per_x))
    return s1, s2


_S_TO_VECTORS = {0: ("00",), 1: ("01", "10"), 2: ("11",)}


def _context_best(configs, g_x, device, context, bounds, v_dd):
    """Best (margin, v_th1, v_th2, violations) for one context at fixed g_x.

    Enumerates candidate v_th1 cells between consecutive stage-1 levels;
    within a cell the X patterns are constant, so the feasible v_th2 window
    is exact and the optimum sits at the midpoints.
    """
    levels = {}
    for cfg in configs:
        levels[cfg.label()] = _config_levels(cfg, g_x, device, context, v_dd)

    all_s1 = sorted({round(v, 15) for s1, _ in levels.values() for v in s1})
    lo, hi = bounds.v_th_lo, bounds.v_th_hi
    if hi < lo:
        raise InvalidInputError("v_th bounds are inverted")
    if hi == lo:
        candidates = [lo]
    else:
        edges = [lo] + [v for v in all_s1 if lo < v < hi] + [hi]
        candidates = [0.5 * (a + b) for a, b in zip(edges, edges[1:]) if b > a]

    best = None
    best_bad = None
    for v_th1 in candidates:
        m1 = min(abs(v_th1 - v) for s1, _ in levels.values() for v in s1)
        lower, upper = lo, hi
        lower_tag, upper_tag = None, None
        for cfg in configs:
            s1, s2 = levels[cfg.label()]
            want = GATE_TRUTH[cfg.gate]
            for s in (0, 1, 2):
                x = 1 if s1[s] < v_th1 else 0
                n2 = s2[s][x]
                vec = _S_TO_VECTORS[s][0]
                w = want[0] if s == 0 else (want[1] if s == 1 else want[3])
                if w == 1:  # out=1 requires n2 < v_th2
                    if n2 > lower:
                        lower, lower_tag = n2, (cfg.label(), vec)
                else:  # out=0 requires n2 >= v_th2
                    if n2 < upper:
                        upper, upper_tag = n2, (cfg.label(), vec)
        if hi == lo:
            v_th2 = lo
            m2 = min(v_th2 - lower, upper - v_th2)
        elif lower >= upper:
            m2 = 0.5 * (upper - lower)
            v_th2 = 0.5 * (lower + upper)
        else:
            v_th2 = 0.5 * (lower + upper)
            m2 = 0.5 * (upper - lower)
        margin = min(m1, m2)
        if margin <= 0.0:
            gap = -margin
            if best_bad is None or gap < best_bad[0]:
                best_bad = (gap, v_th1, lower_tag, upper_tag)
            continue
        if best is None or margin > best[0]:
            best = (margin, v_th1, v_th2)
    return best, best_bad


def _violations_at(configs, params, device, context, v_dd):
    out = []
    for cfg in configs:
        want = GATE_TRUTH[cfg.gate]
        got = truth_table(cfg, params, context, device)
        for i, (w, g) in enumerate(zip(want, got)):
            if w != g:
                vec = format(i, "02b")
                tag = "switched" if context else "ideal"
                out.append((cfg.label(), vec, f"{tag}: got {g}, want {w}"))
    return out


def calibrate(
    device_params: MemristorParams = DEFAULT_MEMRISTOR,
    bounds: CalibrationBounds | None = None,
    context: ReadSwitchContext | None = DEFAULT_READ_CONTEXT,
    v_dd: float = 1.0,
    v_th_block: float = 0.4,
    routing_switch: SwitchParams | None = None,
) -> CalibratedParams:
    """Jointly calibrate thresholds and coupling for all six configurations.

    Deterministic grid-then-refine search over the coupling conductance; at
    each grid point the threshold optimum is computed exactly from the node
    levels.  Maximizes worst-case noise margin over both the ideal path and
    (when ``context`` is given) the read-switch path.  Raises
    ``CalibrationError`` listing violated (config, vector) constraints when
    no feasible point exists.
    """
    bounds = bounds or CalibrationBounds()
    configs = all_configs()
    g_lo = bounds.g_x_lo if bounds.g_x_lo is not None else 1.0 / device_params.r_off
    g_hi = bounds.g_x_hi if bounds.g_x_hi is not None else 1.0 / device_params.r_on
    if not (0.0 < g_lo <= g_hi):
        raise InvalidInputError("g_x bounds must satisfy 0 < lo <= hi")
    q_lo, q_hi = 1.0 / g_hi, 1.0 / g_lo  # search uniformly in series resistance

    contexts = [None] + ([context] if context is not None else [])

    def evaluate(q: float):
        total = 0.0
        worst = math.inf
        pick = {}
        for ctx in contexts:
            res, bad = _context_best(configs, 1.0 / q, device_params, ctx, bounds, v_dd)
            if res is None:
                return None, (ctx, bad)
            margin, v1, v2 = res
            total += margin
            worst = min(worst, margin)
            pick[ctx is not None] = (v1, v2)
        return (worst, total, -q, pick), None

    def scan(qs, incumbent):
        best_q, best_score, fail = incumbent
        for q in qs:
            score, bad = evaluate(q)
            if score is None:
                if fail is None:
                    fail = (q, bad)
                continue
            if best_score is None or score[:3] > best_score[:3]:
                best_q, best_score = q, score
        return best_q, best_score, fail

    step = (q_hi - q_lo) / 228 if q_hi > q_lo else 0.0
    if step > 0.0:
        coarse = [q_lo + i * step for i in range(229)]
    else:
        coarse = [q_lo]
    best_q, best_score, fail = scan(coarse, (None, None, None))
    if best_score is not None and step > 0.0:
        for factor in (10.0, 100.0):
            fine = step / factor
            around = [best_q + k * fine for k in range(-9, 10) if k != 0]
            around = [q for q in around if q_lo <= q <= q_hi]
            best_q, best_score, fail = scan(around, (best_q, best_score, fail))

    if best_score is None:
        # report the least-infeasible point examined
        if fail is not None:
            q_bad, (ctx_bad, bad) = fail
            v1 = bad[1] if bad else 0.5 * (bounds.v_th_lo + bounds.v_th_hi)
        else:  # pragma: no cover - no grid point at all
            q_bad, v1, ctx_bad = q_lo, bounds.v_th_lo, None
        v2 = v1
        fallback = CalibratedParams(
            v_th1=v1, v_th2=v2, v_th1_sw=v1, v_th2_sw=v2,
            g_x=1.0 / q_bad, v_th_block=v_th_block, v_dd=v_dd,
        )
        violations = []
        for ctx in contexts:
            violations.extend(_violations_at(configs, fallback, device_params, ctx, v_dd))
        raise CalibrationError(
            "no feasible (v_th1, v_th2, g_x) in bounds; "
            + "; ".join(f"{c}@{v} {d}" for c, v, d in violations[:8]),
            violations=violations,
        )

    worst, _, _, pick = best_score
    v1, v2 = pick[False]
    v1_sw, v2_sw = pick.get(True, (v1, v2))

    # restoration margin at the thresholding block: rails degraded by one
    # routing switch are the worst levels the block ever sees
    rsw = routing_switch or SwitchParams()
    degraded_high, _ = switch_pass(v_dd, rsw.gate_on_voltage, rsw)
    block_margin = min(v_th_block - 0.0, degraded_high - v_th_block)
    noise_margin = min(worst, block_margin)

    return CalibratedParams(
        v_th1=v1,
        v_th2=v2,
        v_th1_sw=v1_sw,
        v_th2_sw=v2_sw,
        g_x=1.0 / best_q,
        v_th_block=v_th_block,
        noise_margin=noise_margin,
        v_dd=v_dd,
    )
