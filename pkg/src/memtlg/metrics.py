"""Area and power accounting with calibrated unit costs.

Unit values are stored as integers in nano-units (nm^2 for area, nW for
power) so that every report total equals the sum of its line items exactly.
The defaults are the calibrated 180 nm reference values this model is
grounded to; the reference totals for the 3x4 design are kept alongside so
reports can show an informational delta (the component counts behind those
reference totals are not itemized, so no tolerance is enforced).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Mapping

from .array import ArrayTopology, build_array
from .cell import GateKind, Variant
from .errors import ConfigError

AREA_NANO_PER_MICRO = 10**6  # 1 um^2 = 1e6 nm^2
POWER_NANO_PER_MICRO = 10**3  # 1 uW = 1e3 nW

# component kinds
CELL_BARE = "cell"
CELL_PROG = "cell_with_programming"
CELL_REDUCED = "reduced_cell"
BLOCK = "threshold_block"
SWITCH = "switch"

_CELL_KINDS = (CELL_BARE, CELL_PROG, CELL_REDUCED)


def _area_nano(um2: str) -> int:
    return int(Decimal(um2) * AREA_NANO_PER_MICRO)


def _power_nano(uw: str) -> int:
    return int(Decimal(uw) * POWER_NANO_PER_MICRO)


@dataclass(frozen=True)
class UnitCosts:
    """Per-kind area and per-(kind, gate) maximum power."""

    area_nano: Mapping[str, int]
    power_nano: Mapping[str, Mapping[GateKind, int]]

    def area_of(self, kind: str) -> int:
        if kind not in self.area_nano:
            raise ConfigError(f"unknown component kind {kind!r}")
        return self.area_nano[kind]

    def power_of(self, kind: str, gate: GateKind) -> int:
        if kind not in self.power_nano:
            raise ConfigError(f"no power entry for component kind {kind!r}")
        return self.power_nano[kind][gate]

    def max_power_of(self, kind: str) -> int:
        if kind not in self.power_nano:
            raise ConfigError(f"no power entry for component kind {kind!r}")
        return max(self.power_nano[kind].values())


DEFAULT_UNIT_COSTS = UnitCosts(
    area_nano={
        CELL_BARE: _area_nano("7.863"),
        CELL_PROG: _area_nano("69.4662"),
        CELL_REDUCED: _area_nano("28.4281"),
        BLOCK: _area_nano("7.9776"),
        SWITCH: _area_nano("3.7296"),
    },
    power_nano={
        CELL_BARE: {
            GateKind.NOR: _power_nano("21.4"),
            GateKind.NAND: _power_nano("21.4"),
            GateKind.XNOR: _power_nano("30.8"),
        },
        CELL_PROG: {
            GateKind.NOR: _power_nano("20.56"),
            GateKind.NAND: _power_nano("20.48"),
            GateKind.XNOR: _power_nano("43.44"),
        },
        CELL_REDUCED: {
            GateKind.NOR: _power_nano("15.72"),
            GateKind.NAND: _power_nano("10.42"),
            GateKind.XNOR: _power_nano("28.6"),
        },
    },
)

# reference totals for the 3x4 design (informational deltas only)
REFERENCE_3X4_AREA_NANO = _area_nano("1462.6728")
REFERENCE_3X4_POWER_NANO = _power_nano("425.36")


def nano_to_micro_str(nano: int, scale: int) -> str:
    return str(Decimal(nano) / scale)


@dataclass
class CostReport:
    unit: str  # "um^2" or "uW"
    counts: dict[str, int]
    subtotals_nano: dict[str, int]
    total_nano: int
    reference_nano: int | None = None
    extras: dict = field(default_factory=dict)

    @property
    def delta_nano(self) -> int | None:
        if self.reference_nano is None:
            return None
        return self.total_nano - self.reference_nano

    def _scale(self) -> int:
        return AREA_NANO_PER_MICRO if self.unit == "um^2" else POWER_NANO_PER_MICRO

    def to_dict(self) -> dict:
        scale = self._scale()
        d = {
            "unit": self.unit,
            "counts": dict(self.counts),
            "subtotals": {k: nano_to_micro_str(v, scale) for k, v in self.subtotals_nano.items()},
            "total": nano_to_micro_str(self.total_nano, scale),
        }
        if self.reference_nano is not None:
            d["reference"] = nano_to_micro_str(self.reference_nano, scale)
            d["delta"] = nano_to_micro_str(self.delta_nano, scale)
        if self.extras:
            d.update(self.extras)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _cell_kind(variant: Variant, with_programming: bool) -> str:
    if variant is Variant.REDUCED:
        return CELL_REDUCED
    return CELL_PROG if with_programming else CELL_BARE


def component_counts(topology: ArrayTopology, with_programming: bool = True) -> dict[str, int]:
    kind = _cell_kind(topology.variant, with_programming)
    return {
        kind: topology.rows * topology.cols,
        BLOCK: topology.block_count,
        SWITCH: len(topology.switches),
    }


def area_report(
    source,
    unit_costs: UnitCosts = DEFAULT_UNIT_COSTS,
    with_programming: bool = True,
    reference_nano: int | None = None,
) -> CostReport:
    """Area accounting for an ArrayTopology, a Mapping, or explicit counts."""
    if isinstance(source, ArrayTopology):
        counts = component_counts(source, with_programming)
    elif isinstance(source, dict):
        counts = dict(source)
    else:  # a mapper.Mapping
        topo = build_array(source.rows, source.cols, source.variant)
        counts = component_counts(topo, with_programming)
    subtotals = {}
    for kind, n in counts.items():
        if n < 0:
            raise ConfigError(f"negative count for {kind!r}")
        subtotals[kind] = n * unit_costs.area_of(kind)
    total = sum(subtotals.values())
    return CostReport(
        unit="um^2",
        counts=counts,
        subtotals_nano=subtotals,
        total_nano=total,
        reference_nano=reference_nano,
    )


def power_report(
    source,
    unit_costs: UnitCosts = DEFAULT_UNIT_COSTS,
    mode: str = "worst-case",
    with_programming: bool = True,
    overhead_nano: int = 0,
    reference_nano: int | None = None,
) -> CostReport:
    """Maximum-power accounting.

    ``source`` is a mapper.Mapping (per-config entries) or an ArrayTopology
    (every cell counted at its kind's worst gate).  ``worst-case`` sums one
    entry per cell plus a fixed overhead; ``per-config`` additionally breaks
    the subtotals down by gate kind and requires every cell configured.
    """
    if mode not in ("worst-case", "per-config"):
        raise ConfigError(f"unknown power mode {mode!r}")

    if isinstance(source, ArrayTopology):
        if mode == "per-config":
            raise ConfigError("per-config power needs a mapping with cell configs")
        kind = _cell_kind(source.variant, with_programming)
        n = source.rows * source.cols
        subtotal = n * unit_costs.max_power_of(kind)
        counts = {kind: n}
        subtotals = {kind: subtotal}
    else:
        mapping = source
        kind = _cell_kind(mapping.variant, with_programming)
        counts = {}
        subtotals = {}
        for cell in sorted(mapping.cell_configs):
            config = mapping.cell_configs[cell]
            if config is None:
                raise ConfigError(f"cell {cell} has no configuration")
            label = f"{kind}:{config.gate.value}" if mode == "per-config" else kind
            counts[label] = counts.get(label, 0) + 1
            subtotals[label] = subtotals.get(label, 0) + unit_costs.power_of(kind, config.gate)

    total = sum(subtotals.values()) + overhead_nano
    extras = {}
    if overhead_nano:
        subtotals = dict(subtotals)
        subtotals["overhead"] = overhead_nano
        counts = dict(counts)
        counts["overhead"] = 1
    return CostReport(
        unit="uW",
        counts=counts,
        subtotals_nano=subtotals,
        total_nano=total,
        reference_nano=reference_nano,
        extras=extras,
    )
