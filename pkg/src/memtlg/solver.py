"""Resistive-network evaluation.

Three levels of machinery:

* ``divider_eval`` -- closed-form node voltage of a resistive summing
  junction, used for staged feedforward evaluation of cells;
* ``nodal_solve`` -- a general conductance-Laplacian solve with Dirichlet
  sources, kept as the cross-check oracle for the staged decomposition;
* ``transient_run`` -- a fixed-step quasi-static stepper that alternates a
  nodal solve at frozen memristor states with one Euler state step per
  device.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .devices import MemristorParams, MemristorState, memristor_resistance, memristor_step
from .errors import InvalidInputError, TopologyError

Node = str


@dataclass
class ResistiveNetwork:
    """Branches are (node_a, node_b, conductance in siemens)."""

    branches: list[tuple[Node, Node, float]]
    sources: dict[Node, float]
    probes: list[Node] = field(default_factory=list)

    def nodes(self) -> list[Node]:
        seen: dict[Node, None] = {}
        for a, b, _ in self.branches:
            seen.setdefault(a)
            seen.setdefault(b)
        for n in self.sources:
            seen.setdefault(n)
        for n in self.probes:
            seen.setdefault(n)
        return list(seen)

    def validate(self) -> None:
        if not self.sources:
            raise InvalidInputError("network needs at least one source")
        for a, b, g in self.branches:
            if not math.isfinite(g) or g <= 0.0:
                raise InvalidInputError(f"branch {a}-{b} has bad conductance {g!r}")
        for n, v in self.sources.items():
            if not math.isfinite(v):
                raise InvalidInputError(f"source {n} has non-finite voltage {v!r}")


def divider_eval(branches: Sequence[tuple[float, float]]) -> float:
    """Node voltage of a summing junction: sum(G*V) / sum(G).

    ``branches`` is a sequence of (source voltage, conductance) pairs.
    """
    if not branches:
        raise InvalidInputError("divider_eval needs at least one branch")
    num = 0.0
    den = 0.0
    for v, g in branches:
        if not math.isfinite(g) or g <= 0.0:
            raise InvalidInputError(f"branch conductance must be finite and > 0, got {g!r}")
        if not math.isfinite(v):
            raise InvalidInputError(f"branch voltage must be finite, got {v!r}")
        num += g * v
        den += g
    return num / den


def _connected_to_sources(net: ResistiveNetwork) -> set[Node]:
    adj: dict[Node, list[Node]] = {}
    for a, b, _ in net.branches:
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    seen = set(net.sources)
    stack = list(net.sources)
    while stack:
        n = stack.pop()
        for m in adj.get(n, ()):
            if m not in seen:
                seen.add(m)
                stack.append(m)
    return seen


def nodal_solve(net: ResistiveNetwork, rel_tol: float = 1e-10) -> dict[Node, float]:
    """Solve the conductance Laplacian with Dirichlet source constraints.

    Raises ``TopologyError`` naming the first node that has no resistive
    path to any source (such a node would make the system singular).
    """
    net.validate()
    reachable = _connected_to_sources(net)
    for n in net.nodes():
        if n not in reachable:
            raise TopologyError(f"node {n!r} is not connected to any source")

    unknowns = [n for n in net.nodes() if n not in net.sources]
    volts = dict(net.sources)
    if not unknowns:
        return volts

    index = {n: i for i, n in enumerate(unknowns)}
    k = len(unknowns)
    a = np.zeros((k, k))
    b = np.zeros(k)
    for na, nb, g in net.branches:
        ia = index.get(na)
        ib = index.get(nb)
        if ia is not None:
            a[ia, ia] += g
            if ib is not None:
                a[ia, ib] -= g
            else:
                b[ia] += g * net.sources[nb]
        if ib is not None:
            a[ib, ib] += g
            if ia is not None:
                a[ib, ia] -= g
            else:
                b[ib] += g * net.sources[na]

    try:
        x = np.linalg.solve(a, b)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - guarded above
        raise TopologyError(f"singular nodal system: {exc}") from exc

    residual = np.linalg.norm(a @ x - b)
    scale = max(1.0, float(np.linalg.norm(b)))
    if residual > rel_tol * scale:
        raise TopologyError(
            f"nodal solve residual {residual:.3e} exceeds {rel_tol:.1e} (relative)"
        )

    for n, i in index.items():
        volts[n] = float(x[i])
    return volts


@dataclass(frozen=True)
class MemristorElement:
    """A memristor branch inside a transient network."""

    node_a: Node
    node_b: Node
    params: MemristorParams


class PiecewiseConstantStimulus:
    """Piecewise-constant source schedule.

    ``segments`` is a list of (t_start, {source: volts}); the mapping taking
    effect is the last segment whose start time is <= t.  Sources omitted
    from a segment keep their previous value.
    """

    def __init__(self, segments: Iterable[tuple[float, Mapping[Node, float]]]):
        segs = sorted(((float(t), dict(vals)) for t, vals in segments), key=lambda s: s[0])
        if not segs:
            raise InvalidInputError("stimulus needs at least one segment")
        self.segments = segs

    @classmethod
    def constant(cls, values: Mapping[Node, float]) -> "PiecewiseConstantStimulus":
        return cls([(0.0, values)])

    def at(self, t: float) -> dict[Node, float]:
        current: dict[Node, float] = {}
        for t0, vals in self.segments:
            if t0 <= t + 1e-18:
                current.update(vals)
            else:
                break
        return current


@dataclass
class Waveform:
    """Named, equally-sampled channels; one row per time step."""

    dt: float
    channels: dict[str, list[float]]

    def __post_init__(self):
        if self.dt <= 0.0:
            raise InvalidInputError("waveform dt must be > 0")
        lengths = {len(v) for v in self.channels.values()}
        if len(lengths) > 1:
            raise InvalidInputError(f"channel lengths differ: {sorted(lengths)}")

    def __len__(self) -> int:
        return len(next(iter(self.channels.values()))) if self.channels else 0

    def times(self) -> list[float]:
        return [i * self.dt for i in range(len(self))]

    def write_csv(self, path) -> None:
        names = list(self.channels)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("time," + ",".join(names) + "\n")
            for i, t in enumerate(self.times()):
                row = [f"{t:.10g}"] + [f"{self.channels[c][i]:.10g}" for c in names]
                fh.write(",".join(row) + "\n")


def transient_run(
    net: ResistiveNetwork,
    memristors: Mapping[str, tuple[MemristorElement, MemristorState]],
    stimulus: PiecewiseConstantStimulus,
    dt: float,
    t_end: float,
) -> tuple[Waveform, dict[str, MemristorState]]:
    """Quasi-static transient: nodal solve at frozen states, then step states.

    Records every probed node and every memristor state per step (state
    channels are named ``x:<name>``).  Deterministic for identical inputs.
    """
    if dt <= 0.0 or not math.isfinite(dt):
        raise InvalidInputError(f"dt must be finite and > 0, got {dt!r}")
    if t_end < dt:
        raise InvalidInputError("t_end must be >= dt")

    states = {name: state for name, (_, state) in memristors.items()}
    elements = {name: elem for name, (elem, _) in memristors.items()}
    n_steps = int(round(t_end / dt))
    channels: dict[str, list[float]] = {p: [] for p in net.probes}
    for name in memristors:
        channels[f"x:{name}"] = []

    sources = dict(net.sources)
    for k in range(n_steps):
        t = k * dt
        sources.update(stimulus.at(t))
        branches = list(net.branches)
        for name, elem in elements.items():
            g = 1.0 / memristor_resistance(states[name], elem.params)
            branches.append((elem.node_a, elem.node_b, g))
        step_net = ResistiveNetwork(branches=branches, sources=sources, probes=net.probes)
        volts = nodal_solve(step_net)
        for p in net.probes:
            channels[p].append(volts[p])
        for name, elem in elements.items():
            channels[f"x:{name}"].append(states[name].x)
            v = volts[elem.node_a] - volts[elem.node_b]
            states[name] = memristor_step(states[name], v, dt, elem.params)

    return Waveform(dt=dt, channels=channels), states
