"""Mapper tests: parsing, placement, program emission, oracle verification."""

import itertools
import pickle
import random
import time

import pytest

from memtlg import (
    GateKind,
    blank_cell_states,
    apply_write,
    emit_program,
    parse_netlist,
    place_and_route,
    verify,
)
from memtlg.cell import ResLevel
from memtlg.errors import CapacityError, NetlistError, VerificationError


# --- parse_netlist -------------------------------------------------------------


def test_parse_single_gate():
    n = parse_netlist("input a\ninput b\ng1 = NAND(a, b)\noutput g1\n")
    assert n.inputs == ["a", "b"]
    assert n.outputs == ["g1"]
    assert len(n.gates) == 1
    assert n.gates[0].kind is GateKind.NAND


def test_parse_self_reference_is_use_before_definition():
    with pytest.raises(NetlistError, match="before definition"):
        parse_netlist("input a\ng1 = NAND(a, g1)\noutput g1\n")


def test_parse_unknown_gate_kind():
    with pytest.raises(NetlistError, match="unknown gate kind 'AND'"):
        parse_netlist("input a\ninput b\ng1 = AND(a, b)\noutput g1\n")


def test_parse_duplicate_name():
    with pytest.raises(NetlistError, match="duplicate"):
        parse_netlist("input a\ninput a\n")


def test_parse_syntax_error_has_line_and_column():
    with pytest.raises(NetlistError) as exc:
        parse_netlist("input a\ninput b\ng1 = NAND(a b)\noutput g1\n")
    assert exc.value.line == 3
    assert exc.value.column >= 1


def test_parse_comments_and_blank_lines():
    n = parse_netlist("# header\n\ninput a  # trailing\ninput b\ng = NOR(a, b)\noutput g\n")
    assert n.gate_names == ["g"]


def test_parse_undeclared_output():
    with pytest.raises(NetlistError, match="not a declared signal"):
        parse_netlist("input a\noutput z\n")


# --- place_and_route -------------------------------------------------------------


def _netlist_three_pairs_twelve_gates():
    lines = ["input a", "input b", "input c", "input d", "input e", "input f"]
    kinds = ["NAND", "NOR", "XNOR", "NAND"]
    names = []
    for i, pair in enumerate((("a", "b"), ("c", "d"), ("e", "f"))):
        for j in range(4):
            name = f"g{i}{j}"
            names.append(name)
            lines.append(f"{name} = {kinds[j]}({pair[0]}, {pair[1]})")
    lines.append(f"output {names[0]}")
    lines.append(f"output {names[-1]}")
    return parse_netlist("\n".join(lines) + "\n")


def test_place_twelve_gates_three_pairs_on_3x4():
    n = _netlist_three_pairs_twelve_gates()
    m = place_and_route(n, 3, 4)
    assert len(m.placements) == 12
    used_rows = {rc[0] for rc in m.placements.values()}
    assert len(used_rows) <= 3


def test_row_rule_holds():
    n = _netlist_three_pairs_twelve_gates()
    m = place_and_route(n, 3, 4)
    for gate in n.gates:
        r, _ = m.placements[gate.name]
        assert m.row_pairs[r] == tuple(sorted((gate.a, gate.b)))


def test_thirteen_gates_one_pair_capacity_error():
    lines = ["input a", "input b"]
    for i in range(13):
        lines.append(f"g{i} = NAND(a, b)")
    lines.append("output g0")
    n = parse_netlist("\n".join(lines) + "\n")
    with pytest.raises(CapacityError):
        place_and_route(n, 3, 4)


def test_too_many_pairs_capacity_error():
    n = _netlist_three_pairs_twelve_gates()
    with pytest.raises(CapacityError) as exc:
        place_and_route(n, 2, 4)
    assert exc.value.gate is not None


def test_single_gate_on_1x1():
    n = parse_netlist("input a\ninput b\ng = NAND(a, b)\noutput g\n")
    m = place_and_route(n, 1, 1)
    assert m.placements["g"] == (0, 0)


def test_mapping_deterministic():
    text = open("netlists/demo_3x4.net").read()
    runs = []
    for _ in range(2):
        n = parse_netlist(text)
        m = place_and_route(n, 3, 4)
        b = emit_program(m)
        runs.append(pickle.dumps((m, b)))
    assert runs[0] == runs[1]


# --- emit_program ------------------------------------------------------------------


def test_emit_single_xnor_cell():
    n = parse_netlist("input a\ninput b\ng = XNOR(a, b)\noutput g\n")
    m = place_and_route(n, 1, 1)
    b = emit_program(m)
    sched = b.schedules[(0, 0)]
    assert {e.switch_id for e in sched.events} == {"S_w10", "S_w13"}  # Rc2 set only


def test_emit_twelve_cells_one_pulse_window():
    n = _netlist_three_pairs_twelve_gates()
    m = place_and_route(n, 3, 4)
    b = emit_program(m)
    assert len(b.schedules) == 12
    windows = {e.t_start for s in b.schedules.values() for e in s.events} | {
        e.t_end for s in b.schedules.values() for e in s.events
    }
    assert windows == {0.0, b.pulse_duration}


def test_program_from_blank_reproduces_configs(device_params, switch_params):
    n = _netlist_three_pairs_twelve_gates()
    m = place_and_route(n, 3, 4)
    b = emit_program(m)
    for cell, config in m.cell_configs.items():
        states = blank_cell_states(config.variant)
        out = apply_write(states, b.schedules[cell], device_params, switch_params)
        rc2 = ResLevel.R_ON if out.final_states["Rc2"].x >= 0.5 else ResLevel.R_OFF
        assert rc2 == config.rc2
        if config.rc1 is not None:
            rc1 = ResLevel.R_ON if out.final_states["Rc1"].x >= 0.5 else ResLevel.R_OFF
            assert rc1 == config.rc1
        for fixed in ("R1", "R2", "R3", "R4"):
            assert out.final_states[fixed].x == 0.0


# --- verify ----------------------------------------------------------------------


def test_verify_single_nand(cal):
    n = parse_netlist("input a\ninput b\ng = NAND(a, b)\noutput g\n")
    m = place_and_route(n, 3, 4)
    report = verify(emit_program(m), n, cal)
    assert len(report.vectors) == 4
    assert all(v["pass"] for v in report.vectors)
    assert report.mismatches == []


def test_verify_xnor_of_nand_nor_matches_independent_oracle(cal):
    # independent brute force, written out by hand below
    def oracle(a, b):
        nand = 1 - (a & b)
        nor = 1 - (a | b)
        return 1 - (nand ^ nor)

    expected = [oracle(a, b) for a, b in itertools.product((0, 1), repeat=2)]
    assert expected == [1, 0, 0, 1]  # frozen before the build

    n = parse_netlist(
        "input a\ninput b\n"
        "n1 = NAND(a, b)\nn2 = NOR(a, b)\nf = XNOR(n1, n2)\noutput f\n"
    )
    m = place_and_route(n, 2, 2)
    report = verify(emit_program(m), n, cal)
    got = [v["got"]["f"] for v in report.vectors]
    assert got == expected


def test_verify_corrupted_schedule_fails_with_counterexample(cal):
    n = parse_netlist("input a\ninput b\ng = XNOR(a, b)\noutput g\n")
    m = place_and_route(n, 1, 1)
    b = emit_program(m)
    sched = b.schedules[(0, 0)]
    # wrong switch pair: reset instead of set leaves Rc2 high-resistance
    bad = [w.__class__(w.memristor, -w.polarity, ("S_w11", "S_w12")) for w in sched.writes]
    sched.writes = bad
    with pytest.raises(VerificationError) as exc:
        verify(b, n, cal)
    assert exc.value.counterexample is not None
    assert exc.value.report.mismatches


def test_verify_rejects_wide_netlists(cal):
    lines = [f"input i{k}" for k in range(17)]
    lines.append("g = NAND(i0, i1)")
    lines.append("output g")
    n = parse_netlist("\n".join(lines) + "\n")
    m = place_and_route(n, 1, 1)
    from memtlg.errors import InvalidInputError

    with pytest.raises(InvalidInputError):
        verify(emit_program(m), n, cal)


def _random_mappable_netlist(rng):
    n_in = rng.randint(2, 6)
    inputs = [f"i{k}" for k in range(n_in)]
    lines = [f"input {name}" for name in inputs]
    signals = list(inputs)
    gates = []
    n_gates = rng.randint(1, 12)
    for k in range(n_gates):
        a, b = rng.sample(signals, 2)
        kind = rng.choice(["NAND", "NOR", "XNOR"])
        name = f"g{k}"
        lines.append(f"{name} = {kind}({a}, {b})")
        gates.append((name, a, b))
        signals.append(name)
    outs = rng.sample([g[0] for g in gates], min(len(gates), rng.randint(1, 3)))
    lines.extend(f"output {o}" for o in outs)
    netlist = parse_netlist("\n".join(lines) + "\n")
    pairs = {tuple(sorted((a, b))) for _, a, b in gates}
    group_max = max(
        sum(1 for _, a, b in gates if tuple(sorted((a, b))) == p) for p in pairs
    )
    return netlist, len(pairs), group_max


def test_end_to_end_soundness_100_random_netlists(cal):
    """100 seeded random mappable netlists verify with zero mismatches."""
    rng = random.Random(20240810)
    t0 = time.time()
    done = 0
    while done < 100:
        netlist, rows, cols = _random_mappable_netlist(rng)
        mapping = None
        for extra in range(4):  # widen until the column-line budget fits
            try:
                mapping = place_and_route(netlist, rows, cols + extra)
                break
            except Exception:
                continue
        if mapping is None:
            continue
        report = verify(emit_program(mapping), netlist, cal)  # raises on mismatch
        assert report.mismatches == []
        done += 1
    assert time.time() - t0 < 30.0
