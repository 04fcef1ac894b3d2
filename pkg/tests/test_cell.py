"""Cell tests: configuration tables, truth tables, calibration, symmetry.

``test_grid_search_oracle_feasibility`` re-derives the cell node algebra
from scratch (no package internals) and sweeps a 0.005 V threshold grid to
establish independently that a feasible calibration with >= 0.03 V margin
exists; the production calibrator must do at least as well.
"""

import pytest

from memtlg import (
    CalibrationBounds,
    GateKind,
    ResLevel,
    ResistiveNetwork,
    Variant,
    calibrate,
    cell_read,
    cell_read_trace,
    configure,
    nodal_solve,
    truth_table,
)
from memtlg.cell import GATE_TRUTH, all_configs
from memtlg.errors import CalibrationError, InvalidInputError, NotCalibratedError

R_ON, R_OFF = 3000.0, 60000.0


# --- configuration tables -----------------------------------------------------


def test_full_nand_row():
    c = configure(GateKind.NAND, Variant.FULL)
    assert (c.rc1, c.rc2, c.vc) == (ResLevel.R_ON, ResLevel.R_OFF, 0.8)


def test_full_nor_row():
    c = configure(GateKind.NOR, Variant.FULL)
    assert (c.rc1, c.rc2, c.vc) == (ResLevel.R_OFF, ResLevel.R_OFF, 0.8)


def test_full_xnor_row():
    c = configure(GateKind.XNOR, Variant.FULL)
    assert (c.rc1, c.rc2, c.vc) == (ResLevel.R_OFF, ResLevel.R_ON, 0.8)


def test_reduced_rows():
    nand = configure("NAND", "reduced")
    nor = configure("NOR", "reduced")
    xnor = configure("XNOR", "reduced")
    assert nand.rc1 is None and (nand.rc2, nand.vc) == (ResLevel.R_OFF, 1.0)
    assert (nor.rc2, nor.vc) == (ResLevel.R_OFF, 0.8)
    assert (xnor.rc2, xnor.vc) == (ResLevel.R_ON, 0.8)


def test_reduced_nand_nor_differ_only_in_vc():
    nand = configure("NAND", "reduced")
    nor = configure("NOR", "reduced")
    assert nand.rc2 == nor.rc2 and nand.rc1 == nor.rc1
    assert (nand.vc, nor.vc) == (1.0, 0.8)


# --- truth tables ---------------------------------------------------------------


def test_all_24_truth_checks_ideal(cal):
    for config in all_configs():
        assert truth_table(config, cal) == GATE_TRUTH[config.gate], config.label()


def test_all_24_truth_checks_with_switches(cal, read_context):
    for config in all_configs():
        got = truth_table(config, cal, read_context)
        assert got == GATE_TRUTH[config.gate], config.label()


def test_nand_11_reads_zero_volts(cal):
    config = configure(GateKind.NAND, Variant.FULL)
    assert cell_read(config, 1.0, 1.0, cal) == 0.0


def test_xnor_10_reads_zero_volts(cal):
    config = configure(GateKind.XNOR, Variant.FULL)
    assert cell_read(config, 1.0, 0.0, cal) == 0.0


def test_missing_calibration_raises():
    config = configure(GateKind.NAND, Variant.FULL)
    with pytest.raises(NotCalibratedError):
        cell_read(config, 1.0, 1.0, None)


def test_inputs_validated(cal):
    config = configure(GateKind.NAND, Variant.FULL)
    with pytest.raises(InvalidInputError):
        cell_read(config, 1.5, 0.0, cal)


def test_swap_inputs_invariant(cal, read_context):
    for config in all_configs():
        for ctx in (None, read_context):
            for a, b in ((0.0, 1.0), (1.0, 0.0), (1.0, 1.0), (0.0, 0.0)):
                assert cell_read(config, a, b, cal, ctx) == cell_read(
                    config, b, a, cal, ctx
                ), (config.label(), ctx is not None)


def test_read_is_pure(cal):
    config = configure(GateKind.XNOR, Variant.FULL)
    before = (config.rc1, config.rc2, config.vc)
    values = [cell_read(config, 1.0, 1.0, cal) for _ in range(3)]
    assert values[0] == values[1] == values[2]
    assert (config.rc1, config.rc2, config.vc) == before


def test_switch_context_same_logic_but_stage1_deviates(cal, read_context):
    config = configure(GateKind.NAND, Variant.FULL)
    for a, b in ((0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)):
        ideal = cell_read_trace(config, a, b, cal, None)
        loaded = cell_read_trace(config, a, b, cal, read_context)
        assert (ideal.out >= 0.5) == (loaded.out >= 0.5)
        assert abs(loaded.n1 - ideal.n1) > 0.0


def test_staged_nodes_match_nodal_oracle(cal):
    """Each stage's divider node agrees with a general nodal solve."""
    config = configure(GateKind.XNOR, Variant.FULL)
    for a, b in ((0.0, 0.0), (1.0, 0.0), (1.0, 1.0)):
        trace = cell_read_trace(config, a, b, cal)
        net1 = ResistiveNetwork(
            branches=[("a", "n1", 1 / R_OFF), ("b", "n1", 1 / R_OFF), ("vc", "n1", 1 / R_OFF)],
            sources={"a": a, "b": b, "vc": 0.8},
            probes=["n1"],
        )
        assert nodal_solve(net1)["n1"] == pytest.approx(trace.n1, abs=1e-12)
        net2 = ResistiveNetwork(
            branches=[
                ("a", "n2", 1 / R_OFF),
                ("b", "n2", 1 / R_OFF),
                ("vc", "n2", 1 / R_OFF),
                ("x", "n2", 1 / (1 / cal.g_x + R_ON)),
            ],
            sources={"a": a, "b": b, "vc": 0.8, "x": trace.x},
            probes=["n2"],
        )
        assert nodal_solve(net2)["n2"] == pytest.approx(trace.n2, abs=1e-12)


# --- calibration -----------------------------------------------------------------


def test_calibration_margin_meets_bar(cal):
    assert cal.noise_margin >= 0.03


def test_calibration_margin_regression_pin(cal):
    # worst case is the first-stage window between the 0.6 and 2/3 levels
    assert cal.noise_margin == pytest.approx(1.0 / 30.0, abs=1e-9)
    assert cal.noise_margin == pytest.approx(0.033333333333333104, abs=1e-12)


def test_calibration_g_x_within_bounds(cal):
    assert 1 / R_OFF - 1e-15 <= cal.g_x <= 1 / R_ON + 1e-15


def test_calibration_deterministic():
    a = calibrate()
    b = calibrate()
    assert a == b  # bit-identical dataclasses


def test_collapsed_bounds_report_violations():
    bounds = CalibrationBounds(v_th_lo=0.5, v_th_hi=0.5, g_x_lo=1 / R_OFF, g_x_hi=1 / R_OFF)
    with pytest.raises(CalibrationError) as exc:
        calibrate(bounds=bounds)
    assert len(exc.value.violations) >= 1
    label, vector, detail = exc.value.violations[0]
    assert "/" in label and len(vector) == 2


def test_grid_search_oracle_feasibility(cal):
    """Independent exhaustive grid search at 0.005 V threshold resolution.

    Re-derives node levels from first principles (conductance sums) for all
    six configurations, both contexts, and finds the best worst-case margin
    on the grid.  Feasibility with margin >= 0.03 must hold, and the
    production calibrator must do at least as well as the coarse grid.
    """
    truth = {"NAND": (1, 1, 0), "NOR": (1, 0, 0), "XNOR": (1, 0, 1)}
    # (label, gate, stage-1 vc resistance, stage-2 Rc2 resistance, vc)
    rows = [
        ("full/NAND", "NAND", R_ON, R_OFF, 0.8),
        ("full/NOR", "NOR", R_OFF, R_OFF, 0.8),
        ("full/XNOR", "XNOR", R_OFF, R_ON, 0.8),
        ("red/NAND", "NAND", R_OFF, R_OFF, 1.0),
        ("red/NOR", "NOR", R_OFF, R_OFF, 0.8),
        ("red/XNOR", "XNOR", R_OFF, R_ON, 0.8),
    ]

    def levels(q, clamp, rs):
        g_in = 1.0 / (R_OFF + rs)
        out = {}
        for label, gate, r_vc1, r_rc2, vc in rows:
            g1 = 1.0 / r_vc1
            g2 = 1.0 / R_OFF
            gx = 1.0 / (q + r_rc2 + rs)
            s1, s2 = [], []
            for s in (0, 1, 2):
                hi = clamp * min(s, 1), clamp * max(s - 1, 0)
                s1.append((hi[0] * g_in + hi[1] * g_in + vc * g1) / (2 * g_in + g1))
                per_x = []
                for xv in (0.0, clamp):
                    per_x.append(
                        (hi[0] * g_in + hi[1] * g_in + vc * g2 + xv * gx)
                        / (2 * g_in + g2 + gx)
                    )
                s2.append(per_x)
            out[label] = (s1, s2, truth[gate])
        return out

    vth_grid = [0.05 + 0.005 * i for i in range(1, 180)]
    best = 0.0
    for q in range(3000, 60001, 1500):
        for ctx in ((1.0, 0.0), (0.65, 100.0)):  # (clamp, series R)
            lv = levels(q, *ctx)
            ctx_best = 0.0
            for vth1 in vth_grid:
                m1 = min(abs(vth1 - v) for s1, _, _ in lv.values() for v in s1)
                lo, hi = 0.05, 0.95
                for s1, s2, want in lv.values():
                    for s in (0, 1, 2):
                        x = 1 if s1[s] < vth1 else 0
                        n2 = s2[s][x]
                        if want[s] == 1:
                            lo = max(lo, n2)
                        else:
                            hi = min(hi, n2)
                if lo >= hi:
                    continue
                ctx_best = max(ctx_best, min(m1, 0.5 * (hi - lo)))
            if ctx == (1.0, 0.0):
                ideal_best = ctx_best
            else:
                sw_best = ctx_best
        best = max(best, min(ideal_best, sw_best))

    assert best >= 0.03
    assert cal.noise_margin >= best - 1e-9
