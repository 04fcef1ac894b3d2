"""Command-line surface tying the pipeline together.

Subcommands: calibrate, truth-table, simulate-cell, program, map-run,
report.  Exit codes: 0 success, 2 usage error, 3 domain error.  Report
paths write figures (PNG) next to the delimited/JSON outputs.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile

from . import cell as cell_mod
from . import config as config_mod
from . import mapper as mapper_mod
from . import metrics as metrics_mod
from . import programmer as prog_mod
from .array import build_array
from .cell import GateKind, Variant, configure
from .errors import MemtlgError, NetlistError
from .solver import Waveform

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DOMAIN = 3


def _write_text_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".memtlg-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
        os.chmod(path, 0o644)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _save_figure(render, path: str) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".memtlg-", suffix=".png")
    os.close(fd)
    try:
        render(tmp)
        os.replace(tmp, path)
        os.chmod(path, 0o644)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _load_run_config(args) -> config_mod.RunConfig:
    if getattr(args, "config", None):
        cfg = config_mod.RunConfig.from_file(args.config)
    else:
        cfg = config_mod.RunConfig()
    for attr in ("rows", "cols", "variant", "seed"):
        val = getattr(args, attr, None)
        if val is not None:
            setattr(cfg, attr, val)
    if getattr(args, "ideal_switches", False):
        cfg.ideal_switches = True
    cfg.validate()
    return cfg


def _get_calibration(args, cfg) -> cell_mod.CalibratedParams:
    path = getattr(args, "calibration", None)
    if path:
        return config_mod.load_calibration(path)
    return cell_mod.calibrate(
        device_params=cfg.device_params(),
        context=cfg.read_context(),
        v_dd=cfg.v_dd,
        v_th_block=cfg.v_th_block,
        routing_switch=cfg.switch_params(),
    )


def _outpath(args, name: str) -> str:
    out_dir = getattr(args, "out_dir", ".") or "."
    os.makedirs(out_dir, exist_ok=True)
    return os.path.join(out_dir, name)


def cmd_calibrate(args) -> int:
    cfg = _load_run_config(args)
    cal = cell_mod.calibrate(
        device_params=cfg.device_params(),
        context=cfg.read_context(),
        v_dd=cfg.v_dd,
        v_th_block=cfg.v_th_block,
        routing_switch=cfg.switch_params(),
    )
    path = _outpath(args, "calibration.txt")
    config_mod.save_calibration(path, cal)
    print(f"calibration written to {path}")
    print(f"noise margin: {cal.noise_margin:.6f} V")
    print(
        f"v_th1={cal.v_th1:.6f} v_th2={cal.v_th2:.6f} "
        f"v_th1_sw={cal.v_th1_sw:.6f} v_th2_sw={cal.v_th2_sw:.6f} g_x={cal.g_x:.6e}"
    )
    return EXIT_OK


def _config_line(config) -> str:
    parts = []
    if config.rc1 is not None:
        parts.append(f"rc1={config.rc1.value}")
    parts.append(f"rc2={config.rc2.value}")
    parts.append(f"vc={config.vc:g}")
    return " ".join(parts)


def cmd_truth_table(args) -> int:
    cfg = _load_run_config(args)
    cal = _get_calibration(args, cfg)
    config = configure(GateKind(args.gate), Variant(cfg.variant))
    context = None if cfg.ideal_switches else cfg.read_context()
    table = cell_mod.truth_table(config, cal, context, cfg.device_params())
    for vec, out in zip(("00", "01", "10", "11"), table):
        print(f"{vec} -> {out}")
    print(_config_line(config))
    return EXIT_OK


def cmd_simulate_cell(args) -> int:
    cfg = _load_run_config(args)
    cal = _get_calibration(args, cfg)
    config = configure(GateKind(args.gate), Variant(cfg.variant))
    context = None if cfg.ideal_switches else cfg.read_context()
    device = cfg.device_params()

    # read cycle: hold each input vector, record staged node voltages
    hold = 5e-6
    samples = max(1, int(round(hold / max(cfg.dt, 1e-7))))
    channels = {k: [] for k in ("a", "b", "n1", "x", "n2", "out")}
    for a, b in cell_mod.INPUT_VECTORS:
        trace = cell_mod.cell_read_trace(config, a * cfg.v_dd, b * cfg.v_dd, cal, context, device)
        for _ in range(samples):
            channels["a"].append(a)
            channels["b"].append(b)
            channels["n1"].append(trace.n1)
            channels["x"].append(trace.x)
            channels["n2"].append(trace.n2)
            channels["out"].append(trace.out)
    read_wave = Waveform(dt=max(cfg.dt, 1e-7), channels=channels)
    read_csv = _outpath(args, "read_cycle.csv")
    read_wave.write_csv(read_csv)

    # write cycle: program the cell from the blank state
    schedule, outcome = prog_mod.program_cell(
        config,
        device_params=device,
        switch_params=cfg.switch_params(),
        pulse_duration=cfg.pulse_duration or None,
        dt=cfg.dt,
        record_waveform=True,
    )
    write_csv = _outpath(args, "write_cycle.csv")
    outcome.waveform.write_csv(write_csv)

    from .plotting import save_waveform_plot

    _save_figure(
        lambda p: save_waveform_plot(read_wave, p, title=f"read cycle: {config.label()}"),
        _outpath(args, "read_cycle.png"),
    )
    _save_figure(
        lambda p: save_waveform_plot(outcome.waveform, p, title=f"write cycle: {config.label()}"),
        _outpath(args, "write_cycle.png"),
    )

    table = cell_mod.truth_table(config, cal, context, device)
    print(f"{config.label()}: truth table {table}")
    print(f"write targets reached: { {k: round(v, 6) for k, v in outcome.achieved.items()} }")
    print(f"outputs: {read_csv}, {write_csv} (+ .png figures)")
    return EXIT_OK


def cmd_program(args) -> int:
    cfg = _load_run_config(args)
    device = cfg.device_params()
    switch = cfg.switch_params()
    target = configure(GateKind(args.gate), Variant(cfg.variant))
    if args.from_gate:
        start_cfg = configure(GateKind(args.from_gate), Variant(cfg.variant))
        _, start_outcome = prog_mod.program_cell(
            start_cfg, device_params=device, switch_params=switch,
            pulse_duration=cfg.pulse_duration or None, dt=cfg.dt,
        )
        states = start_outcome.final_states
    else:
        states = prog_mod.blank_cell_states(target.variant)

    schedule = prog_mod.write_schedule(
        target, states, cfg.pulse_duration or None, device, switch
    )
    sched_path = _outpath(args, "schedule.csv")
    _write_text_atomic(sched_path, "\n".join(schedule.csv_rows()) + "\n")

    outcome = prog_mod.apply_write(states, schedule, device, switch, dt=cfg.dt)
    wave_path = _outpath(args, "write_waveform.csv")
    outcome.waveform.write_csv(wave_path)

    summary = {
        "target": target.label(),
        "pulse_s": outcome.pulse[1] - outcome.pulse[0],
        "achieved": {k: v for k, v in sorted(outcome.achieved.items())},
        "goals": {k: v for k, v in sorted(outcome.goals.items())},
        "nontarget_drift": {k: v for k, v in sorted(outcome.drift.items())},
        "schedule_csv": sched_path,
        "waveform_csv": wave_path,
    }
    out_path = _outpath(args, "write_outcome.json")
    _write_text_atomic(out_path, json.dumps(summary, indent=2) + "\n")

    from .plotting import save_waveform_plot

    if len(outcome.waveform):
        _save_figure(
            lambda p: save_waveform_plot(
                outcome.waveform, p, title=f"programming pulse: {target.label()}"
            ),
            _outpath(args, "write_waveform.png"),
        )
    print(f"programmed {target.label()}; outcome in {out_path}")
    return EXIT_OK


def cmd_map_run(args) -> int:
    cfg = _load_run_config(args)
    cal = _get_calibration(args, cfg)
    device = cfg.device_params()
    switch = cfg.switch_params()

    def stage(name, fn):
        try:
            return fn()
        except NetlistError:
            raise
        except MemtlgError as exc:
            raise MemtlgError(f"{name}: {exc}") from exc

    with open(args.netlist, "r", encoding="utf-8") as fh:
        text = fh.read()
    netlist = stage("parse", lambda: mapper_mod.parse_netlist(text))
    mapping = stage(
        "place-and-route",
        lambda: mapper_mod.place_and_route(netlist, cfg.rows, cfg.cols, Variant(cfg.variant)),
    )
    bundle = stage(
        "emit-program",
        lambda: mapper_mod.emit_program(
            mapping, device, switch, cfg.pulse_duration or None
        ),
    )

    nonideal = not cfg.ideal_switches
    try:
        report = mapper_mod.verify(
            bundle, netlist, cal, device, switch,
            nonideal=nonideal, read_context=cfg.read_context(), dt=cfg.dt,
        )
        verification_failed = None
    except mapper_mod.VerificationError as exc:
        report = exc.report
        verification_failed = exc

    report_path = _outpath(args, "verification.json")
    _write_text_atomic(report_path, report.to_json() + "\n")

    # per-vector pre/post traces for every output (plus CSV waveform)
    topo = build_array(mapping.rows, mapping.cols, mapping.variant)
    from .array import dump_array

    _write_text_atomic(
        _outpath(args, "array.txt"),
        dump_array(topo, mapping.routing, mapping.cell_configs),
    )
    effective = mapping.cell_configs
    vectors = [v["vector"] for v in report.vectors]
    pre: dict[str, list[float]] = {o: [] for o in mapping.output_lines}
    post: dict[str, list[float]] = {o: [] for o in mapping.output_lines}
    from .array import array_eval, row_line

    for vec in vectors:
        assignment = {name: int(vec[i]) for i, name in enumerate(netlist.inputs)}
        line_inputs = {}
        for name, positions in mapping.input_rows.items():
            for (r, which) in positions:
                line_inputs[row_line(r, which)] = float(assignment[name]) * cfg.v_dd
        res = array_eval(
            topo, mapping.routing, effective, line_inputs, cal,
            nonideal=nonideal, read_context=cfg.read_context(),
            switch_params=switch, device_params=device,
        )
        for o, line in mapping.output_lines.items():
            pre[o].append(res.column_pre[line])
            post[o].append(res.column_post[line])

    channels = {}
    for i, name in enumerate(netlist.inputs):
        channels[f"in:{name}"] = [float(v[i]) for v in vectors]
    for o in sorted(pre):
        channels[f"pre:{o}"] = pre[o]
        channels[f"post:{o}"] = post[o]
    wave = Waveform(dt=1e-6, channels=channels)
    wave_path = _outpath(args, "waveforms.csv")
    wave.write_csv(wave_path)

    from .plotting import save_vector_traces_plot

    _save_figure(
        lambda p: save_vector_traces_plot(
            vectors, pre, post, p, title=f"array outputs ({args.netlist})"
        ),
        _outpath(args, "map_run.png"),
    )

    if verification_failed is not None:
        print(f"verify: FAILED on vector {verification_failed.counterexample}", file=sys.stderr)
        print(f"report written to {report_path}", file=sys.stderr)
        return EXIT_DOMAIN
    n_vec = len(report.vectors)
    print(f"verify: {n_vec}/{n_vec} vectors match (noise margin {report.noise_margin_v:.4f} V)")
    print(f"outputs: {report_path}, {wave_path}, map_run.png")
    return EXIT_OK


def cmd_report(args) -> int:
    cfg = _load_run_config(args)
    variant = Variant(cfg.variant)
    reference_area = reference_power = None
    if (cfg.rows, cfg.cols) == (3, 4) and variant is Variant.FULL:
        reference_area = metrics_mod.REFERENCE_3X4_AREA_NANO
        reference_power = metrics_mod.REFERENCE_3X4_POWER_NANO

    topo = build_array(cfg.rows, cfg.cols, variant)
    if args.netlist:
        with open(args.netlist, "r", encoding="utf-8") as fh:
            netlist = mapper_mod.parse_netlist(fh.read())
        mapping = mapper_mod.place_and_route(netlist, cfg.rows, cfg.cols, variant)
        area = metrics_mod.area_report(topo, reference_nano=reference_area)
        power = metrics_mod.power_report(
            mapping, mode="per-config", reference_nano=reference_power
        )
    else:
        area = metrics_mod.area_report(topo, reference_nano=reference_area)
        power = metrics_mod.power_report(topo, reference_nano=reference_power)

    combined = {"area": area.to_dict(), "power": power.to_dict()}
    text = json.dumps(combined, indent=2)
    path = _outpath(args, "report.json")
    _write_text_atomic(path, text + "\n")
    print(text)

    from .plotting import save_cost_plot

    _save_figure(
        lambda p: save_cost_plot(
            area, power, p, title=f"{cfg.rows}x{cfg.cols} {variant.value} array"
        ),
        _outpath(args, "report.png"),
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="memtlg",
        description="Programmable memristive threshold-logic array simulator and mapper",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, gate=False, netlist=False):
        p.add_argument("--config", help="run configuration file (key=value)")
        p.add_argument("--out-dir", default=".", help="directory for output files")
        p.add_argument("--rows", type=int, default=None)
        p.add_argument("--cols", type=int, default=None)
        p.add_argument("--variant", choices=["full", "reduced"], default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument(
            "--ideal-switches", action="store_true",
            help="disable switch non-idealities",
        )
        p.add_argument("--calibration", help="calibration file (from `memtlg calibrate`)")
        if gate:
            p.add_argument("--gate", required=True, choices=[g.value for g in GateKind])
        if netlist:
            p.add_argument("--netlist", required=netlist == "required", help="netlist file")

    p = sub.add_parser("calibrate", help="calibrate inverter thresholds and coupling")
    common(p)
    p.set_defaults(fn=cmd_calibrate)

    p = sub.add_parser("truth-table", help="print a gate's truth table and configuration")
    common(p, gate=True)
    p.set_defaults(fn=cmd_truth_table)

    p = sub.add_parser("simulate-cell", help="read and write cycle waveforms for one cell")
    common(p, gate=True)
    p.set_defaults(fn=cmd_simulate_cell)

    p = sub.add_parser("program", help="emit and apply a write schedule for one cell")
    common(p, gate=True)
    p.add_argument("--from-gate", choices=[g.value for g in GateKind], default=None)
    p.set_defaults(fn=cmd_program)

    p = sub.add_parser("map-run", help="map a netlist onto the array and verify it")
    common(p, netlist="required")
    p.set_defaults(fn=cmd_map_run)

    p = sub.add_parser("report", help="area and power report (JSON + figure)")
    common(p, netlist=True)
    p.set_defaults(fn=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except MemtlgError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
