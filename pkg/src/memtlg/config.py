"""Run configuration: flat key=value files with unit-suffixed quantities.

Values accept an SI multiplier suffix and an optional unit letter, e.g.
``3k``, ``10us``, ``2.5V``, ``60kohm``.  Calibration results persist in the
same format so array runs need not re-calibrate.
"""

from __future__ import annotations

import math
import os
import re
import tempfile
from dataclasses import dataclass, field, fields

from .cell import CalibratedParams, ReadSwitchContext
from .devices import MemristorParams, SwitchParams, WindowKind
from .errors import ConfigError

_MULTIPLIERS = {
    "p": 1e-12,
    "n": 1e-9,
    "u": 1e-6,
    "µ": 1e-6,
    "m": 1e-3,
    "k": 1e3,
    "K": 1e3,
    "M": 1e6,
    "G": 1e9,
}

_QUANTITY_RE = re.compile(
    r"^\s*([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)\s*"
    r"(p|n|u|µ|m|k|K|M|G)?\s*"
    r"(V|v|s|S|A|W|ohm|Ohm|Ω)?\s*$"
)


def parse_quantity(text: str) -> float:
    """Parse ``3k``, ``10us``, ``2.5V``, ``1.2`` ... into a float."""
    m = _QUANTITY_RE.match(text)
    if not m:
        raise ConfigError(f"cannot parse quantity {text!r}")
    value = float(m.group(1))
    if m.group(2):
        value *= _MULTIPLIERS[m.group(2)]
    return value


def format_quantity(value: float) -> str:
    return repr(float(value))


def read_kv_file(path) -> dict[str, str]:
    out: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, _, val = line.partition("=")
            out[key.strip()] = val.strip()
    return out


def write_kv_file_atomic(path, items: dict[str, str]) -> None:
    """Write key=value lines via a temp file and rename (atomic)."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".memtlg-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            for key, val in items.items():
                fh.write(f"{key}={val}\n")
        os.replace(tmp, path)
        os.chmod(path, 0o644)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


@dataclass
class RunConfig:
    """All tunables for a run, validated against module preconditions."""

    # memristor
    r_on: float = 3_000.0
    r_off: float = 60_000.0
    v_write_threshold: float = 1.2
    rate_k: float = 125_000.0
    window_kind: str = WindowKind.RECTANGULAR_CLIP.value
    # switches (routing and write paths)
    sw_r_on_series: float = 100.0
    sw_r_off_series: float = 1e7
    sw_v_tn: float = 0.4
    sw_gate_on_voltage: float = 1.0
    # rails and timing
    v_dd: float = 1.0
    v_sc: float = 2.5
    v_th_block: float = 0.4
    dt: float = 1e-8
    pulse_duration: float = 0.0  # 0 = auto (2x minimum full-switch time)
    # array defaults
    rows: int = 3
    cols: int = 4
    variant: str = "full"
    ideal_switches: bool = False
    seed: int = 0

    _FLOAT_KEYS = (
        "r_on", "r_off", "v_write_threshold", "rate_k",
        "sw_r_on_series", "sw_r_off_series", "sw_v_tn", "sw_gate_on_voltage",
        "v_dd", "v_sc", "v_th_block", "dt", "pulse_duration",
    )

    def device_params(self) -> MemristorParams:
        return MemristorParams(
            r_on=self.r_on,
            r_off=self.r_off,
            v_write_threshold=self.v_write_threshold,
            rate_k=self.rate_k,
            window_kind=WindowKind(self.window_kind),
        )

    def switch_params(self) -> SwitchParams:
        return SwitchParams(
            r_on_series=self.sw_r_on_series,
            r_off_series=self.sw_r_off_series,
            v_tn=self.sw_v_tn,
            gate_on_voltage=self.sw_gate_on_voltage,
        )

    def read_context(self) -> ReadSwitchContext:
        return ReadSwitchContext()

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        raw = read_kv_file(path)
        cfg = cls()
        known = {f.name for f in fields(cls)}
        for key, val in raw.items():
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
            if key in cls._FLOAT_KEYS:
                setattr(cfg, key, parse_quantity(val))
            elif key in ("rows", "cols", "seed"):
                setattr(cfg, key, int(val))
            elif key == "ideal_switches":
                setattr(cfg, key, val.lower() in ("1", "true", "yes", "on"))
            else:
                setattr(cfg, key, val)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        try:
            self.device_params()
            self.switch_params()
            WindowKind(self.window_kind)
        except Exception as exc:
            raise ConfigError(f"invalid configuration: {exc}") from exc
        if self.dt <= 0 or not math.isfinite(self.dt):
            raise ConfigError(f"dt must be finite and > 0, got {self.dt}")
        if self.rows < 1 or self.cols < 1:
            raise ConfigError(f"array dimensions must be >= 1, got {self.rows}x{self.cols}")
        if self.variant not in ("full", "reduced"):
            raise ConfigError(f"variant must be 'full' or 'reduced', got {self.variant!r}")


def save_calibration(path, cal: CalibratedParams) -> None:
    items = {k: format_quantity(v) for k, v in cal.as_dict().items()}
    write_kv_file_atomic(path, items)


def load_calibration(path) -> CalibratedParams:
    raw = read_kv_file(path)
    try:
        return CalibratedParams(
            v_th1=float(raw["v_th1"]),
            v_th2=float(raw["v_th2"]),
            v_th1_sw=float(raw["v_th1_sw"]),
            v_th2_sw=float(raw["v_th2_sw"]),
            g_x=float(raw["g_x"]),
            v_th_block=float(raw["v_th_block"]),
            noise_margin=float(raw["noise_margin"]),
            v_dd=float(raw["v_dd"]),
        )
    except KeyError as exc:
        raise ConfigError(f"calibration file {path} is missing key {exc}") from exc
