"""Run configuration: parsing, validation, canonical serialization.

The on-disk format is INI-style with four sections ([grid], [schedule],
[field], [observe]) plus an optional [run] section.  Floats serialize via
repr so a config round-trips through text bit-exactly.  Unknown keys are
rejected; every validation failure names the offending field.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field, replace

from .constants import ATOMIC
from .errors import ConfigError
from .gridbasis import FreeBasis, SpatialGrid, build_basis, build_grid
from .potentials import (
    ConstantEnvelope,
    DoubleGaussEnvelope,
    Envelope,
    FieldSpec,
    GaussSinEnvelope,
    SinusoidEnvelope,
)
from .propagator import Schedule

__all__ = ["RunConfig", "parse_config", "serialize_config"]

_C2 = ATOMIC.c2


@dataclass(frozen=True)
class RunConfig:
    """Everything needed to reproduce one simulation run."""

    # [grid]
    length: float = 6.0
    n_points: int = 2048
    window: float | None = None
    # [schedule]
    t_max: float = 0.03
    n_steps: int = 1500
    stride: int = 10
    # [field]
    v1: float = 2.5 * _C2
    v2: float = 0.25 * _C2
    w: float = 0.075 / ATOMIC.c
    d: float = 0.2
    w_ctrl: float | None = None
    ramp_time: float | None = None
    envelope: Envelope = field(default_factory=ConstantEnvelope)
    # [observe]
    spectrum_times: tuple[float, ...] = (0.03,)
    density_times: tuple[float, ...] = ()
    e_star: float = 1.25 * _C2
    smoothing_strides: float = 5.0
    bin_classes: int = 1
    rate: bool = False
    with_baseline: bool = False
    # [run]
    label: str = "main"
    workers: int | None = None
    seedless: bool = True

    def grid(self) -> SpatialGrid:
        return build_grid(self.length, self.n_points)

    def basis(self) -> FreeBasis:
        return build_basis(self.grid(), self.window)

    def spec(self) -> FieldSpec:
        return FieldSpec(
            V1=self.v1,
            V2=self.v2,
            w=self.w,
            d=self.d,
            w_ctrl=self.w_ctrl,
            envelope=self.envelope,
            ramp_time=self.ramp_time,
        )

    def schedule(self) -> Schedule:
        return Schedule(t_max=self.t_max, n_steps=self.n_steps, stride=self.stride)

    def baseline_config(self) -> "RunConfig":
        """Companion run with the control field off, same schedule."""
        return replace(
            self,
            v2=0.0,
            envelope=ConstantEnvelope(1.0),
            label=self.label + "_baseline",
            rate=False,
            with_baseline=False,
            density_times=(),
        )

    def validate(self) -> None:
        checks = [
            (self.length > 0.0, "grid.length must be positive"),
            (self.n_points >= 8, "grid.n_points must be >= 8"),
            (self.t_max > 0.0, "schedule.t_max must be positive"),
            (self.n_steps >= 0, "schedule.n_steps must be nonnegative"),
            (self.stride >= 1, "schedule.stride must be >= 1"),
            (
                self.n_steps % self.stride == 0,
                "schedule.n_steps must be a multiple of schedule.stride",
            ),
            (self.w > 0.0, "field.w must be positive"),
            (self.d > 0.0, "field.d must be positive"),
            (
                self.w_ctrl is None or self.w_ctrl > 0.0,
                "field.w_ctrl must be positive",
            ),
            (self.e_star > 0.0, "observe.e_star must be positive"),
            (self.smoothing_strides >= 0.0, "observe.smoothing_strides must be >= 0"),
            (self.bin_classes >= 1, "observe.bin_classes must be >= 1"),
            (self.seedless, "run.seedless must be true (runs are deterministic)"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)
        dt_out = self.stride * (self.t_max / self.n_steps) if self.n_steps else 0.0
        for name, times in (
            ("spectrum_times", self.spectrum_times),
            ("density_times", self.density_times),
        ):
            for t in times:
                if not (0.0 <= t <= self.t_max + 1e-15):
                    raise ConfigError(f"observe.{name}: {t!r} outside [0, t_max]")
                if dt_out and abs(t / dt_out - round(t / dt_out)) > 1e-9:
                    raise ConfigError(
                        f"observe.{name}: {t!r} is not a snapshot time "
                        f"(output cadence {dt_out!r})"
                    )


_ENVELOPE_KEYS = {
    "constant": {"env_sign"},
    "sinusoid": {"env_omega", "env_phi0"},
    "gauss_sin": {"env_t0", "env_sigma", "env_omega", "env_sign"},
    "double_gauss": {"env_t1", "env_t2", "env_sigma", "env_sign1", "env_sign2"},
}

_SECTION_KEYS = {
    "grid": {"length", "n_points", "window"},
    "schedule": {"t_max", "n_steps", "stride"},
    "field": {"v1", "v2", "w", "d", "w_ctrl", "ramp_time", "envelope"}
    | set().union(*_ENVELOPE_KEYS.values()),
    "observe": {
        "spectrum_times",
        "density_times",
        "e_star",
        "smoothing_strides",
        "bin_classes",
        "rate",
        "with_baseline",
    },
    "run": {"label", "workers", "seedless"},
}

_REQUIRED = {
    "grid": {"length", "n_points"},
    "schedule": {"t_max", "n_steps"},
    "field": {"v1", "v2", "w", "d"},
    "observe": set(),
    "run": set(),
}


def _opt(raw: str):
    return None if raw.strip().lower() in ("none", "") else raw


def _as_float(section: str, key: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key}: not a number: {raw!r}") from exc


def _as_int(section: str, key: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key}: not an integer: {raw!r}") from exc


def _as_bool(section: str, key: str, raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("true", "yes", "1"):
        return True
    if low in ("false", "no", "0"):
        return False
    raise ConfigError(f"[{section}] {key}: not a boolean: {raw!r}")


def _as_times(section: str, key: str, raw: str) -> tuple[float, ...]:
    raw = raw.strip()
    if not raw:
        return ()
    return tuple(_as_float(section, key, tok) for tok in raw.split())


def _parse_envelope(items: dict[str, str]) -> Envelope:
    kind = items.get("envelope", "constant").strip().lower()
    if kind not in _ENVELOPE_KEYS:
        raise ConfigError(f"[field] envelope: unknown kind {kind!r}")
    present = {k for k in items if k.startswith("env_")}
    stray = present - _ENVELOPE_KEYS[kind]
    if stray:
        raise ConfigError(
            f"[field] keys {sorted(stray)} do not belong to envelope {kind!r}"
        )

    def num(key: str, default: float | None = None) -> float:
        if key not in items:
            if default is None:
                raise ConfigError(f"[field] missing {key} for envelope {kind!r}")
            return default
        return _as_float("field", key, items[key])

    if kind == "constant":
        return ConstantEnvelope(sign=num("env_sign", 1.0))
    if kind == "sinusoid":
        return SinusoidEnvelope(omega=num("env_omega"), phi0=num("env_phi0", 0.0))
    if kind == "gauss_sin":
        return GaussSinEnvelope(
            t0=num("env_t0"),
            sigma=num("env_sigma"),
            omega=num("env_omega"),
            sign=num("env_sign", -1.0),
        )
    return DoubleGaussEnvelope(
        t1=num("env_t1"),
        t2=num("env_t2"),
        sigma=num("env_sigma"),
        sign1=num("env_sign1", -1.0),
        sign2=num("env_sign2", -1.0),
    )


def parse_config(text: str) -> RunConfig:
    """Parse and validate a config document; raises ConfigError on any flaw."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"parse error: {exc}") from exc

    known = set(_SECTION_KEYS)
    for section in parser.sections():
        if section not in known:
            raise ConfigError(f"unknown section [{section}]")
        for key in parser[section]:
            if key not in _SECTION_KEYS[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
    for section, required in _REQUIRED.items():
        have = set(parser[section]) if parser.has_section(section) else set()
        missing = required - have
        if missing:
            raise ConfigError(f"missing key {sorted(missing)[0]!r} in [{section}]")

    def get(section: str, key: str, default: str | None = None) -> str | None:
        if parser.has_section(section) and key in parser[section]:
            return parser[section][key]
        return default

    grid_window = _opt(get("grid", "window", "none") or "none")
    w_ctrl = _opt(get("field", "w_ctrl", "none") or "none")
    ramp = _opt(get("field", "ramp_time", "none") or "none")
    workers = _opt(get("run", "workers", "none") or "none")

    field_items = dict(parser["field"]) if parser.has_section("field") else {}
    cfg = RunConfig(
        length=_as_float("grid", "length", get("grid", "length")),  # type: ignore[arg-type]
        n_points=_as_int("grid", "n_points", get("grid", "n_points")),  # type: ignore[arg-type]
        window=None if grid_window is None else _as_float("grid", "window", grid_window),
        t_max=_as_float("schedule", "t_max", get("schedule", "t_max")),  # type: ignore[arg-type]
        n_steps=_as_int("schedule", "n_steps", get("schedule", "n_steps")),  # type: ignore[arg-type]
        stride=_as_int("schedule", "stride", get("schedule", "stride", "1")),  # type: ignore[arg-type]
        v1=_as_float("field", "v1", get("field", "v1")),  # type: ignore[arg-type]
        v2=_as_float("field", "v2", get("field", "v2")),  # type: ignore[arg-type]
        w=_as_float("field", "w", get("field", "w")),  # type: ignore[arg-type]
        d=_as_float("field", "d", get("field", "d")),  # type: ignore[arg-type]
        w_ctrl=None if w_ctrl is None else _as_float("field", "w_ctrl", w_ctrl),
        ramp_time=None if ramp is None else _as_float("field", "ramp_time", ramp),
        envelope=_parse_envelope(field_items),
        spectrum_times=_as_times(
            "observe", "spectrum_times", get("observe", "spectrum_times", "") or ""
        ),
        density_times=_as_times(
            "observe", "density_times", get("observe", "density_times", "") or ""
        ),
        e_star=_as_float("observe", "e_star", get("observe", "e_star", repr(1.25 * _C2))),  # type: ignore[arg-type]
        smoothing_strides=_as_float(
            "observe", "smoothing_strides", get("observe", "smoothing_strides", "5.0")  # type: ignore[arg-type]
        ),
        bin_classes=_as_int(
            "observe", "bin_classes", get("observe", "bin_classes", "1")  # type: ignore[arg-type]
        ),
        rate=_as_bool("observe", "rate", get("observe", "rate", "false") or "false"),
        with_baseline=_as_bool(
            "observe", "with_baseline", get("observe", "with_baseline", "false") or "false"
        ),
        label=(get("run", "label", "main") or "main").strip(),
        workers=None if workers is None else _as_int("run", "workers", workers),
        seedless=_as_bool("run", "seedless", get("run", "seedless", "true") or "true"),
    )
    cfg.validate()
    return cfg


def _fmt(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return " ".join(repr(float(v)) for v in value)
    return str(value)


def _envelope_items(env: Envelope) -> list[tuple[str, str]]:
    if isinstance(env, ConstantEnvelope):
        return [("envelope", "constant"), ("env_sign", _fmt(env.sign))]
    if isinstance(env, SinusoidEnvelope):
        return [
            ("envelope", "sinusoid"),
            ("env_omega", _fmt(env.omega)),
            ("env_phi0", _fmt(env.phi0)),
        ]
    if isinstance(env, GaussSinEnvelope):
        return [
            ("envelope", "gauss_sin"),
            ("env_t0", _fmt(env.t0)),
            ("env_sigma", _fmt(env.sigma)),
            ("env_omega", _fmt(env.omega)),
            ("env_sign", _fmt(env.sign)),
        ]
    if isinstance(env, DoubleGaussEnvelope):
        return [
            ("envelope", "double_gauss"),
            ("env_t1", _fmt(env.t1)),
            ("env_t2", _fmt(env.t2)),
            ("env_sigma", _fmt(env.sigma)),
            ("env_sign1", _fmt(env.sign1)),
            ("env_sign2", _fmt(env.sign2)),
        ]
    raise ConfigError(f"unknown envelope type {type(env).__name__}")


def serialize_config(cfg: RunConfig) -> str:
    """Canonical text form; parse(serialize(cfg)) reproduces cfg bit-exactly."""
    out = io.StringIO()
    sections: list[tuple[str, list[tuple[str, str]]]] = [
        (
            "grid",
            [
                ("length", _fmt(cfg.length)),
                ("n_points", _fmt(cfg.n_points)),
                ("window", _fmt(cfg.window)),
            ],
        ),
        (
            "schedule",
            [
                ("t_max", _fmt(cfg.t_max)),
                ("n_steps", _fmt(cfg.n_steps)),
                ("stride", _fmt(cfg.stride)),
            ],
        ),
        (
            "field",
            [
                ("v1", _fmt(cfg.v1)),
                ("v2", _fmt(cfg.v2)),
                ("w", _fmt(cfg.w)),
                ("d", _fmt(cfg.d)),
                ("w_ctrl", _fmt(cfg.w_ctrl)),
                ("ramp_time", _fmt(cfg.ramp_time)),
            ]
            + _envelope_items(cfg.envelope),
        ),
        (
            "observe",
            [
                ("spectrum_times", _fmt(cfg.spectrum_times)),
                ("density_times", _fmt(cfg.density_times)),
                ("e_star", _fmt(cfg.e_star)),
                ("smoothing_strides", _fmt(cfg.smoothing_strides)),
                ("bin_classes", _fmt(cfg.bin_classes)),
                ("rate", _fmt(cfg.rate)),
                ("with_baseline", _fmt(cfg.with_baseline)),
            ],
        ),
        (
            "run",
            [
                ("label", cfg.label),
                ("workers", _fmt(cfg.workers)),
                ("seedless", _fmt(cfg.seedless)),
            ],
        ),
    ]
    for name, items in sections:
        out.write(f"[{name}]\n")
        for key, value in items:
            out.write(f"{key} = {value}\n")
        out.write("\n")
    return out.getvalue()


def config_echo_lines(cfg: RunConfig) -> list[str]:
    """Flat 'section.key = value' lines for CSV header blocks."""
    lines: list[str] = []
    for line in serialize_config(cfg).splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("["):
            current = line.strip("[]")
            continue
        lines.append(f"{current}.{line}")
    return lines
