"""Run orchestration: presets to artifact directories, decode, validation.

Artifact layout per preset directory:

    manifest.json                       config echo, version, wall time,
                                        tolerance set, resolution report
    yield_<label>.csv                   t, N
    diagnostics_<label>.csv             t, norm drift, completeness extrema
    electron_spectrum_<label>_t<t>.csv  E, N(E,t), N(E,t)*2pi/t, T_E oracle
    positron_spectrum_<label>_t<t>.csv  same columns, positron side
    density_<label>_t<t>.csv            x, rho
    rate_<label>.csv                    t, mu, f, baseline_mu
    transmission_table.csv              E, T closed form, T transfer matrix

Every CSV starts with a '#' header block echoing the full run configuration,
so each file is self-describing (decode rebuilds the envelope from it).  No
timestamps enter CSVs: repeated runs are byte-identical.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import __version__
from .analytic import (
    bound_state_levels,
    response_time,
    transfer_matrix_transmission,
    transmission_coefficient,
)
from .config import RunConfig, config_echo_lines, parse_config, serialize_config
from .constants import ATOMIC
from .errors import ConfigError, DiracpairError, DomainError, InvariantViolation
from .gridbasis import build_basis, build_grid, make_free_mode
from .observables import (
    EvolutionSeries,
    RateSeries,
    estimate_period,
    measure_interval,
    measure_response_time,
    project,
    rate_series,
)
from .potentials import (
    ConstantEnvelope,
    DoubleGaussEnvelope,
    FieldSpec,
    GaussSinEnvelope,
    SinusoidEnvelope,
    envelope_value,
    sample_potential,
)
from .presets import Preset, get_preset
from .propagator import (
    Schedule,
    SpinorField,
    evolve_basis,
    evolve_mode,
    precompute_kinetic,
    resolve_workers,
)

__all__ = [
    "RunResult",
    "PresetResult",
    "run_config",
    "run_preset",
    "decode_rate_csv",
    "validate",
    "transmission_table",
]

NORM_DRIFT_ABORT = 1e-8
COMPLETENESS_ABORT = 1e-6


def _fmt_float(x: float) -> str:
    return repr(float(x))


def write_csv(path: Path, kind: str, cfg: RunConfig | None, columns: dict[str, np.ndarray]) -> None:
    names = list(columns)
    arrays = [np.asarray(columns[k]) for k in names]
    n = len(arrays[0])
    lines = [f"# diracpair {__version__} {kind}"]
    if cfg is not None:
        lines += [f"# {echo}" for echo in config_echo_lines(cfg)]
    lines.append("# columns: " + ",".join(names))
    lines.append(",".join(names))
    for i in range(n):
        lines.append(",".join(_fmt_float(a[i]) for a in arrays))
    path.write_text("\n".join(lines) + "\n")


def read_csv(path: Path) -> tuple[dict[str, str], dict[str, np.ndarray]]:
    """Read a package CSV back into (header echo dict, column arrays)."""
    header: dict[str, str] = {}
    rows: list[list[float]] = []
    names: list[str] | None = None
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                key, _, value = body.partition("=")
                header[key.strip()] = value.strip()
            continue
        if names is None:
            names = line.split(",")
            continue
        rows.append([float(tok) for tok in line.split(",")])
    if names is None:
        raise ConfigError(f"{path}: no column header found")
    data = np.array(rows) if rows else np.empty((0, len(names)))
    return header, {name: data[:, i] for i, name in enumerate(names)}


def _oracle_column(
    energies: np.ndarray, v1: float, v2_eff: float, d: float
) -> np.ndarray:
    out = np.full(len(energies), math.nan)
    for i, e in enumerate(energies):
        try:
            out[i] = transmission_coefficient(e, v1, v2_eff, d)
        except DiracpairError:
            pass
    return out


def _static_v2(cfg: RunConfig) -> float:
    """Effective static control height: V2*sign for constant envelopes, else 0."""
    if isinstance(cfg.envelope, ConstantEnvelope):
        return cfg.v2 * cfg.envelope.sign
    return 0.0


@dataclass
class RunResult:
    config: RunConfig
    series: EvolutionSeries
    rate: RateSeries | None
    baseline: EvolutionSeries | None


@dataclass
class PresetResult:
    name: str
    out_dir: Path
    runs: dict[str, RunResult]


def _guard_invariants(label: str, series: EvolutionSeries) -> None:
    drift = series.norm_drift()
    if drift > NORM_DRIFT_ABORT:
        raise InvariantViolation(
            f"run {label!r}: norm drift {drift:.3e} exceeds {NORM_DRIFT_ABORT:.0e}"
        )
    comp = series.completeness()
    worst = float(np.max(np.abs(comp - 1.0))) if comp.size else 0.0
    if worst > COMPLETENESS_ABORT:
        raise InvariantViolation(
            f"run {label!r}: completeness defect {worst:.3e} exceeds "
            f"{COMPLETENESS_ABORT:.0e}"
        )


def run_config(
    cfg: RunConfig,
    out_dir: Path,
    *,
    workers: int | None = None,
    baseline_cache: dict[str, EvolutionSeries] | None = None,
) -> RunResult:
    """Execute one configured run and write its artifacts into out_dir."""
    cfg.validate()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    workers = workers if workers is not None else cfg.workers

    basis = cfg.basis()
    spec = cfg.spec()
    schedule = cfg.schedule()
    series = evolve_basis(
        basis, spec, schedule, workers=workers, density_times=cfg.density_times
    )
    _guard_invariants(cfg.label, series)

    baseline = None
    rate = None
    if cfg.rate:
        base_series = None
        if cfg.with_baseline:
            base_cfg = cfg.baseline_config()
            key = serialize_config(replace(base_cfg, label="baseline"))
            if baseline_cache is not None and key in baseline_cache:
                base_series = baseline_cache[key]
            else:
                base_series = evolve_basis(
                    basis, base_cfg.spec(), schedule, workers=workers
                )
                _guard_invariants(base_cfg.label, base_series)
                if baseline_cache is not None:
                    baseline_cache[key] = base_series
        baseline = base_series
        rate = rate_series(
            series,
            cfg.e_star,
            cfg.smoothing_strides,
            bin_classes=cfg.bin_classes,
            baseline=base_series,
        )

    _write_run_artifacts(out_dir, cfg, series, rate)
    return RunResult(config=cfg, series=series, rate=rate, baseline=baseline)


def _write_run_artifacts(
    out_dir: Path, cfg: RunConfig, series: EvolutionSeries, rate: RateSeries | None
) -> None:
    label = cfg.label
    write_csv(
        out_dir / f"yield_{label}.csv",
        "yield",
        cfg,
        {"t": series.times, "N": series.pair_yield()},
    )
    comp = series.completeness()
    write_csv(
        out_dir / f"diagnostics_{label}.csv",
        "diagnostics",
        cfg,
        {
            "t": series.times,
            "N": series.pair_yield(),
            "norm_drift_max": np.max(np.abs(np.sqrt(series.norms) - 1.0), axis=1),
            "completeness_min": np.min(comp, axis=1),
            "completeness_max": np.max(comp, axis=1),
        },
    )
    v2_eff = _static_v2(cfg)
    for t in cfg.spectrum_times:
        snap = series.snapshot(t)
        write_csv(
            out_dir / f"electron_spectrum_{label}_t{t:g}.csv",
            "electron-spectrum",
            cfg,
            {
                "E": snap.energies,
                "N_E": snap.electron,
                "N_E_normalized": snap.electron_normalized,
                "T_E_oracle": _oracle_column(snap.energies, cfg.v1, v2_eff, cfg.d),
            },
        )
        pos_norm = (
            snap.positron * (2.0 * np.pi / t) if t > 0 else np.zeros_like(snap.positron)
        )
        write_csv(
            out_dir / f"positron_spectrum_{label}_t{t:g}.csv",
            "positron-spectrum",
            cfg,
            {
                "E": snap.positron_energies,
                "N_E": snap.positron,
                "N_E_normalized": pos_norm,
                "T_E_oracle": _oracle_column(snap.positron_energies, cfg.v1, v2_eff, cfg.d),
            },
        )
    for t, rho in series.densities.items():
        write_csv(
            out_dir / f"density_{label}_t{t:g}.csv",
            "density",
            cfg,
            {"x": series.basis.grid.x, "rho": rho},
        )
    if rate is not None:
        f_vals = envelope_value(cfg.envelope, series.times)
        base_mu = (
            rate.baseline_mu
            if rate.baseline_mu is not None
            else np.full_like(rate.mu, math.nan)
        )
        write_csv(
            out_dir / f"rate_{label}.csv",
            "rate",
            cfg,
            {"t": rate.times, "mu": rate.mu, "f": np.broadcast_to(f_vals, rate.times.shape), "baseline_mu": base_mu},
        )


def transmission_table(
    v1: float, v2: float, d: float, n_samples: int = 200
) -> dict[str, np.ndarray]:
    """Closed form vs transfer matrix over the open transmission window."""
    c2 = ATOMIC.c2
    lo, hi = c2, v1 + v2 - c2
    energies = np.linspace(lo, hi, n_samples + 2)[1:-1]
    closed = np.array([transmission_coefficient(e, v1, v2, d) for e in energies])
    regions = [(0.0, None), (v2, d), (v1 + v2, None)]
    transfer = np.array(
        [transfer_matrix_transmission(e, regions) for e in energies]
    )
    return {
        "E": energies,
        "T_closed": closed,
        "T_transfer": transfer,
        "abs_diff": np.abs(closed - transfer),
    }


def run_preset(
    preset: str | Preset,
    out_dir: Path,
    *,
    workers: int | None = None,
    extended: bool = False,
) -> PresetResult:
    """Run every configuration of a preset into one artifact directory."""
    if isinstance(preset, str):
        preset = get_preset(preset)
    if preset.extended and not extended:
        raise ConfigError(
            f"preset {preset.name!r} is extended-runtime; pass extended=True "
            "(CLI: --extended) to run it"
        )
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    baseline_cache: dict[str, EvolutionSeries] = {}
    results: dict[str, RunResult] = {}
    oracle_done: set[tuple[float, float, float]] = set()
    for cfg in preset.runs:
        results[cfg.label] = run_config(
            cfg, out_dir, workers=workers, baseline_cache=baseline_cache
        )
        v2_eff = _static_v2(cfg)
        key = (cfg.v1, v2_eff, cfg.d)
        if (
            isinstance(cfg.envelope, ConstantEnvelope)
            and v2_eff + cfg.v1 > 2.0 * ATOMIC.c2
            and key not in oracle_done
        ):
            write_csv(
                out_dir / "transmission_table.csv",
                "transmission-table",
                cfg,
                transmission_table(cfg.v1, v2_eff, cfg.d),
            )
            oracle_done.add(key)
    manifest = {
        "preset": preset.name,
        "description": preset.description,
        "version": __version__,
        "extended_runtime": preset.extended,
        "tolerances": _jsonable(preset.tolerances),
        "workers": resolve_workers(workers),
        "wall_time_s": round(time.perf_counter() - t0, 3),
        "runs": {
            cfg.label: {
                "config": serialize_config(cfg),
                "resolution": cfg.spec().resolution_report(cfg.grid()),
            }
            for cfg in preset.runs
        },
        "outputs": preset.expected_outputs(),
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return PresetResult(name=preset.name, out_dir=out_dir, runs=results)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (tuple, list)):
        return [_jsonable(v) for v in obj]
    return obj


def _config_from_header(header: dict[str, str]) -> RunConfig:
    sections: dict[str, list[str]] = {}
    for key, value in header.items():
        if "." not in key:
            continue
        section, _, name = key.partition(".")
        sections.setdefault(section, []).append(f"{name} = {value}")
    text = "\n".join(
        f"[{section}]\n" + "\n".join(lines) for section, lines in sections.items()
    )
    return parse_config(text)


def decode_rate_csv(path: Path) -> dict[str, object]:
    """Decode temporal information from a rate CSV written by run().

    Reports the measured response time against the analytic travel time and,
    depending on the envelope, the oscillation period or the two-feature
    interval against the encoded values.
    """
    header, cols = read_csv(Path(path))
    cfg = _config_from_header(header)
    if "mu" not in cols or "baseline_mu" not in cols:
        raise ConfigError(f"{path}: not a rate CSV")
    base = cols["baseline_mu"]
    if np.any(np.isnan(base)):
        raise ConfigError(f"{path}: rate CSV carries no baseline; cannot decode")
    rate = RateSeries(
        times=cols["t"],
        counts=np.zeros_like(cols["t"]),
        mu=cols["mu"],
        e_star=cfg.e_star,
        mode_energy=math.nan,
        smoothing_strides=cfg.smoothing_strides,
        baseline_counts=np.zeros_like(cols["t"]),
        baseline_mu=base,
    )
    env = cfg.envelope
    tau_analytic = response_time(cfg.d, cfg.e_star)
    tau_measured = measure_response_time(rate, env)
    report: dict[str, object] = {
        "envelope": type(env).__name__,
        "e_star": cfg.e_star,
        "separation": cfg.d,
        "tau_measured": tau_measured,
        "tau_analytic": tau_analytic,
        "tau_rel_err": abs(tau_measured - tau_analytic) / tau_analytic,
    }
    if isinstance(env, (SinusoidEnvelope, GaussSinEnvelope)) and env.omega > 0.0:
        encoded = 2.0 * math.pi / env.omega
        measured = estimate_period(rate)
        report.update(
            period_measured=measured,
            period_encoded=encoded,
            period_rel_err=abs(measured - encoded) / encoded,
        )
    elif isinstance(env, DoubleGaussEnvelope):
        encoded = abs(env.t2 - env.t1)
        measured = measure_interval(rate)
        report.update(
            interval_measured=measured,
            interval_encoded=encoded,
            interval_rel_err=abs(measured - encoded) / encoded,
        )
    return report


# ---------------------------------------------------------------------------
# Validation suite
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def check_orthonormality(n_points: int = 256) -> CheckResult:
    grid = build_grid(2.0, n_points)
    basis = build_basis(grid)
    sel = np.arange(0, n_points, max(1, n_points // 32))
    worst = 0.0
    modes = [make_free_mode(grid, grid.momenta[k], b) for k in sel for b in ("positive", "negative")]
    fields = np.array([m.samples(grid) for m in modes])
    gram = np.einsum("icx,jcx->ij", fields.conj(), fields) * grid.dx
    worst = float(np.max(np.abs(gram - np.eye(len(modes)))))
    return CheckResult("orthonormality", worst < 1e-12, f"max defect {worst:.2e} (tol 1e-12)")


def check_kinetic_unitarity() -> CheckResult:
    grid = build_grid(2.0, 256)
    defect = precompute_kinetic(grid, 1.0e-5).unitarity_defect()
    return CheckResult("kinetic-unitarity", defect < 1e-14, f"max defect {defect:.2e} (tol 1e-14)")


def check_free_phase(dt_sign: float = 1.0) -> CheckResult:
    """Free eigenmode must pick up exactly exp(-i E t); flips fail this."""
    grid = build_grid(2.0, 128)
    basis = build_basis(grid)
    spec = FieldSpec(V1=0.0, V2=0.0, w=0.01, d=0.1)
    schedule = Schedule(t_max=5e-4, n_steps=100, stride=100)
    mode = make_free_mode(grid, grid.momenta[3], "positive")
    psi = SpinorField.from_mode(grid, mode)
    factors = precompute_kinetic(grid, dt_sign * schedule.dt)
    from .propagator import _step_chunk  # single authoritative step path

    z = psi.packed()
    for m in range(schedule.n_steps):
        v = sample_potential(spec, grid, (m + 0.5) * schedule.dt)
        phase = np.exp(-0.5j * schedule.dt * v)
        _step_chunk(z, phase, factors)
    rec = project(SpinorField(grid, z[0, 0], z[0, 1]), basis, mode_index=3)
    got = rec.row_positive[3]
    expect = np.exp(-1j * mode.energy * schedule.t_max)
    err = abs(got - expect)
    return CheckResult("free-phase", err < 1e-10, f"phase error {err:.2e} (tol 1e-10)")


def check_null_field() -> CheckResult:
    grid = build_grid(2.0, 128)
    basis = build_basis(grid)
    spec = FieldSpec(V1=0.0, V2=0.0, w=0.01, d=0.1)
    schedule = Schedule(t_max=5e-4, n_steps=50, stride=25)
    series = evolve_basis(basis, spec, schedule)
    worst = float(np.max(series.pair_yield()))
    return CheckResult("null-field", worst < 1e-20, f"max N(t) {worst:.2e} (tol 1e-20)")


def check_oracle_agreement() -> CheckResult:
    table = transmission_table(2.5 * ATOMIC.c2, 0.25 * ATOMIC.c2, 0.2)
    worst = float(np.max(table["abs_diff"]))
    return CheckResult("oracle-agreement", worst < 1e-10, f"max |diff| {worst:.2e} (tol 1e-10)")


def check_bound_levels() -> CheckResult:
    levels = bound_state_levels(0.25 * ATOMIC.c2, 0.2)
    worst = float(np.max(levels.residuals)) if len(levels) else math.inf
    ok = len(levels) > 0 and worst < 1e-10
    return CheckResult(
        "bound-levels", ok, f"{len(levels)} levels, max residual {worst:.2e} (tol 1e-10)"
    )


def check_convergence_order() -> CheckResult:
    grid = build_grid(2.0, 128)
    c2 = ATOMIC.c2
    spec = FieldSpec(V1=2.5 * c2, V2=0.25 * c2, w=0.075 / ATOMIC.c, d=0.2)
    mode = make_free_mode(grid, grid.momenta[5], "negative")
    t_max = 4.0e-4

    def final_state(n_steps: int) -> np.ndarray:
        schedule = Schedule(t_max=t_max, n_steps=n_steps, stride=n_steps)
        psi = evolve_mode(grid, mode, spec, schedule)
        return np.concatenate([psi.upper, psi.lower])

    ref = final_state(800)  # 4x finer than the finest tested step
    err_coarse = float(np.linalg.norm(final_state(100) - ref))
    err_fine = float(np.linalg.norm(final_state(200) - ref))
    ratio = err_coarse / err_fine if err_fine else math.inf
    return CheckResult(
        "convergence-order",
        ratio >= 3.5,
        f"error ratio {ratio:.2f} on dt halving (need >= 3.5)",
    )


def check_evolution_invariants(desk: bool = False) -> CheckResult:
    c2 = ATOMIC.c2
    if desk:
        cfg = get_preset("desk2").runs[0]
        cfg = replace(cfg, density_times=())
    else:
        cfg = RunConfig(
            length=6.0,
            n_points=512,
            window=2.0 * ATOMIC.c,
            t_max=2.0e-3,
            n_steps=100,
            stride=20,
            v1=2.5 * c2,
            v2=0.25 * c2,
            w=0.075 / ATOMIC.c,
            d=0.2,
            spectrum_times=(),
        )
    series = evolve_basis(cfg.basis(), cfg.spec(), cfg.schedule())
    drift = series.norm_drift()
    comp = float(np.max(np.abs(series.completeness() - 1.0)))
    ok = drift < 1e-10 and comp < 1e-8
    return CheckResult(
        "evolution-invariants",
        ok,
        f"norm drift {drift:.2e} (tol 1e-10), completeness defect {comp:.2e} (tol 1e-8)",
    )


def check_determinism() -> CheckResult:
    c2 = ATOMIC.c2
    cfg = RunConfig(
        length=4.0,
        n_points=256,
        window=1.0 * ATOMIC.c,
        t_max=1.0e-3,
        n_steps=50,
        stride=10,
        v1=2.5 * c2,
        v2=0.25 * c2,
        w=0.075 / ATOMIC.c,
        d=0.2,
        spectrum_times=(),
    )

    def run_once(workers: int) -> bytes:
        series = evolve_basis(cfg.basis(), cfg.spec(), cfg.schedule(), workers=workers)
        return series.electron_modes.tobytes() + series.positron_modes.tobytes()

    a, b, c = run_once(1), run_once(1), run_once(4)
    ok = a == b and a == c
    return CheckResult(
        "determinism", ok, "byte-identical across repeats and worker counts"
        if ok else "outputs differ between repeats or worker counts"
    )


def validate(desk: bool = False) -> list[CheckResult]:
    """Run the invariant suite; desk=True uses the full desk-scale run."""
    return [
        check_orthonormality(),
        check_kinetic_unitarity(),
        check_free_phase(),
        check_null_field(),
        check_oracle_agreement(),
        check_bound_levels(),
        check_convergence_order(),
        check_evolution_invariants(desk=desk),
        check_determinism(),
    ]
