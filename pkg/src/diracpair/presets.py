"""Named experiment presets.

Two families share the same physics and differ only in scale:

* desk2..desk7d run on a reduced lattice (L=6, N_x=2048, N_t=1500, all
  negative modes evolved) and finish in minutes each.  Their tolerance sets
  are correspondingly widened.
* fig2..fig7d carry the full production parameters (L=12, N_x=8192,
  N_t=6000) and are gated behind the --extended flag: a single run takes
  hours on a small machine.

Bundles (desk4, desk5, desk6, desk7 and their fig counterparts) expand to
several labeled runs written into one artifact directory.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .constants import ATOMIC
from .config import RunConfig
from .potentials import (
    ConstantEnvelope,
    DoubleGaussEnvelope,
    GaussSinEnvelope,
    SinusoidEnvelope,
)

__all__ = ["Preset", "PRESETS", "get_preset", "preset_names"]

_C = ATOMIC.c
_C2 = ATOMIC.c2


@dataclass(frozen=True)
class Preset:
    """A named bundle of runs plus the tolerances its outputs are read at."""

    name: str
    description: str
    runs: tuple[RunConfig, ...]
    tolerances: dict[str, object]
    extended: bool = False

    def expected_outputs(self) -> list[str]:
        names = ["manifest.json"]
        for cfg in self.runs:
            names.append(f"yield_{cfg.label}.csv")
            names.append(f"diagnostics_{cfg.label}.csv")
            for t in cfg.spectrum_times:
                names.append(f"electron_spectrum_{cfg.label}_t{t:g}.csv")
                names.append(f"positron_spectrum_{cfg.label}_t{t:g}.csv")
            for t in cfg.density_times:
                names.append(f"density_{cfg.label}_t{t:g}.csv")
            if cfg.rate:
                names.append(f"rate_{cfg.label}.csv")
        return names


_DESK = RunConfig(
    length=6.0,
    n_points=2048,
    window=None,  # the |p| <= 8c prescription covers this whole lattice
    t_max=0.03,
    n_steps=1500,
    stride=10,
    v1=2.5 * _C2,
    v2=0.25 * _C2,
    w=0.075 / _C,
    d=0.2,
    e_star=1.25 * _C2,
)

_PAPER = replace(
    _DESK, length=12.0, n_points=8192, n_steps=6000, stride=20, window=None
)

_SPECTRUM_TOL = {
    "spectrum_band": (1.1 * _C2, 1.65 * _C2),
    "spectrum_rel_of_band_max": 0.15,
    "peak_offset_lattice_spacings": 1,
    "norm_drift": 1e-10,
    "completeness": 1e-8,
}


def _sin(omega: float, phi0: float = 0.0) -> SinusoidEnvelope:
    return SinusoidEnvelope(omega=omega, phi0=phi0)


def _fig2(base: RunConfig) -> tuple[RunConfig, ...]:
    return (
        replace(
            base,
            label="main",
            spectrum_times=(0.024, 0.03),
            density_times=(0.015, 0.0225, 0.03),
        ),
    )


def _fig3(base: RunConfig) -> tuple[RunConfig, ...]:
    return (replace(base, label="main", v2=-0.25 * _C2, spectrum_times=(0.03,)),)


def _fig4(base: RunConfig) -> tuple[RunConfig, ...]:
    spect = (0.03,)
    return (
        replace(base, label="nocontrol", v2=0.0, spectrum_times=spect),
        replace(base, label="same", spectrum_times=spect),
        replace(base, label="opposite", v2=-0.25 * _C2, spectrum_times=spect),
        replace(base, label="slow", envelope=_sin(0.011 * _C2), spectrum_times=spect),
        replace(base, label="fast", envelope=_sin(2.0 * _C2), spectrum_times=spect),
    )


def _fig5(base: RunConfig) -> tuple[RunConfig, ...]:
    runs = []
    for tag, wc in (("w03", 0.3 / _C), ("w06", 0.6 / _C), ("w1", 1.0 / _C), ("w10", 10.0 / _C)):
        runs.append(replace(base, label=tag, w_ctrl=wc, spectrum_times=(0.03,)))
    return tuple(runs)


def _fig6(base: RunConfig) -> tuple[RunConfig, ...]:
    spect = (0.03,)
    runs = [
        replace(
            base, label="static", envelope=_sin(0.0, phi0=0.5 * 3.141592653589793),
            spectrum_times=spect,
        ),
        replace(base, label="w0011", envelope=_sin(0.011 * _C2), spectrum_times=spect),
    ]
    for tag, omega in (("w01", 0.1), ("w05", 0.5), ("w1", 1.0), ("w2", 2.0)):
        runs.append(
            replace(base, label=tag, envelope=_sin(omega * _C2), spectrum_times=spect)
        )
    return tuple(runs)


_FORM_ENVELOPES = {
    "a": _sin(0.1 * _C2, phi0=3.141592653589793),  # -sin(w t)
    "b": GaussSinEnvelope(t0=0.015, sigma=0.005, omega=0.1 * _C2, sign=-1.0),
    "c": DoubleGaussEnvelope(t1=0.01, t2=0.02, sigma=0.001, sign1=-1.0, sign2=-1.0),
    "d": DoubleGaussEnvelope(t1=0.006, t2=0.024, sigma=0.002, sign1=-1.0, sign2=1.0),
}


def _fig7(base: RunConfig, form: str) -> tuple[RunConfig, ...]:
    cfg = replace(
        base,
        label=f"form_{form}",
        stride=5,
        envelope=_FORM_ENVELOPES[form],
        spectrum_times=(0.03,),
        rate=True,
        with_baseline=True,
    )
    return (cfg,)


_DECODE_TOL = {
    "tau_bracket": (2.0e-3, 2.7e-3),
    "tau_analytic": 2.432e-3,
    "period_rel": 0.06,
    "interval_rel": 0.06,
}


def _catalog(base: RunConfig, prefix: str, extended: bool) -> dict[str, Preset]:
    presets: dict[str, Preset] = {}

    def add(suffix: str, description: str, runs, tol):
        name = f"{prefix}{suffix}"
        presets[name] = Preset(
            name=name,
            description=description,
            runs=runs,
            tolerances=dict(tol, extended_runtime=extended),
            extended=extended,
        )

    add("2", "static double step: spectra vs analytic transmission", _fig2(base), _SPECTRUM_TOL)
    add("3", "opposite control: discrete peaks and positron excess", _fig3(base), {
        "min_discrete_peaks": 5,
        "peak_count_vs_bound_levels": 2,
        "positron_excess_band": (1.0 * _C2, 1.25 * _C2),
    })
    add("4", "yield vs time for control directions and frequencies", _fig4(base), {
        "same_vs_nocontrol_rel": 0.02,
        "ordering": "opposite < same; fast > slow",
    })
    add("5", "control width study", _fig5(base), {
        "oscillation_band": (1.3 * _C2, 1.65 * _C2),
        "yield_spread_rel": 0.02,
    })
    add("6", "control frequency study", _fig6(base), {})
    for form in "abcd":
        add(
            f"7{form}",
            f"time-encoded control, waveform {form}: rate decoding",
            _fig7(base, form),
            _DECODE_TOL,
        )
    add(
        "7",
        "all four time-encoded waveforms",
        tuple(cfg for form in "abcd" for cfg in _fig7(base, form)),
        _DECODE_TOL,
    )
    return presets


PRESETS: dict[str, Preset] = {}
PRESETS.update(_catalog(_DESK, "desk", extended=False))
PRESETS.update(_catalog(_PAPER, "fig", extended=True))


def preset_names() -> list[str]:
    return sorted(PRESETS)


def get_preset(name: str) -> Preset:
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; known: {', '.join(preset_names())}")
    return PRESETS[name]
