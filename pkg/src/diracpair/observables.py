"""Projections onto the free basis and everything derived from them.

The central objects are the overlap rows U_pn(t) of each evolved negative
mode n against the free positive modes p (and the diagnostic overlaps with
the free negative modes).  Summed squares give the created-pair content:

    N(t)      = sum_{p,n} |U_pn|^2          total yield
    N_p(t)    = sum_n |U_pn|^2              electron mode occupancy
    N(E,t)    = L/(2pi dE/dp) N_p(t)        electron energy spectrum
    N_n(t)    = sum_p |U_pn|^2              positron mode occupancy
    rho(x,t)  = sum_n |sum_p U_pn u_p(x)|^2 electron density
    mu(t)     = smoothed d/dt of N at a selected energy (the signal used
                for decoding control-field timing)

Projections are computed in momentum space (one FFT per component per mode,
O(N log N)); reductions always run in fixed mode-index order so repeated
runs and different worker counts give identical bits.  The p = 0 mode is
excluded from energy spectra (the Jacobian dE/dp vanishes there); both
momentum signs at a given |p| are folded into one energy sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft
from scipy import ndimage, optimize, signal

from .errors import DomainError
from .gridbasis import FreeBasis, SpatialGrid
from .potentials import ConstantEnvelope, Envelope, envelope_value

__all__ = [
    "ProjectionRecord",
    "SpectrumSnapshot",
    "RateSeries",
    "EvolutionSeries",
    "project",
    "pair_number",
    "energy_spectrum",
    "density",
    "rate_series",
    "measure_response_time",
    "estimate_period",
    "measure_interval",
    "oscillation_amplitude",
]


@dataclass(frozen=True)
class ProjectionRecord:
    """Overlap rows of one evolved negative mode at one instant."""

    time: float
    mode_index: int
    momentum: float
    row_positive: np.ndarray  # (N,) complex, fft order over lattice p
    row_negative: np.ndarray  # (N,) complex, diagnostics U_nn'

    @property
    def electron_weight(self) -> float:
        return float(np.sum(np.abs(self.row_positive) ** 2))

    @property
    def negative_weight(self) -> float:
        return float(np.sum(np.abs(self.row_negative) ** 2))

    @property
    def completeness(self) -> float:
        """Should equal the state norm (1 for unitary evolution)."""
        return self.electron_weight + self.negative_weight


def project(psi, basis: FreeBasis, *, time: float = 0.0, mode_index: int = -1) -> ProjectionRecord:
    """Project a spinor field onto both free branches at every lattice p."""
    if psi.grid is not basis.grid and psi.grid.n_points != basis.grid.n_points:
        raise DomainError("field and basis live on different grids")
    wp, wm = basis.projection_weights()
    fu = sfft.fft(psi.upper)
    fl = sfft.fft(psi.lower)
    row_p = wp[0] * fu + wp[1] * fl
    row_m = wm[0] * fu + wm[1] * fl
    momentum = float(basis.grid.momenta[mode_index]) if mode_index >= 0 else math.nan
    return ProjectionRecord(
        time=time,
        mode_index=mode_index,
        momentum=momentum,
        row_positive=row_p,
        row_negative=row_m,
    )


def pair_number(records: list[ProjectionRecord]) -> float:
    """Total created pairs: fixed-order double sum of |U_pn|^2."""
    return float(sum(rec.electron_weight for rec in records))


def _fold_classes(
    mode_values: np.ndarray,
    lattice_indices: np.ndarray,
    grid: SpatialGrid,
    energies: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Fold per-mode weights over +-p into energy samples N(E).

    mode_values[i] belongs to lattice index lattice_indices[i].  Returns
    (E ascending, N(E)) with the p = 0 mode dropped and the Jacobian
    L/(2pi dE/dp) applied per class.
    """
    c = grid.const.c
    n = grid.n_points
    accum: dict[int, float] = {}
    for val, k in zip(mode_values, lattice_indices):
        k = int(k)
        if k == 0:
            continue
        cls = min(k, n - k)  # |p| class id
        accum[cls] = accum.get(cls, 0.0) + float(val)
    classes = np.array(sorted(accum), dtype=np.int64)
    if len(classes) == 0:
        return np.empty(0), np.empty(0)
    p_abs = grid.dp * classes
    e_cls = energies[classes]
    dedp = c * c * p_abs / e_cls
    counts = np.array([accum[int(cls)] for cls in classes])
    return e_cls, grid.length / (2.0 * np.pi * dedp) * counts


@dataclass(frozen=True)
class SpectrumSnapshot:
    """Electron and positron energy spectra at one instant."""

    time: float
    energies: np.ndarray              # electron side, ascending, p != 0
    electron: np.ndarray              # N(E, t)
    electron_normalized: np.ndarray   # N(E, t) * 2pi / t (zeros at t = 0)
    positron_energies: np.ndarray
    positron: np.ndarray
    mode_counts: np.ndarray           # raw N_p over the lattice, fft order
    total: float                      # sum_p N_p, the yield at this time

    @staticmethod
    def from_mode_arrays(
        time: float,
        electron_modes: np.ndarray,
        positron_modes: np.ndarray,
        basis: FreeBasis,
    ) -> "SpectrumSnapshot":
        grid = basis.grid
        e_el, n_el = _fold_classes(
            electron_modes, np.arange(grid.n_points), grid, basis.energies
        )
        e_po, n_po = _fold_classes(
            positron_modes, basis.negative_indices, grid, basis.energies
        )
        norm = n_el * (2.0 * np.pi / time) if time > 0.0 else np.zeros_like(n_el)
        return SpectrumSnapshot(
            time=time,
            energies=e_el,
            electron=n_el,
            electron_normalized=norm,
            positron_energies=e_po,
            positron=n_po,
            mode_counts=electron_modes,
            total=float(np.sum(electron_modes)),
        )


def energy_spectrum(records: list[ProjectionRecord], basis: FreeBasis) -> SpectrumSnapshot:
    """Spectra from the projection rows of all evolved modes at one time."""
    if not records:
        raise DomainError("no projection records given")
    time = records[0].time
    n = basis.grid.n_points
    electron_modes = np.zeros(n)
    positron_modes = np.zeros(len(records))
    for i, rec in enumerate(records):
        electron_modes += np.abs(rec.row_positive) ** 2
        positron_modes[i] = rec.electron_weight
    idx = np.array([rec.mode_index for rec in records])
    grid = basis.grid
    e_el, n_el = _fold_classes(electron_modes, np.arange(n), grid, basis.energies)
    e_po, n_po = _fold_classes(positron_modes, idx, grid, basis.energies)
    norm = n_el * (2.0 * np.pi / time) if time > 0.0 else np.zeros_like(n_el)
    return SpectrumSnapshot(
        time=time,
        energies=e_el,
        electron=n_el,
        electron_normalized=norm,
        positron_energies=e_po,
        positron=n_po,
        mode_counts=electron_modes,
        total=float(np.sum(electron_modes)),
    )


def density(records: list[ProjectionRecord], basis: FreeBasis) -> np.ndarray:
    """Created-electron density rho(x) = sum_n |sum_p U_pn u_p(x)|^2."""
    grid = basis.grid
    n = grid.n_points
    alt = np.where(np.fft.fftfreq(n, d=1.0 / n).astype(np.int64) % 2 == 0, 1.0, -1.0)
    # u_p(x_j) reassembled by inverse FFT: fold the box phase and 1/sqrt(L)
    # into the momentum-space coefficients, then scale by N for numpy's ifft.
    coef = basis.chi_plus * (alt / np.sqrt(grid.length) * n)
    rho = np.zeros(n)
    for rec in records:
        g = rec.row_positive[None, :] * coef
        phi = sfft.ifft(g, axis=-1)
        rho += np.sum(np.abs(phi) ** 2, axis=0)
    return rho


@dataclass
class EvolutionSeries:
    """Reduced per-snapshot series accumulated over an evolved basis.

    electron_modes[s, k] is N_p at snapshot s for lattice column k (fft
    order); positron_modes[s, i] and negative_diag[s, i] are the positive
    and negative branch weights of evolved mode i; norms[s, i] the state
    norm squared.  Densities are stored only for requested times.
    """

    basis: FreeBasis
    times: np.ndarray
    electron_modes: np.ndarray
    positron_modes: np.ndarray
    negative_diag: np.ndarray
    norms: np.ndarray
    densities: dict[float, np.ndarray] = field(default_factory=dict)

    @staticmethod
    def allocate(basis: FreeBasis, times: np.ndarray) -> "EvolutionSeries":
        s = len(times)
        n = basis.grid.n_points
        m = basis.n_evolved
        return EvolutionSeries(
            basis=basis,
            times=np.asarray(times, dtype=float),
            electron_modes=np.zeros((s, n)),
            positron_modes=np.zeros((s, m)),
            negative_diag=np.zeros((s, m)),
            norms=np.zeros((s, m)),
        )

    def pair_yield(self) -> np.ndarray:
        """N(t): canonical fixed-order reduction over lattice columns."""
        return np.sum(self.electron_modes, axis=1)

    def completeness(self) -> np.ndarray:
        """Per-mode probability bookkeeping; 1 when nothing leaks."""
        return self.positron_modes + self.negative_diag

    def norm_drift(self) -> float:
        return float(np.max(np.abs(np.sqrt(self.norms) - 1.0)))

    def snapshot(self, time: float) -> SpectrumSnapshot:
        s = int(np.argmin(np.abs(self.times - time)))
        if not math.isclose(self.times[s], time, rel_tol=1e-9, abs_tol=1e-12):
            raise DomainError(f"no snapshot at t = {time!r}")
        return SpectrumSnapshot.from_mode_arrays(
            self.times[s], self.electron_modes[s], self.positron_modes[s], self.basis
        )


@dataclass(frozen=True)
class RateSeries:
    """Creation count and rate at a selected electron energy."""

    times: np.ndarray
    counts: np.ndarray           # N_{E*}(t)
    mu: np.ndarray               # smoothed dN/dt
    e_star: float
    mode_energy: float           # actual lattice energy used
    smoothing_strides: float
    baseline_counts: np.ndarray | None = None
    baseline_mu: np.ndarray | None = None

    def deviation(self) -> np.ndarray:
        if self.baseline_mu is None:
            raise DomainError("rate series carries no baseline")
        return self.mu - self.baseline_mu


def _nearest_energy_columns(
    basis: FreeBasis, e_star: float, bin_classes: int
) -> tuple[np.ndarray, float]:
    """Lattice columns of the bin_classes |p| classes nearest e_star."""
    grid = basis.grid
    n = grid.n_points
    cls = np.arange(1, n // 2 + 1)
    e_cls = basis.energies[cls]
    order = np.argsort(np.abs(e_cls - e_star), kind="stable")
    chosen = cls[order[:bin_classes]]
    cols: list[int] = []
    for k in chosen:
        cols.append(int(k))
        if k != n // 2:
            cols.append(int(n - k))
    return np.array(sorted(cols)), float(e_cls[order[0]])


def _smoothed_rate(times: np.ndarray, counts: np.ndarray, sigma: float) -> np.ndarray:
    dmu = np.gradient(counts, times)
    if sigma > 0.0:
        dmu = ndimage.gaussian_filter1d(dmu, sigma=sigma, mode="nearest")
    return dmu


def rate_series(
    series: EvolutionSeries,
    e_star: float,
    smoothing_strides: float = 5.0,
    *,
    bin_classes: int = 1,
    baseline: EvolutionSeries | None = None,
) -> RateSeries:
    """Build mu(t) at the lattice energy nearest e_star.

    Both momentum signs of the selected |p| class contribute (a bin of
    bin_classes classes widens the energy window).  The optional baseline
    series (same schedule, control off) rides along for decoding.
    """
    basis = series.basis
    emin, emax = float(basis.energies.min()), float(basis.energies.max())
    if not (emin <= e_star <= emax):
        raise DomainError(f"e_star = {e_star!r} outside covered range")
    cols, mode_energy = _nearest_energy_columns(basis, e_star, bin_classes)
    counts = np.sum(series.electron_modes[:, cols], axis=1)
    mu = _smoothed_rate(series.times, counts, smoothing_strides)
    base_counts = base_mu = None
    if baseline is not None:
        if len(baseline.times) != len(series.times) or not np.allclose(
            baseline.times, series.times
        ):
            raise DomainError("baseline schedule differs from the run schedule")
        base_counts = np.sum(baseline.electron_modes[:, cols], axis=1)
        base_mu = _smoothed_rate(baseline.times, base_counts, smoothing_strides)
    return RateSeries(
        times=series.times,
        counts=counts,
        mu=mu,
        e_star=e_star,
        mode_energy=mode_energy,
        smoothing_strides=smoothing_strides,
        baseline_counts=base_counts,
        baseline_mu=base_mu,
    )


def _refine_extremum(times: np.ndarray, values: np.ndarray, i: int) -> float:
    """Parabolic sub-sample refinement of an interior extremum."""
    if i <= 0 or i >= len(values) - 1:
        return float(times[i])
    y0, y1, y2 = values[i - 1], values[i], values[i + 1]
    denom = y0 - 2.0 * y1 + y2
    if denom == 0.0:
        return float(times[i])
    shift = 0.5 * (y0 - y2) / denom
    shift = float(np.clip(shift, -1.0, 1.0))
    dt = times[min(i + 1, len(times) - 1)] - times[i]
    return float(times[i] + shift * dt)


def measure_response_time(
    rate: RateSeries,
    env: Envelope,
    *,
    t_skip: float = 2.0e-3,
    lag_bounds: tuple[float, float] = (0.0, 6.0e-3),
) -> float:
    """Delay of the rate response behind the control envelope.

    Maximizes the normalized cross-correlation between the rate deviation
    from baseline and the sign-flipped envelope -f(t - lag) (a control field
    opposing the supercritical step enhances creation).  The envelope is
    evaluated analytically at shifted times, so the lag is continuous.
    """
    if isinstance(env, ConstantEnvelope):
        raise DomainError("constant envelope has no feature to time against")
    if rate.baseline_mu is None:
        raise DomainError("rate series carries no baseline")
    tm, d = _decode_signal(rate, t_skip)
    if len(tm) < 8:
        raise DomainError("series too short after transient skip")
    dnorm = math.sqrt(float(np.sum(d * d)))
    if dnorm == 0.0:
        raise DomainError("rate deviation vanishes; nothing to decode")

    def corr(lag: float) -> float:
        shifted = np.where(tm - lag >= 0.0, -envelope_value(env, tm - lag), 0.0)
        gnorm = math.sqrt(float(np.sum(shifted * shifted)))
        if gnorm == 0.0:
            return 0.0
        return float(np.sum(d * shifted)) / (dnorm * gnorm)

    lags = np.arange(lag_bounds[0], lag_bounds[1], (t[1] - t[0]) / 2.0)
    coarse = np.array([corr(x) for x in lags])
    best = int(np.argmax(coarse))
    lo = lags[max(best - 2, 0)]
    hi = lags[min(best + 2, len(lags) - 1)]
    res = optimize.minimize_scalar(
        lambda x: -corr(x), bounds=(lo, hi), method="bounded",
        options={"xatol": 1e-7},
    )
    return float(res.x)


def _decode_signal(rate: RateSeries, t_skip: float) -> tuple[np.ndarray, np.ndarray]:
    """Post-transient deviation signal used by the decoding estimators.

    Trims the leading turn-on transient and the trailing samples where the
    one-sided derivative stencil and smoothing pad distort the signal.
    """
    t = rate.times
    dt_out = t[1] - t[0] if len(t) > 1 else 0.0
    t_stop = t[-1] - 3.0 * rate.smoothing_strides * dt_out
    mask = (t >= t_skip) & (t <= t_stop)
    if rate.baseline_mu is not None:
        s = rate.deviation()[mask]
    else:
        s = rate.mu[mask]
        s = s - ndimage.uniform_filter1d(s, size=max(3, len(s) // 4), mode="nearest")
    return t[mask], s


def estimate_period(
    rate: RateSeries,
    *,
    t_skip: float = 3.0e-3,
    prominence_frac: float = 0.15,
) -> float:
    """Oscillation period of the rate: mean peak-to-peak extrema spacing."""
    t, s = _decode_signal(rate, t_skip)
    span = float(s.max() - s.min())
    if span == 0.0:
        raise DomainError("signal is flat; no oscillation")
    prom = prominence_frac * span
    spacings: list[float] = []
    for sign in (1.0, -1.0):
        peaks, _ = signal.find_peaks(sign * s, prominence=prom)
        t_ext = [_refine_extremum(t, sign * s, int(i)) for i in peaks]
        spacings.extend(float(b - a) for a, b in zip(t_ext[:-1], t_ext[1:]))
    if len(spacings) < 2:
        raise DomainError("fewer than two full oscillations in the window")
    return float(np.mean(spacings))


def measure_interval(
    rate: RateSeries,
    *,
    t_skip: float = 3.0e-3,
    dominance: float = 0.5,
) -> float:
    """Time between the two dominant rate features (|deviation| extrema)."""
    t, s = _decode_signal(rate, t_skip)
    mag = np.abs(s)
    peaks, props = signal.find_peaks(mag, prominence=0.05 * float(mag.max()))
    if len(peaks) == 0:
        raise DomainError("no features found")
    heights = mag[peaks]
    dominant = peaks[heights >= dominance * float(heights.max())]
    if len(dominant) != 2:
        raise DomainError(f"expected two dominant features, found {len(dominant)}")
    t1 = _refine_extremum(t, mag, int(dominant[0]))
    t2 = _refine_extremum(t, mag, int(dominant[1]))
    return float(abs(t2 - t1))


def oscillation_amplitude(
    spectrum: SpectrumSnapshot, band: tuple[float, float]
) -> float:
    """RMS of the normalized spectrum about its moving-average trend."""
    lo, hi = band
    mask = (spectrum.energies >= lo) & (spectrum.energies <= hi)
    vals = spectrum.electron_normalized[mask]
    if len(vals) < 4:
        raise DomainError("band selects too few spectrum points")
    trend = ndimage.uniform_filter1d(vals, size=max(3, len(vals) // 8), mode="nearest")
    resid = vals - trend
    return float(np.sqrt(np.mean(resid * resid)))
