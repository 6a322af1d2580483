"""Split-operator time evolution of spinor fields under the full Hamiltonian.

One step advances psi by

    exp(-i V(x, t+dt/2) dt/2) . F^-1 K F . exp(-i V(x, t+dt/2) dt/2)

(Strang splitting, second order; the potential is frozen at the midpoint
time).  K is the free factor exp(-i h0(p) dt) applied per momentum column,
exponentiated in closed form:

    exp(-i h0 dt) = cos(E dt) I - i sin(E dt) (c p sigma1 + c^2 sigma3)/E.

Boundaries are periodic (the transforms imply them); an optional absorbing
mask is available but off by default, matching a plain periodic box.

Whole-basis evolution packs all evolved modes into an (M, 2, N_x) block and
streams fixed-size row chunks through the step pipeline, optionally on a
thread pool.  Chunking and threading never change results: kernels are
elementwise per row and every cross-mode reduction happens in fixed mode
order on full buffers.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterator

import numpy as np
import scipy.fft as sfft

from . import _kernels
from ._kernels import CHUNK_ROWS
from .constants import PhysicalConstants
from .errors import DomainError
from .gridbasis import FreeBasis, FreeMode, SpatialGrid
from .observables import EvolutionSeries, ProjectionRecord
from .potentials import FieldSpec, sample_potential

__all__ = [
    "Schedule",
    "SpinorField",
    "KineticFactors",
    "resolve_workers",
    "precompute_kinetic",
    "step",
    "evolve_mode",
    "evolve_basis",
    "iter_projection_records",
]

WORKERS_ENV = "DIRACPAIR_WORKERS"


def resolve_workers(workers: int | None = None) -> int:
    """Worker count: explicit argument, else env override, else cpu count."""
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    return max(1, os.cpu_count() or 1)


@dataclass(frozen=True)
class Schedule:
    """Evolution horizon t_max split into n_steps, observed every stride."""

    t_max: float
    n_steps: int
    stride: int = 1

    def __post_init__(self) -> None:
        if self.t_max <= 0.0:
            raise DomainError(f"t_max must be positive, got {self.t_max!r}")
        if self.n_steps < 0:
            raise DomainError(f"n_steps must be nonnegative, got {self.n_steps!r}")
        if self.stride < 1:
            raise DomainError(f"stride must be >= 1, got {self.stride!r}")
        if self.n_steps % self.stride != 0:
            raise DomainError("n_steps must be a multiple of the output stride")

    @property
    def dt(self) -> float:
        return self.t_max / self.n_steps if self.n_steps else 0.0

    @property
    def snapshot_times(self) -> np.ndarray:
        n_snap = self.n_steps // self.stride + 1
        return np.arange(n_snap) * (self.stride * self.dt)


@dataclass
class SpinorField:
    """Two-component complex field sampled on the grid."""

    grid: SpatialGrid
    upper: np.ndarray
    lower: np.ndarray

    def norm(self) -> float:
        total = np.sum(np.abs(self.upper) ** 2) + np.sum(np.abs(self.lower) ** 2)
        return float(np.sqrt(self.grid.dx * total))

    def copy(self) -> "SpinorField":
        return SpinorField(self.grid, self.upper.copy(), self.lower.copy())

    @staticmethod
    def from_mode(grid: SpatialGrid, mode: FreeMode) -> "SpinorField":
        samples = mode.samples(grid)
        return SpinorField(grid, np.ascontiguousarray(samples[0]), np.ascontiguousarray(samples[1]))

    def packed(self) -> np.ndarray:
        z = np.empty((1, 2, self.grid.n_points), dtype=np.complex128)
        z[0, 0] = self.upper
        z[0, 1] = self.lower
        return z


@dataclass(frozen=True)
class KineticFactors:
    """Closed-form exp(-i h0(p) dt) per momentum column.

    Stored as coefficients of {I, sigma1, sigma3}: cos(E dt), and
    -i sin(E dt) c p / E, -i sin(E dt) c^2 / E.  Each 2x2 factor is unitary.
    """

    grid: SpatialGrid
    dt: float
    coef_identity: np.ndarray
    coef_sigma1: np.ndarray
    coef_sigma3: np.ndarray
    _a: np.ndarray = field(repr=False, default=None)  # type: ignore[assignment]
    _b: np.ndarray = field(repr=False, default=None)  # type: ignore[assignment]
    _d: np.ndarray = field(repr=False, default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        object.__setattr__(self, "_a", self.coef_identity + self.coef_sigma3)
        object.__setattr__(self, "_b", self.coef_sigma1.copy())
        object.__setattr__(self, "_d", self.coef_identity - self.coef_sigma3)

    def matrix(self, k: int) -> np.ndarray:
        """The explicit 2x2 factor at lattice column k."""
        return np.array(
            [[self._a[k], self._b[k]], [self._b[k], self._d[k]]], dtype=np.complex128
        )

    def unitarity_defect(self) -> float:
        """max_k || K^dagger K - I ||_max."""
        aa = np.abs(self._a) ** 2 + np.abs(self._b) ** 2
        dd = np.abs(self._d) ** 2 + np.abs(self._b) ** 2
        off = np.conj(self._a) * self._b + np.conj(self._b) * self._d
        return float(
            max(
                np.max(np.abs(aa - 1.0)),
                np.max(np.abs(dd - 1.0)),
                np.max(np.abs(off)),
            )
        )


def precompute_kinetic(
    grid: SpatialGrid, dt: float, *, const: PhysicalConstants | None = None
) -> KineticFactors:
    """Build the momentum-space kinetic factors for one step of size dt."""
    if dt <= 0.0:
        raise DomainError(f"dt must be positive, got {dt!r}")
    const = const or grid.const
    c = const.c
    p = grid.momenta
    energy = c * np.sqrt(c * c + p * p)
    phase = energy * dt
    sin_over_e = np.sin(phase) / energy
    return KineticFactors(
        grid=grid,
        dt=dt,
        coef_identity=np.cos(phase).astype(np.complex128),
        coef_sigma1=(-1j * sin_over_e * c * p).astype(np.complex128),
        coef_sigma3=(-1j * sin_over_e * c * c).astype(np.complex128),
    )


def _step_chunk(z: np.ndarray, phase: np.ndarray, factors: KineticFactors) -> None:
    """Advance one packed row chunk by a full Strang step, in place."""
    n = z.shape[-1]
    _kernels.kick(z, phase)
    f = sfft.fft(z.reshape(-1, n), axis=-1, workers=1).reshape(z.shape)
    _kernels.mix(f, factors._a, factors._b, factors._d)
    z[...] = sfft.ifft(f.reshape(-1, n), axis=-1, workers=1, overwrite_x=True).reshape(
        z.shape
    )
    _kernels.kick(z, phase)


def _chunks(m: int) -> list[slice]:
    return [slice(i, min(i + CHUNK_ROWS, m)) for i in range(0, m, CHUNK_ROWS)]


def _run_chunks(fn, items, pool: ThreadPoolExecutor | None) -> None:
    if pool is None or len(items) == 1:
        for it in items:
            fn(it)
    else:
        list(pool.map(fn, items))


def _absorbing_mask(grid: SpatialGrid, width: float) -> np.ndarray:
    """cos^2 rolloff within `width` of each box edge."""
    edge = np.minimum(grid.x - grid.x[0], grid.x[-1] + grid.dx - grid.x)
    ramp = np.clip(edge / width, 0.0, 1.0)
    return np.sin(0.5 * np.pi * ramp) ** 2


def _evolve_packed(
    z: np.ndarray,
    grid: SpatialGrid,
    spec: FieldSpec,
    schedule: Schedule,
    *,
    workers: int | None = None,
    on_snapshot: Callable[[int, float, np.ndarray], None] | None = None,
    absorb_width: float | None = None,
) -> np.ndarray:
    """Drive a packed state through the schedule, firing snapshot callbacks."""
    n_steps, stride, dt = schedule.n_steps, schedule.stride, schedule.dt
    if on_snapshot is not None:
        on_snapshot(0, 0.0, z)
    if n_steps == 0:
        return z
    factors = precompute_kinetic(grid, dt, const=grid.const)
    mask = _absorbing_mask(grid, absorb_width) if absorb_width else None
    slices = _chunks(z.shape[0])
    n_workers = min(resolve_workers(workers), len(slices))
    pool = ThreadPoolExecutor(n_workers) if n_workers > 1 else None
    try:
        for m in range(n_steps):
            t_mid = (m + 0.5) * dt
            v = sample_potential(spec, grid, t_mid)
            phase = np.exp(-0.5j * dt * v)
            if mask is not None:
                phase = phase * np.sqrt(mask)

            def advance(sl: slice) -> None:
                _step_chunk(z[sl], phase, factors)

            _run_chunks(advance, slices, pool)
            done = m + 1
            if on_snapshot is not None and done % stride == 0:
                on_snapshot(done // stride, done * dt, z)
    finally:
        if pool is not None:
            pool.shutdown()
    return z


def step(
    psi: SpinorField,
    spec: FieldSpec,
    t: float,
    dt: float,
    factors: KineticFactors,
) -> SpinorField:
    """One Strang step from t to t + dt; returns a new field."""
    if factors.grid.n_points != psi.grid.n_points or factors.dt != dt:
        raise DomainError("kinetic factors were built for a different grid or dt")
    z = psi.packed()
    v = sample_potential(spec, psi.grid, t + 0.5 * dt)
    phase = np.exp(-0.5j * dt * v)
    _step_chunk(z, phase, factors)
    return SpinorField(psi.grid, z[0, 0].copy(), z[0, 1].copy())


def evolve_mode(
    grid: SpatialGrid,
    initial: FreeMode,
    spec: FieldSpec,
    schedule: Schedule,
    observer: Callable[[float, SpinorField], None] | None = None,
    *,
    workers: int | None = None,
    absorb_width: float | None = None,
) -> SpinorField:
    """Evolve a single free mode, invoking observer at every output stride."""
    z = SpinorField.from_mode(grid, initial).packed()

    def on_snapshot(_s: int, t: float, zz: np.ndarray) -> None:
        if observer is not None:
            observer(t, SpinorField(grid, zz[0, 0].copy(), zz[0, 1].copy()))

    _evolve_packed(
        z, grid, spec, schedule,
        workers=workers, on_snapshot=on_snapshot, absorb_width=absorb_width,
    )
    return SpinorField(grid, z[0, 0], z[0, 1])


def _initial_packed(basis: FreeBasis) -> np.ndarray:
    """All windowed negative modes as plane waves, one packed block."""
    grid = basis.grid
    idx = basis.negative_indices
    waves = np.exp(1j * np.outer(grid.momenta[idx], grid.x))
    amp = basis.chi_minus[:, idx] / np.sqrt(grid.length)
    z = np.empty((len(idx), 2, grid.n_points), dtype=np.complex128)
    z[:, 0, :] = amp[0][:, None] * waves
    z[:, 1, :] = amp[1][:, None] * waves
    return z


def evolve_basis(
    basis: FreeBasis,
    spec: FieldSpec,
    schedule: Schedule,
    *,
    workers: int | None = None,
    density_times: tuple[float, ...] = (),
    keep_mode_rows: bool = False,
    absorb_width: float | None = None,
) -> EvolutionSeries:
    """Evolve every windowed negative mode and accumulate projections.

    At each output stride the full projection matrices onto both free
    branches are formed chunk by chunk and reduced into the returned series;
    densities are reconstructed at the requested snapshot times.  With
    keep_mode_rows the complex projection rows of every snapshot are kept on
    the result (memory permitting) for record streaming.
    """
    grid = basis.grid
    n = grid.n_points
    m = basis.n_evolved
    times = schedule.snapshot_times
    series = EvolutionSeries.allocate(basis, times)
    wp, wm = basis.projection_weights()
    alt = np.where(np.fft.fftfreq(n, d=1.0 / n).astype(np.int64) % 2 == 0, 1.0, -1.0)
    density_coef = basis.chi_plus * (alt / np.sqrt(grid.length) * n)
    weight_sq = grid.dx / n

    snap_density = {
        int(round(t / (schedule.dt * schedule.stride))) if schedule.dt else 0: t
        for t in density_times
    }
    for t in density_times:
        if not np.any(np.isclose(times, t, rtol=1e-9, atol=1e-12)):
            raise DomainError(f"density time {t!r} is not a snapshot time")

    kept_rows: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    if keep_mode_rows:
        budget = len(times) * m * n * 32
        if budget > 512 * 1024 * 1024:
            raise DomainError("keep_mode_rows would exceed the memory budget")

    z = _initial_packed(basis)
    slices = _chunks(m)

    def on_snapshot(s: int, t: float, zz: np.ndarray) -> None:
        col_partials = [np.zeros(n) for _ in slices]
        rho_partials = [np.zeros(n) for _ in slices] if s in snap_density else None
        if keep_mode_rows:
            kept_rows[s] = (
                np.empty((m, n), dtype=np.complex128),
                np.empty((m, n), dtype=np.complex128),
            )

        def reduce_chunk(ci_sl: tuple[int, slice]) -> None:
            ci, sl = ci_sl
            rows = sl.stop - sl.start
            f = sfft.fft(zz[sl].reshape(-1, n), axis=-1, workers=1).reshape(rows, 2, n)
            u_plus = np.empty((rows, n), dtype=np.complex128)
            u_minus = np.empty((rows, n), dtype=np.complex128)
            _kernels.project_rows(f, wp, wm, u_plus, u_minus)
            _kernels.abs2_reductions(
                u_plus,
                u_minus,
                f,
                weight_sq,
                series.positron_modes[s, sl],
                series.negative_diag[s, sl],
                series.norms[s, sl],
                col_partials[ci],
            )
            if rho_partials is not None:
                g = u_plus[:, None, :] * density_coef[None, :, :]
                phi = sfft.ifft(g.reshape(-1, n), axis=-1, workers=1).reshape(
                    rows, 2, n
                )
                _kernels.accumulate_density(phi, rho_partials[ci])
            if keep_mode_rows:
                kept_rows[s][0][sl] = u_plus
                kept_rows[s][1][sl] = u_minus

        _run_chunks(reduce_chunk, list(enumerate(slices)), pool_holder[0])
        series.electron_modes[s] = np.sum(col_partials, axis=0)
        if rho_partials is not None:
            series.densities[snap_density[s]] = np.sum(rho_partials, axis=0)

    # The snapshot reducer shares the step pool (created inside _evolve_packed),
    # so it builds its own small pool here for chunked projections.
    n_workers = min(resolve_workers(workers), len(slices))
    pool_holder = [ThreadPoolExecutor(n_workers) if n_workers > 1 else None]
    try:
        _evolve_packed(
            z, grid, spec, schedule,
            workers=workers, on_snapshot=on_snapshot, absorb_width=absorb_width,
        )
    finally:
        if pool_holder[0] is not None:
            pool_holder[0].shutdown()

    if keep_mode_rows:
        series.mode_rows = kept_rows  # type: ignore[attr-defined]
    return series


def iter_projection_records(
    series: EvolutionSeries,
) -> Iterator[ProjectionRecord]:
    """Stream per-mode projection records from a run kept with mode rows."""
    rows = getattr(series, "mode_rows", None)
    if rows is None:
        raise DomainError("series was not evolved with keep_mode_rows=True")
    basis = series.basis
    for s, t in enumerate(series.times):
        u_plus, u_minus = rows[s]
        for i, k in enumerate(basis.negative_indices):
            yield ProjectionRecord(
                time=float(t),
                mode_index=int(k),
                momentum=float(basis.grid.momenta[k]),
                row_positive=u_plus[i],
                row_negative=u_minus[i],
            )
