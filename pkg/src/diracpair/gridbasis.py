"""Periodic spatial lattice and the box-normalized free Dirac spinor basis.

The 2x2 free Hamiltonian h(p) = c*sigma1*p + c^2*sigma3 has one positive and
one negative branch per lattice momentum, with energy E_p = sqrt(c^4+c^2 p^2).
Modes are plane waves (amplitude spinor) * exp(i p x) normalized to 1 over
the box, so the amplitude spinor carries norm 1/sqrt(L).

Phase convention: the upper component of the positive branch and the lower
component of the negative branch are real positive.  This pins every
projection coefficient reproducibly across runs and platforms.

Momentum storage follows FFT ordering (0, dp, ..., -dp) so momentum-space
arrays align with transforms without shifts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .constants import ATOMIC, PhysicalConstants
from .errors import DomainError

__all__ = [
    "SpatialGrid",
    "FreeMode",
    "FreeBasis",
    "build_grid",
    "free_energy",
    "make_free_mode",
    "build_basis",
]

Branch = Literal["positive", "negative"]


def _lock(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SpatialGrid:
    """Periodic box discretization shared by coordinate and momentum space."""

    length: float
    n_points: int
    const: PhysicalConstants = ATOMIC
    x: np.ndarray = field(init=False, repr=False)
    momenta: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        n = self.n_points
        if n < 8 or (n & (n - 1)) != 0:
            raise DomainError(f"n_points must be a power of two >= 8, got {n!r}")
        if not (self.length > 0.0):
            raise DomainError(f"box length must be positive, got {self.length!r}")
        dx = self.length / n
        object.__setattr__(
            self, "x", _lock(-0.5 * self.length + dx * np.arange(n))
        )
        idx = np.fft.fftfreq(n, d=1.0 / n)  # integer fft indices
        object.__setattr__(self, "momenta", _lock(2.0 * np.pi / self.length * idx))

    @property
    def dx(self) -> float:
        return self.length / self.n_points

    @property
    def dp(self) -> float:
        return 2.0 * np.pi / self.length

    @property
    def p_max(self) -> float:
        """Largest momentum magnitude on the lattice (the -N/2 point)."""
        return np.pi * self.n_points / self.length

    def mode_index(self, p: float) -> int:
        """FFT-order index of an on-lattice momentum; raises off lattice."""
        j = p / self.dp
        k = int(round(j))
        if abs(j - k) > 1e-9 or not (-self.n_points // 2 <= k < self.n_points // 2):
            raise DomainError(f"momentum {p!r} is not on the lattice")
        return k % self.n_points


def build_grid(
    L: float, N_x: int, *, const: PhysicalConstants = ATOMIC
) -> SpatialGrid:
    """Build the periodic box lattice (N_x a power of two >= 8)."""
    return SpatialGrid(length=L, n_points=N_x, const=const)


def free_energy(p, *, const: PhysicalConstants = ATOMIC):
    """Free-particle energy sqrt(c^4 + c^2 p^2), scalar or vectorized."""
    c = const.c
    return (c * np.sqrt(c * c + np.square(np.asarray(p, dtype=float))))[()]


@dataclass(frozen=True)
class FreeMode:
    """One free spinor plane wave, box-normalized (|spinor|^2 = 1/L)."""

    momentum: float
    branch: Branch
    energy: float
    spinor: np.ndarray  # (2,) complex: amplitude of upper/lower component

    def samples(self, grid: SpatialGrid) -> np.ndarray:
        """Position-space samples, shape (2, N_x)."""
        wave = np.exp(1j * self.momentum * grid.x)
        return self.spinor[:, None] * wave[None, :]


def _branch_spinors(p: np.ndarray, const: PhysicalConstants) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Unit spinors of both branches for an array of momenta.

    Returns (energies, chi_plus, chi_minus) with chi arrays shaped (2, n).
    """
    c = const.c
    E = free_energy(p, const=const)
    up = np.sqrt((E + c * c) / (2.0 * E))
    # equals sign(p)*sqrt((E-c^2)/(2E)) but avoids cancellation at small p
    lo = c * p / np.sqrt(2.0 * E * (E + c * c))
    chi_plus = np.stack([up, lo]).astype(np.complex128)
    chi_minus = np.stack([-lo, up]).astype(np.complex128)
    return E, chi_plus, chi_minus


def make_free_mode(
    grid: SpatialGrid, p: float, branch: Branch
) -> FreeMode:
    """Construct the free mode at on-lattice momentum p for the given branch."""
    if branch not in ("positive", "negative"):
        raise DomainError(f"unknown branch {branch!r}")
    grid.mode_index(p)  # validates the lattice constraint
    E, chi_p, chi_m = _branch_spinors(np.array([p]), grid.const)
    chi = chi_p[:, 0] if branch == "positive" else chi_m[:, 0]
    return FreeMode(
        momentum=float(p),
        branch=branch,
        energy=float(E[0]),
        spinor=_lock(chi / np.sqrt(grid.length)),
    )


@dataclass(frozen=True)
class FreeBasis:
    """Free-mode tables over the full lattice plus the evolved-mode window.

    Positive modes are always kept over the whole lattice (projection
    targets); negative modes restricted to |p| <= window are the ones that
    get evolved.  Mode order is the FFT order of the momentum lattice, which
    fixes every reduction order in the package.
    """

    grid: SpatialGrid
    window: float | None
    energies: np.ndarray        # (N,) positive branch energies per lattice p
    chi_plus: np.ndarray        # (2, N) unit spinors, positive branch
    chi_minus: np.ndarray       # (2, N) unit spinors, negative branch
    negative_indices: np.ndarray  # fft-order lattice indices of evolved modes

    @property
    def n_evolved(self) -> int:
        return len(self.negative_indices)

    @property
    def negative_momenta(self) -> np.ndarray:
        return self.grid.momenta[self.negative_indices]

    def positive_mode(self, k: int) -> FreeMode:
        return FreeMode(
            momentum=float(self.grid.momenta[k]),
            branch="positive",
            energy=float(self.energies[k]),
            spinor=_lock(self.chi_plus[:, k] / np.sqrt(self.grid.length)),
        )

    def negative_mode(self, k: int) -> FreeMode:
        return FreeMode(
            momentum=float(self.grid.momenta[k]),
            branch="negative",
            energy=float(self.energies[k]),
            spinor=_lock(self.chi_minus[:, k] / np.sqrt(self.grid.length)),
        )

    def projection_weights(self) -> tuple[np.ndarray, np.ndarray]:
        """Conjugated spinor weights turning component FFTs into projections.

        U_bn = sum_c W_b[c, k] * FFT(psi[c])[k] for branch b at lattice k,
        where W folds dx, the 1/sqrt(L) normalization and the phase from the
        box origin at -L/2 (alternating sign on the fft index).
        """
        n = self.grid.n_points
        alt = np.where(np.fft.fftfreq(n, d=1.0 / n).astype(np.int64) % 2 == 0, 1.0, -1.0)
        scale = self.grid.dx / np.sqrt(self.grid.length) * alt
        return (
            np.conj(self.chi_plus) * scale,
            np.conj(self.chi_minus) * scale,
        )


def build_basis(
    grid: SpatialGrid, window: float | None = None
) -> FreeBasis:
    """Build the free basis; window limits which negative modes are evolved."""
    E, chi_p, chi_m = _branch_spinors(grid.momenta, grid.const)
    if window is None:
        neg = np.arange(grid.n_points)
    else:
        if window < 0.0:
            raise DomainError(f"window must be nonnegative, got {window!r}")
        if window > grid.p_max:
            raise DomainError(
                f"window {window!r} exceeds the lattice range {grid.p_max!r}"
            )
        neg = np.flatnonzero(np.abs(grid.momenta) <= window)
    return FreeBasis(
        grid=grid,
        window=window,
        energies=_lock(E),
        chi_plus=_lock(chi_p),
        chi_minus=_lock(chi_m),
        negative_indices=_lock(neg),
    )
