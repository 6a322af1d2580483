"""Physical constants in atomic units (hbar = m = e = 1, c = 137.036)."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class PhysicalConstants:
    c: float = 137.036
    hbar: float = 1.0
    m: float = 1.0
    e: float = 1.0

    def __post_init__(self) -> None:
        if self.c <= 0.0:
            raise ValueError("speed of light must be positive")

    @property
    def c2(self) -> float:
        """Electron rest energy c^2, the natural energy scale."""
        return self.c * self.c


ATOMIC = PhysicalConstants()
