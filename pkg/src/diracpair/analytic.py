"""Sharp-step scattering theory for the 1D Dirac equation.

Closed-form transmission through the double step (supercritical step of
height V1 at x=0 plus a control step of height V2 at x=-d), an independent
transfer-matrix solver for arbitrary piecewise-constant potentials, bound
levels of the control well, the signal response time of a right-traveling
mode, and the steady-state pair-creation rate.

Units are atomic (hbar = m = e = 1, c = 137.036); energies in a.u. with the
electron rest energy at c^2.  All interior algebra runs on energies scaled
by c^2 so intermediate quantities stay O(1).

Domain conventions for the double step seen by a transmitted electron:

    region I   (x < -d):     V = 0        momentum  p
    region II  (-d < x < 0): V = V2       momentum  k  (may be evanescent)
    region III (x > 0):      V = V1 + V2  momentum  q  (Dirac sea side)

Transmission is well defined on the open window c^2 < E < V1 + V2 - c^2
where p and q are real.  Inside it k may turn imaginary (E < V2 + c^2 for
V2 > 0); the closed form continues analytically through that sub-window and
the transfer matrix handles it with complex momenta, so the two stay
comparable over the entire window.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from .constants import ATOMIC, PhysicalConstants
from .errors import DomainError, SingularMatchingError

__all__ = [
    "TransmissionParams",
    "BoundStateSet",
    "transmission_params",
    "transmission_coefficient",
    "transfer_matrix_transmission",
    "bound_state_levels",
    "response_time",
    "klein_rate",
]


@dataclass(frozen=True)
class TransmissionParams:
    """Derived kinematic quantities of the double-step problem at energy E.

    gamma and tau are the interface mismatch factors at x=-d and x=0; their
    product depends only on the outer regions and is always real positive on
    the transmission window.  Both are real where region II propagates.
    """

    E: float
    V1: float
    V2: float
    d: float | None
    p: float
    q: float
    k: float
    E_q: float
    gamma: float
    tau: float

    @property
    def gamma_tau(self) -> float:
        return self.gamma * self.tau


@dataclass(frozen=True)
class BoundStateSet:
    """Estimated bound levels of the control well of depth V2 and width d."""

    depth: float
    width: float
    levels: np.ndarray        # energies, ascending, in (c^2 - depth, c^2)
    kappas: np.ndarray        # imaginary momentum magnitude in region I
    residuals: np.ndarray     # |condition| on the c^2-scaled equation

    def __len__(self) -> int:
        return len(self.levels)


def _window(V1: float, V2: float, c2: float) -> tuple[float, float]:
    """Open energy window where both outer regions propagate."""
    lo, hi = c2, V1 + V2 - c2
    if hi <= lo:
        raise DomainError(
            f"no transmission window: V1+V2 = {V1 + V2!r} does not exceed 2c^2"
        )
    return lo, hi


def transmission_params(
    E: float,
    V1: float,
    V2: float,
    d: float | None = None,
    *,
    const: PhysicalConstants = ATOMIC,
) -> TransmissionParams:
    """Populate the kinematic parameter set at energy E.

    Requires all three regions propagating (real p, q, k); raises
    DomainError in evanescent or otherwise closed regimes, which
    transmission_coefficient still covers.
    """
    c, c2 = const.c, const.c2
    lo, hi = _window(V1, V2, c2)
    if not (lo < E < hi):
        raise DomainError(f"E = {E!r} outside transmission window ({lo!r}, {hi!r})")
    eta = E / c2
    v2 = V2 / c2
    eta_q = (V1 + V2 - E) / c2
    k2 = (eta - v2) ** 2 - 1.0  # (k/c)^2
    if k2 <= 0.0:
        raise DomainError(
            f"region II evanescent at E = {E!r}: momentum k imaginary"
        )
    p = c * math.sqrt(eta * eta - 1.0)
    q = c * math.sqrt(eta_q * eta_q - 1.0)
    k = c * math.sqrt(k2)
    # Interface factors: gamma between regions I|II, tau between II|III.
    gamma = math.sqrt((eta - 1.0) * (eta - v2 + 1.0) / ((eta + 1.0) * (eta - v2 - 1.0)))
    tau = math.sqrt(
        (eta - v2 - 1.0) * (eta_q - 1.0) / ((eta - v2 + 1.0) * (eta_q + 1.0))
    )
    return TransmissionParams(
        E=E, V1=V1, V2=V2, d=d, p=p, q=q, k=k, E_q=eta_q * c2, gamma=gamma, tau=tau
    )


def _sin2_over_k2(k2: float, d: float) -> float:
    """sin^2(k d)/k^2 continued through k^2 <= 0 (entire in k^2)."""
    if k2 > 0.0:
        k = math.sqrt(k2)
        s = math.sin(k * d)
        return s * s / k2
    if k2 < 0.0:
        kappa = math.sqrt(-k2)
        s = math.sinh(kappa * d)
        return s * s / -k2
    return d * d


def transmission_coefficient(
    E: float,
    V1: float,
    V2: float,
    d: float,
    *,
    const: PhysicalConstants = ATOMIC,
) -> float:
    """Transmission through the double step at electron energy E.

        T = 4*g*t / [ (g*t + 1)^2 - (g^2 - 1)(t^2 - 1) sin^2(k d) ]

    with the interface factors g, t of transmission_params.  Evaluated in a
    form regular at k -> 0 and valid through the evanescent sub-window:
    the oscillation term equals -4 V1 V2 /((E+c^2)(E_q+c^2)) * sin^2(kd)/k^2
    (x c^2), with sin^2(kd)/k^2 continued evenly in k^2.  Resonance maxima
    sit at k d = m*pi.  Always in (0, 1].
    """
    c, c2 = const.c, const.c2
    lo, hi = _window(V1, V2, c2)
    if not (lo < E < hi):
        raise DomainError(f"E = {E!r} outside transmission window ({lo!r}, {hi!r})")
    eta = E / c2
    v1, v2 = V1 / c2, V2 / c2
    eta_q = v1 + v2 - eta
    gt = math.sqrt((eta - 1.0) * (eta_q - 1.0) / ((eta + 1.0) * (eta_q + 1.0)))
    k2 = (eta - v2) ** 2 - 1.0          # (k/c)^2, dimensionless
    shape = _sin2_over_k2(k2, c * d)    # sin^2(kd)/(k/c)^2
    osc = 4.0 * v1 * v2 / ((eta + 1.0) * (eta_q + 1.0)) * shape
    return 4.0 * gt / ((gt + 1.0) ** 2 + osc)


def transfer_matrix_transmission(
    E: float,
    regions: list[tuple[float, float | None]],
    *,
    const: PhysicalConstants = ATOMIC,
) -> float:
    """Transmission through an arbitrary piecewise-constant potential.

    regions lists (height, width) from left to right; the first and last
    regions are semi-infinite and their widths are ignored.  Wave matching
    composes the 2x2 interface matrices numerically, with the propagation
    direction in each region fixed by group velocity (in supercritical sea
    regions the rightward-moving solution carries negative momentum), so the
    returned flux ratio satisfies 0 <= T <= 1 and T + R = 1.

    Raises SingularMatchingError when a local spinor denominator or momentum
    vanishes, and DomainError if either outer region cannot propagate.
    """
    c, c2 = const.c, const.c2
    if len(regions) < 2:
        raise DomainError("need at least two regions (one interface)")

    heights = [float(v) for v, _ in regions]
    widths = [0.0 if w is None else float(w) for _, w in regions[1:-1]]

    momenta: list[complex] = []
    ratios: list[complex] = []
    for V in heights:
        eps = (E - V) / c2  # local energy over c^2
        if abs(eps + 1.0) < 1e-300:
            raise SingularMatchingError(f"spinor denominator vanishes at V = {V!r}")
        m2 = eps * eps - 1.0
        if m2 == 0.0:
            raise SingularMatchingError(f"momentum vanishes at V = {V!r}")
        if m2 > 0.0:
            m = math.sqrt(m2) if eps > 0.0 else -math.sqrt(m2)
            m = complex(m)
        else:
            m = 1j * math.sqrt(-m2)  # forward-decaying
        momenta.append(m)
        ratios.append(m / (eps + 1.0))  # c*m/(eps*c^2 + c^2) in scaled form

    r_in, r_out = ratios[0], ratios[-1]
    if r_in.real <= 0.0:
        raise DomainError(f"incidence region closed at E = {E!r}")
    if r_out.real <= 0.0:
        return 0.0

    # Interface positions; the first interface sits at x = 0.
    positions = [0.0]
    for w in widths:
        positions.append(positions[-1] + w)

    # Compose (A_j, B_j) = P_j(-X) M(r_{j+1}/r_j) P_{j+1}(X) (A_{j+1}, B_{j+1})
    # from the rightmost region, which carries (1, 0): transmitted only.
    vec = np.array([1.0 + 0.0j, 0.0 + 0.0j])
    n = len(heights)
    for j in range(n - 2, -1, -1):
        X = positions[j] * c  # scaled position so m*X uses scaled momenta
        rho = ratios[j + 1] / ratios[j]
        mj, mj1 = momenta[j], momenta[j + 1]
        a1 = cmath.exp(1j * mj1 * X) * vec[0]
        b1 = cmath.exp(-1j * mj1 * X) * vec[1]
        alpha = 0.5 * ((1.0 + rho) * a1 + (1.0 - rho) * b1)
        beta = 0.5 * ((1.0 - rho) * a1 + (1.0 + rho) * b1)
        vec = np.array(
            [cmath.exp(-1j * mj * X) * alpha, cmath.exp(1j * mj * X) * beta]
        )

    denom = abs(vec[0]) ** 2
    if denom == 0.0:
        raise SingularMatchingError("incident amplitude vanished in composition")
    return float(r_out.real / r_in.real / denom)


def bound_state_levels(
    V2_depth: float,
    d: float,
    *,
    const: PhysicalConstants = ATOMIC,
    residual_tol: float = 1e-10,
) -> BoundStateSet:
    """Estimate the bound levels of the control well (depth V2_depth, width d).

    Solves  c k cot(k d) = -(E V2)/(c kappa) - c kappa  with V2 = -V2_depth,
    kappa = sqrt(c^4 - E^2)/c the imaginary momentum outside the well and
    k the momentum inside, for E in (c^2 - V2_depth, c^2).  The condition is
    the symmetric-well formula applied to the asymmetric well, so the levels
    are estimates.  Roots are bracketed between the cot poles and polished
    to |condition| < residual_tol on the c^2-scaled equation.
    """
    if V2_depth <= 0.0 or d <= 0.0:
        raise DomainError("well depth and width must be positive")
    c, c2 = const.c, const.c2
    v = V2_depth / c2
    theta = c * d  # k*d = theta * (k/c)

    def kc(eta: float) -> float:
        arg = (eta + v) ** 2 - 1.0
        return math.sqrt(arg) if arg > 0.0 else 0.0

    def condition(eta: float) -> float:
        kappa = math.sqrt(max(1.0 - eta * eta, 0.0))
        if kappa == 0.0:
            return math.inf
        k = kc(eta)
        return k / math.tan(theta * k) + kappa - eta * v / kappa

    eta_lo, eta_hi = 1.0 - v, 1.0
    if eta_lo <= -1.0:
        raise DomainError("well depth reaches the lower continuum")

    # Split the interval at the cot poles theta*k = m*pi.
    k_hi = kc(eta_hi)
    m_max = int(theta * k_hi / math.pi)
    cuts = [eta_lo]
    for m in range(1, m_max + 1):
        km = m * math.pi / theta
        cuts.append(math.sqrt(1.0 + km * km) - v)
    cuts.append(eta_hi)

    pad = 1e-12
    levels, kappas, residuals = [], [], []
    for a, b in zip(cuts[:-1], cuts[1:]):
        a, b = a + pad, b - pad
        if b <= a:
            continue
        grid = np.linspace(a, b, 64)
        vals = np.array([condition(x) for x in grid])
        for i in range(len(grid) - 1):
            fa, fb = vals[i], vals[i + 1]
            if not (np.isfinite(fa) and np.isfinite(fb)) or fa * fb > 0.0:
                continue
            root = optimize.brentq(condition, grid[i], grid[i + 1], xtol=1e-15, rtol=8.9e-16)
            res = abs(condition(root))
            if res < residual_tol:
                levels.append(root * c2)
                kappas.append(c * math.sqrt(1.0 - root * root))
                residuals.append(res)

    order = np.argsort(levels)
    return BoundStateSet(
        depth=V2_depth,
        width=d,
        levels=np.array(levels)[order],
        kappas=np.array(kappas)[order],
        residuals=np.array(residuals)[order],
    )


def response_time(d: float, E_star: float, *, const: PhysicalConstants = ATOMIC) -> float:
    """Travel time of a right-moving mode of energy E_star over distance d.

    tau = d / v with group velocity v = c^2 p / E, i.e. tau = d*E/(c^2 p).
    """
    c2 = const.c2
    if E_star <= c2:
        raise DomainError(f"E_star = {E_star!r} has no propagating mode (<= c^2)")
    eta = E_star / c2
    p = const.c * math.sqrt(eta * eta - 1.0)
    return d * E_star / (c2 * p)


def klein_rate(
    V1: float,
    V2: float,
    d: float,
    *,
    const: PhysicalConstants = ATOMIC,
) -> float:
    """Steady-state pair-creation rate of the static double step.

    Integrates the transmission coefficient over the full open window,
    Gamma = (1/2pi) * int T_E dE on (c^2, V1+V2-c^2), by adaptive quadrature
    to 1e-8 relative accuracy.  (For V2 = 0 the window is (c^2, V1-c^2).)
    The deep-evanescent part contributes negligibly on its own.
    """
    c2 = const.c2
    lo, hi = _window(V1, V2, c2)

    def integrand(E: float) -> float:
        return transmission_coefficient(E, V1, V2, d, const=const)

    pad = (hi - lo) * 1e-13
    value, _ = integrate.quad(
        integrand, lo + pad, hi - pad, epsrel=1e-8, epsabs=0.0, limit=800
    )
    return value / (2.0 * math.pi)
