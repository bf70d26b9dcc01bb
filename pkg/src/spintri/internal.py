"""Reduction of the internal degrees of freedom to the Weierstrass equation.

With conserved energy and total-spin length, the pairwise dot products
(u, v, w) move on a line; the affine coordinate x = x0 + g*u obeys
xdot^2 = 4x^3 - g2 x - g3 and oscillates between the two lowest roots.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .elliptic import (
    CubicRoots,
    HalfPeriods,
    half_periods,
    solve_depressed_cubic,
    weierstrass_p_shifted,
)
from .errors import DomainError
from .model import Couplings, GramPoint, gram_det

_PROBE_SPREAD = 2.0


@dataclass(frozen=True)
class WeierstrassData:
    """Constants of one reduced instance.

    g and x0 define the affine map x = x0 + g*u; (g2, g3) the cubic
    invariants; v0 and w0 the affine offsets expressing v and w through x.
    """

    g: float
    x0: float
    g2: float
    g3: float
    roots: CubicRoots
    periods: HalfPeriods
    v0: float
    w0: float

    @property
    def period(self) -> float:
        return self.periods.period


def reduction_scale(j: Couplings) -> float:
    """The factor g = -(J1-J2)(J1-J3)/2 of the affine coordinate change."""
    return -0.5 * (j.j1 - j.j2) * (j.j1 - j.j3)


def reduction_shift(j: Couplings, epsilon: float, sigma: float) -> float:
    """The offset x0 chosen so the cubic is depressed with leading term 4x^3."""
    j1, j2, j3 = j.j1, j.j2, j.j3
    return (
        -(j1 * j1) - j2 * j2 - j3 * j3
        + j1 * j3 + j2 * j3 + j1 * j2
        + (2.0 * j1 - j2 - j3) * epsilon
        + (2.0 * j2 * j3 - j1 * (j2 + j3)) * sigma
    ) / 6.0


def eliminate_vw(u, j: Couplings, epsilon: float, sigma: float):
    """Express v and w through u on the conservation line (needs J2 != J3)."""
    den = j.j2 - j.j3
    if den == 0.0:
        raise DomainError("v/w elimination undefined for J2 = J3")
    v = (j.j3 * (u - sigma) + epsilon - j.j1 * u) / den
    w = (-j.j2 * (u - sigma) - epsilon + j.j1 * u) / den
    return v, w


def cubic_invariants(j: Couplings, epsilon: float, sigma: float) -> tuple[float, float]:
    """Invariants (g2, g3) of the reduced cubic, without solving for roots.

    The polynomial 4x^3 - g2 x - g3 equals g^2 (J3-J2)^2 det G along the
    line; its coefficients are recovered from four probe evaluations.
    """
    g = reduction_scale(j)
    if g == 0.0:
        raise DomainError("reduction undefined for J1 equal to J2 or J3")
    x0 = reduction_shift(j, epsilon, sigma)
    factor = (g * (j.j3 - j.j2)) ** 2

    span = _PROBE_SPREAD * (1.0 + abs(x0) + abs(g))
    probes = span * np.cos((2.0 * np.arange(4) + 1.0) * np.pi / 8.0)
    u = (probes - x0) / g
    v, w = eliminate_vw(u, j, epsilon, sigma)
    vals = factor * gram_det(u, v, w)
    coeffs = np.linalg.solve(np.vander(probes, 4), vals)
    scale = max(1.0, float(np.max(np.abs(coeffs))))
    if abs(coeffs[0] - 4.0) > 1e-10 * scale or abs(coeffs[1]) > 1e-10 * scale:
        raise DomainError(
            f"reduced polynomial is not a depressed quartic-free cubic: {coeffs}"
        )
    return float(-coeffs[2]), float(-coeffs[3])


def reduce(j: Couplings, epsilon: float, sigma: float) -> WeierstrassData:
    """Build the full Weierstrass reduction of a generic instance."""
    g = reduction_scale(j)
    x0 = reduction_shift(j, epsilon, sigma)
    g2, g3 = cubic_invariants(j, epsilon, sigma)
    roots = solve_depressed_cubic(g2, g3)
    periods = half_periods(roots)
    v0, w0 = eliminate_vw(-x0 / g, j, epsilon, sigma)  # values at x = 0
    return WeierstrassData(g=g, x0=x0, g2=g2, g3=g3, roots=roots, periods=periods,
                           v0=v0, w0=w0)


def internal_state(t, wd: WeierstrassData, j: Couplings, epsilon: float, sigma: float):
    """Gram point(s) at time t; t = 0 is the x = x1 turning point.

    The sign of delta is carried by the analytic derivative of the
    oscillation, so no square-root branch tracking is needed. Scalar t
    returns a GramPoint; array t returns arrays (u, v, w, delta).
    """
    x, xdot = weierstrass_p_shifted(t, wd.roots)
    u = (x - wd.x0) / wd.g
    v, w = eliminate_vw(u, j, epsilon, sigma)
    delta = xdot / (wd.g * (j.j3 - j.j2))
    if np.ndim(t) == 0:
        return GramPoint(float(u), float(v), float(w), float(delta))
    return u, v, w, delta


def internal_rates(gp: GramPoint, j: Couplings) -> tuple[float, float, float, float]:
    """Time derivatives (du, dv, dw, ddelta) at a Gram point."""
    u, v, w, d = gp.u, gp.v, gp.w, gp.delta
    ud = (j.j3 - j.j2) * d
    vd = (j.j1 - j.j3) * d
    wd = (j.j2 - j.j1) * d
    dd = (
        j.j1 * (u + 1.0) * (w - v)
        + j.j2 * (v + 1.0) * (u - w)
        + j.j3 * (w + 1.0) * (v - u)
    )
    return ud, vd, wd, dd
