"""Elliptic-function and cubic-polynomial kernels.

Self-contained numerics used by the internal-oscillation solver: the
complete elliptic integral K(m) by arithmetic-geometric mean, the Jacobi
functions sn/cn/dn by the descending Landen transformation, the real-root
solver for the depressed cubic 4x^3 - g2 x - g3, and the real-lattice
Weierstrass oscillation x(t) built from them.

Parameter convention: all elliptic routines take the *parameter* m = k^2,
not the modulus k.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ComplexRootsError, DegenerateRootsError, DomainError

# loose enough to clear the 1-ulp plateau; quadratic convergence makes the
# remaining agm error O(tol^2)
_AGM_TOL = 1e-15
# roots closer than this (relative to the spread) are treated as degenerate
DEGENERATE_ROOT_TOL = 1e-9


@dataclass(frozen=True)
class CubicRoots:
    """Sorted real roots x1 <= x2 <= x3 of 4x^3 - g2 x - g3."""

    x1: float
    x2: float
    x3: float

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x1, self.x2, self.x3)

    @property
    def spread(self) -> float:
        return self.x3 - self.x1

    def is_degenerate(self) -> bool:
        tol = DEGENERATE_ROOT_TOL * (1.0 + abs(self.spread))
        return (self.x2 - self.x1) <= tol or (self.x3 - self.x2) <= tol


@dataclass(frozen=True)
class HalfPeriods:
    """Real half-period omega1 = T/2 and the magnitude of the imaginary one."""

    omega1: float
    omega3_im: float

    @property
    def period(self) -> float:
        return 2.0 * self.omega1


def complete_elliptic_k(m: float) -> float:
    """K(m) = int_0^{pi/2} dtheta / sqrt(1 - m sin^2 theta), for 0 <= m < 1.

    Computed as pi / (2 agm(1, sqrt(1-m))); converges quadratically.
    """
    if not 0.0 <= m < 1.0:
        raise DomainError(f"elliptic parameter m must lie in [0, 1), got {m}")
    a, b = 1.0, math.sqrt(1.0 - m)
    for _ in range(40):
        if a - b <= _AGM_TOL * a:
            break
        a, b = 0.5 * (a + b), math.sqrt(a * b)
    return math.pi / (a + b)


def jacobi_sn_cn_dn(u, m: float):
    """Jacobi sn, cn, dn of real argument u for parameter m in [0, 1).

    Accepts scalars or arrays. Uses the AGM phase recursion; the argument
    is first reduced modulo the full period 4K(m).
    """
    if not 0.0 <= m < 1.0:
        raise DomainError(f"elliptic parameter m must lie in [0, 1), got {m}")
    u = np.asarray(u, dtype=float)
    scalar = u.ndim == 0
    u = np.atleast_1d(u)

    if m < 1e-24:
        # dn = 1 and sn = sin u to better than machine precision
        sn, cn = np.sin(u), np.cos(u)
        dn = np.ones_like(u)
        if scalar:
            return float(sn[0]), float(cn[0]), float(dn[0])
        return sn, cn, dn

    a_seq = [1.0]
    c_seq = [math.sqrt(m)]
    a, b = 1.0, math.sqrt(1.0 - m)
    while c_seq[-1] > _AGM_TOL * a_seq[-1] and len(a_seq) < 32:
        a, b, c = 0.5 * (a + b), math.sqrt(a * b), 0.5 * (a - b)
        a_seq.append(a)
        c_seq.append(c)
    n = len(a_seq) - 1

    big_k = math.pi / (2.0 * a_seq[-1])
    u_red = u - 4.0 * big_k * np.round(u / (4.0 * big_k))

    phi = (2.0**n) * a_seq[n] * u_red
    for i in range(n, 0, -1):
        arg = np.clip(c_seq[i] / a_seq[i] * np.sin(phi), -1.0, 1.0)
        phi = 0.5 * (phi + np.arcsin(arg))
    sn = np.sin(phi)
    cn = np.cos(phi)
    # dn > 0 throughout the real rectangular case
    dn = np.sqrt(np.maximum(1.0 - m * sn * sn, 0.0))
    if scalar:
        return float(sn[0]), float(cn[0]), float(dn[0])
    return sn, cn, dn


def jacobi_sn(u, m: float):
    """Jacobi sn(u | m); see jacobi_sn_cn_dn."""
    return jacobi_sn_cn_dn(u, m)[0]


def solve_depressed_cubic(g2: float, g3: float, tol: float = 1e-12) -> CubicRoots:
    """Real roots of 4x^3 - g2 x - g3 = 0, sorted ascending.

    Requires a non-negative discriminant g2^3 - 27 g3^2 (up to a relative
    tolerance); a clearly negative discriminant raises ComplexRootsError.
    Uses the trigonometric method with one Newton polish per root.
    """
    disc = g2**3 - 27.0 * g3**2
    scale = max(abs(g2) ** 3, 27.0 * g3**2)
    if disc < -tol * max(scale, 1e-300):
        raise ComplexRootsError(
            f"cubic has complex roots (discriminant {disc:.3e} < 0)"
        )
    if scale == 0.0:
        return CubicRoots(0.0, 0.0, 0.0)

    if disc <= 0.0 or disc <= tol * scale:
        # double (or triple) root case, exact formulas
        if abs(g2) < 1e-300:
            return CubicRoots(0.0, 0.0, 0.0)
        simple = 3.0 * g3 / g2
        double = -1.5 * g3 / g2
        roots = sorted([simple, double, double])
        return CubicRoots(*roots)

    # three distinct real roots of x^3 + p x + q, p = -g2/4 < 0
    p = -0.25 * g2
    q = -0.25 * g3
    amp = 2.0 * math.sqrt(-p / 3.0)
    theta = math.acos(min(1.0, max(-1.0, 1.5 * q / p * math.sqrt(-3.0 / p))))
    roots = [amp * math.cos(theta / 3.0 - 2.0 * math.pi * k / 3.0) for k in range(3)]
    polished = []
    for x in roots:
        f = 4.0 * x**3 - g2 * x - g3
        fp = 12.0 * x**2 - g2
        if abs(fp) > 1e-300:
            x -= f / fp
        polished.append(x)
    polished.sort()
    return CubicRoots(*polished)


def half_periods(roots: CubicRoots) -> HalfPeriods:
    """Half-periods of the rectangular Weierstrass lattice with the given roots.

    omega1 = K(m) / sqrt(x3-x1) with m = (x2-x1)/(x3-x1), and omega3_im the
    analogous integral over the complementary parameter.
    """
    if roots.is_degenerate():
        raise DegenerateRootsError(f"roots too close for half-periods: {roots}")
    x1, x2, x3 = roots.as_tuple()
    span = x3 - x1
    m = (x2 - x1) / span
    mc = (x3 - x2) / span
    rs = math.sqrt(span)
    return HalfPeriods(complete_elliptic_k(m) / rs, complete_elliptic_k(mc) / rs)


def weierstrass_p_shifted(t, roots: CubicRoots):
    """Oscillation x(t) = wp(t + omega3) between x1 and x2, with derivative.

    In the rectangular case wp(t + omega3) = x1 + (x2-x1) sn^2(t sqrt(x3-x1) | m)
    with m = (x2-x1)/(x3-x1); the derivative 2 (x2-x1) sqrt(x3-x1) sn cn dn is
    exact. Both are periodic with period 2*omega1. Accepts scalar or array t.
    """
    if roots.is_degenerate():
        raise DegenerateRootsError(f"roots too close for oscillation: {roots}")
    x1, x2, x3 = roots.as_tuple()
    span = x3 - x1
    m = (x2 - x1) / span
    rs = math.sqrt(span)
    sn, cn, dn = jacobi_sn_cn_dn(np.asarray(t, dtype=float) * rs, m)
    x = x1 + (x2 - x1) * sn * sn
    xdot = 2.0 * (x2 - x1) * rs * sn * cn * dn
    return x, xdot
