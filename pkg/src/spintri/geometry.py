"""Geometry of the Gram set, energy ranges and case classification.

The Gram set is the elliptope {(u,v,w) in [-1,1]^3 : det G >= 0}; the two
conservation laws confine the internal motion to a line intersecting it.
Instance classification decides whether the generic elliptic solution
applies or which closed-form special case does.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import (
    DomainError,
    EquilateralError,
    InconsistentConservedValues,
)
from .internal import cubic_invariants, eliminate_vw, reduction_scale, reduction_shift
from .model import ConservedValues, Couplings, GramPoint, gram_det

DET_TOL = 1e-12
SINGULAR_TOL = 1e-9
COUPLING_EQ_TOL = 1e-12
CONSERVED_TOL = 1e-10

# the four singular extremal points of the Gram set (collinear configurations)
SINGULAR_POINTS = np.array(
    [
        [1.0, 1.0, 1.0],
        [1.0, -1.0, -1.0],
        [-1.0, 1.0, -1.0],
        [-1.0, -1.0, 1.0],
    ]
)


class Membership(enum.Enum):
    INTERIOR = "interior"
    BOUNDARY = "boundary"
    SINGULAR = "singular"
    OUTSIDE = "outside"


@dataclass(frozen=True)
class MembershipResult:
    kind: Membership
    singular_index: int | None = None


class CaseLabel(enum.Enum):
    GENERIC = "Generic"
    ISOSCELES = "Isosceles"
    EQUILATERAL = "Equilateral"
    STATIONARY_GRAM = "StationaryGram"
    APERIODIC_SEPARATRIX = "AperiodicSeparatrix"
    FACE_CASE = "FaceCase"
    COLLINEAR = "Collinear"
    ZERO_TOTAL_SPIN = "ZeroTotalSpin"


@dataclass(frozen=True)
class Classification:
    label: CaseLabel
    equal_pair: tuple[int, int] | None = None
    detail: str = ""

    def __str__(self) -> str:
        return self.label.value


@dataclass(frozen=True)
class EnergyRange:
    e_min: float
    e_max: float


def gram_membership(u: float, v: float, w: float) -> MembershipResult:
    """Classify a point of coordinate space relative to the Gram set."""
    pt = np.array([u, v, w])
    dist = np.linalg.norm(SINGULAR_POINTS - pt, axis=1)
    idx = int(np.argmin(dist))
    if dist[idx] <= SINGULAR_TOL:
        return MembershipResult(Membership.SINGULAR, idx)
    if np.any(np.abs(pt) > 1.0 + DET_TOL):
        return MembershipResult(Membership.OUTSIDE)
    d = gram_det(u, v, w)
    if d > DET_TOL:
        return MembershipResult(Membership.INTERIOR)
    if d < -DET_TOL:
        return MembershipResult(Membership.OUTSIDE)
    return MembershipResult(Membership.BOUNDARY)


def line_direction(j: Couplings) -> np.ndarray:
    """Direction (J3-J2, J1-J3, J2-J1) of the conservation line."""
    if couplings_equal_pairs(j) == [(0, 1), (0, 2), (1, 2)]:
        raise EquilateralError("conservation line undefined for equilateral couplings")
    return np.array([j.j3 - j.j2, j.j1 - j.j3, j.j2 - j.j1])


def couplings_equal_pairs(j: Couplings) -> list[tuple[int, int]]:
    """Index pairs of couplings equal within tolerance."""
    vals = j.vec
    pairs = []
    for a in range(3):
        for b in range(a + 1, 3):
            tol = COUPLING_EQ_TOL * max(1.0, abs(vals[a]), abs(vals[b]))
            if abs(vals[a] - vals[b]) <= tol:
                pairs.append((a, b))
    return pairs


def tangency_factor(g: GramPoint, j: Couplings) -> float:
    """Directional derivative of det G along the conservation line.

    Vanishes exactly when the line is tangent to the boundary (double root
    of the reduced cubic) or at a singular point; proportional to the
    derivative of the reduced cubic at the matching x.
    """
    n = line_direction(j)
    grad = 2.0 * np.array(
        [g.v * g.w - g.u, g.u * g.w - g.v, g.u * g.v - g.w]
    )
    return float(n @ grad)


def corner_energies(j: Couplings) -> tuple[float, float, float]:
    """Energies of the three collinear points with total-spin length 1."""
    return (
        j.j1 - j.j2 - j.j3,
        j.j2 - j.j3 - j.j1,
        j.j3 - j.j1 - j.j2,
    )


def boundary_scan(j: Couplings, sigma: float, n_points: int = 2048):
    """Sample the boundary curve of the constant-sigma section of the Gram set.

    Rays from the section center are cast to the det G = 0 surface by
    bisection (the center is interior for -3/2 < sigma < 3). Returns the
    boundary points (n, 3) and their energies.
    """
    if not -1.5 < sigma < 3.0:
        raise DomainError(f"sigma = {sigma} outside (-3/2, 3)")
    center = np.full(3, sigma / 3.0)
    e1 = np.array([1.0, -1.0, 0.0]) / math.sqrt(2.0)
    e2 = np.array([1.0, 1.0, -2.0]) / math.sqrt(6.0)
    theta = np.linspace(0.0, 2.0 * math.pi, n_points, endpoint=False)
    d = np.outer(np.cos(theta), e1) + np.outer(np.sin(theta), e2)

    # exit parameter of the cube [-1,1]^3 (det G <= 0 on every cube face)
    with np.errstate(divide="ignore"):
        t_exit = np.where(
            d > 0, (1.0 - center[None, :]) / d, (-1.0 - center[None, :]) / d
        )
        t_exit = np.where(np.abs(d) < 1e-300, np.inf, t_exit)
    t_hi = t_exit.min(axis=1)
    t_lo = np.zeros_like(t_hi)
    for _ in range(60):
        t_mid = 0.5 * (t_lo + t_hi)
        pts = center[None, :] + t_mid[:, None] * d
        det = gram_det(pts[:, 0], pts[:, 1], pts[:, 2])
        inside = det > 0.0
        t_lo = np.where(inside, t_mid, t_lo)
        t_hi = np.where(inside, t_hi, t_mid)
    pts = center[None, :] + (0.5 * (t_lo + t_hi))[:, None] * d
    return theta, pts, pts @ j.vec


def cubic_discriminant(j: Couplings, epsilon: float, sigma: float) -> float:
    """Discriminant g2^3 - 27 g3^2 of the reduced cubic."""
    g2, g3 = cubic_invariants(j, epsilon, sigma)
    return g2**3 - 27.0 * g3**2


def _double_root_in_gram_cube(j: Couplings, epsilon: float, sigma: float) -> bool:
    g2, g3 = cubic_invariants(j, epsilon, sigma)
    if abs(g2) < 1e-300:
        return False
    x_dbl = -1.5 * g3 / g2
    g = reduction_scale(j)
    x0 = reduction_shift(j, epsilon, sigma)
    u = (x_dbl - x0) / g
    v, w = eliminate_vw(u, j, epsilon, sigma)
    return bool(max(abs(u), abs(v), abs(w)) <= 1.0 + 1e-6)


def energy_range(j: Couplings, sigma: float, scan_points: int = 2048) -> EnergyRange:
    """Extremal energies attainable at fixed sigma.

    The endpoints are where the conservation line becomes tangent to the
    Gram-set boundary, i.e. where the reduced cubic acquires a double root
    inside the coordinate cube; they are bracketed by a boundary scan and
    polished as roots of the discriminant. At sigma = -1 the section
    boundary is the singular triangle and the corner energies are exact.
    """
    if not -1.5 < sigma < 3.0:
        raise DomainError(f"sigma = {sigma} outside (-3/2, 3)")
    pairs = couplings_equal_pairs(j)
    if len(pairs) == 3:
        raise EquilateralError("energy range degenerate for equilateral couplings")
    if abs(sigma + 1.0) <= CONSERVED_TOL:
        corners = corner_energies(j)
        return EnergyRange(min(corners), max(corners))

    theta, _, energies = boundary_scan(j, sigma, scan_points)
    i_min = int(np.argmin(energies))
    i_max = int(np.argmax(energies))
    e_lo = _polish_extreme(j, sigma, float(energies[i_min]), theta[i_min], -1.0, scan_points)
    e_hi = _polish_extreme(j, sigma, float(energies[i_max]), theta[i_max], +1.0, scan_points)
    return EnergyRange(e_lo, e_hi)


def _scan_refine(j: Couplings, sigma: float, theta0: float, sign: float) -> float:
    """Extremize the boundary energy over the ray angle near theta0."""

    def objective(th):
        center = np.full(3, sigma / 3.0)
        e1 = np.array([1.0, -1.0, 0.0]) / math.sqrt(2.0)
        e2 = np.array([1.0, 1.0, -2.0]) / math.sqrt(6.0)
        d = math.cos(th) * e1 + math.sin(th) * e2
        t_hi = np.inf
        for i in range(3):
            if d[i] > 1e-300:
                t_hi = min(t_hi, (1.0 - center[i]) / d[i])
            elif d[i] < -1e-300:
                t_hi = min(t_hi, (-1.0 - center[i]) / d[i])
        lo, hi = 0.0, t_hi
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if gram_det(*(center + mid * d)) > 0.0:
                lo = mid
            else:
                hi = mid
        pt = center + 0.5 * (lo + hi) * d
        return -sign * float(pt @ j.vec)

    res = minimize_scalar(objective, bracket=None,
                          bounds=(theta0 - 0.02, theta0 + 0.02), method="bounded",
                          options={"xatol": 1e-12})
    return -sign * res.fun


def _polish_extreme(
    j: Couplings,
    sigma: float,
    e_scan: float,
    theta0: float,
    sign: float,
    scan_points: int,
) -> float:
    """Refine one endpoint as a discriminant root just outside the scan value."""
    scale = max(1.0, abs(e_scan))
    inner = e_scan - sign * 1e-9 * scale
    d_inner = cubic_discriminant(j, sigma=sigma, epsilon=inner)
    if d_inner <= 0.0:
        # scan value numerically already past the endpoint
        inner = e_scan - sign * 1e-6 * scale
        d_inner = cubic_discriminant(j, sigma=sigma, epsilon=inner)
        if d_inner <= 0.0:
            return _scan_refine(j, sigma, theta0, sign)
    step = 1e-7 * scale
    outer = e_scan + sign * step
    for _ in range(40):
        if cubic_discriminant(j, sigma=sigma, epsilon=outer) < 0.0:
            break
        step *= 4.0
        outer = e_scan + sign * step
    else:
        return _scan_refine(j, sigma, theta0, sign)
    lo, hi = (inner, outer) if sign > 0 else (outer, inner)
    root = brentq(
        lambda e: cubic_discriminant(j, sigma=sigma, epsilon=e), lo, hi,
        xtol=1e-13 * scale, rtol=1e-15,
    )
    inset = root - sign * 1e-7 * max(1.0, abs(root))
    if _double_root_in_gram_cube(j, root, sigma) or _double_root_in_gram_cube(j, inset, sigma):
        return float(root)
    return _scan_refine(j, sigma, theta0, sign)


def critical_energies(j: Couplings, sigma: float) -> list[tuple[float, int]]:
    """Energies at which a turning point hits a critical point of the frame map.

    Branch 1 exists for sigma in [-3/2, 3], branch 2 only for sigma in
    [-3/2, -1]; outside the branch domain the list omits that branch.
    """
    out: list[tuple[float, int]] = []
    if -1.5 <= sigma <= 3.0:
        s = math.sqrt(3.0 + 2.0 * sigma)
        out.append(
            (0.5 * (j.j2 + j.j3) * (s - 1.0) + j.j1 * (1.0 + sigma - s), 1)
        )
    if -1.5 <= sigma <= -1.0:
        s = math.sqrt(3.0 + 2.0 * sigma)
        out.append(
            (-0.5 * (j.j2 + j.j3) * (s + 1.0) + j.j1 * (1.0 + sigma + s), 2)
        )
    return out


def classify_case(
    j: Couplings,
    cv: ConservedValues,
    gram_point: GramPoint | None = None,
) -> Classification:
    """Decide which solution pipeline applies to the instance (j, cv).

    The strict bound on the third spin component in the generic definition
    is treated as a consistency bound only: sigma3 = +-S breaks no part of
    the trajectory construction.
    """
    sigma, eps = cv.sigma, cv.epsilon
    if sigma < -1.5 - CONSERVED_TOL or sigma > 3.0 + CONSERVED_TOL:
        raise InconsistentConservedValues(f"sigma = {sigma} outside [-3/2, 3]")
    s_len = math.sqrt(max(3.0 + 2.0 * sigma, 0.0))
    if abs(cv.sigma3) > s_len + SINGULAR_TOL:
        raise InconsistentConservedValues(
            f"|sigma3| = {abs(cv.sigma3)} exceeds total spin length {s_len}"
        )

    pairs = couplings_equal_pairs(j)
    if len(pairs) == 3:
        return Classification(CaseLabel.EQUILATERAL)
    if len(pairs) >= 1:
        pair = pairs[0]
        face = _face_case(j, cv, pair)
        if face is not None:
            return face
        return Classification(CaseLabel.ISOSCELES, equal_pair=pair)

    jsum = j.j1 + j.j2 + j.j3
    if abs(sigma - 3.0) <= CONSERVED_TOL:
        if abs(eps - jsum) > CONSERVED_TOL * max(1.0, abs(jsum)):
            raise InconsistentConservedValues(
                "sigma = 3 admits only the aligned collinear configuration"
            )
        return Classification(CaseLabel.COLLINEAR, detail="aligned state")
    if abs(sigma + 1.5) <= CONSERVED_TOL:
        e0 = -0.5 * jsum
        if abs(eps - e0) > CONSERVED_TOL * max(1.0, abs(e0)):
            raise InconsistentConservedValues(
                "sigma = -3/2 admits only the zero-total-spin configuration"
            )
        return Classification(CaseLabel.ZERO_TOTAL_SPIN)

    if gram_point is not None:
        mem = gram_membership(gram_point.u, gram_point.v, gram_point.w)
        if mem.kind is Membership.SINGULAR:
            return Classification(
                CaseLabel.COLLINEAR, detail=f"singular point {mem.singular_index}"
            )

    if abs(sigma + 1.0) <= CONSERVED_TOL:
        corners = corner_energies(j)
        lo, hi = min(corners), max(corners)
        for value in corners:
            if abs(eps - value) <= CONSERVED_TOL * max(1.0, abs(value)):
                if value == lo or value == hi:
                    # line touches the section only at one singular corner
                    return Classification(CaseLabel.COLLINEAR, detail="corner state")
                return Classification(CaseLabel.APERIODIC_SEPARATRIX)

    rng = energy_range(j, sigma)
    margin = CONSERVED_TOL * max(1.0, abs(rng.e_min), abs(rng.e_max))
    slack = 1e-7 * max(1.0, abs(rng.e_min), abs(rng.e_max))
    if eps < rng.e_min - slack or eps > rng.e_max + slack:
        raise InconsistentConservedValues(
            f"energy {eps} outside attainable range [{rng.e_min}, {rng.e_max}]"
        )
    if eps <= rng.e_min + margin or eps >= rng.e_max - margin:
        return Classification(CaseLabel.STATIONARY_GRAM)
    return Classification(CaseLabel.GENERIC)


def _face_case(j: Couplings, cv: ConservedValues, pair: tuple[int, int]) -> Classification | None:
    """Detect a conservation line lying in a one-dimensional face."""
    if abs(cv.sigma + 1.0) > SINGULAR_TOL:
        return None
    vals = j.vec
    jeq = 0.5 * (vals[pair[0]] + vals[pair[1]])
    other = ({0, 1, 2} - set(pair)).pop()
    jother = vals[other]
    if abs(jother - jeq) < 1e-12:
        return None
    # dot product of the anti-parallel pair, implied by the conserved values
    implied = (cv.epsilon - jeq * cv.sigma) / (jother - jeq)
    if abs(implied + 1.0) <= SINGULAR_TOL:
        return Classification(CaseLabel.FACE_CASE, equal_pair=pair)
    return None
