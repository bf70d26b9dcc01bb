"""Spin-triangle data model.

A spin configuration is a 3x3 numpy array whose *columns* are the three
unit spin vectors. The exchange couplings are labelled so that j1 couples
spins 2-3, j2 couples 3-1 and j3 couples 1-2; the energy is then
j1*u + j2*v + j3*w in terms of the pairwise dot products (u, v, w).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CollinearError, DomainError

UNIT_TOL = 1e-9
# threshold below which the turning-point limit replaces the delta/P ratio
CRITICAL_DENOM_TOL = 1e-12


@dataclass(frozen=True)
class Couplings:
    """Exchange constants (j1, j2, j3); j_mu couples the pair not containing mu."""

    j1: float
    j2: float
    j3: float

    @property
    def vec(self) -> np.ndarray:
        return np.array([self.j1, self.j2, self.j3])

    def matrix(self) -> np.ndarray:
        """Symmetric coupling matrix J_{mu nu} with zero diagonal."""
        return np.array(
            [
                [0.0, self.j3, self.j2],
                [self.j3, 0.0, self.j1],
                [self.j2, self.j1, 0.0],
            ]
        )

    def shifted(self, delta: float) -> "Couplings":
        return Couplings(self.j1 + delta, self.j2 + delta, self.j3 + delta)

    def scaled(self, factor: float) -> "Couplings":
        return Couplings(self.j1 * factor, self.j2 * factor, self.j3 * factor)

    def permuted(self, order: tuple[int, int, int]) -> "Couplings":
        v = self.vec
        return Couplings(*(float(v[i]) for i in order))


@dataclass(frozen=True)
class GramPoint:
    """Internal state: pairwise dot products plus the signed spin volume."""

    u: float
    v: float
    w: float
    delta: float

    @property
    def det_gram(self) -> float:
        return gram_det(self.u, self.v, self.w)

    @property
    def sigma(self) -> float:
        return self.u + self.v + self.w

    def validate(self, tol: float = UNIT_TOL) -> None:
        d = self.det_gram
        if d < -tol:
            raise DomainError(f"point outside the Gram set (det {d:.3e})")
        if abs(self.delta**2 - d) > tol:
            raise DomainError(
                f"delta^2 = {self.delta**2:.3e} inconsistent with det G = {d:.3e}"
            )


@dataclass(frozen=True)
class ConservedValues:
    """Constants of motion of one trajectory."""

    epsilon: float
    sigma: float
    sigma3: float
    s_len: float

    @classmethod
    def from_sigma(cls, epsilon: float, sigma: float, sigma3: float) -> "ConservedValues":
        return cls(epsilon, sigma, sigma3, math.sqrt(max(3.0 + 2.0 * sigma, 0.0)))


def gram_det(u: float, v: float, w: float) -> float:
    """det of the unit-diagonal Gram matrix with off-diagonals u, v, w."""
    return 1.0 - u * u - v * v - w * w + 2.0 * u * v * w


def validate_config(s: np.ndarray, tol: float = UNIT_TOL) -> None:
    s = np.asarray(s)
    if s.shape != (3, 3):
        raise DomainError(f"spin configuration must be 3x3, got {s.shape}")
    norms = np.linalg.norm(s, axis=0)
    if np.any(np.abs(norms - 1.0) > tol):
        raise DomainError(f"spin columns not unit vectors (norms {norms})")


def gram(s: np.ndarray) -> GramPoint:
    """Pairwise dot products (u, v, w) = (s2.s3, s3.s1, s1.s2) and delta = det s."""
    s = np.asarray(s, dtype=float)
    return GramPoint(
        u=float(s[:, 1] @ s[:, 2]),
        v=float(s[:, 2] @ s[:, 0]),
        w=float(s[:, 0] @ s[:, 1]),
        delta=float(np.linalg.det(s)),
    )


def hamiltonian(s: np.ndarray, j: Couplings) -> float:
    g = gram(s)
    return j.j1 * g.u + j.j2 * g.v + j.j3 * g.w


def h1(s: np.ndarray) -> float:
    """Sum of the pairwise dot products (the equal-couplings energy)."""
    g = gram(s)
    return g.u + g.v + g.w


def total_spin(s: np.ndarray) -> np.ndarray:
    return np.asarray(s, dtype=float).sum(axis=1)


def conserved_values(s: np.ndarray, j: Couplings) -> ConservedValues:
    g = gram(s)
    sigma = g.u + g.v + g.w
    spin = total_spin(s)
    return ConservedValues(
        epsilon=j.j1 * g.u + j.j2 * g.v + j.j3 * g.w,
        sigma=sigma,
        sigma3=float(spin[2]),
        s_len=float(np.linalg.norm(spin)),
    )


def torque_field(s: np.ndarray, j: Couplings) -> np.ndarray:
    """Right-hand side of the equations of motion, column mu = (sum_k J_mk s_k) x s_mu."""
    s = np.asarray(s, dtype=float)
    eff = s @ j.matrix()  # column mu = sum_kappa J_{mu kappa} s_kappa
    return np.cross(eff, s, axisa=0, axisb=0).T


def rotation_about(axis: np.ndarray, angle: float) -> np.ndarray:
    """Proper rotation by `angle` about `axis` (right-hand rule, any nonzero length)."""
    n = np.asarray(axis, dtype=float)
    nn = np.linalg.norm(n)
    if nn == 0.0:
        if angle == 0.0:
            return np.eye(3)
        raise DomainError("rotation axis must be nonzero")
    x, y, z = n / nn
    c, si = math.cos(angle), math.sin(angle)
    cross = np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])
    outer = np.outer([x, y, z], [x, y, z])
    return c * np.eye(3) + si * cross + (1.0 - c) * outer


def standard_config(g: GramPoint) -> np.ndarray:
    """Canonical configuration realizing g with total spin (0, 0, sqrt(3+2*sigma)).

    Defined on the doubled Gram set minus the zero-total-spin point; at
    turning points that are also critical points of the map (delta = 0 and
    v = w with 2(1+u) = (v+w)^2) the second components take their
    continuity-limit values +-sqrt(1-v^2).
    """
    u, v, w, delta = g.u, g.v, g.w, g.delta
    ssq = 3.0 + 2.0 * (u + v + w)
    if ssq <= UNIT_TOL:
        raise DomainError("standard configuration undefined for zero total spin")
    q = math.sqrt(ssq)
    psq = 2.0 * (u + 1.0) - (v + w) ** 2
    z1 = (v + w + 1.0) / q
    z2 = (u + w + 1.0) / q
    z3 = (u + v + 1.0) / q
    if psq < CRITICAL_DENOM_TOL:
        # psq > 0 holds whenever delta != 0 or v != w; the remaining turning
        # points on the parabola u = 2v^2 - 1 have the continuity limit below,
        # and everything else here is a singular extremal point.
        if psq < -CRITICAL_DENOM_TOL or abs(delta) > 1e-6 or abs(v - w) > 1e-6:
            raise DomainError(
                f"standard configuration undefined: 2(1+u)-(v+w)^2 = {psq:.3e}"
            )
        # at the critical turning point delta/P -> sqrt(1-v^2) and the first
        # components vanish like sqrt(|x - x_turn|)
        c = math.sqrt(max(1.0 - v * v, 0.0))
        return np.array(
            [
                [0.0, 0.0, 0.0],
                [0.0, c, -c],
                [z1, z2, z3],
            ]
        )
    p = math.sqrt(psq)
    ratio = delta / p
    n2 = w * (u + v + 1.0) - (u + 1.0) * (v + 1.0) + w * w
    n3 = v * (w + u + 1.0) - (w + 1.0) * (u + 1.0) + v * v
    return np.array(
        [
            [p / q, n2 / (p * q), n3 / (p * q)],
            [0.0, ratio, -ratio],
            [z1, z2, z3],
        ]
    )


def standard_config_velocity(g: GramPoint, rates: tuple[float, float, float, float]) -> np.ndarray:
    """Time derivative of standard_config along internal rates (du, dv, dw, ddelta)."""
    u, v, w, delta = g.u, g.v, g.w, g.delta
    ud, vd, wd, dd = rates
    ssq = 3.0 + 2.0 * (u + v + w)
    q = math.sqrt(ssq)
    qd = (ud + vd + wd) / q
    psq = 2.0 * (u + 1.0) - (v + w) ** 2
    if psq <= 0.0:
        raise DomainError("velocity of the standard configuration undefined at a critical point")
    p = math.sqrt(psq)
    pd = (ud - (v + w) * (vd + wd)) / p
    n2 = w * (u + v + 1.0) - (u + 1.0) * (v + 1.0) + w * w
    n3 = v * (w + u + 1.0) - (w + 1.0) * (u + 1.0) + v * v
    n2d = wd * (u + v + 1.0) + w * (ud + vd) - ud * (v + 1.0) - (u + 1.0) * vd + 2.0 * w * wd
    n3d = vd * (w + u + 1.0) + v * (wd + ud) - wd * (u + 1.0) - (w + 1.0) * ud + 2.0 * v * vd
    pq = p * q
    pqd = pd * q + p * qd
    return np.array(
        [
            [
                pd / q - p * qd / ssq,
                n2d / pq - n2 * pqd / pq**2,
                n3d / pq - n3 * pqd / pq**2,
            ],
            [
                0.0,
                dd / p - delta * pd / psq,
                -(dd / p - delta * pd / psq),
            ],
            [
                (vd + wd) / q - (v + w + 1.0) * qd / ssq,
                (ud + wd) / q - (u + w + 1.0) * qd / ssq,
                (ud + vd) / q - (u + v + 1.0) * qd / ssq,
            ],
        ]
    )


def oriented_polar(s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Decompose s = R p with R in SO(3) and p symmetric, sign(det p) = sign(det s).

    Unique for configurations of rank >= 2; rank 1 raises CollinearError.
    """
    s = np.asarray(s, dtype=float)
    uu, sv, vt = np.linalg.svd(s)
    if sv[1] <= 1e-9 * max(sv[0], 1.0):
        raise CollinearError("configuration has rank 1; polar factor not unique")
    d = np.linalg.det(uu) * np.linalg.det(vt)
    dets = np.linalg.det(s)
    if abs(dets) <= 1e-12:
        # rank 2: flip the null direction so the rotation is proper
        if d < 0.0:
            uu = uu.copy()
            uu[:, 2] = -uu[:, 2]
        rot = uu @ vt
        sym = vt.T @ np.diag(sv) @ vt
        return rot, sym
    rot = uu @ vt
    sym = vt.T @ np.diag(sv) @ vt
    if dets < 0.0:
        # proper rotation times a negative-semidefinite symmetric factor
        return -rot, -sym
    return rot, sym


def config_rows(s: np.ndarray) -> list[list[float]]:
    """Row-major nested-list form used for JSON output."""
    return [[float(x) for x in row] for row in np.asarray(s, dtype=float)]
