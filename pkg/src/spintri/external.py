"""Reconstruction of the full spin trajectory from the internal oscillation.

The time-dependent configuration is a rotation about the conserved total
spin applied to the canonical (standard-frame) configuration; the rotation
angle is the time integral of the (2,1) entry of the angular-velocity
matrix (J(r) - rdot) r^{-1}, extended through the coplanar turning points
by its closed-form limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline
from scipy.linalg import expm

from .errors import CriticalPointSingularity, NoPhaseMatch, NotGenericError, RefinementRequired
from .geometry import CaseLabel, classify_case, critical_energies
from .internal import WeierstrassData, internal_state, reduce
from .model import (
    Couplings,
    GramPoint,
    conserved_values,
    gram,
    oriented_polar,
    rotation_about,
    standard_config,
)

ALPHA_GRID_CELLS = 4096
_GAUSS_X, _GAUSS_W = np.polynomial.legendre.leggauss(8)


def delta_switch_level(wd: WeierstrassData, j: Couplings) -> float:
    """Crossover |delta| below which the closed-form angular velocity is used.

    Set relative to the orbit maximum of |delta|, attained at the local
    maximum of the reduced cubic.
    """
    x_top = -math.sqrt(max(wd.g2, 0.0) / 12.0)
    pi_top = 4.0 * x_top**3 - wd.g2 * x_top - wd.g3
    d_max = math.sqrt(max(pi_top, 0.0)) / abs(wd.g * (j.j3 - j.j2))
    return 1e-5 * d_max


def _omega_closed_form(u, j: Couplings, epsilon: float, sigma: float):
    """Angular velocity on the conservation line, finite at turning points."""
    s_len = math.sqrt(3.0 + 2.0 * sigma)
    num = (j.j2 + j.j3) * (u + 1.0) - (u - sigma) * (j.j1 * u - epsilon)
    den = 2.0 * (u + 1.0) - (u - sigma) ** 2
    return s_len * num / den


def alpha_dot_values(
    ts: np.ndarray,
    wd: WeierstrassData,
    j: Couplings,
    epsilon: float,
    sigma: float,
    switch: float | None = None,
) -> np.ndarray:
    """Angular velocity alpha-dot at the given times (vectorized).

    Away from turning points the full matrix formula is evaluated; within
    the switch band around delta = 0 the closed form takes over. A turning
    point sitting on a critical point of the frame map has no finite limit
    and raises CriticalPointSingularity.
    """
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    if switch is None:
        switch = delta_switch_level(wd, j)
    u, v, w, d = internal_state(ts, wd, j, epsilon, sigma)
    u = np.atleast_1d(u); v = np.atleast_1d(v); w = np.atleast_1d(w); d = np.atleast_1d(d)
    out = np.empty_like(u)

    near = np.abs(d) <= switch
    if np.any(near):
        den = 2.0 * (u[near] + 1.0) - (u[near] - sigma) ** 2
        if np.any(np.abs(den) < 1e-10):
            raise CriticalPointSingularity(
                "turning point coincides with a critical point of the frame map"
            )
        out[near] = _omega_closed_form(u[near], j, epsilon, sigma)

    far = ~near
    if np.any(far):
        out[far] = _omega_full_matrix(u[far], v[far], w[far], d[far], j)
    return out


def _omega_full_matrix(u, v, w, d, j: Couplings):
    """(2,1) entry of (J(r) - rdot) r^{-1} for batches of Gram points."""
    n = len(u)
    sigma_pt = u + v + w
    ssq = 3.0 + 2.0 * sigma_pt
    q = np.sqrt(ssq)
    psq = 2.0 * (u + 1.0) - (v + w) ** 2
    p = np.sqrt(psq)
    n2 = w * (u + v + 1.0) - (u + 1.0) * (v + 1.0) + w * w
    n3 = v * (w + u + 1.0) - (w + 1.0) * (u + 1.0) + v * v

    r = np.empty((n, 3, 3))
    r[:, 0, 0] = p / q
    r[:, 0, 1] = n2 / (p * q)
    r[:, 0, 2] = n3 / (p * q)
    r[:, 1, 0] = 0.0
    r[:, 1, 1] = d / p
    r[:, 1, 2] = -d / p
    r[:, 2, 0] = (v + w + 1.0) / q
    r[:, 2, 1] = (u + w + 1.0) / q
    r[:, 2, 2] = (u + v + 1.0) / q

    ud = (j.j3 - j.j2) * d
    vd = (j.j1 - j.j3) * d
    wd_ = (j.j2 - j.j1) * d
    dd = (
        j.j1 * (u + 1.0) * (w - v)
        + j.j2 * (v + 1.0) * (u - w)
        + j.j3 * (w + 1.0) * (v - u)
    )
    qd = (ud + vd + wd_) / q
    pd = (ud - (v + w) * (vd + wd_)) / p
    n2d = wd_ * (u + v + 1.0) + w * (ud + vd) - ud * (v + 1.0) - (u + 1.0) * vd + 2.0 * w * wd_
    n3d = vd * (w + u + 1.0) + v * (wd_ + ud) - wd_ * (u + 1.0) - (w + 1.0) * ud + 2.0 * v * vd
    pq = p * q
    pqd = pd * q + p * qd

    rdot = np.empty_like(r)
    rdot[:, 0, 0] = pd / q - p * qd / ssq
    rdot[:, 0, 1] = n2d / pq - n2 * pqd / pq**2
    rdot[:, 0, 2] = n3d / pq - n3 * pqd / pq**2
    rdot[:, 1, 0] = 0.0
    rdot[:, 1, 1] = dd / p - d * pd / psq
    rdot[:, 1, 2] = -rdot[:, 1, 1]
    rdot[:, 2, 0] = (vd + wd_) / q - (v + w + 1.0) * qd / ssq
    rdot[:, 2, 1] = (ud + wd_) / q - (u + w + 1.0) * qd / ssq
    rdot[:, 2, 2] = (ud + vd) / q - (u + v + 1.0) * qd / ssq

    eff = r @ j.matrix()
    torque = np.cross(eff, r, axisa=1, axisb=1, axisc=1)
    m = torque - rdot
    e1 = np.zeros((n, 3, 1))
    e1[:, 0, 0] = 1.0
    rinv_col1 = np.linalg.solve(r, e1)[:, :, 0]
    return np.einsum("ni,ni->n", m[:, 1, :], rinv_col1)


def alpha_period(j: Couplings, epsilon: float, sigma: float,
                 wd: WeierstrassData | None = None) -> float:
    """Rotation angle accumulated over one internal period (adaptive quadrature)."""
    if wd is None:
        wd = reduce(j, epsilon, sigma)
    period = wd.period
    switch = delta_switch_level(wd, j)

    def f(t):
        return float(alpha_dot_values(t, wd, j, epsilon, sigma, switch)[0])

    val, _ = quad(f, 0.0, period, points=[0.5 * period], limit=400,
                  epsabs=1e-11, epsrel=1e-11)
    return val


class ExternalSolution:
    """Full trajectory of one generic instance.

    evaluate(t) returns the spin configuration; alpha(t) the cumulative
    rotation angle of the canonical solution. The initial condition is
    located on the canonical orbit by a time shift t_init and one fixed
    alignment rotation.
    """

    def __init__(
        self,
        j: Couplings,
        epsilon: float,
        sigma: float,
        wd: WeierstrassData,
        alignment_rotation: np.ndarray,
        t_init: float,
    ):
        self.j = j
        self.epsilon = epsilon
        self.sigma = sigma
        self.wd = wd
        self.alignment_rotation = np.asarray(alignment_rotation, dtype=float)
        self.t_init = float(t_init)
        self.s_len = math.sqrt(3.0 + 2.0 * sigma)
        self._switch = delta_switch_level(wd, j)
        self._build_alpha_table()

    def _build_alpha_table(self) -> None:
        period = self.wd.period
        edges = np.linspace(0.0, period, ALPHA_GRID_CELLS + 1)
        h = edges[1] - edges[0]
        nodes = (edges[:-1, None] + 0.5 * h * (1.0 + _GAUSS_X[None, :])).ravel()
        vals = alpha_dot_values(nodes, self.wd, self.j, self.epsilon, self.sigma,
                                self._switch)
        cell = (vals.reshape(ALPHA_GRID_CELLS, len(_GAUSS_X)) @ _GAUSS_W) * 0.5 * h
        cumulative = np.concatenate([[0.0], np.cumsum(cell)])
        self.alpha_table = (edges, cumulative)
        self.alpha_T = float(cumulative[-1])
        f0 = float(alpha_dot_values(0.0, self.wd, self.j, self.epsilon, self.sigma,
                                    self._switch)[0])
        self._spline = CubicSpline(edges, cumulative, bc_type=((1, f0), (1, f0)))

    def alpha(self, t):
        """Cumulative rotation angle, alpha(0) = 0, alpha(t+T) = alpha(t) + alpha(T)."""
        t = np.asarray(t, dtype=float)
        period = self.wd.period
        k = np.floor(t / period)
        tau = t - k * period
        vals = self._spline(tau) + k * self.alpha_T
        return float(vals) if vals.ndim == 0 else vals

    def alpha_dot(self, t):
        return alpha_dot_values(t, self.wd, self.j, self.epsilon, self.sigma,
                                self._switch)

    def evaluate(self, t):
        """Spin configuration at time t (scalar -> (3,3), array -> (n,3,3))."""
        scalar = np.ndim(t) == 0
        ts = np.atleast_1d(np.asarray(t, dtype=float)) + self.t_init
        u, v, w, d = internal_state(ts, self.wd, self.j, self.epsilon, self.sigma)
        angles = self.alpha(ts) - self.alpha(self.t_init)
        out = np.empty((len(ts), 3, 3))
        for i in range(len(ts)):
            r = standard_config(GramPoint(float(np.atleast_1d(u)[i]),
                                          float(np.atleast_1d(v)[i]),
                                          float(np.atleast_1d(w)[i]),
                                          float(np.atleast_1d(d)[i])))
            rot = rotation_about(np.array([0.0, 0.0, 1.0]), float(np.atleast_1d(angles)[i]))
            out[i] = self.alignment_rotation @ rot @ r
        return out[0] if scalar else out


def canonical_solution(j: Couplings, epsilon: float, sigma: float) -> ExternalSolution:
    """Solution starting at the x = x1 turning point in the standard frame."""
    wd = reduce(j, epsilon, sigma)
    return ExternalSolution(j, epsilon, sigma, wd, np.eye(3), 0.0)


def solve(j: Couplings, s0: np.ndarray) -> ExternalSolution:
    """Semi-analytic solution through the initial configuration s0."""
    s0 = np.asarray(s0, dtype=float)
    cv = conserved_values(s0, j)
    gp0 = gram(s0)
    cls = classify_case(j, cv, gp0)
    if cls.label is not CaseLabel.GENERIC:
        raise NotGenericError(cls)
    wd = reduce(j, cv.epsilon, cv.sigma)
    t_init = _locate_phase(gp0, wd, j, cv.epsilon, cv.sigma)
    gp_init = internal_state(t_init, wd, j, cv.epsilon, cv.sigma)
    mismatch = max(
        abs(gp_init.u - gp0.u),
        abs(gp_init.v - gp0.v),
        abs(gp_init.w - gp0.w),
        abs(gp_init.delta - gp0.delta),
    )
    if mismatch > 1e-7:
        raise NoPhaseMatch(
            f"initial condition does not sit on the canonical orbit "
            f"(mismatch {mismatch:.3e})"
        )
    r_init = standard_config(gp_init)
    rot_s, _ = oriented_polar(s0)
    rot_r, _ = oriented_polar(r_init)
    alignment = rot_s @ rot_r.T
    return ExternalSolution(j, cv.epsilon, cv.sigma, wd, alignment, t_init)


def _locate_phase(
    gp0: GramPoint, wd: WeierstrassData, j: Couplings, epsilon: float, sigma: float
) -> float:
    """Time in [0, T) at which the canonical orbit passes through gp0."""
    x1, x2, _ = wd.roots.as_tuple()
    x_target = min(max(wd.x0 + wd.g * gp0.u, x1), x2)
    half = 0.5 * wd.period
    lo, hi = 0.0, half
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        gp = internal_state(mid, wd, j, epsilon, sigma)
        if wd.x0 + wd.g * gp.u < x_target:
            lo = mid
        else:
            hi = mid
    t_up = 0.5 * (lo + hi)
    gp_up = internal_state(t_up, wd, j, epsilon, sigma)
    if gp0.delta * gp_up.delta >= 0.0 or abs(gp0.delta) <= 1e-12:
        if abs(gp0.delta) <= 1e-12:
            # turning points sit exactly at t = 0 and t = T/2
            return 0.0 if abs(x_target - x1) <= abs(x_target - x2) else half
        return t_up
    return wd.period - t_up


def floquet_monodromy(sol: ExternalSolution) -> tuple[float, np.ndarray]:
    """Quasienergy f = alpha(T)/T and the monodromy rotation about the spin axis.

    Asserts that the matrix exponential of the constant generator
    reproduces the monodromy and that the residual factor is periodic.
    """
    period = sol.wd.period
    f = sol.alpha_T / period
    z_t = rotation_about(np.array([0.0, 0.0, 1.0]), sol.alpha_T)
    gen = f * np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
    recon = expm(gen * period)
    if np.abs(recon - z_t).max() > 1e-10:
        raise AssertionError("monodromy reconstruction from the generator failed")
    for t in np.linspace(0.1, 0.9, 5) * period:
        p1 = rotation_about([0, 0, 1.0], sol.alpha(t) - f * t)
        p2 = rotation_about([0, 0, 1.0], sol.alpha(t + period) - f * (t + period))
        if np.abs(p1 - p2).max() > 1e-8:
            raise AssertionError("periodic Floquet factor failed its periodicity check")
    return f, z_t


@dataclass(frozen=True)
class AlphaSweep:
    epsilon: np.ndarray
    raw: np.ndarray
    smoothed: np.ndarray
    criticals: tuple[float, ...]


def smoothed_alpha_T(j: Couplings, sigma: float, epsilon_grid) -> AlphaSweep:
    """Per-period rotation angle over an energy grid, unwrapped across criticals.

    The raw angle jumps by 2*pi whenever the energy crosses a critical
    energy; the smoothed column removes those jumps. A grid that cannot
    resolve a jump raises RefinementRequired.
    """
    eps = np.asarray(epsilon_grid, dtype=float)
    raw = np.array([alpha_period(j, e, sigma) for e in eps])
    crits = [c for c, _ in critical_energies(j, sigma)]
    smoothed = raw.copy()
    offset = 0.0
    for i in range(1, len(eps)):
        d = raw[i] + offset - smoothed[i - 1]
        if abs(d) > math.pi:
            straddles = any(
                (eps[i - 1] - c) * (eps[i] - c) <= 0.0 for c in crits
            )
            if not straddles:
                raise RefinementRequired(
                    f"jump {d:.3f} between grid points {eps[i-1]} and {eps[i]} "
                    "away from any critical energy"
                )
            k = round(d / (2.0 * math.pi))
            offset -= 2.0 * math.pi * k
            d -= 2.0 * math.pi * k
            if abs(d) > math.pi:
                raise RefinementRequired(
                    f"residual jump {d:.3f} after unwrapping; refine the grid"
                )
        smoothed[i] = raw[i] + offset
    return AlphaSweep(eps, raw, smoothed, tuple(crits))


def alpha(t, sol: ExternalSolution):
    """Module-level accessor for the cumulative rotation angle."""
    return sol.alpha(t)
