"""Independent adaptive Runge-Kutta integration of the spin equations of motion.

Dormand-Prince 5(4) embedded pair with the Shampine dense-output
interpolant, written out explicitly so the oracle shares no code with the
semi-analytic pipeline it validates. Optional Zeeman term B(t) along a
fixed axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import StepSizeUnderflow
from .model import Couplings, conserved_values, gram, gram_det, total_spin

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_ERR = np.array(
    [71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40]
)
# quartic dense-output interpolant (Shampine's coefficients for this pair)
_P = np.array(
    [
        [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
        [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
        [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
        [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
        [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
    ]
)


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = np.inf
    renormalize: bool = False
    monitor_interval: float = 0.1


@dataclass
class SampleAudit:
    energy: float
    spin: np.ndarray
    column_norms: np.ndarray


@dataclass
class Trajectory:
    times: np.ndarray
    states: list[np.ndarray]
    audits: list[SampleAudit] = field(default_factory=list)

    def state(self, i: int) -> np.ndarray:
        return self.states[i]


@dataclass
class AuditReport:
    max_denergy: float
    max_dspin: np.ndarray
    max_norm_drift: float
    max_gram_identity: float


def _rhs_factory(j: Couplings, field_spec=None) -> Callable[[float, np.ndarray], np.ndarray]:
    jm = j.matrix()
    if field_spec is None:
        def rhs(t: float, y: np.ndarray) -> np.ndarray:
            s = y.reshape(3, 3)
            eff = s @ jm
            return np.cross(eff, s, axisa=0, axisb=0).T.reshape(-1)
        return rhs
    b_of_t, axis = field_spec
    e = np.asarray(axis, dtype=float)
    e = e / np.linalg.norm(e)

    def rhs_field(t: float, y: np.ndarray) -> np.ndarray:
        s = y.reshape(3, 3)
        eff = s @ jm + b_of_t(t) * e[:, None]
        return np.cross(eff, s, axisa=0, axisb=0).T.reshape(-1)

    return rhs_field


def integrate(
    j: Couplings,
    s0: np.ndarray,
    t_end: float,
    cfg: IntegratorConfig = IntegratorConfig(),
    field: tuple[Callable[[float], float], Sequence[float]] | None = None,
    t_eval: Sequence[float] | None = None,
) -> Trajectory:
    """Integrate the equations of motion from s0 over [0, t_end].

    Samples are taken at `t_eval` (default: multiples of monitor_interval)
    through the 4th-order dense-output interpolant; audits are recorded per
    sample. Column norms are not renormalized unless cfg.renormalize.
    """
    s0 = np.asarray(s0, dtype=float)
    if t_eval is None:
        n = max(int(math.floor(t_end / cfg.monitor_interval)), 1)
        t_eval = np.linspace(0.0, t_end, n + 1)
    t_eval = np.asarray(t_eval, dtype=float)
    rhs = _rhs_factory(j, field)

    states = _drive(rhs, s0.reshape(-1), t_end, cfg, t_eval)
    traj = Trajectory(times=t_eval, states=[y.reshape(3, 3).copy() for y in states])
    for s in traj.states:
        traj.audits.append(
            SampleAudit(
                energy=float(np.sum((s @ j.matrix()) * s) / 2.0),
                spin=total_spin(s),
                column_norms=np.linalg.norm(s, axis=0),
            )
        )
    return traj


def _drive(rhs, y, t_end, cfg, t_eval):
    out = []
    targets = iter(range(len(t_eval)))
    next_i = next(targets, None)
    t = 0.0
    k1 = rhs(t, y)
    # initial step from the scale of the derivative
    scale = np.linalg.norm(k1) + 1e-12
    h = min(cfg.max_step, 0.01 * max(np.linalg.norm(y), 1.0) / scale, abs(t_end) or 1.0)
    span = abs(t_end) if t_end else 1.0

    while next_i is not None and t_eval[next_i] <= t + 1e-15 * span:
        out.append(y.copy())
        next_i = next(targets, None)

    while t < t_end - 1e-15 * span:
        h = min(h, t_end - t, cfg.max_step)
        if h < 1e-14 * span:
            raise StepSizeUnderflow(f"step {h} underflow at t = {t}")
        ks = [k1]
        for i in range(1, 7):
            yi = y + h * (np.stack(ks, axis=0).T @ _A[i])
            ks.append(rhs(t + _C[i] * h, yi))
        kmat = np.stack(ks, axis=0)
        y_new = y + h * (_B5 @ kmat)
        err_vec = h * (_ERR @ kmat)
        tol = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
        err = math.sqrt(float(np.mean((err_vec / tol) ** 2)))
        if err <= 1.0:
            # dense output over [t, t+h]
            while next_i is not None and t_eval[next_i] <= t + h + 1e-15 * span:
                theta = (t_eval[next_i] - t) / h
                weights = theta * (_P @ np.array([1.0, theta, theta**2, theta**3]))
                out.append(y + h * (kmat.T @ weights))
                next_i = next(targets, None)
            t += h
            y = y_new
            if cfg.renormalize:
                s = y.reshape(3, 3)
                s /= np.linalg.norm(s, axis=0)
                y = s.reshape(-1)
                k1 = rhs(t, y)
            else:
                k1 = ks[6]  # FSAL
        factor = 0.9 * err ** (-0.2) if err > 0 else 5.0
        h *= min(5.0, max(0.2, factor))
    while next_i is not None:
        out.append(y.copy())
        next_i = next(targets, None)
    return out


def integrate_fixed(j: Couplings, s0: np.ndarray, t_end: float, n_steps: int,
                    field=None) -> np.ndarray:
    """Fixed-step 5th-order endpoint state (used for order-of-convergence tests)."""
    rhs = _rhs_factory(j, field)
    y = np.asarray(s0, dtype=float).reshape(-1).copy()
    h = t_end / n_steps
    t = 0.0
    for _ in range(n_steps):
        ks = [rhs(t, y)]
        for i in range(1, 7):
            yi = y + h * (np.stack(ks, axis=0).T @ _A[i])
            ks.append(rhs(t + _C[i] * h, yi))
        y = y + h * (_B5 @ np.stack(ks, axis=0))
        t += h
    return y.reshape(3, 3)


def audit(traj: Trajectory, j: Couplings) -> AuditReport:
    """Maximum drift of the conserved quantities over a trajectory."""
    if not traj.states:
        raise ValueError("empty trajectory")
    ref = traj.audits[0]
    d_e = max(abs(a.energy - ref.energy) for a in traj.audits)
    d_s = np.max(
        np.abs(np.stack([a.spin for a in traj.audits]) - ref.spin[None, :]), axis=0
    )
    d_n = max(float(np.max(np.abs(a.column_norms - 1.0))) for a in traj.audits)
    d_g = 0.0
    for s in traj.states:
        g = gram(s)
        d_g = max(d_g, abs(g.delta**2 - gram_det(g.u, g.v, g.w)))
    return AuditReport(
        max_denergy=d_e, max_dspin=d_s, max_norm_drift=d_n, max_gram_identity=d_g
    )
