"""Integration of the Hamiltonian flows and the drift-law experiments.

States are ``(theta1, theta2, R1, R2)`` in the action-angle chart and
``(x1, y1, x2, y2)`` in the Cartesian chart.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import DOP853, solve_ivp

from .errors import DomainError, IntegrationError, NumericError
from .integrable import forward_chart
from .perturbation import (actions, eval_action_angle, eval_cartesian, polar_map_T,
                           polar_map_T_inverse, vector_field_action_angle,
                           vector_field_cartesian)

SCHEMES = ("adaptive_rk8", "implicit_midpoint")
POINCARE_STEPS_PER_TURN = 16
EXIT_MARGIN = 1e-6
NEWTON_TOL = 1e-13


@dataclass(frozen=True)
class IntegratorConfig:
    scheme: str = "adaptive_rk8"
    rel_tol: float = 1e-12
    abs_tol: float = 1e-14
    max_step: float = math.inf
    energy_alarm: float = 1e-8

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")
        if not (self.rel_tol > 0 and self.abs_tol > 0 and self.energy_alarm > 0 and self.max_step > 0):
            raise ValueError("tolerances and max_step must be positive")
        if self.scheme == "implicit_midpoint" and not math.isfinite(self.max_step):
            raise ValueError("implicit_midpoint needs a finite max_step (its fixed step)")

    def to_dict(self):
        return {"scheme": self.scheme, "rel_tol": self.rel_tol, "abs_tol": self.abs_tol,
                "max_step": self.max_step if math.isfinite(self.max_step) else None,
                "energy_alarm": self.energy_alarm}

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if d.get("max_step") is None:
            d["max_step"] = math.inf
        return cls(**d)


# ------------------------------------------------------------------ dynamics
class ToySystem:
    """``H = <k, R> + eps cos(theta . k_perp)`` on ``T^2 x R^2``."""

    chart = "action_angle"
    delta = math.inf

    def __init__(self, k, epsilon):
        self.k = tuple(k)
        self.kperp = (-self.k[1], self.k[0])
        self.epsilon = float(epsilon)


def toy_flow(k, epsilon, theta0, R0, t):
    """Closed-form flow of :class:`ToySystem`."""
    kp = np.array([-k[1], k[0]], dtype=float)
    theta0 = np.asarray(theta0, dtype=float)
    s = math.sin(float(theta0 @ kp))
    return theta0 + t * np.asarray(k, dtype=float), np.asarray(R0, dtype=float) + t * epsilon * s * kp


class _Dynamics:
    """Uniform view (field, energy, actions, exit coordinate) over the supported systems."""

    def __init__(self, sys):
        self.sys = sys
        self.chart = sys.chart
        if isinstance(sys, ToySystem):
            k, kp, e = np.array(sys.k, float), np.array(sys.kperp, float), sys.epsilon

            def field_(s):
                return np.concatenate([k, e * math.sin(s[0] * kp[0] + s[1] * kp[1]) * kp])

            def energy(s):
                return float(k @ s[2:]) + e * math.cos(s[0] * kp[0] + s[1] * kp[1])

            self.field, self.energy = field_, energy
            self.limit = math.inf
        elif sys.chart == "action_angle":
            self.field = lambda s: vector_field_action_angle(sys, s[:2], s[2:], strict=False)
            self.energy = lambda s: eval_action_angle(sys, s[:2], s[2:], strict=False)
            self.limit = sys.delta * (1.0 - EXIT_MARGIN)
        else:
            self.field = lambda s: vector_field_cartesian(sys, s)
            self.energy = lambda s: eval_cartesian(sys, s)
            self.limit = sys.delta * (1.0 - EXIT_MARGIN)

    def actions(self, s):
        return np.asarray(s[2:]) if self.chart == "action_angle" else actions(s)

    def exit_value(self, s):
        """Positive once the first action coordinate leaves the strip."""
        return abs(self.actions(s)[0]) - self.limit


# ------------------------------------------------------------------ records
@dataclass
class TrajectoryRecord:
    chart: str
    t: np.ndarray
    states: np.ndarray
    energy: np.ndarray
    actions: np.ndarray
    reason: str
    exit_time: float | None = None
    d_line: np.ndarray | None = None

    @property
    def energy_drift(self):
        return float(np.max(np.abs(self.energy - self.energy[0]))) if len(self.energy) else 0.0

    def csv_rows(self):
        """Rows ``t, q1, q2, p1, p2, H, d_line``."""
        if self.chart == "action_angle":
            q, p = self.states[:, :2], self.states[:, 2:]
        else:
            q, p = self.states[:, [0, 2]], self.states[:, [1, 3]]
        d = self.d_line if self.d_line is not None else np.full(len(self.t), np.nan)
        return np.column_stack([self.t, q, p, self.energy, d])


def _rk8_run(dyn, state0, t_span, cfg, events=True):
    def rhs(t, s):
        return dyn.field(s)

    def leave(t, s):
        return dyn.exit_value(s)

    leave.terminal, leave.direction = True, 1
    ev = leave if events and math.isfinite(dyn.limit) else None
    sol = solve_ivp(rhs, t_span, np.asarray(state0, float), method="DOP853",
                    rtol=cfg.rel_tol, atol=cfg.abs_tol, max_step=cfg.max_step,
                    events=ev, dense_output=False)
    if sol.status < 0:
        raise IntegrationError(f"integration failed: {sol.message}",
                               record=(sol.t, sol.y.T))
    exit_time = None
    if ev is not None and len(sol.t_events[0]):
        exit_time = float(sol.t_events[0][0])
    return sol.t, sol.y.T, exit_time


def _midpoint_step(field_, s, h):
    """One implicit midpoint step by Newton with a difference Jacobian."""
    z = s + h * field_(s)
    eye = np.eye(len(s))
    for _ in range(50):
        mid = 0.5 * (s + z)
        res = z - s - h * field_(mid)
        if np.max(np.abs(res)) < NEWTON_TOL:
            return z
        J = np.empty((len(s), len(s)))
        for j in range(len(s)):
            e = 1e-7 * max(1.0, abs(mid[j])) * eye[j]
            J[:, j] = (field_(mid + e) - field_(mid - e)) / (2 * e[j])
        z = z - np.linalg.solve(eye - 0.5 * h * J, res)
    res = z - s - h * field_(0.5 * (s + z))
    if np.max(np.abs(res)) < 10 * NEWTON_TOL:
        return z
    raise NumericError(f"implicit midpoint Newton stalled (residual {np.max(np.abs(res)):.3e})")


def _midpoint_run(dyn, state0, t_span, cfg):
    t0, t1 = t_span
    h = cfg.max_step
    n = int(math.ceil((t1 - t0) / h - 1e-12))
    ts, ss = [t0], [np.asarray(state0, float)]
    exit_time = None
    for i in range(n):
        hi = min(h, t1 - ts[-1])
        s = _midpoint_step(dyn.field, ss[-1], hi)
        ts.append(ts[-1] + hi)
        ss.append(s)
        if math.isfinite(dyn.limit) and dyn.exit_value(s) >= 0:
            exit_time = ts[-1]
            break
    return np.array(ts), np.array(ss), exit_time


def integrate(sys, state0, t_span, cfg=None, channel=None):
    """Integrate from ``state0`` over ``t_span``.

    Stops when the first action coordinate reaches ``delta*(1 - 1e-6)``; the
    energy alarm truncates the record at the first sample beyond the threshold.
    """
    cfg = cfg or IntegratorConfig()
    dyn = _Dynamics(sys)
    try:
        if cfg.scheme == "adaptive_rk8":
            t, S, exit_time = _rk8_run(dyn, state0, t_span, cfg)
        else:
            t, S, exit_time = _midpoint_run(dyn, state0, t_span, cfg)
    except DomainError as exc:
        raise IntegrationError(f"state left the domain of h: {exc}") from exc
    H = np.array([dyn.energy(s) for s in S])
    A = np.array([dyn.actions(s) for s in S])
    reason = "left domain U" if exit_time is not None else "time end"
    bad = np.nonzero(np.abs(H - H[0]) > cfg.energy_alarm)[0]
    if len(bad):
        cut = bad[0] + 1
        t, S, H, A = t[:cut], S[:cut], H[:cut], A[:cut]
        reason, exit_time = "energy alarm", None
    d = None
    if channel is not None:
        d = np.array([channel.signed_distance(a) for a in A])
    return TrajectoryRecord(chart=dyn.chart, t=np.asarray(t), states=np.asarray(S), energy=H,
                            actions=A, reason=reason, exit_time=exit_time, d_line=d)


# ------------------------------------------------------------------ drift law
@dataclass
class DriftReport:
    n: int
    chart: str
    epsilon: float
    base_point: list
    velocity: list
    max_transverse_deviation: float
    relative_transverse_deviation: float
    max_line_deviation: float
    relative_line_deviation: float
    speed_fit: float
    speed_predicted: float
    speed_relative_error: float
    initial_distance: float
    achieved_distance: float
    escape_time: float | None
    phase_drift: float
    line_distance: float
    energy_drift: float
    reason: str
    samples: int
    record: TrajectoryRecord | None = field(default=None, repr=False)

    def to_dict(self):
        d = {k: v for k, v in self.__dict__.items() if k != "record"}
        return d


def drift_start(sys, ch):
    """``(theta_n, R_n, state0)`` for the drift orbit of channel ``ch``."""
    kp = np.array(ch.kperp, dtype=float)
    theta0 = (math.pi / 2.0) * kp / float(kp @ kp)
    if sys.chart == "action_angle":
        R0 = np.array([0.0, ch.y])
        return theta0, R0, np.concatenate([theta0, R0])
    R0 = forward_chart(sys.integrable, 2.0 * ch.y, ch.y)
    return theta0, R0, polar_map_T(theta0, R0)


def drift_experiment(sys, n, epsilon=None, cfg=None, t_max=100.0, steps_per_run=100, t_cap=math.inf):
    """Integrate the drift orbit of channel ``n`` until it leaves the strip.

    Without drift (or when the predicted exit lies beyond ``t_cap``) the run
    stops at ``min(t_max, t_cap)`` instead.
    """
    if epsilon is not None:
        sys = sys.with_epsilon(epsilon)
    cfg = cfg or IntegratorConfig()
    ch = sys.channel(n)
    if not ch.active:
        raise ValueError(f"channel {n} is not active")
    if sys.chart == "cartesian":
        w1, w2 = sys.integrable.omega
        if not w1 * w2 < 0:
            raise ValueError("the Cartesian drift needs omega1*omega2 < 0")
    theta0, R0, state0 = drift_start(sys, ch)
    kp = np.array(ch.kperp, dtype=float)
    vel = sys.epsilon * sys.weight(ch) * kp
    limit = sys.delta * (1.0 - EXIT_MARGIN)
    t_pred = (limit - R0[0]) / vel[0] if vel[0] > 0 else math.inf
    t_end = 1.5 * t_pred if math.isfinite(t_pred) and t_pred <= t_cap else min(t_max, t_cap)
    if cfg.scheme == "adaptive_rk8":
        cfg = IntegratorConfig(cfg.scheme, cfg.rel_tol, cfg.abs_tol,
                               min(cfg.max_step, t_end / 1.5 / steps_per_run), cfg.energy_alarm)
    rec = integrate(sys, state0, (0.0, t_end), cfg, channel=ch)
    A, t = rec.actions, rec.t
    diff = A - R0
    unit = kp / np.linalg.norm(kp)
    normal = np.array([-unit[1], unit[0]])
    along = diff @ unit
    transverse = np.abs(diff @ normal)
    line_dev = np.linalg.norm(A - (R0 + np.outer(t, vel)), axis=1)
    length = float(np.linalg.norm(A[-1] - R0))
    scale = length if length > 0 else 1.0
    speed_pred = float(np.linalg.norm(vel))
    if len(t) > 1 and speed_pred > 0:
        speed_fit = float(np.polyfit(t, along, 1)[0])
        speed_err = abs(speed_fit - speed_pred) / speed_pred
    else:
        speed_fit, speed_err = float(np.ptp(along) / max(np.ptp(t), 1e-300)), 0.0
    thetas = np.array([_angles(sys, s) for s in rec.states])
    ph = (thetas - theta0) @ kp
    ph = np.abs((ph + math.pi) % (2 * math.pi) - math.pi) if sys.chart == "cartesian" else np.abs(ph)
    return DriftReport(
        n=n, chart=sys.chart, epsilon=sys.epsilon, base_point=R0.tolist(), velocity=vel.tolist(),
        max_transverse_deviation=float(transverse.max()),
        relative_transverse_deviation=float(transverse.max() / scale),
        max_line_deviation=float(line_dev.max()),
        relative_line_deviation=float(line_dev.max() / scale),
        speed_fit=speed_fit, speed_predicted=speed_pred, speed_relative_error=speed_err,
        initial_distance=float(np.linalg.norm(R0)), achieved_distance=float(np.linalg.norm(A[-1])),
        escape_time=rec.exit_time, phase_drift=float(ph.max()),
        line_distance=float(np.max(np.abs(rec.d_line))), energy_drift=rec.energy_drift,
        reason=rec.reason, samples=len(t), record=rec)


def _angles(sys, s):
    if sys.chart == "action_angle":
        return np.asarray(s[:2])
    return polar_map_T_inverse(s)[0]


def instability_sweep(sys, epsilon=None, channels=None, cfg=None, t_max=100.0):
    """Drift runs over several channels: initial vs achieved distance from ``R = 0``."""
    if epsilon is not None:
        sys = sys.with_epsilon(epsilon)
    ns = channels or [c.n for c in sys.active]
    threshold = sys.delta / 2.0
    rows = []
    for n in ns:
        rep = drift_experiment(sys, n, cfg=cfg, t_max=t_max)
        rows.append({"n": n, "initial_distance": rep.initial_distance,
                     "achieved_distance": rep.achieved_distance,
                     "escape_time": rep.escape_time, "reason": rep.reason})
    ok = all(r["achieved_distance"] >= threshold for r in rows)
    return {"delta": sys.delta, "threshold": threshold, "rows": rows, "all_above_threshold": ok}


def conjugacy_check(sys, theta0, R0, t_end, cfg=None, n_samples=50):
    """Largest gap between ``T(action-angle flow)`` and the Cartesian flow of ``T(theta0, R0)``."""
    cfg = cfg or IntegratorConfig()
    aa, ca = replace(sys, chart="action_angle"), replace(sys, chart="cartesian")
    ts = np.linspace(0.0, t_end, n_samples)
    d_aa, d_ca = _Dynamics(aa), _Dynamics(ca)
    kw = dict(rtol=cfg.rel_tol, atol=cfg.abs_tol, max_step=cfg.max_step, method="DOP853", t_eval=ts)
    s1 = solve_ivp(lambda t, s: d_aa.field(s), (0.0, t_end), np.concatenate([theta0, R0]), **kw)
    s2 = solve_ivp(lambda t, s: d_ca.field(s), (0.0, t_end), polar_map_T(theta0, R0), **kw)
    if s1.status < 0 or s2.status < 0:
        raise IntegrationError("conjugacy integration failed")
    mapped = np.array([polar_map_T(s[:2], s[2:]) for s in s1.y.T])
    return float(np.max(np.abs(mapped - s2.y.T)))


# ------------------------------------------------------------------ Poincare
def _henon(dyn, s, coord, target):
    """Move ``s`` onto ``s[coord] = target`` using the coordinate as time."""
    def rhs(u, z):
        f = dyn.field(z)
        return f / f[coord]

    sol = solve_ivp(rhs, (s[coord], target), s, method="DOP853", rtol=1e-13, atol=1e-15)
    return sol.y[:, -1]


def _turn_rate(dyn, s):
    """Largest angular speed ``|d theta_i / dt|`` at ``s``."""
    f = dyn.field(s)
    if dyn.chart == "action_angle":
        return float(np.max(np.abs(f[:2])))
    rates = []
    for i in (0, 2):
        r2 = s[i] ** 2 + s[i + 1] ** 2
        if r2 > 0:
            # theta_i = atan2(-y_i, x_i)
            rates.append(abs(s[i + 1] * f[i] - s[i] * f[i + 1]) / r2)
    return max(rates, default=0.0)


def _steps(dyn, state0, t_end, cfg):
    """Generator of accepted ``(t, state)`` steps."""
    s = np.asarray(state0, float)
    if cfg.scheme == "implicit_midpoint":
        t = 0.0
        while t < t_end:
            s = _midpoint_step(dyn.field, s, cfg.max_step)
            t += cfg.max_step
            yield t, s
        return
    # a step may not skip a whole oscillation of a Cartesian section coordinate
    rate = _turn_rate(dyn, s)
    cap = 2 * math.pi / (POINCARE_STEPS_PER_TURN * rate) if rate > 0 else math.inf
    solver = DOP853(lambda t, z: dyn.field(z), 0.0, s, t_end, rtol=cfg.rel_tol, atol=cfg.abs_tol,
                    max_step=min(cfg.max_step, cap))
    while solver.status == "running":
        msg = solver.step()
        if solver.status == "failed":
            raise IntegrationError(f"poincare integration failed: {msg}")
        yield solver.t, solver.y.copy()


def poincare_section(sys, section, seeds, cfg=None, n_crossings=200, t_max=1e4):
    """Crossings of ``state[coordinate] = value`` refined by the Henon trick.

    Angle coordinates of the action-angle chart are read modulo ``2*pi`` and
    crossed in either direction; other coordinates count upward crossings.
    Returns ``{"points": [[seed, u, v], ...], "note": ...}``.
    """
    cfg = cfg or IntegratorConfig()
    dyn = _Dynamics(sys)
    c, value = int(section["coordinate"]), float(section["value"])
    iu, iv = int(section.get("u", 1)), int(section.get("v", 3))
    periodic = sys.chart == "action_angle" and c < 2
    points = []
    for si, seed in enumerate(seeds):
        prev = np.asarray(seed, float)
        count = 0
        for t, s in _steps(dyn, seed, t_max, cfg):
            if math.isfinite(dyn.limit) and dyn.exit_value(s) >= 0:
                break
            if periodic:
                # angles may wind either way and a step may pass several sheets
                j0 = math.floor((prev[c] - value) / (2 * math.pi))
                j1 = math.floor((s[c] - value) / (2 * math.pi))
                sheets = range(j0 + 1, j1 + 1) if j1 > j0 else range(j0, j1, -1)
                targets = [value + 2 * math.pi * j for j in sheets]
            else:
                targets = [value] if prev[c] < value <= s[c] else []
            for target in targets:
                z = _henon(dyn, prev, c, target)
                u, v = z[iu], z[iv]
                if periodic and iu < 2:
                    u = (u + math.pi) % (2 * math.pi) - math.pi
                points.append([si, float(u), float(v)])
                count += 1
                if count >= n_crossings:
                    break
            if count >= n_crossings:
                break
            prev = s
    note = "" if points else "no crossings within the horizon"
    return {"section": {"coordinate": c, "value": value, "u": iu, "v": iv},
            "points": points, "note": note}


# ------------------------------------------------------------------ order checks
def _pendulum(s):
    return np.array([s[1], -math.sin(s[0])])


def convergence_order(scheme, steps=(0.4, 0.2, 0.1), t_end=10.0):
    """Observed order on the pendulum ``q'' = -sin q`` at fixed steps (slope of log error vs log step)."""
    s0 = np.array([1.0, 0.0])
    ref = solve_ivp(lambda t, s: _pendulum(s), (0, t_end), s0, method="DOP853",
                    rtol=3e-14, atol=1e-16).y[:, -1]
    errs = []
    for h in steps:
        if scheme == "adaptive_rk8":
            # huge tolerances accept every step, so the step stays at h
            sol = solve_ivp(lambda t, s: _pendulum(s), (0, t_end), s0, method="DOP853",
                            first_step=h, max_step=h, rtol=1e3, atol=1e3)
            end = sol.y[:, -1]
        else:
            end = s0
            for _ in range(int(round(t_end / h))):
                end = _midpoint_step(_pendulum, end, h)
        errs.append(np.max(np.abs(end - ref)))
    slope = np.polyfit(np.log(steps), np.log(errs), 1)[0]
    return float(slope), [float(e) for e in errs]
