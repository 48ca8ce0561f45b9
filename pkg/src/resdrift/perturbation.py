"""The perturbed Hamiltonians in action-angle and Cartesian coordinates.

Action-angle: ``H = h(R) + eps * sum_n eps_n w_n a_n(R) b_n(R1) cos(theta . k_n_perp)``
with ``w_n = d_n`` and the cutoff ``b_n`` only in the cutoff variant.  The
Cartesian Hamiltonian is its pull-back under the symplectic polar map

    T(theta, R) = (sqrt(2 R1) cos th1, -sqrt(2 R1) sin th1,
                   sqrt(2 R2) cos th2, -sqrt(2 R2) sin th2),

so ``(cos th_i, sin th_i) = (x_i, -y_i) / |z_i|``.  The sign on the ``y``
components makes ``T`` symplectic for ``x' = dH/dy, y' = -dH/dx``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DomainError
from .gevrey import (bump_a_n, bump_b_n, damping_c_h, damping_c_n, profile_a_d1,
                     profile_b_d1)
from .integrable import build_integrable
from .resonances import find_resonances, separate_channels

UNDERFLOW_FLOOR = 1e-300
CHARTS = ("action_angle", "cartesian")


@dataclass(frozen=True)
class PerturbedSystem:
    """Immutable assembly of ``h``, the resonance channels and the perturbation."""

    chart: str
    integrable: object
    channels: tuple
    epsilon: float
    sigma: float
    use_cutoff: bool
    c_h: float = 1.0
    pruned: tuple = ()
    delta_before: float = float("nan")
    active: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.chart not in CHARTS:
            raise ValueError(f"chart must be one of {CHARTS}")
        act = tuple(c for c in self.channels if c.active and c.eps > UNDERFLOW_FLOOR)
        object.__setattr__(self, "active", act)

    @property
    def truncation(self):
        return len(self.active)

    @property
    def delta(self):
        return self.integrable.delta

    def channel(self, n):
        for c in self.channels:
            if c.n == n:
                return c
        raise KeyError(f"no channel {n}")

    def with_epsilon(self, epsilon):
        return replace(self, epsilon=float(epsilon))

    def weight(self, ch):
        """``eps_n`` times the damping ``d_n`` when the cutoff is on."""
        return ch.eps * ch.d if self.use_cutoff else ch.eps


def assemble_system(path, sigma=1.0, epsilon=1.0, chart="action_angle", cutoff=False,
                    n_channels=3, y_start=0.25, min_delta_fraction=0.2):
    """Build ``h``, search and separate the channels, and attach the damping constants."""
    model = build_integrable(path)
    found = find_resonances(path, n_channels, sigma, y_start)
    sep = separate_channels(found, model, min_delta_fraction, cutoff)
    channels, c_h = sep.channels, 1.0
    if cutoff:
        c_h = damping_c_h(sigma / 2.0)
        channels = []
        for ch in sep.channels:
            c_n = damping_c_n(ch.kperp)
            channels.append(replace(ch, c_n=c_n, d=ch.y / (c_h * c_n)))
    return PerturbedSystem(chart=chart, integrable=sep.model, channels=tuple(channels),
                           epsilon=float(epsilon), sigma=float(sigma), use_cutoff=bool(cutoff),
                           c_h=c_h, pruned=tuple(sep.pruned), delta_before=sep.delta_before)


# ----------------------------------------------------------------- channel terms
def _slab_u(ch, R):
    return ch.signed_distance(R) / ch.r


def locate_channel(sys, R):
    """The active channel whose bump support contains ``R`` (``None`` if there is none)."""
    for ch in sys.active:
        if abs(_slab_u(ch, R)) < 0.5:
            return ch
    return None


def _term(sys, ch, R):
    """``(w A B, d(w A B)/dR)`` for one channel, or ``None`` off its support."""
    u = _slab_u(ch, R)
    if not abs(u) < 0.5:
        return None
    a, da = profile_a_d1(ch.gamma, u)
    if sys.use_cutoff:
        b, db = profile_b_d1(ch.gamma, (R[0] - ch.y) / ch.y)
        if b == 0.0:
            return None
        db /= ch.y
    else:
        b, db = 1.0, 0.0
    w = sys.weight(ch)
    da /= ch.r
    grad = (w * (da * ch.normal[0] * b + a * db), w * da * ch.normal[1] * b)
    return w * a * b, grad


def _phase(k, theta):
    return k[0] * theta[0] + k[1] * theta[1]


def eval_f(sys, theta, R):
    """Perturbation ``f`` (or ``F`` with the cutoff) at ``(theta, R)``; zero off the slabs."""
    ch = locate_channel(sys, R)
    if ch is None:
        return 0.0
    t = _term(sys, ch, R)
    if t is None:
        return 0.0
    return t[0] * math.cos(_phase(ch.kperp, theta))


def eval_f_series(sys, theta, R):
    """Naive sum over every active channel (reference for the slab lookup)."""
    total = 0.0
    for ch in sys.active:
        u = _slab_u(ch, R)
        a = bump_a_n(ch, R)
        b = bump_b_n(ch, R[0]) if sys.use_cutoff else 1.0
        if abs(u) < 0.5:
            total += sys.weight(ch) * a * b * math.cos(_phase(ch.kperp, theta))
    return total


def eval_action_angle(sys, theta, R, strict=True):
    """``H(theta, R) = h(R) + eps f(theta, R)``."""
    h, _ = sys.integrable.h_and_grad(R, strict)
    return h + sys.epsilon * eval_f(sys, theta, R)


def vector_field_action_angle(sys, theta, R, strict=True):
    """Hamiltonian field ``(dH/dR, -dH/dtheta)`` as a length-4 array."""
    _, (g1, g2) = sys.integrable.h_and_grad(R, strict)
    out = np.array([g1, g2, 0.0, 0.0])
    if sys.epsilon == 0.0:
        return out
    ch = locate_channel(sys, R)
    if ch is None:
        return out
    t = _term(sys, ch, R)
    if t is None:
        return out
    val, (d1, d2) = t
    kp = ch.kperp
    ph = _phase(kp, theta)
    c, s = math.cos(ph), math.sin(ph)
    e = sys.epsilon
    out[0] += e * c * d1
    out[1] += e * c * d2
    out[2] = e * val * s * kp[0]
    out[3] = e * val * s * kp[1]
    return out


# ------------------------------------------------------------------ polar map
def polar_map_T(theta, R):
    """Symplectic polar coordinates ``(theta, R) -> (x1, y1, x2, y2)``."""
    if not (R[0] > 0.0 and R[1] > 0.0):
        raise DomainError(f"polar map needs positive actions, got {tuple(R)!r}")
    r1, r2 = math.sqrt(2.0 * R[0]), math.sqrt(2.0 * R[1])
    return np.array([r1 * math.cos(theta[0]), -r1 * math.sin(theta[0]),
                     r2 * math.cos(theta[1]), -r2 * math.sin(theta[1])])


def polar_map_T_inverse(z):
    """``(theta, R)`` with ``R = I(z)`` and angles in ``(-pi, pi]``."""
    x1, y1, x2, y2 = z
    if (x1 == 0.0 and y1 == 0.0) or (x2 == 0.0 and y2 == 0.0):
        raise DomainError("polar map inverse is undefined on the coordinate axes")
    theta = np.array([math.atan2(-y1, x1), math.atan2(-y2, x2)])
    return theta, actions(z)


def actions(z):
    """``I_i = (x_i^2 + y_i^2) / 2``."""
    return np.array([(z[0] ** 2 + z[1] ** 2) / 2.0, (z[2] ** 2 + z[3] ** 2) / 2.0])


def _unit_power(x, y, r, m):
    """``((x - i y)/r)^m`` by repeated angle addition; ``m`` may be negative."""
    base = complex(x / r, -y / r)
    if m < 0:
        base, m = base.conjugate(), -m
    out = complex(1.0, 0.0)
    while m:
        if m & 1:
            out *= base
        base *= base
        m >>= 1
    return out


def circle_phase(z, kperp):
    """``(cos, sin)`` of ``theta . k_perp`` from the unit-circle components of ``z``.

    No trigonometric function of an angle is evaluated; this is the
    polynomial ``p_n`` of the Cartesian perturbation.
    """
    x1, y1, x2, y2 = z
    w = complex(1.0, 0.0)
    if kperp[0]:
        w *= _unit_power(x1, y1, math.hypot(x1, y1), kperp[0])
    if kperp[1]:
        w *= _unit_power(x2, y2, math.hypot(x2, y2), kperp[1])
    return w.real, w.imag


def _cart_term(sys, z, R):
    ch = locate_channel(sys, R)
    if ch is None:
        return None
    kp = ch.kperp
    r1 = math.hypot(z[0], z[1])
    r2 = math.hypot(z[2], z[3])
    if (kp[0] and r1 == 0.0) or (kp[1] and r2 == 0.0):
        return None  # zero extension on the axes
    t = _term(sys, ch, R)
    if t is None:
        return None
    return ch, t, circle_phase(z, kp), r1, r2


def eval_cartesian(sys, z, strict=False):
    """``h(I(z)) + eps * f(z)`` with the angles read off the unit-circle components."""
    R = actions(z)
    h, _ = sys.integrable.h_and_grad(R, strict)
    if sys.epsilon == 0.0:
        return h
    got = _cart_term(sys, z, R)
    if got is None:
        return h
    _, (val, _), (c, _), _, _ = got
    return h + sys.epsilon * val * c


def cartesian_gradient(sys, z, strict=False):
    """Analytic ``dH/d(x1, y1, x2, y2)``."""
    R = actions(z)
    _, (g1, g2) = sys.integrable.h_and_grad(R, strict)
    dR = [g1, g2]
    dphase = 0.0
    got = _cart_term(sys, z, R) if sys.epsilon != 0.0 else None
    if got is not None:
        ch, (val, (d1, d2)), (c, s), r1, r2 = got
        e = sys.epsilon
        dR[0] += e * c * d1
        dR[1] += e * c * d2
        dphase = -e * val * s
        m1, m2 = ch.kperp
    x1, y1, x2, y2 = z
    grad = np.array([dR[0] * x1, dR[0] * y1, dR[1] * x2, dR[1] * y2])
    if dphase:
        # d theta_i = (y_i dx_i - x_i dy_i) / r_i^2
        if m1:
            q = dphase * m1 / (r1 * r1)
            grad[0] += q * y1
            grad[1] -= q * x1
        if m2:
            q = dphase * m2 / (r2 * r2)
            grad[2] += q * y2
            grad[3] -= q * x2
    return grad


def vector_field_cartesian(sys, z, strict=False):
    """``x_i' = dH/dy_i``, ``y_i' = -dH/dx_i``."""
    g = cartesian_gradient(sys, z, strict)
    return np.array([g[1], -g[0], g[3], -g[2]])


# ------------------------------------------------------------------ flatness
def flatness_report(sys, max_m=8, samples=41):
    """Per channel: sup of ``|f|`` over a slab cross-section and ``eps_n / y_n^m``."""
    rows = []
    for ch in sys.channels:
        sup = 0.0
        base = _line_at_x(sys, ch, 2.0 * ch.y if sys.use_cutoff else 0.0)
        for u in np.linspace(-0.5, 0.5, samples):
            R = base + u * ch.r * np.array(ch.normal)
            sup = max(sup, abs(sys.weight(ch) * bump_a_n(ch, R)
                               * (bump_b_n(ch, R[0]) if sys.use_cutoff else 1.0)))
        rows.append({"n": ch.n, "y": ch.y, "active": ch.active, "sup_f": sup,
                     "ratios": [ch.eps / ch.y ** m for m in range(1, max_m + 1)]})
    return rows


def _line_at_x(sys, ch, x):
    """Point of the channel line with first coordinate ``x``."""
    v1, v2 = sys.integrable.path.value(ch.y)
    return np.array([x, ch.y - x * v1 / v2])
