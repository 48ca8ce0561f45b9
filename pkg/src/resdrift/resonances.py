"""Resonance channels: heights ``y_n`` where ``v(y_n)`` has rational direction.

For each channel the line ``Lambda_{y_n}`` carries an exact drifting orbit once
the perturbation is switched on.  Channels are searched in dyadic intervals
``[u/2, u]`` with ``u`` halving from one channel to the next, which gives
``2*y_{n+1} <= y_n`` by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq

from .errors import ConstructionError, SearchError
from .path import slope_functions

ANGLE_TOL = 1e-12
RESIDUAL_TOL = 1e-12


def perp(k):
    """``k_perp = (-k2, k1)``."""
    return (-k[1], k[0])


@dataclass(frozen=True)
class ResonanceChannel:
    """One resonance datum.

    ``k`` is oriented so that the first coordinate of ``k_perp`` is
    non-negative; ``normal`` is the unit vector along ``v(y)`` and
    ``direction`` the unit vector along ``v_perp(y)``.
    """

    n: int
    y: float
    k: tuple
    eps: float
    sigma: float
    normal: tuple
    direction: tuple
    d: float = 1.0
    active: bool = True
    c_n: float = 1.0

    @property
    def r(self):
        """Half-width of the channel slab."""
        return self.y / 4.0

    @property
    def gamma(self):
        """Exponent of the bump profiles for this channel."""
        return self.sigma / 2.0

    @property
    def kperp(self):
        return perp(self.k)

    @property
    def line_point(self):
        return (0.0, self.y)

    def signed_distance(self, R):
        return R[0] * self.normal[0] + (R[1] - self.y) * self.normal[1]

    def to_dict(self):
        return {
            "n": self.n,
            "y": self.y,
            "k": list(self.k),
            "k_perp": list(self.kperp),
            "eps": self.eps,
            "r": self.r,
            "d": self.d,
            "c_n": self.c_n,
            "active": self.active,
            "normal": list(self.normal),
            "direction": list(self.direction),
        }


def _boundary_points(n):
    """The ``8n`` integer vectors with max-norm ``n``."""
    pts = [(n, j) for j in range(-n, n)]
    pts += [(-j, n) for j in range(-n, n)]
    pts += [(-n, -j) for j in range(-n, n)]
    pts += [(j, -n) for j in range(-n, n)]
    return pts


def directional_lattice_vector(angle_interval, n):
    """Integer ``k`` with ``|k|_max = n`` whose direction angle lies in ``angle_interval``.

    The ``8n`` boundary points are searched directly and the candidate closest
    to the middle of the interval is returned.  An interval longer than ``1/n``
    always contains one; a shorter interval is accepted only if it happens to.
    """
    a, b = angle_interval
    length = b - a
    if n < 1:
        raise ValueError("n must be a positive integer")
    if length >= 2 * math.pi:
        return (n, 0)
    best, best_dist = None, math.inf
    for k in _boundary_points(n):
        offset = (math.atan2(k[1], k[0]) - a) % (2 * math.pi)
        if 0.0 < offset < length:
            dist = abs(offset - length / 2)
            if dist < best_dist:
                best, best_dist = k, dist
    if best is None:
        raise ValueError(f"no direction of norm {n} in {angle_interval!r}: "
                         f"length {length!r} does not exceed 1/n = {1.0 / n!r}")
    return best


def claim_gap_check(n):
    """Largest angular gap between consecutive directions of ``{k : |k|_max = n}``."""
    angles = sorted(math.atan2(k[1], k[0]) for k in _boundary_points(n))
    gaps = [b - a for a, b in zip(angles, angles[1:])]
    gaps.append(angles[0] + 2 * math.pi - angles[-1])
    gap = max(gaps)
    expected = math.asin(1.0 / math.sqrt(n * n + 1))
    assert abs(gap - expected) < 1e-12 and gap < 1.0 / n, (n, gap, expected)
    return gap


def _line_angle(path, t):
    """Direction of ``v(t)`` as a line, in ``[0, pi)``."""
    v1, v2 = path.value(t)
    return math.atan2(v2, v1) % math.pi


def _orient(k):
    k1, k2 = k
    g = math.gcd(k1, k2)
    k1, k2 = k1 // g, k2 // g
    if k2 > 0 or (k2 == 0 and k1 < 0):
        k1, k2 = -k1, -k2
    return (k1, k2)


def _collinearity_residual(path, y, k):
    v1, v2 = path.value(y)
    return abs(k[0] * v2 - k[1] * v1) / (math.hypot(v1, v2) * math.hypot(*k))


def _solve_height(path, k, lo, hi):
    """Root of ``k1*v2(y) - k2*v1(y)`` in ``[lo, hi]`` (bracketed bisection, Newton polish)."""
    def F(y):
        v1, v2 = path.value(y)
        return k[0] * v2 - k[1] * v1

    pad = 1e-9 * (hi - lo)
    a, b = lo - pad, hi + pad
    fa, fb = F(a), F(b)
    if fa == 0.0:
        y = a
    elif fb == 0.0:
        y = b
    elif fa * fb > 0:
        raise SearchError(f"collinearity root for k={k} not bracketed in [{lo}, {hi}]")
    else:
        y = brentq(F, a, b, xtol=1e-16, rtol=4 * np.finfo(float).eps, maxiter=200)
    for _ in range(3):
        v1, v2, d1, d2 = path.value_d1(y)
        dF = k[0] * d2 - k[1] * d1
        if dF == 0.0:
            break
        step = F(y) / dF
        y -= step
        if abs(step) < 1e-17:
            break
    return min(max(y, lo), hi)


def _channel(path, n, y, k, sigma):
    v1, v2 = path.value(y)
    nv = math.hypot(v1, v2)
    rho = 1.0 / sigma
    eps = math.exp(-1.0 / y ** rho)
    return ResonanceChannel(n=n, y=y, k=k, eps=eps, sigma=sigma,
                            normal=(v1 / nv, v2 / nv), direction=(-v2 / nv, v1 / nv))


def find_resonances(path, count, sigma, y_start=0.25):
    """Resonance channels ``1..count`` of ``path``.

    Channel ``n`` is searched in ``[u_n/2, u_n]`` where ``u_1 = y_start`` and
    ``u_{n+1} = y_n/2``: the smallest max-norm ``m`` admitting a lattice
    direction inside the angle image of the interval is used, and ``y_n`` solves
    ``v(y_n) || k_n``.  Ties go to the largest height.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if not 0.0 < y_start < path.J[1]:
        raise SearchError(f"y_start={y_start!r} must lie in (0, {path.J[1]})")
    if abs(slope_functions(path, 0.0)[3]) <= 1e-12:
        raise SearchError("psi'(0) vanishes: the direction of v does not turn at 0")
    channels = []
    upper = y_start
    for n in range(1, count + 1):
        lo, hi = upper / 2.0, upper
        samples = np.linspace(lo, hi, 33)
        dpsi = np.array([slope_functions(path, t)[3] for t in samples])
        if np.any(np.abs(dpsi) <= 1e-12) or not np.all(np.sign(dpsi) == np.sign(dpsi[0])):
            raise SearchError(f"psi' vanishes on [{lo}, {hi}]")
        a = _line_angle(path, lo)
        span = (_line_angle(path, hi) - a + math.pi / 2) % math.pi - math.pi / 2
        if span < 0:
            a, span = a + span, -span
        if span <= 0:
            raise SearchError(f"direction of v is constant on [{lo}, {hi}]")
        m_cap = int(math.floor(1.0 / span)) + 2
        found = None
        for m in range(1, m_cap + 1):
            cands = []
            for k in _boundary_points(m):
                if k[1] > 0 or (k[1] == 0 and k[0] < 0):
                    continue
                off = (math.atan2(k[1], k[0]) - a) % math.pi
                if off > math.pi - ANGLE_TOL:
                    off -= math.pi
                if -ANGLE_TOL <= off <= span + ANGLE_TOL:
                    cands.append(k)
            if cands:
                roots = [(_solve_height(path, k, lo, hi), k) for k in cands]
                y, k = max(roots)
                found = (y, _orient(k))
                break
        if found is None:
            raise SearchError(f"no lattice direction found for channel {n} up to norm {m_cap}")
        y, k = found
        res = _collinearity_residual(path, y, k)
        if res >= RESIDUAL_TOL:
            raise SearchError(f"collinearity residual {res:.3e} for channel {n}")
        channels.append(_channel(path, n, y, k, sigma))
        upper = y / 2.0
    return channels


def lattice_constant(channels):
    """Smallest ``C`` with ``|k_n|_max <= C / y_n`` for every channel."""
    return max(max(abs(c.k[0]), abs(c.k[1])) * c.y for c in channels)


def _y_band(channel):
    """Slab as ``Y in c + s*x +- w`` over the strip."""
    u1, u2 = channel.normal
    return channel.y, -u1 / u2, channel.r / abs(u2)


def overlap_interval(ch_a, ch_b):
    """Open interval of ``x`` where the two slabs intersect (``None`` if never)."""
    ca, sa, wa = _y_band(ch_a)
    cb, sb, wb = _y_band(ch_b)
    dc, ds, W = ca - cb, sa - sb, wa + wb
    if ds == 0.0:
        return (-math.inf, math.inf) if abs(dc) < W else None
    p, q = sorted(((-W - dc) / ds, (W - dc) / ds))
    return (p, q)


def _pair_bound(ch_a, ch_b):
    """Largest strip half-width keeping the two slabs apart (0 if impossible)."""
    iv = overlap_interval(ch_a, ch_b)
    if iv is None:
        return math.inf
    p, q = iv
    if p < 0.0 < q or (p <= 0.0 and q >= 0.0):
        return 0.0
    return p if p >= 0.0 else -q


@dataclass
class SeparationResult:
    model: object
    channels: list
    delta_before: float
    pruned: list = field(default_factory=list)


def separate_channels(channels, model, min_delta_fraction=0.2, cutoff=False, start_room=0.02):
    """Shrink the strip and prune channels until the active slabs are disjoint.

    A channel is pruned when keeping it would push the strip half-width below
    ``min_delta_fraction`` of the original one, or (with ``cutoff``) when its
    start point ``x = 2*y_n`` would not fit inside the strip with relative room
    ``start_room``.
    """
    delta0 = model.delta
    delta = delta0
    floor = min_delta_fraction * delta0
    active, out, pruned = [], [], []
    for ch in channels:
        bound = min((_pair_bound(ch, other) for other in active), default=math.inf)
        new_delta = min(delta, bound * (1.0 - 1e-12))
        ok = new_delta >= floor
        if ok and cutoff:
            need = 2.0 * max([c.y for c in active] + [ch.y]) * (1.0 + start_room)
            ok = new_delta > need
        if ok:
            delta = new_delta
            active.append(ch)
            out.append(replace(ch, active=True))
        else:
            pruned.append(ch.n)
            out.append(replace(ch, active=False))
    if not active:
        raise ConstructionError("every resonance channel was pruned")
    return SeparationResult(model=model.with_delta(delta) if delta < delta0 else model,
                            channels=out, delta_before=delta0, pruned=pruned)


def slabs_disjoint(channels, delta):
    """Check on slab projections that active slabs do not meet inside the strip."""
    act = [c for c in channels if c.active]
    for i, a in enumerate(act):
        for b in act[i + 1:]:
            iv = overlap_interval(a, b)
            if iv is None:
                continue
            p, q = iv
            if q > -delta and p < delta:
                return False
    return True
