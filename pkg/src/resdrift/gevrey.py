"""Bump profiles, truncated Taylor jets and finite-order Gevrey certificates.

Derivative evidence comes from jet arithmetic only.  Jets hold Taylor
coefficients ``f_alpha = d^alpha f / alpha!`` up to a total order ``K <= 12``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product as _iproduct

import numpy as np
from scipy.signal import convolve

from .errors import CapabilityError

MAX_JET_ORDER = 12
#: Distance kept from the support endpoints of the profiles when sampling.
BOUNDARY_MARGIN = 1e-3


# --------------------------------------------------------------------------- jets
class Jet:
    """Truncated multivariate Taylor expansion around ``center``."""

    __slots__ = ("coeffs", "order", "center")

    def __init__(self, coeffs, order, center):
        if order > MAX_JET_ORDER:
            raise CapabilityError(f"jet order {order} exceeds {MAX_JET_ORDER}")
        self.coeffs = np.asarray(coeffs, dtype=float)
        self.order = order
        self.center = center

    @property
    def nvars(self):
        return self.coeffs.ndim

    @classmethod
    def variable(cls, center, order, index=0, nvars=None):
        """Jet of the coordinate ``index`` at ``center`` (scalar or tuple)."""
        center_t = tuple(np.atleast_1d(np.asarray(center, dtype=float)))
        nvars = nvars or len(center_t)
        c = np.zeros((order + 1,) * nvars)
        c[(0,) * nvars] = center_t[index]
        if order >= 1:
            e = [0] * nvars
            e[index] = 1
            c[tuple(e)] = 1.0
        return cls(c, order, center_t if nvars > 1 else center_t[0])

    @classmethod
    def variables(cls, center, order):
        return [cls.variable(center, order, i) for i in range(len(center))]

    def _mask(self, c):
        if c.ndim > 1:
            idx = np.indices(c.shape).sum(axis=0)
            c = np.where(idx <= self.order, c, 0.0)
        return c

    def _like(self, c):
        return Jet(self._mask(c), self.order, self.center)

    def const(self, value):
        c = np.zeros_like(self.coeffs)
        c[(0,) * self.nvars] = value
        return Jet(c, self.order, self.center)

    @property
    def value(self):
        return float(self.coeffs[(0,) * self.nvars])

    # arithmetic
    def __add__(self, other):
        if isinstance(other, Jet):
            return Jet(self.coeffs + other.coeffs, self.order, self.center)
        return self + self.const(other)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.coeffs, self.order, self.center)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.coeffs * other, self.order, self.center)
        sl = (slice(0, self.order + 1),) * self.nvars
        return self._like(convolve(self.coeffs, other.coeffs, method="direct")[sl])

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.coeffs / other, self.order, self.center)
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, p):
        a0 = self.value
        return self._series([_falling(p, j) / math.factorial(j) * a0 ** (p - j)
                             for j in range(self.order + 1)])

    def _series(self, taylor):
        """``sum_j taylor[j] * (self - self.value)**j`` by Horner."""
        nil = self - self.value
        out = self.const(taylor[-1])
        for c in reversed(taylor[:-1]):
            out = out * nil + c
        return out

    def reciprocal(self):
        a0 = self.value
        return self._series([(-1) ** j / a0 ** (j + 1) for j in range(self.order + 1)])

    def exp(self):
        e0 = math.exp(self.value)
        return self._series([e0 / math.factorial(j) for j in range(self.order + 1)])

    def sqrt(self):
        return self ** 0.5

    def compose(self, outer):
        """``outer o self`` where ``outer`` is a univariate jet centred at ``self.value``."""
        if outer.nvars != 1 or abs(outer.center - self.value) > 1e-14 * max(1.0, abs(self.value)):
            raise ValueError("outer jet must be univariate and centred at the inner value")
        if outer.order < self.order:
            raise CapabilityError("outer jet order is lower than the inner one")
        return self._series(list(outer.coeffs[: self.order + 1]))

    def derivative(self, alpha):
        """``d^alpha f(center)`` recovered from the Taylor coefficient."""
        alpha = tuple(np.atleast_1d(alpha))
        return float(self.coeffs[alpha]) * math.prod(math.factorial(a) for a in alpha)

    def multi_indices(self, max_order=None):
        K = self.order if max_order is None else max_order
        return [a for a in _iproduct(range(K + 1), repeat=self.nvars) if sum(a) <= K]


def _falling(p, j):
    out = 1.0
    for i in range(j):
        out *= p - i
    return out


# ------------------------------------------------------------------ scalar profiles
def profile_a(gamma, u):
    """Bump on ``(-1/2, 1/2)`` normalised to ``1`` at ``u = 0``."""
    if abs(u) >= 0.5:
        return 0.0
    q = 0.25 - u * u
    return math.exp(2.0 ** gamma - q ** (-gamma / 2.0))


def profile_a_d1(gamma, u):
    """``(a(u), a'(u))``."""
    if abs(u) >= 0.5:
        return 0.0, 0.0
    q = 0.25 - u * u
    a = math.exp(2.0 ** gamma - q ** (-gamma / 2.0))
    return a, -gamma * u * a * q ** (-gamma / 2.0 - 1.0)


def _logistic_parts(D):
    """``(1/(1+e^D), e^D/(1+e^D)^2)`` without overflow."""
    if D > 0:
        e = math.exp(-D)
        return e / (1.0 + e), e / (1.0 + e) ** 2
    e = math.exp(D)
    return 1.0 / (1.0 + e), e / (1.0 + e) ** 2


def _step_exponent(gamma, u):
    # u^-g - (1-u)^-g; None once a power overflows (b is then 0 or 1 to the last bit)
    try:
        return u ** -gamma - (1.0 - u) ** -gamma
    except OverflowError:
        return None


def profile_b(gamma, u):
    """Smooth step: ``0`` for ``u <= 0``, ``1`` for ``u >= 1``."""
    if u <= 0.0:
        return 0.0
    if u >= 1.0:
        return 1.0
    D = _step_exponent(gamma, u)
    if D is None:
        return 0.0 if u < 0.5 else 1.0
    return _logistic_parts(D)[0]


def profile_b_d1(gamma, u):
    if u <= 0.0:
        return 0.0, 0.0
    if u >= 1.0:
        return 1.0, 0.0
    D = _step_exponent(gamma, u)
    if D is None:
        return (0.0 if u < 0.5 else 1.0), 0.0
    b, bb = _logistic_parts(D)
    if bb == 0.0:
        return b, 0.0
    return b, bb * gamma * (u ** (-gamma - 1.0) + (1.0 - u) ** (-gamma - 1.0))


# -------------------------------------------------------------------- jet profiles
def profile_a_jet(gamma, u):
    """Jet of ``profile_a`` composed with the jet ``u`` (inside the support)."""
    if not abs(u.value) < 0.5:
        return u.const(0.0)
    q = 0.25 - u * u
    return (2.0 ** gamma - q ** (-gamma / 2.0)).exp()


def profile_b_jet(gamma, u):
    if u.value <= 0.0:
        return u.const(0.0)
    if u.value >= 1.0:
        return u.const(1.0)
    D = u ** -gamma - (1.0 - u) ** -gamma
    if D.value > 0:
        e = (-D).exp()
        return e / (1.0 + e)
    return 1.0 / (1.0 + D.exp())


# ------------------------------------------------------------------ channel bumps
def bump_a_n(channel, R):
    """``profile_a(sigma/2, d/r_n)`` with ``d`` the signed distance of ``R`` to the channel line."""
    return profile_a(channel.gamma, channel.signed_distance(R) / channel.r)


def bump_b_n(channel, R1):
    """Cutoff in the first action: ``0`` below ``y_n``, ``1`` above ``2*y_n``."""
    return profile_b(channel.gamma, (R1 - channel.y) / channel.y)


def jet_of(function_tag, center, order, gamma=1.0):
    """Jet of a named function at ``center``.

    Tags: ``"exp"``, ``"geometric"`` (``1/(1-u)``), ``"profile_a"``,
    ``"profile_b"``, ``"circle_cos"`` and ``"circle_sin"`` (the bivariate
    ``x/|z|`` and ``-y/|z|``).
    """
    if order > MAX_JET_ORDER:
        raise CapabilityError(f"jet order {order} exceeds {MAX_JET_ORDER}")
    if function_tag == "exp":
        return Jet.variable(center, order).exp()
    if function_tag == "geometric":
        return 1.0 / (1.0 - Jet.variable(center, order))
    if function_tag == "profile_a":
        return profile_a_jet(gamma, Jet.variable(center, order))
    if function_tag == "profile_b":
        return profile_b_jet(gamma, Jet.variable(center, order))
    if function_tag in ("circle_cos", "circle_sin"):
        x, y = Jet.variables(center, order)
        inv_r = (x * x + y * y) ** -0.5
        return x * inv_r if function_tag == "circle_cos" else -y * inv_r
    raise ValueError(f"unknown function tag {function_tag!r}")


# ------------------------------------------------------------------- Gevrey fits
@dataclass(frozen=True)
class GevreyFit:
    """Constants with ``sup |d^alpha f| <= c * rho**|alpha| * (alpha!)**s`` on the samples."""

    s: float
    c: float
    rho: float
    orders_checked: int
    max_violation: float

    def bound(self, alpha):
        alpha = tuple(np.atleast_1d(alpha))
        fact = math.prod(math.factorial(a) for a in alpha)
        return self.c * self.rho ** sum(alpha) * fact ** self.s

    def to_dict(self):
        return {"s": self.s, "c": self.c, "rho": self.rho,
                "orders_checked": self.orders_checked, "max_violation": self.max_violation}


def derivative_sups(jets, max_order=None):
    """``{alpha: sup_samples |d^alpha f|}`` over a list of jets."""
    if not jets:
        raise ValueError("empty sample grid")
    idx = jets[0].multi_indices(max_order)
    return {a: max(abs(j.derivative(a)) for j in jets) for a in idx}


def _log_fact(alpha):
    return sum(math.lgamma(a + 1) for a in alpha)


def violation(sups, c, rho, s):
    """``max_alpha log(sup / bound)``; non-positive means the bound holds."""
    worst = -math.inf
    for a, m in sups.items():
        if m == 0.0:
            continue
        lb = math.log(c) + sum(a) * math.log(rho) + s * _log_fact(a)
        worst = max(worst, math.log(m) - lb)
    return worst


def fit_gevrey(jets, s, max_order=None):
    """Fit ``(c, rho)``: ``c`` is the sample sup norm, ``rho`` the smallest admissible rate."""
    sups = derivative_sups(jets, max_order)
    K = max(sum(a) for a in sups)
    c = max(sups[(0,) * jets[0].nvars], 1e-300)
    log_rho = -math.inf
    for a, m in sups.items():
        n = sum(a)
        if n == 0 or m == 0.0:
            continue
        log_rho = max(log_rho, (math.log(m) - math.log(c) - s * _log_fact(a)) / n)
    rho = math.exp(log_rho) * (1 + 1e-12) if math.isfinite(log_rho) else 1e-300
    return GevreyFit(s=s, c=c, rho=rho, orders_checked=K, max_violation=violation(sups, c, rho, s))


def sample_jets(function_tag, centers, order, gamma=1.0):
    return [jet_of(function_tag, c, order, gamma) for c in centers]


def check_product(jets_f, jets_g, s, max_order=None):
    """Product bound ``c_f c_g (6 max(rho_f, rho_g))^|alpha| (alpha!)^s`` for ``f*g``."""
    ff = fit_gevrey(jets_f, s, max_order)
    fg = fit_gevrey(jets_g, s, max_order)
    sups = derivative_sups([a * b for a, b in zip(jets_f, jets_g)], max_order)
    v = violation(sups, ff.c * fg.c, 6.0 * max(ff.rho, fg.rho), s)
    return {"f": ff.to_dict(), "g": fg.to_dict(), "max_violation": v}


def check_composition(jets_inner, outer_profile, s, gamma, max_order=None):
    """Composition bound ``c_f c_g rho_f (rho_g (1 + rho_f c_g))^|alpha| (alpha!)^s``.

    ``outer_profile`` maps a jet to a jet (e.g. :func:`profile_b_jet`); the outer
    fit is taken over the image points of the inner jets.
    """
    fg = fit_gevrey(jets_inner, s, max_order)
    K = jets_inner[0].order
    outer_jets = [outer_profile(gamma, Jet.variable(j.value, K)) for j in jets_inner]
    ff = fit_gevrey(outer_jets, s, max_order)
    comp = [outer_profile(gamma, j) for j in jets_inner]
    sups = derivative_sups(comp, max_order)
    # the scale factor c_f c_g rho_f carries the whole constant, rate rho_g(1 + rho_f c_g)
    c = ff.c * fg.c * ff.rho
    rho = fg.rho * (1.0 + ff.rho * fg.c)
    return {"f": ff.to_dict(), "g": fg.to_dict(), "max_violation": violation(sups, c, rho, s)}


# ------------------------------------------------------------------ exponential estimate
def estimate_constants(gamma, k_max):
    """Per-order constants ``max_y exp(-y^(-2/gamma)) / y^k / (k!)^gamma`` for ``k <= k_max``.

    The maximum over ``y`` sits at ``y^(-2/gamma) = gamma*k/2``.
    """
    out = []
    for k in range(k_max + 1):
        if k == 0:
            log_max = 0.0  # sup is the limit y -> infinity
        else:
            u = gamma * k / 2.0
            log_max = -u + (gamma * k / 2.0) * math.log(u)
        out.append(math.exp(log_max - gamma * math.lgamma(k + 1)))
    return out


def verify_estimate(gamma, k_max):
    """Smallest ``C`` with ``exp(-y^(-2/gamma))/y^k <= C (k!)^gamma`` for all ``k <= k_max``."""
    if k_max > 30:
        raise CapabilityError("k_max is capped at 30")
    per_k = estimate_constants(gamma, k_max)
    C = max(per_k)
    return C, math.isfinite(C)


# ------------------------------------------------------------------ flatness
def boundary_flatness(function_tag, gamma, boundary, side, distances, order=8):
    """Largest |Taylor coefficient| (orders <= ``order``) at ``boundary + side*dist``.

    The constant term is taken relative to the function's value at the
    boundary, so a step that tends to ``1`` is measured as ``b - 1``.
    """
    f = profile_a if function_tag == "profile_a" else profile_b
    limit = f(gamma, boundary)
    out = []
    for dist in distances:
        c = np.array(jet_of(function_tag, boundary + side * dist, order, gamma).coeffs, dtype=float)
        c[0] -= limit
        out.append(float(np.max(np.abs(c))))
    return out


def circle_homogeneity(order=6, radii=(0.25, 0.5, 1.0, 2.0), n_angles=48):
    """``sup_{|z| = t} |d^alpha g| * t^|alpha|`` for ``g = x/|z|`` on several radii.

    Degree-0 homogeneity makes every row equal; the returned array has one row
    per radius and one column per multi-index.
    """
    angles = np.linspace(0.0, 2 * math.pi, n_angles, endpoint=False)
    rows, idx = [], None
    for t in radii:
        jets = [jet_of("circle_cos", (t * math.cos(a), t * math.sin(a)), order) for a in angles]
        sups = derivative_sups(jets)
        idx = sorted(sups)
        rows.append([sups[a] * t ** sum(a) for a in idx])
    return np.array(rows), idx


# ------------------------------------------------------------------ damping
def _grid(lo, hi, n):
    return np.linspace(lo + BOUNDARY_MARGIN, hi - BOUNDARY_MARGIN, n)


def profile_fits(gamma, order=10, n_samples=41):
    """Gevrey fits of ``profile_a``, ``profile_b`` (exponent ``1 + gamma``) and of ``x/|z|``."""
    s = 1.0 + gamma
    fa = fit_gevrey(sample_jets("profile_a", _grid(-0.5, 0.5, n_samples), order, gamma), s)
    fb = fit_gevrey(sample_jets("profile_b", _grid(0.0, 1.0, n_samples), order, gamma), s)
    angles = np.linspace(0.0, 2 * math.pi, 24, endpoint=False)
    circle = [jet_of("circle_cos", (math.cos(a), math.sin(a)), min(order, 6)) for a in angles]
    fg = fit_gevrey(circle, 1.0)
    return fa, fb, fg


def damping_c_h(gamma, order=10, d=1):
    """``c_h = d^2 c_a c_b c_g rho_a rho_b`` from the finite-order fits.

    ``rho_a`` is rescaled by ``4`` because ``a_n`` reads ``profile_a`` at
    ``d / (y_n/4)``.
    """
    fa, fb, fg = profile_fits(gamma, order)
    return d * d * fa.c * fb.c * fg.c * (4.0 * fa.rho) * fb.rho


def damping_c_n(kperp):
    """Sup of ``p_n = Re(z1^m1 z2^m2)`` and its derivatives up to order ``|k|`` on the unit polydisc.

    The top derivative ``d^m z^m = m!`` dominates every lower one, so the
    constant is ``|m1|! |m2|!``.
    """
    return float(math.factorial(abs(kperp[0])) * math.factorial(abs(kperp[1])))
