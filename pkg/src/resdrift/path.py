"""Analytic frequency paths ``v: J -> R^2`` with polynomial components.

A path carries the frequency vector ``omega = v(0)`` together with the way the
direction of ``v`` turns near ``0``.  Everything downstream (the integrable
Hamiltonian, the resonance channels) is derived from it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CapabilityError, ConstructionError, DomainError, SingularityError

#: Absolute tolerance for the "= 0" / "!= 0" tests at ``t = 0``.
ZERO_TOL = 1e-12
#: Size of the sampling grid used for conditions that must hold on all of J.
GRID_SIZE = 1001
#: Distance kept from the endpoints of J when sampling.
ENDPOINT_MARGIN = 1e-6
MAX_DEGREE = 16


def _derivative_coeffs(coeffs, order):
    """Coefficient lists of the first ``order`` formal derivatives."""
    out = [tuple(float(c) for c in coeffs)]
    cur = list(out[0])
    for _ in range(order):
        cur = [i * cur[i] for i in range(1, len(cur))] or [0.0]
        out.append(tuple(float(c) for c in cur))
    return out


def horner(coeffs, t):
    """Evaluate ascending-degree coefficients at ``t``."""
    acc = 0.0
    for c in reversed(coeffs):
        acc = acc * t + c
    return acc


@dataclass(frozen=True)
class FrequencyPath:
    """A path ``v(t) = (v1(t), v2(t))`` with polynomial components.

    Parameters
    ----------
    v1, v2 : sequence of float
        Coefficients in ascending degree.
    J : (float, float)
        Open domain interval, must contain 0.
    max_order : int
        Highest derivative order that may be queried.
    """

    v1: tuple
    v2: tuple
    J: tuple = (-1.0, 1.0)
    max_order: int = 10
    _d1: tuple = field(init=False, repr=False, compare=False)
    _d2: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        v1 = tuple(float(c) for c in self.v1) or (0.0,)
        v2 = tuple(float(c) for c in self.v2) or (0.0,)
        lo, hi = (float(x) for x in self.J)
        if not lo < 0.0 < hi:
            raise ConstructionError(f"domain interval {self.J!r} must contain 0")
        if max(len(v1), len(v2)) - 1 > MAX_DEGREE:
            raise ConstructionError(f"polynomial degree exceeds {MAX_DEGREE}")
        if not all(math.isfinite(c) for c in v1 + v2):
            raise ConstructionError("non-finite path coefficient")
        object.__setattr__(self, "v1", v1)
        object.__setattr__(self, "v2", v2)
        object.__setattr__(self, "J", (lo, hi))
        object.__setattr__(self, "_d1", _derivative_coeffs(v1, self.max_order))
        object.__setattr__(self, "_d2", _derivative_coeffs(v2, self.max_order))

    @classmethod
    def from_spec(cls, spec):
        """Build from the scenario-file mapping ``{"v1": [...], "v2": [...], "J": [a, b]}``."""
        try:
            return cls(tuple(spec["v1"]), tuple(spec["v2"]), tuple(spec.get("J", (-1.0, 1.0))))
        except (KeyError, TypeError) as exc:
            raise ConstructionError(f"malformed path description: {exc}") from exc

    def to_spec(self):
        return {"v1": list(self.v1), "v2": list(self.v2), "J": list(self.J)}

    def contains(self, t):
        return self.J[0] < t < self.J[1]

    def grid(self, size=GRID_SIZE, margin=ENDPOINT_MARGIN):
        """Sampling grid of J including both endpoints pulled in by ``margin``."""
        return np.linspace(self.J[0] + margin, self.J[1] - margin, size)

    def scaled(self, lam):
        """The path ``lam * v``."""
        return FrequencyPath(tuple(lam * c for c in self.v1), tuple(lam * c for c in self.v2),
                             self.J, self.max_order)

    # Fast scalar evaluators used in the hot loops of the flows.
    def value(self, t):
        return horner(self.v1, t), horner(self.v2, t)

    def value_d1(self, t):
        """``(v1, v2, v1', v2')`` at ``t``."""
        return (horner(self.v1, t), horner(self.v2, t),
                horner(self._d1[1], t), horner(self._d2[1], t))

    def wronskian(self, t):
        v1, v2, d1, d2 = self.value_d1(t)
        return d1 * v2 - v1 * d2


def eval_path(path, t, order=0):
    """Return ``[v(t), v'(t), ..., v^(order)(t)]`` as an ``(order+1, 2)`` array."""
    if not path.contains(t):
        raise DomainError(f"t={t!r} outside the path domain {path.J}")
    if order > path.max_order or order < 0:
        raise CapabilityError(f"derivative order {order} not in [0, {path.max_order}]")
    return np.array([[horner(path._d1[k], t), horner(path._d2[k], t)] for k in range(order + 1)])


def slope_functions(path, t):
    """Return ``(phi, phi', psi, psi')`` where ``phi = v1/v2`` and ``psi = arctan(phi)``."""
    v1, v2, d1, d2 = path.value_d1(t)
    if v2 == 0.0:
        raise SingularityError(f"v2 vanishes at t={t!r}")
    phi = v1 / v2
    dphi = (d1 * v2 - v1 * d2) / (v2 * v2)
    return phi, dphi, math.atan(phi), dphi / (1.0 + phi * phi)


@dataclass(frozen=True)
class PathConditionReport:
    condv_ok: bool
    kol1_ok: bool
    kol2_ok: bool
    omega: tuple
    omega_sign_product: int
    elliptic_admissible: bool
    grid_size: int = GRID_SIZE
    min_abs_v2: float = float("nan")
    min_abs_wronskian: float = float("nan")

    def to_dict(self):
        return {
            "condv_ok": self.condv_ok,
            "kol1_ok": self.kol1_ok,
            "kol2_ok": self.kol2_ok,
            "omega": list(self.omega),
            "omega_sign_product": self.omega_sign_product,
            "elliptic_admissible": self.elliptic_admissible,
            "grid_size": self.grid_size,
            "min_abs_v2": self.min_abs_v2,
            "min_abs_wronskian": self.min_abs_wronskian,
        }


def _nonvanishing(values, tol):
    """No sample near zero and no sign change between consecutive samples."""
    if np.any(np.abs(values) <= tol):
        return False
    return bool(np.all(np.sign(values) == np.sign(values[0])))


def check_conditions(path):
    """Evaluate the hypotheses on ``path`` (nonvanishing v2 and Wronskian, Kol1, Kol2)."""
    ts = path.grid()
    v2 = np.array([horner(path.v2, t) for t in ts])
    w = np.array([path.wronskian(t) for t in ts])
    condv = _nonvanishing(v2, ZERO_TOL) and _nonvanishing(w, ZERO_TOL)

    v1_0, v2_0, d1_0, d2_0 = path.value_d1(0.0)
    kol1 = abs(v1_0) <= ZERO_TOL and abs(d1_0) > ZERO_TOL
    kol2 = abs(v1_0 * d2_0) > ZERO_TOL and abs(d1_0) <= ZERO_TOL
    prod = v1_0 * v2_0
    sign = 0 if abs(prod) <= ZERO_TOL else int(math.copysign(1, prod))
    return PathConditionReport(
        condv_ok=bool(condv),
        kol1_ok=bool(kol1),
        kol2_ok=bool(kol2),
        omega=(v1_0, v2_0),
        omega_sign_product=sign,
        elliptic_admissible=sign < 0,
        grid_size=len(ts),
        min_abs_v2=float(np.min(np.abs(v2))),
        min_abs_wronskian=float(np.min(np.abs(w))),
    )
