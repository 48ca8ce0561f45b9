"""The integrable Hamiltonian ``h`` built from a frequency path.

The chart ``(x, t) -> (x, t - x*phi(t))`` straightens the family of lines
``Lambda_t = (0, t) + span(v_perp(t))``; ``h`` is ``g(t)`` with ``g' = v2``,
so ``h`` is constant on each line and ``grad h(0, t) = v(t)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConstructionError, DomainError, NumericError
from .path import FrequencyPath, check_conditions, horner, slope_functions

BETA_SAFETY = 1.05
NEWTON_TOL = 1e-13
NEWTON_MAXITER = 50


@dataclass(frozen=True)
class IntegrableModel:
    """Integrable Hamiltonian on ``U = chart((-delta, delta) x J)``.

    ``beta`` bounds ``|phi'|`` on J and ``delta = shrink / beta``.  The chart is
    a contraction-based diffeomorphism for every ``|x| < x_limit = 1/sup|phi'|``,
    which is slightly wider than the working strip.
    """

    path: FrequencyPath
    beta: float
    delta: float
    sup_dphi: float
    shrink: float = 1.0
    quadrature_order: int = 16
    g_coeffs: tuple = ()

    @property
    def x_limit(self):
        return 1.0 / self.sup_dphi

    @property
    def omega(self):
        return self.path.value(0.0)

    def with_delta(self, delta):
        """Copy with a smaller strip half-width (the shrink pass)."""
        if not 0.0 < delta <= self.beta ** -1 * (1 + 1e-15):
            raise ConstructionError(f"delta={delta!r} must lie in (0, 1/beta]")
        return replace(self, delta=float(delta), shrink=float(delta * self.beta))

    # scalar kernels ---------------------------------------------------------
    def _phi(self, y):
        p = self.path
        v1, v2, d1, d2 = p.value_d1(y)
        phi = v1 / v2
        return phi, (d1 * v2 - v1 * d2) / (v2 * v2), v1, v2

    def solve_chart(self, x, Y, strict=True):
        """Newton solve of ``y - x*phi(y) = Y``; returns ``(y, phi, phi', v1, v2)``."""
        if strict:
            if not abs(x) < self.delta:
                raise DomainError(f"|x|={abs(x)!r} outside the strip of half-width {self.delta}")
        elif not abs(x) < self.x_limit:
            raise DomainError(f"|x|={abs(x)!r} beyond the contraction region {self.x_limit}")
        y = Y
        for _ in range(NEWTON_MAXITER):
            # iterates may leave J on the way; only the limit has to lie in J
            try:
                phi, dphi, v1, v2 = self._phi(y)
            except ZeroDivisionError:
                break
            res = y - x * phi - Y
            step = res / (1.0 - x * dphi)
            if not math.isfinite(step):
                break
            y -= step
            if abs(step) <= 1e-15 * max(1.0, abs(y)) or abs(res) < 1e-16:
                phi, dphi, v1, v2 = self._phi(y)
                if abs(y - x * phi - Y) < NEWTON_TOL and self.path.contains(y):
                    return y, phi, dphi, v1, v2
                break
        if not self.path.contains(y):
            raise DomainError(f"chart preimage of {(x, Y)!r} leaves J (y={y!r})")
        raise NumericError(f"chart inversion at {(x, Y)!r} did not converge (last y={y!r})")

    def g(self, y):
        return horner(self.g_coeffs, y)

    def h_and_grad(self, R, strict=True):
        x, Y = R
        y, phi, dphi, v1, v2 = self.solve_chart(x, Y, strict)
        jac = 1.0 - x * dphi
        return self.g(y), (v1 / jac, v2 / jac)


def build_integrable(path, shrink=1.0, quadrature_order=16):
    """Construct ``h`` for ``path``; fails if the path hypotheses do not hold."""
    report = check_conditions(path)
    if not report.condv_ok:
        raise ConstructionError("path violates v2 != 0 or v1'v2 != v1 v2' on J")
    ts = path.grid()
    sup = max(abs(slope_functions(path, t)[1]) for t in ts)
    beta = BETA_SAFETY * sup
    if not 0.0 < shrink <= 1.0:
        raise ConstructionError("shrink factor must lie in (0, 1]")
    v2 = path.v2
    g_coeffs = (0.0,) + tuple(c / (i + 1) for i, c in enumerate(v2))
    return IntegrableModel(path=path, beta=beta, delta=shrink / beta, sup_dphi=sup,
                           shrink=shrink, quadrature_order=quadrature_order, g_coeffs=g_coeffs)


def forward_chart(m, x, y):
    if not abs(x) < m.delta:
        raise DomainError(f"|x|={abs(x)!r} outside the strip of half-width {m.delta}")
    if not m.path.contains(y):
        raise DomainError(f"y={y!r} outside J={m.path.J}")
    phi = m._phi(y)[0]
    return np.array([x, y - x * phi])


def inverse_chart(m, x, Y):
    y = m.solve_chart(x, Y)[0]
    return np.array([x, y])


def eval_h(m, R):
    x, Y = R
    return m.g(m.solve_chart(x, Y)[0])


def grad_h(m, R):
    """Analytic gradient, ``v(y) / (1 - x*phi'(y))`` with ``y`` the chart preimage."""
    return np.array(m.h_and_grad(R)[1])


def hessian_h_origin(m):
    v1, v2, d1, d2 = m.path.value_d1(0.0)
    phi, dphi, _, _ = slope_functions(m.path, 0.0)
    hxx = d2 * phi ** 2 + 2.0 * v2 * phi * dphi
    return np.array([[hxx, d1], [d1, d2]])


def kolmogorov_det(m):
    return float(np.linalg.det(hessian_h_origin(m)))


def isoenergetic_det(m):
    H = hessian_h_origin(m)
    w = np.array(m.omega)
    B = np.zeros((3, 3))
    B[:2, :2] = H
    B[:2, 2] = w
    B[2, :2] = w
    return float(np.linalg.det(B))


def kolmogorov_det_closed_form(path):
    """Closed form ``(v2' phi)^2 + 2 v2 v2' phi phi' - v1'^2`` of the Hessian determinant."""
    v1, v2, d1, d2 = path.value_d1(0.0)
    phi, dphi, _, _ = slope_functions(path, 0.0)
    return (d2 * phi) ** 2 + 2.0 * v2 * d2 * phi * dphi - d1 ** 2


def in_domain(m, R):
    """Membership test for ``U``."""
    try:
        m.solve_chart(R[0], R[1])
    except (DomainError, NumericError):
        return False
    return True


def line_point(m, t, s):
    """Point ``(0, t) + s * v_perp(t)`` of ``Lambda_t``."""
    v1, v2 = m.path.value(t)
    return np.array([-s * v2, t + s * v1])

