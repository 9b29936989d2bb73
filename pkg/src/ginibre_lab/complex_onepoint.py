"""Expected resolvent trace of shifted complex Ginibre matrices.

The exact finite-``N`` identity is

    E Tr(Y - w)^{-1} = N^2/(2 pi i) int dx oint dy exp(-N f(x) + N f(y)) y G(x, y)

with ``f(x) = log((1+x)/x) - |z|^2/(1+x) - w x``.  Because ``y G(x, y)`` is a
sum of monomials ``x^i y^j`` over ``x (1+x)^2 (1+y)^2``, the double integral
splits into three x-integrals and three y-integrals, each evaluated along
contours passing through the relevant stationary point.

Near zero energy the rescaled double integral ``rescaled_onepoint`` gives
the ``N``-independent leading term, and in the bulk ``saddle_asymptotics``
gives ``N m^z(E + i0)``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from . import mde_core
from .errors import ContourCrossesPole, DomainError, RegimeError
from .mde_core import ShiftParams
from .quadrature import Arc, ComplexPath, Line, QuadResult, Ray, integrate_path, truncate_ray

PLUS_I0 = "plus_i0"
NEGATIVE_AXIS = "negative_axis"
CRITICAL_FACTOR = 10.0
REGIME_FACTOR = 10.0
RESCALED_C = 10.0
_CHORD = -2.0 / 3.0
_POLE_TOL = 1e-8


def g_coefficients(delta: float) -> dict[tuple[int, int], float]:
    """Coefficients ``C_ij`` with ``y G(x,y) = sum C_ij x^i y^j / (x (1+x)^2 (1+y)^2)``."""
    return {
        (0, 0): 1.0,
        (1, 0): 2.0,
        (0, 1): 2.0,
        (2, 0): 1.0,
        (0, 2): 1.0,
        (1, 1): 1.0 + 2.0 * delta,
        (2, 1): delta,
        (1, 2): delta,
    }


@dataclass(frozen=True)
class ComplexPhase:
    """Phase ``f`` and amplitude ``G`` of the complex double integral at ``w``."""

    params: ShiftParams
    E: float
    side: str = PLUS_I0

    def __post_init__(self) -> None:
        if self.side not in (PLUS_I0, NEGATIVE_AXIS):
            raise DomainError(f"unknown side {self.side!r}")

    @property
    def w(self) -> float:
        return self.E if self.side == PLUS_I0 else -self.E

    def f(self, x):
        return mde_core.phase_f(x, self.w, self.params.abs_z2)

    def df(self, x):
        return mde_core.phase_df(x, self.w, self.params.abs_z2)

    def d2f(self, x):
        return mde_core.phase_d2f(x, self.w, self.params.abs_z2)

    def G(self, x, y):
        d = self.params.delta
        num = (1 + x + y) ** 2 - x * y + d * x * y * (2 + x + y)
        return num / (x * y * (1 + x) ** 2 * (1 + y) ** 2)


def _y_contour(radius: float) -> ComplexPath:
    """Counter-clockwise loop around 0 that keeps -1 outside."""
    if radius > 0.7:
        psi = math.acos(_CHORD / radius)
        top = math.sqrt(radius**2 - _CHORD**2)
        return ComplexPath(
            [
                Arc(0j, radius, -psi, psi, pieces=8),
                Line(complex(_CHORD, top), complex(_CHORD, -top), pieces=4),
            ]
        )
    return ComplexPath([Arc(0j, radius, -math.pi, math.pi, pieces=8)])


def _ray_direction(c: complex) -> complex:
    """Direction ``-q + i`` of the ray through ``c`` that starts at ``|c|``."""
    if c.imag > 1e-12 * max(1.0, abs(c)):
        q = (abs(c) - c.real) / c.imag
        return complex(-q, 1.0)
    if c.real > 0:
        return 1j
    return complex(-1.0, 1.0)


def _check_poles(x_path: ComplexPath, y_path: ComplexPath) -> None:
    if x_path.min_distance(-1.0) < _POLE_TOL:
        raise ContourCrossesPole("x-contour passes through -1")
    for p in (0.0, -1.0):
        if y_path.min_distance(p) < _POLE_TOL:
            raise ContourCrossesPole(f"y-contour passes through {p}")


def critical_center(E: float, delta: float) -> complex:
    """Leading-order stationary point ``z_*`` used below the critical scale."""
    if delta < 0:
        return cmath.exp(1j * math.pi / 3) * E ** (-1.0 / 3.0)
    return E ** (-1.0 / 3.0) * mde_core.psi(delta * E ** (-1.0 / 3.0))


def _contours(
    phase: ComplexPhase,
    regime: str,
    ray_direction: complex | None,
    y_radius: float | None,
    tol: float,
) -> tuple[ComplexPath, ComplexPath, complex]:
    N = phase.params.N
    E = phase.E
    delta = phase.params.delta
    if phase.side == NEGATIVE_AXIS:
        R = mde_core.solve_mde_y(-E, delta).m.real
        d = 1.0 + 0j if ray_direction is None else complex(ray_direction)
        length = truncate_ray(1.0 / (N * E * abs(d.real)), tol, envelope_const=1e3)
        x_path = ComplexPath([Line(0j, complex(R), pieces=4), Ray(complex(R), d, max(length, R))])
        center = complex(R)
    else:
        if regime == "critical":
            c = critical_center(E, delta)
            start = complex(abs(c))
        else:
            c = mde_core.solve_mde_y(E, delta).m
            start = c
        d = _ray_direction(c) if ray_direction is None else complex(ray_direction)
        d = d / abs(d)
        if d.real >= 0:
            raise DomainError("x-ray must point into the left half-plane")
        length = truncate_ray(1.0 / (N * E * abs(d.real)), tol, envelope_const=1e3)
        segs = [Line(0j, start, pieces=4)]
        if start != c:
            # the ray from |z_*| along d passes through z_*; split there
            segs.append(Line(start, c, pieces=2))
        segs.append(Ray(c, d, max(length, 4.0 * abs(c))))
        x_path = ComplexPath(segs)
        center = c
    R_y = abs(center) if y_radius is None else float(y_radius)
    y_path = _y_contour(R_y)
    _check_poles(x_path, y_path)
    return x_path, y_path, center


def _regime_for(params: ShiftParams, E: float, side: str) -> str:
    if side == NEGATIVE_AXIS:
        return "negative_axis"
    if E <= CRITICAL_FACTOR * mde_core.scale_c(params):
        return "critical"
    return "saddle"


def trace_resolvent_complex(
    params: ShiftParams,
    E: float,
    side: str = PLUS_I0,
    *,
    abs_tol: float = 1e-10,
    rel_tol: float = 1e-9,
    regime: str | None = None,
    ray_direction: complex | None = None,
    y_radius: float | None = None,
) -> QuadResult:
    """``E Tr(Y - E - i0)^{-1}`` (``side='plus_i0'``) or ``E Tr(Y + E)^{-1}``.

    Parameters
    ----------
    params
        Matrix size and shift; ``N >= 2``.
    E
        Positive energy.
    side
        ``'plus_i0'`` for the boundary value at ``w = E + i0``,
        ``'negative_axis'`` for ``w = -E``.
    regime
        Contour family for ``plus_i0``: ``'saddle'`` passes through the exact
        stationary point, ``'critical'`` through its leading-order
        approximation ``z_*``.  Chosen from ``E / c(N)`` when omitted.
    ray_direction, y_radius
        Optional contour perturbations; the result is independent of them.

    Returns
    -------
    QuadResult
        Value with a propagated quadrature error estimate.
    """
    if params.N < 2:
        raise DomainError("the contour formula needs N >= 2")
    if not E > 0:
        raise DomainError(f"E must be positive, got {E}")
    phase = ComplexPhase(params, float(E), side)
    if regime is None:
        regime = _regime_for(params, E, side)
    x_path, y_path, center = _contours(phase, regime, ray_direction, y_radius, 1e-18)
    N = params.N
    f_star = phase.f(center)

    def fx(x):
        e = np.exp(-N * (phase.f(x) - f_star)) / (1.0 + x) ** 2
        return np.stack([e / x, e, e * x])

    def fy(y):
        e = np.exp(N * (phase.f(y) - f_star)) / (1.0 + y) ** 2
        return np.stack([e, e * y, e * y * y])

    inner_tol = min(rel_tol, 1e-10) * 1e-2
    X = integrate_path(fx, x_path, 1e-300, inner_tol, rel_to="l1")
    Y = integrate_path(fy, y_path, 1e-300, inner_tol, rel_to="l1")
    coeffs = g_coefficients(params.delta)
    pref = N * N / (2j * math.pi)
    val = 0j
    err = 0.0
    for (i, j), c in coeffs.items():
        val += c * X.value[i] * Y.value[j]
        err += abs(c) * (X.abs_err[i] * abs(Y.value[j]) + abs(X.value[i]) * Y.abs_err[j])
    return QuadResult(complex(pref * val), float(abs(pref) * err), X.n_evals + Y.n_evals)


# --- rescaled critical regime ------------------------------------------------


def _scale_factor(delta_tilde: float) -> float:
    # (1 wedge delta_tilde^{-1}); the magnitude is used for delta_tilde < 0
    d = abs(delta_tilde)
    return 1.0 if d <= 1.0 else 1.0 / d


def z_tilde_star(lam: float, delta_tilde: float) -> float:
    """Rescaled modulus of the leading stationary point."""
    spread = max(1.0, abs(delta_tilde)) ** (1.0 / 3.0)
    base = lam ** (-1.0 / 3.0) * spread
    if delta_tilde < 0:
        return base
    return base * abs(mde_core.psi(delta_tilde * base))


@dataclass(frozen=True)
class RescaledIntegrand:
    """Phase ``h`` and amplitude ``H~`` of the rescaled critical double integral."""

    lam: float
    delta_tilde: float

    @property
    def z_tilde_star(self) -> float:
        return z_tilde_star(self.lam, self.delta_tilde)

    @property
    def kappa(self) -> float:
        return _scale_factor(self.delta_tilde)

    def h(self, x):
        zt = self.z_tilde_star
        return -self.kappa * self.lam * zt * x + self.delta_tilde / (x * zt) + 1.0 / (2 * x * x * zt * zt)

    def H(self, x, y):
        dz = self.delta_tilde * self.z_tilde_star
        return 1 / x**3 + 1 / (x * x * y) + 1 / (x * y * y) + dz / (x * y) + dz / (x * x)


def rescaled_contours(radius: float = 1.0, x_turn: float = 1.0, length: float = 60.0):
    """x from 0 along the positive axis to ``x_turn``, then a ray towards ``e^{3 i pi/4}``.

    The y-loop is D-shaped: the right half circle counter-clockwise from
    ``-i r`` to ``i r``, then down the imaginary axis through 0, where
    ``e^{h(y)}`` vanishes.
    """
    x_path = ComplexPath(
        [Line(0j, complex(x_turn), pieces=4), Ray(complex(x_turn), np.exp(3j * np.pi / 4), length)]
    )
    y_path = ComplexPath(
        [
            Arc(0j, radius, -np.pi / 2, np.pi / 2, pieces=4),
            Line(1j * radius, 0j, pieces=4),
            Line(0j, -1j * radius, pieces=4),
        ]
    )
    return x_path, y_path


def rescaled_double_integral(
    lam: float,
    delta_tilde: float,
    *,
    tol: float = 1e-11,
    radius: float = 1.0,
    x_turn: float = 1.0,
) -> QuadResult:
    """``int dx oint dy e^{h(y) - h(x)} H~(x, y)`` without prefactors."""
    if not 0 < lam <= RESCALED_C:
        raise DomainError(f"lambda must lie in (0, {RESCALED_C}], got {lam}")
    if delta_tilde < -RESCALED_C:
        raise DomainError(f"delta_tilde must be >= {-RESCALED_C}, got {delta_tilde}")
    rh = RescaledIntegrand(lam, delta_tilde)
    slope = rh.kappa * lam * rh.z_tilde_star
    length = truncate_ray(math.sqrt(2.0) / slope, 1e-18, envelope_const=10.0)
    x_path, y_path = rescaled_contours(radius, x_turn, max(length, 4.0 * x_turn))

    def fx(x):
        e = np.exp(-rh.h(x))
        return np.stack([e / x, e / x**2, e / x**3])

    def fy(y):
        e = np.exp(rh.h(y))
        return np.stack([e, e / y, e / y**2])

    X = integrate_path(fx, x_path, 1e-300, tol, rel_to="l1")
    Y = integrate_path(fy, y_path, 1e-300, tol, rel_to="l1")
    x1, x2, x3 = X.value
    y0, y1, y2 = Y.value
    dz = delta_tilde * rh.z_tilde_star
    val = x3 * y0 + x2 * y1 + x1 * y2 + dz * (x1 * y1 + x2 * y0)
    ex, ey = X.abs_err, Y.abs_err
    err = (
        ex[2] * abs(y0) + abs(x3) * ey[0]
        + ex[1] * abs(y1) + abs(x2) * ey[1]
        + ex[0] * abs(y2) + abs(x1) * ey[2]
        + abs(dz) * (ex[0] * abs(y1) + abs(x1) * ey[1] + ex[1] * abs(y0) + abs(x2) * ey[0])
    )
    return QuadResult(complex(val), float(err), X.n_evals + Y.n_evals)


def rescaled_onepoint(lam: float, delta_tilde: float, N: int, **kw) -> QuadResult:
    """Leading term of ``E Tr(Y - lam c(N, delta_tilde) - i0)^{-1}`` near zero energy.

    Equals ``N^{3/2} / (2 pi i z~_*)`` times :func:`rescaled_double_integral`.
    """
    if N < 1:
        raise DomainError("N must be positive")
    res = rescaled_double_integral(lam, delta_tilde, **kw)
    pref = N**1.5 / (2j * math.pi * z_tilde_star(lam, delta_tilde))
    return QuadResult(pref * res.value, abs(pref) * res.abs_err, res.n_evals)


def rescaled_energy(lam: float, delta_tilde: float, N: int) -> float:
    """Energy ``lam c(N, delta_tilde)`` matching the rescaled variables."""
    return lam * N**-1.5 * _scale_factor(delta_tilde)


def rescaled_bound_lhs(lam: float, delta_tilde: float, **kw) -> float:
    """``|(1 wedge delta_tilde^{-1}) / z~_* * double integral|`` for small ``lam``."""
    res = rescaled_double_integral(lam, delta_tilde, **kw)
    return _scale_factor(delta_tilde) * abs(res.value) / z_tilde_star(lam, delta_tilde)


def rescaled_bound_rhs(lam: float, delta_tilde: float) -> float:
    """Log-size comparison function: ``|log lam|`` or ``|log(lam delta_tilde)|``."""
    if lam >= delta_tilde**3:
        return abs(math.log(lam))
    return abs(math.log(lam * delta_tilde))


# --- saddle point regime -----------------------------------------------------


def saddle_error_bound(params: ShiftParams, E: float) -> float:
    """Relative error bracket of the saddle-point expansion (without constant)."""
    N = params.N
    delta = params.delta
    ed = mde_core.edges(delta)
    e_plus = abs(E - ed.e_plus)
    first = 1.0 / (N * e_plus**1.5) if e_plus > 0 else math.inf
    small_e = 1.0 / (N * E ** (2.0 / 3.0))
    if delta >= 0:
        alt = 1.0 / (N * math.sqrt(E * delta)) if delta > 0 else math.inf
    else:
        e_minus = abs(E - ed.e_minus)
        alt = 1.0 / (N * e_minus**1.5 * abs(delta) ** 2.5) if e_minus > 0 else math.inf
    return first + min(small_e, alt)


def check_saddle_regime(params: ShiftParams, E: float, factor: float = REGIME_FACTOR) -> None:
    """Raise :class:`RegimeError` unless the quadratic saddle approximation applies."""
    N = params.N
    delta = params.delta
    if not E > 0:
        raise RegimeError("saddle asymptotics need E > 0")
    ed = mde_core.edges(delta)
    if abs(E - ed.e_plus) <= factor * N ** (-2.0 / 3.0):
        raise RegimeError(f"E={E} too close to the upper edge {ed.e_plus}")
    if E <= factor * mde_core.scale_c(params):
        raise RegimeError(f"E={E} is below the critical scale")
    if ed.e_minus is not None and abs(E - ed.e_minus) <= factor * N ** (-2.0 / 3.0) * abs(delta) ** (5.0 / 3.0):
        raise RegimeError(f"E={E} too close to the lower edge {ed.e_minus}")


def saddle_asymptotics(params: ShiftParams, E: float, *, check: bool = True) -> complex:
    """Leading saddle-point value ``N m^z(E + i0)``."""
    if check:
        check_saddle_regime(params, E)
    return params.N * mde_core.solve_mde_y(E, params).m
