"""Expected resolvent trace of shifted real Ginibre matrices.

For ``E > 0`` the exact finite-``N`` identity reads

    E Tr(Y + E)^{-1} = N/(4 pi i) oint dxi int_0^inf da int_0^1 dtau
                       (xi^2 a / sqrt(tau)) exp(N [f(xi) - g(a, tau, eta)]) G_N

with ``G_N`` a rational function assembled from eight explicit polynomials.
Each polynomial is split by powers of ``xi``, so the triple integral becomes
a bilinear form between a vector of ``xi`` loop integrals and a vector of
``(a, tau)`` integrals.  ``tau = u^2`` removes the ``tau^{-1/2}`` endpoint
singularity.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import mde_core
from .errors import DomainError, MaxSubdivisions, TauEndpointWarning, UnknownIndex
from .mde_core import ShiftParams
from .quadrature import Arc, ComplexPath, Line, QuadResult, Ray, integrate_path, truncate_ray

RHS_C = 10.0
_CHORD = -2.0 / 3.0


# coefficient of xi^n for each polynomial, as functions of (a, tau)
_XI_COEFFS = {
    (2, 0, 0): lambda a, t: [
        a**4 * t**2 + 4 * a**3 * t + a**2 * (2 * t + 4) + 4 * a + 1,
        2 * a**3 * t + 8 * a**2 + 10 * a + 4,
        a**2 * (4 - t) + 8 * a + 6,
        2 * a + 4,
        1.0 + 0 * a,
    ],
    (1, 0, 0): lambda a, t: [
        a**4 * t**2 + 4 * a**3 * t + a**2 * (2 * t + 4) + 4 * a + 1,
        -(a**4) * t**2 - 2 * a**3 * t + a**2 * (4 - 2 * t) + 6 * a + 3,
        -2 * a**3 * t - 3 * a**2 * t + 2 * a + 3,
        1.0 - a**2 * t,
    ],
    (2, 2, 0): lambda a, t: [
        4 * a**3 * t + 12 * a**2 * t + a * (8 * t + 4) + 4,
        4 * a**2 * t + a * (4 * t + 8) + 8,
        4 * a + 4,
    ],
    (1, 2, 0): lambda a, t: [
        4 * a**3 * t + 12 * a**2 * t + a * (8 * t + 4) + 4,
        4 * a**2 * t + a * (4 * t + 4) + 4,
    ],
    (2, 0, 1): lambda a, t: [
        2 * a**3 * t**2 + 8 * a**2 * t + a * (6 * t + 4) + 4,
        4 * a**2 * t + a * (4 * t + 8) + 10,
        4 * a + 8,
        2.0 + 0 * a,
    ],
    (1, 0, 1): lambda a, t: [
        2 * a**3 * t**2 + 8 * a**2 * t + a * (6 * t + 4) + 4,
        4 * a**2 * t + a * (6 * t + 4) + 6,
        2 * a * t + 2,
    ],
    (2, 2, 1): lambda a, t: [4 * a**2 + 12 * a + 8, 4 * a + 4],
    (2, 0, 2): lambda a, t: [a**2 * t + 4 * a + 4, 2 * a + 4, 1.0 + 0 * a],
}

POLY_INDICES = tuple(_XI_COEFFS)


def eval_poly(i: int, j: int, k: int, a, tau, xi):
    """Polynomial ``p_{i,j,k}(a, tau, xi)``; ``(i, j, k)`` are the powers of N, eta, delta.

    Evaluated by Horner's rule in ``xi`` over coefficient polynomials in
    ``(a, tau)``.
    """
    key = (i, j, k)
    if key not in _XI_COEFFS:
        raise UnknownIndex(key)
    coeffs = _XI_COEFFS[key](a, tau)
    acc = coeffs[-1]
    for c in reversed(coeffs[:-1]):
        acc = acc * xi + c
    return acc


@dataclass(frozen=True)
class _Term:
    index: tuple[int, int, int]
    at_den: str  # "a2t", "at" or "1"
    xi_shift: int  # power of xi left after cancelling the prefactor xi^2
    xi_pole: int  # power of (1 + xi) in the denominator


# G_N = sum coef * p / (den_at(a,tau) den_xi(xi)) / ((a^2 tau + 2a + 1)^2 (xi+1)^2);
# the xi-part below already includes the prefactor xi^2 and the common (xi+1)^2
_TERMS = (
    _Term((2, 0, 0), "a2t", 0, 4),
    _Term((1, 0, 0), "a2t", 0, 3),
    _Term((2, 0, 1), "at", 1, 4),
    _Term((1, 0, 1), "at", 1, 3),
    _Term((2, 0, 2), "1", 2, 4),
    _Term((2, 2, 0), "at", 1, 3),
    _Term((1, 2, 0), "at", 1, 2),
    _Term((2, 2, 1), "1", 2, 3),
)


def _term_coefficient(index: tuple[int, int, int], N: int, delta: float, eta: float) -> float:
    i, j, k = index
    sign = -1.0 if i == 1 else 1.0
    return sign * float(N) ** i * eta**j * delta**k


def _at_denominator(kind: str, a, t):
    if kind == "a2t":
        return a * a * t
    if kind == "at":
        return a * t
    return 1.0


@dataclass(frozen=True)
class RealPhase:
    """Phases ``f(xi)`` and ``g(a, tau, eta)`` at ``w = -E``."""

    params: ShiftParams
    E: float

    @property
    def w(self) -> float:
        return -self.E

    def f(self, xi):
        return -self.w * xi + np.log1p(xi) - np.log(xi) - self.params.abs_z2 / (1 + xi)

    def g(self, a, tau):
        eta = self.params.eta
        d = 1 + 2 * a + a * a * tau
        return (
            -self.w * a
            + 0.5 * np.log(d)
            - np.log(a)
            - 0.5 * np.log(tau)
            - (self.params.abs_z2 * (1 + a) - 2 * eta**2 * a * a * (1 - tau)) / d
        )


def g_function(a, tau, xi, params: ShiftParams, N: int | None = None):
    """``G_N = G_{1,N} + G_{2,N}`` evaluated pointwise from the polynomial table.

    ``N`` defaults to ``params.N``.  Inside the bracket the ``p_{2,2,0}``
    term has denominator ``a xi (xi + 1) tau``; the determinant form of
    ``G_N`` fixes this power of ``(xi + 1)``.
    """
    N = params.N if N is None else N
    delta = params.delta
    eta = params.eta
    common = (a * a * tau + 2 * a + 1) ** 2 * (xi + 1) ** 2
    xi_den = {
        (2, 0, 0): xi**2 * (xi + 1) ** 2,
        (1, 0, 0): xi**2 * (xi + 1),
        (2, 0, 1): xi * (xi + 1) ** 2,
        (1, 0, 1): xi * (xi + 1),
        (2, 0, 2): (xi + 1) ** 2,
        (2, 2, 0): xi * (xi + 1),
        (1, 2, 0): xi,
        (2, 2, 1): xi + 1,
    }
    total = 0
    for term in _TERMS:
        c = _term_coefficient(term.index, N, delta, eta)
        if c == 0:
            continue
        p = eval_poly(*term.index, a, tau, xi)
        total = total + c * p / (_at_denominator(term.at_den, a, tau) * xi_den[term.index])
    return total / common


def g2_vanishes_for_real_z(params: ShiftParams) -> bool:
    return params.eta == 0.0


def _xi_contour(radius: float) -> ComplexPath:
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


def _component_layout():
    # (term position, xi power n) for every (a, tau) component
    layout = []
    for ti, term in enumerate(_TERMS):
        ncoef = len(_XI_COEFFS[term.index](1.0, 1.0))
        for n in range(ncoef):
            layout.append((ti, n))
    return layout


_LAYOUT = _component_layout()
_XI_KEYS = sorted({(term.xi_shift + n, term.xi_pole) for term in _TERMS for n in range(len(_XI_COEFFS[term.index](1.0, 1.0)))})


def trace_resolvent_real(
    params: ShiftParams,
    E: float,
    *,
    rel_tol: float = 1e-9,
    xi_radius: float | None = None,
    allow_odd_n: bool = False,
    u_max_intervals: int = 4000,
) -> QuadResult:
    """``E Tr(Y + E)^{-1}`` for real Ginibre ``X`` from the exact triple integral.

    Parameters
    ----------
    params
        ``N`` (even unless ``allow_odd_n``) and shift ``z``.
    E
        Positive energy.
    rel_tol
        Relative accuracy of each partial integral, measured against its
        absolute integrand mass.
    xi_radius
        Radius of the ``xi`` loop.  Defaults to the stationary point
        ``m^z(-E)``; the value does not depend on it.
    """
    N = params.N
    if N < 2:
        raise DomainError("the real formula needs N >= 2")
    if N % 2 and not allow_odd_n:
        raise DomainError("odd N is outside the supported range; pass allow_odd_n=True")
    if not E > 0:
        raise DomainError(f"E must be positive, got {E}")
    phase = RealPhase(params, float(E))
    delta = params.delta
    eta = params.eta
    xi_star = mde_core.solve_mde_y(-E, delta).m.real
    f_star = float(phase.f(xi_star).real)
    radius = xi_star if xi_radius is None else float(xi_radius)
    if not radius > 0:
        raise DomainError("xi loop radius must be positive")

    # xi loop integrals Xi[(p, m)] = oint e^{N (f - f*)} xi^p (1 + xi)^{-m}
    def fxi(xi):
        e = np.exp(N * (phase.f(xi) - f_star))
        return np.stack([e * xi**p / (1 + xi) ** m for p, m in _XI_KEYS])

    XI = integrate_path(fxi, _xi_contour(radius), 1e-300, rel_tol * 1e-1, rel_to="l1")
    xi_vals = dict(zip(_XI_KEYS, XI.value))
    xi_errs = dict(zip(_XI_KEYS, XI.abs_err))

    coefs = np.array([_term_coefficient(t.index, N, delta, eta) for t in _TERMS])
    active = [k for k, (ti, _) in enumerate(_LAYOUT) if coefs[ti] != 0.0]
    u_path = ComplexPath([Line(0j, 1 + 0j, pieces=4)])

    def at_components(a, u):
        t = u * u
        expo = -N * (phase.g(a, t) - f_star)
        base = 2.0 * a * np.exp(expo) / (a * a * t + 2 * a + 1) ** 2
        rows = []
        cache = {}
        for k in active:
            ti, n = _LAYOUT[k]
            term = _TERMS[ti]
            if ti not in cache:
                cache[ti] = (_XI_COEFFS[term.index](a, t), _at_denominator(term.at_den, a, t))
            coeffs, den = cache[ti]
            rows.append(coeffs[n] * base / den)
        return np.stack(rows)

    def inner(a_nodes):
        a = a_nodes.real

        def g(u):
            return at_components(a[:, None], u.real[None, :])

        try:
            return integrate_path(g, u_path, 1e-300, rel_tol * 1e-2, rel_to="l1", max_intervals=u_max_intervals).value
        except MaxSubdivisions:
            warnings.warn("tau integration needed extra refinement", TauEndpointWarning, stacklevel=2)
            return integrate_path(g, u_path, 1e-300, rel_tol * 1e-2, rel_to="l1", max_intervals=8 * u_max_intervals).value

    a_len = truncate_ray(1.0 / (N * E), 1e-18, envelope_const=1e3)
    a_path = ComplexPath([Line(0j, complex(xi_star), pieces=4), Ray(complex(xi_star), 1.0, max(a_len, xi_star))])
    A = integrate_path(inner, a_path, 1e-300, rel_tol * 1e-1, rel_to="l1", tail_check=False)

    val = 0j
    err = 0.0
    for row, k in enumerate(active):
        ti, n = _LAYOUT[k]
        term = _TERMS[ti]
        key = (term.xi_shift + n, term.xi_pole)
        c = coefs[ti]
        val += c * A.value[row] * xi_vals[key]
        err += abs(c) * (A.abs_err[row] * abs(xi_vals[key]) + abs(A.value[row]) * xi_errs[key])
    pref = N / (4j * math.pi)
    return QuadResult(complex(pref * val), float(abs(pref) * err), A.n_evals + XI.n_evals)


def real_tail_bound_terms(params: ShiftParams, E: float, *, C: float = RHS_C) -> tuple[float, float]:
    """The two summands of the optimal real-case bound on ``|E Tr(Y + E)^{-1}|``.

    ``e^{-N eta^2/2} (N^{3/4} v N sqrt|delta|) / sqrt(E)`` and
    ``(N^{3/2} v N^2 |delta|) (1 + |log(N E^{2/3})|)``.
    """
    N = params.N
    delta = params.delta
    if not E > 0:
        raise DomainError("E must be positive")
    if delta < -C * N**-0.5:
        raise DomainError(f"delta={delta} below -C N^(-1/2)")
    first = math.exp(-0.5 * N * params.eta**2) * max(N**0.75, N * math.sqrt(abs(delta))) / math.sqrt(E)
    second = max(N**1.5, N * N * abs(delta)) * (1 + abs(math.log(N * E ** (2.0 / 3.0))))
    return first, second


def real_tail_bound_rhs(params: ShiftParams, E: float, *, C: float = RHS_C) -> float:
    """Sum of :func:`real_tail_bound_terms`."""
    first, second = real_tail_bound_terms(params, E, C=C)
    return first + second
