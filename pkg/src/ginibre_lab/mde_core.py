"""Scalar Dyson equation for shifted Ginibre matrices.

For ``Y = (X - z)(X - z)^*`` with ``X`` an ``N x N`` Ginibre matrix the
limiting Stieltjes transform ``m = m^z(w)`` solves the cubic

    w m^3 + 2 w m^2 + (w + delta) m + 1 = 0,      delta = 1 - |z|^2,

and the Hermitised block matrix ``H`` has ``m_H(sqrt(w)) = sqrt(w) m^z(w)``.
This module solves both equations, locates the spectral edges, and exposes
the saddle point of the complex phase function, which coincides with
``m^z(E + i0)``.

Real energies are handled analytically: the ``+i0`` boundary value is picked
by an explicit Cardano branch rule rather than by a small imaginary shift.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .errors import DomainError, NoConvergence

DEFAULT_TOL = 1e-12
EDGE_TOL = 1e-12

_OMEGA = cmath.exp(2j * math.pi / 3)
_OMEGA_BAR = _OMEGA.conjugate()

BELOW_E_MINUS = "below_e_minus"
BULK = "bulk"
ABOVE_E_PLUS = "above_e_plus"


@dataclass(frozen=True)
class ShiftParams:
    """Matrix size ``N`` and spectral shift ``z``.

    ``delta = 1 - |z|^2`` and ``eta = Im z`` are derived on access, so they
    can never disagree with ``z``.
    """

    N: int
    z: complex

    def __post_init__(self) -> None:
        if int(self.N) != self.N or self.N < 1:
            raise DomainError(f"N must be a positive integer, got {self.N!r}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "z", complex(self.z))

    @property
    def delta(self) -> float:
        return 1.0 - abs(self.z) ** 2

    @property
    def eta(self) -> float:
        return self.z.imag

    @property
    def abs_z2(self) -> float:
        return abs(self.z) ** 2

    @classmethod
    def from_delta(cls, N: int, delta: float, eta: float = 0.0) -> "ShiftParams":
        """Build parameters with ``1 - |z|^2 = delta`` and ``Im z = eta``."""
        abs_z2 = 1.0 - delta
        if abs_z2 < eta * eta:
            raise DomainError("need |z|^2 = 1 - delta >= eta^2")
        return cls(N, complex(math.sqrt(abs_z2 - eta * eta), eta))


ParamsLike = Union[ShiftParams, float]


def _delta_of(params: ParamsLike) -> float:
    if isinstance(params, ShiftParams):
        return params.delta
    return float(params)


@dataclass(frozen=True)
class StieltjesValue:
    m: complex
    residual: float
    degenerate: bool = False


@dataclass(frozen=True)
class EdgeData:
    e_plus: float
    gamma_plus: float
    e_minus: Optional[float] = None
    gamma_minus: Optional[float] = None


@dataclass(frozen=True)
class SaddlePoint:
    x_star: complex
    second_derivative: complex
    regime_tag: str
    degenerate: bool = False


def branch_cbrt(x: complex) -> complex:
    """Cube root used by the Cardano branch rules.

    Real arguments get the real cube root (negative for negative input);
    non-real arguments get the root of maximal real part.
    """
    x = complex(x)
    if x.imag == 0.0:
        return complex(np.cbrt(x.real))
    return x ** (1.0 / 3.0)


def cubic_y(m: complex, w: complex, delta: float) -> complex:
    """Left-hand side ``w m^3 + 2 w m^2 + (w + delta) m + 1``."""
    return ((w * m + 2 * w) * m + (w + delta)) * m + 1


def _cubic_y_prime(m: complex, w: complex, delta: float) -> complex:
    return (3 * w * m + 4 * w) * m + (w + delta)


def _cubic_y_scale(m: complex, w: complex, delta: float) -> float:
    am = abs(m)
    aw = abs(w)
    return aw * am**3 + 2 * aw * am**2 + abs(w + delta) * am + 1.0


def _polish(m: complex, fn, dfn, steps: int = 4) -> complex:
    best = m
    best_res = abs(fn(m))
    for _ in range(steps):
        d = dfn(m)
        if d == 0:
            break
        m = m - fn(m) / d
        res = abs(fn(m))
        if res < best_res:
            best, best_res = m, res
        if res == 0.0:
            break
    return best


def _cardano_qp(E: float, delta: float) -> tuple[float, float]:
    q = delta / (3 * E) + 1.0 / 27.0 - 1.0 / (2 * E)
    p = delta / (3 * E) - 1.0 / 9.0
    return q, p


def _require_delta(delta: float) -> None:
    if not delta <= 1.0:
        raise DomainError(f"delta = 1 - |z|^2 must be <= 1, got {delta}")


def _solve_unshifted(E: float) -> complex:
    # z = 0: the cubic factors as (m + 1)(E m^2 + E m + 1)
    disc = 1.0 - 4.0 / E
    if E < 0:
        return complex((-1.0 + math.sqrt(disc)) / 2.0)
    if disc >= 0:
        return complex((-1.0 + math.sqrt(disc)) / 2.0)
    return complex(-0.5, 0.5 * math.sqrt(-disc))


def edges(delta: float) -> EdgeData:
    """Spectral edges and square-root slopes of the limiting density.

    ``e_minus`` (and its slope) exist only for ``delta < 0``, where the
    support detaches from zero.
    """
    delta = float(delta)
    if delta >= 1.0 - 1e-14:
        raise DomainError(f"edges need delta < 1, got {delta}")
    s = 9.0 - 8.0 * delta
    root = math.sqrt(s)
    denom = 8.0 * (1.0 - delta)
    e_plus = (8 * delta**2 + s**1.5 - 36 * delta + 27) / denom
    gamma_plus = (
        2 * math.sqrt(2) * (root + 1) ** 1.5 / ((root + 3) ** 2.5 * s**0.25)
    )
    if delta >= 0:
        return EdgeData(e_plus=e_plus, gamma_plus=gamma_plus)
    # the discriminant times 729 E^3 is a quadratic in E with roots e_minus,
    # e_plus; Vieta gives the small root without cancellation
    e_minus = -(delta**3) / ((1.0 - delta) * e_plus)
    # root - 3 = -8 delta / (root + 3), free of cancellation
    gap = -8.0 * delta / (root + 3.0)
    try:
        gamma_minus = 2 * math.sqrt(2) * (root - 1) ** 1.5 * gap**-2.5 / s**0.25
    except OverflowError:
        # slope grows like |delta|^{-5/2}
        gamma_minus = math.inf
    return EdgeData(
        e_plus=e_plus,
        gamma_plus=gamma_plus,
        e_minus=e_minus,
        gamma_minus=gamma_minus,
    )


def _edge_value(delta: float, sign: int) -> float:
    root = math.sqrt(9.0 - 8.0 * delta)
    return -2.0 / (3.0 + sign * root)


def _regime(E: float, delta: float, ed: EdgeData) -> tuple[str, bool]:
    band = EDGE_TOL * max(1.0, ed.e_plus)
    if abs(E - ed.e_plus) < band:
        return BULK, True
    if ed.e_minus is not None and abs(E - ed.e_minus) < band:
        return BULK, True
    if E > ed.e_plus:
        return ABOVE_E_PLUS, False
    if ed.e_minus is not None and E < ed.e_minus:
        return BELOW_E_MINUS, False
    return BULK, False


def _all_cardano_roots(E: float, delta: float) -> list[complex]:
    q, p = _cardano_qp(E, delta)
    sq = cmath.sqrt(q * q + p**3)
    u = complex(q + sq) ** (1.0 / 3.0)
    if abs(u) < 1e-300:
        u = complex(q - sq) ** (1.0 / 3.0)
    v = -p / u if abs(u) > 0 else 0.0
    return [
        _OMEGA**k * u + _OMEGA_BAR**k * v - 2.0 / 3.0 for k in range(3)
    ]


def _solve_real_energy(
    E: float, delta: float, tol: float
) -> tuple[complex, str, bool]:
    if E == 0.0:
        raise DomainError("E = 0 is a singular point of the Dyson equation")
    if delta == 1.0:
        return _solve_unshifted(E), (ABOVE_E_PLUS if E > 4.0 else BULK), E == 4.0
    if E < 0.0:
        # resolvent on the negative axis: the unique positive root
        roots = _all_cardano_roots(E, delta)
        fn = lambda m: cubic_y(m, E, delta)  # noqa: E731
        dfn = lambda m: _cubic_y_prime(m, E, delta)  # noqa: E731
        polished = [_polish(r, fn, dfn) for r in roots]
        real = [r.real for r in polished if abs(r.imag) <= 1e-8 * max(1, abs(r))]
        pos = [r for r in real if r > 0]
        if not pos:
            raise NoConvergence(f"no positive root at E={E}, delta={delta}")
        return complex(min(pos, key=lambda r: abs(cubic_y(r, E, delta)))), BULK, False
    ed = edges(delta)
    regime, degenerate = _regime(E, delta, ed)
    if degenerate:
        sign = 1 if abs(E - ed.e_plus) <= abs(E - (ed.e_minus or -1.0)) else -1
        return complex(_edge_value(delta, sign)), regime, True
    q, p = _cardano_qp(E, delta)
    disc = q * q + p**3
    if regime == BULK:
        sq = math.sqrt(max(disc, 0.0))
        x = _OMEGA * branch_cbrt(q + sq) + _OMEGA_BAR * branch_cbrt(q - sq)
    else:
        sq = 1j * math.sqrt(max(-disc, 0.0))
        a = branch_cbrt(q + sq)
        b = branch_cbrt(q - sq)
        if regime == ABOVE_E_PLUS:
            x = a + b
        else:
            x = _OMEGA_BAR * a + _OMEGA * b
        x = complex(x.real, 0.0)
    m = x - 2.0 / 3.0
    scale_tiny = abs(disc) < tol * max(q * q, abs(p) ** 3)
    return m, regime, scale_tiny


def solve_mde_y(
    E: float, params: ParamsLike, *, tol: float = DEFAULT_TOL
) -> StieltjesValue:
    """Boundary value ``m^z(E + i0)`` at a real energy ``E``.

    Inside the support the returned root has ``Im m > 0``; outside it is the
    real root continuous with the bulk branch.  Negative ``E`` returns the
    positive real value of the Stieltjes transform on the negative axis.
    """
    delta = _delta_of(params)
    _require_delta(delta)
    E = float(E)
    m, regime, degenerate = _solve_real_energy(E, delta, tol)
    if not degenerate:
        m = _polish(
            m,
            lambda t: cubic_y(t, E, delta),
            lambda t: _cubic_y_prime(t, E, delta),
        )
    if regime == BULK and m.imag < 0:
        m = m.conjugate()
    if regime != BULK:
        m = complex(m.real, 0.0)
    res = abs(cubic_y(m, E, delta))
    if res > tol * _cubic_y_scale(m, E, delta) and not degenerate:
        raise NoConvergence(
            f"cubic residual {res:.3e} at E={E}, delta={delta} above tolerance"
        )
    return StieltjesValue(m=m, residual=res, degenerate=degenerate)


def cubic_h(m: complex, w: complex, delta: float) -> complex:
    """``m^3 + 2 w m^2 + (w^2 + delta) m + w``, the cubic behind ``m_H``."""
    return ((m + 2 * w) * m + (w * w + delta)) * m + w


def solve_mde_h(
    w: complex, params: ParamsLike, *, tol: float = DEFAULT_TOL
) -> StieltjesValue:
    """Stieltjes transform of the Hermitised matrix at ``Im w > 0``.

    For real positive ``w`` the ``+i0`` value is returned through the
    relation ``m_H(x) = x m^z(x^2)``.
    """
    delta = _delta_of(params)
    _require_delta(delta)
    w = complex(w)
    if w.imag == 0.0:
        if w.real <= 0.0:
            raise DomainError("real w must be positive for the boundary value")
        mz = solve_mde_y(w.real**2, delta, tol=tol)
        m = w.real * mz.m
        return StieltjesValue(
            m=m, residual=abs(cubic_h(m, w, delta)), degenerate=mz.degenerate
        )
    if w.imag < 0.0:
        raise DomainError("solve_mde_h needs Im w >= 0")
    roots = np.roots([1.0, 2 * w, w * w + delta, w])
    fn = lambda t: cubic_h(t, w, delta)  # noqa: E731
    dfn = lambda t: (3 * t + 4 * w) * t + (w * w + delta)  # noqa: E731
    polished = [_polish(complex(r), fn, dfn) for r in roots]
    m = _stieltjes_root(
        polished,
        w,
        lambda t, v: cubic_h(t, v, delta),
        lambda t, v: (3 * t + 4 * v) * t + (v * v + delta),
        half_line=False,
    )
    if m.imag <= 0.0:
        raise NoConvergence(f"no root with Im m > 0 at w={w}")
    res = abs(cubic_h(m, w, delta))
    scale = abs(m) ** 3 + 2 * abs(w) * abs(m) ** 2 + abs(w * w + delta) * abs(m) + abs(w)
    if res > tol * scale:
        raise NoConvergence(f"cubic residual {res:.3e} at w={w}")
    return StieltjesValue(m=m, residual=res)


def solve_mde_y_complex(
    w: complex, params: ParamsLike, *, tol: float = DEFAULT_TOL
) -> StieltjesValue:
    """``m^z(w)`` for ``Im w > 0``: the cubic root in the upper half-plane."""
    delta = _delta_of(params)
    _require_delta(delta)
    w = complex(w)
    if w.imag <= 0.0:
        raise DomainError("solve_mde_y_complex needs Im w > 0")
    roots = np.roots([w, 2 * w, w + delta, 1.0])
    fn = lambda t: cubic_y(t, w, delta)  # noqa: E731
    dfn = lambda t: _cubic_y_prime(t, w, delta)  # noqa: E731
    polished = [_polish(complex(r), fn, dfn) for r in roots]
    m = _stieltjes_root(
        polished,
        w,
        lambda t, v: cubic_y(t, v, delta),
        lambda t, v: _cubic_y_prime(t, v, delta),
        half_line=True,
    )
    res = abs(cubic_y(m, w, delta))
    if m.imag <= 0.0 or res > tol * _cubic_y_scale(m, w, delta):
        raise NoConvergence(f"no admissible root at w={w}")
    return StieltjesValue(m=m, residual=res)


def _stieltjes_root(roots: list[complex], w: complex, cubic, dcubic, *, half_line: bool) -> complex:
    """Pick the root that is the Stieltjes transform of a probability measure.

    Nevanlinna conditions: ``Im m > 0`` and ``|m| <= 1/Im w``; a measure on
    ``[0, inf)`` also has ``Im(w m) >= 0``.  If these leave more than one
    candidate, continue analytically from ``w + i L`` where ``m ~ -1/w``.
    """
    slack = 1e-9
    ok = []
    for r in roots:
        if r.imag <= 0 or abs(r) * w.imag > 1 + slack:
            continue
        if half_line and (w * r).imag < -slack * abs(w * r):
            continue
        ok.append(r)
    if len(ok) == 1:
        return ok[0]
    lift = 10.0 * (1.0 + abs(w))
    m = -1.0 / (w + 1j * lift)
    for t in np.linspace(1.0, 0.0, 201)[1:]:
        wt = w + 1j * lift * t
        for _ in range(30):
            step = cubic(m, wt) / dcubic(m, wt)
            m -= step
            if abs(step) <= 1e-15 * abs(m):
                break
    return min(roots, key=lambda r: abs(r - m))


def psi(r: float) -> complex:
    """Root of ``1 + r psi + psi^3 = 0`` in the open first quadrant."""
    r = float(r)
    if r < 0:
        raise DomainError(f"psi needs r >= 0, got {r}")
    sq = math.sqrt(0.25 + r**3 / 27.0)
    u = float(np.cbrt(-0.5 + sq))
    v = float(np.cbrt(-0.5 - sq))
    if r > 1.0:
        # u + v cancels; use u v = -r/3 and the identity u + v = -1/(u^2 - uv + v^2)
        s = -1.0 / (u * u + r / 3.0 + v * v)
    else:
        s = u + v
    val = complex(-0.5 * s, math.sqrt(3) / 2 * (u - v))
    return _polish(
        val,
        lambda t: 1 + r * t + t**3,
        lambda t: r + 3 * t * t,
        steps=3,
    )


def scale_c(params: ShiftParams) -> float:
    """Critical spectral scale ``min(N^{-3/2}, 1/(N^2 |delta|))``."""
    N = params.N
    d = abs(params.delta)
    base = N ** (-1.5)
    if d == 0.0:
        return base
    return min(base, 1.0 / (N * N * d))


def phase_f(x, w: complex, abs_z2: float):
    """Complex phase ``log((1+x)/x) - |z|^2/(1+x) - w x``."""
    return np.log1p(1.0 / x) - abs_z2 / (1.0 + x) - w * x


def phase_df(x, w: complex, abs_z2: float):
    return 1.0 / (1.0 + x) - 1.0 / x + abs_z2 / (1.0 + x) ** 2 - w


def phase_d2f(x, w: complex, abs_z2: float):
    return -1.0 / (1.0 + x) ** 2 + 1.0 / x**2 - 2.0 * abs_z2 / (1.0 + x) ** 3


def saddle_point(E: float, params: ParamsLike, *, tol: float = DEFAULT_TOL) -> SaddlePoint:
    """Saddle of the complex phase at ``w = E``; equals ``m^z(E + i0)``."""
    delta = _delta_of(params)
    E = float(E)
    if E < 0:
        raise DomainError("saddle_point needs E >= 0")
    sv = solve_mde_y(E, delta, tol=tol)
    if delta == 1.0:
        regime = ABOVE_E_PLUS if E > 4.0 else BULK
    else:
        regime, _ = _regime(E, delta, edges(delta))
    fpp = complex(phase_d2f(sv.m, E, 1.0 - delta))
    return SaddlePoint(
        x_star=sv.m,
        second_derivative=fpp,
        regime_tag=regime,
        degenerate=sv.degenerate,
    )


def density(E: float, params: ParamsLike) -> float:
    """Limiting eigenvalue density of ``Y`` at energy ``E``."""
    delta = _delta_of(params)
    _require_delta(delta)
    E = float(E)
    if E < 0:
        return 0.0
    if E == 0.0:
        if delta < 0:
            return 0.0
        raise DomainError("the density is singular at E = 0 for delta >= 0")
    m = solve_mde_y(E, delta).m
    return max(m.imag, 0.0) / math.pi
