"""Modified Bessel functions, the Bessel kernel and the limiting edge kernel.

``bessel_i`` evaluates ``I_0`` and ``I_1`` for complex arguments: a power
series for ``|x| <= 8`` and Miller's backward recurrence (normalised by
``e^x = I_0 + 2 sum_k I_k``) beyond.  The kernel ``K(lambda, mu)`` is a double
contour integral of the Bessel kernel; its diagonal is cross-checked against
``q0``, a separable double integral with elementary integrand.
"""

from __future__ import annotations

import math
from math import factorial

import numpy as np

from .errors import DomainError
from .quadrature import Arc, ComplexPath, Line, QuadResult, Ray, integrate_path, truncate_ray

SERIES_RADIUS = 8.0
_SERIES_TERMS = 60
_RESCALE = 1e200
DIAG_SWITCH = 1e-4
_TAYLOR_ORDER = 10


def _series_orders(x: np.ndarray, nmax: int) -> np.ndarray:
    """``I_0..I_nmax`` by the defining power series, shape ``(nmax+1, *x.shape)``."""
    h2 = (0.5 * x) ** 2
    out = np.empty((nmax + 1,) + x.shape, dtype=complex)
    for n in range(nmax + 1):
        term = (0.5 * x) ** n / factorial(n)
        acc = term.copy()
        for k in range(1, _SERIES_TERMS):
            term = term * h2 / (k * (k + n))
            acc = acc + term
        out[n] = acc
    return out


def _miller_orders(x: np.ndarray, nmax: int, scaled: bool) -> np.ndarray:
    """``I_0..I_nmax`` by backward recurrence; ``scaled`` multiplies by ``e^{-|Re x|}``."""
    start = int(np.max(np.abs(x))) + 60 + nmax
    nxt = np.zeros(x.shape, dtype=complex)
    cur = np.full(x.shape, 1e-300 + 0j)
    out = np.empty((nmax + 1,) + x.shape, dtype=complex)
    norm = np.zeros(x.shape, dtype=complex)
    for n in range(start, 0, -1):
        prev = (2.0 * n / x) * cur + nxt
        nxt, cur = cur, prev
        # cur now holds I_{n-1}
        if n - 1 <= nmax:
            out[n - 1] = cur
        if n - 1 >= 1:
            norm = norm + 2.0 * cur
        big = np.abs(cur) > _RESCALE
        if big.any():
            s = np.where(big, 1.0 / _RESCALE, 1.0)
            cur, nxt, norm = cur * s, nxt * s, norm * s
            lo = min(n - 1, nmax + 1)
            out[lo:] = out[lo:] * s
    norm = norm + cur
    # exp(x) = I_0 + 2 sum I_k; scaled values carry exp(x - |Re x|)
    if scaled:
        factor = np.exp(x - np.abs(x.real)) / norm
    else:
        factor = np.exp(x) / norm
    return out * factor


def bessel_orders(x, nmax: int = 1, *, scaled: bool = False) -> np.ndarray:
    """``I_0(x) .. I_nmax(x)`` for complex ``x``; leading axis is the order."""
    x = np.asarray(x, dtype=complex)
    flat = x.ravel()
    out = np.empty((nmax + 1, flat.size), dtype=complex)
    small = np.abs(flat) <= SERIES_RADIUS
    if small.any():
        vals = _series_orders(flat[small], nmax)
        if scaled:
            vals = vals * np.exp(-np.abs(flat[small].real))
        out[:, small] = vals
    if (~small).any():
        # the recurrence is normalised through e^x, so work with Re x >= 0
        big = flat[~small]
        flip = big.real < 0
        vals = _miller_orders(np.where(flip, -big, big), nmax, scaled)
        parity = (-1.0) ** np.arange(nmax + 1)
        vals = np.where(flip[None, :], parity[:, None] * vals, vals)
        out[:, ~small] = vals
    return out.reshape((nmax + 1,) + x.shape)


def bessel_i(order: int, x, *, scaled: bool = False):
    """Modified Bessel function ``I_order(x)`` for ``order`` in {0, 1}.

    With ``scaled=True`` the value is multiplied by ``exp(-|Re x|)``, which
    avoids overflow for large real parts.
    """
    if order not in (0, 1):
        raise DomainError(f"order must be 0 or 1, got {order}")
    x_arr = np.asarray(x, dtype=complex)
    if not scaled and np.any(np.abs(x_arr.real) > 700.0):
        raise OverflowError("I_n overflows; call with scaled=True")
    val = bessel_orders(x_arr, 1, scaled=scaled)[order]
    return complex(val) if np.ndim(x) == 0 else val


def _derivative_table(orders: np.ndarray, nu: int, k: int) -> np.ndarray:
    # d^k I_nu = 2^{-k} sum_j C(k, j) I_{nu + k - 2j}, with I_{-m} = I_m
    acc = 0
    for j in range(k + 1):
        acc = acc + math.comb(k, j) * orders[abs(nu + k - 2 * j)]
    return acc / 2.0**k


def kernel_kb(x, y):
    """Bessel kernel ``(x I1(x) I0(y) - y I0(x) I1(y)) / (x^2 - y^2)``.

    Near the diagonals ``y = +-x`` the quotient is replaced by a Taylor
    expansion of the numerator, and near the origin by the double series.
    """
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    x, y = np.broadcast_arrays(x, y)
    scalar = x.ndim == 0
    out_shape = x.shape
    x = np.atleast_1d(x).ravel()
    y = np.atleast_1d(y).ravel()
    out = np.empty(x.shape, dtype=complex)
    near = np.abs(x * x - y * y) < DIAG_SWITCH * (np.abs(x) ** 2 + np.abs(y) ** 2 + 1.0)
    far = ~near
    if far.any():
        xf, yf = x[far], y[far]
        bx = bessel_orders(xf, 1)
        by = bessel_orders(yf, 1)
        out[far] = (xf * bx[1] * by[0] - yf * bx[0] * by[1]) / (xf * xf - yf * yf)
    if near.any():
        out[near] = _kb_near_diagonal(x[near], y[near])
    res = out.reshape(out_shape)
    return complex(res) if scalar else res


def _kb_origin(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    # sum_{j,k} (x/2)^{2j} (y/2)^{2k} / ((j!)^2 (k!)^2 2 (j + k + 1))
    hx = (0.5 * x) ** 2
    hy = (0.5 * y) ** 2
    acc = np.zeros(x.shape, dtype=complex)
    tx = np.ones(x.shape, dtype=complex)
    for j in range(20):
        ty = np.ones(x.shape, dtype=complex)
        for k in range(20):
            acc = acc + tx * ty / (2.0 * (j + k + 1))
            ty = ty * hy / ((k + 1) ** 2)
        tx = tx * hx / ((j + 1) ** 2)
    return acc


def _kb_near_diagonal(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    # K_B is even in each argument: reflect y so that y is close to x
    y = np.where(np.abs(y + x) < np.abs(y - x), -y, y)
    out = np.empty(x.shape, dtype=complex)
    origin = (np.abs(x) + np.abs(y)) < 1.0
    if origin.any():
        out[origin] = _kb_origin(x[origin], y[origin])
    rest = ~origin
    if rest.any():
        xr, yr = x[rest], y[rest]
        h = yr - xr
        orders = bessel_orders(xr, _TAYLOR_ORDER + 2)
        i0, i1 = orders[0], orders[1]
        d0 = [_derivative_table(orders, 0, k) for k in range(_TAYLOR_ORDER + 1)]
        d1 = [_derivative_table(orders, 1, k) for k in range(_TAYLOR_ORDER + 1)]
        acc = np.zeros(xr.shape, dtype=complex)
        hp = np.ones(xr.shape, dtype=complex)
        for n in range(1, _TAYLOR_ORDER + 1):
            c = (xr * i1 * d0[n] - xr * i0 * d1[n] - n * i0 * d1[n - 1]) / factorial(n)
            acc = acc + c * hp
            hp = hp * h
        # x^2 - y^2 = -h (2x + h)
        out[rest] = -acc / (2.0 * xr + h)
    return out


def _ray_len(power_scale: float, tol: float) -> float:
    return truncate_ray(power_scale, tol, power=4.0)


def _gamma_prime(length: float) -> ComplexPath:
    dirs = [np.exp(1j * np.pi * k / 4) for k in (1, 3, 5, 7)]
    return ComplexPath(
        [
            Ray(0j, dirs[0], length, inward=True),
            Ray(0j, dirs[1], length),
            Ray(0j, dirs[2], length, inward=True),
            Ray(0j, dirs[3], length),
        ]
    )


def _gamma_imag(length: float) -> ComplexPath:
    return ComplexPath([Ray(0j, 1j, length), Ray(0j, -1j, length)])


def limiting_kernel_quad(
    lam: float,
    mu: float,
    *,
    tol: float = 1e-10,
    upper_only: bool = False,
) -> QuadResult:
    """Double contour integral for ``K(lam, mu)``, returned with its error.

    ``upper_only=True`` integrates the two upper-half-plane x-rays and
    returns twice the real part, using the conjugation symmetry of the
    contour.
    """
    if not (lam > 0 and mu > 0):
        raise DomainError("K(lambda, mu) needs lambda, mu > 0")
    length = _ray_len(1.0, 1e-17)
    sl = 2.0 * math.sqrt(lam)
    sm = 2.0 * math.sqrt(mu)
    y_path = _gamma_imag(length)

    def inner(xs: np.ndarray) -> np.ndarray:
        def g(ys: np.ndarray) -> np.ndarray:
            X = xs[:, None]
            Y = ys[None, :]
            kb = kernel_kb(sl * X, sm * Y)
            return kb * np.exp(X**4 / 2 - Y**4 / 2) * X * Y * (X * X + Y * Y)

        return integrate_path(g, y_path, tol * 1e-2, tol * 1e-2, tail_check=False, rel_to="l1").value

    x_path = _gamma_prime(length)
    if upper_only:
        x_path = ComplexPath(x_path.segments[:2])
    res = integrate_path(inner, x_path, tol, tol, tail_check=False, rel_to="l1")
    val = 1j / math.pi * res.value
    err = res.abs_err / math.pi
    if upper_only:
        val = 2.0 * val.real
        err = 2.0 * err
    return QuadResult(complex(val), float(err), res.n_evals)


def limiting_kernel(lam: float, mu: float, *, tol: float = 1e-10) -> float:
    """Limiting kernel ``K(lam, mu)``; the imaginary part is discarded."""
    return limiting_kernel_quad(lam, mu, tol=tol).value.real


def q0_contours(radius: float = 1.0, x_turn: float = 1.0, length: float = 60.0):
    """x-path ``[0, x_turn]`` then a ray to ``e^{3 i pi/4} infinity``; closed D-shaped y-path.

    The y-path runs counter-clockwise along the right half circle of the
    given radius from ``-i r`` to ``i r`` and returns down the imaginary
    axis through the essential singularity at 0, where the integrand decays.
    """
    x_path = ComplexPath(
        [Line(0j, complex(x_turn), pieces=4), Ray(complex(x_turn), np.exp(3j * np.pi / 4), length)]
    )
    y_path = ComplexPath(
        [
            Arc(0j, radius, -np.pi / 2, np.pi / 2),
            Line(1j * radius, 0j, pieces=4),
            Line(0j, -1j * radius, pieces=4),
        ]
    )
    return x_path, y_path


def q0_quad(lam: float, *, tol: float = 1e-12, radius: float = 1.0) -> QuadResult:
    """``q0(lam)`` with error estimate; see :func:`q0`."""
    if not lam > 0:
        raise DomainError("q0 needs lambda > 0")
    c = lam ** (2.0 / 3.0)
    # the ray integrand decays like exp(-c t / sqrt 2)
    length = truncate_ray(math.sqrt(2.0) / c, 1e-18, envelope_const=10.0)
    x_path, y_path = q0_contours(radius=radius, length=max(length, 2.0))

    def fx(x):
        e = np.exp(c * (x - 0.5 / (x * x)))
        return np.stack([e / x, e / x**2, e / x**3])

    def fy(y):
        e = np.exp(c * (-y + 0.5 / (y * y)))
        return np.stack([e, e / y, e / y**2])

    X = integrate_path(fx, x_path, tol, tol)
    Y = integrate_path(fy, y_path, tol, tol)
    x1, x2, x3 = X.value
    y0, y1, y2 = Y.value
    pref = lam ** (1.0 / 3.0) / (2j * math.pi)
    val = pref * (x3 * y0 + x2 * y1 + x1 * y2)
    ex, ey = X.abs_err, Y.abs_err
    err = abs(pref) * (
        ex[2] * abs(y0) + ex[1] * abs(y1) + ex[0] * abs(y2)
        + abs(x3) * ey[0] + abs(x2) * ey[1] + abs(x1) * ey[2]
    )
    return QuadResult(complex(val), float(err), X.n_evals + Y.n_evals)


def q0(lam: float, *, tol: float = 1e-12) -> complex:
    """Rescaled critical one-point function at ``|z| = 1``.

    ``q0(lam) = lam^{1/3}/(2 pi i) int dx oint dy
    exp(lam^{2/3}(-y + 1/(2y^2) + x - 1/(2x^2))) (1/x^3 + 1/(x^2 y) + 1/(x y^2))``;
    ``Im q0 / pi`` is the limiting density on the scale ``N^{-3/2}``.
    """
    return q0_quad(lam, tol=tol).value
