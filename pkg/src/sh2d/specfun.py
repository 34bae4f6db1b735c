"""Scalar special functions behind the 2D Green function.

K0 uses the ascending series (with its logarithmic part) for x <= 2 and the
Steed/Temme continued fraction for x > 2. Both are accurate to a few ulp on
the whole positive axis, so no external special-function library is needed.
"""

import cmath
import math

import numpy as np

EULER_GAMMA = 0.5772156649015329

_SERIES_SWITCH = 2.0
_MAXIT = 10_000
_EPS = 1e-17


def _check_positive(name, x):
    if not math.isfinite(x) or x <= 0.0:
        raise ValueError(f"{name} must be positive and finite, got {x!r}")


def _k0_series(x):
    # K0(x) = -(ln(x/2) + gamma) I0(x) + sum_k (x^2/4)^k / (k!)^2 * H_k
    y = 0.25 * x * x
    term = 1.0
    i0 = 1.0
    tail = 0.0
    harmonic = 0.0
    k = 0
    while True:
        k += 1
        term *= y / (k * k)
        harmonic += 1.0 / k
        i0 += term
        tail += term * harmonic
        if term * harmonic <= _EPS * tail and term <= _EPS * i0:
            break
    return -(math.log(0.5 * x) + EULER_GAMMA) * i0 + tail


def _k0_cf2(x):
    # Steed's evaluation of the second continued fraction (Temme 1975), nu = 0.
    b = 2.0 * (1.0 + x)
    d = 1.0 / b
    h = delh = d
    q1, q2 = 0.0, 1.0
    a1 = 0.25
    q = c = a1
    a = -a1
    s = 1.0 + q * delh
    for i in range(2, _MAXIT):
        a -= 2 * (i - 1)
        c = -a * c / i
        qnew = (q1 - b * q2) / a
        q1, q2 = q2, qnew
        q += c * qnew
        b += 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h += delh
        dels = q * delh
        s += dels
        if abs(dels / s) < _EPS:
            break
    else:  # pragma: no cover - the fraction converges in < 100 terms for x > 2
        raise ArithmeticError(f"K0 continued fraction did not converge at x={x}")
    return math.sqrt(math.pi / (2.0 * x)) * math.exp(-x) / s


def _k0_scalar(x):
    x = float(x)
    _check_positive("x", x)
    if x <= _SERIES_SWITCH:
        return _k0_series(x)
    if x > 745.0:
        return 0.0
    return _k0_cf2(x)


def bessel_k0(x):
    """Modified Bessel function of the second kind, order zero.

    Parameters
    ----------
    x : float or array_like
        Positive, finite argument(s).

    Returns
    -------
    float or ndarray
        K0(x). Underflows cleanly to 0 for very large arguments.

    Raises
    ------
    ValueError
        If any argument is non-positive or not finite.
    """
    if np.ndim(x) == 0:
        return _k0_scalar(x)
    arr = np.asarray(x, dtype=float)
    out = np.empty_like(arr)
    flat = out.reshape(-1)
    for i, xi in enumerate(arr.reshape(-1)):
        flat[i] = _k0_scalar(xi)
    return out


def green_value(omega, r):
    """Free 2D Green function of ``-Laplacian + omega`` at distance ``r``."""
    _check_positive("omega", float(omega))
    if np.ndim(r) == 0:
        _check_positive("r", float(r))
        return bessel_k0(float(r) * math.sqrt(omega)) / (2.0 * math.pi)
    return bessel_k0(np.asarray(r, dtype=float) * math.sqrt(omega)) / (2.0 * math.pi)


def beta(alpha, omega):
    """Rank-one coefficient ``alpha + gamma/2pi + ln(sqrt(omega)/2)/2pi``.

    Principal branches are used for both the square root and the logarithm,
    so the value is analytic off the negative real axis and real for
    ``omega > 0``. A real result is returned for real positive ``omega``.
    """
    if not math.isfinite(alpha):
        raise ValueError(f"alpha must be finite, got {alpha!r}")
    if isinstance(omega, complex) or np.iscomplexobj(omega):
        w = complex(omega)
        if w == 0:
            raise ValueError("beta is singular at omega = 0")
        return alpha + EULER_GAMMA / (2 * math.pi) + cmath.log(cmath.sqrt(w) / 2) / (2 * math.pi)
    w = float(omega)
    if w == 0.0:
        raise ValueError("beta is singular at omega = 0")
    if w < 0.0:
        return beta(alpha, complex(w))
    return alpha + EULER_GAMMA / (2 * math.pi) + math.log(math.sqrt(w) / 2) / (2 * math.pi)


def e_alpha(alpha):
    """The negative eigenvalue ``-4 exp(-2(2 pi alpha + gamma))``."""
    if not math.isfinite(alpha):
        raise ValueError(f"alpha must be finite, got {alpha!r}")
    return -4.0 * math.exp(-2.0 * (2.0 * math.pi * alpha + EULER_GAMMA))
