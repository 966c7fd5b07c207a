"""Reference computations that share no code with the integrator.

Everything here uses closed-form solutions from :mod:`scipy.special` and
plain scanning with :func:`scipy.optimize.brentq`. These functions exist to
check the library, never to feed it.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import optimize, special


def bessel_theta_phi(gamma: float, z: float, x: float):
    """``(theta, theta', phi, phi')`` at ``x`` for ``-y'' + (g^2 - 1/4) x^-2 y = z y``.

    Normalized at ``x = 0`` against the seeds ``u = x^(1/2+g)`` and
    ``uhat = x^(1/2-g)/(2g)``; requires ``0 < g < 1``.
    """
    g = float(gamma)
    if not 0.0 < g < 1.0:
        raise ValueError("closed forms need 0 < gamma < 1")
    if z == 0.0:
        th = x ** (0.5 - g) / (2 * g)
        thp = (0.5 - g) * x ** (-0.5 - g) / (2 * g)
        ph = x ** (0.5 + g)
        php = (0.5 + g) * x ** (g - 0.5)
        return th, thp, ph, php
    if z > 0:
        k, J, dJ = math.sqrt(z), special.jv, special.jvp
    else:
        k, J, dJ = math.sqrt(-z), special.iv, special.ivp
    ct = special.gamma(1 - g) * (k / 2) ** g / (2 * g)
    cp = special.gamma(1 + g) * (k / 2) ** (-g)

    def val(nu, c):
        f = c * math.sqrt(x) * J(nu, k * x)
        fp = c * (0.5 / math.sqrt(x) * J(nu, k * x) + math.sqrt(x) * k * dJ(nu, k * x))
        return f, fp

    th, thp = val(-g, ct)
    ph, php = val(g, cp)
    return th, thp, ph, php


def two_interval_determinant(gamma: float, A: float, R0, beta_p: float, z: float) -> float:
    """Matching determinant of ``-y'' + (g^2 - 1/4) x^-2 y`` on ``(-A, 0) U (0, A)``.

    Separated condition with angle ``beta_p`` at both outer ends and the
    transfer ``(g~(0-), g~'(0-)) = R0 (g~(0+), g~'(0+))`` at the interior
    singular point. With ``U_f = cos(b') f(A) - sin(b') f'(A)`` the
    determinant is ``R21 U_phi^2 - (R11 + R22) U_phi U_theta + R12 U_theta^2``.
    """
    th, thp, ph, php = bessel_theta_phi(gamma, z, A)
    c, s = math.cos(beta_p), math.sin(beta_p)
    ut, up = c * th - s * thp, c * ph - s * php
    R = np.asarray(R0, dtype=float)
    return R[1, 0] * up * up - (R[0, 0] + R[1, 1]) * up * ut + R[0, 1] * ut * ut


def scan_roots(fun, z_lo: float, z_hi: float, n: int, step: float):
    """First ``n`` sign changes of ``fun`` on a uniform grid, refined by brentq."""
    roots = []
    zs = np.arange(z_lo, z_hi + step, step)
    prev_z, prev_f = zs[0], fun(zs[0])
    for z in zs[1:]:
        f = fun(z)
        if prev_f == 0.0:
            roots.append(prev_z)
        elif prev_f * f < 0:
            roots.append(optimize.brentq(fun, prev_z, z, xtol=1e-14, rtol=1e-15))
        if len(roots) >= n:
            break
        prev_z, prev_f = z, f
    return np.array(roots[:n])


def two_interval_spectrum(gamma: float, A: float, R0, beta_p: float, n: int,
                          z_lo: float = -50.0, step: float = 0.01) -> np.ndarray:
    """Brute-force root list of :func:`two_interval_determinant`."""
    def f(z):
        return two_interval_determinant(gamma, A, R0, beta_p, z)
    return scan_roots(f, z_lo, 1e5, n, step)


def free_dirichlet(n: int, length: float = 1.0) -> np.ndarray:
    return (np.arange(1, n + 1) * math.pi / length) ** 2


def bessel_zeros(gamma: float, n: int) -> np.ndarray:
    """Positive zeros of ``J_gamma`` by scanning ``scipy.special.jv``."""
    return scan_roots(lambda y: special.jv(gamma, y), 1e-6, 1e4, n, 0.05)


def lamb_zeros(gamma: float, n: int) -> np.ndarray:
    """Positive zeros of ``J_g(y) + 2y J_g'(y)``: Neumann data of ``x^(1/2) J_g(kx)``."""
    def G(y):
        return special.jv(gamma, y) + 2 * y * special.jvp(gamma, y)
    return scan_roots(G, 1e-6, 1e4, n, 0.01)
