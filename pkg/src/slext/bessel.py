"""Bessel functions, Lamb's zeros and the Hardy-type inequality they govern.

The symmetric Bessel problem ``-y'' + (g^2 - 1/4) d(x)^-2 y = z y`` on
``(a, b)``, ``d`` the distance to the boundary, has Friedrichs spectrum
``4 j_{g,k}^2 / (b-a)^2`` (Dirichlet at the midpoint) merged with
``4 lambda_{g,k}^2 / (b-a)^2`` (Neumann at the midpoint), where ``lambda_{g,k}``
are the positive zeros of

    G_g(y) = y^-g [(1 - 2g) J_g(y) + 2y J_{g-1}(y)].

The lowest of these, ``4 lambda_{g,1}^2 / (b-a)^2``, is the sharp constant
``C`` in ``int |f'|^2 >= (1/4 - g^2) int d^-2 |f|^2 + C int |f|^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import Decimal, localcontext

import numpy as np

from .errors import BracketFailure, InequalityViolated
from .specs import PI, Separated
from .spectra import Eigenvalue, Spectrum

__all__ = [
    "LambZero", "RayleighReport", "bessel_j", "bessel_j_zero", "hardy_constant",
    "lamb_G", "lamb_G_derivative_form", "lamb_zero", "rayleigh_verify",
    "symmetric_bessel_friedrichs_spectrum",
]

SERIES_MAX = 12.0
_DIGITS = 40


# ------------------------------------------------------------- J_nu(y)

def _series(nu: float, y: float) -> float:
    # sum (-1)^m (y/2)^(2m) / (m! (nu+1)_m) in 40-digit decimal; the
    # alternating terms reach ~1e4 at y = 12
    with localcontext() as ctx:
        ctx.prec = _DIGITS
        w = (Decimal(y) / 2) ** 2
        d_nu = Decimal(nu)
        term = Decimal(1)
        total = Decimal(1)
        m = 0
        tiny = Decimal(10) ** (-_DIGITS + 2)
        while True:
            m += 1
            term = -term * w / (m * (d_nu + m))
            total += term
            if abs(term) <= Decimal("1e-17") * abs(total) or abs(term) < tiny:
                break
        s = float(total)
    return s * (0.5 * y) ** nu / math.gamma(nu + 1.0)


def _hankel(nu: float, y: float) -> float:
    # J ~ sqrt(2/(pi y)) (P cos chi - Q sin chi), summed to the smallest term
    mu = 4.0 * nu * nu
    P, Q = 1.0, 0.0
    a = 1.0
    last = math.inf
    for k in range(1, 200):
        a *= (mu - (2 * k - 1) ** 2) / (k * 8.0 * y)
        t = abs(a)
        if t > last or a == 0.0:
            break
        sign = -1.0 if (k // 2) % 2 else 1.0
        if k % 2:
            Q += sign * a
        else:
            P += sign * a
        if t < 1e-17:
            break
        last = t
    chi = y - (0.5 * nu + 0.25) * PI
    return math.sqrt(2.0 / (PI * y)) * (P * math.cos(chi) - Q * math.sin(chi))


def bessel_j(gamma, y):
    """Bessel function of the first kind ``J_gamma(y)`` for ``gamma >= -1``.

    Power series (in 40-digit arithmetic) up to ``y = 12``, Hankel's
    asymptotic expansion beyond. Negative integer orders use
    ``J_{-n} = (-1)^n J_n``. Accepts scalars or arrays for ``y``.

    >>> round(bessel_j(0.5, 1.0) - math.sqrt(2 / math.pi) * math.sin(1.0), 14)
    0.0
    >>> bessel_j(0.0, 0.0)
    1.0
    """
    nu = float(gamma)
    if np.ndim(y):
        return np.array([bessel_j(nu, float(v)) for v in np.ravel(y)]).reshape(np.shape(y))
    y = float(y)
    if y < 0:
        raise ValueError("bessel_j needs y >= 0")
    if nu < 0 and nu == round(nu):
        n = int(-nu)
        return (-1) ** n * bessel_j(float(n), y)
    if y == 0.0:
        if nu == 0.0:
            return 1.0
        return 0.0 if nu > 0 else math.copysign(math.inf, math.gamma(nu + 1.0))
    if y <= SERIES_MAX:
        return _series(nu, y)
    return _hankel(nu, y)


def _jp(nu: float, y: float) -> float:
    return 0.5 * (bessel_j(nu - 1.0, y) - bessel_j(nu + 1.0, y))


def _bisect(f, lo: float, hi: float, rel: float = 1e-12, what: str = "root") -> float:
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0:
        raise BracketFailure(f"{what}: no sign change on [{lo:.6g}, {hi:.6g}]")
    while hi - lo > rel * abs(0.5 * (lo + hi)):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def bessel_j_zero(gamma: float, k: int) -> float:
    """``k``-th positive zero of ``J_gamma``.

    Bracketed by ``(k + gamma/2 - 1/4) pi +- pi/2`` and bisected.

    Raises
    ------
    BracketFailure
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    g = float(gamma)
    guess = (k + 0.5 * g - 0.25) * PI
    lo, hi = max(guess - 0.5 * PI, 1e-8), guess + 0.5 * PI
    return _bisect(lambda y: bessel_j(g, y), lo, hi, what=f"j_(gamma={g:g}, k={k})")


# ------------------------------------------------------------ Lamb zeros

def lamb_G(gamma: float, y: float) -> float:
    """``G_g(y) = y^-g [(1 - 2g) J_g(y) + 2y J_{g-1}(y)]``."""
    g = float(gamma)
    return y ** (-g) * ((1.0 - 2.0 * g) * bessel_j(g, y) + 2.0 * y * bessel_j(g - 1.0, y))


def lamb_G_derivative_form(gamma: float, y: float) -> float:
    """``y^-g [J_g(y) + 2y J_g'(y)]``: the same function through ``J_g'``.

    Vanishes exactly when ``x^(1/2) J_g(kx)`` has zero quasi-derivative at
    ``x = y/k``.
    """
    g = float(gamma)
    return y ** (-g) * (bessel_j(g, y) + 2.0 * y * _jp(g, y))


@dataclass(frozen=True)
class LambZero:
    gamma: float
    k: int
    value: float
    residual: float


def lamb_zero(gamma: float, k: int = 1, step: float = 0.05) -> LambZero:
    """``k``-th positive zero of :func:`lamb_G`: scan for sign changes, then bisect.

    Raises
    ------
    BracketFailure
        If fewer than ``k`` sign changes occur below ``(k + 2) pi``.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    g = float(gamma)
    f = lambda y: lamb_G(g, y)  # noqa: E731
    y_prev, f_prev, found = 1e-3, f(1e-3), 0
    y_end = (k + 2) * PI
    while y_prev < y_end:
        y = y_prev + step
        fy = f(y)
        if f_prev * fy <= 0:
            found += 1
            if found == k:
                root = _bisect(f, y_prev, y, what=f"lambda_(gamma={g:g}, k={k})")
                return LambZero(g, k, root, abs(f(root)))
        y_prev, f_prev = y, fy
    raise BracketFailure(f"fewer than {k} zeros of G_{g:g} below {y_end:.4g}")


# ------------------------------------------------------- spectra, Hardy

def symmetric_bessel_friedrichs_spectrum(gamma: float, a: float, b: float, k_max: int) -> Spectrum:
    """Closed-form Friedrichs spectrum of the symmetric Bessel problem.

    Merges ``4 j_{g,k}^2/(b-a)^2`` and ``4 lambda_{g,k}^2/(b-a)^2``, ``k <= k_max``.
    """
    s = 4.0 / (b - a) ** 2
    vals = [s * bessel_j_zero(gamma, k) ** 2 for k in range(1, k_max + 1)]
    vals += [s * lamb_zero(gamma, k).value ** 2 for k in range(1, k_max + 1)]
    eig = [Eigenvalue(v, 1, 0.0) for v in sorted(vals)]
    return Spectrum(eig, (0.0, eig[-1].value), Separated(PI, PI),
                    notes=["closed form from Bessel and Lamb zeros"])


def hardy_constant(gamma: float, a: float, b: float) -> float:
    """``4 lambda_{g,1}^2 / (b-a)^2``."""
    return 4.0 * lamb_zero(gamma, 1).value ** 2 / (b - a) ** 2


@dataclass
class RayleighReport:
    gamma: float
    interval: tuple
    constant: float
    trials: int
    min_margin: float
    worst_coefficients: list
    violations: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations


def rayleigh_verify(gamma: float, a: float, b: float, trial_count: int = 200, seed: int = 42,
                    constant: float | None = None, kmax: int = 12, raise_on_violation: bool = True,
                    n_quad: int = 64) -> RayleighReport:
    """Check the Hardy-type inequality on random sine sums.

    Trial 0 is the fundamental sine; the others have coefficients uniform in
    ``[-1, 1]`` drawn from ``numpy.random.default_rng(seed)``. The margin
    ``int |f'|^2 - (1/4 - g^2) int d^-2 |f|^2 - C int |f|^2`` must be at least
    ``-1e-9 int |f'|^2``.

    Raises
    ------
    InequalityViolated
        With the offending coefficient vector, if ``raise_on_violation``.
    """
    g = float(gamma)
    L = b - a
    C = hardy_constant(g, a, b) if constant is None else float(constant)
    rng = np.random.default_rng(seed)
    coef = rng.uniform(-1.0, 1.0, size=(trial_count, kmax))
    if trial_count:
        coef[0] = 0.0
        coef[0, 0] = 1.0
    ks = np.arange(1, kmax + 1)
    # sine sums are orthogonal: the two plain integrals are exact
    grad = 0.5 * L * (coef ** 2 @ (ks * PI / L) ** 2)
    mass = 0.5 * L * np.sum(coef ** 2, axis=1)
    # f/d is smooth on each half, so Gauss-Legendre converges fast
    t, w = np.polynomial.legendre.leggauss(n_quad)
    h = 0.5 * L
    x_left = a + 0.5 * h * (t + 1.0)
    xs = np.concatenate([x_left, a + b - x_left])
    ws = np.concatenate([w, w]) * 0.5 * h
    d = np.minimum(xs - a, b - xs)
    f = coef @ np.sin(np.outer(ks, xs - a) * PI / L)
    hardy = (f ** 2 / d ** 2) @ ws
    margin = grad - (0.25 - g * g) * hardy - C * mass
    rel = margin / grad
    worst = int(np.argmin(rel))
    bad = [i for i in np.flatnonzero(margin < -1e-9 * grad)]
    report = RayleighReport(g, (a, b), C, trial_count, float(rel[worst]), coef[worst].tolist(),
                            [(int(i), coef[i].tolist(), float(margin[i])) for i in bad])
    if bad and raise_on_violation:
        i = bad[0]
        raise InequalityViolated(
            f"trial {i} violates the inequality with C={C:.12g}: margin {margin[i]:.3e}, "
            f"coefficients {np.array2string(coef[i], precision=6, separator=',')}"
        )
    return report
