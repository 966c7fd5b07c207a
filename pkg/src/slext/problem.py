"""Sturm-Liouville problems: interval, coefficients and endpoint seeds.

A problem is the differential expression ``(1/r)[-(p y')' + q y]`` on a finite
interval together with, at each endpoint, a principal solution ``u`` and a
nonprincipal solution ``uhat`` of ``tau u = 0`` normalised by
``W(uhat, u) = 1`` with ``W(f, g) = f g^[1] - f^[1] g`` and ``g^[1] = p g'``.

Seeds are callables of the distance ``t >= 0`` from their endpoint and return
the pair ``(y, y^[1])``, where the quasi-derivative is always taken with
respect to ``x``. Working in ``t`` keeps full relative precision next to
endpoints that are not at the origin.
"""

from __future__ import annotations

import enum
import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
from scipy import integrate

from .config import NumericsConfig, resolve
from .errors import (
    GammaOutOfRange,
    NonPositiveCoefficient,
    ProblemFileError,
    WronskianNotNormalized,
)
from .expr import compile_expression

SeedFn = Callable[[np.ndarray], tuple]


class Endpoint(enum.Enum):
    LEFT = "a"
    RIGHT = "b"

    @classmethod
    def parse(cls, value) -> "Endpoint":
        if isinstance(value, Endpoint):
            return value
        key = str(value).strip().lower()
        if key in ("a", "left", "l"):
            return cls.LEFT
        if key in ("b", "right", "r"):
            return cls.RIGHT
        raise ValueError(f"unknown endpoint {value!r}")

    @property
    def sigma(self) -> int:
        """+1 if x increases with the distance t, -1 otherwise."""
        return 1 if self is Endpoint.LEFT else -1

    @property
    def other(self) -> "Endpoint":
        return Endpoint.RIGHT if self is Endpoint.LEFT else Endpoint.LEFT


class EndpointKind(enum.Enum):
    REGULAR = "Regular"
    LIMIT_CIRCLE = "LimitCircleNonOsc"
    UNKNOWN = "Unknown"


@dataclass(frozen=True)
class Interval:
    left: float
    right: float

    def __post_init__(self):
        if not (math.isfinite(self.left) and math.isfinite(self.right)):
            raise ProblemFileError("interval endpoints must be finite")
        if not self.left < self.right:
            raise ProblemFileError(f"empty interval ({self.left}, {self.right})")

    @property
    def length(self) -> float:
        return self.right - self.left

    @property
    def mid(self) -> float:
        return 0.5 * (self.left + self.right)


@dataclass(frozen=True)
class CoefficientSet:
    """Coefficients ``p, q, r`` as vectorised callables of ``x``.

    ``breakpoints`` lists interior points where a coefficient is not smooth;
    the integrator restarts there.
    """

    p: Callable
    q: Callable
    r: Callable
    breakpoints: tuple = ()


@dataclass(frozen=True)
class EndpointSeed:
    kind: EndpointKind
    principal: SeedFn
    nonprincipal: SeedFn
    seed_offset: float | None = None
    reach: float | None = None
    description: str = ""


@dataclass(frozen=True)
class Problem:
    interval: Interval
    coeffs: CoefficientSet
    seed_a: EndpointSeed
    seed_b: EndpointSeed
    label: str = ""
    family: str = "custom"
    gamma: float | None = None
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def a(self) -> float:
        return self.interval.left

    @property
    def b(self) -> float:
        return self.interval.right

    @property
    def length(self) -> float:
        return self.interval.length

    def seed(self, which) -> EndpointSeed:
        return self.seed_a if Endpoint.parse(which) is Endpoint.LEFT else self.seed_b

    def endpoint(self, which) -> float:
        return self.a if Endpoint.parse(which) is Endpoint.LEFT else self.b

    def x_of(self, which, t):
        e = Endpoint.parse(which)
        return self.endpoint(e) + e.sigma * np.asarray(t, dtype=float)

    def offset(self, which, cfg: NumericsConfig | None = None) -> float:
        s = self.seed(which)
        if s.seed_offset is not None:
            return float(s.seed_offset)
        return resolve(cfg).seed_offset_rel * self.length

    def reach(self, which, cfg: NumericsConfig | None = None) -> float:
        cfg = resolve(cfg)
        r = cfg.seed_reach_rel * self.length
        s = self.seed(which)
        if s.reach is not None:
            r = min(r, float(s.reach))
        return r

    def seed_values(self, which, t):
        """Return ``(uhat, uhat1, u, u1)`` at distances ``t`` from ``which``."""
        s = self.seed(which)
        t = np.asarray(t, dtype=float)
        uh, uh1 = s.nonprincipal(t)
        u, u1 = s.principal(t)
        return (np.broadcast_to(uh, t.shape), np.broadcast_to(uh1, t.shape),
                np.broadcast_to(u, t.shape), np.broadcast_to(u1, t.shape))

    def r_at(self, which, t):
        return np.asarray(self.coeffs.r(self.x_of(which, t)), dtype=float)

    def seed_scalar(self, which: Endpoint, t: float):
        """Fast scalar version of :meth:`seed_values` plus ``r``: five floats."""
        s = self.seed_a if which is Endpoint.LEFT else self.seed_b
        uh, uh1 = s.nonprincipal(t)
        u, u1 = s.principal(t)
        x = (self.interval.left + t) if which is Endpoint.LEFT else (self.interval.right - t)
        return float(uh), float(uh1), float(u), float(u1), float(self.coeffs.r(x))

    def tail_integrals(self, which, cfg: NumericsConfig | None = None):
        """Integrals of ``r*uhat^2, r*uhat*u, r*u^2`` over the first seed offset.

        These replace integration on ``(0, offset)`` next to the endpoint.
        """
        e = Endpoint.parse(which)
        eps = self.offset(e, cfg)
        key = ("tail", e, eps)
        if key not in self._cache:
            out = []
            for k in range(3):
                def f(t, k=k):
                    uh, _, u, _ = self.seed_values(e, t)
                    w = float(self.r_at(e, t))
                    return w * (uh * uh, uh * u, u * u)[k]
                with warnings.catch_warnings():
                    # the integrands are tiny here; roundoff warnings are harmless
                    warnings.simplefilter("ignore", integrate.IntegrationWarning)
                    val, _ = integrate.quad(f, 0.0, eps, epsabs=0.0, epsrel=1e-11, limit=200)
                out.append(float(val))
            self._cache[key] = tuple(out)
        return self._cache[key]

    def breakpoints(self):
        return tuple(sorted(x for x in self.coeffs.breakpoints if self.a < x < self.b))


# ---------------------------------------------------------------- validation

def _probe_points(interval: Interval, n: int = 64):
    return interval.left + interval.length * (np.arange(1, n + 1) / (n + 1))


def make_problem(
    interval: Interval,
    coeffs: CoefficientSet,
    seed_a: EndpointSeed,
    seed_b: EndpointSeed,
    label: str = "",
    family: str = "custom",
    gamma: float | None = None,
    cfg: NumericsConfig | None = None,
) -> Problem:
    """Validate coefficients and seeds and build a :class:`Problem`.

    Raises
    ------
    NonPositiveCoefficient
        If ``p`` or ``r`` is not positive at an interior probe point.
    WronskianNotNormalized
        If ``|W(uhat, u) - 1| > 1e-6`` at a probe point of either seed.
    """
    xs = _probe_points(interval)
    for name in ("p", "r"):
        vals = np.asarray(getattr(coeffs, name)(xs), dtype=float) * np.ones_like(xs)
        if not np.all(np.isfinite(vals)) or np.any(vals <= 0):
            bad = xs[~(np.isfinite(vals) & (vals > 0))][0]
            raise NonPositiveCoefficient(f"{name}({bad:.6g}) is not positive")
    prob = Problem(interval, coeffs, seed_a, seed_b, label, family, gamma)
    for e in Endpoint:
        eps, reach = prob.offset(e, cfg), prob.reach(e, cfg)
        ts = np.geomspace(eps, reach, 10)
        uh, uh1, u, u1 = prob.seed_values(e, ts)
        w = uh * u1 - uh1 * u
        if not np.all(np.isfinite(w)) or np.max(np.abs(w - 1.0)) > 1e-6:
            raise WronskianNotNormalized(
                f"W(uhat, u) at endpoint {e.value} deviates from 1 (max |W-1| = "
                f"{np.max(np.abs(w - 1.0)):.3g})"
            )
    return prob


# --------------------------------------------------------------------- seeds

def bessel_seed(gamma: float, reach: float | None = None) -> EndpointSeed:
    """Closed-form seeds of ``-y'' + (gamma^2 - 1/4) t^-2 y = 0`` at ``t = 0``.

    ``u = t^(1/2+gamma)``; ``uhat = t^(1/2-gamma) / (2 gamma)`` or
    ``t^(1/2) ln(1/t)`` when ``gamma = 0``.
    """
    g = float(gamma)
    pu = 0.5 + g

    def principal(t):
        return np.power(t, pu), pu * np.power(t, pu - 1.0)

    if g == 0.0:
        def nonprincipal(t):
            lg = -np.log(t)
            s = np.sqrt(t)
            return s * lg, (0.5 * lg - 1.0) / s
    else:
        pn = 0.5 - g

        def nonprincipal(t):
            return np.power(t, pn) / (2 * g), pn / (2 * g) * np.power(t, pn - 1.0)

    kind = EndpointKind.LIMIT_CIRCLE if g != 0.5 else EndpointKind.REGULAR
    return EndpointSeed(kind, principal, nonprincipal, reach=reach,
                        description=f"bessel(gamma={g:g})")


def reflect_seed(seed: EndpointSeed) -> EndpointSeed:
    """Seed at the right endpoint obtained by mirroring a left seed.

    With ``P f(x) = f(a + b - x)`` the pair ``(P uhat, -P u)`` again has unit
    Wronskian; this is the convention under which an even function ``g`` has
    ``g~(b) = g~(a)`` and ``g~'(b) = -g~'(a)``.
    """

    def principal(t):
        y, y1 = seed.principal(t)
        return -y, y1

    def nonprincipal(t):
        y, y1 = seed.nonprincipal(t)
        return y, -y1

    return EndpointSeed(seed.kind, principal, nonprincipal, seed.seed_offset,
                        seed.reach, f"reflected {seed.description}".strip())


def seed_from_basis(basis, which: Endpoint, xe: float, reach=None,
                    kind=EndpointKind.REGULAR, description="") -> EndpointSeed:
    """Regular seed at ``xe`` built from two solutions valid up to ``xe``.

    ``basis`` is a pair of callables of ``x`` returning ``(y, y^[1])``. The
    result has ``u(xe) = 0, u^[1](xe) = 1, uhat(xe) = 1, uhat^[1](xe) = 0`` so
    generalized boundary values reduce to the classical ``g``, ``p g'``.
    """
    f1, f2 = basis
    y1, d1 = (float(v) for v in f1(np.asarray(xe)))
    y2, d2 = (float(v) for v in f2(np.asarray(xe)))
    m = np.linalg.solve(np.array([[y1, y2], [d1, d2]]), np.eye(2))
    sig = which.sigma

    def combo(col):
        c1, c2 = m[0, col], m[1, col]

        def fn(t):
            x = xe + sig * t
            a1, b1 = f1(x)
            a2, b2 = f2(x)
            return c1 * a1 + c2 * a2, c1 * b1 + c2 * b2
        return fn

    return EndpointSeed(kind, combo(1), combo(0), reach=reach, description=description)


def constant_coefficient_seed(p0: float, q0: float, which: Endpoint) -> EndpointSeed:
    """Regular seed for ``-p0 y'' + q0 y = 0``."""
    k2 = q0 / p0

    if k2 > 0:
        k = math.sqrt(k2)

        def nonprincipal(t):
            return np.cosh(k * t), p0 * k * np.sinh(k * t)

        def principal(t):
            return np.sinh(k * t) / (k * p0), np.cosh(k * t)
    elif k2 < 0:
        k = math.sqrt(-k2)

        def nonprincipal(t):
            return np.cos(k * t), -p0 * k * np.sin(k * t)

        def principal(t):
            return np.sin(k * t) / (k * p0), np.cos(k * t)
    else:
        def nonprincipal(t):
            return 1.0 + 0.0 * t, 0.0 * t

        def principal(t):
            return t / p0, 1.0 + 0.0 * t

    seed = EndpointSeed(EndpointKind.REGULAR, principal, nonprincipal,
                        description="constant coefficients")
    return seed if which is Endpoint.LEFT else reflect_seed(seed)


def numeric_regular_seed(coeffs: CoefficientSet, which: Endpoint, xe: float,
                         reach: float, cfg: NumericsConfig | None = None) -> EndpointSeed:
    """Regular seed obtained by integrating ``tau u = 0`` away from ``xe``.

    Only valid when ``p, q, r`` are finite at ``xe``.
    """
    cfg = resolve(cfg)
    sig = which.sigma
    x_probe = xe + sig * np.array([0.0, 0.5 * reach])
    vals = [np.asarray(f(x_probe), dtype=float) * np.ones(2) for f in (coeffs.p, coeffs.q)]
    if not all(np.all(np.isfinite(v)) for v in vals) or np.any(vals[0] <= 0):
        raise ProblemFileError(
            f"coefficients are not regular at x={xe:g}; supply seeds for this endpoint"
        )

    def rhs(t, s):
        x = xe + sig * t
        p = float(coeffs.p(np.asarray(x)))
        q = float(coeffs.q(np.asarray(x)))
        return np.array([sig * s[1] / p, sig * q * s[0], sig * s[3] / p, sig * q * s[2]])

    sol = integrate.solve_ivp(rhs, (0.0, reach), [1.0, 0.0, 0.0, 1.0], method=cfg.method,
                              rtol=min(cfg.rtol, 1e-12), atol=1e-15, dense_output=True)
    dense = sol.sol

    def nonprincipal(t):
        v = dense(np.asarray(t, dtype=float))
        return v[0], v[1]

    def principal(t):
        v = dense(np.asarray(t, dtype=float))
        return v[2], v[3]

    return EndpointSeed(EndpointKind.REGULAR, principal, nonprincipal, reach=reach,
                        description="numerical regular seed")


# ----------------------------------------------------------------- built-ins

def _check_gamma(gamma: float) -> float:
    g = float(gamma)
    if not (0.0 <= g < 1.0):
        raise GammaOutOfRange(f"gamma={gamma!r} is outside [0, 1)")
    return g


def _bessel_basis(g: float, a: float):
    """Two solutions of the Bessel expression as callables of ``x``."""
    s = bessel_seed(g)

    def shift(fn):
        return lambda x: fn(np.asarray(x, dtype=float) - a)
    return shift(s.principal), shift(s.nonprincipal)


def builtin_bessel(gamma: float, a: float = 0.0, d: float = 1.0) -> Problem:
    """``-y'' + (gamma^2 - 1/4)(x-a)^-2 y`` on ``(a, d)``, singular at ``a`` only."""
    g = _check_gamma(gamma)
    iv = Interval(float(a), float(d))
    c2 = g * g - 0.25
    coeffs = CoefficientSet(p=_one, q=lambda x: c2 / (x - a) ** 2, r=_one)
    seed_a = bessel_seed(g)
    seed_b = seed_from_basis(_bessel_basis(g, iv.left), Endpoint.RIGHT, iv.right,
                             description="regular, from bessel basis")
    return make_problem(iv, coeffs, seed_a, seed_b,
                        label=f"bessel(gamma={g:g}) on ({iv.left:g},{iv.right:g})",
                        family="bessel", gamma=g)


def _one(x):
    return 1.0 + 0.0 * x


def distance_to_boundary(x, a: float, b: float):
    return np.minimum(x - a, b - x)


def builtin_symmetric_bessel(gamma: float, a: float = 0.0, b: float = 2.0) -> Problem:
    """``-y'' + (gamma^2 - 1/4) d(x)^-2 y`` with ``d`` the distance to the boundary."""
    g = _check_gamma(gamma)
    iv = Interval(float(a), float(b))
    c2 = g * g - 0.25
    coeffs = CoefficientSet(p=_one, q=lambda x: c2 / distance_to_boundary(x, a, b) ** 2,
                            r=_one, breakpoints=(iv.mid,))
    half = 0.5 * iv.length
    seed_a = bessel_seed(g, reach=half)
    seed_b = reflect_seed(seed_a)
    return make_problem(iv, coeffs, seed_a, seed_b,
                        label=f"symmetric bessel(gamma={g:g}) on ({iv.left:g},{iv.right:g})",
                        family="symmetric_bessel", gamma=g)


def builtin_regular(interval, p0: float = 1.0, q0: float = 0.0, r0: float = 1.0) -> Problem:
    """Constant-coefficient regular problem ``(1/r0)(-p0 y'' + q0 y)``."""
    iv = interval if isinstance(interval, Interval) else Interval(*map(float, interval))
    if not (p0 > 0 and r0 > 0):
        raise NonPositiveCoefficient(f"p0={p0}, r0={r0} must be positive")
    coeffs = CoefficientSet(p=lambda x: p0 + 0.0 * x, q=lambda x: q0 + 0.0 * x,
                            r=lambda x: r0 + 0.0 * x)
    return make_problem(
        iv, coeffs,
        constant_coefficient_seed(p0, q0, Endpoint.LEFT),
        constant_coefficient_seed(p0, q0, Endpoint.RIGHT),
        label=f"regular(p={p0:g},q={q0:g},r={r0:g}) on ({iv.left:g},{iv.right:g})",
        family="regular",
    )


def builtin_free(a: float = 0.0, b: float = 1.0) -> Problem:
    """``-y''`` on ``(a, b)`` with seeds ``u = x - a`` and ``uhat = 1``."""
    return builtin_regular(Interval(a, b), 1.0, 0.0, 1.0)


# ------------------------------------------------------------ classification

def classify_endpoint(problem: Problem, which) -> EndpointKind:
    """Probe-based, advisory classification of an endpoint."""
    e = Endpoint.parse(which)
    L = problem.length
    ts = L * 10.0 ** -np.arange(2, 9)
    xs = problem.x_of(e, ts)
    with np.errstate(all="ignore"):
        p = np.asarray(problem.coeffs.p(xs), dtype=float) * np.ones_like(xs)
        q = np.asarray(problem.coeffs.q(xs), dtype=float) * np.ones_like(xs)
        r = np.asarray(problem.coeffs.r(xs), dtype=float) * np.ones_like(xs)
    finite = np.all(np.isfinite(p)) and np.all(np.isfinite(q)) and np.all(np.isfinite(r))
    if finite and np.all(p > 0) and np.all(r > 0):
        bounded = lambda v: np.max(np.abs(v)) <= 10.0 * (abs(v[0]) + 1.0)
        if bounded(q) and bounded(1.0 / p) and bounded(r):
            return EndpointKind.REGULAR

    # shells [t/2, t] of the L^2_r norms of both seeds
    nodes, weights = np.polynomial.legendre.leggauss(20)
    shells = {0: [], 1: []}
    oscillates = False
    for k in range(2, 42):
        hi = L * 2.0**-k
        lo = hi / 2
        t = lo + (hi - lo) * (nodes + 1) / 2
        with np.errstate(all="ignore"):
            uh, _, u, _ = problem.seed_values(e, t)
            w = problem.r_at(e, t)
        for i, f in enumerate((uh, u)):
            if np.any(np.diff(np.sign(f)) != 0):
                oscillates = True
            shells[i].append(float(np.sum(weights * w * f * f) * (hi - lo) / 2))
    if oscillates:
        return EndpointKind.UNKNOWN
    for s in shells.values():
        s = np.asarray(s)
        if not np.all(np.isfinite(s)):
            return EndpointKind.UNKNOWN
        tail = s[-10:]
        if np.any(tail[1:] > 0.95 * tail[:-1] + 1e-300):
            return EndpointKind.UNKNOWN
    return EndpointKind.LIMIT_CIRCLE


# --------------------------------------------------------------- file format

def _seed_from_exprs(spec: Mapping, which: Endpoint) -> EndpointSeed:
    try:
        fns = [compile_expression(spec[k], var="t")
               for k in ("principal", "principal_qd", "nonprincipal", "nonprincipal_qd")]
    except KeyError as exc:
        raise ProblemFileError(f"seed for endpoint {which.value} lacks {exc.args[0]!r}") from None
    kind = EndpointKind(spec.get("kind", "LimitCircleNonOsc"))
    return EndpointSeed(
        kind,
        lambda t: (fns[0](t), fns[1](t)),
        lambda t: (fns[2](t), fns[3](t)),
        seed_offset=spec.get("seed_offset"),
        reach=spec.get("reach"),
        description="user expressions",
    )


def problem_from_dict(data: Mapping) -> Problem:
    """Build a problem from the JSON-compatible problem definition."""
    if not isinstance(data, Mapping):
        raise ProblemFileError("problem definition must be an object")
    try:
        iv = data["interval"]
        a, b = float(iv["a"]), float(iv["b"])
    except (KeyError, TypeError, ValueError):
        raise ProblemFileError("problem definition needs interval: {a, b}") from None
    family = data.get("family", "custom")
    gamma = data.get("gamma")
    label = data.get("label", "")
    if family in ("bessel", "symmetric_bessel"):
        if gamma is None:
            raise ProblemFileError(f"family {family!r} needs gamma")
        maker = builtin_bessel if family == "bessel" else builtin_symmetric_bessel
        prob = maker(float(gamma), a, b)
    elif family in ("regular", "custom"):
        coeffs_src = data.get("coefficients") or {}
        srcs = {k: str(coeffs_src.get(k, "1" if k in "pr" else "0")) for k in "pqr"}
        consts = {}
        for k, s in srcs.items():
            try:
                consts[k] = float(s)
            except ValueError:
                pass
        seeds_src = data.get("seeds") or {}
        if len(consts) == 3 and not seeds_src:
            prob = builtin_regular(Interval(a, b), consts["p"], consts["q"], consts["r"])
        else:
            fns = {k: compile_expression(s) for k, s in srcs.items()}
            coeffs = CoefficientSet(fns["p"], fns["q"], fns["r"],
                                    tuple(float(x) for x in data.get("breakpoints", ())))
            iv_ = Interval(a, b)
            reach = 0.25 * iv_.length
            seeds = []
            for e in Endpoint:
                if e.value in seeds_src:
                    seeds.append(_seed_from_exprs(seeds_src[e.value], e))
                else:
                    seeds.append(numeric_regular_seed(coeffs, e, iv_.left if e is Endpoint.LEFT
                                                      else iv_.right, reach))
            prob = make_problem(iv_, coeffs, seeds[0], seeds[1], label, family)
    else:
        raise ProblemFileError(f"unknown family {family!r}")
    if label:
        object.__setattr__(prob, "label", label)
    return prob


def load_problem_file(path) -> Problem:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ProblemFileError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ProblemFileError(f"{path}: invalid JSON ({exc.msg})") from None
    return problem_from_dict(data)
