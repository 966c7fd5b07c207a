"""Principal and nonprincipal solutions, generalized boundary values, data pack.

Everything here is anchored at the spectral parameter ``z = 0``; strict
positivity of the minimal operator makes that the natural reference point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import NumericsConfig, resolve
from .errors import (
    DenominatorZero,
    ExtrapolationDivergence,
    VanishingPrincipal,
    ZeroFriedrichsEigenvalue,
)
from .odecore import (
    SolutionFn,
    _adaptive,
    extend,
    integrate_tau,
    l2r_inner,
    propagate,
    solve,
)
from .problem import Endpoint, EndpointSeed, Problem

LEFT, RIGHT = Endpoint.LEFT, Endpoint.RIGHT


@dataclass(frozen=True)
class BoundaryQuadruple:
    """``(g~(a), g~'(a), g~(b), g~'(b))``."""

    g_a: float
    gp_a: float
    g_b: float
    gp_b: float

    def at(self, which):
        e = Endpoint.parse(which)
        return (self.g_a, self.gp_a) if e is LEFT else (self.g_b, self.gp_b)

    def as_tuple(self):
        return (self.g_a, self.gp_a, self.g_b, self.gp_b)


def lagrange_form(g: BoundaryQuadruple, h: BoundaryQuadruple, which) -> float:
    """``g~ h~' - g~' h~`` at one endpoint; equals ``W(g, h)`` there."""
    g0, g1 = g.at(which)
    h0, h1 = h.at(which)
    return g0 * h1 - g1 * h0


@dataclass(frozen=True)
class DataPack:
    """The seven scalars that parameterize every nonnegative extension.

    Attributes
    ----------
    u_b, up_b : float
        ``u_a~(b)`` and ``u_a~'(b)`` of the principal solution at ``a``.
    v_b, vp_b : float
        The same for the distinguished nonprincipal solution ``vhat_a``.
    vp_a : float
        ``vhat_a~'(a) = -<uhat_a, u_a> / ||u_a||^2``.
    norm2_u, norm2_v : float
        ``||u_a||^2`` and ``||vhat_a||^2`` in ``L^2_r``.
    """

    u_b: float
    up_b: float
    v_b: float
    vp_b: float
    vp_a: float
    norm2_u: float
    norm2_v: float

    @property
    def c_f(self) -> float:
        """Value of ``c`` that puts the Dirichlet-type condition at ``b``."""
        return -self.v_b / self.u_b

    @property
    def uhat_b(self) -> float:
        """``uhat_a~(b)`` recovered from the pack."""
        return self.v_b - self.vp_a * self.u_b

    @property
    def uhatp_b(self) -> float:
        return self.vp_b - self.vp_a * self.up_b

    def identity_residual(self) -> float:
        """``v_b/u_b - vp_a - uhat_b/u_b``; zero up to rounding."""
        return abs(self.v_b / self.u_b - self.vp_a - self.uhat_b / self.u_b)

    def as_tuple(self):
        return (self.u_b, self.up_b, self.v_b, self.vp_b, self.vp_a, self.norm2_u, self.norm2_v)

    def to_dict(self):
        return dict(zip(("u_b", "up_b", "v_b", "vp_b", "vp_a", "norm2_u", "norm2_v"),
                        self.as_tuple()))


@dataclass(frozen=True)
class EtaSolution:
    fn: SolutionFn
    norm2: float
    eta_a: float
    etap_a: float


# ------------------------------------------------------------------ solutions

def principal_solution(problem: Problem, endpoint=LEFT, lam: float = 0.0,
                       cfg: NumericsConfig | None = None) -> SolutionFn:
    """Solution of ``tau u = lam u`` that is principal at ``endpoint``.

    Its generalized boundary values there are ``(0, 1)``; at ``lam = 0`` it is
    the endpoint seed ``u`` continued across the interval.
    """
    return solve(problem, lam, Endpoint.parse(endpoint), (0.0, 1.0), cfg)


def nonprincipal_solution(problem: Problem, endpoint=LEFT, lam: float = 0.0,
                          cfg: NumericsConfig | None = None) -> SolutionFn:
    """Solution with generalized boundary values ``(1, 0)`` at ``endpoint``."""
    return solve(problem, lam, Endpoint.parse(endpoint), (1.0, 0.0), cfg)


def nonprincipal_from_principal(problem: Problem, u: SolutionFn, endpoint, c_ref: float,
                                cfg: NumericsConfig | None = None) -> SolutionFn:
    """``uhat(x) = u(x) * integral_x^c_ref dt / (p u^2)`` (reduction of order).

    The result satisfies ``W(uhat, u) = 1`` for either endpoint. It is built
    at the interior point halfway between the endpoint region and ``c_ref`` and
    continued over the whole interval.

    Raises
    ------
    VanishingPrincipal
        If ``u`` changes sign between ``endpoint`` and ``c_ref``.
    """
    cfg = resolve(cfg)
    e = Endpoint.parse(endpoint)
    xe = problem.endpoint(e)
    if not problem.a < c_ref < problem.b:
        raise VanishingPrincipal(f"c_ref={c_ref} is not inside the interval")
    x0 = 0.5 * (xe + c_ref)
    lo, hi = min(x0, c_ref), max(x0, c_ref)
    # sign check on the window (endpoint, c_ref]
    t = np.geomspace(problem.offset(e, cfg) * 10, abs(c_ref - xe), 400)
    vals = u.near(e, t)[0]
    if np.any(vals == 0) or np.any(np.sign(vals) != np.sign(vals[0])):
        raise VanishingPrincipal(f"principal solution vanishes between x={xe:g} and c_ref={c_ref:g}")

    def integrand(x):
        y, _ = u(x)
        return 1.0 / (problem.coeffs.p(x) * y * y)

    integral, _ = _adaptive(integrand, np.linspace(lo, hi, 9), 1e-13, cfg.quad_max_splits)
    J = integral if x0 <= c_ref else -integral
    y0, y1 = (float(v) for v in u(x0))
    data = (y0 * J, y1 * J - 1.0 / y0)
    return solve(problem, u.z, x0, data, cfg)


def distinguished_nonprincipal(problem: Problem, cfg: NumericsConfig | None = None) -> SolutionFn:
    """``vhat_a = uhat_a - (<uhat_a, u_a>/||u_a||^2) u_a``, orthogonal to ``u_a``."""
    k = _projection_coefficient(problem, cfg)
    return solve(problem, 0.0, LEFT, (1.0, -k), cfg)


def _basic_solutions(problem: Problem, cfg):
    key = ("basic", resolve(cfg))
    if key not in problem._cache:
        problem._cache[key] = (principal_solution(problem, LEFT, 0.0, cfg),
                               nonprincipal_solution(problem, LEFT, 0.0, cfg))
    return problem._cache[key]


def _inner_products(problem: Problem, cfg):
    key = ("inner", resolve(cfg))
    if key not in problem._cache:
        u, uh = _basic_solutions(problem, cfg)
        problem._cache[key] = (l2r_inner(problem, u, u, cfg).value,
                               l2r_inner(problem, uh, u, cfg).value,
                               l2r_inner(problem, uh, uh, cfg).value)
    return problem._cache[key]


def _projection_coefficient(problem, cfg) -> float:
    nu, nhu, _ = _inner_products(problem, cfg)
    return nhu / nu


# ------------------------------------------------------------ boundary values

def generalized_boundary_values(problem: Problem, g: SolutionFn, route: str = "seed",
                                cfg: NumericsConfig | None = None) -> BoundaryQuadruple:
    """``g~ = -W(u_e, g)(e)`` and ``g~' = W(uhat_e, g)(e)`` at both endpoints.

    Parameters
    ----------
    route : {"seed", "richardson"}
        ``"seed"`` reads the limits off the seed-coordinate integration, which
        carries them exactly. ``"richardson"`` is an independent check: ``g``
        is integrated in plain ``(y, y^[1])`` form toward each endpoint, the
        two Wronskians are sampled at ``t_k = t_0 2^-k`` and the limits are
        extrapolated.
    """
    cfg = resolve(cfg)
    if route == "seed":
        g = extend(problem, g, cfg)
        (ga, gpa), (gb, gpb) = g.boundary_values(LEFT), g.boundary_values(RIGHT)
        return BoundaryQuadruple(ga, gpa, gb, gpb)
    if route != "richardson":
        raise ValueError(f"unknown route {route!r}")
    vals = []
    for e in Endpoint:
        vals.extend(_richardson_boundary_values(problem, g, e, cfg))
    return BoundaryQuadruple(*vals)


def _richardson_boundary_values(problem, g, e: Endpoint, cfg):
    L = problem.length
    t0 = 0.125 * L
    kmax = cfg.richardson_kmax
    ts = t0 * 2.0 ** -np.arange(kmax + 1)
    ts = ts[ts >= 1e3 * problem.offset(e, cfg)]
    x_start = problem.interval.mid
    if not (g.valid_range[0] <= x_start <= g.valid_range[1]):
        x_start = 0.5 * (g.valid_range[0] + g.valid_range[1])
    y0 = np.array([float(v) for v in g(x_start)])
    f = integrate_tau(problem, g.z, x_start, problem.endpoint(e) + e.sigma * ts[-1], y0,
                      cfg.replace(rtol=min(cfg.rtol, 1e-12), atol=1e-16))
    y, y1 = f(problem.x_of(e, ts))
    uh, uh1, u, u1 = problem.seed_values(e, ts)
    w_u = u * y1 - u1 * y
    w_uh = uh * y1 - uh1 * y
    return -richardson_limit(ts, w_u, cfg.richardson_tol), richardson_limit(ts, w_uh, cfg.richardson_tol)


def richardson_limit(ts, vals, tol: float = 1e-9) -> float:
    """Limit as ``t -> 0`` of samples on a geometric sequence ``t_k = t_0 2^-k``.

    Each triple of consecutive samples is fitted by ``V + C t^p`` with ``p``
    estimated from the ratio of successive differences; the extrapolated
    values must settle to ``tol`` (relative to ``1 + |V|``).

    Raises
    ------
    ExtrapolationDivergence
        If no two successive extrapolations agree.
    """
    v = np.asarray(vals, dtype=float)
    if v.size < 4:
        raise ExtrapolationDivergence("too few samples to extrapolate")
    est = []
    for k in range(2, v.size):
        d1, d2 = v[k - 1] - v[k - 2], v[k] - v[k - 1]
        if d2 == 0.0 or d1 == 0.0:
            est.append(v[k])
            continue
        ratio = d2 / d1
        if 0.0 < ratio < 1.0:
            est.append(v[k] + d2 * ratio / (1.0 - ratio))
        else:
            est.append(v[k])
    est = np.asarray(est)
    scale = 1.0 + np.max(np.abs(v))
    for k in range(est.size - 1, 0, -1):
        if abs(est[k] - est[k - 1]) <= tol * scale:
            return float(est[k])
    raise ExtrapolationDivergence(
        f"boundary limit did not settle (last two estimates {est[-2]:.6g}, {est[-1]:.6g})"
    )


def wronskian_of_values(g, h, which) -> float:
    """``W(g, h)`` at an endpoint from generalized boundary values."""
    g = g if isinstance(g, BoundaryQuadruple) else BoundaryQuadruple(*g)
    h = h if isinstance(h, BoundaryQuadruple) else BoundaryQuadruple(*h)
    return lagrange_form(g, h, which)


# ------------------------------------------------------------------ data pack

def extension_data_pack(problem: Problem, cfg: NumericsConfig | None = None) -> DataPack:
    """Assemble the :class:`DataPack` of a problem.

    Raises
    ------
    ZeroFriedrichsEigenvalue
        If ``|u_a~(b)| < 1e-12``: zero would then be a Friedrichs eigenvalue.
    """
    cfg = resolve(cfg)
    key = ("pack", cfg)
    if key in problem._cache:
        return problem._cache[key]
    u, uh = _basic_solutions(problem, cfg)
    nu, nhu, _ = _inner_products(problem, cfg)
    k = nhu / nu
    u_b, up_b = u.boundary_values(RIGHT)
    uh_b, uhp_b = uh.boundary_values(RIGHT)
    if abs(u_b) < 1e-12:
        raise ZeroFriedrichsEigenvalue(f"u_a~(b) = {u_b:.3g}: zero is a Friedrichs eigenvalue")
    v = solve(problem, 0.0, LEFT, (1.0, -k), cfg)
    nv = l2r_inner(problem, v, v, cfg).value
    pack = DataPack(u_b, up_b, uh_b - k * u_b, uhp_b - k * up_b, -k, nu, nv)
    problem._cache[key] = pack
    return pack


def vhat_norm_routes(problem: Problem, cfg: NumericsConfig | None = None) -> dict:
    """``||vhat_a||^2`` three ways.

    ``quadrature`` integrates ``vhat_a^2 r`` directly; ``projection`` is
    ``||uhat||^2 - <uhat,u>^2/||u||^2``; ``shifted_formula`` evaluates
    ``||uhat||^2 + (<uhat,u> - 2) <uhat,u>/||u||^2``, a closed form that
    does not agree with the other two in general (it is kept for reporting).
    """
    cfg = resolve(cfg)
    nu, nhu, nhh = _inner_products(problem, cfg)
    pack = extension_data_pack(problem, cfg)
    return {
        "quadrature": pack.norm2_v,
        "projection": nhh - nhu * nhu / nu,
        "shifted_formula": nhh + (nhu - 2.0) * nhu / nu,
    }


def krein_matrix(problem: Problem, cfg: NumericsConfig | None = None) -> np.ndarray:
    """``[[uhat_a~(b), u_a~(b)], [uhat_a~'(b), u_a~'(b)]]`` with the seeds at ``a``."""
    C, _ = propagate(problem, [0.0], np.array([[1.0, 0.0], [0.0, 1.0]]), LEFT, cfg)
    return np.array([[C[0, 0, 0], C[0, 1, 0]], [C[1, 0, 0], C[1, 1, 0]]])


def b_side_data(problem: Problem, cfg: NumericsConfig | None = None) -> dict:
    """Boundary values at ``a`` of the seeds at ``b``.

    Returns ``u_b~(a), u_b~'(a), uhat_b~(a), uhat_b~'(a)`` computed by
    integrating from ``b`` toward ``a``.
    """
    C, _ = propagate(problem, [0.0], np.array([[0.0, 1.0], [1.0, 0.0]]), RIGHT, cfg)
    return {"u_a": C[0, 0, 0], "up_a": C[1, 0, 0], "uhat_a": C[0, 1, 0], "uhatp_a": C[1, 1, 0]}


# ---------------------------------------------------------------- eta_beta'

def _cot_ratio(beta_p: float, hat_b: float, hatp_b: float, u_b: float, up_b: float) -> float:
    num = math.cos(beta_p) * hat_b - math.sin(beta_p) * hatp_b
    den = math.cos(beta_p) * u_b - math.sin(beta_p) * up_b
    if abs(den) <= 1e-12 * (abs(u_b) + abs(up_b)):
        raise DenominatorZero(f"beta'={beta_p:.6g}: zero is an eigenvalue of the (pi, beta') extension")
    return num / den


def eta_beta(problem: Problem, beta_p: float, cfg: NumericsConfig | None = None) -> EtaSolution:
    """``eta = uhat_a - ratio * u_a`` satisfying the ``beta'`` condition at ``b``.

    ``ratio = (cos b' uhat~(b) - sin b' uhat~'(b)) / (cos b' u~(b) - sin b' u~'(b))``.
    """
    cfg = resolve(cfg)
    R = krein_matrix(problem, cfg)
    ratio = _cot_ratio(beta_p, R[0, 0], R[1, 0], R[0, 1], R[1, 1])
    fn = solve(problem, 0.0, LEFT, (1.0, -ratio), cfg)
    return EtaSolution(fn, l2r_inner(problem, fn, fn, cfg).value, 1.0, -ratio)


# ------------------------------------------------------------------- xi check

def xi_boundary_check(problem: Problem, pack: DataPack | None = None,
                      cfg: NumericsConfig | None = None) -> dict:
    """Residuals of the boundary values of ``T_F^-1 u_a`` and ``T_F^-1 vhat_a``.

    ``T_F^-1 f`` for ``f`` a solution at ``z = 0`` is built without any
    quadrature: if ``y(z)`` solves ``tau y = z y`` with fixed data at ``a``
    then ``w = dy/dz`` at ``z = 0`` solves ``tau w = y`` with ``w~(a) =
    w~'(a) = 0``; adding the multiple of ``u_a`` that cancels ``w~(b)`` gives
    the Friedrichs preimage. The returned residuals compare its boundary
    derivatives with the pack values.
    """
    cfg = resolve(cfg)
    pack = pack or extension_data_pack(problem, cfg)
    starts = np.array([[0.0, 1.0], [1.0, pack.vp_a]])
    _, W = propagate(problem, [0.0], starts, LEFT, cfg, derivative=True)
    out = {}
    for col, name in ((0, "xi"), (1, "xihat")):
        wb, wpb = W[0, col, 0], W[1, col, 0]
        k = -wb / pack.u_b
        out[name] = (k, wpb + k * pack.up_b)
    xa, xb = out["xi"]
    ha, hb = out["xihat"]
    return {
        "xi_prime_a": abs(xa + pack.v_b / pack.u_b * pack.norm2_u),
        "xi_prime_b": abs(xb + pack.norm2_u / pack.u_b),
        "xihat_prime_a": abs(ha - pack.norm2_v),
        "xihat_prime_b": abs(hb),
        "values": {"xi_prime_a": xa, "xi_prime_b": xb, "xihat_prime_a": ha, "xihat_prime_b": hb},
    }


# -------------------------------------------------------------------- gauges

def regauge(problem: Problem, C: float, which=LEFT) -> Problem:
    """Problem whose nonprincipal seed at ``which`` is ``uhat + C u``."""
    e = Endpoint.parse(which)
    s = problem.seed(e)

    def nonprincipal(t):
        a, a1 = s.nonprincipal(t)
        b, b1 = s.principal(t)
        return a + C * b, a1 + C * b1

    new = EndpointSeed(s.kind, s.principal, nonprincipal, s.seed_offset, s.reach,
                       f"{s.description} + {C:g} u".strip())
    kw = dict(interval=problem.interval, coeffs=problem.coeffs, seed_a=problem.seed_a,
              seed_b=problem.seed_b, label=f"{problem.label} regauged", family=problem.family,
              gamma=problem.gamma)
    kw["seed_a" if e is LEFT else "seed_b"] = new
    return Problem(**kw)
