"""Integration of ``tau u = z u`` in quasi-derivative form, Wronskians, L^2_r quadrature.

Away from the endpoints a solution is carried as ``(y, y^[1])`` and integrated
through ``y' = y^[1]/p, (y^[1])' = (q - z r) y``. Next to an endpoint it is
carried in seed coordinates: writing ``y = c1*uhat + c2*u`` (and the same for
``y^[1]``) with the endpoint seeds, variation of parameters gives::

    c1' =  z r u y,    c2' = -z r uhat y,

whose coefficients are integrable at a limit circle endpoint. Moreover
``c1 -> y~(e)`` and ``c2 -> y~'(e)``: the seed coordinates converge to the
generalized boundary values. These equations are integrated in ``s = ln t``
(``t`` the distance to the endpoint) down to the seed offset; the remaining
sliver is handled by a first-order expansion using closed-form seed integrals.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .config import NumericsConfig, resolve
from .errors import QuadratureNoConvergence, RangeMismatch, StepUnderflow
from .problem import Endpoint, Problem

LEFT, RIGHT = Endpoint.LEFT, Endpoint.RIGHT


@dataclass(frozen=True)
class QuadResult:
    value: float
    abs_error_estimate: float

    def __float__(self):
        return float(self.value)


# ------------------------------------------------------------ raw integrator

def _ivp(fun, span, y0, cfg: NumericsConfig, dense: bool, rtol: float | None = None,
         atol=None):
    sol = integrate.solve_ivp(
        fun, span, y0, method=cfg.method, rtol=cfg.rtol if rtol is None else rtol,
        atol=cfg.atol if atol is None else atol, dense_output=dense,
    )
    if sol.status != 0:
        raise StepUnderflow(f"integration over {span} failed: {sol.message}")
    return sol


def _scalar(v) -> float:
    return float(np.asarray(v).reshape(-1)[0])


def _tail_matrix(problem: Problem, which: Endpoint, cfg) -> np.ndarray:
    ihh, ihu, iuu = problem.tail_integrals(which, cfg)
    return np.array([[ihu, iuu], [-ihh, -ihu]])


def _tail(problem, which, zcol, C, W, cfg, inward: bool):
    """Move across ``[0, offset]`` at endpoint ``which``.

    ``inward`` maps boundary values to coordinates at the offset, otherwise
    the reverse. ``W`` holds z-derivatives of ``C`` (or is None).
    """
    J = _tail_matrix(problem, which, cfg)
    s = which.sigma if inward else -which.sigma
    JC = J @ C
    Cn = C + s * zcol * JC
    Wn = None if W is None else W + s * (JC + zcol * (J @ W))
    return Cn, Wn


def _to_yy(problem, which, t, C):
    uh, uh1, u, u1 = (_scalar(v) for v in problem.seed_values(which, t))
    return np.array([C[0] * uh + C[1] * u, C[0] * uh1 + C[1] * u1])


def _to_c(problem, which, t, Y):
    uh, uh1, u, u1 = (_scalar(v) for v in problem.seed_values(which, t))
    return np.array([Y[0] * u1 - Y[1] * u, uh * Y[1] - uh1 * Y[0]])


def _cseg(problem, which, zcol, C, W, t_from, t_to, cfg, dense=False, rtol=None):
    """Integrate seed coordinates from distance ``t_from`` to ``t_to``."""
    m = C.shape[1]
    if t_from == t_to:
        return C, W, None
    if W is None and not np.any(zcol):
        return C, W, ("const", C.copy())
    sig = which.sigma
    nv = 1 if W is None else 2

    seed = problem.seed_scalar

    def rhs(s, Y):
        t = float(np.exp(s))
        uh, _, u, _, rr = seed(which, t)
        m11, m12, m21 = rr * u * uh, rr * u * u, -rr * uh * uh
        Y = Y.reshape(nv, 2, m)
        c = Y[0]
        mc0 = m11 * c[0] + m12 * c[1]
        mc1 = m21 * c[0] - m11 * c[1]
        out = np.empty_like(Y)
        f = sig * t
        out[0, 0] = f * zcol * mc0
        out[0, 1] = f * zcol * mc1
        if nv == 2:
            w = Y[1]
            mw0 = m11 * w[0] + m12 * w[1]
            mw1 = m21 * w[0] - m11 * w[1]
            out[1, 0] = f * (mc0 + zcol * mw0)
            out[1, 1] = f * (mc1 + zcol * mw1)
        return out.reshape(-1)

    y0 = C.reshape(-1) if W is None else np.concatenate([C.reshape(-1), W.reshape(-1)])
    # error control relative to the size of each solution: a coordinate that
    # starts at zero would otherwise demand relative accuracy on its growth
    tol = cfg.rtol if rtol is None else rtol
    cn = np.maximum(np.abs(C).max(axis=0), 1e-300)
    scales = [np.broadcast_to(cn, (2, m))]
    if W is not None:
        grow = cn * max(t_from, t_to) ** 2 * (1.0 + np.abs(zcol) * max(t_from, t_to) ** 2)
        scales.append(np.broadcast_to(np.maximum(np.abs(W).max(axis=0), grow), (2, m)))
    atol = np.maximum(tol * np.concatenate([s.reshape(-1) for s in scales]), cfg.atol)
    sol = _ivp(rhs, (np.log(t_from), np.log(t_to)), y0, cfg, dense, rtol, atol)
    Y = sol.y[:, -1].reshape(nv, 2, m)
    return Y[0], (Y[1] if nv == 2 else None), (("dense", sol.sol) if dense else None)


def _iseg(problem, zcol, Y, W, x_from, x_to, cfg, dense=False, rtol=None):
    """Integrate ``(y, y^[1])`` from ``x_from`` to ``x_to`` restarting at breakpoints."""
    m = Y.shape[1]
    nv = 1 if W is None else 2
    co = problem.coeffs

    fp, fq, fr = co.p, co.q, co.r

    def rhs(x, S):
        x = float(x)
        p, q, r = float(fp(x)), float(fq(x)), float(fr(x))
        S = S.reshape(nv, 2, m)
        out = np.empty_like(S)
        pot = q - zcol * r
        out[0, 0] = S[0, 1] / p
        out[0, 1] = pot * S[0, 0]
        if nv == 2:
            out[1, 0] = S[1, 1] / p
            out[1, 1] = pot * S[1, 0] - r * S[0, 0]
        return out.reshape(-1)

    lo, hi = min(x_from, x_to), max(x_from, x_to)
    cuts = [x for x in problem.breakpoints() if lo < x < hi]
    if x_to < x_from:
        cuts = cuts[::-1]
    nodes = [x_from, *cuts, x_to]
    state = Y.reshape(-1) if W is None else np.concatenate([Y.reshape(-1), W.reshape(-1)])
    pieces = []
    for x0, x1 in zip(nodes[:-1], nodes[1:]):
        if x0 == x1:
            continue
        sol = _ivp(rhs, (x0, x1), state, cfg, dense, rtol)
        state = sol.y[:, -1]
        if dense:
            pieces.append((min(x0, x1), max(x0, x1), sol.sol))
    S = state.reshape(nv, 2, m)
    return S[0], (S[1] if nv == 2 else None), pieces


# ---------------------------------------------------------------- solutions

# seed coordinates are used while |z| t^2 stays below about this constant;
# beyond it they oscillate like the solution itself and cost many steps
SEED_REACH_Z = 1.0


class _Geometry:
    def __init__(self, problem: Problem, cfg: NumericsConfig, zmax: float = 0.0):
        self.eps = {e: problem.offset(e, cfg) for e in Endpoint}
        self.reach = {e: problem.reach(e, cfg) for e in Endpoint}
        if zmax > 0:
            cap = SEED_REACH_Z / np.sqrt(zmax)
            self.reach = {e: max(min(r, cap), 1e3 * self.eps[e]) for e, r in self.reach.items()}
        self.switch = {LEFT: problem.a + self.reach[LEFT], RIGHT: problem.b - self.reach[RIGHT]}

    def region(self, problem, x):
        if x - problem.a < self.reach[LEFT]:
            return LEFT, x - problem.a
        if problem.b - x < self.reach[RIGHT]:
            return RIGHT, problem.b - x
        return None, x


def _walk(problem, geo, zcol, cfg, target, region, pos, state, W, dense, rtol):
    """Carry a state to endpoint ``target``; return its boundary values.

    ``region`` is the endpoint whose seed coordinates hold ``state`` at
    distance ``pos``, or None when ``state`` is ``(y, y^[1])`` at ``x = pos``.
    """
    segs = []
    far = target.other
    if region is far:
        C, W, d = _cseg(problem, far, zcol, state, W, pos, geo.reach[far], cfg, dense, rtol)
        if d is not None:
            segs.append(("c", far, pos, geo.reach[far], d))
        state = _to_yy(problem, far, geo.reach[far], C)
        W = None if W is None else _to_yy(problem, far, geo.reach[far], W)
        region, pos = None, geo.switch[far]
    if region is None:
        Y, W, pieces = _iseg(problem, zcol, state, W, pos, geo.switch[target], cfg, dense, rtol)
        segs.extend(("y", lo, hi, sol) for lo, hi, sol in pieces)
        t = geo.reach[target]
        state = _to_c(problem, target, t, Y)
        W = None if W is None else _to_c(problem, target, t, W)
        region, pos = target, t
    C, W, d = _cseg(problem, target, zcol, state, W, pos, geo.eps[target], cfg, dense, rtol)
    if d is not None:
        segs.append(("c", target, geo.eps[target], pos, d))
    C0, W0 = _tail(problem, target, zcol, C, W, cfg, inward=False)
    return C0, W0, segs


def propagate(problem: Problem, z, c_start, start, cfg: NumericsConfig | None = None,
              derivative: bool = False, rtol: float | None = None):
    """Boundary values at the far endpoint of solutions given at ``start``.

    Parameters
    ----------
    z : array_like, shape (nz,)
    c_start : array_like, shape (2, k)
        Generalized boundary values ``(g~, g~')`` at ``start`` of ``k``
        solutions (the same for every z).
    derivative : bool
        Also return the z-derivative of the result.

    Returns
    -------
    C, W : ndarray, shape (2, k, nz)
        Boundary values at the other endpoint and their z-derivatives (or None).
    """
    cfg = resolve(cfg)
    start = Endpoint.parse(start)
    z = np.atleast_1d(np.asarray(z, dtype=float))
    c_start = np.asarray(c_start, dtype=float).reshape(2, -1)
    k, nz = c_start.shape[1], z.size
    zcol = np.tile(z, k)
    C = np.repeat(c_start, nz, axis=1)
    W = np.zeros_like(C) if derivative else None
    geo = _Geometry(problem, cfg, float(np.max(np.abs(z))))
    C, W = _tail(problem, start, zcol, C, W, cfg, inward=True)
    C, W, _ = _walk(problem, geo, zcol, cfg, start.other, start, geo.eps[start], C, W,
                    False, rtol)
    C = C.reshape(2, k, nz)
    return C, (None if W is None else W.reshape(2, k, nz))


class SolutionFn:
    """A real solution of ``tau u = z u`` with dense output.

    Call it with ``x`` to get ``(y, y^[1])``. Near an endpoint use
    :meth:`near` with the distance ``t`` for full precision.
    """

    def __init__(self, problem: Problem, z: float, segments, bv=None, valid_range=None,
                 anchor=None):
        self.problem = problem
        self.z = float(z)
        self._segs = segments
        self._bv = dict(bv or {})
        self.valid_range = valid_range or (problem.a, problem.b)
        self.anchor = anchor

    # evaluation
    def eval(self, x):
        return self(x)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        flat = x.reshape(-1)
        lo, hi = self.valid_range
        if np.any((flat < lo) | (flat > hi)) or (self.is_full and np.any((flat <= lo) | (flat >= hi))):
            raise RangeMismatch(f"x outside the valid range ({lo:g}, {hi:g})")
        y = np.empty_like(flat)
        y1 = np.empty_like(flat)
        done = np.zeros(flat.shape, dtype=bool)
        if self.is_full:
            for e in Endpoint:
                t = e.sigma * (flat - self.problem.endpoint(e))
                sel = t < self._reach(e)
                if np.any(sel):
                    y[sel], y1[sel] = self.near(e, t[sel])
                    done |= sel
        for kind, *rest in self._segs:
            if kind != "y":
                continue
            a, b, sol = rest
            sel = (~done) & (flat >= a) & (flat <= b)
            if np.any(sel):
                v = sol(flat[sel])
                y[sel], y1[sel] = v[0], v[1]
                done |= sel
        if not np.all(done):
            raise RangeMismatch("point not covered by any integration segment")
        return y.reshape(x.shape), y1.reshape(x.shape)

    @property
    def is_full(self) -> bool:
        return LEFT in self._bv and RIGHT in self._bv

    def _reach(self, which):
        rs = [s for s in self._segs if s[0] == "c" and s[1] is which]
        return max((s[3] for s in rs), default=0.0)

    def coords(self, which, t):
        """Seed coordinates ``(c1, c2)`` at distance ``t`` from ``which``."""
        e = Endpoint.parse(which)
        t = np.atleast_1d(np.asarray(t, dtype=float))
        c0 = np.asarray(self._bv[e], dtype=float)
        out = np.repeat(c0[:, None], t.size, axis=1)
        for kind, *rest in self._segs:
            if kind != "c" or rest[0] is not e:
                continue
            _, lo, hi, (how, d) = rest
            sel = (t >= lo) & (t <= hi)
            if not np.any(sel):
                continue
            if how == "const":
                out[:, sel] = d[:, :1]
            else:
                out[:, sel] = d(np.log(t[sel]))[:2]
        return out

    def near(self, which, t):
        """``(y, y^[1])`` at distance ``t`` from endpoint ``which``."""
        e = Endpoint.parse(which)
        t = np.asarray(t, dtype=float)
        if e not in self._bv:
            return self(self.problem.x_of(e, t))
        flat = t.reshape(-1)
        inner = flat <= self._reach(e)
        y, y1 = np.empty_like(flat), np.empty_like(flat)
        if np.any(inner):
            c = self.coords(e, flat[inner])
            uh, uh1, u, u1 = self.problem.seed_values(e, flat[inner])
            y[inner] = c[0] * uh + c[1] * u
            y1[inner] = c[0] * uh1 + c[1] * u1
        if not np.all(inner):
            y[~inner], y1[~inner] = self(self.problem.x_of(e, flat[~inner]))
        return y.reshape(t.shape), y1.reshape(t.shape)

    def boundary_values(self, which):
        """``(g~, g~')`` at ``which`` or None if the solution does not reach it."""
        v = self._bv.get(Endpoint.parse(which))
        return None if v is None else (float(v[0]), float(v[1]))

    # linear structure
    def __add__(self, other):
        return Combination([(1.0, self), (1.0, other)])

    def __sub__(self, other):
        return Combination([(1.0, self), (-1.0, other)])

    def __mul__(self, c):
        return Combination([(float(c), self)])

    __rmul__ = __mul__

    def __neg__(self):
        return Combination([(-1.0, self)])


class Combination(SolutionFn):
    """Linear combination of solutions for the same ``z``."""

    def __init__(self, terms):
        flat = []
        for c, f in terms:
            if isinstance(f, Combination):
                flat.extend((c * c2, f2) for c2, f2 in f.terms)
            else:
                flat.append((c, f))
        zs = {f.z for _, f in flat}
        if len(zs) != 1:
            raise RangeMismatch("combined solutions must share z")
        self.terms = flat
        self.problem = flat[0][1].problem
        self.z = flat[0][1].z
        self.valid_range = (max(f.valid_range[0] for _, f in flat),
                            min(f.valid_range[1] for _, f in flat))
        self.anchor = None
        bvs = [f.boundary_values(e) for _, f in flat for e in Endpoint]
        self._full = all(b is not None for b in bvs)

    @property
    def is_full(self):
        return self._full

    def __call__(self, x):
        y = y1 = 0.0
        for c, f in self.terms:
            a, b = f(x)
            y, y1 = y + c * a, y1 + c * b
        return y, y1

    def near(self, which, t):
        y = y1 = 0.0
        for c, f in self.terms:
            a, b = f.near(which, t)
            y, y1 = y + c * a, y1 + c * b
        return y, y1

    def coords(self, which, t):
        return sum(c * f.coords(which, t) for c, f in self.terms)

    def boundary_values(self, which):
        vals = [f.boundary_values(which) for _, f in self.terms]
        if any(v is None for v in vals):
            return None
        return (sum(c * v[0] for (c, _), v in zip(self.terms, vals)),
                sum(c * v[1] for (c, _), v in zip(self.terms, vals)))


def solve(problem: Problem, z: float, anchor, data, cfg: NumericsConfig | None = None,
          rtol: float | None = None) -> SolutionFn:
    """Solution of ``tau u = z u`` on the whole interval.

    ``anchor`` is an endpoint (``data`` = generalized boundary values there) or
    a point ``x0`` of the interval (``data`` = ``(y, y^[1])`` at ``x0``).
    """
    cfg = resolve(cfg)
    geo = _Geometry(problem, cfg, abs(float(z)))
    zcol = np.array([float(z)])
    data = np.asarray(data, dtype=float).reshape(2, 1)
    bv, segs = {}, []
    if isinstance(anchor, (Endpoint, str)):
        e = Endpoint.parse(anchor)
        bv[e] = data[:, 0].copy()
        C, _ = _tail(problem, e, zcol, data, None, cfg, inward=True)
        C0, _, s = _walk(problem, geo, zcol, cfg, e.other, e, geo.eps[e], C, None, True, rtol)
        bv[e.other] = C0[:, 0]
        segs.extend(s)
    else:
        x0 = float(anchor)
        if not problem.a < x0 < problem.b:
            raise RangeMismatch(f"anchor {x0} outside ({problem.a}, {problem.b})")
        region, pos = geo.region(problem, x0)
        state = data if region is None else _to_c(problem, region, pos, data)
        for target in Endpoint:
            C0, _, s = _walk(problem, geo, zcol, cfg, target, region, pos, state, None, True, rtol)
            bv[target] = C0[:, 0]
            segs.extend(s)
    return SolutionFn(problem, z, segs, bv, anchor=(anchor, data[:, 0].copy()))


def integrate_tau(problem: Problem, z: float, x0: float, x1: float, init,
                  cfg: NumericsConfig | None = None) -> SolutionFn:
    """Integrate ``y' = y^[1]/p, (y^[1])' = (q - z r) y`` from ``x0`` to ``x1``.

    The result is only valid on ``[min(x0,x1), max(x0,x1)]``; use
    :func:`extend` to continue it to the endpoints.

    Examples
    --------
    >>> from slext.problem import builtin_free
    >>> f = integrate_tau(builtin_free(), 0.0, 0.0 + 1e-9, 1.0 - 1e-9, (1e-9, 1.0))
    >>> round(float(f(0.5)[0]), 12)
    0.5
    """
    cfg = resolve(cfg)
    if not (problem.a <= min(x0, x1) and max(x0, x1) <= problem.b) or x0 == x1:
        raise RangeMismatch(f"[{x0}, {x1}] is not inside ({problem.a}, {problem.b})")
    Y = np.asarray(init, dtype=float).reshape(2, 1)
    _, _, pieces = _iseg(problem, np.array([float(z)]), Y, None, x0, x1, cfg, dense=True)
    segs = [("y", lo, hi, sol) for lo, hi, sol in pieces]
    return SolutionFn(problem, z, segs, valid_range=(min(x0, x1), max(x0, x1)),
                      anchor=(float(x0), Y[:, 0].copy()))


def extend(problem: Problem, f: SolutionFn, cfg: NumericsConfig | None = None) -> SolutionFn:
    """Continue a solution to the whole interval (no-op for full solutions)."""
    if f.is_full:
        return f
    if f.anchor is None:
        raise RangeMismatch("cannot extend a solution without an anchor")
    where, data = f.anchor
    if isinstance(where, (int, float, np.floating)) and not problem.a < where < problem.b:
        lo, hi = f.valid_range
        where = 0.5 * (lo + hi)
        data = np.array([float(v) for v in f(where)])
    return solve(problem, f.z, where, data, cfg)


def wronskian(f: SolutionFn, g: SolutionFn, x) -> float:
    """``W(f, g)(x) = f g^[1] - f^[1] g``."""
    for h in (f, g):
        lo, hi = h.valid_range
        xa = np.asarray(x, dtype=float)
        if np.any(xa < lo) or np.any(xa > hi):
            raise RangeMismatch(f"x={x} outside valid range ({lo:g}, {hi:g})")
    fy, f1 = f(x)
    gy, g1 = g(x)
    return fy * g1 - f1 * gy


def wronskian_near(f: SolutionFn, g: SolutionFn, which, t):
    """Wronskian at distance ``t`` from an endpoint, evaluated in seed coordinates."""
    fy, f1 = f.near(which, t)
    gy, g1 = g.near(which, t)
    return fy * g1 - f1 * gy


# ---------------------------------------------------------------- quadrature

_GL = {n: np.polynomial.legendre.leggauss(n) for n in (10, 20)}


def _panel_sums(fun, lo, hi):
    """Two Gauss-Legendre estimates on each panel ``[lo_i, hi_i]``."""
    lo, hi = np.asarray(lo), np.asarray(hi)
    out = []
    for n in (10, 20):
        x, w = _GL[n]
        pts = lo[:, None] + (hi - lo)[:, None] * (x[None, :] + 1) / 2
        vals = fun(pts.reshape(-1)).reshape(pts.shape)
        out.append(np.sum(vals * w[None, :], axis=1) * (hi - lo) / 2)
    return out[0], out[1]


def _adaptive(fun, edges, tol_density, max_splits):
    """Integrate over consecutive panels, splitting those that disagree."""
    lo, hi = np.asarray(edges[:-1], float), np.asarray(edges[1:], float)
    total, err = 0.0, 0.0
    for _ in range(max_splits + 1):
        q10, q20 = _panel_sums(fun, lo, hi)
        diff = np.abs(q20 - q10)
        ok = diff <= tol_density * (hi - lo) + 1e-14 * np.abs(q20)
        total += float(np.sum(q20[ok]))
        err += float(np.sum(diff[ok]))
        if np.all(ok):
            return total, err
        lo, hi = lo[~ok], hi[~ok]
        mid = 0.5 * (lo + hi)
        lo, hi = np.concatenate([lo, mid]), np.concatenate([mid, hi])
    raise QuadratureNoConvergence(f"{lo.size} panels failed to converge")


def l2r_inner(problem: Problem, f: SolutionFn, g: SolutionFn,
              cfg: NumericsConfig | None = None) -> QuadResult:
    """``<f, g> = integral of f g r`` over the whole interval.

    Geometric panels (ratio 2) toward each endpoint down to the seed offset,
    closed-form seed integrals below it, and oscillation-adapted panels
    inside.
    """
    cfg = resolve(cfg)
    f, g = extend(problem, f, cfg), extend(problem, g, cfg)
    geo = _Geometry(problem, cfg)
    L = problem.length
    density = cfg.quad_tol / L
    total, err = 0.0, 0.0
    for e in Endpoint:
        eps, R = geo.eps[e], geo.reach[e]
        ihh, ihu, iuu = problem.tail_integrals(e, cfg)
        fa, fpa = f.boundary_values(e)
        ga, gpa = g.boundary_values(e)
        total += fa * ga * ihh + (fa * gpa + fpa * ga) * ihu + fpa * gpa * iuu
        n = max(1, int(np.ceil(np.log2(R / eps))))
        edges = np.minimum(eps * 2.0 ** np.arange(n + 1), R)
        edges[-1] = R

        def integrand(t, e=e):
            return problem.r_at(e, t) * f.near(e, t)[0] * g.near(e, t)[0]

        v, er = _adaptive(integrand, edges, density, cfg.quad_max_splits)
        total, err = total + v, err + er
    xa, xb = geo.switch[LEFT], geo.switch[RIGHT]
    freq = np.sqrt(abs(f.z)) + np.sqrt(abs(g.z)) + 1.0
    nodes = [xa, *[x for x in problem.breakpoints() if xa < x < xb], xb]
    for lo, hi in zip(nodes[:-1], nodes[1:]):
        n = max(4, int(np.ceil((hi - lo) * freq)))
        edges = np.linspace(lo, hi, n + 1)

        def integrand(x):
            return problem.coeffs.r(x) * f(x)[0] * g(x)[0]

        v, er = _adaptive(integrand, edges, density, cfg.quad_max_splits)
        total, err = total + v, err + er
    return QuadResult(float(total), float(err))
