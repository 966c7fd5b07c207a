"""Characteristic functions and eigenvalues of self-adjoint extensions.

The fundamental system ``theta, phi`` is fixed at ``a`` by
``(theta~, theta~')(a) = (1, 0)`` and ``(phi~, phi~')(a) = (0, 1)``, i.e.
``theta = uhat_a`` and ``phi = u_a`` at ``z = 0``. The eigenvalues of an
extension are the zeros of its characteristic function, with multiplicity.

Scanning strategy. ``F`` and ``dF/dz`` (from the variational equations) are
evaluated on a grid whose step follows the local oscillation rate. A sign
change with monotone ``F`` brackets one simple root, refined by safeguarded
Newton. An interval where ``|F|`` has a local minimum is resolved by locating
the critical point of ``F``: a sign change there splits it into two simple
roots, a near-zero value marks a double root.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .config import NumericsConfig, resolve
from .errors import DetNotOne, ScanExhausted, ScanTooCoarse
from .odecore import propagate
from .problem import Endpoint, Problem
from .specs import PI, Coupled, Separated, parse_spec

__all__ = [
    "Eigenvalue", "FundamentalData", "Spectrum", "char_coupled", "char_coupled_real",
    "char_separated", "characteristic", "eigenvalues", "eigenvalues_below",
    "first_eigenvalues", "fundamental_system", "lowest_eigenvalue",
]

# |F(c)| below this multiple of the local scale at a critical point of F is
# indistinguishable from integration noise: the root is reported as double
NOISE_FLOOR = 1e-7


@dataclass(frozen=True)
class FundamentalData:
    """``theta~, theta~', phi~, phi~'`` at ``b`` (arrays over ``z``).

    The ``d*`` fields hold z-derivatives when requested.
    """

    z: np.ndarray
    theta_b: np.ndarray
    thetap_b: np.ndarray
    phi_b: np.ndarray
    phip_b: np.ndarray
    dtheta_b: np.ndarray | None = None
    dthetap_b: np.ndarray | None = None
    dphi_b: np.ndarray | None = None
    dphip_b: np.ndarray | None = None

    def determinant(self):
        """``theta~ phi~' - theta~' phi~``, equal to 1 for every z."""
        return self.theta_b * self.phip_b - self.thetap_b * self.phi_b

    def matrix(self, i: int = 0) -> np.ndarray:
        return np.array([[self.theta_b[i], self.phi_b[i]], [self.thetap_b[i], self.phip_b[i]]])

    def __len__(self):
        return self.z.size


def fundamental_system(problem: Problem, z, cfg: NumericsConfig | None = None,
                       derivative: bool = False, rtol: float | None = None) -> FundamentalData:
    """Evaluate the fundamental system at ``b`` for every ``z``.

    >>> from slext.problem import builtin_free
    >>> fd = fundamental_system(builtin_free(), 0.0)
    >>> [round(float(v), 12) for v in (fd.theta_b[0], fd.thetap_b[0], fd.phi_b[0], fd.phip_b[0])]
    [1.0, 0.0, 1.0, 1.0]
    """
    z = np.atleast_1d(np.asarray(z, dtype=float))
    C, W = propagate(problem, z, np.eye(2), Endpoint.LEFT, cfg, derivative=derivative, rtol=rtol)
    d = (None,) * 4 if W is None else (W[0, 0], W[1, 0], W[0, 1], W[1, 1])
    return FundamentalData(z, C[0, 0], C[1, 0], C[0, 1], C[1, 1], *d)


# --------------------------------------------------- characteristic functions

def _sep_parts(fd: FundamentalData, alpha, beta, deriv: bool):
    ca, sa, cb, sb = math.cos(alpha), math.sin(alpha), math.cos(beta), math.sin(beta)
    if deriv:
        th, thp, ph, php = fd.dtheta_b, fd.dthetap_b, fd.dphi_b, fd.dphip_b
    else:
        th, thp, ph, php = fd.theta_b, fd.thetap_b, fd.phi_b, fd.phip_b
    return ca * (-sb * php + cb * ph) - sa * (-sb * thp + cb * th)


def char_separated(fd: FundamentalData, alpha: float, beta: float):
    """``F = cos a [-sin b phi~'(b) + cos b phi~(b)] - sin a [-sin b theta~'(b) + cos b theta~(b)]``."""
    return _sep_parts(fd, alpha, beta, False)


def _check_R(R) -> np.ndarray:
    R = np.asarray(R, dtype=float)
    det = R[0, 0] * R[1, 1] - R[0, 1] * R[1, 0]
    if abs(det - 1.0) > 1e-9:
        raise DetNotOne(f"det R = {det:.12g}, expected 1")
    return R


def _coup_lin(fd: FundamentalData, R, deriv: bool):
    if deriv:
        th, thp, ph, php = fd.dtheta_b, fd.dthetap_b, fd.dphi_b, fd.dphip_b
    else:
        th, thp, ph, php = fd.theta_b, fd.thetap_b, fd.phi_b, fd.phip_b
    return R[0, 1] * thp - R[1, 1] * th + R[1, 0] * ph - R[0, 0] * php


def char_coupled(fd: FundamentalData, eta: float, R):
    """``F = e^{i eta} (R12 theta~' - R22 theta~ + R21 phi~ - R11 phi~') + e^{2 i eta} + 1``.

    Real (returned as float array) when ``eta = 0``.
    """
    R = _check_R(R)
    lin = _coup_lin(fd, R, False)
    if eta == 0.0:
        return lin + 2.0
    w = np.exp(1j * eta)
    return w * lin + w * w + 1.0


def char_coupled_real(fd: FundamentalData, eta: float, R):
    """``e^{-i eta} F``: real for every ``eta`` and with the same zeros."""
    R = _check_R(R)
    return _coup_lin(fd, R, False) + 2.0 * math.cos(eta)


def characteristic(problem: Problem, spec, z, cfg: NumericsConfig | None = None):
    """Characteristic function of ``spec`` at the points ``z``."""
    spec = parse_spec(spec)
    fd = fundamental_system(problem, z, cfg)
    if isinstance(spec, Separated):
        return char_separated(fd, spec.alpha, spec.beta)
    return char_coupled(fd, spec.eta, spec.matrix)


def _fd_norm(fd: FundamentalData):
    """Frobenius norm of the fundamental matrix: the size of F's terms."""
    return np.sqrt(fd.theta_b**2 + fd.thetap_b**2 + fd.phi_b**2 + fd.phip_b**2)


def _evaluator(problem: Problem, spec, cfg: NumericsConfig):
    """Return ``f(z) -> (F, dF/dz, scale)`` with the real characteristic function."""
    if isinstance(spec, Separated):
        a, b = spec.alpha, spec.beta

        def parts(fd):
            return _sep_parts(fd, a, b, False), _sep_parts(fd, a, b, True), _fd_norm(fd)
    else:
        R, ce = spec.matrix, 2.0 * math.cos(spec.eta)
        nR = float(np.linalg.norm(R))

        def parts(fd):
            F = _coup_lin(fd, R, False) + ce
            return F, _coup_lin(fd, R, True), nR * _fd_norm(fd) + 2.0

    def f(z, rtol=None):
        z = np.atleast_1d(np.asarray(z, dtype=float))
        if z.size == 0:
            e = np.empty(0)
            return e, e, e
        fd = fundamental_system(problem, z, cfg, derivative=True, rtol=rtol)
        return parts(fd)

    return f


# ----------------------------------------------------------------- results

@dataclass(frozen=True)
class Eigenvalue:
    value: float
    multiplicity: int
    residual: float
    scale: float = 1.0

    def to_dict(self):
        return {"eigenvalue": self.value, "multiplicity": self.multiplicity,
                "residual": self.residual, "scale": self.scale}


@dataclass
class Spectrum:
    """Sorted eigenvalues with multiplicities and root residuals ``|F(lambda)|``."""

    eigenvalues: list
    scan_window: tuple
    spec: object = None
    notes: list = field(default_factory=list)

    def values(self, n: int | None = None) -> np.ndarray:
        """Eigenvalues repeated according to multiplicity."""
        out = [e.value for e in self.eigenvalues for _ in range(e.multiplicity)]
        return np.array(out if n is None else out[:n])

    def count(self) -> int:
        return sum(e.multiplicity for e in self.eigenvalues)

    def __len__(self):
        return len(self.eigenvalues)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "eigenvalue", "multiplicity", "residual"])
        for i, e in enumerate(self.eigenvalues, 1):
            w.writerow([i, repr(e.value), e.multiplicity, f"{e.residual:.3e}"])
        return buf.getvalue()

    def to_dict(self):
        return {
            "spec": None if self.spec is None else self.spec.to_dict(),
            "scan_window": list(self.scan_window),
            "eigenvalues": [dict(index=i, **e.to_dict()) for i, e in enumerate(self.eigenvalues, 1)],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_csv(cls, text: str) -> "Spectrum":
        rows = list(csv.DictReader(io.StringIO(text)))
        eig = [Eigenvalue(float(r["eigenvalue"]), int(r["multiplicity"]), float(r["residual"]))
               for r in rows]
        lo = eig[0].value if eig else 0.0
        hi = eig[-1].value if eig else 0.0
        return cls(eig, (lo, hi))


# ------------------------------------------------------------ root finding

def _hermite_root(z0, z1, F0, F1, d0, d1) -> float:
    """Root in ``(z0, z1)`` of the cubic Hermite interpolant (midpoint if none)."""
    h = z1 - z0
    # p(s) = F0 h00 + h d0 h10 + F1 h01 + h d1 h11 on s in [0, 1]
    c3 = 2 * F0 + h * d0 - 2 * F1 + h * d1
    c2 = -3 * F0 - 2 * h * d0 + 3 * F1 - h * d1
    c1 = h * d0
    r = np.roots([c3, c2, c1, F0]) if np.all(np.isfinite([c3, c2, c1, F0])) else []
    s = [v.real for v in r if abs(v.imag) < 1e-9 and 0.0 < v.real < 1.0]
    return z0 + h * (s[0] if len(s) == 1 else 0.5)


def _newton(f, lo, hi, flo, x0, cfg):
    """Vectorized safeguarded Newton on brackets ``[lo, hi]`` with ``F(lo) = flo``.

    Returns the roots together with ``|F|`` and the scale at the last
    evaluated iterate (an upper bound on the residual at the root).
    """
    lo, hi, flo, x = (np.array(v, dtype=float) for v in (lo, hi, flo, x0))
    done = np.zeros(x.size, bool)
    Fx, Sx = np.full(x.size, np.nan), np.ones(x.size)
    for _ in range(cfg.root_maxiter):
        act = ~done
        if not act.any():
            break
        F, dF, S = f(x[act])
        Fa, Sa = Fx[act], Sx[act]
        Fa[:], Sa[:] = F, S
        Fx[act], Sx[act] = Fa, Sa
        xa, loa, hia, fla = x[act], lo[act], hi[act], flo[act]
        same = np.sign(F) == np.sign(fla)
        loa = np.where(same, xa, loa)
        fla = np.where(same, F, fla)
        hia = np.where(same, hia, xa)
        with np.errstate(divide="ignore", invalid="ignore"):
            xn = xa - F / dF
        bad = ~np.isfinite(xn) | (xn <= loa) | (xn >= hia)
        xn = np.where(bad, 0.5 * (loa + hia), xn)
        tol = cfg.root_rtol * np.maximum(1.0, np.abs(xa))
        conv = (~bad & (np.abs(xn - xa) <= tol)) | (F == 0) | (hia - loa <= tol)
        x[act] = np.where(F == 0, xa, xn)
        lo[act], hi[act], flo[act] = loa, hia, fla
        idx = np.flatnonzero(act)
        done[idx[conv]] = True
    return x, np.abs(Fx), Sx


def _illinois_derivative(f, lo, hi, dlo, dhi, cfg):
    """Vectorized Illinois iteration for a zero of ``dF/dz`` in ``[lo, hi]``."""
    lo, hi, dlo, dhi = (np.array(v, dtype=float) for v in (lo, hi, dlo, dhi))
    side = np.zeros(lo.size, int)
    for _ in range(2 * cfg.root_maxiter):
        tol = cfg.root_rtol * np.maximum(1.0, np.abs(lo))
        act = (hi - lo) > tol
        if not act.any():
            break
        with np.errstate(divide="ignore", invalid="ignore"):
            x = hi - dhi * (hi - lo) / (dhi - dlo)
        x = np.where(np.isfinite(x) & (x > lo) & (x < hi), x, 0.5 * (lo + hi))
        _, d, _ = f(x[act])
        dx = np.zeros(lo.size)
        dx[act] = d
        left = act & (np.sign(dx) == np.sign(dlo))
        right = act & ~left
        # Illinois: halve the stale endpoint value when the same side moves twice
        dhi = np.where(left & (side == 1), 0.5 * dhi, dhi)
        dlo = np.where(right & (side == -1), 0.5 * dlo, dlo)
        lo, dlo = np.where(left, x, lo), np.where(left, dx, dlo)
        hi, dhi = np.where(right, x, hi), np.where(right, dx, dhi)
        side = np.where(left, 1, np.where(right, -1, side))
        stuck = act & (dx == 0)
        lo, hi = np.where(stuck, x, lo), np.where(stuck, x, hi)
    return 0.5 * (lo + hi)


def _match_tol(lam: float, cfg) -> float:
    return max(cfg.match_abs, cfg.match_rel * abs(lam))


def _resolve_intervals(f, z, F, dF, S, cfg):
    """Roots of F within the intervals of a sorted grid."""
    brackets, valleys = [], []
    pts = list(zip(z, F, dF, S))
    pending = list(zip(pts[:-1], pts[1:]))
    depth = 0
    while pending:
        split = []
        for (z0, F0, d0, s0), (z1, F1, d1, _) in pending:
            if F0 == 0.0:
                brackets.append((z0, z0, F0, s0, z0))
                continue
            slope = F1 - F0
            if F0 * F1 < 0:
                if (d0 * slope > 0 and d1 * slope > 0) or depth >= cfg.max_refine_depth:
                    brackets.append((z0, z1, F0, None, _hermite_root(z0, z1, F0, F1, d0, d1)))
                else:
                    split.append(((z0, F0, d0, s0), (z1, F1, d1, _)))
            elif F1 != 0.0 and np.sign(F0) * d0 < 0 and np.sign(F1) * d1 > 0:
                # |F| decreases then increases: possible double root or hidden pair
                valleys.append((z0, z1, F0, F1, d0, d1))
        if not split:
            break
        mids = np.array([0.5 * (p[0] + q[0]) for p, q in split])
        Fm, Dm, Sm = f(mids)
        pending = []
        for (p, q), m in zip(split, zip(mids, Fm, Dm, Sm)):
            pending += [(p, m), (m, q)]
        depth += 1

    roots = []
    if valleys:
        lo = [v[0] for v in valleys]
        hi = [v[1] for v in valleys]
        c = _illinois_derivative(f, lo, hi, [v[4] for v in valleys], [v[5] for v in valleys], cfg)
        Fc, Dc, Sc = f(c)
        for (z0, z1, F0, F1, d0, d1), ci, fc, sc in zip(valleys, c, Fc, Sc):
            if abs(fc) <= NOISE_FLOOR * sc or (np.sign(fc) == np.sign(F0)
                                                 and abs(fc) <= cfg.double_root_tol * sc):
                roots.append(Eigenvalue(float(ci), 2, float(abs(fc)), float(sc)))
            elif np.sign(fc) != np.sign(F0):
                brackets.append((z0, float(ci), F0, None, 0.5 * (z0 + ci)))
                brackets.append((float(ci), z1, fc, None, 0.5 * (ci + z1)))
    simple = [b for b in brackets if b[3] is None]
    for z0, _, F0, s, _ in brackets:
        if s is not None:
            roots.append(Eigenvalue(float(z0), 1, 0.0, float(s)))
    if simple:
        x, Fx, Sx = _newton(f, *([b[i] for b in simple] for i in (0, 1, 2, 4)), cfg)
        roots.extend(Eigenvalue(float(a), 1, float(b), float(c)) for a, b, c in zip(x, Fx, Sx))
    roots.sort(key=lambda e: e.value)
    return _merge_close(roots, cfg)


def _merge_close(roots, cfg):
    out = []
    for e in roots:
        if out and e.value - out[-1].value <= _match_tol(e.value, cfg) and out[-1].multiplicity == 1 \
                and e.multiplicity == 1:
            p = out.pop()
            out.append(Eigenvalue(0.5 * (p.value + e.value), 2, max(p.residual, e.residual),
                                  max(p.scale, e.scale)))
        else:
            out.append(e)
    return out


# ----------------------------------------------------------------- scanning

def _base_step(problem: Problem) -> float:
    return PI**2 / (8.0 * problem.length**2)


def _step(problem: Problem, z: float, cfg) -> float:
    L = problem.length
    h0 = cfg.scan_step_factor * PI**2 / L**2
    return max(h0, cfg.scan_step_factor * math.sqrt(abs(z)) * PI / L)


def _grid_start(problem: Problem, cfg) -> float:
    # keeps z = 0 (the Krein double root) away from grid points
    return 0.381966 * cfg.scan_step_factor * PI**2 / problem.length**2


def _negative_grid(problem: Problem, z0: float, z_lo: float, cfg):
    """Descending grid from ``z0`` down to ``z_lo``, uniform then geometric in sqrt(-z)."""
    L = problem.length
    s_lo = math.sqrt(max(-z_lo, 0.0))
    pts = [z0]
    s = 0.0
    while True:
        s += max(0.5 / L, s / 8.0)
        if s >= s_lo:
            break
        pts.append(-s * s)
    if z_lo < pts[-1]:
        pts.append(z_lo)
    return pts


def _positive_chunk(problem: Problem, z_start: float, z_hi: float, cfg, size: int = 32):
    pts = [z_start]
    while len(pts) < size + 1 and pts[-1] < z_hi:
        pts.append(min(pts[-1] + _step(problem, pts[-1], cfg), z_hi))
    return pts


def _below_friedrichs_bound(spec) -> int:
    """Upper bound on the number of eigenvalues below the Friedrichs ground state."""
    if isinstance(spec, Separated):
        return int(spec.alpha < PI) + int(spec.beta < PI)
    return 1 if spec.R[0][1] == 0.0 else 2


def _weyl_gap(problem: Problem) -> float | None:
    co = problem.coeffs
    try:
        val, _ = integrate.quad(lambda x: math.sqrt(float(co.r(x)) / float(co.p(x))),
                                problem.a, problem.b, limit=200)
    except Exception:  # noqa: BLE001 - the check is optional
        return None
    return PI / val if val > 0 and math.isfinite(val) else None


def _gap_check(problem: Problem, spec, eig: list) -> None:
    """Flag a missed root: a gap in sqrt(lambda) near twice the asymptotic spacing."""
    if not isinstance(spec, Separated):
        return
    g = _weyl_gap(problem)
    if g is None:
        return
    s = [math.sqrt(e.value) for e in eig if e.value > (2.0 * g) ** 2]
    for s0, s1 in zip(s[:-1], s[1:]):
        if s1 - s0 > 1.75 * g:
            raise ScanTooCoarse(
                f"gap between sqrt-eigenvalues {s0:.6g} and {s1:.6g} exceeds 1.75x the "
                f"asymptotic spacing {g:.6g}; a root was probably missed"
            )


def _scan_window(f, grid, cfg):
    # the grid only needs signs and slopes: use the looser scan tolerance
    F, dF, S = f(np.array(grid), rtol=max(cfg.rtol, cfg.scan_rtol))
    return _resolve_intervals(f, np.array(grid), F, dF, S, cfg)


def eigenvalues(problem: Problem, spec, z_lo: float | None = None, z_hi: float | None = None,
                n_max: int | None = None, cfg: NumericsConfig | None = None) -> Spectrum:
    """Eigenvalues of the extension ``spec`` in ``(z_lo, z_hi)``.

    Parameters
    ----------
    z_lo, z_hi : float, optional
        Scan window. Without ``z_lo`` the scan starts near zero and descends
        until the number of nonpositive eigenvalues reaches the bound allowed
        by the extension (two for a generic coupled condition, fewer when an
        endpoint is of Friedrichs type), or until ``-(max_growth/L)^2``.
        Without ``z_hi`` it ascends until ``n_max`` eigenvalues are found.
    n_max : int, optional
        Stop after this many eigenvalues counted with multiplicity. A double
        root straddling the limit is kept whole.

    Raises
    ------
    ScanTooCoarse
        If the spacing of separated-condition eigenvalues suggests a missed root.
    ScanExhausted
        If no window end is given and the ascent goes far beyond the expected
        range without finding ``n_max`` eigenvalues.
    """
    cfg = resolve(cfg)
    spec = parse_spec(spec)
    if z_hi is None and n_max is None:
        raise ValueError("give z_hi or n_max")
    if z_lo is not None and z_hi is not None and not z_lo < z_hi:
        raise ValueError(f"empty scan window ({z_lo}, {z_hi})")
    f = _evaluator(problem, spec, cfg)
    L = problem.length
    z_floor = -(cfg.max_growth / L) ** 2
    z0 = _grid_start(problem, cfg)
    found = []
    window_lo = z_floor if z_lo is None else z_lo

    if z_lo is None or z_lo < z0:
        bound = _below_friedrichs_bound(spec)
        top = z0 if z_hi is None else min(z0, z_hi)
        neg = _negative_grid(problem, top, window_lo, cfg)
        if z_lo is not None:
            neg = neg if len(neg) > 1 else [top, z_lo]
        if bound > 0 or z_lo is not None:
            # descend in two pieces; the deep piece is skipped once the bound is met
            cut = next((i for i, v in enumerate(neg) if v < -(8.0 / L) ** 2), len(neg))
            first = neg[:cut + 1] if cut < len(neg) else neg
            found += _scan_window(f, first[::-1], cfg)
            if cut < len(neg) - 1 and (z_lo is not None or sum(e.multiplicity for e in found
                                                              if e.value <= top) < bound):
                found += _scan_window(f, neg[cut:][::-1], cfg)
        start = top
    else:
        start = z_lo
    if z_hi is not None and start >= z_hi:
        return _finish(problem, spec, found, (window_lo, z_hi), n_max)

    cap = PI**2 / L**2 * 1e6
    z = start
    while True:
        hi = z_hi if z_hi is not None else math.inf
        grid = _positive_chunk(problem, z, hi, cfg)
        found += _scan_window(f, grid, cfg)
        z = grid[-1]
        if n_max is not None and sum(e.multiplicity for e in found) >= n_max:
            break
        if z_hi is not None and z >= z_hi:
            break
        if z > cap:
            raise ScanExhausted(f"no {n_max} eigenvalues below {cap:.3g}")
    return _finish(problem, spec, found, (window_lo, z), n_max)


def _finish(problem, spec, found, window, n_max):
    found = _merge_close(sorted(found, key=lambda e: e.value), resolve(None))
    found = [e for e in found if window[0] < e.value < window[1]]
    if n_max is not None:
        out, k = [], 0
        for e in found:
            if k >= n_max:
                break
            out.append(e)
            k += e.multiplicity
        found = out
    _gap_check(problem, spec, found)
    return Spectrum(found, tuple(window), spec)


def first_eigenvalues(problem: Problem, spec, n: int, cfg: NumericsConfig | None = None) -> np.ndarray:
    """The ``n`` lowest eigenvalues repeated according to multiplicity."""
    return eigenvalues(problem, spec, n_max=n, cfg=cfg).values(n)


def eigenvalues_below(problem: Problem, spec, bound: float,
                      cfg: NumericsConfig | None = None) -> Spectrum:
    """All eigenvalues below ``bound`` (scanning down to the default floor)."""
    cfg = resolve(cfg)
    z_floor = -(cfg.max_growth / problem.length) ** 2
    return eigenvalues(problem, spec, z_floor, bound, cfg=cfg)


def lowest_eigenvalue(problem: Problem, spec, cfg: NumericsConfig | None = None) -> float:
    """Smallest eigenvalue of the extension ``spec``."""
    sp = eigenvalues(problem, spec, n_max=1, cfg=cfg)
    if not sp.eigenvalues:
        raise ScanExhausted("no eigenvalue found")
    return sp.eigenvalues[0].value
