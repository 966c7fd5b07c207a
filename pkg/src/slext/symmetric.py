"""Problems with coefficients symmetric about the midpoint.

On such a problem every reflection-invariant extension splits into two
extensions of the half problem on ``(a, m)``, ``m = (a+b)/2``: one with a
Dirichlet condition at ``m`` and one with a Neumann condition there. The
half-problem fundamental system at ``m`` determines the full one at ``b``
(``theta~(b) = phi~'(b) = 1 + 2 phi theta'``, ``phi~(b) = 2 phi phi'``,
``theta~'(b) = 2 theta theta'``), so the characteristic functions factor.

Two-interval problems on ``(-A, 0) U (0, A)`` are handled the same way: both
pieces are reflections of one half problem and an interior coupling ``R0``
decomposes like a coupled condition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .boundary import extension_data_pack
from .config import NumericsConfig, resolve
from .errors import (
    MidpointValueZero,
    NotReflectionInvariant,
    NotSymmetric,
    UnsupportedCoupling,
)
from .extensions import PartialOrderResult, compare_separated, nonneg_range_fixed_beta
from .problem import (
    Endpoint,
    Interval,
    Problem,
    _probe_points,
    builtin_bessel,
    builtin_regular,
    make_problem,
    numeric_regular_seed,
)
from .spectra import (
    FundamentalData,
    char_coupled,
    char_separated,
    eigenvalues,
    fundamental_system,
)
from .specs import PI, Coupled, Separated, arccot, parse_spec

__all__ = [
    "HalfDecomposition", "OuterCoupled", "OuterFixed", "OuterLimitPoint", "SymmetricInvariance",
    "TwoIntervalDecomposition", "check_symmetry", "compare_coupled_symmetric",
    "decompose", "decompose_coupled", "decompose_separated", "decomposition_report",
    "factorization_residual", "half_problem", "stated_constant",
    "stated_factorization_residual", "match_multisets", "nu_mu",
    "recompose_coupled", "reflected_boundary_data", "spec_is_reflection_invariant",
    "two_interval_decompose",
]

INV_TOL = 1e-12


# -------------------------------------------------------------- predicates

def check_symmetry(problem: Problem, rel: float = 1e-10) -> bool:
    """True iff ``p, q, r`` agree at 64 mirrored probe pairs."""
    iv = problem.interval
    xs = _probe_points(Interval(iv.left, iv.mid), 64)
    ys = iv.left + iv.right - xs
    for f in (problem.coeffs.p, problem.coeffs.q, problem.coeffs.r):
        u = np.asarray(f(xs), dtype=float) * np.ones_like(xs)
        v = np.asarray(f(ys), dtype=float) * np.ones_like(ys)
        if not np.all(np.abs(u - v) <= rel * np.maximum(1.0, np.maximum(abs(u), abs(v)))):
            return False
    return True


@dataclass(frozen=True)
class SymmetricInvariance:
    is_invariant: bool
    reason: str

    def __bool__(self):
        return self.is_invariant


def spec_is_reflection_invariant(spec) -> SymmetricInvariance:
    """Separated: ``alpha = beta``. Coupled: ``eta = 0`` and ``R11 = R22``."""
    spec = parse_spec(spec)
    if isinstance(spec, Separated):
        if abs(spec.alpha - spec.beta) <= INV_TOL:
            return SymmetricInvariance(True, "alpha equals beta")
        return SymmetricInvariance(False, f"alpha={spec.alpha:.12g} differs from beta={spec.beta:.12g}")
    if spec.eta != 0.0:
        return SymmetricInvariance(False, f"eta={spec.eta:.12g} is not zero")
    (r11, _), (_, r22) = spec.R
    if abs(r11 - r22) > INV_TOL:
        return SymmetricInvariance(False, f"R11={r11:.12g} differs from R22={r22:.12g}")
    return SymmetricInvariance(True, "eta = 0 and R11 = R22")


# ------------------------------------------------------------- half problem

def half_problem(problem: Problem, cfg: NumericsConfig | None = None) -> Problem:
    """The restriction of a symmetric problem to ``(a, (a+b)/2)``.

    The midpoint is a regular endpoint whose generalized boundary values are
    the classical ``(g, p g')``.

    Raises
    ------
    NotSymmetric
    """
    cache = problem._cache
    if "half" in cache:
        return cache["half"]
    if not check_symmetry(problem):
        raise NotSymmetric(f"{problem.label or 'problem'} is not symmetric about its midpoint")
    a, m = problem.a, problem.interval.mid
    if problem.family in ("symmetric_bessel", "bessel") and problem.gamma is not None:
        half = builtin_bessel(problem.gamma, a, m)
    elif problem.family == "regular":
        co = problem.coeffs
        half = builtin_regular((a, m), float(co.p(a)), float(co.q(a)), float(co.r(a)))
    else:
        iv = Interval(a, m)
        seed_b = numeric_regular_seed(problem.coeffs, Endpoint.RIGHT, m, 0.25 * iv.length, cfg)
        half = make_problem(iv, problem.coeffs, problem.seed_a, seed_b,
                            label=f"half of {problem.label}", family=problem.family,
                            gamma=problem.gamma, cfg=cfg)
    cache["half"] = half
    return half


def reflected_boundary_data(half_fd: FundamentalData) -> FundamentalData:
    """Full-interval ``theta~(b), theta~'(b), phi~(b), phi~'(b)`` from midpoint values.

    >>> import numpy as np
    >>> fd = FundamentalData(np.zeros(1), *(np.array([v]) for v in (1.0, 0.0, 1.0, 1.0)))
    >>> float(reflected_boundary_data(fd).phi_b[0])
    2.0
    """
    th, thp, ph, php = half_fd.theta_b, half_fd.thetap_b, half_fd.phi_b, half_fd.phip_b
    diag = 1.0 + 2.0 * ph * thp
    return FundamentalData(half_fd.z, diag, 2.0 * th * thp, 2.0 * ph * php, diag)


def nu_mu(half: Problem, cfg: NumericsConfig | None = None) -> tuple:
    """Floors ``(nu, mu)`` of the half problem at ``z = 0``.

    ``nu = arccot(theta(m)/phi(m))`` bounds the Dirichlet piece and
    ``mu = arccot(theta'(m)/phi'(m))`` the Neumann piece; ``T_{alpha,alpha}``
    on the full interval is nonnegative iff ``alpha >= max(nu, mu)``.

    Raises
    ------
    MidpointValueZero
        If ``phi(m)`` or ``phi'(m)`` vanishes.
    """
    fd = fundamental_system(half, 0.0, cfg)
    th, thp, ph, php = (float(v[0]) for v in (fd.theta_b, fd.thetap_b, fd.phi_b, fd.phip_b))
    scale = abs(th) + abs(thp) + abs(ph) + abs(php)
    if abs(ph) <= 1e-14 * scale or abs(php) <= 1e-14 * scale:
        raise MidpointValueZero(f"phi(m)={ph:.3g}, phi'(m)={php:.3g}: a floor is undefined")
    return arccot(th / ph), arccot(thp / php)


# ------------------------------------------------------------ decompositions

@dataclass(frozen=True)
class HalfDecomposition:
    """Half-interval pieces of a reflection-invariant extension."""

    dirichlet_spec: Separated
    neumann_spec: Separated
    source: object

    @property
    def alphas(self) -> tuple:
        return self.dirichlet_spec.alpha, self.neumann_spec.alpha

    def reconstruct(self):
        """Full-interval spec recovered from the two angles."""
        a, ap = self.alphas
        if isinstance(self.source, Separated):
            return Separated(a, a)
        return Coupled(0.0, recompose_coupled(a, ap))


def decompose_separated(alpha: float, source=None) -> HalfDecomposition:
    """``T_{alpha,alpha}`` splits into ``T^h_{alpha,pi}`` and ``T^h_{alpha,pi/2}``."""
    s = Separated(alpha, alpha) if source is None else source
    return HalfDecomposition(Separated(alpha, PI), Separated(alpha, PI / 2), s)


def decompose_coupled(R) -> tuple:
    """Angles ``(alpha, alpha')`` with ``T_{0,R} ~ T^h_{alpha,pi} + T^h_{alpha',pi/2}``.

    Raises
    ------
    NotReflectionInvariant
        If ``R11 != R22``.
    """
    R = np.asarray(R, dtype=float)
    r11, r12, r21, r22 = R[0, 0], R[0, 1], R[1, 0], R[1, 1]
    if abs(r11 - r22) > INV_TOL * max(1.0, abs(r11)):
        raise NotReflectionInvariant(f"R11={r11:.12g} differs from R22={r22:.12g}")
    if abs(r12) > INV_TOL * max(1.0, abs(r11), abs(r21)):
        return arccot((r11 + 1.0) / r12), arccot((r11 - 1.0) / r12)
    if abs(r11 + 1.0) <= 1e-9:
        return arccot(-r21 / 2.0), PI
    if abs(r11 - 1.0) <= 1e-9:
        return PI, arccot(r21 / 2.0)
    raise NotReflectionInvariant(f"R12=0 forces R11=+-1, got R11={r11:.12g}")


def recompose_coupled(alpha: float, alpha_p: float) -> np.ndarray:
    """Inverse of :func:`decompose_coupled` (``R21`` from ``det R = 1``)."""
    if alpha == PI and alpha_p == PI:
        raise NotReflectionInvariant("(pi, pi) does not come from a coupled condition")
    if alpha_p == PI:
        return np.array([[-1.0, 0.0], [-2.0 / math.tan(alpha), -1.0]])
    if alpha == PI:
        return np.array([[1.0, 0.0], [2.0 / math.tan(alpha_p), 1.0]])
    ca, cp = 1.0 / math.tan(alpha), 1.0 / math.tan(alpha_p)
    if abs(ca - cp) < 1e-14:
        raise NotReflectionInvariant("equal angles do not come from a coupled condition")
    r12 = 2.0 / (ca - cp)
    r11 = r12 * ca - 1.0
    return np.array([[r11, r12], [(r11 * r11 - 1.0) / r12, r11]])


def decompose(spec) -> HalfDecomposition:
    """Half pieces of any reflection-invariant spec."""
    spec = parse_spec(spec)
    inv = spec_is_reflection_invariant(spec)
    if not inv:
        raise NotReflectionInvariant(inv.reason)
    if isinstance(spec, Separated):
        return decompose_separated(spec.alpha, spec)
    a, ap = decompose_coupled(spec.matrix)
    return HalfDecomposition(Separated(a, PI), Separated(ap, PI / 2), spec)


def compare_coupled_symmetric(R, Rh, floors: tuple) -> PartialOrderResult:
    """Order of ``T_{0,R}`` and ``T_{0,Rh}`` on a symmetric problem.

    Both reduce to half pieces with fixed midpoint angles, so ``T_{0,R} <=
    T_{0,Rh}`` iff ``alpha <= alpha_h`` and ``alpha' <= alpha_h'``.

    Raises
    ------
    NotNonnegative
        If an angle lies below its floor (``floors = (nu, mu)``).
    """
    nu, mu = floors
    a, ap = decompose_coupled(R)
    b, bp = decompose_coupled(Rh)
    return compare_separated(Separated(a, ap), Separated(b, bp), nu, mu)


# ----------------------------------------------------------- factorizations

def _half_F(hfd, alpha, beta):
    return char_separated(hfd, alpha, beta)


def factorization_residual(problem: Problem, spec, z, cfg: NumericsConfig | None = None) -> dict:
    """Compare the full characteristic function with the product of half ones.

    The full function comes from integrating across the whole interval; the
    factors from the half problem. For separated ``(alpha, alpha)`` the
    identity is ``F = 2 F^h_{alpha,pi} F^h_{alpha,pi/2}``. For coupled
    ``R12 != 0`` it is ``F = 2 R12 / (sin a sin a') F^h_{a,pi} F^h_{a',pi/2}``;
    for ``R12 = 0`` the constant is ``4 / sin(alpha)`` (``R11 = -1``) or
    ``-4 / sin(alpha')`` (``R11 = 1``).

    Returns
    -------
    dict
        ``full``, ``factor`` (the half product with its constant),
        ``product`` (the bare half product), ``constant`` and ``residual``.
    """
    spec = parse_spec(spec)
    inv = spec_is_reflection_invariant(spec)
    if not inv:
        raise NotReflectionInvariant(inv.reason)
    z = np.atleast_1d(np.asarray(z, dtype=float))
    fd = fundamental_system(problem, z, cfg)
    hfd = fundamental_system(half_problem(problem, cfg), z, cfg)
    if isinstance(spec, Separated):
        full = char_separated(fd, spec.alpha, spec.beta)
        prod = _half_F(hfd, spec.alpha, PI) * _half_F(hfd, spec.alpha, PI / 2)
        const = 2.0
    else:
        full = char_coupled(fd, 0.0, spec.matrix)
        a, ap = decompose_coupled(spec.matrix)
        prod = _half_F(hfd, a, PI) * _half_F(hfd, ap, PI / 2)
        r12, r11 = spec.R[0][1], spec.R[0][0]
        if a < PI and ap < PI:
            const = 2.0 * r12 / (math.sin(a) * math.sin(ap))
        elif r11 < 0:
            const = 4.0 / math.sin(a)
        else:
            const = -4.0 / math.sin(ap)
    factor = const * prod
    return {"z": z, "full": full, "product": prod, "constant": const, "factor": factor,
            "residual": np.abs(full - factor)}


def stated_constant(spec) -> float:
    """Prefactor of the half product as stated in the factorization criterion.

    ``-2`` for separated ``(alpha, alpha)``, ``-2 R12 / (sin a sin a')`` for
    coupled ``R12 != 0`` and ``2`` (through ``F = 2 theta phi'``) for ``R = -I``.
    These differ from the constants verified by :func:`factorization_residual`;
    the function exists so that the stated form can be tested as written.
    """
    spec = parse_spec(spec)
    if isinstance(spec, Separated):
        return -2.0
    a, ap = decompose_coupled(spec.matrix)
    if a < PI and ap < PI:
        return -2.0 * spec.R[0][1] / (math.sin(a) * math.sin(ap))
    if spec.R[0][0] < 0:
        return 2.0
    raise NotReflectionInvariant("no stated constant for R11 = 1, R12 = 0")


def stated_factorization_residual(problem: Problem, spec, z,
                                     cfg: NumericsConfig | None = None) -> dict:
    """Like :func:`factorization_residual` but with :func:`stated_constant`."""
    out = factorization_residual(problem, spec, z, cfg)
    c = stated_constant(spec)
    out.update(constant=c, factor=c * out["product"])
    out["residual"] = np.abs(out["full"] - out["factor"])
    return out


# ------------------------------------------------------------- two intervals

@dataclass(frozen=True)
class OuterFixed:
    """Separated condition with angle ``beta_p`` at both outer ends."""

    beta_p: float


@dataclass(frozen=True)
class OuterLimitPoint:
    """Outer ends handled by the seeds alone; acts like ``OuterFixed(pi)``."""

    @property
    def beta_p(self) -> float:
        return PI


@dataclass(frozen=True)
class OuterCoupled:
    """Reflection-invariant coupling ``Ra`` between the two outer ends."""

    Ra: tuple


@dataclass(frozen=True)
class TwoIntervalDecomposition:
    specs: tuple
    angles: dict
    inner: tuple
    outer: object = None
    notes: list = field(default_factory=list)


def two_interval_decompose(R0, outer) -> TwoIntervalDecomposition:
    """Half-problem specs equivalent to a two-interval extension.

    The half problem lives on ``(0, A)`` with the interior point ``0`` as its
    left endpoint; the interior transfer is ``(g~(0-), g~'(0-)) = R0
    (g~(0+), g~'(0+))``.

    Raises
    ------
    NotReflectionInvariant
        If ``R0`` (or the outer ``Ra``) has unequal diagonal entries.
    UnsupportedCoupling
        For a 4x4 coupling of all four endpoints.
    """
    R0 = np.asarray(R0, dtype=float)
    if R0.shape == (4, 4) or (isinstance(outer, np.ndarray) and outer.shape == (4, 4)):
        raise UnsupportedCoupling("couplings of all four endpoints are not supported")
    a, ap = decompose_coupled(R0)
    if isinstance(outer, (OuterFixed, OuterLimitPoint)):
        bp = outer.beta_p
        specs = (Separated(a, bp), Separated(ap, bp))
        angles = {"alpha": a, "alpha_p": ap, "beta_p": bp}
    elif isinstance(outer, OuterCoupled):
        Ra = np.asarray(outer.Ra, dtype=float)
        if Ra.shape != (2, 2):
            raise UnsupportedCoupling("outer coupling must be 2x2")
        b, bp = decompose_coupled(Ra)
        specs = (Separated(a, b), Separated(ap, bp))
        angles = {"alpha": a, "alpha_p": ap, "beta": b, "beta_p": bp}
    else:
        raise UnsupportedCoupling(f"unknown outer condition {outer!r}")
    return TwoIntervalDecomposition(specs, angles, (a, ap), outer)


def compare_two_interval(d1: TwoIntervalDecomposition, d2: TwoIntervalDecomposition) -> PartialOrderResult:
    """Componentwise order on all angles of two decompositions."""
    results = {compare_separated(s, t) for s, t in zip(d1.specs, d2.specs)}
    if results == {PartialOrderResult.EQUAL}:
        return PartialOrderResult.EQUAL
    results.discard(PartialOrderResult.EQUAL)
    return results.pop() if len(results) == 1 else PartialOrderResult.INCOMPARABLE


# ----------------------------------------------------------------- spectra

def match_multisets(xs, ys, abs_tol: float = 1e-7, rel_tol: float = 1e-9) -> dict:
    """Greedy nearest matching of two eigenvalue lists.

    Returns ``matched`` pairs, ``unmatched`` entries of each list and
    ``max_error``; ``ok`` is True iff every entry found a partner within
    ``max(abs_tol, rel_tol |x|)``.
    """
    xs, ys = sorted(map(float, xs)), sorted(map(float, ys))
    free = list(ys)
    pairs, left = [], []
    for x in xs:
        if not free:
            left.append(x)
            continue
        j = int(np.argmin([abs(x - y) for y in free]))
        if abs(x - free[j]) <= max(abs_tol, rel_tol * abs(x)):
            pairs.append((x, free.pop(j)))
        else:
            left.append(x)
    err = max((abs(x - y) for x, y in pairs), default=0.0)
    return {"ok": not left and not free, "matched": pairs, "unmatched_left": left,
            "unmatched_right": free, "max_error": err}


def union_check(problem: Problem, spec, n: int = 8, cfg: NumericsConfig | None = None,
                tol: float = 1e-7) -> dict:
    """First ``n`` eigenvalues of the full extension against the merged half spectra."""
    cfg = resolve(cfg)
    dec = decompose(spec)
    half = half_problem(problem, cfg)
    full = eigenvalues(problem, dec.source, n_max=n, cfg=cfg).values(n)
    d = eigenvalues(half, dec.dirichlet_spec, n_max=n, cfg=cfg).values(n)
    m = eigenvalues(half, dec.neumann_spec, n_max=n, cfg=cfg).values(n)
    merged = np.sort(np.concatenate([d, m]))[:n]
    res = match_multisets(full, merged, tol, 1e-9)
    res.update(full=full, merged=merged, decomposition=dec)
    return res


def decomposition_report(problem: Problem, spec, verify: bool = False, n: int = 8,
                         cfg: NumericsConfig | None = None) -> str:
    """Structured text: source spec, half angles, floors and verdicts."""
    dec = decompose(spec)
    half = half_problem(problem, cfg)
    lines = [f"problem: {problem.label}", f"source: {dec.source}"]
    a, ap = dec.alphas
    lines.append(f"alpha: {a:.15g}")
    lines.append(f"alpha_p: {ap:.15g}")
    lines.append(f"dirichlet_piece: {dec.dirichlet_spec}")
    lines.append(f"neumann_piece: {dec.neumann_spec}")
    try:
        nu, mu = nu_mu(half, cfg)
        lines.append(f"floor_nu (function values): {nu:.15g}")
        lines.append(f"floor_mu (quasi-derivatives): {mu:.15g}")
        ok = a >= nu - 1e-12 and ap >= mu - 1e-12
        lines.append(f"nonnegative: {'yes' if ok else 'no'}")
    except MidpointValueZero as exc:
        lines.append(f"floors: undefined ({exc.one_line()})")
    if verify:
        res = union_check(problem, spec, n, cfg)
        lines.append(f"union_check: {'pass' if res['ok'] else 'FAIL'} "
                     f"(max error {res['max_error']:.3e} over {n} eigenvalues)")
    return "\n".join(lines) + "\n"


def pack_floor_check(half: Problem, cfg: NumericsConfig | None = None) -> dict:
    """``nu, mu`` recomputed as the fixed-``beta'`` range floors of the half problem."""
    pack = extension_data_pack(half, cfg)
    return {"nu": nonneg_range_fixed_beta(pack, PI), "mu": nonneg_range_fixed_beta(pack, PI / 2)}
