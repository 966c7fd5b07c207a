"""Nonnegative self-adjoint extensions: classification, ranges and order.

All maps are parameterized by the :class:`~slext.boundary.DataPack`. The
auxiliary operator ``B`` of an extension lives on a subspace ``W`` of the
null space of the maximal operator; ``dim W = 2`` gives a Hermitian matrix
``(b11, b12; conj b12, b22)``, ``dim W = 1`` a scalar ``kappa`` on the line
spanned by ``vhat_a + c u_a`` (or ``u_a`` when ``c = inf``), and ``dim W = 0``
the Friedrichs extension.
"""

from __future__ import annotations

import cmath
import enum
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .boundary import DataPack, b_side_data, extension_data_pack, krein_matrix
from .config import NumericsConfig, resolve
from .errors import (
    ComplexCWithNonrealBoundary,
    DenominatorZero,
    NonnegativityViolated,
    NotNonnegative,
    PathDisagreement,
)
from .problem import Problem
from .specs import PI, Coupled, Separated, arccot, parse_spec

INFINITY = math.inf

__all__ = [
    "AuxB1", "AuxB2", "INFINITY", "NonnegResult", "PartialOrderResult", "classify_dim1",
    "classify_dim2", "compare_dim2", "compare_separated", "friedrichs_spec", "invert_spec",
    "is_nonnegative", "krein_spec", "nonneg_range_fixed_beta", "nonneg_range_fixed_beta_alt",
    "separated_floors",
]


class PartialOrderResult(enum.Enum):
    LESS_OR_EQUAL = "LessOrEqual"
    GREATER_OR_EQUAL = "GreaterOrEqual"
    EQUAL = "Equal"
    INCOMPARABLE = "Incomparable"


@dataclass(frozen=True)
class AuxB2:
    """``B`` on the full two-dimensional null space."""

    b11: float
    b12: complex
    b22: float

    def nonnegativity_margin(self, pack: DataPack) -> float:
        return self.b11 * self.b22 * pack.norm2_u - abs(self.b12) ** 2 * pack.norm2_v

    def check(self, pack: DataPack, tol: float = 1e-12) -> None:
        scale = 1.0 + abs(self.b11 * self.b22) * pack.norm2_u + abs(self.b12) ** 2 * pack.norm2_v
        if self.b11 < -tol or self.b22 < -tol or self.nonnegativity_margin(pack) < -tol * scale:
            raise NonnegativityViolated(
                f"B = ({self.b11:g}, {self.b12:g}, {self.b22:g}) is not nonnegative: "
                f"b11 b22 ||u||^2 - |b12|^2 ||vhat||^2 = {self.nonnegativity_margin(pack):.6g}"
            )


@dataclass(frozen=True)
class AuxB1:
    """``B = kappa`` on the line ``W_c``; ``c = INFINITY`` selects ``span{u_a}``."""

    kappa: float
    c: complex = INFINITY

    def __post_init__(self):
        if not self.kappa >= 0:
            raise NonnegativityViolated(f"kappa={self.kappa!r} must be >= 0")

    @property
    def is_infinite(self) -> bool:
        return isinstance(self.c, float) and math.isinf(self.c)


def friedrichs_spec() -> Separated:
    """The Friedrichs extension: ``g~(a) = g~(b) = 0``."""
    return Separated(PI, PI)


def krein_spec(problem: Problem, cfg: NumericsConfig | None = None) -> Coupled:
    """The Krein-von Neumann extension ``Coupled(0, R_K)``."""
    return Coupled(0.0, krein_matrix(problem, cfg))


# ---------------------------------------------------------------- dim W = 2

def _separation_b12(pack: DataPack, b11: float) -> float:
    return (b11 * pack.v_b / pack.u_b * pack.norm2_u - 1.0) / pack.norm2_v


def _coupled_from_complex(M: np.ndarray, tol: float = 1e-9) -> Coupled:
    """Write a complex matrix with ``|det| = 1`` as ``e^{i eta} R`` with real ``R``."""
    det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    eta = (cmath.phase(det) / 2.0) % PI
    if abs(eta - PI) < 1e-13:
        eta = 0.0
    R = M * cmath.exp(-1j * eta)
    if np.max(np.abs(R.imag)) > tol * (1.0 + np.max(np.abs(R.real))):
        raise ComplexCWithNonrealBoundary("boundary matrix is not a phase times a real matrix")
    return Coupled(eta, R.real)


def classify_dim2(pack: DataPack, B: AuxB2):
    """Boundary conditions of the extension with auxiliary matrix ``B``.

    Returns :class:`Separated` when ``b12`` equals the separation value
    ``(b11 (v_b/u_b) ||u||^2 - 1) / ||vhat||^2`` (relative tolerance 1e-9)
    and :class:`Coupled` otherwise.

    Raises
    ------
    NonnegativityViolated
        If ``B`` is not a nonnegative matrix in the weighted sense.
    """
    B.check(pack)
    ub, upb, vb, vpb, vpa, nu, nv = pack.as_tuple()
    sep = _separation_b12(pack, B.b11)
    b12 = complex(B.b12)
    gap = abs(b12 - sep)
    if gap <= 1e-9 * max(1.0, abs(sep)):
        cot_a = B.b11 * (vb / ub) ** 2 * nu - B.b22 * nv - vpa - vb / ub
        cot_b = (upb - B.b11 * nu / ub) / ub
        return Separated(arccot(cot_a), arccot(cot_b))
    if gap <= 1e-6 * max(1.0, abs(sep)):
        warnings.warn("b12 is close to the separation value; treating the condition as coupled",
                      RuntimeWarning, stacklevel=2)
    D = 1.0 - B.b11 * vb / ub * nu + b12 * nv
    bracket = nv * (B.b22 * ub - b12.conjugate() * vb + ub * vpa / nv)
    beta_term = upb - B.b11 * nu / ub
    M = np.array([
        [vb - bracket / D, ub / D],
        [vpb - b12.conjugate() * nv / ub - beta_term * bracket / (ub * D), beta_term / D],
    ], dtype=complex)
    return _coupled_from_complex(M)


# ---------------------------------------------------------------- dim W = 1

def classify_dim1(pack: DataPack, B: AuxB1):
    """Boundary conditions of the extension with ``B = kappa`` on ``W_c``.

    Raises
    ------
    ComplexCWithNonrealBoundary
        For non-real ``c``: the resulting conditions mix ``c`` and its
        conjugate and are not represented here.
    """
    ub, upb, vb, vpb, vpa, nu, nv = pack.as_tuple()
    k = float(B.kappa)
    if B.is_infinite:
        return Separated(PI, arccot((upb - k * nu / ub) / ub))
    c = complex(B.c)
    if abs(c.imag) > 1e-14 * max(1.0, abs(c)):
        raise ComplexCWithNonrealBoundary(f"c={c} is not real; only real c is supported")
    c = c.real
    if abs(c - pack.c_f) <= 1e-12 * max(1.0, abs(c)):
        return Separated(arccot(vb / ub - vpa - k * (nv + (vb / ub) ** 2 * nu)), PI)
    r11 = vb + c * ub
    r21 = vpb + c * upb - k * c * nu / ub - (k * (nv - c * vb / ub * nu) + c + vpa) / r11
    return Coupled(0.0, [[r11, 0.0], [r21, 1.0 / r11]])


# ------------------------------------------------------- fixed beta' ranges

def nonneg_range_fixed_beta(pack: DataPack, beta_p: float, uhat_b: float | None = None,
                            uhatp_b: float | None = None) -> float:
    """Smallest ``alpha`` giving a nonnegative ``(alpha, beta')`` extension.

    ``alpha_min = arccot((cos b' uhat~(b) - sin b' uhat~'(b)) /
    (cos b' u~(b) - sin b' u~'(b)))``; the admissible set is
    ``[alpha_min, pi]`` and only ``alpha_min`` has zero as an eigenvalue.

    Raises
    ------
    DenominatorZero
        If zero is an eigenvalue of the ``(pi, beta')`` extension.
    """
    uh = pack.uhat_b if uhat_b is None else uhat_b
    uhp = pack.uhatp_b if uhatp_b is None else uhatp_b
    num = math.cos(beta_p) * uh - math.sin(beta_p) * uhp
    den = math.cos(beta_p) * pack.u_b - math.sin(beta_p) * pack.up_b
    if abs(den) <= 1e-12 * (abs(pack.u_b) + abs(pack.up_b)):
        raise DenominatorZero(f"beta'={beta_p:.6g}: zero is an eigenvalue of the (pi, beta') extension")
    return arccot(num / den)


def nonneg_range_fixed_beta_alt(b_side: dict, beta_p: float, B: float = 0.0,
                                eta_norm2: float | None = None) -> float:
    """The same range floor from the seeds at ``b``.

    With ``eta = sin b' uhat_b + cos b' u_b`` and ``d = cos b' u_b~(a) +
    sin b' uhat_b~(a)`` the ``(alpha, beta')`` extension with parameter
    ``B >= 0`` has ``cot(alpha) = -(cos b' u_b~'(a) + sin b' uhat_b~'(a))/d
    - B ||eta||^2 / d^2``. ``B = 0`` gives the floor.
    """
    c, s = math.cos(beta_p), math.sin(beta_p)
    d = c * b_side["u_a"] + s * b_side["uhat_a"]
    if abs(d) <= 1e-12 * (abs(b_side["u_a"]) + abs(b_side["uhat_a"])):
        raise DenominatorZero(f"beta'={beta_p:.6g}: eta~(a) vanishes")
    arg = -(c * b_side["up_a"] + s * b_side["uhatp_a"]) / d
    if B:
        if eta_norm2 is None:
            raise ValueError("eta_norm2 is required when B > 0")
        arg -= B * eta_norm2 / d**2
    return arccot(arg)


def separated_floors(pack: DataPack) -> tuple:
    """``(alpha_floor, beta_floor)``: floors with the other endpoint Dirichlet-type."""
    return (arccot(pack.uhat_b / pack.u_b), arccot(pack.up_b / pack.u_b))


# ------------------------------------------------------------------- order

def _cmp_pair(x1, y1, x2, y2, tol=1e-12):
    if abs(x1 - x2) <= tol and abs(y1 - y2) <= tol:
        return PartialOrderResult.EQUAL
    if x1 <= x2 + tol and y1 <= y2 + tol:
        return PartialOrderResult.LESS_OR_EQUAL
    if x1 >= x2 - tol and y1 >= y2 - tol:
        return PartialOrderResult.GREATER_OR_EQUAL
    return PartialOrderResult.INCOMPARABLE


def compare_separated(s1: Separated, s2: Separated, alpha_floor: float = 0.0,
                      beta_floor: float = 0.0) -> PartialOrderResult:
    """Order of two nonnegative separated extensions: compare both angles.

    Raises
    ------
    NotNonnegative
        If an angle lies below its floor.
    """
    for s in (s1, s2):
        if s.alpha < alpha_floor - 1e-12 or s.beta < beta_floor - 1e-12:
            raise NotNonnegative(f"{s} lies below the floors ({alpha_floor:.6g}, {beta_floor:.6g})")
    return _cmp_pair(s1.alpha, s1.beta, s2.alpha, s2.beta)


def _leq_dim2(B: AuxB2, Bh: AuxB2, pack: DataPack, tol=1e-12) -> bool:
    d11, d22 = Bh.b11 - B.b11, Bh.b22 - B.b22
    d12 = complex(Bh.b12) - complex(B.b12)
    scale = 1.0 + abs(d11 * d22) * pack.norm2_u + abs(d12) ** 2 * pack.norm2_v
    return (d11 >= -tol and d22 >= -tol
            and d11 * d22 * pack.norm2_u - abs(d12) ** 2 * pack.norm2_v >= -tol * scale)


def compare_dim2(B: AuxB2, Bh: AuxB2, pack: DataPack) -> PartialOrderResult:
    """Order of ``T_B`` and ``T_Bh``: ``T_B <= T_Bh`` iff ``Bh - B`` is nonnegative."""
    B.check(pack)
    Bh.check(pack)
    if (abs(B.b11 - Bh.b11) <= 1e-14 and abs(B.b22 - Bh.b22) <= 1e-14
            and abs(complex(B.b12) - complex(Bh.b12)) <= 1e-14):
        return PartialOrderResult.EQUAL
    if _leq_dim2(B, Bh, pack):
        return PartialOrderResult.LESS_OR_EQUAL
    if _leq_dim2(Bh, B, pack):
        return PartialOrderResult.GREATER_OR_EQUAL
    return PartialOrderResult.INCOMPARABLE


# --------------------------------------------------- inverse classification

def invert_spec(pack: DataPack, spec) -> dict:
    """Auxiliary parameters that realize ``spec`` (inverse of the classification).

    The result always contains ``dim_W`` and, depending on it, ``b11, b12,
    b22`` or ``kappa, c``. It does not decide nonnegativity.
    """
    spec = parse_spec(spec)
    ub, upb, vb, vpb, vpa, nu, nv = pack.as_tuple()
    if isinstance(spec, Separated):
        a_pi, b_pi = spec.alpha == PI, spec.beta == PI
        if a_pi and b_pi:
            return {"dim_W": 0}
        if a_pi:
            kappa = (upb / ub - 1.0 / math.tan(spec.beta)) * ub * ub / nu
            return {"dim_W": 1, "kappa": kappa, "c": INFINITY}
        if b_pi:
            kappa = (pack.uhat_b / ub - 1.0 / math.tan(spec.alpha)) / (nv + (vb / ub) ** 2 * nu)
            return {"dim_W": 1, "kappa": kappa, "c": pack.c_f}
        b11 = (upb - ub / math.tan(spec.beta)) * ub / nu
        b12 = _separation_b12(pack, b11)
        b22 = (b11 * (vb / ub) ** 2 * nu - vpa - vb / ub - 1.0 / math.tan(spec.alpha)) / nv
        return {"dim_W": 2, "b11": b11, "b12": b12, "b22": b22}
    M = cmath.exp(1j * spec.eta) * spec.matrix.astype(complex)
    if abs(spec.R[0][1]) <= 1e-12 * (1.0 + np.max(np.abs(spec.matrix))):
        # dim W = 1 with finite c: M12 = 0, M11 = vhat~(b) + c u~(b)
        c = (M[0, 0] - vb) / ub
        coef = -c * nu / ub - (nv - c * vb / ub * nu) / M[0, 0]
        rhs = M[1, 0] - vpb - c * upb + (c + vpa) / M[0, 0]
        kappa = rhs / coef if abs(coef) > 0 else complex(math.nan)
        c_out = c.real if abs(c.imag) <= 1e-12 * max(1.0, abs(c)) else c
        return {"dim_W": 1, "kappa": kappa, "c": c_out}
    D = ub / M[0, 1]
    b11 = (upb - M[1, 1] * D) * ub / nu
    b12 = (D - 1.0 + b11 * vb / ub * nu) / nv
    b22 = ((vb - M[0, 0]) * D / nv + b12.conjugate() * vb - ub * vpa / nv) / ub
    return {"dim_W": 2, "b11": b11, "b12": b12, "b22": b22}


def _params_nonnegative(pack: DataPack, params: dict, tol: float) -> bool:
    dim = params["dim_W"]
    if dim == 0:
        return True
    if dim == 1:
        k = complex(params["kappa"])
        return abs(k.imag) <= tol * max(1.0, abs(k)) and k.real >= -tol * max(1.0, abs(k))
    b11, b22, b12 = complex(params["b11"]), complex(params["b22"]), complex(params["b12"])
    scale = 1.0 + abs(b11) + abs(b22) + abs(b12)
    if abs(b11.imag) > tol * scale or abs(b22.imag) > tol * scale:
        return False
    margin = b11.real * b22.real * pack.norm2_u - abs(b12) ** 2 * pack.norm2_v
    big = 1.0 + abs(b11 * b22) * pack.norm2_u + abs(b12) ** 2 * pack.norm2_v
    return b11.real >= -tol * scale and b22.real >= -tol * scale and margin >= -tol * big


@dataclass(frozen=True)
class NonnegResult:
    """Verdict of :func:`is_nonnegative` with the evidence of both paths."""

    nonnegative: bool
    witness: dict
    lowest_eigenvalue: float
    kernel_dim: int
    algebraic: bool
    spectral: bool
    notes: list = field(default_factory=list)

    def __bool__(self):
        return self.nonnegative


def is_nonnegative(problem: Problem, spec, cfg: NumericsConfig | None = None,
                   tol: float = 1e-8) -> NonnegResult:
    """Decide nonnegativity of an extension by two independent paths.

    The algebraic path inverts the classification maps and checks the
    resulting auxiliary parameters. The spectral path computes the lowest
    eigenvalue and compares it with ``-1e-9`` times ``pi^2/L^2``.

    Raises
    ------
    PathDisagreement
        If the two verdicts differ.
    """
    from .spectra import eigenvalues_below

    cfg = resolve(cfg)
    spec = parse_spec(spec)
    pack = extension_data_pack(problem, cfg)
    params = invert_spec(pack, spec)
    algebraic = _params_nonnegative(pack, params, tol)
    scale = PI**2 / problem.length**2
    low = eigenvalues_below(problem, spec, 1e-6 * scale, cfg)
    lam_min = low.eigenvalues[0].value if low.eigenvalues else math.nan
    if not low.eigenvalues:
        from .spectra import lowest_eigenvalue
        lam_min = lowest_eigenvalue(problem, spec, cfg)
    spectral = lam_min >= -1e-9 * scale
    kernel = sum(e.multiplicity for e in low.eigenvalues if abs(e.value) <= 1e-6 * scale)
    if algebraic != spectral:
        raise PathDisagreement(
            f"{spec}: algebraic verdict {algebraic} (params {params}) but lowest eigenvalue "
            f"{lam_min:.6g}"
        )
    witness = dict(params)
    if params["dim_W"] == 0:
        witness["name"] = "Friedrichs"
    return NonnegResult(algebraic, witness, lam_min, kernel, algebraic, spectral)


def b_side_floor(problem: Problem, beta_p: float, cfg: NumericsConfig | None = None) -> float:
    """Range floor for fixed ``beta'`` computed from the seeds at ``b``."""
    return nonneg_range_fixed_beta_alt(b_side_data(problem, cfg), beta_p)
