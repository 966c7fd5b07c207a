"""The eleven end-to-end acceptance checks.

Each check returns a :class:`CriterionResult` holding the individual
comparisons it made. :func:`run_all` runs them in order and
:func:`format_table` renders one PASS/FAIL line per criterion. The command
line ``selftest`` and the test suite both call into here.
"""

from __future__ import annotations

import math
import time
import traceback
from dataclasses import dataclass, field

import numpy as np

from . import bessel, oracles
from .boundary import (
    extension_data_pack,
    generalized_boundary_values,
    regauge,
    xi_boundary_check,
)
from .config import NumericsConfig, resolve
from .extensions import (
    AuxB2,
    PartialOrderResult,
    b_side_floor,
    classify_dim2,
    compare_dim2,
    krein_spec,
    nonneg_range_fixed_beta,
)
from .odecore import solve, wronskian
from .problem import builtin_bessel, builtin_free, builtin_symmetric_bessel
from .spectra import eigenvalues, lowest_eigenvalue
from .specs import PI, Coupled, Separated
from .symmetric import (
    OuterFixed,
    factorization_residual,
    match_multisets,
    stated_factorization_residual,
    two_interval_decompose,
    union_check,
)

__all__ = ["CRITERIA", "Check", "CriterionResult", "format_table", "run_all", "run_criterion"]


@dataclass
class Check:
    name: str
    value: float
    bound: float
    ok: bool

    def line(self) -> str:
        mark = "ok" if self.ok else "FAIL"
        return f"{self.name}: {self.value:.3e} (bound {self.bound:.1e}) {mark}"


@dataclass
class CriterionResult:
    number: int
    title: str
    checks: list = field(default_factory=list)
    seconds: float = 0.0
    error: str | None = None
    notes: list = field(default_factory=list)
    skipped: bool = False

    @property
    def passed(self) -> bool:
        return self.error is None and all(c.ok for c in self.checks)

    def add(self, name: str, value: float, bound: float, ok: bool | None = None) -> None:
        value = float(value)
        self.checks.append(Check(name, value, bound, bool(value <= bound) if ok is None else bool(ok)))

    def summary(self) -> str:
        if self.error:
            return self.error
        bad = [c for c in self.checks if not c.ok]
        if bad:
            return f"{len(bad)}/{len(self.checks)} checks failed; first: {bad[0].line()}"
        return f"{len(self.checks)} checks"


def _rel(a, b):
    a, b = np.asarray(a, float), np.asarray(b, float)
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300)))


# ---------------------------------------------------------------- criteria

def crit1(res: CriterionResult, cfg, fast):
    """Closed-form spectra of the free problem."""
    t0 = time.perf_counter()
    P = builtin_free(0.0, 1.0)
    k = np.arange(1, 11)
    dd = eigenvalues(P, Separated(PI, PI), n_max=10, cfg=cfg).values(10)
    dn = eigenvalues(P, Separated(PI, PI / 2), n_max=10, cfg=cfg).values(10)
    res.add("dirichlet count", abs(len(dd) - 10), 0)
    res.add("neumann count", abs(len(dn) - 10), 0)
    if len(dd) == 10:
        res.add("dirichlet rel error", _rel(dd, (k * PI) ** 2), 1e-8)
    if len(dn) == 10:
        res.add("dirichlet-neumann rel error", _rel(dn, ((2 * k - 1) * PI / 2) ** 2), 1e-8)
    res.add("runtime [s]", time.perf_counter() - t0, 5.0)


def crit2(res, cfg, fast):
    """Separated reflection-invariant extensions split into half pieces."""
    t0 = time.perf_counter()
    for g in (0.0, 0.3, 0.5, 0.7):
        P = builtin_symmetric_bessel(g, 0.0, 2.0)
        for alpha in (PI, PI / 2, 2.0):
            r = union_check(P, Separated(alpha, alpha), 8, cfg)
            res.add(f"gamma={g} alpha={alpha:.4f} max error", r["max_error"], 1e-7, r["ok"])
    res.add("runtime [s]", time.perf_counter() - t0, 60.0)


def crit3(res, cfg, fast):
    """Periodic and antiperiodic conditions on the free symmetric problem."""
    P = builtin_symmetric_bessel(0.5, 0.0, 2.0)
    k = np.arange(1, 5)
    closed = {
        "periodic": np.sort(np.concatenate([[0.0], (k * PI) ** 2, (k * PI) ** 2]))[:8],
        "antiperiodic": np.sort(np.repeat(((2 * k - 1) * PI / 2) ** 2, 2))[:8],
    }
    for name, sign in (("periodic", 1.0), ("antiperiodic", -1.0)):
        r = union_check(P, Coupled(0.0, sign * np.eye(2)), 8, cfg)
        res.add(f"{name} vs half pieces", r["max_error"], 1e-7, r["ok"])
        m = match_multisets(r["full"], closed[name])
        res.add(f"{name} vs closed form", m["max_error"], 1e-7, m["ok"])


def crit4(res, cfg, fast):
    """The Krein-von Neumann extension has a double eigenvalue at zero."""
    free = builtin_free(0.0, 1.0)
    RK = krein_spec(free, cfg).matrix
    res.add("free R_K entrywise error", np.max(np.abs(RK - np.array([[1.0, 1.0], [0.0, 1.0]]))), 1e-9)
    for P in (free, builtin_bessel(0.3, 0.0, 1.0)):
        spec = krein_spec(P, cfg)
        sp = eigenvalues(P, spec, n_max=2, cfg=cfg)
        e = sp.eigenvalues[0]
        res.add(f"{P.label}: |lowest eigenvalue|", abs(e.value), 1e-7)
        res.add(f"{P.label}: multiplicity at zero", abs(e.multiplicity - 2), 0)
        res.add(f"{P.label}: root residual", e.residual, 1e-8)
        pack = extension_data_pack(P, cfg)
        cls = classify_dim2(pack, AuxB2(0.0, 0.0, 0.0))
        ok = isinstance(cls, Coupled) and cls.eta == 0.0
        err = np.max(np.abs(cls.matrix - spec.matrix)) if ok else math.inf
        res.add(f"{P.label}: classify(B=0) vs R_K", err, 1e-9, ok and err <= 1e-9)


def crit5(res, cfg, fast):
    """Range floor for a fixed condition at the right endpoint."""
    P = builtin_free(0.0, 1.0)
    pack = extension_data_pack(P, cfg)
    amin = nonneg_range_fixed_beta(pack, PI)
    res.add("alpha_min - pi/4", abs(amin - PI / 4), 1e-9)
    res.add("|lambda_min| at alpha_min", abs(lowest_eigenvalue(P, Separated(amin, PI), cfg)), 1e-7)
    lam = lowest_eigenvalue(P, Separated(amin + 0.1, PI), cfg)
    res.add("lambda_min > 0 at alpha_min + 0.1", -lam, 0.0, lam > 0)
    res.add("route difference", abs(amin - b_side_floor(P, PI, cfg)), 1e-8)


def _random_B(rng, pack):
    b11, b22 = rng.uniform(0.0, 3.0, 2)
    r = math.sqrt(b11 * b22 * pack.norm2_u / pack.norm2_v) * rng.uniform(0.0, 1.0)
    phase = rng.choice([0.0, PI, rng.uniform(0, 2 * PI)])
    b12 = r * complex(math.cos(phase), math.sin(phase))
    return AuxB2(b11, b12.real if b12.imag == 0.0 else b12, b22)


def crit6(res, cfg, fast):
    """Spectral bottoms respect the order of extensions."""
    P = builtin_free(0.0, 1.0)
    pack = extension_data_pack(P, cfg)
    amin = nonneg_range_fixed_beta(pack, PI)
    lams = [lowest_eigenvalue(P, Separated(a, PI), cfg) for a in np.linspace(amin, PI, 5)]
    drops = [lams[i] - lams[i + 1] for i in range(4)]
    res.add("largest decrease of lambda_min over alpha", max(0.0, max(drops)), 1e-9)
    rng = np.random.default_rng(2024)
    ordered = 0
    for i in range(10):
        B = _random_B(rng, pack)
        if i % 2 == 0:
            d = _random_B(rng, pack)
            Bh = AuxB2(B.b11 + d.b11, complex(B.b12) + complex(d.b12), B.b22 + d.b22)
        else:
            Bh = _random_B(rng, pack)
        verdict = compare_dim2(B, Bh, pack)
        l1 = lowest_eigenvalue(P, classify_dim2(pack, B), cfg)
        l2 = lowest_eigenvalue(P, classify_dim2(pack, Bh), cfg)
        tol = 1e-8 * max(1.0, abs(l1), abs(l2))
        if verdict is PartialOrderResult.LESS_OR_EQUAL:
            gap, ordered = l1 - l2, ordered + 1
        elif verdict is PartialOrderResult.GREATER_OR_EQUAL:
            gap, ordered = l2 - l1, ordered + 1
        elif verdict is PartialOrderResult.EQUAL:
            gap = abs(l1 - l2)
        else:
            gap = -math.inf
        res.add(f"pair {i} ({verdict.value}) order violation", max(gap, 0.0), tol)
    res.add("ordered pairs among 10", ordered, 10, ordered >= 1)


def crit7(res, cfg, fast):
    """Factorization of characteristic functions, with the stated constants."""
    P = builtin_symmetric_bessel(0.3, 0.0, 2.0)
    z = np.linspace(-5.0, 60.0, 25)
    worst_true = 0.0
    for alpha in (PI, PI / 2, 2.2):
        spec = Separated(alpha, alpha)
        lit = stated_factorization_residual(P, spec, z, cfg)
        res.add(f"F_(alpha,alpha) + 2 F^h F^h, alpha={alpha:.4f}",
                np.max(lit["residual"] / (1 + np.abs(lit["full"]))), 1e-8)
        tru = factorization_residual(P, spec, z, cfg)
        worst_true = max(worst_true, float(np.max(tru["residual"] / (1 + np.abs(tru["full"])))))
    for name, R in (("antiperiodic", -np.eye(2)), ("R11 != +-1", [[0.5, 1.0], [-0.75, 0.5]])):
        spec = Coupled(0.0, R)
        lit = stated_factorization_residual(P, spec, z, cfg)
        res.add(f"{name} identity", np.max(lit["residual"] / (1 + np.abs(lit["full"]))), 1e-8)
        tru = factorization_residual(P, spec, z, cfg)
        worst_true = max(worst_true, float(np.max(tru["residual"] / (1 + np.abs(tru["full"])))))
    res.notes.append(
        "with constants +2, 4 (antiperiodic) and +2 R12/(sin a sin a') the identities hold: "
        f"max scaled residual {worst_true:.2e}"
    )


def crit8(res, cfg, fast):
    """Lamb zeros against closed forms and the spectral solver."""
    for k in range(1, 6):
        v = bessel.lamb_zero(0.5, k).value
        res.add(f"lambda_(1/2,{k}) rel error", abs(v / ((2 * k - 1) * PI / 2) - 1), 1e-9)
    for g in (0.0, 0.3, 0.7):
        lam = bessel.lamb_zero(g, 1).value
        ev = lowest_eigenvalue(builtin_bessel(g, 0.0, 1.0), Separated(PI, PI / 2), cfg)
        res.add(f"gamma={g}: 4 lambda^2/(b-a)^2 vs eigenvalue", abs(4 * lam**2 / 2.0**2 - ev), 1e-7)


def crit9(res, cfg, fast):
    """Hardy-type inequality with the Lamb constant."""
    if not fast:
        for g in (0.0, 0.5):
            r = bessel.rayleigh_verify(g, 0.0, 1.0, 200, 42, raise_on_violation=False)
            res.add(f"gamma={g}: violations in 200 trials", len(r.violations), 0)
    else:
        res.notes.append("200-trial block skipped (--fast)")
    r = bessel.rayleigh_verify(0.5, 0.0, 1.0, 1, 0, raise_on_violation=False)
    res.add("gamma=1/2 fundamental sine |relative margin|", abs(r.min_margin), 1e-9)
    C = bessel.hardy_constant(0.5, 0.0, 1.0)
    r = bessel.rayleigh_verify(0.5, 0.0, 1.0, 200, 42, constant=1.01 * C, raise_on_violation=False)
    res.add("inflated constant caught", 0 if r.violations else 1, 0)


def crit10(res, cfg, fast):
    """Two-interval problems against an interior matching determinant."""
    half = builtin_bessel(0.3, 0.0, 1.0)
    for R0 in (np.eye(2), -np.eye(2), np.array([[0.0, 1.0], [-1.0, 0.0]])):
        d = two_interval_decompose(R0, OuterFixed(PI))
        ev = np.sort(np.concatenate([eigenvalues(half, s, n_max=8, cfg=cfg).values(8) for s in d.specs]))[:8]
        ref = oracles.two_interval_spectrum(0.3, 1.0, R0, PI, 8)
        m = match_multisets(ev, ref, 1e-6, 0.0)
        res.add(f"R0={R0.tolist()} max error", m["max_error"], 1e-6, m["ok"])


def crit11(res, cfg, fast):
    """Generalized boundary values: Lagrange identity, gauge change, xi functions."""
    rng = np.random.default_rng(11)
    for P in (builtin_free(0.0, 1.0), builtin_bessel(0.3, 0.0, 1.0)):
        x0 = P.interval.mid
        z = float(rng.uniform(-3.0, 30.0))
        g = solve(P, z, x0, rng.normal(size=2), cfg)
        h = solve(P, z, x0, rng.normal(size=2), cfg)
        w = wronskian(g, h, x0)
        gb = generalized_boundary_values(P, g, "richardson", cfg)
        hb = generalized_boundary_values(P, h, "richardson", cfg)
        for e in ("a", "b"):
            (g0, g1), (h0, h1) = gb.at(e), hb.at(e)
            res.add(f"{P.label}: Lagrange identity at {e}", abs(g0 * h1 - g1 * h0 - w) / max(1.0, abs(w)), 1e-8)
        base = generalized_boundary_values(P, g, "seed", cfg)
        for C in (1.0, -1.0, 2.5):
            Q = regauge(P, C)
            gq = generalized_boundary_values(Q, solve(Q, z, x0, g(x0), cfg), "seed", cfg)
            err = max(abs(gq.g_a - base.g_a), abs(gq.gp_a - (base.gp_a - C * base.g_a)))
            res.add(f"{P.label}: gauge C={C}", err / max(1.0, abs(base.gp_a)), 1e-8)
        xi = xi_boundary_check(P, cfg=cfg)
        res.add(f"{P.label}: xi residual", max(xi[k] for k in ("xi_prime_a", "xi_prime_b",
                                                            "xihat_prime_a", "xihat_prime_b")), 1e-8)


CRITERIA = {
    1: ("closed-form free spectra", crit1),
    2: ("symmetric separated decomposition", crit2),
    3: ("periodic and antiperiodic decomposition", crit3),
    4: ("Krein-von Neumann double zero", crit4),
    5: ("range floor for fixed beta'", crit5),
    6: ("ordering of extensions", crit6),
    7: ("characteristic function factorization", crit7),
    8: ("Lamb zeros", crit8),
    9: ("Hardy-type inequality", crit9),
    10: ("two-interval decomposition", crit10),
    11: ("boundary-value infrastructure", crit11),
}


def run_criterion(n: int, cfg: NumericsConfig | None = None, fast: bool = False) -> CriterionResult:
    title, fn = CRITERIA[n]
    res = CriterionResult(n, title)
    t0 = time.perf_counter()
    try:
        fn(res, resolve(cfg), fast)
    except Exception as exc:  # report, don't abort the suite
        code = getattr(exc, "one_line", None)
        res.error = code() if code else f"{type(exc).__name__}: {exc}"
        res.notes.append(traceback.format_exc(limit=3))
    res.seconds = time.perf_counter() - t0
    return res


def run_all(cfg: NumericsConfig | None = None, fast: bool = False, only=None) -> list:
    numbers = sorted(CRITERIA) if only is None else list(only)
    return [run_criterion(n, cfg, fast) for n in numbers]


def format_table(results, verbose: bool = False) -> str:
    lines = []
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        lines.append(f"criterion {r.number:2d} {status}  {r.title} [{r.seconds:.1f}s]  {r.summary()}")
        if verbose:
            lines.extend(f"    {c.line()}" for c in r.checks)
            lines.extend(f"    note: {n.strip()}" for n in r.notes if not n.startswith("Traceback"))
    passed = sum(r.passed for r in results)
    lines.append(f"{passed}/{len(results)} criteria passed")
    return "\n".join(lines)
