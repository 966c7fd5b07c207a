"""Numerical tolerances in one place."""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass


@dataclass(frozen=True)
class NumericsConfig:
    """Tolerances and discretisation knobs shared by all modules.

    Attributes
    ----------
    rtol, atol : float
        Local error tolerances of the Runge-Kutta integrator.
    method : str
        ``scipy.integrate.solve_ivp`` method. ``"RK45"`` is the Dormand-Prince
        5(4) pair; the default eighth-order pair needs far fewer steps at the
        tolerances used here.
    seed_offset_rel : float
        Distance (relative to the interval length) below which a solution is
        represented by its generalized boundary values and closed-form seed
        integrals instead of by integration.
    seed_reach_rel : float
        Width (relative to the interval length) of the region next to each
        endpoint where solutions are integrated in seed coordinates.
    quad_tol : float
        Absolute error target of the L^2_r quadrature.
    scan_step_factor : float
        Initial eigenvalue scan step, as a fraction of pi^2 / length^2.
    root_rtol : float
        Relative tolerance of eigenvalue refinement.
    double_root_tol : float
        A local extremum of F with ``|F| <= double_root_tol * scale`` counts as
        a double root.
    match_abs, match_rel : float
        Tolerance ``max(match_abs, match_rel*|lambda|)`` for multiset matching.
    max_growth : float
        Largest ``sqrt(-z) * length`` explored when scanning below zero.
    num_threads : int
        Worker threads for independent refinement tasks.
    """

    rtol: float = 1e-10
    atol: float = 1e-14
    method: str = "DOP853"
    seed_offset_rel: float = 1e-10
    seed_reach_rel: float = 0.25
    quad_tol: float = 1e-10
    quad_max_splits: int = 12
    richardson_kmax: int = 20
    richardson_tol: float = 1e-9
    scan_step_factor: float = 0.125
    scan_rtol: float = 1e-8
    root_rtol: float = 1e-12
    root_maxiter: int = 60
    double_root_tol: float = 1e-6
    match_abs: float = 1e-7
    match_rel: float = 1e-9
    max_growth: float = 120.0
    max_refine_depth: int = 6
    num_threads: int = 1

    def replace(self, **changes) -> "NumericsConfig":
        return dataclasses.replace(self, **changes)

    def with_tol(self, tol: float | None) -> "NumericsConfig":
        """Override the integrator tolerance (used by the ``--tol`` flag)."""
        if tol is None:
            return self
        return self.replace(rtol=float(tol), scan_rtol=max(float(tol), self.scan_rtol))


def default_config() -> NumericsConfig:
    threads = os.environ.get("SLEXT_NUM_THREADS")
    try:
        n = max(1, int(threads)) if threads else 1
    except ValueError:
        n = 1
    return NumericsConfig(num_threads=n)


DEFAULT = default_config()


def resolve(cfg: NumericsConfig | None) -> NumericsConfig:
    return DEFAULT if cfg is None else cfg
