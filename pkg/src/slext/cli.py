"""Command line front end: ``slext <command> [options]``.

Commands
--------
spectrum   eigenvalues of one extension (CSV or JSON)
classify   nonnegativity verdict with the auxiliary parameters
range      smallest admissible left angle for a fixed right angle
decompose  half-interval pieces of a reflection-invariant extension
krein      the Krein-von Neumann matrix and its double zero
hardy      Lamb zeros and Hardy constants, optionally verified on trial functions
selftest   the acceptance suite

Errors print one ``Code: message`` line on stderr; exit status is 1 for bad
input and 2 for numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import __version__
from .config import default_config
from .errors import InputError, SLExtError, SpecParseError

BUILTINS = ("free", "bessel", "symmetric_bessel")


class UsageError(InputError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ------------------------------------------------------------------ helpers

def _problem(args):
    from .problem import builtin_bessel, builtin_free, builtin_symmetric_bessel, load_problem_file

    if args.problem_file:
        return load_problem_file(args.problem_file)
    a = 0.0 if args.a is None else args.a
    if args.builtin == "free":
        return builtin_free(a, 1.0 if args.b is None else args.b)
    if args.gamma is None:
        raise UsageError(f"--builtin {args.builtin} needs --gamma")
    if args.builtin == "bessel":
        return builtin_bessel(args.gamma, a, 1.0 if args.b is None else args.b)
    return builtin_symmetric_bessel(args.gamma, a, 2.0 if args.b is None else args.b)


def _spec(args, required=True):
    from .specs import PI, Separated, parse_spec

    if args.spec is not None:
        return parse_spec(args.spec)
    if getattr(args, "alpha_deg", None) is not None:
        beta = args.beta if getattr(args, "beta", None) is not None else PI
        return Separated(math.radians(args.alpha_deg), beta)
    if required:
        raise SpecParseError("--spec is required")
    return None


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        v = v.item()
    if isinstance(v, complex):
        return v.real if abs(v.imag) <= 1e-14 * max(1.0, abs(v)) else {"re": v.real, "im": v.imag}
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, float) and math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


def _records(fields: dict, fmt: str) -> str:
    """Key/value output: a two-column CSV or the same pairs as a JSON object."""
    clean = {k: _jsonable(v) for k, v in fields.items()}
    if fmt == "json":
        return json.dumps(clean, indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["field", "value"])
    for k, v in clean.items():
        w.writerow([k, json.dumps(v) if isinstance(v, (list, dict)) else v])
    return buf.getvalue()


def _emit(text: str, args) -> None:
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ----------------------------------------------------------------- commands

def cmd_spectrum(args, cfg) -> int:
    from .spectra import eigenvalues

    problem, spec = _problem(args), _spec(args)
    sp = eigenvalues(problem, spec, args.z_lo, args.z_hi, n_max=args.n, cfg=cfg)
    _emit(sp.to_json() + "\n" if args.format == "json" else sp.to_csv(), args)
    return 0


def cmd_classify(args, cfg) -> int:
    from .boundary import extension_data_pack
    from .extensions import is_nonnegative

    problem, spec = _problem(args), _spec(args)
    res = is_nonnegative(problem, spec, cfg)
    w = res.witness
    if res.nonnegative:
        if w["dim_W"] == 0:
            verdict = "nonnegative (Friedrichs, dim W=0)"
        elif w["dim_W"] == 1:
            verdict = f"nonnegative, kernel dim {res.kernel_dim}, dim W=1"
        else:
            is_zero = all(abs(complex(w[k])) <= 1e-9 for k in ("b11", "b12", "b22"))
            verdict = f"nonnegative, kernel dim {res.kernel_dim}, " + ("B=0" if is_zero else "dim W=2")
    else:
        verdict = "not nonnegative, lambda_min<0 witness"
    fields = {"verdict": verdict, "spec": str(spec), "lowest_eigenvalue": res.lowest_eigenvalue,
              "kernel_dim": res.kernel_dim}
    fields.update({k: v for k, v in w.items()})
    fields["data_pack"] = list(extension_data_pack(problem, cfg).as_tuple())
    _emit(_records(fields, args.format), args)
    return 0


def cmd_range(args, cfg) -> int:
    from .boundary import extension_data_pack
    from .extensions import b_side_floor, nonneg_range_fixed_beta

    problem = _problem(args)
    pack = extension_data_pack(problem, cfg)
    a1 = nonneg_range_fixed_beta(pack, args.beta_p)
    a2 = b_side_floor(problem, args.beta_p, cfg)
    fields = {"beta_p": args.beta_p, "alpha_min": a1, "alpha_min_from_b_side": a2,
              "difference": abs(a1 - a2), "admissible": f"[{a1:.15g}, pi]"}
    _emit(_records(fields, args.format), args)
    return 0


def cmd_decompose(args, cfg) -> int:
    from .specs import PI, Coupled
    from .symmetric import (
        OuterFixed,
        decomposition_report,
        half_problem,
        nu_mu,
        two_interval_decompose,
        union_check,
    )

    spec = _spec(args)
    if args.two_interval:
        if not isinstance(spec, Coupled):
            raise SpecParseError("--two-interval needs a coupled spec for the interior transfer")
        beta_p = PI if args.beta_p is None else args.beta_p
        d = two_interval_decompose(spec.matrix, OuterFixed(beta_p))
        fields = dict(d.angles)
        fields["pieces"] = [str(s) for s in d.specs]
        _emit(_records(fields, args.format), args)
        return 0
    problem = _problem(args)
    if args.format == "json":
        from .symmetric import decompose

        d = decompose(spec)
        fields = {"source": str(d.source), "alpha": d.alphas[0], "alpha_p": d.alphas[1],
                  "dirichlet_piece": str(d.dirichlet_spec), "neumann_piece": str(d.neumann_spec)}
        nu, mu = nu_mu(half_problem(problem, cfg), cfg)
        fields.update(nu=nu, mu=mu)
        if args.verify:
            r = union_check(problem, spec, args.n or 8, cfg)
            fields.update(union_check=r["ok"], max_error=r["max_error"])
        _emit(_records(fields, "json"), args)
        return 0
    text = decomposition_report(problem, spec, verify=args.verify, n=args.n or 8, cfg=cfg)
    _emit(text, args)
    if args.verify and "union_check: FAIL" in text:
        return 2
    return 0


def cmd_krein(args, cfg) -> int:
    from .extensions import krein_spec
    from .spectra import eigenvalues

    problem = _problem(args)
    spec = krein_spec(problem, cfg)
    sp = eigenvalues(problem, spec, n_max=args.n or 3, cfg=cfg)
    e0 = sp.eigenvalues[0]
    fields = {"R_K": spec.matrix, "lowest_eigenvalue": e0.value, "multiplicity": e0.multiplicity,
              "residual": e0.residual, "eigenvalues": sp.values()}
    _emit(_records(fields, args.format), args)
    return 0


def cmd_hardy(args, cfg) -> int:
    from .bessel import hardy_constant, lamb_zero, rayleigh_verify

    gammas = args.gammas or ([args.gamma] if args.gamma is not None else [0.0, 0.25, 0.5, 0.75])
    a = 0.0 if args.a is None else args.a
    b = 1.0 if args.b is None else args.b
    rows = []
    for g in gammas:
        row = {"gamma": g, "lamb_zero_1": lamb_zero(g, 1).value,
               "constant": hardy_constant(g, a, b), "interval_length": b - a}
        if args.verify:
            r = rayleigh_verify(g, a, b, args.trials, args.seed)
            row["min_relative_margin"] = r.min_margin
        rows.append(row)
    if args.format == "json":
        text = json.dumps(rows, indent=2) + "\n"
    else:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
        text = buf.getvalue()
    _emit(text, args)
    return 0


def cmd_selftest(args, cfg) -> int:
    from .acceptance import format_table, run_all

    only = [int(x) for x in args.only.split(",")] if args.only else None
    results = run_all(cfg, fast=args.fast, only=only)
    table = format_table(results, verbose=args.verbose)
    _emit(table + "\n", args)
    return 0 if all(r.passed for r in results) else 2


COMMANDS = {
    "spectrum": cmd_spectrum, "classify": cmd_classify, "range": cmd_range,
    "decompose": cmd_decompose, "krein": cmd_krein, "hardy": cmd_hardy, "selftest": cmd_selftest,
}


# ------------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    g = common.add_argument_group("global")
    g.add_argument("--tol", type=float, help="integrator relative tolerance")
    g.add_argument("--seed", type=int, default=42, help="random seed")
    g.add_argument("--format", choices=("csv", "json"), default="csv")
    g.add_argument("--output", "-o", help="write to this file instead of stdout")
    prob = _Parser(add_help=False)
    p = prob.add_argument_group("problem")
    p.add_argument("--builtin", choices=BUILTINS, default="free")
    p.add_argument("--gamma", type=float)
    p.add_argument("--a", type=float, help="left endpoint")
    p.add_argument("--b", type=float, help="right endpoint")
    p.add_argument("--problem-file", help="JSON problem definition")
    spec = _Parser(add_help=False)
    s = spec.add_argument_group("extension")
    s.add_argument("--spec", help="JSON spec, e.g. '{\"type\":\"separated\",\"alpha\":3.14159,\"beta\":1.5708}'")
    s.add_argument("--alpha-deg", type=float, help="separated spec with this left angle in degrees")
    s.add_argument("--beta", type=float, help="right angle (radians) used with --alpha-deg")

    parser = _Parser(prog="slext", description="Self-adjoint extensions of singular Sturm-Liouville operators.")
    parser.add_argument("--version", action="version", version=f"slext {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("spectrum", parents=[common, prob, spec], help="eigenvalues of an extension")
    sp.add_argument("--n", type=int, default=10, help="number of eigenvalues")
    sp.add_argument("--z-lo", type=float)
    sp.add_argument("--z-hi", type=float)

    sub.add_parser("classify", parents=[common, prob, spec], help="nonnegativity verdict")

    rp = sub.add_parser("range", parents=[common, prob], help="admissible left angles for fixed beta'")
    rp.add_argument("--beta-p", type=float, default=math.pi)

    dp = sub.add_parser("decompose", parents=[common, prob, spec], help="half-interval decomposition")
    dp.add_argument("--verify", action="store_true", help="compare spectra of the pieces")
    dp.add_argument("--n", type=int, help="eigenvalues compared by --verify")
    dp.add_argument("--two-interval", action="store_true",
                    help="treat the coupled spec as the interior transfer of a two-interval problem")
    dp.add_argument("--beta-p", type=float, help="outer angle for --two-interval (default pi)")

    kp = sub.add_parser("krein", parents=[common, prob], help="Krein-von Neumann extension")
    kp.add_argument("--n", type=int)

    hp = sub.add_parser("hardy", parents=[common], help="Lamb zeros and Hardy constants")
    hp.add_argument("--gamma", type=float)
    hp.add_argument("--gammas", type=float, nargs="+")
    hp.add_argument("--a", type=float)
    hp.add_argument("--b", type=float)
    hp.add_argument("--verify", action="store_true", help="check random trial functions")
    hp.add_argument("--trials", type=int, default=200)

    tp = sub.add_parser("selftest", parents=[common], help="run the acceptance suite")
    tp.add_argument("--fast", action="store_true", help="skip the 200-trial inequality block")
    tp.add_argument("--only", help="comma-separated criterion numbers")
    tp.add_argument("--verbose", "-v", action="store_true")
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "tol", None) is not None and not (0.0 < args.tol < 1.0):
            raise UsageError(f"--tol must lie in (0, 1), got {args.tol}")
        cfg = default_config().with_tol(getattr(args, "tol", None))
        return COMMANDS[args.command](args, cfg)
    except SLExtError as exc:
        print(exc.one_line(), file=sys.stderr)
        return exc.exit_code
    except (OSError, ValueError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
