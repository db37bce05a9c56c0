"""Command-line interface.

Exit codes: 0 success, 1 invalid input or flags, 2 computation error.
Every subcommand supports ``--json`` for machine-readable output.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import harness
from .coeff_bounds import construct_weights
from .discrete_ops import (PRESETS, continuum_symbol, discrete_symbol,
                           is_discretely_elliptic, load_operator, preset_operator)
from .errors import GermCalcError, ValidationError
from .geometry import Scaling
from .germs import field_from_text, field_to_text, load_germ
from .liouville import kernel_basis_to_text, polynomial_kernel, symbol_zero_search
from .norms import (mcshane_extend, norm_G_eta, seminorm_G_eta_alpha,
                    seminorm_G_gamma, sup_below)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_operator_flags(p):
    p.add_argument("--preset", choices=PRESETS, help="named operator")
    p.add_argument("--operator-file", help="operator in the text interchange format")
    p.add_argument("--dim", type=int, default=2, help="dimension for presets")


def _resolve_operator(args):
    if args.operator_file:
        return load_operator(args.operator_file)
    if args.preset:
        return preset_operator(args.preset, d=args.dim)
    raise ValidationError("need --preset or --operator-file")


def _parse_floats(text):
    return tuple(float(x) for x in text.split(","))


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="germcalc",
                 description="anisotropic germ calculus on lattice windows")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("norm", help="evaluate a germ norm")
    p.add_argument("--kind", required=True,
                   choices=["G-eta", "G-eta-alpha", "G-gamma", "sup-below"])
    p.add_argument("--germ", required=True, help="germ file")
    p.add_argument("--eta", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--R", type=float, help="restrict distances/scales below R")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("symbol", help="evaluate operator symbols")
    _add_operator_flags(p)
    p.add_argument("--eps", type=float, default=1.0)
    p.add_argument("--theta", help="dual-torus frequency, comma separated")
    p.add_argument("--xi", help="continuum frequency, comma separated")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("ellipticity",
                       help="classify an operator by symbol scans")
    _add_operator_flags(p)
    p.add_argument("--eps", type=float, default=1.0)
    p.add_argument("--resolution", type=int, default=64)
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("liouville",
                       help="polynomial kernel and symbol zero search")
    _add_operator_flags(p)
    p.add_argument("--eps", type=float, default=1.0)
    p.add_argument("--eta", type=float, required=True)
    p.add_argument("--zero-search", action="store_true")
    p.add_argument("--resolution", type=int, default=64)
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("weights",
                       help="construct and verify an absorption weight system")
    p.add_argument("--scaling", required=True, help="grading, comma separated")
    p.add_argument("--eta", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("probe",
                       help="run a norm-ratio ensemble probe")
    p.add_argument("--config", help="flat key=value config file; flags win on conflict")
    p.add_argument("--mode", choices=["schauder", "ivp", "local"], default="schauder")
    p.add_argument("--scaling")
    p.add_argument("--preset", dest="operator", choices=PRESETS)
    p.add_argument("--operator-file")
    p.add_argument("--eta", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--window", type=int, help="window radius in index units")
    p.add_argument("--eps", help="comma separated grid scales")
    p.add_argument("--ensemble", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--germ", choices=["jet", "frozen", "file"])
    p.add_argument("--germ-file")
    p.add_argument("--time-extent", type=int)
    p.add_argument("--zero-initial", action="store_true",
                   help="subtract the initial slice before building germs (--mode ivp)")
    p.add_argument("--rho", type=float, help="locality radius for --mode local")
    p.add_argument("--threads", type=int)
    p.add_argument("--out", help="write per-member CSV here")
    p.add_argument("--json", action="store_true", help="print the JSON summary")

    p = sub.add_parser("extend",
                       help="extend a partial field without raising its Holder constant")
    p.add_argument("--field", required=True, help="field file with defined-point flags")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--holder-const", type=float, required=True)
    p.add_argument("--out", help="write the extended field here")
    p.add_argument("--json", action="store_true")
    return ap


def _cmd_norm(args) -> int:
    U = load_germ(args.germ)
    if args.kind == "G-eta":
        if args.eta is None:
            raise ValidationError("--kind G-eta requires --eta")
        rep = norm_G_eta(U, args.eta, R=args.R)
    elif args.kind == "G-eta-alpha":
        if args.eta is None or args.alpha is None:
            raise ValidationError("--kind G-eta-alpha requires --eta and --alpha")
        rep = seminorm_G_eta_alpha(U, args.eta, args.alpha, R=args.R)
    elif args.kind == "G-gamma":
        if args.gamma is None:
            raise ValidationError("--kind G-gamma requires --gamma")
        rep = seminorm_G_gamma(U, args.gamma, R=args.R)
    else:
        if args.R is None:
            raise ValidationError("--kind sup-below requires --R")
        rep = sup_below(U, args.R)
    if args.json:
        print(rep.to_json())
    else:
        print(f"{rep.name} = {rep.value:.17g}")
        if rep.witness:
            print(f"witness: {rep.witness}")
    return 0


def _cmd_symbol(args) -> int:
    L = _resolve_operator(args)
    out = {}
    if args.theta is None and args.xi is None:
        raise ValidationError("need --theta (lattice) and/or --xi (continuum)")
    if args.theta is not None:
        val = discrete_symbol(L, args.eps, _parse_floats(args.theta))
        out["discrete"] = [val.real, val.imag]
    if args.xi is not None:
        val = continuum_symbol(L, _parse_floats(args.xi))
        out["continuum"] = [val.real, val.imag]
    if args.json:
        print(json.dumps(out, sort_keys=True))
    else:
        for k, (re, im) in out.items():
            print(f"{k} symbol = {re:.17g} {im:+.17g}i")
    return 0


def _cmd_ellipticity(args) -> int:
    L = _resolve_operator(args)
    rep = is_discretely_elliptic(L, eps=args.eps, resolution=args.resolution)
    if args.json:
        print(json.dumps({
            "verdict": rep.verdict, "continuum": rep.continuum_verdict,
            "discrete": rep.discrete_verdict,
            "continuum_margin": rep.continuum_margin,
            "discrete_margin": rep.discrete_margin,
            "continuum_witness": rep.continuum_witness,
            "discrete_witness": rep.discrete_witness,
            "resolution": rep.resolution, "notes": rep.notes}, sort_keys=True))
    else:
        print(f"verdict: {rep.verdict}")
        print(f"  continuum symbol: {rep.continuum_verdict} (margin {rep.continuum_margin:.3g})")
        print(f"  lattice symbol:   {rep.discrete_verdict} (margin {rep.discrete_margin:.3g})")
        if rep.notes:
            print(f"  note: {rep.notes}")
        if rep.discrete_witness:
            print(f"  lattice zero near theta = {rep.discrete_witness}")
    return 0


def _cmd_liouville(args) -> int:
    L = _resolve_operator(args)
    basis = polynomial_kernel(L, args.eps, args.eta)
    zeros = (symbol_zero_search(L, args.eps, args.resolution)
             if args.zero_search else None)
    if args.json:
        payload = {"dimension": basis.dimension,
                   "monomials": [list(g) for g in basis.gammas],
                   "vectors": basis.vectors.real.tolist()}
        if zeros is not None:
            payload["zeros"] = [{"theta": list(z.theta), "symbol_abs": z.symbol_abs,
                                 "residual": z.residual_inf} for z in zeros]
        print(json.dumps(payload, sort_keys=True))
    else:
        print(f"polynomial kernel dimension at cutoff {args.eta}: {basis.dimension}")
        print(kernel_basis_to_text(basis), end="")
        if zeros is not None:
            if zeros:
                for z in zeros:
                    print(f"nonzero symbol zero: theta={z.theta} |symbol|={z.symbol_abs:.3g} "
                          f"residual={z.residual_inf:.3g}")
            else:
                print("no nonzero symbol zeros found")
    return 0


def _cmd_weights(args) -> int:
    scaling = Scaling(tuple(int(x) for x in args.scaling.split(",")))
    system = construct_weights(scaling, args.eta, args.delta)
    ok, worst = system.verify()
    if args.json:
        print(json.dumps({
            "ok": ok, "worst_ratio": worst,
            "kappa": {str(k): v for k, v in system.kappa.items()},
            "eps_level": {str(k): v for k, v in system.eps_level.items()},
            "rho": {str(k): list(v) for k, v in system.rho.items()}}, sort_keys=True))
    else:
        print(system.to_text(), end="")
        print(f"absorption inequality verified: {ok} (worst ratio {worst:.6g})")
    return 0


def _cmd_probe(args) -> int:
    kv = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            kv = harness.parse_config_text(fh.read())
    overrides = {
        "scaling": args.scaling, "operator": args.operator,
        "operator_file": args.operator_file, "eta": args.eta, "alpha": args.alpha,
        "radius": args.window, "eps": args.eps, "ensemble": args.ensemble,
        "seed": args.seed, "germ": args.germ, "germ_file": args.germ_file,
        "time_extent": args.time_extent, "threads": args.threads,
    }
    for k, v in overrides.items():
        if v is not None:
            kv[k] = v
    cfg = harness.config_from_mapping({k: str(v) for k, v in kv.items()})
    if args.mode == "schauder":
        reports = harness.run_schauder_probe(cfg)
    elif args.mode == "ivp":
        reports = harness.run_ivp_probe(cfg, zero_initial=args.zero_initial)
    else:
        if args.rho is None:
            raise ValidationError("--mode local requires --rho")
        reports = harness.run_local_probe(cfg, args.rho)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(harness.reports_to_csv(reports))
    summary = harness.summary_to_json(reports, cfg)
    if args.json:
        print(summary)
    else:
        for eps_key, entry in json.loads(summary)["eps"].items():
            print(f"eps={eps_key}: max={entry['max']:.6g} median={entry['median']:.6g} "
                  f"(n={entry['count']}, infinite={entry['infinite']})")
    return 0


def _cmd_extend(args) -> int:
    with open(args.field, encoding="utf-8") as fh:
        values, mask, window = field_from_text(fh.read())
    g = mcshane_extend(values, mask, window, args.alpha, args.holder_const)
    text = field_to_text(g, None, window)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    if args.json:
        print(json.dumps({"min": float(np.min(g)), "max": float(np.max(g)),
                          "defined_points": int(mask.sum()),
                          "window_points": int(window.npoints)}, sort_keys=True))
    elif not args.out:
        print(text, end="")
    return 0


_HANDLERS = {
    "norm": _cmd_norm, "symbol": _cmd_symbol, "ellipticity": _cmd_ellipticity,
    "liouville": _cmd_liouville, "weights": _cmd_weights, "probe": _cmd_probe,
    "extend": _cmd_extend,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _HANDLERS[args.command](args)
    except (ValidationError,) as exc:
        print(f"germcalc: invalid input: {exc}", file=sys.stderr)
        return 1
    except (GermCalcError, OSError, ValueError) as exc:
        print(f"germcalc: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
