"""Command-line surface.

Subcommands: sample, solve, renorm-check, rate-study, norms, backlund,
ensemble.  Every run writes a canonical JSON report (and CSV/CRF1/figures
where meaningful) into --out.  A flat key=value config file can seed any
flag; explicit command-line flags win.  Exit codes: 0 all requested
assertions passed, 1 assertion failure, 2 usage error, 3 numerical
divergence.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict

import numpy as np

from . import crf1, noise as noise_mod, norms as norms_mod, report, studies
from .products import StochasticObjects
from .solver import (GateRejection, SolverParams, backlund_b, residual_llg,
                     solve_fixed_point)
from .spectral import ScalarField, make_grid

EXIT_OK = 0
EXIT_ASSERT = 1
EXIT_USAGE = 2
EXIT_DIVERGED = 3


def _parse_triple(text: str):
    parts = [float(p) for p in text.split(",")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected three comma-separated numbers")
    return tuple(parts)


def _parse_flags(text: str):
    parts = [p.strip().lower() for p in text.split(",")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected three comma-separated booleans")
    return tuple(p in ("1", "true", "t", "yes") for p in parts)


def _parse_eps_list(text: str):
    return tuple(float(p) for p in text.split(","))


def _parse_seeds(text: str):
    """Either 'a:b' (half-open range) or a comma list."""
    if ":" in text:
        a, b = text.split(":")
        return tuple(range(int(a), int(b)))
    return tuple(int(p) for p in text.split(","))


def _parse_lambda(text: str):
    return "auto" if text == "auto" else float(text)


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key=value file; flags override it")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--figures", action=argparse.BooleanOptionalAction, default=True,
                   help="render figures alongside the delimited output")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="crspde", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="draw a noise realization and persist it")
    _common(p)
    p.add_argument("--n", type=int, default=256)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eps", type=float, default=0.0)
    p.add_argument("--zero-mean", type=_parse_flags, default=(False, False, True),
                   metavar="B,B,B")

    p = sub.add_parser("solve", help="run the fixed-point solver")
    _common(p)
    p.add_argument("--n", type=int, default=256)
    p.add_argument("--kappa", type=float, default=0.3)
    p.add_argument("--sigma", type=float, default=0.5)
    p.add_argument("--gamma", type=_parse_triple, default=None, metavar="G1,G2,G3",
                   help="coupling; default: half the gate budget along (1,1,1)")
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--abc", choices=("paper", "zero"), default="paper")
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--max-iter", type=int, default=50)
    p.add_argument("--dealias", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--lambda", dest="lam", type=_parse_lambda, default="auto")
    p.add_argument("--zero-mean", type=_parse_flags, default=None, metavar="B,B,B")
    p.add_argument("--override-gate", action="store_true")

    p = sub.add_parser("renorm-check",
                       help="direct vs renormalized product, shift invariance, zeta norms")
    _common(p)
    p.add_argument("--n", type=int, default=256)
    p.add_argument("--kappa", type=float, default=0.3)
    p.add_argument("--eps-list", type=_parse_eps_list, default=(0.2, 0.1, 0.05),
                   metavar="E1,E2,...")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dealias", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--dump-fields", action="store_true",
                   help="write xi/theta/zeta CRF1 dumps for the finest eps")

    p = sub.add_parser("rate-study", help="Cauchy-rate slopes against eps")
    _common(p)
    p.add_argument("--objects", default="xi,zeta,r")
    p.add_argument("--n", type=int, default=512)
    p.add_argument("--kappa", type=float, default=0.3)
    p.add_argument("--sigma", type=float, default=0.5)
    p.add_argument("--eps-list", type=_parse_eps_list,
                   default=(0.4, 0.2, 0.1, 0.05, 0.025), metavar="E1,E2,...")
    p.add_argument("--seeds", type=_parse_seeds, default=(0,), metavar="A:B|S1,S2,..")
    p.add_argument("--gamma", type=_parse_triple, default=None, metavar="G1,G2,G3")
    p.add_argument("--lambda", dest="lam", type=_parse_lambda, default="auto")
    p.add_argument("--dealias", action=argparse.BooleanOptionalAction, default=True)

    p = sub.add_parser("norms", help="estimate a Holder-Zygmund norm of a stored field")
    _common(p)
    p.add_argument("--in", dest="infile", required=True, help="CRF1 field file")
    p.add_argument("--component", type=int, default=0)
    p.add_argument("--rep", choices=("physical", "spectral"), default="physical")
    p.add_argument("--order", type=float, required=True)
    p.add_argument("--scales", type=_parse_eps_list, default=None, metavar="L1,L2,...")

    p = sub.add_parser("backlund", help="solve (zero-mean, zero abc) and transform")
    _common(p)
    p.add_argument("--n", type=int, default=256)
    p.add_argument("--kappa", type=float, default=0.3)
    p.add_argument("--sigma", type=float, default=0.5)
    p.add_argument("--gamma", type=_parse_triple, default=None, metavar="G1,G2,G3")
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--max-iter", type=int, default=50)
    p.add_argument("--dealias", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--lambda", dest="lam", type=_parse_lambda, default="auto")

    p = sub.add_parser("ensemble", help="gate statistics (and solves) over many seeds")
    _common(p)
    p.add_argument("--n", type=int, default=256)
    p.add_argument("--kappa", type=float, default=0.3)
    p.add_argument("--sigma", type=float, default=0.5)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--seeds", type=_parse_seeds, default=tuple(range(100)),
                   metavar="A:B|S1,S2,..")
    p.add_argument("--lambda", dest="lam", type=_parse_lambda, default="auto")
    p.add_argument("--solve", action=argparse.BooleanOptionalAction, default=False)
    p.add_argument("--gamma", type=_parse_triple, default=None, metavar="G1,G2,G3")
    p.add_argument("--zero-mean", type=_parse_flags, default=(False, False, True),
                   metavar="B,B,B")

    return ap


# ---------------------------------------------------------------------------
# config file expansion
# ---------------------------------------------------------------------------

def load_config_tokens(path: str) -> list[str]:
    """Turn `key = value` lines into CLI tokens (booleans become --[no-]key)."""
    tokens: list[str] = []
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"bad config line (need key = value): {line!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            key = key.replace("_", "-")
            if value.lower() in ("true", "false"):
                tokens.append(f"--{key}" if value.lower() == "true" else f"--no-{key}")
            else:
                tokens.extend([f"--{key}", value])
    return tokens


def expand_config(argv: list[str]) -> list[str]:
    if "--config" not in argv:
        return argv
    i = argv.index("--config")
    if i + 1 >= len(argv):
        return argv  # let argparse report the usage error
    tokens = load_config_tokens(argv[i + 1])
    # subcommand first, then file tokens, then the explicit flags (which win)
    return argv[:1] + tokens + argv[1:]


# ---------------------------------------------------------------------------
# subcommand drivers
# ---------------------------------------------------------------------------

def _fit_dict(fit):
    if fit is None:
        return None
    d = asdict(fit)
    d["pairs"] = [list(p) for p in fit.pairs]
    return d


def _params_dict(args, skip=("command", "config", "out", "figures")) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def cmd_sample(args) -> int:
    grid = make_grid(args.n)
    nz = noise_mod.sample(args.seed, grid, args.zero_mean)
    coeffs = noise_mod.realized_coeffs(nz, grid, args.eps)
    os.makedirs(args.out, exist_ok=True)
    crf1.write_crf1(os.path.join(args.out, "noise.crf1"), list(coeffs))
    sidecar = {"seed": args.seed, "n": args.n, "eps": args.eps,
               "zero_mean_flags": list(args.zero_mean), "representation": "spectral"}
    with open(os.path.join(args.out, "noise.json"), "w") as fh:
        fh.write(json.dumps(sidecar, sort_keys=True, indent=2) + "\n")
    payload = report.build_payload("sample", _params_dict(args),
                                   {"files": ["noise.crf1", "noise.json"],
                                    "eta0": [float(v) for v in nz.eta0]})
    report.write_json(os.path.join(args.out, "sample.json"), payload)
    return EXIT_OK


def _resolve_solver_params(args, zero_mean) -> tuple[SolverParams, float, tuple]:
    lam = studies.resolve_lambda(args.lam, args.n, args.kappa,
                                 zero_mean_flags=zero_mean)
    gamma = args.gamma if args.gamma is not None else studies.budget_gamma(args.sigma, lam)
    params = SolverParams(n=args.n, kappa=args.kappa, sigma=args.sigma, gamma=gamma,
                          eps=args.eps, lam=lam, seed=args.seed,
                          tol_fixed_point=args.tol, max_iter=args.max_iter,
                          abc_mode=getattr(args, "abc", "zero"), dealias=args.dealias)
    return params, lam, gamma


def cmd_solve(args) -> int:
    zero_mean = args.zero_mean
    if zero_mean is None:
        zero_mean = (True, True, True) if args.abc == "zero" else (False, False, True)
    params, lam, gamma = _resolve_solver_params(args, zero_mean)
    nz = noise_mod.sample(args.seed, make_grid(args.n), zero_mean)
    try:
        res = solve_fixed_point(params, nz, override_gate=args.override_gate)
    except GateRejection as exc:
        print(f"gate: {exc}", file=sys.stderr)
        return EXIT_ASSERT
    os.makedirs(args.out, exist_ok=True)
    crf1.write_vector_field(os.path.join(args.out, "R.crf1"), res.R)
    crf1.write_vector_field(os.path.join(args.out, "r.crf1"), res.r)
    results = {
        "status": res.status, "iterations": res.iterations,
        "increment_history": res.increment_history,
        "contraction_ratio": res.contraction_ratio,
        "gate_measured": res.gate.measured if res.gate else None,
        "sigma_budget": res.gate.sigma_budget if res.gate else None,
        "residuals": res.residuals,
        "gamma_used": list(gamma), "lambda_used": lam,
        "files": ["R.crf1", "r.crf1"],
    }
    payload = report.build_payload("solve", _params_dict(args), results,
                                   passed=res.converged)
    report.write_json(os.path.join(args.out, "solve.json"), payload)
    if args.figures:
        report.convergence_figure(os.path.join(args.out, "convergence.png"),
                                  res.increment_history)
    print(f"solve: {res.status} in {res.iterations} iterations, "
          f"contraction ratio {res.contraction_ratio:.3g}")
    return EXIT_OK if res.converged else EXIT_DIVERGED


def cmd_renorm_check(args) -> int:
    rows = [studies.renorm_check(args.seed, args.n, eps, args.kappa, args.dealias)
            for eps in args.eps_list]
    ok = all(r["direct_vs_renorm_relerr"] <= 1e-8 and
             r["shift_invariance_err"] <= 1e-10 for r in rows)
    znorms = [r["zeta_norm_1mk"] for r in rows]
    stability = max(znorms) / min(znorms) if len(znorms) > 1 else 1.0
    os.makedirs(args.out, exist_ok=True)
    header = ["seed", "n", "eps", "dealias", "direct_vs_renorm_relerr",
              "shift_invariance_err", "zeta_norm_1mk", "theta_norm_mk"]
    report.write_csv(os.path.join(args.out, "renorm_check.csv"), header, rows)
    results = {"rows": rows, "zeta_norm_spread": stability}
    payload = report.build_payload("renorm-check", _params_dict(args), results, passed=ok)
    report.write_json(os.path.join(args.out, "renorm_check.json"), payload)
    if args.figures:
        report.renorm_figure(os.path.join(args.out, "renorm_check.png"), rows)
    if args.dump_fields:
        grid = make_grid(args.n)
        nz = noise_mod.sample(args.seed, grid, studies.DEFAULT_ZERO_MEAN)
        objs = StochasticObjects.build(nz, grid, args.eps_list[-1], dealias=args.dealias)
        for name, vf in (("xi", objs.xi), ("theta", objs.theta), ("zeta", objs.zeta)):
            crf1.write_vector_field(os.path.join(args.out, f"{name}.crf1"), vf)
    for r in rows:
        print(f"eps={r['eps']:g}: relerr={r['direct_vs_renorm_relerr']:.3e} "
              f"shift={r['shift_invariance_err']:.3e} zeta={r['zeta_norm_1mk']:.4g}")
    return EXIT_OK if ok else EXIT_ASSERT


def cmd_rate_study(args) -> int:
    objects = tuple(s.strip() for s in args.objects.split(",") if s.strip())
    config = studies.ExperimentConfig(
        n=args.n, kappa=args.kappa, sigma=args.sigma, gamma=args.gamma,
        eps_list=args.eps_list, seed_list=args.seeds, lam=args.lam,
        dealias=args.dealias, out_dir=args.out)
    out = studies.run_rate_study(config, objects)
    os.makedirs(args.out, exist_ok=True)
    rows = [row for rec in out["per_seed"] for row in rec["rows"]]
    report.write_csv(os.path.join(args.out, "rate_study.csv"),
                     ["seed", "object", "eps", "error"], rows)
    results = {
        "lambda": out["lambda"],
        "verdicts": out["verdicts"],
        "fits": {str(rec["seed"]): {k: _fit_dict(f) for k, f in rec["fits"].items()}
                 for rec in out["per_seed"]},
    }
    payload = report.build_payload("rate-study", _params_dict(args), results,
                                   passed=out["passed"])
    report.write_json(os.path.join(args.out, "rate_study.json"), payload)
    if args.figures:
        report.rate_figure(os.path.join(args.out, "rate_study.png"),
                           out["per_seed"], studies.slope_thresholds(args.kappa))
    for name, v in out["verdicts"].items():
        print(f"{name}: slope >= {v['threshold']:.3f} with r2 >= 0.9 on "
              f"{v['ok_count']}/{v['total']} seeds "
              f"({'pass' if v['passed'] else 'FAIL'})")
    return EXIT_OK if out["passed"] else EXIT_ASSERT


def cmd_norms(args) -> int:
    n, comps = crf1.read_crf1(args.infile)
    if not 0 <= args.component < len(comps):
        print(f"component {args.component} outside 0..{len(comps) - 1}", file=sys.stderr)
        return EXIT_USAGE
    grid = make_grid(n)
    data = comps[args.component]
    f = (ScalarField.from_values(grid, data) if args.rep == "physical"
         else ScalarField.from_coeffs(grid, data))
    if args.order < 0:
        fam = norms_mod.default_family(grid, args.scales)
        rep_obj = norms_mod.norm_neg(f, args.order, fam)
    else:
        rep_obj = norms_mod.norm_holder(f, args.order)
    results = {
        "alpha": rep_obj.alpha,
        "estimate": rep_obj.estimate,
        "sup_term": rep_obj.sup_term,
        "per_scale": {f"{k:.8g}": v for k, v in rep_obj.per_scale.items()},
        "scales_used": list(rep_obj.scales_used),
    }
    payload = report.build_payload("norms", _params_dict(args), results)
    os.makedirs(args.out, exist_ok=True)
    report.write_json(os.path.join(args.out, "norms.json"), payload)
    print(json.dumps(results["per_scale"], indent=2, sort_keys=True))
    print(f"estimate |f|_{args.order:g} ~= {rep_obj.estimate:.6g}")
    return EXIT_OK


def cmd_backlund(args) -> int:
    zero_mean = (True, True, True)
    args.abc = "zero"
    params, lam, gamma = _resolve_solver_params(args, zero_mean)
    out = studies.backlund_run(params)
    res = out["result"]
    if not res.converged:
        print(f"solve: {res.status}", file=sys.stderr)
        return EXIT_DIVERGED
    llg = out["llg"]
    ok = llg["im_b_rel"] <= 1e-8 and max(llg["rel_l2"]) <= 1e-5
    os.makedirs(args.out, exist_ok=True)
    crf1.write_vector_field(os.path.join(args.out, "B.crf1"), out["B"])
    crf1.write_vector_field(os.path.join(args.out, "r.crf1"), res.r)
    results = {"solve_status": res.status, "iterations": res.iterations,
               "llg": llg, "gamma_used": list(gamma), "lambda_used": lam,
               "files": ["B.crf1", "r.crf1"]}
    payload = report.build_payload("backlund", _params_dict(args), results, passed=ok)
    report.write_json(os.path.join(args.out, "backlund.json"), payload)
    print(f"backlund: Im B rel {llg['im_b_rel']:.3e}, "
          f"LLG rel L2 {max(llg['rel_l2']):.3e} ({'pass' if ok else 'FAIL'})")
    return EXIT_OK if ok else EXIT_ASSERT


def cmd_ensemble(args) -> int:
    config = studies.ExperimentConfig(
        n=args.n, kappa=args.kappa, sigma=args.sigma, gamma=args.gamma,
        eps_list=(), seed_list=args.seeds, lam=args.lam,
        zero_mean_flags=args.zero_mean, out_dir=args.out)
    out = studies.run_ensemble(config, do_solve=args.solve, eps=args.eps)
    agg = out["aggregate"]
    ok = True
    if args.lam == "auto":
        ok = 0.85 <= agg["gate_pass_fraction"] <= 1.0
    os.makedirs(args.out, exist_ok=True)
    header = ["seed", "gate_passed", "gate_measured", "sigma_budget",
              "solve_status", "iterations", "contraction_ratio"]
    report.write_csv(os.path.join(args.out, "ensemble.csv"), header, out["records"])
    payload = report.build_payload("ensemble", _params_dict(args),
                                   {"aggregate": agg, "records": out["records"]},
                                   passed=ok)
    report.write_json(os.path.join(args.out, "ensemble.json"), payload)
    if args.figures:
        report.ensemble_figure(os.path.join(args.out, "ensemble.png"),
                               [r["gate_measured"] for r in out["records"]],
                               out["lambda"])
    print(f"ensemble: Lambda={out['lambda']:.4g}, "
          f"pass fraction {agg['gate_pass_fraction']:.2f} over {agg['count']} seeds")
    return EXIT_OK if ok else EXIT_ASSERT


_DRIVERS = {
    "sample": cmd_sample,
    "solve": cmd_solve,
    "renorm-check": cmd_renorm_check,
    "rate-study": cmd_rate_study,
    "norms": cmd_norms,
    "backlund": cmd_backlund,
    "ensemble": cmd_ensemble,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        argv = expand_config(argv)
    except (OSError, ValueError) as exc:
        print(f"config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0,) else 0
    return _DRIVERS[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
