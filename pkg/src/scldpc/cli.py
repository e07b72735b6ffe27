"""Command-line front end for the ensemble analyses.

Subcommands: threshold, mean-evolution, gamma, variance, theta, predict,
simulate, figure, equivalent-m.  Options may come from a flat key=value
config file (--config); explicit flags win.  Exit codes: 0 success,
2 configuration error, 3 numerical failure.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from ._util import fnum
from .ensembles import EnsembleSpec
from .mean_evolution import (GammaFitError, PlateauNotFound, ThresholdBracketError,
                             estimate_gamma, find_threshold, integrate, mean_model,
                             steady_state)
from .montecarlo import trajectory_batch, wer_point
from .sampler import GIRTH_LEVELS
from .scaling import ScalingParams, equivalent_M, mu0, predict_wer
from .variance import (CovarianceFitError, delta1_proxy, fit_theta,
                       monte_carlo_delta1)

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

_NUMERICAL_ERRORS = (ThresholdBracketError, GammaFitError, PlateauNotFound,
                     CovarianceFitError)


def _read_config(path):
    values = {}
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"bad config line (expected key = value): {line!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        values[key.replace("-", "_")] = val
    return values


def _header(args, command):
    items = sorted((k, v) for k, v in vars(args).items()
                   if k not in ("func", "config", "out") and v is not None)
    cfg = " ".join(f"{k}={v}" for k, v in items)
    return f"# scldpc {__version__}\n# command: {command}\n# config: {cfg}\n"


def _write(args, name, text, command):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_text(_header(args, command) + text)
    print(f"wrote {path}")
    return path


def _spec(args):
    return EnsembleSpec(family=args.family, l=args.l, r=args.r, L=args.L)


def _add_ensemble_args(p):
    p.add_argument("--family", choices=("protograph", "random"), default="protograph")
    p.add_argument("--l", type=int, default=3)
    p.add_argument("--r", type=int, default=6)
    p.add_argument("--L", type=int, default=50)


def _add_common(p):
    p.add_argument("--config", help="key = value defaults file; flags override")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--step", type=float, default=1e-3, help="integration step")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--jobs", type=int, default=1, help="worker threads for trials")


def _add_params_args(p, prefix=""):
    dash = f"-{prefix}" if prefix else ""
    for name, help_ in (("estar", "BP threshold"), ("gamma", "plateau slope"),
                        ("delta1", "steady-state variance parameter"),
                        ("theta", "covariance decay rate"),
                        ("taustar", "steady-state onset")):
        p.add_argument(f"--{name}{dash}", type=float, help=help_)


def _params_from(args, prefix=""):
    suffix = f"_{prefix}" if prefix else ""
    vals = [getattr(args, f"{n}{suffix}") for n in
            ("estar", "gamma", "delta1", "theta", "taustar")]
    if all(v is None for v in vals):
        return None
    if any(v is None for v in vals):
        raise ValueError("scaling parameters must be given together: "
                         "--estar --gamma --delta1 --theta --taustar")
    return ScalingParams(epsilon_star=vals[0], gamma=vals[1], delta1_star=vals[2],
                         theta=vals[3], tau_star=vals[4])


def cmd_threshold(args):
    spec = _spec(args)
    res = find_threshold(spec, tol=args.tol, step=args.step,
                         bracket=(args.bracket_lo, args.bracket_hi))
    record = {"ensemble": spec.label(), "epsilon_star": res.epsilon_star,
              "bracket_lo": res.lo, "bracket_hi": res.hi,
              "bracket_width": res.bracket_width,
              "probes": [{"eps": e, "survived": s, "halt": h} for e, s, h in res.probes]}
    _write(args, f"threshold_{spec.label()}.json", json.dumps(record, indent=2) + "\n",
           "threshold")
    print(f"{spec.label()}: epsilon_star = {res.epsilon_star:.6f} "
          f"(bracket [{res.lo:.6f}, {res.hi:.6f}])")
    return 0


def cmd_mean_evolution(args):
    spec = _spec(args)
    model = mean_model(spec)
    traj = integrate(model, args.eps, step=args.step)
    _write(args, f"mean_evolution_{spec.label()}_eps{args.eps}.csv", traj.to_csv(),
           "mean-evolution")
    record = {"ensemble": spec.label(), "eps": args.eps,
              "halt_reason": traj.halt_reason, "survived": bool(traj.survived),
              "tau_end": float(traj.tau[-1])}
    try:
        tau_star, c1_star, window_end = steady_state(traj)
        record.update(tau_star=tau_star, c1_star=c1_star, window_end=window_end)
        print(f"{spec.label()} eps={args.eps}: tau*={tau_star:.3f} c1*={c1_star:.6f}")
    except PlateauNotFound as e:
        record["plateau"] = f"not found: {e}"
        print(f"{spec.label()} eps={args.eps}: no steady-state plateau ({e})")
    _write(args, f"mean_evolution_{spec.label()}_eps{args.eps}.json",
           json.dumps(record, indent=2) + "\n", "mean-evolution")
    return 0


def cmd_gamma(args):
    spec = _spec(args)
    estar = args.estar
    if estar is None:
        estar = find_threshold(spec, tol=args.tol, step=args.step).epsilon_star
        print(f"computed threshold {estar:.6f}")
    deltas = [float(d) for d in args.deltas.split(",")]
    fit = estimate_gamma(spec, estar, deltas=deltas, step=args.step)
    record = {"ensemble": spec.label(), "epsilon_star": estar, "gamma": fit.gamma,
              "residual_rel": fit.residual_rel,
              "probes": [{"delta": float(d), "c1_star": float(c), "tau_star": float(t)}
                         for d, c, t in zip(fit.deltas, fit.c1_stars, fit.tau_stars)]}
    _write(args, f"gamma_{spec.label()}.json", json.dumps(record, indent=2) + "\n", "gamma")
    print(f"{spec.label()}: gamma = {fit.gamma:.4f} (residual {fit.residual_rel:.3g})")
    return 0


def cmd_variance(args):
    spec = _spec(args)
    proxy = delta1_proxy(spec, args.eps, step=args.step)
    mc = monte_carlo_delta1(spec, args.M, args.eps, args.trials, args.seed,
                            girth_guard=args.girth, n_graphs=args.graphs)
    _write(args, f"variance_{spec.label()}_M{args.M}_eps{args.eps}.csv",
           mc.csv(analytic=proxy), "variance")
    sel = (mc.taus >= proxy.taus[0]) & mc.reliable
    record = {"ensemble": spec.label(), "M": args.M, "eps": args.eps,
              "trials": args.trials, "delta1_star_analytic": proxy.delta1_star,
              "delta1_star_mc": float(np.nanmean(
                  mc.delta1[sel & (mc.taus >= 0.5 * mc.taus[-1])])) if sel.any() else None}
    _write(args, f"variance_{spec.label()}_M{args.M}_eps{args.eps}.json",
           json.dumps(record, indent=2) + "\n", "variance")
    print(f"{spec.label()}: delta1*_analytic = {proxy.delta1_star:.4f}")
    return 0


def cmd_theta(args):
    spec = _spec(args)
    anchors = tuple(float(a) for a in args.anchors.split(","))
    fit = fit_theta(spec, args.M, args.eps, args.trials, args.seed, anchors=anchors,
                    max_lag=args.max_lag, girth_guard=args.girth, n_graphs=args.graphs)
    _write(args, f"theta_{spec.label()}_M{args.M}_eps{args.eps}.csv", fit.csv(), "theta")
    record = {"ensemble": spec.label(), "M": args.M, "eps": args.eps,
              "trials": args.trials, "theta": fit.theta,
              "delta1_star": fit.delta1_star, "residual": fit.residual,
              "n_points": fit.n_points, "anchors": list(fit.anchors)}
    _write(args, f"theta_{spec.label()}_M{args.M}_eps{args.eps}.json",
           json.dumps(record, indent=2) + "\n", "theta")
    print(f"{spec.label()}: theta = {fit.theta:.4f} delta1* = {fit.delta1_star:.4f}")
    return 0


def _eps_grid(args):
    if args.eps is not None:
        return [args.eps]
    if args.eps_start is None or args.eps_stop is None:
        raise ValueError("give --eps or both --eps-start and --eps-stop")
    n = int(round((args.eps_stop - args.eps_start) / args.eps_step)) + 1
    return [args.eps_start + i * args.eps_step for i in range(n)]


def cmd_predict(args):
    params = _params_from(args)
    if params is None:
        raise ValueError("predict needs --estar --gamma --delta1 --theta --taustar")
    lines = ["epsilon,M,L,mu0,p_star"]
    for M in args.M:
        for eps in _eps_grid(args):
            lines.append(f"{fnum(eps)},{M},{args.L},{fnum(mu0(params, M, eps))},"
                         f"{fnum(predict_wer(params, M, eps, args.L))}")
    _write(args, "predicted_wer.csv", "\n".join(lines) + "\n", "predict")
    return 0


def cmd_simulate(args):
    spec = _spec(args)
    params = _params_from(args)
    lines = ["epsilon,trials,errors,wer,ci_lo,ci_hi,ci_method,seed,predicted"]
    for eps in _eps_grid(args):
        pt = wer_point(spec, args.M, eps, args.trials, args.seed,
                       target_errors=args.target_errors, girth_guard=args.girth,
                       n_graphs=args.graphs, n_jobs=args.jobs)
        pred = ""
        if params is not None and eps < params.epsilon_star and eps * spec.L > params.tau_star:
            pred = fnum(predict_wer(params, args.M, eps, spec.L))
        lines.append(f"{fnum(pt.eps)},{pt.trials},{pt.errors},{fnum(pt.wer)},"
                     f"{fnum(pt.ci_lo)},{fnum(pt.ci_hi)},{pt.ci_method},{pt.seed},{pred}")
        print(f"eps={eps}: wer={pt.wer:.6g} ({pt.errors}/{pt.trials})")
    _write(args, f"wer_{spec.label()}_M{args.M}.csv", "\n".join(lines) + "\n", "simulate")
    return 0


def cmd_equivalent_m(args):
    pa = _params_from(args, "a")
    pb = _params_from(args, "b")
    if pa is None or pb is None:
        raise ValueError("equivalent-m needs full parameter sets for both ensembles "
                         "(--estar-a ... and --estar-b ...)")
    Ma = equivalent_M(pa, pb, args.M_b, eps_ref=args.eps_ref)
    record = {"M_b": args.M_b, "M_a": Ma, "ratio": Ma / args.M_b,
              "eps_ref": args.eps_ref}
    _write(args, "equivalent_m.json", json.dumps(record, indent=2) + "\n", "equivalent-m")
    print(f"M_a = {Ma:.2f} (ratio {Ma / args.M_b:.4f})")
    return 0


def _figure_fig2a(args):
    spec = EnsembleSpec("protograph", args.l, args.r, args.L)
    model = mean_model(spec)
    for eps in (0.40, 0.45, 0.4875):
        traj = integrate(model, eps, step=args.step)
        _write(args, f"fig2a_mean_{spec.label()}_eps{eps}.csv", traj.to_csv(), "figure")
    batch = trajectory_batch(spec, args.M, 0.45, args.trials, args.seed,
                             girth_guard=args.girth)
    lines = ["trial,tau,c1_fraction"]
    for t in range(min(args.trials, 5)):
        row = batch.c1[t]
        for tau, c in zip(batch.taus, row):
            if not np.isnan(c):
                lines.append(f"{t},{fnum(tau)},{fnum(c / args.M)}")
    _write(args, f"fig2a_trajectories_{spec.label()}_M{args.M}.csv",
           "\n".join(lines) + "\n", "figure")


def _figure_fig2b(args):
    for family in ("protograph", "random"):
        spec = EnsembleSpec(family, args.l, args.r, args.L)
        traj = integrate(mean_model(spec), args.eps, step=args.step)
        _write(args, f"fig2b_mean_{spec.label()}_eps{args.eps}.csv", traj.to_csv(),
               "figure")


def _figure_fig3a(args):
    for family in ("protograph", "random"):
        spec = EnsembleSpec(family, args.l, args.r, args.L)
        proxy = delta1_proxy(spec, args.eps, step=args.step)
        mc = monte_carlo_delta1(spec, args.M, args.eps, args.trials, args.seed,
                                girth_guard=args.girth, n_graphs=args.graphs)
        _write(args, f"fig3a_delta1_{spec.label()}_M{args.M}.csv",
               mc.csv(analytic=proxy), "figure")


def _figure_fig3b(args):
    anchors = tuple(float(a) for a in args.anchors.split(","))
    for family in ("protograph", "random"):
        spec = EnsembleSpec(family, args.l, args.r, args.L)
        fit = fit_theta(spec, args.M, args.eps, args.trials, args.seed,
                        anchors=anchors, girth_guard=args.girth, n_graphs=args.graphs)
        _write(args, f"fig3b_covariance_{spec.label()}_M{args.M}.csv", fit.csv(),
               "figure")


def _figure_fig4(args):
    params = _params_from(args)
    if params is None:
        raise ValueError("figure fig4 needs --estar --gamma --delta1 --theta --taustar "
                         "(run threshold/gamma/variance/theta first)")
    eps_grid = [0.44 + 0.0025 * i for i in range(9)]
    for family, Ms in (("protograph", (512,)), ("random", (512, 800, 2000))):
        spec = EnsembleSpec(family, args.l, args.r, args.L)
        lines = ["epsilon,M,trials,errors,wer,ci_lo,ci_hi,predicted"]
        for M in Ms:
            for eps in eps_grid:
                pt = wer_point(spec, M, eps, args.trials, args.seed,
                               target_errors=args.target_errors,
                               girth_guard=args.girth, n_graphs=args.graphs,
                               n_jobs=args.jobs)
                pred = ""
                if eps < params.epsilon_star and eps * spec.L > params.tau_star:
                    pred = fnum(predict_wer(params, M, eps, spec.L))
                lines.append(f"{fnum(eps)},{M},{pt.trials},{pt.errors},{fnum(pt.wer)},"
                             f"{fnum(pt.ci_lo)},{fnum(pt.ci_hi)},{pred}")
        _write(args, f"fig4_wer_{spec.label()}.csv", "\n".join(lines) + "\n", "figure")


_FIGURES = {"fig2a": _figure_fig2a, "fig2b": _figure_fig2b, "fig3a": _figure_fig3a,
            "fig3b": _figure_fig3b, "fig4": _figure_fig4}


def cmd_figure(args):
    _FIGURES[args.name](args)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="scldpc",
                                     description="Spatially coupled LDPC analyses on the BEC")
    parser.add_argument("--version", action="version", version=f"scldpc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("threshold", help="BP threshold by bisection of the mean evolution")
    _add_common(p)
    _add_ensemble_args(p)
    p.add_argument("--tol", type=float, default=5e-4, help="bracket width")
    p.add_argument("--bracket-lo", type=float, default=0.0)
    p.add_argument("--bracket-hi", type=float, default=0.5)
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("mean-evolution", help="integrate the expected graph evolution")
    _add_common(p)
    _add_ensemble_args(p)
    p.add_argument("--eps", type=float, required=True)
    p.set_defaults(func=cmd_mean_evolution)

    p = sub.add_parser("gamma", help="plateau-height slope near the threshold")
    _add_common(p)
    _add_ensemble_args(p)
    p.add_argument("--estar", type=float, help="known threshold (computed when absent)")
    p.add_argument("--tol", type=float, default=5e-4)
    p.add_argument("--deltas", default="0.01,0.02,0.03,0.04,0.05",
                   help="threshold gaps to probe")
    p.set_defaults(func=cmd_gamma)

    p = sub.add_parser("variance", help="one-step variance proxy vs Monte Carlo")
    _add_common(p)
    _add_ensemble_args(p)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--M", type=int, required=True)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--girth", choices=GIRTH_LEVELS, default="cycle4")
    p.add_argument("--graphs", type=int, help="graph pool size")
    p.set_defaults(func=cmd_variance)

    p = sub.add_parser("theta", help="covariance decay rate of the steady state")
    _add_common(p)
    _add_ensemble_args(p)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--M", type=int, required=True)
    p.add_argument("--trials", type=int, default=2000)
    p.add_argument("--anchors", default="26,28")
    p.add_argument("--max-lag", type=float, default=3.0)
    p.add_argument("--girth", choices=GIRTH_LEVELS, default="cycle4")
    p.add_argument("--graphs", type=int)
    p.set_defaults(func=cmd_theta)

    p = sub.add_parser("predict", help="scaling-law word error rate")
    _add_common(p)
    _add_params_args(p)
    p.add_argument("--M", type=int, action="append", required=True)
    p.add_argument("--L", type=int, default=100)
    p.add_argument("--eps", type=float)
    p.add_argument("--eps-start", type=float)
    p.add_argument("--eps-stop", type=float)
    p.add_argument("--eps-step", type=float, default=0.0025)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("simulate", help="Monte Carlo word error rate")
    _add_common(p)
    _add_ensemble_args(p)
    _add_params_args(p)
    p.add_argument("--M", type=int, required=True)
    p.add_argument("--eps", type=float)
    p.add_argument("--eps-start", type=float)
    p.add_argument("--eps-stop", type=float)
    p.add_argument("--eps-step", type=float, default=0.0025)
    p.add_argument("--trials", type=int, default=10000)
    p.add_argument("--target-errors", type=int, default=100)
    p.add_argument("--girth", choices=GIRTH_LEVELS, default="cycle4")
    p.add_argument("--graphs", type=int)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("figure", help="emit the data series behind a named figure")
    _add_common(p)
    p.add_argument("name", choices=sorted(_FIGURES))
    p.add_argument("--l", type=int, default=3)
    p.add_argument("--r", type=int, default=6)
    p.add_argument("--L", type=int, default=50)
    p.add_argument("--M", type=int, default=2000)
    p.add_argument("--eps", type=float, default=0.45)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--target-errors", type=int, default=100)
    p.add_argument("--anchors", default="26,28")
    p.add_argument("--girth", choices=GIRTH_LEVELS, default="cycle4")
    p.add_argument("--graphs", type=int)
    _add_params_args(p)
    p.set_defaults(func=cmd_figure)

    p = sub.add_parser("equivalent-m", help="code size matching another ensemble's survival")
    _add_common(p)
    _add_params_args(p, "a")
    _add_params_args(p, "b")
    p.add_argument("--M-b", type=int, required=True)
    p.add_argument("--eps-ref", type=float, default=0.45)
    p.set_defaults(func=cmd_equivalent_m)

    return parser


def main(argv=None):
    parser = build_parser()
    args, _ = parser.parse_known_args(argv)
    if getattr(args, "config", None):
        try:
            defaults = _read_config(args.config)
        except (OSError, ValueError) as e:
            print(f"config error: {e}", file=sys.stderr)
            return EXIT_CONFIG
        known = {a.dest for a in parser._subparsers._group_actions[0]
                 .choices[args.command]._actions}
        typed = {}
        for k, v in defaults.items():
            if k not in known:
                print(f"config error: unknown key {k!r}", file=sys.stderr)
                return EXIT_CONFIG
            typed[k] = v
        sp = parser._subparsers._group_actions[0].choices[args.command]
        for action in sp._actions:
            if action.dest in typed:
                raw = typed[action.dest]
                action.default = action.type(raw) if action.type else raw
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValueError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except _NUMERICAL_ERRORS as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except RuntimeError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
