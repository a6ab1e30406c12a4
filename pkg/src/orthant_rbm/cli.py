"""Command-line front end: ``orthant-rbm <command> MODEL.json [options]``.

Reports go to stdout (or ``-o FILE``) as JSON with an embedded manifest;
a short human summary goes to stderr. Exit codes: 0 success or
DualSkewSymmetric, 1 input error, 2 NoExponentialForm, 3 assumptions
violated.
"""

import argparse
import sys
import time

import numpy as np

from . import __version__
from .decay import (
    Normalization,
    Verdict,
    classify,
    compute_decay_vector,
    dual_boundary_matrix,
    reflection_block,
)
from .matrix import AssumptionReport
from .model import FacetSpec, ModelError, load_model, model_to_dict, validate_model
from .montecarlo import (
    boundary_limit_experiment,
    compare_exponential,
    dichotomy_experiment,
    estimate_absorption,
    estimate_halfline,
)
from .pde import absorption_pde_residuals, dual_pde_residuals, fd_generator_check
from .report import RunManifest, dumps, file_sha256
from .simulator import (
    SimConfig,
    simulate_facet_trajectory,
    simulate_trajectory,
    write_path_csv,
)

EXIT_OK, EXIT_INPUT, EXIT_NO_EXP, EXIT_ASSUMPTIONS = 0, 1, 2, 3

VERDICT_EXIT = {
    Verdict.DUAL_SKEW_SYMMETRIC: EXIT_OK,
    Verdict.NO_EXPONENTIAL_FORM: EXIT_NO_EXP,
    Verdict.ASSUMPTIONS_VIOLATED: EXIT_ASSUMPTIONS,
}


class CommandError(Exception):
    def __init__(self, message, code=EXIT_INPUT):
        super().__init__(message)
        self.code = code


def _vector(text):
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _floats(text):
    return [float(v) for v in _vector(text)]


def _facet(text):
    try:
        return FacetSpec(tuple(int(v) for v in text.split(",")))
    except (ValueError, ModelError) as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _note(msg):
    print(msg, file=sys.stderr)


def _load(args):
    spec, facet = load_model(args.model)
    if getattr(args, "facet", None) is not None:
        facet = args.facet.check(spec.dimension)
    report = validate_model(spec)
    if not report.valid:
        msgs = "; ".join(v.message for v in report.violations)
        raise CommandError(f"invalid model: {msgs}")
    if facet is not None and facet.is_full(spec.dimension):
        facet = None
    return spec, facet


def _sim_config(args):
    return SimConfig(dt=args.dt, eps_abs=args.eps_abs,
                     escape_radius=args.escape_radius, max_time=args.max_time)


def _emit(args, command, config, report, seed=None, started=None):
    manifest = RunManifest(
        command=command,
        model_sha256=file_sha256(args.model) if getattr(args, "model", None) else None,
        config=config,
        seed=seed,
        version=__version__,
        wall_time=time.perf_counter() - started if started is not None else 0.0,
    )
    text = dumps({"report": report, "manifest": manifest})
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _facet_list(facet):
    return None if facet is None else list(facet.indices)


# ---------------------------------------------------------------------------
# commands


def cmd_analyze(args):
    t0 = time.perf_counter()
    spec, facet = _load(args)
    cls = classify(spec, facet)
    _note(f"verdict: {cls.verdict.value}  (det R = {cls.det_r:.6g}, "
          f"smallest singular value {cls.smallest_singular_value:.3g})")
    rep = cls.assumption_report
    _note(f"A1 not S: {rep.a1_not_s}  A2 strict submatrices S: {rep.a2_strict_submatrices}"
          f"  A3 positive drift: {rep.a3_positive_drift}")
    report = {"model": model_to_dict(spec, facet), "classification": cls}
    _emit(args, "analyze", {"facet": _facet_list(facet)}, report, started=t0)
    return VERDICT_EXIT[cls.verdict]


def _require_dss(spec, facet):
    cls = classify(spec, facet)
    if cls.verdict is not Verdict.DUAL_SKEW_SYMMETRIC:
        raise CommandError(f"model is {cls.verdict.value}, not DualSkewSymmetric",
                           VERDICT_EXIT[cls.verdict])
    return cls


def cmd_decay(args):
    t0 = time.perf_counter()
    spec, facet = _load(args)
    _require_dss(spec, facet)
    norm = Normalization.parse(args.normalization)
    decay = compute_decay_vector(spec, facet, norm)
    sigma, mu, R = reflection_block(spec, facet)
    residuals = absorption_pde_residuals(sigma, mu, R, decay.a)
    _note(f"a = {np.array2string(decay.a, precision=6)}  ({norm.value})")
    _note(f"generator residual {residuals.generator_residual:.3g}, "
          f"max Neumann residual {np.max(np.abs(residuals.neumann_residuals)):.3g}")
    config = {"normalization": norm.value, "facet": _facet_list(facet)}
    _emit(args, "decay", config, {"decay": decay, "residuals": residuals}, started=t0)
    return EXIT_OK


def cmd_simulate(args):
    t0 = time.perf_counter()
    spec, facet = _load(args)
    cfg = _sim_config(args)
    if args.path:
        cfg = SimConfig(cfg.dt, cfg.eps_abs, cfg.escape_radius, cfg.max_time,
                        path_stride=args.path_stride)
    if facet is None:
        result = simulate_trajectory(spec, args.start, cfg, args.seed, args.index,
                                     args.allow_degenerate)
    else:
        result = simulate_facet_trajectory(spec, facet, args.start, cfg, args.seed,
                                           args.index, args.allow_degenerate)
    if args.path:
        write_path_csv(result, args.path)
    _note(f"{result.outcome.value} at t = {result.time:.6g} after {result.steps} steps")
    resolved = cfg.resolve(args.start if facet is None else args.start[facet.zero_based])
    config = dict(resolved.to_dict(), start=args.start.tolist(), index=args.index,
                  facet=_facet_list(facet), allow_degenerate=args.allow_degenerate)
    _emit(args, "simulate", config, result, seed=args.seed, started=t0)
    return EXIT_OK


def _summarize_estimate(rep):
    line = (f"x = {list(rep.start)}: p_hat = {rep.p_hat:.4f} "
            f"[{rep.ci_low:.4f}, {rep.ci_high:.4f}]  n = {rep.n}, undecided = {rep.undecided}")
    if rep.prediction is not None:
        line += f"  prediction {rep.prediction:.4f} (z = {rep.z_score:.2f})"
    if rep.unreliable:
        line += "  UNRELIABLE"
    _note(line)


def cmd_estimate(args):
    t0 = time.perf_counter()
    cfg = _sim_config(args)
    config = dict(dt=cfg.dt, eps_abs=cfg.eps_abs, escape_radius=cfg.escape_radius,
                  max_time=cfg.max_time, n=args.n)

    if args.halfline:
        x0 = float(args.start[0][0]) if args.start else 0.5
        rep = estimate_halfline(args.sigma2, args.mu, x0, args.n, cfg, args.seed,
                                args.workers)
        _summarize_estimate(rep)
        config.update(halfline=True, sigma2=args.sigma2, mu=args.mu, start=[x0])
        _emit(args, "estimate", config, rep, seed=args.seed, started=t0)
        return EXIT_OK

    if args.model is None:
        raise CommandError("a model file is required unless --halfline is given")
    spec, facet = _load(args)
    config.update(facet=_facet_list(facet), allow_degenerate=args.allow_degenerate)
    common = dict(config=cfg, seed=args.seed, facet=facet, workers=args.workers)

    if args.sweep == "scale":
        if args.direction is None or not args.scales:
            raise CommandError("--sweep scale needs --direction and --scales")
        report = boundary_limit_experiment(spec, args.direction, args.scales, args.n, **common)
        config.update(sweep="scale", direction=args.direction.tolist(), scales=args.scales)
    elif args.sweep == "horizon":
        if not args.horizons or len(args.start or []) != 1:
            raise CommandError("--sweep horizon needs --horizons and one --start")
        report = dichotomy_experiment(spec, args.start[0], args.horizons, args.n, **common)
        config.update(sweep="horizon", horizons=args.horizons, start=args.start[0].tolist())
    elif args.compare:
        if not args.start:
            raise CommandError("--compare needs at least one --start")
        report = compare_exponential(spec, args.start, args.n, **common)
        config.update(compare=True, start=[s.tolist() for s in args.start])
    else:
        if not args.start:
            raise CommandError("--start is required")
        reports = [estimate_absorption(spec, x, args.n, allow_degenerate=args.allow_degenerate,
                                       **common) for x in args.start]
        for rep in reports:
            _summarize_estimate(rep)
        config.update(start=[s.tolist() for s in args.start])
        report = reports[0] if len(reports) == 1 else {"estimates": reports}
        _emit(args, "estimate", config, report, seed=args.seed, started=t0)
        return EXIT_OK

    for _, rep in report:
        _summarize_estimate(rep)
    if report.checks:
        _note(f"checks: {report.checks}")
    if args.csv:
        report.write_csv(args.csv)
    _emit(args, "estimate", config, report, seed=args.seed, started=t0)
    return EXIT_OK


def cmd_pde_check(args):
    t0 = time.perf_counter()
    spec, facet = _load(args)
    sigma, mu, R = reflection_block(spec, facet)
    norm = Normalization.parse(args.normalization)
    out = {}
    if args.decay is not None:
        a = args.decay
    elif classify(spec, facet).verdict is Verdict.DUAL_SKEW_SYMMETRIC:
        a = compute_decay_vector(spec, facet, norm).a
    else:
        a = None
    if a is not None:
        if a.size != sigma.shape[0]:
            raise CommandError(f"decay vector must have {sigma.shape[0]} entries")
        res = absorption_pde_residuals(sigma, mu, R, a)
        out["a"] = a
        out["absorption"] = res
        _note(f"generator residual {res.generator_residual:.6g}, "
              f"Neumann {np.array2string(res.neumann_residuals, precision=3)}"
              + ("" if res.valid else f"  INVALID: {res.status}"))
        h = args.grid_step
        box = (np.full(a.size, 1.0), np.full(a.size, 2.0))
        e1 = fd_generator_check(sigma, mu, a, h, box)
        e2 = fd_generator_check(sigma, mu, a, h / 2, box)
        order = float(np.log2(e1 / e2)) if e1 > 0 and e2 > 0 else None
        out["finite_difference"] = {"h": h, "error_h": e1, "error_h_half": e2,
                                    "order": order}
    else:
        out["absorption"] = {"status": "inapplicable: no exponential decay vector"}
    dual = dual_pde_residuals(spec.sigma, spec.mu, spec.reflection, args.rates)
    out["dual"] = dual
    out["dual_boundary_matrix"] = dual_boundary_matrix(spec.sigma, spec.reflection)
    _note(f"dual: {dual.status}")
    config = {"normalization": norm.value, "facet": _facet_list(facet),
              "grid_step": args.grid_step}
    _emit(args, "pde-check", config, out, started=t0)
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def _add_sim_options(p):
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--eps-abs", type=float, default=None)
    p.add_argument("--escape-radius", type=float, default=None)
    p.add_argument("--max-time", type=float, default=100.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--allow-degenerate", action="store_true",
                   help="permit models that violate the structural assumptions")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="orthant-rbm",
        description="Absorption of reflected Brownian motion at the apex of the orthant.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name, func, help_text, model_required=True):
        p = sub.add_parser(name, help=help_text)
        if model_required:
            p.add_argument("model", help="model JSON file")
        else:
            p.add_argument("model", nargs="?", default=None, help="model JSON file")
        p.add_argument("-o", "--output", help="write the JSON report here instead of stdout")
        p.add_argument("--facet", type=_facet, default=None,
                       help="1-based facet coordinates, e.g. 1,2")
        p.set_defaults(func=func)
        return p

    command("analyze", cmd_analyze, "check assumptions and classify the model")

    p = command("decay", cmd_decay, "decay vector of a dual skew symmetric model")
    p.add_argument("--normalization", choices=["harmonic", "paper"], default="harmonic")

    p = command("simulate", cmd_simulate, "simulate one trajectory")
    p.add_argument("--start", type=_vector, required=True)
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--path", help="write the sampled path to this CSV file")
    p.add_argument("--path-stride", type=int, default=1)
    _add_sim_options(p)

    p = command("estimate", cmd_estimate, "Monte Carlo absorption probability",
                model_required=False)
    p.add_argument("--start", type=_vector, action="append")
    p.add_argument("-n", type=int, default=10_000)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--compare", action="store_true",
                   help="compare with both decay normalizations")
    p.add_argument("--sweep", choices=["scale", "horizon"])
    p.add_argument("--direction", type=_vector)
    p.add_argument("--scales", type=_floats)
    p.add_argument("--horizons", type=_floats)
    p.add_argument("--csv", help="write sweep rows to this CSV file")
    p.add_argument("--halfline", action="store_true",
                   help="one-dimensional calibration run, no model file needed")
    p.add_argument("--sigma2", type=float, default=1.0)
    p.add_argument("--mu", type=float, default=1.0)
    _add_sim_options(p)

    p = command("pde-check", cmd_pde_check, "PDE residuals of the exponential candidate")
    p.add_argument("--normalization", choices=["harmonic", "paper"], default="harmonic")
    p.add_argument("--decay", type=_vector, default=None,
                   help="check this vector instead of the computed one")
    p.add_argument("--rates", type=_vector, default=None,
                   help="dual candidate rates c (default: stationary rates)")
    p.add_argument("--grid-step", type=float, default=1e-2)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CommandError as exc:
        _note(f"error: {exc}")
        return exc.code
    except ModelError as exc:
        _note(f"error: {exc}")
        if isinstance(exc.report, AssumptionReport):
            return EXIT_ASSUMPTIONS
        return EXIT_INPUT
    except (ValueError, OSError) as exc:
        _note(f"error: {exc}")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
