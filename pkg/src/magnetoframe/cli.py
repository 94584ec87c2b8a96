"""
Command-line entry point ``magnetoframe``.

Exit codes: 0 success (a negative verdict is still a success), 2 invalid
configuration, 3 a point left the chart domain, 4 an invariant failed.
"""

import argparse
import os
import sys

import numpy as np

from . import serialize
from .checks import run_checks
from .config import ExperimentConfig, apply_overrides, load_config, parse_angles
from .errors import ConfigError, DegenerateSurfaceError, DomainError, InvariantError, MetricError
from .hopf import (build_hopf_surface, constancy_report, match_closed_form, mean_curvature_field,
                   predicted_mean_curvature, tau_at_start)
from .magnetic import initial_velocity, integrate_magnetic_curve
from .sasaki import classify_space, theorem_pipeline
from .spaces import build_space, list_spaces

EXIT_OK, EXIT_CONFIG, EXIT_DOMAIN, EXIT_INVARIANT = 0, 2, 3, 4


def _angles(text):
    try:
        return parse_angles(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="experiment config file")
    common.add_argument("--space", metavar="NAME", help="catalog space kind")
    common.add_argument("--tau", type=float, metavar="F", help="bundle curvature")
    common.add_argument("--kappa", type=float, metavar="F", help="base curvature")
    common.add_argument("--theta0", type=_angles, metavar="F[,F...]", help="angles from xi in radians; 'pi/6' accepted")
    common.add_argument("--out", metavar="DIR", help="output directory (else $MAGNETOFRAME_OUT, else .)")
    common.add_argument("--seed", type=int, metavar="N", help="seed for random sample points")
    common.add_argument("--tol-h", type=float, metavar="F", dest="tol_h", help="mean-curvature spread tolerance")

    parser = argparse.ArgumentParser(prog="magnetoframe", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("list-spaces", parents=[common], help="print the space catalog")
    sub.add_parser("curve", parents=[common], help="integrate a normal magnetic curve")
    sub.add_parser("surface", parents=[common], help="build a Hopf surface and its mean curvature")
    sub.add_parser("classify", parents=[common], help="curvature classification of the space")
    sub.add_parser("verify-theorem", parents=[common], help="Hopf surfaces plus classification report")
    sub.add_parser("checks", parents=[common], help="run the invariant battery")
    return parser


def resolve_config(args):
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    return apply_overrides(cfg, space=args.space, tau=args.tau, kappa=args.kappa, theta0=args.theta0,
                           out=args.out, seed=args.seed, tol_h=args.tol_h)


def _path(cfg, name):
    return os.path.join(cfg.output_dir(), name)


def cmd_list_spaces(cfg, out):
    print(f"{'name':<12} {'sasakian':<9} {'parameters':<36} description", file=out)
    for info in list_spaces():
        params = ", ".join(f"{k} {v}" for k, v in info.parameters.items()) or "-"
        flag = {True: "yes", False: "no", None: "?"}[info.sasakian]
        print(f"{info.name:<12} {flag:<9} {params:<36} {info.description}", file=out)
    return EXIT_OK


def _first_curve(cfg):
    chart, xi = build_space(cfg.space)
    p = np.asarray(cfg.base_points[0], dtype=float)
    theta0 = cfg.theta0[0]
    v = initial_velocity(chart, xi, p, theta0)
    curve = integrate_magnetic_curve(chart, xi, p, v, 1.0, cfg.t_end, cfg.integrator)
    return chart, xi, curve


def cmd_curve(cfg, out):
    _, _, curve = _first_curve(cfg)
    serialize.write_text(_path(cfg, "curve.csv"), serialize.curve_csv(curve))
    serialize.write_text(_path(cfg, "curve.dat"), serialize.curve_plot_data(curve))
    print(f"curve: {len(curve.t)} samples, theta0={serialize.fmt(curve.theta0)}, "
          f"speed drift {curve.speed_drift:.3g}, angle drift {curve.angle_drift:.3g}"
          f"{', truncated at domain boundary' if curve.exited else ''}", file=out)
    return EXIT_OK


def cmd_surface(cfg, out):
    chart, xi, curve = _first_curve(cfg)
    surf = build_hopf_surface(chart, xi, curve, cfg.s_range, cfg.n_t, cfg.n_s)
    field = mean_curvature_field(chart, surf)
    verdict = constancy_report(field, cfg.tol_H)
    tau = tau_at_start(chart, xi, curve)
    pred = predicted_mean_curvature(curve.theta0, tau)
    match = match_closed_form(field, curve.theta0, tau)
    summary = {"theta0": curve.theta0, "tau_at_start": tau, "H_mean": field.summary["mean"],
               "H_spread": verdict.spread, "is_cmc": verdict.is_cmc, "H": field.summary,
               "fiber_variation": field.fiber_variation,
               "closed_forms": {"paper_form": pred.paper_form, "arclength_form": pred.arclength_form,
                                "matched": match.matched}}
    serialize.write_text(_path(cfg, "surface.csv"), serialize.surface_csv(surf, field))
    serialize.write_json(_path(cfg, "surface_summary.json"), summary)
    serialize.write_text(_path(cfg, "surface.dat"), serialize.surface_plot_data(surf, field))
    print(f"surface: H mean {serialize.fmt(summary['H_mean'])}, spread {verdict.spread:.3g}, "
          f"is_cmc={verdict.is_cmc}, closed form matched: {match.matched}", file=out)
    return EXIT_OK


def cmd_classify(cfg, out):
    chart, xi = build_space(cfg.space)
    verdict = classify_space(chart, xi, cfg.samples, cfg.tol_tau, cfg.tol_K)
    serialize.write_json(_path(cfg, "classify.json"), verdict)
    serialize.write_text(_path(cfg, "classify.txt"), serialize.key_value_text(verdict))
    print(f"classify: sasakian_by_corollary={verdict.sasakian_by_corollary} "
          f"strict_k_contact={verdict.strict_k_contact} tau={serialize.fmt(verdict.tau_mean)}", file=out)
    return EXIT_OK


def cmd_verify_theorem(cfg, out):
    report = theorem_pipeline(cfg.space, cfg.theta0, np.asarray(cfg.base_points, dtype=float), cfg.pipeline())
    serialize.write_json(_path(cfg, "verify_theorem.json"), report)
    v = report["verdict"]
    print(f"verify-theorem: all_surfaces_cmc={v['all_surfaces_cmc']} "
          f"sasakian_by_corollary={v['sasakian_by_corollary']} strict_k_contact={v['strict_k_contact']} "
          f"tau_positive={v['tau_positive']} implication={v['implication']}", file=out)
    return EXIT_OK


def cmd_checks(cfg, out):
    results = run_checks(cfg.space, cfg.checks_points, cfg.seed, cfg.tol_H)
    serialize.write_json(_path(cfg, "checks.json"), results)
    for r in results:
        print(f"{r.status.upper():<8} {r.id:<24} value={serialize.fmt(r.value)} tol={serialize.fmt(r.tol)}"
              f"{'  ' + r.detail if r.detail else ''}", file=out)
    failed = [r.id for r in results if r.status == "fail"]
    skipped = sum(r.status == "skipped" for r in results)
    print(f"checks: {len(results) - len(failed) - skipped} passed, {skipped} skipped, {len(failed)} failed"
          f"{'; failed: ' + ', '.join(failed) if failed else ''}", file=out)
    return EXIT_INVARIANT if failed else EXIT_OK


COMMANDS = {
    "list-spaces": cmd_list_spaces,
    "curve": cmd_curve,
    "surface": cmd_surface,
    "classify": cmd_classify,
    "verify-theorem": cmd_verify_theorem,
    "checks": cmd_checks,
}


def main(argv=None, out=None):
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](cfg, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DomainError, MetricError) as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (InvariantError, DegenerateSurfaceError) as exc:
        print(f"invariant failure: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


def main_entry():
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
