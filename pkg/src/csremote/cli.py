"""Command-line entry point: ``csremote <subcommand> --config FILE [options]``.

Every subcommand reads the same configuration schema (optionally one named
section of it) and writes plain CSV/JSON files into ``--out``.  Failures
print a single JSON object on stderr and exit nonzero.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import experiment as ex
from .exceptions import EnumerationGuardError
from .lti import output_operator
from .rip import evaluate_bounds, rip_constant_exact, rip_constant_monte_carlo, synthetic_instance
from .sensing import assemble, draw_plan
from .signals import ReferenceSpec, cardinality, reference_to_coefs
from .solvers import solve_ideal, solve_l1l2_fista, solve_l2


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(message)


def _write_json(path: Path, doc) -> None:
    ex._write_atomic(path, json.dumps(doc, indent=2, sort_keys=True,
                                      default=ex._json_default) + "\n")


def _write_csv(path: Path, header, rows) -> None:
    lines = [",".join(header)]
    lines += [",".join(v if isinstance(v, str) else ex.format_number(v) for v in row)
              for row in rows]
    ex._write_atomic(path, "\n".join(lines) + "\n")


def _coef_rows(space, theta):
    return [(str(int(m)), v.real, v.imag, abs(v)) for m, v in zip(space.ms, theta)]


def _prepare_out(out) -> Path:
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _load(args) -> ex.ExperimentConfig:
    cfg = ex.load_config(args.config, args.section)
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.trials is not None:
        changes["trials"] = args.trials
    return cfg.replace(**changes) if changes else cfg


def cmd_simulate(cfg, out):
    """Output under the control given by the ``control`` terms (default: none)."""
    space = cfg.space()
    plant = cfg.plant(None if not cfg.random_x0 else
                      np.random.default_rng([cfg.seed, 1]).standard_normal(len(cfg.b)))
    control = ReferenceSpec.from_terms(cfg.extra.get("control", ()))
    theta = reference_to_coefs(control, space).values
    t = np.linspace(0.0, space.T, cfg.output_points)
    y = output_operator(plant, space, t).apply(theta, plant.x0)
    r = cfg.reference_spec()(t, space)
    _write_csv(out / "simulate.csv", ("t", "u", "y", "r"), zip(t, control(t, space), y, r))
    return {"points": int(t.size), "max_abs_y": float(np.max(np.abs(y)))}


def _full_system(cfg, seed):
    ctx = ex.ExperimentContext(cfg)
    x0 = ctx.x0_for(seed)
    plan = draw_plan(ctx.space, cfg.sample_count, seed)
    system = assemble(ctx.plant.with_x0(x0), ctx.space, ctx.reference, plan,
                      gram=(ctx.G, ctx.H))
    return ctx, system, x0


def cmd_solve_l2(cfg, out):
    ctx, system, _ = _full_system(cfg, cfg.seed)
    mu2 = cfg.effective_weights()[1]
    theta = solve_l2(system.G, system.beta, mu2)
    _write_csv(out / "theta_l2.csv", ("m", "re", "im", "abs"), _coef_rows(ctx.space, theta))
    return {"mu2": mu2, "card": cardinality(theta, ex.CARD_TOL),
            "residual": float(np.linalg.norm(system.G @ theta - system.beta))}


def cmd_solve_l1l2(cfg, out):
    ctx, system, x0 = _full_system(cfg, cfg.seed)
    res = solve_l1l2_fista(system.Phi, system.alpha, ctx.solver)
    _write_csv(out / "theta_l1l2.csv", ("m", "re", "im", "abs"), _coef_rows(ctx.space, res.theta))
    return {"mu1": ctx.solver.mu1, "card": cardinality(res.theta, ex.CARD_TOL),
            "residual": res.residual, "iterations": res.iterations,
            "converged": res.converged, "lipschitz": res.lipschitz,
            "plan_indices": system.plan.indices, "x0": x0}


def cmd_experiment(cfg, out):
    summary = ex.run_monte_carlo(cfg)
    ex.emit_outputs(summary, out)
    return summary.stats


def cmd_rip(cfg, out):
    _, system, _ = _full_system(cfg, cfg.seed)
    l = int(cfg.extra.get("l", 2))
    try:
        report = rip_constant_exact(system.Phi, l)
    except EnumerationGuardError:
        report = rip_constant_monte_carlo(system.Phi, l, int(cfg.extra.get("rip_trials", 20000)),
                                          cfg.seed)
    doc = {"l": report.l, "delta_l": report.delta_l, "method": report.method,
           "supports_checked": report.supports_checked}
    _write_json(out / "rip.json", doc)
    return doc


def cmd_bounds(cfg, out):
    """Bound report per S; ``"instance": "synthetic"`` selects a certified toy problem."""
    S_values = cfg.extra.get("S", [1])
    S_values = [S_values] if isinstance(S_values, int) else list(S_values)
    if cfg.extra.get("instance") == "synthetic":
        inst = synthetic_instance(cfg.seed, M=cfg.M, K=cfg.K)
        system, theta_star = inst.system, inst.theta_star
        plant, space, reference = inst.plant, inst.space, inst.reference
        solver = cfg.solver_config()
    else:
        ctx, system, x0 = _full_system(cfg, cfg.seed)
        theta_star = solve_ideal(system.G, system.beta)
        plant, space, reference = ctx.plant.with_x0(x0), ctx.space, ctx.reference
        solver = ctx.solver
    theta_1 = solve_l1l2_fista(system.Phi, system.alpha, solver)
    reports = []
    for S in S_values:
        rep = evaluate_bounds(system, theta_star, theta_1, int(S), plant, space, reference,
                              rip_seed=cfg.seed)
        doc = dict(vars(rep))
        doc.update(coef_bound_holds=rep.coef_bound_holds,
                   tracking_bound_holds=rep.tracking_bound_holds)
        reports.append(doc)
    _write_json(out / "bounds.json", {"mu1": solver.mu1, "seed": cfg.seed, "reports": reports})
    return {"reports": len(reports),
            "applicable": [r["applicable"] for r in reports]}


COMMANDS = {
    "simulate": cmd_simulate,
    "solve-l2": cmd_solve_l2,
    "solve-l1l2": cmd_solve_l1l2,
    "experiment": cmd_experiment,
    "rip": cmd_rip,
    "bounds": cmd_bounds,
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="csremote", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, fn in COMMANDS.items():
        p = sub.add_parser(name, help=(fn.__doc__ or name).splitlines()[0])
        p.add_argument("--config", required=True, help="JSON configuration file")
        p.add_argument("--section", help="named section of the configuration")
        p.add_argument("--seed", type=int, help="base seed (overrides the file)")
        p.add_argument("--trials", type=int, help="number of trials (overrides the file)")
        p.add_argument("--out", default=".", help="output directory")
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.seed is not None and not 0 <= args.seed < 2 ** 64:
            raise CliError("--seed must be an unsigned 64-bit integer")
        cfg = _load(args)
        out = _prepare_out(args.out)
        result = COMMANDS[args.command](cfg, out)
    except Exception as exc:  # every failure becomes one machine-readable line
        print(json.dumps({"status": "error", "error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 1
    print(json.dumps({"status": "ok", "command": args.command, "result": result},
                     sort_keys=True, default=ex._json_default))
    return 0


if __name__ == "__main__":
    sys.exit(main())
