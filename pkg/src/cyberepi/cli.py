"""Command-line entry point.

Subcommands: ``graph`` (generate and dump a contact network), ``run``
(one realization), ``cycle`` (ensemble-mean compartment series),
``sweep-d`` (total damage vs constant base damage), ``sweep-eps``
(total damage vs growth rate for time-varying/mutating viruses).

Every reproducible subcommand requires an explicit ``--seed``; there is
no silent wall-clock seeding.  For the experiment subcommands a TOML
config may supply any value, and explicit flags override the config.
Errors are reported as a single ``error: ...`` line with a nonzero exit
status.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .damage import Constant, DamageModel, LogisticClock, MutatingStrain, describe
from .engine import DEFAULT_MAX_STEPS, run
from .errors import CyberEpiError, ParameterError
from .experiments import (
    config_from_mapping,
    load_mapping,
    run_cycle_experiment,
    run_damage_sweep,
    run_epsilon_sweep,
)
from .graph import GraphFamily, GraphSpec, generate, save_edge_list
from .params import ModelParams

_DAMAGE_FORMATS = "constant:<d> | logistic:<d0>:<eps> | mutating:<d0>:<eps>"

_FAMILY_ALIASES = {
    "er": "er",
    "erdos-renyi": "er",
    "ba": "ba",
    "barabasi-albert": "ba",
}


class _Parser(argparse.ArgumentParser):
    """Argument parser that fails with one machine-parsable line."""

    def error(self, message):
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(2)


def parse_damage(text: str) -> DamageModel:
    parts = text.split(":")
    try:
        if parts[0] == "constant" and len(parts) == 2:
            return Constant(d=float(parts[1]))
        if parts[0] == "logistic" and len(parts) == 3:
            return LogisticClock(d0=float(parts[1]), epsilon=float(parts[2]))
        if parts[0] == "mutating" and len(parts) == 3:
            return MutatingStrain(d0=float(parts[1]), epsilon=float(parts[2]))
    except ParameterError:
        raise
    except ValueError as e:
        raise ParameterError("damage", text, _DAMAGE_FORMATS) from e
    raise ParameterError("damage", text, _DAMAGE_FORMATS)


def parse_family(text: str) -> str:
    name = _FAMILY_ALIASES.get(text.lower())
    if name is None:
        raise ParameterError("graph", text, "{er, ba}")
    return name


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip() != ""]
    except ValueError as e:
        raise ParameterError("list", text, "comma-separated numbers") from e


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tau", type=float, default=None,
                   help="infection rate per infected neighbor, [0,1] (default 0.0055)")
    p.add_argument("--nu", type=float, default=None,
                   help="contact awareness rate per aware neighbor, [0,1] (default 0.011)")
    p.add_argument("--mu0", type=float, default=None,
                   help="spontaneous-awareness base rate, [0,1] (default 0.011)")
    p.add_argument("--gamma", type=float, default=None,
                   help="recovery rate per step, [0,1] (default 0.03)")
    p.add_argument("--rho0", type=float, default=None,
                   help="initially infected fraction, (0,1] (default 0.01)")
    p.add_argument("--aware-factor", type=float, default=None, dest="aware_factor",
                   help="aware infection multiplier tau'=factor*tau, (default 0.1)")


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, required=True,
                   help="64-bit base seed (required; no wall-clock seeding)")
    p.add_argument("--quiet", action="store_true", help="suppress stderr reporting")
    p.add_argument("--progress", action="store_true",
                   help="report per-point progress on stderr")


def _add_experiment_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=str, default=None,
                   help="TOML experiment config; explicit flags override it")
    p.add_argument("--n", type=int, default=None,
                   help="node count, >=2 (default 500; 1000 with --paper-scale)")
    p.add_argument("--realizations", "-R", type=int, default=None,
                   help="ensemble size, >=1 (default 200; 1000 with --paper-scale)")
    p.add_argument("--workers", type=int, default=None,
                   help="worker threads, >=1 (default: CYBEREPI_WORKERS or all cores)")
    p.add_argument("--max-steps", type=int, default=None, dest="max_steps",
                   help=f"step cap per realization (default {DEFAULT_MAX_STEPS})")
    p.add_argument("--fixed-graph", action="store_true", dest="fixed_graph",
                   help="reuse one graph for all realizations (default: fresh graph each)")
    p.add_argument("--paper-scale", action="store_true", dest="paper_scale",
                   help="full-size defaults: n=1000, realizations=1000")
    p.add_argument("--out", type=str, default=None, help="output CSV path")
    _add_model_flags(p)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cyberepi",
                     description="Cyber-epidemic (malware plus awareness) simulator")
    parser.add_argument("--version", action="version",
                        version=f"cyberepi {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("graph", parents=[], help="generate a contact network",
                       description="Generate a graph and write it as an edge list.")
    g.add_argument("--graph", type=str, default="er",
                   help="family: er or ba (default er)")
    g.add_argument("--n", type=int, default=500, help="node count, >=2 (default 500)")
    g.add_argument("--mean-degree", type=float, default=10.0, dest="mean_degree",
                   help="target mean degree (even integer for ba; default 10)")
    g.add_argument("--out", type=str, default="graph.txt",
                   help="edge-list output path (default graph.txt)")
    _add_common_flags(g)

    r = sub.add_parser("run", help="run one realization",
                       description="Run a single realization and write its series.")
    r.add_argument("--graph", type=str, default="er",
                   help="family: er or ba (default er)")
    r.add_argument("--n", type=int, default=500, help="node count, >=2 (default 500)")
    r.add_argument("--mean-degree", type=float, default=10.0, dest="mean_degree",
                   help="target mean degree (even integer for ba; default 10)")
    r.add_argument("--theta", type=float, default=0.2,
                   help="damage threshold, [0,1] (default 0.2)")
    r.add_argument("--damage", type=str, default="constant:0.3",
                   help=f"damage law: {_DAMAGE_FORMATS} (default constant:0.3)")
    r.add_argument("--max-steps", type=int, default=DEFAULT_MAX_STEPS,
                   dest="max_steps",
                   help=f"step cap (default {DEFAULT_MAX_STEPS})")
    r.add_argument("--out", type=str, default="run.csv",
                   help="series output path (default run.csv)")
    r.add_argument("--dump-graph", type=str, default=None, dest="dump_graph",
                   help="also write the generated graph as an edge list")
    _add_model_flags(r)
    _add_common_flags(r)

    c = sub.add_parser("cycle", help="ensemble-mean epidemic cycle",
                       description="Ensemble-average compartment counts per step "
                                   "at one parameter point.")
    c.add_argument("--graph", type=str, default=None,
                   help="family: er or ba (default er)")
    c.add_argument("--mean-degree", type=float, default=None, dest="mean_degree",
                   help="target mean degree (default 10)")
    c.add_argument("--theta", type=float, default=None,
                   help="damage threshold, [0,1] (default 0.2)")
    c.add_argument("--damage", type=str, default=None,
                   help=f"damage law: {_DAMAGE_FORMATS} (default constant:0.3)")
    _add_experiment_flags(c)
    _add_common_flags(c)

    sd = sub.add_parser("sweep-d", help="total damage vs constant base damage",
                        description="D/N statistics over a (family, mean degree, "
                                    "theta, d) grid with matched seeds.")
    sd.add_argument("--families", type=str, default=None,
                    help="comma list of er,ba (default er)")
    sd.add_argument("--mean-degrees", type=str, default=None, dest="mean_degrees",
                    help="comma list of mean degrees (default 10)")
    sd.add_argument("--thetas", type=str, default=None,
                    help="comma list of thresholds in [0,1] (default 0.2)")
    sd.add_argument("--d", type=str, default=None,
                    help="comma list of base damages in [0,1] "
                         "(default: 41 points over [0,1])")
    _add_experiment_flags(sd)
    _add_common_flags(sd)

    se = sub.add_parser("sweep-eps", help="total damage vs damage growth rate",
                        description="D/N vs growth rate for logistic-clock and/or "
                                    "mutating viruses, with the constant-damage "
                                    "reference maximum per group.")
    se.add_argument("--families", type=str, default=None,
                    help="comma list of er,ba (default er)")
    se.add_argument("--mean-degrees", type=str, default=None, dest="mean_degrees",
                    help="comma list of mean degrees (default 10)")
    se.add_argument("--thetas", type=str, default=None,
                    help="comma list of thresholds in [0,1] (default 0.2)")
    se.add_argument("--kind", type=str, default=None,
                    choices=["logistic", "mutating", "both"],
                    help="damage law(s) to sweep (default logistic)")
    se.add_argument("--d0", type=float, default=None,
                    help="initial damage, [0,1] (default 0.1)")
    se.add_argument("--eps", type=str, default=None,
                    help="comma list of growth rates > 0 "
                         "(default: 40 log-spaced points in (0.001, 1])")
    se.add_argument("--ref-d", type=str, default=None, dest="ref_d",
                    help="comma list of base damages for the constant reference "
                         "maximum (default: 41 points over [0,1])")
    se.add_argument("--no-const-ref", action="store_true", dest="no_const_ref",
                    help="skip the constant-damage reference computation")
    _add_experiment_flags(se)
    _add_common_flags(se)
    return parser


def _set(doc: dict, section: str, key: str, value) -> None:
    if value is not None:
        doc.setdefault(section, {})[key] = value


def _experiment_config(args, kind: str):
    doc = load_mapping(args.config) if args.config else {}
    if args.paper_scale:
        doc.setdefault("graph", {}).setdefault("n", 1000)
        doc.setdefault("run", {}).setdefault("realizations", 1000)
    _set(doc, "graph", "n", args.n)
    _set(doc, "run", "realizations", args.realizations)
    _set(doc, "run", "workers", args.workers)
    _set(doc, "run", "max_steps", args.max_steps)
    if args.fixed_graph:
        doc.setdefault("run", {})["fixed_graph"] = True
    doc.setdefault("run", {})["base_seed"] = args.seed
    _set(doc, "params", "tau", args.tau)
    _set(doc, "params", "nu", args.nu)
    _set(doc, "params", "mu0", args.mu0)
    _set(doc, "params", "gamma", args.gamma)
    _set(doc, "params", "rho0", args.rho0)
    _set(doc, "params", "aware_infection_factor", args.aware_factor)
    _set(doc, "output", "path", args.out)

    if kind == "cycle":
        _set(doc, "graph", "families", [parse_family(args.graph)] if args.graph else None)
        _set(doc, "graph", "mean_degrees", [args.mean_degree] if args.mean_degree is not None else None)
        _set(doc, "params", "thetas", [args.theta] if args.theta is not None else None)
        if args.damage is not None:
            model = parse_damage(args.damage)
            dam = describe(model)
            if dam["kind"] == "constant":
                doc["damage"] = {"kind": "constant", "d": [dam["d"]]}
            else:
                doc["damage"] = {"kind": dam["kind"], "d0": dam["d0"],
                                 "epsilon": [dam["epsilon"]]}
        doc.setdefault("damage", {}).setdefault("kind", "constant")
        doc["damage"].setdefault("d", [0.3])
        doc.setdefault("output", {}).setdefault("path", "cycle.csv")
    else:
        fams = [parse_family(f) for f in args.families.split(",")] if args.families else None
        _set(doc, "graph", "families", fams)
        _set(doc, "graph", "mean_degrees",
             _float_list(args.mean_degrees) if args.mean_degrees else None)
        _set(doc, "params", "thetas", _float_list(args.thetas) if args.thetas else None)
        if kind == "sweep-d":
            doc.setdefault("damage", {})["kind"] = "constant"
            _set(doc, "damage", "d", _float_list(args.d) if args.d else None)
            doc.setdefault("output", {}).setdefault("path", "sweep_d.csv")
        else:
            _set(doc, "damage", "kind", args.kind)
            doc.setdefault("damage", {}).setdefault("kind", "logistic")
            _set(doc, "damage", "d0", args.d0)
            _set(doc, "damage", "epsilon", _float_list(args.eps) if args.eps else None)
            _set(doc, "damage", "reference_d",
                 _float_list(args.ref_d) if args.ref_d else None)
            if args.no_const_ref:
                doc["damage"]["include_reference"] = False
            doc.setdefault("output", {}).setdefault("path", "sweep_eps.csv")
    return config_from_mapping(doc)


def _params_from_flags(args) -> ModelParams:
    defaults = ModelParams()
    return ModelParams(
        tau=args.tau if args.tau is not None else defaults.tau,
        nu=args.nu if args.nu is not None else defaults.nu,
        mu0=args.mu0 if args.mu0 is not None else defaults.mu0,
        gamma=args.gamma if args.gamma is not None else defaults.gamma,
        rho0=args.rho0 if args.rho0 is not None else defaults.rho0,
        theta=args.theta,
        aware_infection_factor=(args.aware_factor if args.aware_factor is not None
                                else defaults.aware_infection_factor),
    )


def _cmd_graph(args) -> int:
    spec = GraphSpec(
        family=GraphFamily(parse_family(args.graph)),
        n=args.n,
        mean_degree=args.mean_degree,
        seed=args.seed,
    )
    g = generate(spec)
    save_edge_list(g, args.out)
    if not args.quiet:
        print(f"wrote {args.out}: n={g.n} edges={g.edge_count} "
              f"mean_degree={g.mean_degree:.6g}", file=sys.stderr)
    return 0


def _cmd_run(args) -> int:
    spec = GraphSpec(
        family=GraphFamily(parse_family(args.graph)),
        n=args.n,
        mean_degree=args.mean_degree,
        seed=args.seed,
    )
    params = _params_from_flags(args)
    dmg = parse_damage(args.damage)
    g = generate(spec)
    if args.dump_graph:
        save_edge_list(g, args.dump_graph)
    result = run(g, params, dmg, args.seed, max_steps=args.max_steps)
    echo = {
        "graph": {"family": spec.family.value, "n": spec.n,
                  "mean_degree": spec.mean_degree, "seed": spec.seed},
        "params": {"tau": params.tau, "nu": params.nu, "mu0": params.mu0,
                   "gamma": params.gamma, "rho0": params.rho0,
                   "theta": params.theta,
                   "aware_infection_factor": params.aware_infection_factor},
        "damage": describe(dmg),
        "max_steps": args.max_steps,
        "version": __version__,
    }
    onset = result.awareness_onset
    lines = [
        f"# cyberepi {__version__} run",
        "# config: " + json.dumps(echo, sort_keys=True, separators=(",", ":")),
        f"# result: DN={result.total_damage_per_node:.6g} "
        f"ever_infected={result.ever_infected} "
        f"onset={'none' if onset is None else onset} "
        f"absorbed={result.absorbed} steps={result.steps}",
        "t,Su,Sa,Iu,Ia,Ha",
    ]
    lines.extend(
        f"{t},{row[0]},{row[1]},{row[2]},{row[3]},{row[4]}"
        for t, row in enumerate(result.series)
    )
    Path(args.out).write_text("\n".join(lines) + "\n", encoding="ascii",
                              newline="\n")
    if not args.quiet:
        print(f"wrote {args.out}: DN={result.total_damage_per_node:.6g} "
              f"steps={result.steps} absorbed={result.absorbed}", file=sys.stderr)
    return 0


def _progress_printer(args):
    if args.progress and not args.quiet:
        return lambda msg: print(msg, file=sys.stderr)
    return None


def _cmd_experiment(args, kind: str) -> int:
    cfg = _experiment_config(args, kind)
    op = {
        "cycle": run_cycle_experiment,
        "sweep-d": run_damage_sweep,
        "sweep-eps": run_epsilon_sweep,
    }[kind]
    path = op(cfg, progress=_progress_printer(args))
    if not args.quiet:
        print(f"wrote {path}", file=sys.stderr)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "graph":
            return _cmd_graph(args)
        if args.command == "run":
            return _cmd_run(args)
        return _cmd_experiment(args, args.command)
    except SystemExit as e:
        return 0 if e.code is None else int(e.code)
    except ParameterError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except CyberEpiError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
